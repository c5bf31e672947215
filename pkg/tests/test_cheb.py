"""Tests for Chebyshev interpolation and remainder bounds.

Oracles: hand-evaluated trigonometry for nodes, hand expansion of the
T_i recurrence, and brute-force sup-error scans compared against the
analytic-remainder formula with hand-chosen (c_m, rho) that bound the
target on the Bernstein ellipse.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roasyn.cheb import (
    ChebyshevInterpolant,
    RemainderBound,
    chebyshev_nodes,
    fit_interpolant,
    remainder_bound,
    sup_error,
    to_polynomial,
)
from roasyn.poly import Polynomial, polynomials_close


class TestNodes:
    def test_degree_two(self):
        np.testing.assert_allclose(chebyshev_nodes(2), [1.0, 0.0, -1.0], atol=1e-15)

    def test_degree_four(self):
        r = math.sqrt(2) / 2
        np.testing.assert_allclose(chebyshev_nodes(4), [1.0, r, 0.0, -r, -1.0], atol=1e-15)

    def test_degree_one(self):
        np.testing.assert_allclose(chebyshev_nodes(1), [1.0, -1.0], atol=1e-15)

    def test_degenerate_degree_zero(self):
        np.testing.assert_allclose(chebyshev_nodes(0), [1.0])

    def test_symmetry(self):
        for k in (3, 5, 8):
            n = chebyshev_nodes(k)
            np.testing.assert_allclose(n, -n[::-1], atol=1e-15)


class TestFit:
    def test_cubic_reproduced_exactly(self):
        c = fit_interpolant(lambda x: x ** 3, 3, (-1.0, 1.0))
        p = to_polynomial(c)
        want = Polynomial.from_exponent_dict(1, {(3,): 1.0})
        assert polynomials_close(p, want, tol=1e-10)

    def test_constant_function(self):
        c = fit_interpolant(lambda x: 1.0, 5, (-1.0, 1.0))
        assert c.coeffs[0] == pytest.approx(1.0, abs=1e-12)
        assert max(abs(v) for v in c.coeffs[1:]) <= 1e-12

    def test_exp_error_under_remainder_bound(self):
        c = fit_interpolant(math.exp, 10, (-1.0, 1.0))
        err = sup_error(math.exp, c, 10_000)
        assert err <= remainder_bound(math.e, 2.0, 10)

    def test_exact_at_mapped_nodes(self):
        f = lambda x: math.sin(3 * x) + 0.3 * x
        c = fit_interpolant(f, 9, (0.5, 2.5))
        nodes = 1.5 + chebyshev_nodes(9)
        for x in nodes:
            assert c(float(x)) == pytest.approx(f(float(x)), abs=1e-10)

    def test_nonfinite_node_rejected_with_location(self):
        with pytest.raises(ValueError, match="node"):
            fit_interpolant(lambda x: math.log(1.0 - x), 2, (-1.0, 1.0))  # fails at x = 1
        with pytest.raises(ValueError, match="node"):
            fit_interpolant(lambda x: float("nan"), 3, (-1.0, 1.0))


class TestToPolynomial:
    def test_pure_t2(self):
        c = ChebyshevInterpolant(2, (-1.0, 1.0), (0.0, 0.0, 1.0))
        want = Polynomial.from_exponent_dict(1, {(2,): 2.0, (0,): -1.0})
        assert polynomials_close(to_polynomial(c), want, tol=1e-12)

    def test_pure_t1_shifted_interval(self):
        # on [0, 2] the map is xhat = x - 1, so T_1 -> x - 1
        c = ChebyshevInterpolant(1, (0.0, 2.0), (0.0, 1.0))
        want = Polynomial.from_exponent_dict(1, {(1,): 1.0, (0,): -1.0})
        assert polynomials_close(to_polynomial(c), want, tol=1e-12)

    def test_pure_t0(self):
        c = ChebyshevInterpolant(0, (-1.0, 1.0), (1.0,))
        assert polynomials_close(to_polynomial(c), Polynomial.constant(1, 1.0), tol=1e-12)

    def test_clenshaw_matches_expansion(self):
        c = fit_interpolant(math.cos, 8, (-2.0, 3.0))
        p = to_polynomial(c)
        xs = np.linspace(-2.0, 3.0, 101)
        clenshaw = c(xs)
        expanded = p.evaluate_many(xs.reshape(-1, 1))
        np.testing.assert_allclose(clenshaw, expanded, atol=1e-9)


class TestRemainderBound:
    def test_formula_value(self):
        assert remainder_bound(1.0, 2.0, 4) == pytest.approx(0.25, abs=1e-15)

    def test_zero_function(self):
        assert remainder_bound(0.0, 1.5, 7) == 0.0

    def test_geometric_decay(self):
        assert remainder_bound(1.0, 2.0, 5) == pytest.approx(0.125, abs=1e-15)
        assert remainder_bound(1.0, 2.0, 5) == pytest.approx(
            0.5 * remainder_bound(1.0, 2.0, 4)
        )

    def test_rho_at_most_one_rejected(self):
        with pytest.raises(ValueError):
            remainder_bound(1.0, 1.0, 3)
        with pytest.raises(ValueError):
            remainder_bound(1.0, 0.5, 3)

    def test_strictly_decreasing_in_k(self):
        vals = [RemainderBound(2.0, 1.7, k).value for k in range(8)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestSupError:
    def test_self_comparison(self):
        c = fit_interpolant(math.sin, 7, (-1.0, 1.0))
        p = to_polynomial(c)
        err = sup_error(lambda x: p.evaluate([x]), c, 501)
        assert err <= 1e-9

    def test_square_with_linear_interpolant(self):
        # Degree-1 extrema interpolation of x^2 passes through (-1, 1) and
        # (1, 1), i.e. the constant 1; the residual at 0 is therefore 1.
        c = fit_interpolant(lambda x: x * x, 1, (-1.0, 1.0))
        assert c(0.0) == pytest.approx(1.0, abs=1e-12)
        assert sup_error(lambda x: x * x, c, 2001) == pytest.approx(1.0, abs=1e-9)

    def test_exp_scan_under_bound(self):
        c = fit_interpolant(math.exp, 10, (-1.0, 1.0))
        assert sup_error(math.exp, c, 10_000) <= remainder_bound(math.e, 2.0, 10)


class TestInvariants:
    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=5),
        st.integers(4, 8),
    )
    def test_polynomials_reproduced(self, coeffs, k):
        # random polynomial of degree < k is its own interpolant
        if len(coeffs) - 1 > k:
            coeffs = coeffs[: k + 1]
        f = lambda x: sum(c * x ** i for i, c in enumerate(coeffs))
        ci = fit_interpolant(f, k, (-1.0, 1.0))
        assert sup_error(f, ci, 400) <= 1e-9 * max(1.0, max(abs(c) for c in coeffs))

    def test_monotone_convergence_for_exp(self):
        errs = [
            sup_error(math.exp, fit_interpolant(math.exp, k, (-1.0, 1.0)), 2001)
            for k in range(2, 17)
        ]
        for a, b in zip(errs, errs[1:]):
            assert b <= a + 1e-14

    def test_bound_validity_analytic_family(self):
        # (c_m, rho) chosen by hand to bound each target on the ellipse E_rho:
        #   exp:   |exp(z)| <= e^1.25 on E_2 (real part <= (2 + 1/2)/2)
        #   sin:   |sin(z)| <= cosh(0.75) on E_2 (imag part <= (2 - 1/2)/2)
        #   runge: |1/(1+(z/3)^2)| <= 1/(1 - 1.25^2/9) on E_2 (|z| <= 1.25)
        cases = [
            (math.exp, math.exp(1.25), 2.0),
            (math.sin, math.cosh(0.75), 2.0),
            (lambda x: 1.0 / (1.0 + (x / 3.0) ** 2), 1.0 / (1.0 - 1.25 ** 2 / 9.0), 2.0),
        ]
        for f, c_m, rho in cases:
            for k in (4, 8, 12):
                ci = fit_interpolant(f, k, (-1.0, 1.0))
                assert sup_error(f, ci, 4001) <= remainder_bound(c_m, rho, k)

    def test_domain_map_consistency(self):
        a, b = 0.5, 3.5
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        f = math.exp
        direct = to_polynomial(fit_interpolant(f, 6, (a, b)))
        unit = to_polynomial(fit_interpolant(lambda t: f(mid + half * t), 6, (-1.0, 1.0)))
        # compose the unit-interval fit with t = (x - mid)/half
        x = Polynomial.variable(1, 0)
        t = (x - mid) * (1.0 / half)
        composed = Polynomial.zero(1)
        for m, c in unit.terms.items():
            composed = composed + t ** m.exponents[0] * c
        diff = direct - composed
        assert diff.max_abs_coeff() <= 1e-9 * max(1.0, direct.max_abs_coeff())

    def test_nonanalytic_target_still_fits(self):
        # sqrt|exp(x) cos(x)| loses analyticity where cos vanishes; the fit
        # must still go through and report a finite empirical error.
        f = lambda x: math.sqrt(abs(math.exp(x) * math.cos(x)))
        ci = fit_interpolant(f, 4, (-2.0, 2.0))
        err = sup_error(f, ci, 2001)
        assert np.isfinite(err) and err < 1.0
