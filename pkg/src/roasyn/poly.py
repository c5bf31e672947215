"""Sparse multivariate polynomial arithmetic.

Polynomials are stored as a mapping from exponent tuples to real
coefficients.  All routines treat the coefficient dict as immutable;
operations return new objects.  Monomial orderings are graded
lexicographic (total degree first, then lexicographic with earlier
variables weighted higher), which fixes a deterministic layout for
monomial bases, Gram matrices and serialised certificates.

The Gram (square matrix) representation writes an even-degree
polynomial p as z(x)^T Q z(x) for a monomial basis z.  Because the map
Q -> z^T Q z is many-to-one, this module defines a *canonical* Gram
matrix: each coefficient is spread evenly over every (i, j) basis pair
producing its monomial.  The canonical matrix is linear in the
coefficients of p, so functionals such as trace(Q) are well defined
linear functions of p itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

# Coefficients with magnitude below DROP_TOL (relative to the largest
# coefficient) are discarded when pruning; equality of polynomials is
# decided coefficient-wise at EQ_TOL.
DROP_TOL = 1e-12
EQ_TOL = 1e-9


@dataclass(frozen=True)
class Monomial:
    """A power product x_0^e_0 * ... * x_{n-1}^e_{n-1}."""

    exponents: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"negative exponent in monomial {self.exponents}")

    @property
    def nvars(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if len(self.exponents) != len(other.exponents):
            raise ValueError("monomial dimension mismatch")
        return Monomial(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def evaluate(self, x: Sequence[float]) -> float:
        v = 1.0
        for xi, e in zip(x, self.exponents):
            if e:
                v *= xi ** e
        return v

    def __repr__(self) -> str:
        return f"Monomial{self.exponents}"


def grlex_key(m: Monomial) -> tuple:
    """Sort key for graded lexicographic order (1 < x_n < ... < x_1 ...)."""
    return (m.degree, tuple(-e for e in m.exponents))


def monomial_basis(nvars: int, max_degree: int, min_degree: int = 0) -> list[Monomial]:
    """All monomials in ``nvars`` variables with degree in [min_degree, max_degree].

    Returned in graded lexicographic order.  The count for min_degree=0 is
    C(nvars + max_degree, max_degree).
    """
    if nvars < 0 or max_degree < 0:
        raise ValueError("nvars and max_degree must be nonnegative")
    out: list[Monomial] = []

    def rec(prefix: list[int], remaining: int, budget: int) -> None:
        if remaining == 0:
            m = Monomial(tuple(prefix))
            if m.degree >= min_degree:
                out.append(m)
            return
        for e in range(budget, -1, -1):
            rec(prefix + [e], remaining - 1, budget - e)

    rec([], nvars, max_degree)
    out.sort(key=grlex_key)
    return out


class Polynomial:
    """A sparse real polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Monomial, float] | None = None):
        self.nvars = int(nvars)
        clean: dict[Monomial, float] = {}
        if terms:
            for m, c in terms.items():
                if m.nvars != self.nvars:
                    raise ValueError(
                        f"monomial in {m.nvars} variables added to polynomial in {self.nvars}"
                    )
                c = float(c)
                if c != 0.0:
                    clean[m] = clean.get(m, 0.0) + c
        self.terms = {m: c for m, c in clean.items() if c != 0.0}

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars, {})

    @staticmethod
    def constant(nvars: int, value: float) -> "Polynomial":
        return Polynomial(nvars, {Monomial((0,) * nvars): float(value)})

    @staticmethod
    def variable(nvars: int, index: int) -> "Polynomial":
        """The polynomial x_index (0-based)."""
        if not 0 <= index < nvars:
            raise ValueError(f"variable index {index} out of range for {nvars} variables")
        e = [0] * nvars
        e[index] = 1
        return Polynomial(nvars, {Monomial(tuple(e)): 1.0})

    @staticmethod
    def from_exponent_dict(nvars: int, d: Mapping[tuple[int, ...], float]) -> "Polynomial":
        return Polynomial(nvars, {Monomial(tuple(k)): v for k, v in d.items()})

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention."""
        return max((m.degree for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, m: Monomial) -> float:
        return self.terms.get(m, 0.0)

    def constant_term(self) -> float:
        return self.terms.get(Monomial((0,) * self.nvars), 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def support(self) -> list[Monomial]:
        return sorted(self.terms, key=grlex_key)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def evaluate(self, x: Sequence[float]) -> float:
        if len(x) != self.nvars:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.nvars}")
        return sum(c * m.evaluate(x) for m, c in self.terms.items())

    def evaluate_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``X`` (shape (N, nvars)); returns shape (N,)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.nvars:
            raise ValueError(f"expected array of shape (N, {self.nvars}), got {X.shape}")
        if not self.terms:
            return np.zeros(X.shape[0])
        monos = self.support()
        E = np.array([m.exponents for m in monos], dtype=float)  # (T, nvars)
        c = np.array([self.terms[m] for m in monos])
        # (N, T) matrix of monomial values; 0**0 == 1 under np.power
        vals = np.prod(X[:, None, :] ** E[None, :, :], axis=2)
        return vals @ c

    # ------------------------------------------------------------------
    # arithmetic
    # ------------------------------------------------------------------
    def _check_same_space(self, other: "Polynomial") -> None:
        if self.nvars != other.nvars:
            raise ValueError(
                f"polynomials in {self.nvars} and {other.nvars} variables are incompatible"
            )

    def __add__(self, other: "Polynomial | float | int") -> "Polynomial":
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, other)
        self._check_same_space(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0.0) + c
        return Polynomial(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial | float | int") -> "Polynomial":
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, other)
        return self + (-other)

    def __rsub__(self, other: float | int) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: "Polynomial | float | int") -> "Polynomial":
        if isinstance(other, (int, float)):
            return Polynomial(self.nvars, {m: c * other for m, c in self.terms.items()})
        self._check_same_space(other)
        terms: dict[Monomial, float] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = ma * mb
                terms[m] = terms.get(m, 0.0) + ca * cb
        return Polynomial(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"polynomial power must be a nonnegative integer, got {k!r}")
        result = Polynomial.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def differentiate(self, index: int) -> "Polynomial":
        """Partial derivative with respect to variable ``index`` (0-based)."""
        if not 0 <= index < self.nvars:
            raise ValueError(f"variable index {index} out of range for {self.nvars} variables")
        terms: dict[Monomial, float] = {}
        for m, c in self.terms.items():
            e = m.exponents[index]
            if e == 0:
                continue
            new = list(m.exponents)
            new[index] = e - 1
            mm = Monomial(tuple(new))
            terms[mm] = terms.get(mm, 0.0) + c * e
        return Polynomial(self.nvars, terms)

    def gradient(self) -> list["Polynomial"]:
        return [self.differentiate(i) for i in range(self.nvars)]

    def prune(self, rel_tol: float = EQ_TOL) -> "Polynomial":
        """Drop coefficients smaller than ``rel_tol`` times the largest one."""
        big = self.max_abs_coeff()
        if big == 0.0:
            return self
        cut = rel_tol * big
        return Polynomial(self.nvars, {m: c for m, c in self.terms.items() if abs(c) > cut})

    # ------------------------------------------------------------------
    # comparison / display
    # ------------------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial({self.to_string()})"

    def to_string(self, var_names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        if var_names is None:
            var_names = [f"x{i + 1}" for i in range(self.nvars)]
        parts = []
        for m in self.support():
            c = self.terms[m]
            factors = [
                f"{var_names[i]}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(m.exponents)
                if e > 0
            ]
            body = "*".join(factors)
            if body:
                coeff = "" if c == 1.0 else ("-" if c == -1.0 else f"{c:.12g}*")
                parts.append(f"{coeff}{body}")
            else:
                parts.append(f"{c:.12g}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")


def polynomials_close(a: Polynomial, b: Polynomial, tol: float = EQ_TOL) -> bool:
    """Coefficient-wise closeness, absolute tolerance on each coefficient."""
    if a.nvars != b.nvars:
        return False
    monos = set(a.terms) | set(b.terms)
    return all(abs(a.coefficient(m) - b.coefficient(m)) <= tol for m in monos)


def lie_derivative(V: Polynomial, field: Sequence[Polynomial]) -> Polynomial:
    """Derivative of V along the vector field: sum_i dV/dx_i * field_i."""
    if len(field) != V.nvars:
        raise ValueError(f"field has {len(field)} components, expected {V.nvars}")
    out = Polynomial.zero(V.nvars)
    for i, f_i in enumerate(field):
        out = out + V.differentiate(i) * f_i
    return out


def embed_univariate(p: Polynomial, nvars: int, index: int) -> Polynomial:
    """Lift a univariate polynomial to ``nvars`` variables acting on x_index."""
    if p.nvars != 1:
        raise ValueError("embed_univariate expects a univariate polynomial")
    if not 0 <= index < nvars:
        raise ValueError(f"variable index {index} out of range for {nvars} variables")
    terms: dict[Monomial, float] = {}
    for m, c in p.terms.items():
        e = [0] * nvars
        e[index] = m.exponents[0]
        terms[Monomial(tuple(e))] = c
    return Polynomial(nvars, terms)


# ----------------------------------------------------------------------
# Gram (square matrix) representation
# ----------------------------------------------------------------------
@dataclass
class GramRepresentation:
    """p(x) = z(x)^T Q z(x) for basis z and symmetric Q."""

    basis: tuple[Monomial, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        d = len(self.basis)
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape != (d, d):
            raise ValueError(f"Gram matrix shape {self.matrix.shape} != basis size {d}")
        if not np.allclose(self.matrix, self.matrix.T, atol=1e-12):
            raise ValueError("Gram matrix must be symmetric")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def expand(self) -> Polynomial:
        return gram_expand(self.basis, self.matrix)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def gram_expand(basis: Sequence[Monomial], Q: np.ndarray) -> Polynomial:
    """Expand z^T Q z into a polynomial (Q need not be PSD)."""
    basis = list(basis)
    if not basis:
        raise ValueError("empty Gram basis")
    nvars = basis[0].nvars
    Q = np.asarray(Q, dtype=float)
    terms: dict[Monomial, float] = {}
    for i, zi in enumerate(basis):
        for j, zj in enumerate(basis):
            if Q[i, j] == 0.0:
                continue
            m = zi * zj
            terms[m] = terms.get(m, 0.0) + Q[i, j]
    return Polynomial(nvars, terms)


def product_pairs(basis: Sequence[Monomial]) -> dict[Monomial, list[tuple[int, int]]]:
    """Map each product monomial z_i*z_j (i <= j) to its list of index pairs."""
    pairs: dict[Monomial, list[tuple[int, int]]] = {}
    for i, zi in enumerate(basis):
        for j in range(i, len(basis)):
            m = zi * basis[j]
            pairs.setdefault(m, []).append((i, j))
    return {m: pairs[m] for m in sorted(pairs, key=grlex_key)}


def gram_of(p: Polynomial, basis: Sequence[Monomial]) -> GramRepresentation:
    """Canonical Gram matrix of ``p`` over ``basis``.

    Each coefficient of p is spread evenly over all (i, j) pairs with
    z_i*z_j equal to its monomial (off-diagonal pairs count twice, once
    per symmetric slot).  Fails if p has a monomial not expressible as a
    product of two basis elements.
    """
    basis = tuple(basis)
    pairs = product_pairs(basis)
    d = len(basis)
    Q = np.zeros((d, d))
    for m, c in p.terms.items():
        if m not in pairs:
            raise ValueError(
                f"monomial {m.exponents} of the polynomial is not a product of two basis monomials"
            )
        slots = pairs[m]
        # each unordered pair (i, j), i != j, occupies two symmetric slots
        weight = sum(2.0 if i != j else 1.0 for i, j in slots)
        for i, j in slots:
            Q[i, j] += c / weight
            Q[j, i] = Q[i, j]
    return GramRepresentation(basis=basis, matrix=Q)


def canonical_trace_weights(basis: Sequence[Monomial]) -> dict[Monomial, float]:
    """Weights w such that trace(canonical Gram of p) = sum_m w[m] * coeff_p[m].

    Only squared basis monomials z_i^2 get a nonzero weight: the share of
    the even spread that lands on the diagonal.
    """
    basis = tuple(basis)
    pairs = product_pairs(basis)
    weights: dict[Monomial, float] = {}
    for m, slots in pairs.items():
        diag = sum(1.0 for i, j in slots if i == j)
        if diag == 0.0:
            continue
        total = sum(2.0 if i != j else 1.0 for i, j in slots)
        weights[m] = diag / total
    return weights


def sos_basis_for(p_degree: int, nvars: int) -> list[Monomial]:
    """Full monomial basis for a Gram representation of degree-``p_degree`` SOS."""
    return monomial_basis(nvars, (p_degree + 1) // 2)


def quadratic_form(P: np.ndarray) -> Polynomial:
    """x^T P x as a polynomial (P symmetric, n x n)."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("quadratic_form expects a square matrix")
    basis = [Polynomial.variable(n, i) for i in range(n)]
    out = Polynomial.zero(n)
    for i in range(n):
        for j in range(n):
            if P[i, j] != 0.0:
                out = out + basis[i] * basis[j] * P[i, j]
    return out


# ----------------------------------------------------------------------
# serialisation
# ----------------------------------------------------------------------
def to_records(p: Polynomial) -> list[dict]:
    """JSON-friendly list of {"exponents": [...], "coeff": c} records."""
    return [
        {"exponents": list(m.exponents), "coeff": p.terms[m]}
        for m in p.support()
    ]


def from_records(nvars: int, records: Iterable[Mapping]) -> Polynomial:
    terms = {
        Monomial(tuple(int(e) for e in r["exponents"])): float(r["coeff"])
        for r in records
    }
    return Polynomial(nvars, terms)
