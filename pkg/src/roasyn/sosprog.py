"""Declarative sum-of-squares programs compiled to semidefinite programs.

A program owns decision polynomials (free coefficient vectors, or
SOS-kind with their own PSD Gram block), scalar decision variables, SOS
constraints, and linear polynomial equalities.  Constraint expressions
are *affine* combinations of decision objects with fixed-Polynomial
coefficients; any product of two decision objects raises at build time,
naming both factors.  That guard is what forces the alternation
structure of the synthesis loops -- each loop fixes one factor group.

Compilation is the standard SOS-to-SDP reduction: one PSD Gram block per
SOS constraint (full graded-lex basis up to half the expression degree),
one coefficient-matching equality per monomial, and a linear objective.
Each constraint's equalities are normalized by the largest absolute
constant coefficient across the constraint.

Solving is delegated through a narrow conic interface (PSD blocks +
linear equalities + linear objective) backed by cvxpy; building an
interior-point method is not this package's business.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .poly import (
    Monomial,
    Polynomial,
    gram_expand,
    grlex_key,
    monomial_basis,
    product_pairs,
)

PSD_TOL = 1e-7
RESIDUAL_TOL = 1e-6

# variable references:
#   ("coef", pid, Monomial)   coefficient of a free decision polynomial
#   ("gram", pid, i, j)       upper-triangle entry of an SOS decision poly
#   ("scalar", sid)           scalar decision variable
VarRef = tuple


class SOSProgramError(ValueError):
    pass


class BilinearTermError(SOSProgramError):
    """Raised when an expression would multiply two decision objects."""


@dataclass(frozen=True)
class DecisionPoly:
    pid: int
    nvars: int
    degree: int
    kind: str  # "free" | "sos"
    name: str
    basis: tuple[Monomial, ...]  # coefficient monomials (free kind)
    gram_basis: tuple[Monomial, ...]  # power vector (sos kind)

    def as_affine(self) -> "AffinePoly":
        terms: dict[VarRef, Polynomial] = {}
        if self.kind == "free":
            for m in self.basis:
                terms[("coef", self.pid, m)] = Polynomial(self.nvars, {m: 1.0})
        else:
            for i, zi in enumerate(self.gram_basis):
                for j in range(i, len(self.gram_basis)):
                    w = 1.0 if i == j else 2.0
                    terms[("gram", self.pid, i, j)] = Polynomial(
                        self.nvars, {zi * self.gram_basis[j]: w}
                    )
        return AffinePoly(self.nvars, Polynomial.zero(self.nvars), terms, {self.name})

    def __mul__(self, other):
        return self.as_affine() * other

    __rmul__ = __mul__

    def __add__(self, other):
        return self.as_affine() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self.as_affine() - other

    def __rsub__(self, other):
        return (-self.as_affine()) + other

    def __neg__(self):
        return -self.as_affine()


@dataclass(frozen=True)
class ScalarVar:
    sid: int
    name: str
    nonneg: bool

    def times(self, p: Polynomial) -> "AffinePoly":
        return AffinePoly(
            p.nvars, Polynomial.zero(p.nvars), {("scalar", self.sid): p}, {self.name}
        )

    def as_affine(self, nvars: int) -> "AffinePoly":
        return self.times(Polynomial.constant(nvars, 1.0))


class AffinePoly:
    """const + sum_ref coeffpoly_ref * ref, affine in decision variables."""

    __slots__ = ("nvars", "const", "terms", "sources")

    def __init__(
        self,
        nvars: int,
        const: Polynomial,
        terms: Mapping[VarRef, Polynomial] | None = None,
        sources: set[str] | None = None,
    ):
        self.nvars = nvars
        self.const = const
        self.terms: dict[VarRef, Polynomial] = {
            r: p for r, p in (terms or {}).items() if not p.is_zero()
        }
        # names of the decision objects this expression depends on, for
        # bilinearity diagnostics
        self.sources = set(sources or ())

    @staticmethod
    def wrap(value, nvars: int) -> "AffinePoly":
        if isinstance(value, AffinePoly):
            return value
        if isinstance(value, DecisionPoly):
            return value.as_affine()
        if isinstance(value, Polynomial):
            return AffinePoly(value.nvars, value)
        if isinstance(value, (int, float)):
            return AffinePoly(nvars, Polynomial.constant(nvars, float(value)))
        raise TypeError(f"cannot interpret {value!r} as a polynomial expression")

    def is_constant(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        d = self.const.degree()
        for p in self.terms.values():
            d = max(d, p.degree())
        return d

    def scalar_degree_zero(self) -> bool:
        return self.const.degree() == 0 and all(
            p.degree() == 0 for p in self.terms.values()
        )

    def __add__(self, other):
        other = AffinePoly.wrap(other, self.nvars)
        terms = dict(self.terms)
        for r, p in other.terms.items():
            terms[r] = terms[r] + p if r in terms else p
        return AffinePoly(
            self.nvars, self.const + other.const, terms, self.sources | other.sources
        )

    __radd__ = __add__

    def __neg__(self):
        return AffinePoly(
            self.nvars,
            -self.const,
            {r: -p for r, p in self.terms.items()},
            set(self.sources),
        )

    def __sub__(self, other):
        return self + (-AffinePoly.wrap(other, self.nvars))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(self.nvars, float(other))
        if isinstance(other, (DecisionPoly, ScalarVar)):
            other = (
                other.as_affine()
                if isinstance(other, DecisionPoly)
                else other.as_affine(self.nvars)
            )
        if isinstance(other, AffinePoly):
            if self.terms and other.terms:
                raise BilinearTermError(
                    "bilinear term: cannot multiply expressions containing decision "
                    f"variables {sorted(self.sources)} and {sorted(other.sources)}; "
                    "fix one side (alternate) to keep the program affine"
                )
            if not other.terms:
                other = other.const
            else:
                return other * self.const
        if not isinstance(other, Polynomial):
            raise TypeError(f"cannot multiply AffinePoly by {other!r}")
        return AffinePoly(
            self.nvars,
            self.const * other,
            {r: p * other for r, p in self.terms.items()},
            set(self.sources),
        )

    __rmul__ = __mul__

    def differentiate(self, index: int) -> "AffinePoly":
        return AffinePoly(
            self.nvars,
            self.const.differentiate(index),
            {r: p.differentiate(index) for r, p in self.terms.items()},
            set(self.sources),
        )

    def support(self) -> list[Monomial]:
        monos = set(self.const.terms)
        for p in self.terms.values():
            monos.update(p.terms)
        return sorted(monos, key=grlex_key)


def linear_combination(
    nvars: int, weights: Mapping[VarRef, float], const: float = 0.0
) -> AffinePoly:
    """Scalar affine form sum_ref w*ref + const as a degree-0 AffinePoly."""
    return AffinePoly(
        nvars,
        Polynomial.constant(nvars, const),
        {r: Polynomial.constant(nvars, w) for r, w in weights.items() if w != 0.0},
        {"linear"},
    )


@dataclass
class SOSConstraint:
    cid: int
    name: str
    expr: AffinePoly
    gram_basis: tuple[Monomial, ...]


@dataclass
class LinearEquality:
    eid: int
    name: str
    expr: AffinePoly


@dataclass
class Block:
    kind: str  # "poly" | "constraint" | "scalar"
    key: tuple
    size: int
    name: str


@dataclass
class SDPInstance:
    """Conic form: PSD blocks, free variables, equalities, linear objective.

    Equalities read  sum_k W_k vec(S_k) + A_free f = b  with S_k the PSD
    block matrices (column-major vec) and f the free variable vector.
    """

    blocks: list[Block]
    free_refs: list[VarRef]
    W: list[sp.csr_matrix]
    A_free: sp.csr_matrix
    b: np.ndarray
    obj_blocks: list[np.ndarray]
    obj_free: np.ndarray
    obj_const: float
    sense: str  # "max" | "min" | "feasibility"
    row_names: list[str]
    block_entry_refs: dict[VarRef, tuple[int, int, int]]  # ref -> (block idx, i, j)

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]


@dataclass
class SolveResult:
    status: str  # Optimal | Infeasible | Unbounded | Inaccurate | Failed
    objective_value: float | None
    values: dict[VarRef, float]
    gram_matrices: dict[tuple, np.ndarray]
    solver_name: str
    diagnostics: str = ""


@dataclass
class SolverSettings:
    solver: str | None = None  # None = first available of PREFERRED_SOLVERS
    verbose: bool = False
    options: dict = field(default_factory=dict)


PREFERRED_SOLVERS = ("CLARABEL", "CVXOPT", "SCS")


class SOSProgram:
    """Builder for one SOS feasibility/optimization program."""

    def __init__(self) -> None:
        self._polys: list[DecisionPoly] = []
        self._scalars: list[ScalarVar] = []
        self.constraints: list[SOSConstraint] = []
        self.equalities: list[LinearEquality] = []
        self.objective_sense: str = "feasibility"
        self.objective_terms: dict[VarRef, float] = {}
        self.objective_const: float = 0.0

    # ------------------------------------------------------------------
    # declarations
    # ------------------------------------------------------------------
    def declare_poly(
        self,
        degree: int,
        nvars: int,
        kind: str,
        name: str | None = None,
        min_degree: int = 0,
    ) -> DecisionPoly:
        if degree < 0:
            raise SOSProgramError("degree must be nonnegative")
        if kind not in ("free", "sos"):
            raise SOSProgramError(f"kind must be 'free' or 'sos', got {kind!r}")
        if kind == "sos" and degree % 2 == 1:
            raise SOSProgramError(
                f"sos-kind decision polynomial must have even degree, got {degree}"
            )
        if kind == "sos" and min_degree != 0:
            raise SOSProgramError("min_degree applies to free polynomials only")
        pid = len(self._polys)
        dp = DecisionPoly(
            pid=pid,
            nvars=nvars,
            degree=degree,
            kind=kind,
            name=name or f"p{pid}",
            basis=tuple(monomial_basis(nvars, degree, min_degree)),
            gram_basis=tuple(monomial_basis(nvars, degree // 2)) if kind == "sos" else (),
        )
        self._polys.append(dp)
        return dp

    def declare_scalar(self, name: str | None = None, nonneg: bool = False) -> ScalarVar:
        sid = len(self._scalars)
        sv = ScalarVar(sid=sid, name=name or f"c{sid}", nonneg=nonneg)
        self._scalars.append(sv)
        return sv

    # ------------------------------------------------------------------
    # constraints and objective
    # ------------------------------------------------------------------
    def add_sos_constraint(self, expr, name: str | None = None) -> int:
        expr = AffinePoly.wrap(expr, nvars=1)
        cid = len(self.constraints)
        half = (expr.degree() + 1) // 2
        self.constraints.append(
            SOSConstraint(
                cid=cid,
                name=name or f"sos{cid}",
                expr=expr,
                gram_basis=tuple(monomial_basis(expr.nvars, half)),
            )
        )
        return cid

    def add_equality(self, expr, name: str | None = None) -> int:
        """Constrain an affine polynomial expression to be identically zero."""
        expr = AffinePoly.wrap(expr, nvars=1)
        eid = len(self.equalities)
        self.equalities.append(LinearEquality(eid=eid, name=name or f"eq{eid}", expr=expr))
        return eid

    def set_objective(self, sense: str, terms: Mapping[VarRef, float], const: float = 0.0):
        if sense not in ("max", "min"):
            raise SOSProgramError("sense must be 'max' or 'min'")
        self.objective_sense = sense
        self.objective_terms = dict(terms)
        self.objective_const = float(const)

    def trace_refs(self, dp: DecisionPoly) -> dict[VarRef, float]:
        """Objective weights selecting trace of an sos-kind poly's Gram."""
        if dp.kind != "sos":
            raise SOSProgramError("trace_refs applies to sos-kind decision polynomials")
        return {("gram", dp.pid, i, i): 1.0 for i in range(len(dp.gram_basis))}

    # ------------------------------------------------------------------
    # compilation
    # ------------------------------------------------------------------
    def compile(self) -> SDPInstance:
        if not self.constraints and not self.equalities:
            raise SOSProgramError("program has no constraints")
        blocks: list[Block] = []
        block_entry_refs: dict[VarRef, tuple[int, int, int]] = {}
        for dp in self._polys:
            if dp.kind == "sos":
                k = len(blocks)
                blocks.append(Block("poly", ("poly", dp.pid), len(dp.gram_basis), dp.name))
                for i in range(len(dp.gram_basis)):
                    for j in range(i, len(dp.gram_basis)):
                        block_entry_refs[("gram", dp.pid, i, j)] = (k, i, j)
        for sv in self._scalars:
            if sv.nonneg:
                k = len(blocks)
                blocks.append(Block("scalar", ("scalar", sv.sid), 1, sv.name))
                block_entry_refs[("scalar", sv.sid)] = (k, 0, 0)
        n_cons_block_start = len(blocks)
        for c in self.constraints:
            blocks.append(Block("constraint", ("constraint", c.cid), len(c.gram_basis), c.name))

        free_refs: list[VarRef] = []
        for dp in self._polys:
            if dp.kind == "free":
                free_refs.extend(("coef", dp.pid, m) for m in dp.basis)
        for sv in self._scalars:
            if not sv.nonneg:
                free_refs.append(("scalar", sv.sid))
        free_col = {r: i for i, r in enumerate(free_refs)}

        rows_free: list[tuple[int, int, float]] = []  # (row, col, coeff)
        rows_W: list[list[tuple[int, int, float]]] = [[] for _ in blocks]
        b_vals: list[float] = []
        row_names: list[str] = []

        def add_entry(row: int, ref: VarRef, coeff: float) -> None:
            if ref in free_col:
                rows_free.append((row, free_col[ref], coeff))
                return
            if ref not in block_entry_refs:
                raise SOSProgramError(f"reference {ref} is not declared in this program")
            k, i, j = block_entry_refs[ref]
            d = blocks[k].size
            if i == j:
                rows_W[k].append((row, i * d + i, coeff))
            else:
                # spread symmetric off-diagonal weight over both matrix slots
                rows_W[k].append((row, j * d + i, 0.5 * coeff))
                rows_W[k].append((row, i * d + j, 0.5 * coeff))

        def emit_rows(expr: AffinePoly, name: str, gram_block: int | None,
                      gram_basis: tuple[Monomial, ...] | None) -> None:
            support = set(expr.support())
            pair_map = {}
            if gram_block is not None:
                pair_map = product_pairs(gram_basis)
                support.update(pair_map)
            support = sorted(support, key=grlex_key)
            scale = max((abs(expr.const.coefficient(m)) for m in support), default=0.0)
            if scale == 0.0:
                scale = 1.0
            for mono in support:
                row = len(b_vals)
                row_names.append(f"{name}[{','.join(map(str, mono.exponents))}]")
                for ref, poly in expr.terms.items():
                    cf = poly.coefficient(mono)
                    if cf != 0.0:
                        add_entry(row, ref, cf / scale)
                if gram_block is not None:
                    d = blocks[gram_block].size
                    for i, j in pair_map.get(mono, ()):
                        w = 1.0 if i == j else 2.0
                        if i == j:
                            rows_W[gram_block].append((row, i * d + i, -w / scale))
                        else:
                            rows_W[gram_block].append((row, j * d + i, -0.5 * w / scale))
                            rows_W[gram_block].append((row, i * d + j, -0.5 * w / scale))
                b_vals.append(-expr.const.coefficient(mono) / scale)

        for idx, c in enumerate(self.constraints):
            emit_rows(c.expr, c.name, n_cons_block_start + idx, c.gram_basis)
        for eq in self.equalities:
            emit_rows(eq.expr, eq.name, None, None)

        n_rows = len(b_vals)
        W = []
        for k, blk in enumerate(blocks):
            trip = rows_W[k]
            if trip:
                r, cidx, v = zip(*trip)
                W.append(
                    sp.csr_matrix((v, (r, cidx)), shape=(n_rows, blk.size * blk.size))
                )
            else:
                W.append(sp.csr_matrix((n_rows, blk.size * blk.size)))
        if rows_free:
            r, cidx, v = zip(*rows_free)
            A_free = sp.csr_matrix((v, (r, cidx)), shape=(n_rows, len(free_refs)))
        else:
            A_free = sp.csr_matrix((n_rows, len(free_refs)))

        obj_blocks = [np.zeros(blk.size * blk.size) for blk in blocks]
        obj_free = np.zeros(len(free_refs))
        for ref, wgt in self.objective_terms.items():
            if ref in free_col:
                obj_free[free_col[ref]] += wgt
            elif ref in block_entry_refs:
                k, i, j = block_entry_refs[ref]
                d = blocks[k].size
                if i == j:
                    obj_blocks[k][i * d + i] += wgt
                else:
                    obj_blocks[k][j * d + i] += 0.5 * wgt
                    obj_blocks[k][i * d + j] += 0.5 * wgt
            else:
                raise SOSProgramError(f"objective references undeclared variable {ref}")

        return SDPInstance(
            blocks=blocks,
            free_refs=free_refs,
            W=W,
            A_free=A_free,
            b=np.array(b_vals),
            obj_blocks=obj_blocks,
            obj_free=obj_free,
            obj_const=self.objective_const,
            sense=self.objective_sense,
            row_names=row_names,
            block_entry_refs=block_entry_refs,
        )

    # ------------------------------------------------------------------
    # solution mapping
    # ------------------------------------------------------------------
    def realize(self, dp: DecisionPoly, result: SolveResult) -> Polynomial:
        """Instantiate a decision polynomial from solved variable values."""
        if dp.kind == "free":
            return Polynomial(
                dp.nvars,
                {m: result.values.get(("coef", dp.pid, m), 0.0) for m in dp.basis},
            )
        G = result.gram_matrices[("poly", dp.pid)]
        return gram_expand(dp.gram_basis, G)

    def realize_affine(self, expr: AffinePoly, result: SolveResult) -> Polynomial:
        out = expr.const
        for ref, poly in expr.terms.items():
            out = out + poly * result.values.get(ref, 0.0)
        return out

    def scalar_value(self, sv: ScalarVar, result: SolveResult) -> float:
        return result.values.get(("scalar", sv.sid), 0.0)


def solve(instance: SDPInstance, settings: SolverSettings | None = None) -> SolveResult:
    """Solve a compiled instance through cvxpy's conic interface.

    Never raises for solver trouble; failures come back as status
    "Failed" with diagnostics.
    """
    import cvxpy as cp

    settings = settings or SolverSettings()
    S_vars = [cp.Variable((blk.size, blk.size), symmetric=True) for blk in instance.blocks]
    f_var = cp.Variable(instance.free_refs and len(instance.free_refs) or 1)
    lhs = 0
    for W_k, S_k in zip(instance.W, S_vars):
        lhs = lhs + W_k @ cp.vec(S_k, order="F")
    if instance.free_refs:
        lhs = lhs + instance.A_free @ f_var
    constraints = [S >> 0 for S in S_vars]
    constraints.append(lhs == instance.b)
    if not instance.free_refs:
        constraints.append(f_var == 0)

    obj_expr = instance.obj_const
    for w_k, S_k in zip(instance.obj_blocks, S_vars):
        if np.any(w_k):
            obj_expr = obj_expr + w_k @ cp.vec(S_k, order="F")
    if instance.free_refs and np.any(instance.obj_free):
        obj_expr = obj_expr + instance.obj_free @ f_var
    if instance.sense == "max":
        objective = cp.Maximize(obj_expr)
    elif instance.sense == "min":
        objective = cp.Minimize(obj_expr)
    else:
        objective = cp.Minimize(0)
    problem = cp.Problem(objective, constraints)

    candidates = (
        [settings.solver]
        if settings.solver
        else [s for s in PREFERRED_SOLVERS if s in cp.installed_solvers()]
    )
    if not candidates:
        return SolveResult("Failed", None, {}, {}, "none", "no conic solver installed")
    last_error = ""
    for solver_name in candidates:
        try:
            problem.solve(solver=solver_name, verbose=settings.verbose, **settings.options)
        except Exception as exc:  # noqa: BLE001 - a solver crash must not propagate
            last_error = f"{solver_name}: {exc}"
            continue
        status = _map_status(problem.status)
        if status == "Failed":
            last_error = f"{solver_name}: status {problem.status}"
            continue
        values: dict[VarRef, float] = {}
        grams: dict[tuple, np.ndarray] = {}
        if status in ("Optimal", "Inaccurate"):
            for k, blk in enumerate(instance.blocks):
                S = np.asarray(S_vars[k].value)
                S = 0.5 * (S + S.T)
                grams[blk.key] = S
            for ref, (k, i, j) in instance.block_entry_refs.items():
                values[ref] = float(grams[instance.blocks[k].key][i, j])
            if instance.free_refs:
                fv = np.asarray(f_var.value).ravel()
                for ref, col in zip(instance.free_refs, range(len(instance.free_refs))):
                    values[ref] = float(fv[col])
        obj_val = None if problem.value is None else float(problem.value)
        if obj_val is not None and instance.sense == "feasibility":
            obj_val = 0.0
        return SolveResult(status, obj_val, values, grams, solver_name)
    return SolveResult("Failed", None, {}, {}, "none", last_error or "all solvers failed")


def _map_status(status: str) -> str:
    table = {
        "optimal": "Optimal",
        "infeasible": "Infeasible",
        "unbounded": "Unbounded",
        "optimal_inaccurate": "Inaccurate",
        "infeasible_inaccurate": "Infeasible",
        "unbounded_inaccurate": "Unbounded",
    }
    return table.get(status, "Failed")


@dataclass
class VerificationItem:
    name: str
    min_eigenvalue: float
    residual: float
    passed: bool


@dataclass
class VerificationReport:
    items: list[VerificationItem]

    @property
    def all_passed(self) -> bool:
        return all(i.passed for i in self.items)

    def failures(self) -> list[str]:
        return [i.name for i in self.items if not i.passed]


def verify_certificate(
    prog: SOSProgram,
    result: SolveResult,
    psd_tol: float = PSD_TOL,
    residual_tol: float = RESIDUAL_TOL,
) -> VerificationReport:
    """Check every SOS object of a solved program independently.

    For each SOS constraint: symmetrize the recovered Gram, demand min
    eigenvalue >= -psd_tol, and demand the Gram expansion to match the
    realized constraint polynomial with relative coefficient residual
    <= residual_tol.  SOS-kind decision polynomials get the same
    eigenvalue check on their own block.
    """
    items: list[VerificationItem] = []
    for c in prog.constraints:
        key = ("constraint", c.cid)
        if key not in result.gram_matrices:
            items.append(VerificationItem(c.name, float("-inf"), float("inf"), False))
            continue
        G = result.gram_matrices[key]
        G = 0.5 * (G + G.T)
        min_eig = float(np.linalg.eigvalsh(G)[0])
        realized = prog.realize_affine(c.expr, result)
        diff = realized - gram_expand(c.gram_basis, G)
        residual = diff.max_abs_coeff() / max(1.0, realized.max_abs_coeff())
        items.append(
            VerificationItem(
                c.name,
                min_eig,
                residual,
                min_eig >= -psd_tol and residual <= residual_tol,
            )
        )
    for dp in prog._polys:
        if dp.kind != "sos":
            continue
        key = ("poly", dp.pid)
        if key not in result.gram_matrices:
            items.append(VerificationItem(dp.name, float("-inf"), float("inf"), False))
            continue
        G = result.gram_matrices[key]
        G = 0.5 * (G + G.T)
        min_eig = float(np.linalg.eigvalsh(G)[0])
        items.append(VerificationItem(dp.name, min_eig, 0.0, min_eig >= -psd_tol))
    return VerificationReport(items)


def dump_instance(instance: SDPInstance, path=None) -> str:
    """Plain-text sparse dump (block table, equality triplets, objective)."""
    out = io.StringIO()
    print(f"sense {instance.sense}", file=out)
    for k, blk in enumerate(instance.blocks):
        print(f"block {k} kind={blk.kind} size={blk.size} name={blk.name}", file=out)
    print(f"free {len(instance.free_refs)}", file=out)
    for r in range(instance.n_rows):
        parts = []
        for k, W_k in enumerate(instance.W):
            row = W_k.getrow(r)
            for col, v in zip(row.indices, row.data):
                d = instance.blocks[k].size
                parts.append(f"S{k}[{col % d},{col // d}]*{v:.12g}")
        row = instance.A_free.getrow(r)
        for col, v in zip(row.indices, row.data):
            parts.append(f"f[{col}]*{v:.12g}")
        print(
            f"eq {r} ({instance.row_names[r]}): "
            + " + ".join(parts or ["0"])
            + f" = {instance.b[r]:.12g}",
            file=out,
        )
    text = out.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
