"""System specification: expression ASTs, polynomialization, measurements.

A control-affine system ``xdot = f(x) + g(x) u + d(x)`` is declared with
f as parsed expressions (state variables x1..xn, optionally containing
non-polynomial terms), g as a polynomial matrix, and an optional true
disturbance d used only for data generation and simulation -- synthesis
never sees it.

Non-polynomial sub-expressions must be marked for Chebyshev replacement
(scalar functions of a single state variable).  ``polynomialize`` swaps
each marked subtree for its expanded interpolant and reports the
per-component substitution error: the certified remainder bound when the
user supplies (c_m, rho), otherwise the empirical sup error flagged as
uncertified.

Grammar for ``parse``::

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' nonneg-int)?
    atom   := number | x<k> | u<k> | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | sqrt | abs

so precedence is ^ > unary minus > * / > + -, all left associative.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .cheb import fit_interpolant, remainder_bound, sup_error, to_polynomial
from .poly import Polynomial, embed_univariate

log = logging.getLogger(__name__)

ESCAPE_NORM = 1e6
FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")


# ----------------------------------------------------------------------
# expression AST
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" (state) or "u" (input)
    index: int  # 1-based, as written

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "sin" | "cos" | "exp" | "sqrt" | "abs"
    arg: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*", "/", "^"
    left: "Expression"
    right: "Expression"


Expression = Const | Var | Unary | BinOp


class ParseError(ValueError):
    pass


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    """Tokens as (kind, text, 1-based column)."""
    tokens = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        col = i + 1
        if ch.isdigit() or ch == ".":
            j = i
            seen_e = False
            while j < len(src) and (
                src[j].isdigit()
                or src[j] == "."
                or (src[j] in "eE" and not seen_e)
                or (src[j] in "+-" and j > i and src[j - 1] in "eE")
            ):
                if src[j] in "eE":
                    seen_e = True
                j += 1
            tokens.append(("number", src[i:j], col))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], col))
            i = j
        elif ch in "+-*/^()":
            tokens.append((ch, ch, col))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r} at column {col}")
    tokens.append(("end", "", len(src) + 1))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str):
        col = self.peek()[2]
        raise ParseError(f"syntax error at column {col}: {message}")

    def expect(self, kind: str):
        if self.peek()[0] != kind:
            self.fail(f"expected {kind!r}, found {self.peek()[1] or 'end of input'!r}")
        return self.next()

    def parse(self) -> Expression:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return e

    def expr(self) -> Expression:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek()[0] == "-":
            self.next()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        if self.peek()[0] == "^":
            self.next()
            kind, text, col = self.peek()
            if kind != "number" or not text.isdigit():
                raise ParseError(
                    f"syntax error at column {col}: exponent must be a nonnegative "
                    f"integer literal, found {text or 'end of input'!r}"
                )
            self.next()
            return BinOp("^", base, Const(float(int(text))))
        return base

    def atom(self) -> Expression:
        kind, text, col = self.peek()
        if kind == "number":
            self.next()
            try:
                return Const(float(text))
            except ValueError:
                raise ParseError(f"invalid number {text!r} at column {col}") from None
        if kind == "ident":
            self.next()
            if text in FUNCTIONS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Unary(text, inner)
            if len(text) >= 2 and text[0] in "xu" and text[1:].isdigit():
                return Var(text[0], int(text[1:]))
            raise ParseError(f"unknown identifier {text!r} at column {col}")
        if kind == "(":
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail(f"unexpected {text or 'end of input'!r}")


def parse(src: str) -> Expression:
    """Parse an expression string into an AST."""
    if not src or not src.strip():
        raise ParseError("empty expression")
    return _Parser(src).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def to_string(e: Expression) -> str:
    """Render the AST; parse(to_string(e)) reproduces e exactly."""

    def render(node: Expression, context: int) -> str:
        if isinstance(node, Const):
            v = node.value
            s = repr(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
            return s
        if isinstance(node, Var):
            return node.name
        if isinstance(node, Unary):
            if node.op == "neg":
                body = "-" + render(node.arg, _PREC["neg"])
                return f"({body})" if context > _PREC["neg"] else body
            return f"{node.op}({render(node.arg, 0)})"
        p = _PREC[node.op]
        if node.op == "^":
            body = f"{render(node.left, p + 1)}^{int(node.right.value)}"
            return f"({body})" if context > p else body
        left = render(node.left, p)
        right = render(node.right, p + 1)
        body = f"{left} {node.op} {right}" if p == 1 else f"{left}{node.op}{right}"
        return f"({body})" if context > p else body

    return render(e, 0)


def free_variables(e: Expression) -> tuple[set[int], set[int]]:
    """(state indices, input indices) referenced, 1-based."""
    xs: set[int] = set()
    us: set[int] = set()

    def walk(node: Expression):
        if isinstance(node, Var):
            (xs if node.kind == "x" else us).add(node.index)
        elif isinstance(node, Unary):
            walk(node.arg)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)

    walk(e)
    return xs, us


def contains(e: Expression, sub: Expression) -> bool:
    if e == sub:
        return True
    if isinstance(e, Unary):
        return contains(e.arg, sub)
    if isinstance(e, BinOp):
        return contains(e.left, sub) or contains(e.right, sub)
    return False


_NUMPY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "neg": np.negative,
}


def eval_expression_many(
    e: Expression, X: np.ndarray, U: np.ndarray | None = None
) -> np.ndarray:
    """Evaluate at each row of X (N, n) [and U (N, m)]; returns (N,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))

    def ev(node: Expression):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            if node.kind == "x":
                if node.index > X.shape[1]:
                    raise ValueError(f"state variable {node.name} out of range (n={X.shape[1]})")
                return X[:, node.index - 1]
            if U is None:
                raise ValueError(f"input variable {node.name} used but no inputs supplied")
            if node.index > U.shape[1]:
                raise ValueError(f"input variable {node.name} out of range (m={U.shape[1]})")
            return U[:, node.index - 1]
        if isinstance(node, Unary):
            return _NUMPY_FUNCS[node.op](ev(node.arg))
        a, b = ev(node.left), ev(node.right)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a ** b  # "^": exponent is an integer Const by construction

    out = ev(e)
    return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()


def eval_expression(e: Expression, x: Sequence[float], u: Sequence[float] | None = None) -> float:
    X = np.asarray(x, dtype=float).reshape(1, -1)
    U = None if u is None else np.asarray(u, dtype=float).reshape(1, -1)
    return float(eval_expression_many(e, X, U)[0])


# ----------------------------------------------------------------------
# polynomial conversion
# ----------------------------------------------------------------------
class PolynomializeError(ValueError):
    pass


def expression_to_polynomial(
    e: Expression,
    nvars: int,
    substitutions: Mapping[Expression, Polynomial] | None = None,
) -> Polynomial:
    """Convert a state-only expression to a Polynomial.

    ``substitutions`` maps designated sub-expressions (e.g. Chebyshev
    markers) to ready-made polynomials; any other non-polynomial node is
    rejected with its path from the root.
    """
    subs = dict(substitutions or {})

    def conv(node: Expression, path: list[str]) -> Polynomial:
        if node in subs:
            return subs[node]
        if isinstance(node, Const):
            return Polynomial.constant(nvars, node.value)
        if isinstance(node, Var):
            if node.kind == "u":
                raise PolynomializeError(
                    f"input variable {node.name} at {'/'.join(path) or 'root'} cannot "
                    "appear in a state polynomial"
                )
            if node.index > nvars:
                raise PolynomializeError(
                    f"state variable {node.name} out of range for n={nvars}"
                )
            return Polynomial.variable(nvars, node.index - 1)
        if isinstance(node, Unary):
            if node.op == "neg":
                return -conv(node.arg, path + ["neg"])
            raise PolynomializeError(
                f"non-polynomial node {node.op}(...) at {'/'.join(path) or 'root'}; "
                "mark it for Chebyshev substitution"
            )
        if node.op == "^":
            return conv(node.left, path + ["base"]) ** int(node.right.value)
        left = conv(node.left, path + [f"({node.op})left"])
        right = conv(node.right, path + [f"({node.op})right"])
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        # division: polynomial closure requires a nonzero constant divisor
        if right.degree() > 0:
            raise PolynomializeError(
                f"division by a non-constant at {'/'.join(path) or 'root'}"
            )
        denom = right.constant_term()
        if denom == 0.0:
            raise PolynomializeError(f"division by zero at {'/'.join(path) or 'root'}")
        return left * (1.0 / denom)

    return conv(e, [])


# ----------------------------------------------------------------------
# system types
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ChebyshevMarker:
    """A sub-expression of one component designated for interpolation."""

    component: int  # 1-based state equation index
    expr: Expression
    k: int
    interval: tuple[float, float]
    c_m: float | None = None
    rho: float | None = None

    def __post_init__(self) -> None:
        xs, us = free_variables(self.expr)
        if us:
            raise ValueError("marked sub-expression may not reference inputs")
        if len(xs) != 1:
            raise ValueError(
                f"marked sub-expression must depend on exactly one state variable, got {sorted(xs)}"
            )
        if self.k < 1:
            raise ValueError("interpolation degree k must be >= 1")

    @property
    def variable(self) -> int:
        """The single referenced state variable, 1-based."""
        xs, _ = free_variables(self.expr)
        return next(iter(xs))


@dataclass
class ControlAffineSystem:
    """True dynamics xdot = f(x) + g(x) u + d(x), d unknown to synthesis."""

    n: int
    m: int
    f: tuple[Expression, ...]
    g: tuple[tuple[Polynomial, ...], ...]
    sigma_n: float = 0.0
    markers: tuple[ChebyshevMarker, ...] = ()
    disturbance: tuple[Expression, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.f) != self.n:
            raise ValueError(f"f has {len(self.f)} components, expected n={self.n}")
        if len(self.g) != self.n or any(len(row) != self.m for row in self.g):
            raise ValueError(f"g must be {self.n}x{self.m}")
        for row in self.g:
            for p in row:
                if p.nvars != self.n:
                    raise ValueError("g entries must be polynomials in the n state variables")
        if self.sigma_n < 0:
            raise ValueError("sigma_n must be nonnegative")
        for mk in self.markers:
            if not 1 <= mk.component <= self.n:
                raise ValueError(f"marker component {mk.component} out of range 1..{self.n}")
            if not contains(self.f[mk.component - 1], mk.expr):
                raise ValueError(
                    f"marker expression {to_string(mk.expr)!r} not found in component "
                    f"{mk.component}"
                )
        if self.disturbance is not None and len(self.disturbance) != self.n:
            raise ValueError("disturbance must have n components")


@dataclass
class MarkerReport:
    component: int
    variable: int
    k: int
    interval: tuple[float, float]
    sup_error: float
    bound: float
    certified: bool


@dataclass
class PolynomializeResult:
    p: tuple[Polynomial, ...]
    xi_bounds: tuple[float, ...]
    marker_reports: tuple[MarkerReport, ...]


def polynomialize(sys: ControlAffineSystem) -> PolynomializeResult:
    """Replace marked subtrees by expanded Chebyshev interpolants.

    Returns the polynomial drift vector P, a per-component bound on the
    substitution error xi (certified via the remainder formula when
    (c_m, rho) are declared, else the empirical sup error), and one
    report per marker.
    """
    reports: list[MarkerReport] = []
    xi = [0.0] * sys.n
    subs_by_component: dict[int, dict[Expression, Polynomial]] = {}
    for mk in sys.markers:
        var = mk.variable

        def scalar_f(t: float, _mk=mk, _var=var) -> float:
            point = [0.0] * sys.n
            point[_var - 1] = t
            return eval_expression(_mk.expr, point)

        interp = fit_interpolant(scalar_f, mk.k, mk.interval)
        emp = sup_error(scalar_f, interp, 2001)
        if mk.c_m is not None and mk.rho is not None:
            bound = remainder_bound(mk.c_m, mk.rho, mk.k)
            certified = True
            if emp > bound:
                log.warning(
                    "component %d: empirical sup error %.3e exceeds the declared "
                    "remainder bound %.3e; the declared (c_m, rho) do not hold",
                    mk.component,
                    emp,
                    bound,
                )
        else:
            bound = emp
            certified = False
        embedded = embed_univariate(to_polynomial(interp), sys.n, var - 1)
        subs_by_component.setdefault(mk.component, {})[mk.expr] = embedded
        xi[mk.component - 1] += bound
        reports.append(
            MarkerReport(mk.component, var, mk.k, mk.interval, emp, bound, certified)
        )
    p = tuple(
        expression_to_polynomial(fi, sys.n, subs_by_component.get(i + 1))
        for i, fi in enumerate(sys.f)
    )
    return PolynomializeResult(p=p, xi_bounds=tuple(xi), marker_reports=tuple(reports))


@dataclass
class LearnedSystem:
    """Polynomial surrogate xdot = p(x) + g(x) u + d, with d in [d_lo, d_hi].

    ``d_lo[i]``/``d_hi[i]`` are per-component polynomial envelope bounds
    (None means the component has no modelled disturbance).
    """

    p: tuple[Polynomial, ...]
    g: tuple[tuple[Polynomial, ...], ...]
    d_lo: tuple[Polynomial | None, ...]
    d_hi: tuple[Polynomial | None, ...]

    def __post_init__(self) -> None:
        self.n = len(self.p)
        self.m = len(self.g[0]) if self.g else 0
        if len(self.g) != self.n:
            raise ValueError("g row count must equal the state dimension")
        if len(self.d_lo) != self.n or len(self.d_hi) != self.n:
            raise ValueError("envelope bounds must have one entry per state")

    @staticmethod
    def without_disturbance(
        p: Sequence[Polynomial], g: Sequence[Sequence[Polynomial]]
    ) -> "LearnedSystem":
        n = len(p)
        return LearnedSystem(tuple(p), tuple(tuple(r) for r in g), (None,) * n, (None,) * n)

    def closed_loop(self, u: Sequence[Polynomial], d: Sequence[Polynomial] | None = None
                    ) -> list[Polynomial]:
        """p + g*u (+ d) as a polynomial vector field."""
        if len(u) != self.m:
            raise ValueError(f"controller has {len(u)} outputs, expected {self.m}")
        out = []
        for i in range(self.n):
            fi = self.p[i]
            for j in range(self.m):
                fi = fi + self.g[i][j] * u[j]
            if d is not None and d[i] is not None:
                fi = fi + d[i]
            out.append(fi)
        return out


# ----------------------------------------------------------------------
# trajectory generation
# ----------------------------------------------------------------------
def make_field(
    sys: ControlAffineSystem, controller: Sequence[Polynomial] | None
) -> Callable[[np.ndarray], np.ndarray]:
    """Batch evaluator of the true closed-loop field f + g*u(x) + d.

    Accepts X of shape (N, n) and returns (N, n); rows evolve independently.
    """
    if controller is not None and len(controller) != sys.m:
        raise ValueError(f"controller has {len(controller)} outputs, expected {sys.m}")

    def field(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        N = X.shape[0]
        U = np.zeros((N, sys.m))
        if controller is not None:
            for j, uj in enumerate(controller):
                U[:, j] = uj.evaluate_many(X)
        out = np.empty_like(X)
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            for i in range(sys.n):
                acc = eval_expression_many(sys.f[i], X, U)
                for j in range(sys.m):
                    gij = sys.g[i][j]
                    if not gij.is_zero():
                        acc = acc + gij.evaluate_many(X) * U[:, j]
                if sys.disturbance is not None:
                    acc = acc + eval_expression_many(sys.disturbance[i], X, U)
                out[:, i] = acc
        return out

    return field


def rk4_states(
    field: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    dt: float,
    n_steps: int,
) -> tuple[np.ndarray, bool]:
    """Fixed-step RK4; returns (n_steps+1, n) states and an escape flag.

    Integration stops early once the norm exceeds 1e6 or a coordinate
    goes non-finite; remaining rows repeat the last valid state.
    """
    x = np.asarray(x0, dtype=float).reshape(1, -1)
    states = np.empty((n_steps + 1, x.shape[1]))
    states[0] = x
    escaped = False
    for t in range(n_steps):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > ESCAPE_NORM:
            escaped = True
            states[t + 1 :] = states[t]
            break
        states[t + 1] = x
    return states, escaped


@dataclass
class TrajectoryDataset:
    """Sampled (x, u, xdot) triples with derived disturbance residuals."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    xdot: np.ndarray  # noisy finite-difference derivative observations
    residuals: np.ndarray  # xdot - f(x) - g(x) u
    truncated: bool = False

    def __len__(self) -> int:
        return self.t.shape[0]

    def to_trajectory_csv(self, path) -> None:
        n, m = self.x.shape[1], self.u.shape[1]
        header = ",".join(
            ["t"] + [f"x{i+1}" for i in range(n)] + [f"u{j+1}" for j in range(m)]
        )
        data = np.hstack([self.t.reshape(-1, 1), self.x, self.u])
        np.savetxt(path, data, delimiter=",", header=header, comments="")

    def to_measurement_csv(self, path) -> None:
        n = self.x.shape[1]
        header = ",".join([f"x{i+1}" for i in range(n)] + [f"d{i+1}" for i in range(n)])
        np.savetxt(
            path,
            np.hstack([self.x, self.residuals]),
            delimiter=",",
            header=header,
            comments="",
        )


def load_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a `t,x1..xn,u1..um` CSV back into (t, x, u) arrays."""
    with open(path) as fh:
        names = [c.strip() for c in fh.readline().split(",")]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    nx = sum(1 for c in names if c.startswith("x"))
    nu = sum(1 for c in names if c.startswith("u"))
    if names[0] != "t" or 1 + nx + nu != len(names):
        raise ValueError(f"unexpected trajectory CSV header {names}")
    return data[:, 0], data[:, 1 : 1 + nx], data[:, 1 + nx :]


def generate_measurements(
    sys: ControlAffineSystem,
    x0: Sequence[float],
    T: float,
    dt: float,
    controller: Sequence[Polynomial] | None = None,
    seed: int = 0,
) -> TrajectoryDataset:
    """Simulate the true system and emit noisy derivative measurements.

    The trajectory is integrated with RK4; derivative observations are
    second-order finite differences of the states (central in the
    interior, one-sided at the start) plus iid N(0, sigma_n^2) noise.
    Residuals subtract the declared model part f(x) + g(x)u, leaving
    noisy samples of the unknown disturbance.  T/dt samples are kept.
    """
    if dt <= 0 or T < dt:
        raise ValueError("need dt > 0 and T >= dt")
    n_steps = int(round(T / dt))
    field = make_field(sys, controller)
    states, escaped = rk4_states(field, x0, dt, n_steps)
    if escaped:
        warnings.warn("trajectory escaped (norm > 1e6); dataset truncated", stacklevel=2)
    X = states[:n_steps]  # keep T/dt samples
    t = np.arange(n_steps) * dt
    U = np.zeros((n_steps, sys.m))
    if controller is not None:
        for j, uj in enumerate(controller):
            U[:, j] = uj.evaluate_many(X)
    xdot = np.empty_like(X)
    xdot[1:] = (states[2 : n_steps + 1] - states[0 : n_steps - 1]) / (2.0 * dt)
    xdot[0] = (-3.0 * states[0] + 4.0 * states[1] - states[2]) / (2.0 * dt)
    rng = np.random.default_rng(seed)
    xdot = xdot + rng.normal(0.0, sys.sigma_n, size=xdot.shape)
    model_part = np.empty_like(X)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        for i in range(sys.n):
            acc = eval_expression_many(sys.f[i], X, U)
            for j in range(sys.m):
                gij = sys.g[i][j]
                if not gij.is_zero():
                    acc = acc + gij.evaluate_many(X) * U[:, j]
            model_part[:, i] = acc
    return TrajectoryDataset(
        t=t, x=X, u=U, xdot=xdot, residuals=xdot - model_part, truncated=escaped
    )
