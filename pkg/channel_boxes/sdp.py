"""Complex-Hermitian conic programs, their real embedding and a cvxpy backend adapter.

Programs are assembled from small affine expression trees over declared blocks. Every
expression can be evaluated numerically in the complex domain (used for certificates and
residuals) and split into real and imaginary parts over real variables (used by the backend).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import prod
from typing import Any, Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple

import cvxpy as cp
import numpy as np
import scipy.linalg

from .config import SolverSettings
from .linalg import HermitianOperator, LinalgError, permutation_indices


_LOGGER = logging.getLogger(__name__)

_Part = Optional[Any]
_Pair = Tuple[_Part, _Part]


class SolverError(RuntimeError):
    """Raised when a backend crashes or returns no usable numbers."""


class BlockKind(str, Enum):
    FREE_SCALAR = "free_scalar"
    NONNEG_SCALAR = "nonneg_scalar"
    FREE_HERMITIAN = "free_hermitian"
    PSD_HERMITIAN = "psd_hermitian"

    @property
    def is_scalar(self) -> bool:
        return self in (BlockKind.FREE_SCALAR, BlockKind.NONNEG_SCALAR)

    @property
    def is_conic(self) -> bool:
        return self in (BlockKind.NONNEG_SCALAR, BlockKind.PSD_HERMITIAN)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    INACCURATE = "inaccurate"


@dataclass(frozen=True)
class Block:
    name: str
    kind: BlockKind
    dims: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return prod(self.dims)


# ---------------------------------------------------------------------------
# expressions


def _zero_matrix(matrix: np.ndarray) -> bool:
    return not np.any(matrix)


def _is_cvx(value: Any) -> bool:
    return isinstance(value, cp.Expression)


def _add(a: _Part, b: _Part) -> _Part:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _neg(a: _Part) -> _Part:
    return None if a is None else -a


def _kron_op(c: np.ndarray, x: _Part) -> _Part:
    if x is None or _zero_matrix(c):
        return None
    return cp.kron(c, x) if _is_cvx(x) else np.kron(c, x)


def _lmul_op(c: np.ndarray, x: _Part) -> _Part:
    if x is None or _zero_matrix(c):
        return None
    return c @ x


def _complex_apply(op, c: np.ndarray, parts: _Pair) -> _Pair:
    """Apply a real-bilinear ``op`` to complex constant ``c`` and split operand ``parts``."""

    c = np.asarray(c, dtype=complex)
    xr, xi = parts
    cr, ci = c.real, c.imag
    real = _add(op(cr, xr), _neg(op(ci, xi)))
    imag = _add(op(cr, xi), op(ci, xr))
    return real, imag


def _congruence(p: np.ndarray, x: _Part) -> _Part:
    return None if x is None else p @ x @ p.T


def _permutation_matrix(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    idx = permutation_indices(dims, perm)
    return np.eye(prod(dims))[idx]


def _trace_tail(x: _Part, kept: int, traced: int) -> _Part:
    if x is None:
        return None
    total = None
    eye = np.eye(kept)
    for k in range(traced):
        selector = np.kron(eye, np.eye(traced)[k : k + 1, :])
        total = _add(total, selector @ x @ selector.T)
    return total


def _element_sum(a: np.ndarray, x: _Part) -> _Part:
    if x is None or _zero_matrix(a):
        return None
    if _is_cvx(x):
        return cp.reshape(cp.sum(cp.multiply(a, x)), (1, 1), order="F")
    return np.reshape(np.sum(a * x), (1, 1))


class Expr:
    """Affine expression with Hermitian (or 1x1 real) value and tensor-factor dims."""

    dims: Tuple[int, ...]

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def evaluate(self, values: Mapping[str, np.ndarray]) -> np.ndarray:
        return self._evaluate(values, {})

    def _cached_evaluate(self, values: Mapping[str, np.ndarray], cache: Dict[int, np.ndarray]) -> np.ndarray:
        key = id(self)
        if key not in cache:
            cache[key] = self._evaluate(values, cache)
        return cache[key]

    def _cached_split(self, env: Mapping[str, _Pair], cache: Dict[int, _Pair]) -> _Pair:
        key = id(self)
        if key not in cache:
            cache[key] = self._split(env, cache)
        return cache[key]

    def _evaluate(self, values, cache) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _split(self, env, cache) -> _Pair:  # pragma: no cover - abstract
        raise NotImplementedError

    def blocks(self) -> Iterable[Block]:
        return ()

    def __add__(self, other: Any) -> "Expr":
        return Sum(((1.0, self), (1.0, as_expr(other))))

    def __radd__(self, other: Any) -> "Expr":
        return Sum(((1.0, as_expr(other)), (1.0, self)))

    def __sub__(self, other: Any) -> "Expr":
        return Sum(((1.0, self), (-1.0, as_expr(other))))

    def __rsub__(self, other: Any) -> "Expr":
        return Sum(((1.0, as_expr(other)), (-1.0, self)))

    def __neg__(self) -> "Expr":
        return Sum(((-1.0, self),))

    def __mul__(self, scalar: float) -> "Expr":
        return Sum(((float(scalar), self),))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Var(Expr):
    block: Block

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return self.block.dims

    def _evaluate(self, values, cache):
        return np.asarray(values[self.block.name], dtype=complex)

    def _split(self, env, cache):
        return env[self.block.name]

    def blocks(self):
        return (self.block,)


@dataclass(frozen=True, eq=False)
class Const(Expr):
    matrix: np.ndarray
    dims: Tuple[int, ...]

    def _evaluate(self, values, cache):
        return self.matrix

    def _split(self, env, cache):
        real = None if _zero_matrix(self.matrix.real) else self.matrix.real.copy()
        imag = None if _zero_matrix(self.matrix.imag) else self.matrix.imag.copy()
        return real, imag


@dataclass(frozen=True, eq=False)
class Sum(Expr):
    terms: Tuple[Tuple[float, Expr], ...]

    def __post_init__(self) -> None:
        sizes = {term.dim for _, term in self.terms}
        if len(sizes) != 1:
            raise LinalgError(f"Cannot add expressions of sizes {sorted(sizes)}")

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return self.terms[0][1].dims

    def _evaluate(self, values, cache):
        return sum(coef * term._cached_evaluate(values, cache) for coef, term in self.terms)

    def _split(self, env, cache):
        real: _Part = None
        imag: _Part = None
        for coef, term in self.terms:
            term_real, term_imag = term._cached_split(env, cache)
            if term_real is not None:
                real = _add(real, coef * term_real)
            if term_imag is not None:
                imag = _add(imag, coef * term_imag)
        return real, imag

    def blocks(self):
        for _, term in self.terms:
            yield from term.blocks()


@dataclass(frozen=True, eq=False)
class Kron(Expr):
    left: Expr
    right: Expr

    def __post_init__(self) -> None:
        if not (isinstance(self.left, Const) or isinstance(self.right, Const)):
            raise LinalgError("Kron needs a constant on at least one side")

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return self.left.dims + self.right.dims

    def _evaluate(self, values, cache):
        return np.kron(self.left._cached_evaluate(values, cache), self.right._cached_evaluate(values, cache))

    def _split(self, env, cache):
        if isinstance(self.left, Const):
            return _complex_apply(_kron_op, self.left.matrix, self.right._cached_split(env, cache))
        swapped = _complex_apply(_kron_op, self.right.matrix, self.left._cached_split(env, cache))
        perm = _permutation_matrix((self.right.dim, self.left.dim), (1, 0))
        return _congruence(perm, swapped[0]), _congruence(perm, swapped[1])

    def blocks(self):
        yield from self.left.blocks()
        yield from self.right.blocks()


@dataclass(frozen=True, eq=False)
class ScaleBy(Expr):
    """Scalar expression times a constant Hermitian matrix."""

    scalar: Expr
    matrix: np.ndarray
    dims: Tuple[int, ...]

    def _evaluate(self, values, cache):
        return self.scalar._cached_evaluate(values, cache)[0, 0].real * self.matrix

    def _split(self, env, cache):
        scalar_real, _ = self.scalar._cached_split(env, cache)
        return _complex_apply(_kron_op, self.matrix, (scalar_real, None))

    def blocks(self):
        return self.scalar.blocks()


@dataclass(frozen=True, eq=False)
class PartialTrace(Expr):
    arg: Expr
    keep: Tuple[int, ...]

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return tuple(self.arg.dims[i] for i in self.keep) or (1,)

    def _order(self) -> Tuple[List[int], int, int]:
        traced = [i for i in range(len(self.arg.dims)) if i not in self.keep]
        kept_dim = prod(self.arg.dims[i] for i in self.keep)
        traced_dim = prod(self.arg.dims[i] for i in traced)
        return list(self.keep) + traced, kept_dim, traced_dim

    def _evaluate(self, values, cache):
        order, kept_dim, traced_dim = self._order()
        idx = permutation_indices(self.arg.dims, order)
        value = self.arg._cached_evaluate(values, cache)[np.ix_(idx, idx)]
        return np.trace(value.reshape(kept_dim, traced_dim, kept_dim, traced_dim), axis1=1, axis2=3)

    def _split(self, env, cache):
        order, kept_dim, traced_dim = self._order()
        perm = _permutation_matrix(self.arg.dims, order)
        real, imag = self.arg._cached_split(env, cache)
        return (
            _trace_tail(_congruence(perm, real), kept_dim, traced_dim),
            _trace_tail(_congruence(perm, imag), kept_dim, traced_dim),
        )

    def blocks(self):
        return self.arg.blocks()


@dataclass(frozen=True, eq=False)
class Permute(Expr):
    arg: Expr
    perm: Tuple[int, ...]

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return tuple(self.arg.dims[p] for p in self.perm)

    def _evaluate(self, values, cache):
        idx = permutation_indices(self.arg.dims, self.perm)
        return self.arg._cached_evaluate(values, cache)[np.ix_(idx, idx)]

    def _split(self, env, cache):
        perm = _permutation_matrix(self.arg.dims, self.perm)
        real, imag = self.arg._cached_split(env, cache)
        return _congruence(perm, real), _congruence(perm, imag)

    def blocks(self):
        return self.arg.blocks()


@dataclass(frozen=True, eq=False)
class Contract(Expr):
    """Tr_targets[(I ⊗ C) · arg] with the Hermitian constant C acting on ``targets`` in order."""

    arg: Expr
    targets: Tuple[int, ...]
    operator: np.ndarray

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return tuple(d for i, d in enumerate(self.arg.dims) if i not in self.targets) or (1,)

    def _order(self) -> Tuple[List[int], int, int]:
        rest = [i for i in range(len(self.arg.dims)) if i not in self.targets]
        rest_dim = prod(self.arg.dims[i] for i in rest)
        target_dim = prod(self.arg.dims[i] for i in self.targets)
        return rest + list(self.targets), rest_dim, target_dim

    def _evaluate(self, values, cache):
        order, rest_dim, target_dim = self._order()
        idx = permutation_indices(self.arg.dims, order)
        value = self.arg._cached_evaluate(values, cache)[np.ix_(idx, idx)]
        tensor = value.reshape(rest_dim, target_dim, rest_dim, target_dim)
        return np.einsum("ts,asbt->ab", self.operator, tensor)

    def _split(self, env, cache):
        order, rest_dim, target_dim = self._order()
        perm = _permutation_matrix(self.arg.dims, order)
        real, imag = self.arg._cached_split(env, cache)
        lifted = np.kron(np.eye(rest_dim), self.operator)
        product_real, product_imag = _complex_apply(
            _lmul_op, lifted, (_congruence(perm, real), _congruence(perm, imag))
        )
        return (
            _trace_tail(product_real, rest_dim, target_dim),
            _trace_tail(product_imag, rest_dim, target_dim),
        )

    def blocks(self):
        return self.arg.blocks()


@dataclass(frozen=True, eq=False)
class Inner(Expr):
    """Re Tr[A · arg] as a 1x1 expression."""

    operator: np.ndarray
    arg: Expr

    @property
    def dims(self) -> Tuple[int, ...]:  # type: ignore[override]
        return (1,)

    def _evaluate(self, values, cache):
        value = np.trace(self.operator @ self.arg._cached_evaluate(values, cache))
        return np.array([[value.real]], dtype=complex)

    def _split(self, env, cache):
        real, imag = self.arg._cached_split(env, cache)
        a = np.asarray(self.operator, dtype=complex)
        first = _element_sum(a.real, None if real is None else real.T)
        second = _element_sum(a.imag, None if imag is None else imag.T)
        return _add(first, _neg(second)), None

    def blocks(self):
        return self.arg.blocks()


def as_expr(value: Any) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, HermitianOperator):
        return Const(value.matrix, value.dims)
    if np.isscalar(value):
        return Const(np.array([[complex(value)]]), (1,))
    matrix = np.asarray(value, dtype=complex)
    return Const(matrix, (matrix.shape[0],))


def const(value: Any, dims: Optional[Sequence[int]] = None) -> Const:
    expr = as_expr(value)
    if not isinstance(expr, Const):
        raise LinalgError("const() needs a numeric value")
    if dims is not None:
        if prod(dims) != expr.dim:
            raise LinalgError(f"dims {tuple(dims)} do not match size {expr.dim}")
        return Const(expr.matrix, tuple(dims))
    return expr


def kron(left: Any, right: Any) -> Expr:
    return Kron(as_expr(left), as_expr(right))


def partial_trace(arg: Expr, keep: Sequence[int]) -> Expr:
    keep = tuple(sorted(int(i) for i in keep))
    if any(i < 0 or i >= len(arg.dims) for i in keep):
        raise LinalgError(f"keep {keep} out of range for dims {arg.dims}")
    return PartialTrace(arg, keep)


def permute(arg: Expr, perm: Sequence[int]) -> Expr:
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(len(arg.dims))):
        raise LinalgError(f"{perm} is not a permutation of the factors of {arg.dims}")
    return Permute(arg, perm)


def contract(arg: Expr, targets: Sequence[int], operator: Any) -> Expr:
    targets = tuple(int(t) for t in targets)
    matrix = np.asarray(operator.matrix if isinstance(operator, HermitianOperator) else operator, dtype=complex)
    if matrix.shape[0] != prod(arg.dims[t] for t in targets):
        raise LinalgError("contraction operator does not match the targeted factors")
    return Contract(arg, targets, matrix)


def inner(operator: Any, arg: Expr) -> Expr:
    matrix = np.asarray(operator.matrix if isinstance(operator, HermitianOperator) else operator, dtype=complex)
    if matrix.shape != (arg.dim, arg.dim):
        raise LinalgError(f"inner product operator shape {matrix.shape} does not match {arg.dim}")
    return Inner(matrix, arg)


def trace(arg: Expr) -> Expr:
    return Inner(np.eye(arg.dim, dtype=complex), arg)


def scale_by(scalar: Expr, operator: Any, dims: Optional[Sequence[int]] = None) -> Expr:
    if scalar.dim != 1:
        raise LinalgError("scale_by needs a scalar expression")
    if isinstance(operator, HermitianOperator):
        return ScaleBy(scalar, operator.matrix, operator.dims)
    matrix = np.asarray(operator, dtype=complex)
    return ScaleBy(scalar, matrix, tuple(dims) if dims else (matrix.shape[0],))


# ---------------------------------------------------------------------------
# programs


@dataclass
class ConicProgram:
    """Complex-Hermitian semidefinite program in builder form."""

    name: str
    sense: str = "min"
    blocks: Dict[str, Block] = field(default_factory=dict)
    objective: Optional[Expr] = None
    equalities: Dict[str, Expr] = field(default_factory=dict)
    psd_constraints: Dict[str, Expr] = field(default_factory=dict)

    def add_block(self, name: str, kind: BlockKind, dims: Sequence[int] = (1,)) -> Var:
        if name in self.blocks:
            raise LinalgError(f"Block '{name}' already declared in {self.name}")
        dims = (1,) if kind.is_scalar else tuple(int(d) for d in dims)
        block = Block(name, kind, dims)
        self.blocks[name] = block
        return Var(block)

    def minimize(self, objective: Expr) -> None:
        self._set_objective("min", objective)

    def maximize(self, objective: Expr) -> None:
        self._set_objective("max", objective)

    def _set_objective(self, sense: str, objective: Expr) -> None:
        if objective.dim != 1:
            raise LinalgError("Objective must be scalar")
        self.sense = sense
        self.objective = objective

    def equal(self, name: str, expr: Any) -> None:
        self._check_name(name)
        self.equalities[name] = as_expr(expr)

    def psd(self, name: str, expr: Any) -> None:
        self._check_name(name)
        self.psd_constraints[name] = as_expr(expr)

    def _check_name(self, name: str) -> None:
        if name in self.equalities or name in self.psd_constraints:
            raise LinalgError(f"Constraint '{name}' already declared in {self.name}")

    def validate(self) -> None:
        if self.objective is None:
            raise LinalgError(f"Program {self.name} has no objective")
        expressions = [self.objective, *self.equalities.values(), *self.psd_constraints.values()]
        for expr in expressions:
            for block in expr.blocks():
                if self.blocks.get(block.name) is not block:
                    raise LinalgError(f"Program {self.name} references undeclared block '{block.name}'")


@dataclass(frozen=True)
class RealBlock:
    name: str
    kind: BlockKind
    hermitian_dim: int

    @property
    def size(self) -> int:
        return 1 if self.kind.is_scalar else 2 * self.hermitian_dim


@dataclass(frozen=True)
class RealConicProgram:
    """Real symmetric form of a ConicProgram.

    A Hermitian block X of dimension d becomes the symmetric block [[Re X, -Im X], [Im X, Re X]]
    of dimension 2d, parametrised by a symmetric real part and a skew-symmetric imaginary part.
    """

    source: ConicProgram
    blocks: Tuple[RealBlock, ...]

    def split(self, expr: Expr, env: Mapping[str, _Pair], cache: Optional[Dict[int, _Pair]] = None) -> _Pair:
        return expr._cached_split(env, {} if cache is None else cache)


def embed_hermitian(h: Any) -> np.ndarray:
    matrix = np.asarray(h.matrix if isinstance(h, HermitianOperator) else h, dtype=complex)
    return np.block([[matrix.real, -matrix.imag], [matrix.imag, matrix.real]])


def unembed_symmetric(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    d = s.shape[0] // 2
    real = (s[:d, :d] + s[d:, d:]) / 2
    imag = (s[d:, :d] - s[:d, d:]) / 2
    return real + 1j * imag


def embed_real(p: ConicProgram) -> RealConicProgram:
    p.validate()
    blocks = tuple(RealBlock(block.name, block.kind, block.dim) for block in p.blocks.values())
    return RealConicProgram(source=p, blocks=blocks)


# ---------------------------------------------------------------------------
# solutions and certificates


@dataclass(slots=True)
class Solution:
    program: str
    status: SolveStatus
    primal_values: Dict[str, HermitianOperator]
    dual_values: Dict[str, np.ndarray]
    objective_value: float
    duality_gap: float
    backend: str = ""

    def value(self, name: str) -> HermitianOperator:
        try:
            return self.primal_values[name]
        except KeyError as exc:
            raise SolverError(f"No primal value for block '{name}' in {self.program} ({self.status.value})") from exc

    def scalar(self, name: str) -> float:
        return float(self.value(name).matrix[0, 0].real)

    @property
    def has_values(self) -> bool:
        return self.status in (SolveStatus.OPTIMAL, SolveStatus.INACCURATE) and bool(self.primal_values)

    def serialise(self) -> Dict[str, Any]:
        return {
            "program": self.program,
            "status": self.status.value,
            "objective": json_float(self.objective_value),
            "duality_gap": json_float(self.duality_gap),
            "backend": self.backend,
        }


def json_float(value: float) -> Any:
    if value is None or np.isnan(value):
        return None
    if np.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return float(value)


@dataclass(slots=True)
class CertificateReport:
    applicable: bool
    max_equality_residual: float
    min_psd_eigenvalue: float
    gap: float
    passed: bool
    residuals: Dict[str, float] = field(default_factory=dict)

    def serialise(self) -> Dict[str, Any]:
        return {
            "applicable": self.applicable,
            "max_equality_residual": json_float(self.max_equality_residual),
            "min_psd_eigenvalue": json_float(self.min_psd_eigenvalue),
            "gap": json_float(self.gap),
            "passed": self.passed,
        }


def _value_map(sol: Solution) -> Dict[str, np.ndarray]:
    return {name: operator.matrix for name, operator in sol.primal_values.items()}


def verify_certificate(p: ConicProgram, sol: Solution, tol: float) -> CertificateReport:
    """Re-evaluate every constraint at the returned primal point in the complex domain."""

    if not sol.has_values:
        return CertificateReport(False, float("nan"), float("nan"), float("nan"), False)
    values = _value_map(sol)
    cache: Dict[int, np.ndarray] = {}
    residuals: Dict[str, float] = {}
    max_equality = 0.0
    for name, expr in p.equalities.items():
        residual = float(np.max(np.abs(expr._cached_evaluate(values, cache)), initial=0.0))
        residuals[name] = residual
        max_equality = max(max_equality, residual)
    min_eigenvalue = float("inf")
    conic_values = [(name, expr._cached_evaluate(values, cache)) for name, expr in p.psd_constraints.items()]
    conic_values += [(name, values[name]) for name, block in p.blocks.items() if block.kind.is_conic]
    for name, matrix in conic_values:
        matrix = np.asarray(matrix, dtype=complex)
        eigenvalue = float(scipy.linalg.eigvalsh((matrix + matrix.conj().T) / 2)[0])
        residuals[name] = eigenvalue
        min_eigenvalue = min(min_eigenvalue, eigenvalue)
    if min_eigenvalue == float("inf"):
        min_eigenvalue = 0.0
    objective = abs(sol.objective_value) if np.isfinite(sol.objective_value) else 0.0
    passed = (
        max_equality <= tol
        and min_eigenvalue >= -tol
        and sol.duality_gap <= tol * (1.0 + objective)
    )
    return CertificateReport(True, max_equality, min_eigenvalue, sol.duality_gap, passed, residuals)


# ---------------------------------------------------------------------------
# backend


class SolverBackend(Protocol):
    name: str

    def solve(self, program: RealConicProgram) -> Solution:
        ...


def _skew_map(dim: int) -> np.ndarray:
    pairs = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
    mapping = np.zeros((dim * dim, len(pairs)))
    for column, (i, j) in enumerate(pairs):
        mapping[i + j * dim, column] = 1.0
        mapping[j + i * dim, column] = -1.0
    return mapping


def _as_cvx(value: Any) -> cp.Expression:
    return value if _is_cvx(value) else cp.Constant(np.asarray(value, dtype=float))


def _materialise(part: _Part, dim: int) -> Any:
    return np.zeros((dim, dim)) if part is None else part


_CVXPY_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.INACCURATE,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


class CvxpyBackend:
    """Solve a RealConicProgram through cvxpy (Clarabel by default)."""

    def __init__(self, settings: Optional[SolverSettings] = None) -> None:
        self._settings = settings or SolverSettings()
        self.name = self._pick_solver(self._settings.backend)

    @staticmethod
    def _pick_solver(requested: str) -> str:
        installed = set(cp.installed_solvers())
        if requested in installed:
            return requested
        for fallback in ("CLARABEL", "SCS"):
            if fallback in installed:
                _LOGGER.warning("SDP backend %s is not installed; using %s", requested, fallback)
                return fallback
        raise SolverError(f"No semidefinite-capable cvxpy solver installed (requested {requested})")

    def _solver_options(self) -> Dict[str, Any]:
        settings = self._settings
        if self.name == "CLARABEL":
            return {
                "max_iter": settings.max_iterations,
                "tol_feas": settings.feasibility_tol,
                "tol_gap_abs": settings.gap_tol / 10,
                "tol_gap_rel": settings.gap_tol / 10,
            }
        if self.name == "SCS":
            return {
                "max_iters": settings.max_iterations * 100,
                "eps_abs": settings.feasibility_tol,
                "eps_rel": settings.feasibility_tol,
            }
        return {}

    def _declare(self, block: RealBlock, constraints: List[Tuple[str, cp.Constraint, Any]]) -> Tuple[_Pair, Tuple[Any, Any]]:
        d = block.hermitian_dim
        if block.kind.is_scalar:
            variable = cp.Variable((1, 1), name=block.name)
            if block.kind is BlockKind.NONNEG_SCALAR:
                constraints.append((block.name, variable >= 0, variable))
            return (variable, None), (variable, None)
        real = cp.Variable((d, d), symmetric=True, name=f"{block.name}_re")
        imag = None
        if d > 1:
            params = cp.Variable(d * (d - 1) // 2, name=f"{block.name}_im")
            imag = cp.reshape(_skew_map(d) @ params, (d, d), order="F")
        if block.kind is BlockKind.PSD_HERMITIAN:
            self._psd(block.name, (real, imag), d, constraints)
        return (real, imag), (real, imag)

    @staticmethod
    def _psd(name: str, parts: _Pair, dim: int, constraints: List[Tuple[str, cp.Constraint, Any]]) -> None:
        real, imag = parts
        real = _as_cvx(_materialise(real, dim))
        if dim == 1:
            constraints.append((name, real >= 0, real))
            return
        imag = _as_cvx(_materialise(imag, dim))
        embedded = cp.bmat([[real, -imag], [imag, real]])
        symmetric = (embedded + embedded.T) / 2
        constraints.append((name, symmetric >> 0, symmetric))

    @staticmethod
    def _equal(name: str, parts: _Pair, dim: int, constraints: List[Tuple[str, cp.Constraint, Any]]) -> None:
        real, imag = parts
        real = _as_cvx(_materialise(real, dim))
        if dim == 1:
            constraints.append((name, real == 0, real))
            return
        entries = [cp.diag(real), cp.upper_tri(real)]
        if imag is not None:
            entries.append(cp.upper_tri(_as_cvx(imag)))
        # upper_tri is a column on some cvxpy releases and 1-D on others
        stacked = cp.hstack([cp.reshape(entry, (entry.size,), order="F") for entry in entries])
        constraints.append((name, stacked == 0, stacked))

    def solve(self, program: RealConicProgram) -> Solution:
        source = program.source
        constraints: List[Tuple[str, cp.Constraint, Any]] = []
        env: Dict[str, _Pair] = {}
        handles: Dict[str, Tuple[Any, Any]] = {}
        for block in program.blocks:
            env[block.name], handles[block.name] = self._declare(block, constraints)
        cache: Dict[int, _Pair] = {}
        for name, expr in source.equalities.items():
            self._equal(name, program.split(expr, env, cache), expr.dim, constraints)
        for name, expr in source.psd_constraints.items():
            self._psd(name, program.split(expr, env, cache), expr.dim, constraints)
        objective_real, _ = program.split(source.objective, env, cache)
        objective = _as_cvx(_materialise(objective_real, 1))[0, 0]
        goal = cp.Minimize(objective) if source.sense == "min" else cp.Maximize(objective)
        problem = cp.Problem(goal, [constraint for _, constraint, _ in constraints])

        try:
            problem.solve(solver=self.name, verbose=self._settings.verbose, **self._solver_options())
        except cp.SolverError as exc:
            _LOGGER.debug("Backend %s failed on %s: %s", self.name, source.name, exc, exc_info=True)
            return Solution(source.name, SolveStatus.INACCURATE, {}, {}, float("nan"), float("inf"), self.name)

        status = _CVXPY_STATUS.get(problem.status, SolveStatus.INACCURATE)
        if status is SolveStatus.INFEASIBLE:
            value = float("inf") if source.sense == "min" else float("-inf")
            return Solution(source.name, status, {}, {}, value, 0.0, self.name)
        if status is SolveStatus.UNBOUNDED:
            value = float("-inf") if source.sense == "min" else float("inf")
            return Solution(source.name, status, {}, {}, value, 0.0, self.name)

        primal: Dict[str, HermitianOperator] = {}
        for block in program.blocks:
            real, imag = handles[block.name]
            if real.value is None:
                return Solution(source.name, SolveStatus.INACCURATE, {}, {}, float("nan"), float("inf"), self.name)
            matrix = np.asarray(real.value, dtype=complex)
            if imag is not None:
                matrix = matrix + 1j * np.asarray(imag.value, dtype=float)
            primal[block.name] = HermitianOperator(matrix, source.blocks[block.name].dims)

        duals: Dict[str, np.ndarray] = {}
        for name, constraint, _ in constraints:
            if constraint.dual_value is not None:
                duals[name] = np.asarray(constraint.dual_value, dtype=float)

        gap = self._objective_gap(problem)
        values = {name: operator.matrix for name, operator in primal.items()}
        objective_value = float(source.objective.evaluate(values)[0, 0].real)
        if abs(objective_value) > self._settings.unbounded_threshold:
            value = float("inf") if objective_value > 0 else float("-inf")
            return Solution(source.name, SolveStatus.UNBOUNDED, primal, duals, value, gap, self.name)
        return Solution(source.name, status, primal, duals, objective_value, gap, self.name)

    @staticmethod
    def _objective_gap(problem: cp.Problem) -> float:
        """|primal - dual objective| as reported by the backend."""

        stats = problem.solver_stats.extra_stats if problem.solver_stats is not None else None
        if stats is None:
            return 0.0
        if isinstance(stats, Mapping):
            return abs(float(stats.get("gap", 0.0)))
        primal_objective = getattr(stats, "obj_val", None)
        dual_objective = getattr(stats, "obj_val_dual", None)
        if primal_objective is None or dual_objective is None:
            return 0.0
        return abs(float(primal_objective) - float(dual_objective))


def solve(
    p: ConicProgram,
    s: Optional[SolverSettings] = None,
    backend: Optional[SolverBackend] = None,
) -> Solution:
    backend = backend or CvxpyBackend(s)
    solution = backend.solve(embed_real(p))
    _LOGGER.info(
        "Solved %s: status=%s objective=%.10g gap=%.2e",
        p.name,
        solution.status.value,
        solution.objective_value,
        solution.duality_gap,
    )
    if solution.status is SolveStatus.INACCURATE:
        _LOGGER.warning("Solve of %s is inaccurate", p.name)
    return solution


# ---------------------------------------------------------------------------
# plain-text dump


def _hermitian_basis(dim: int) -> List[Tuple[str, np.ndarray]]:
    basis: List[Tuple[str, np.ndarray]] = []
    for i in range(dim):
        for j in range(i, dim):
            element = np.zeros((dim, dim), dtype=complex)
            element[i, j] = element[j, i] = 1.0
            basis.append((f"re({i},{j})", element))
    for i in range(dim):
        for j in range(i + 1, dim):
            element = np.zeros((dim, dim), dtype=complex)
            element[i, j] = 1j
            element[j, i] = -1j
            basis.append((f"im({i},{j})", element))
    return basis


def dump_program(real: RealConicProgram, tol: float = 1e-14) -> str:
    """Render the embedded program as plain text.

    Sections: ``BLOCKS`` lists ``name kind hermitian_dim embedded_size``; ``OBJECTIVE`` lists
    ``block parameter coefficient`` plus a ``CONSTANT`` line; ``CONSTRAINTS`` lists
    ``constraint type block parameter row col value`` triplets over the upper triangle of the
    embedded constraint matrix, with ``block`` = ``CONSTANT`` for the offset. Hermitian block
    parameters are ``re(i,j)`` (i <= j) and ``im(i,j)`` (i < j) coordinates.
    """

    source = real.source
    zero = {block.name: np.zeros((block.dim, block.dim), dtype=complex) for block in source.blocks.values()}
    lines = [f"# embedded program {source.name}", f"SENSE {source.sense}", "BLOCKS"]
    for block in real.blocks:
        lines.append(f"{block.name} {block.kind.value} {block.hermitian_dim} {block.size}")

    def linear_parts(expr: Expr):
        offset = expr.evaluate(zero)
        yield "CONSTANT", "-", offset
        for block in source.blocks.values():
            for label, element in _hermitian_basis(block.dim):
                values = dict(zero)
                values[block.name] = element
                yield block.name, label, expr.evaluate(values) - offset

    lines.append("OBJECTIVE")
    for block_name, label, value in linear_parts(source.objective):
        coefficient = float(value[0, 0].real)
        if abs(coefficient) > tol:
            lines.append(f"{block_name} {label} {coefficient:.17g}")

    lines.append("CONSTRAINTS")
    typed = [(name, "eq", expr) for name, expr in source.equalities.items()]
    typed += [(name, "psd", expr) for name, expr in source.psd_constraints.items()]
    for name, kind, expr in typed:
        for block_name, label, value in linear_parts(expr):
            embedded = embed_hermitian(value)
            rows, cols = np.nonzero(np.triu(np.abs(embedded) > tol))
            for row, col in zip(rows, cols):
                lines.append(f"{name} {kind} {block_name} {label} {row} {col} {embedded[row, col]:.17g}")
    return "\n".join(lines) + "\n"
