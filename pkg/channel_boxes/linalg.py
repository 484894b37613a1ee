"""Dense complex linear algebra on Hermitian operators with tensor-factor bookkeeping."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import prod
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg


_LOGGER = logging.getLogger(__name__)

ComplexMatrix = np.ndarray

HERMITICITY_TOL = 1e-10
RANK_TOL = 1e-10
NEGATIVITY_TOL = 1e-6


class LinalgError(ValueError):
    """Raised for malformed operators, bad subsystem indices or undefined spectral maps."""


class Norms(NamedTuple):
    operator_norm: float
    trace_norm: float


def _hermiticity_defect(matrix: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(matrix), initial=0.0)))
    return float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0)) / scale


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Square Hermitian matrix together with the dimensions of its tensor factors."""

    matrix: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise LinalgError(f"Operator must be a square matrix, got shape {matrix.shape}")
        dims = tuple(int(d) for d in self.dims) if self.dims else (matrix.shape[0],)
        if any(d < 1 for d in dims) or prod(dims) != matrix.shape[0]:
            raise LinalgError(f"Subsystem dims {dims} do not multiply to {matrix.shape[0]}")
        defect = _hermiticity_defect(matrix)
        if defect > HERMITICITY_TOL:
            raise LinalgError(f"Operator is not Hermitian (defect {defect:.3e})")
        matrix = (matrix + matrix.conj().T) / 2
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_matrix(
        cls,
        matrix: ComplexMatrix,
        dims: Optional[Sequence[int]] = None,
        tol: float = HERMITICITY_TOL,
    ) -> "HermitianOperator":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise LinalgError(f"Operator must be a square matrix, got shape {matrix.shape}")
        defect = _hermiticity_defect(matrix)
        if defect > tol:
            raise LinalgError(f"Operator is not Hermitian within {tol:g} (defect {defect:.3e})")
        return cls((matrix + matrix.conj().T) / 2, tuple(dims) if dims else (matrix.shape[0],))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def with_dims(self, dims: Sequence[int]) -> "HermitianOperator":
        return HermitianOperator(self.matrix, tuple(dims))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same_dims(self, other)
        return HermitianOperator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _require_same_dims(self, other)
        return HermitianOperator(self.matrix - other.matrix, self.dims)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(float(scalar) * self.matrix, self.dims)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"HermitianOperator(dims={self.dims})"


def _require_same_dims(a: HermitianOperator, b: HermitianOperator) -> None:
    if a.dims != b.dims:
        raise LinalgError(f"Subsystem dims differ: {a.dims} vs {b.dims}")


def _check_indices(dims: Sequence[int], indices: Iterable[int]) -> List[int]:
    result = [int(i) for i in indices]
    for index in result:
        if index < 0 or index >= len(dims):
            raise LinalgError(f"Subsystem index {index} out of range for dims {tuple(dims)}")
    if len(set(result)) != len(result):
        raise LinalgError(f"Repeated subsystem index in {result}")
    return result


def identity(dim: int, dims: Optional[Sequence[int]] = None) -> HermitianOperator:
    return HermitianOperator(np.eye(dim, dtype=complex), tuple(dims) if dims else (dim,))


def kron(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    return HermitianOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims)


def kron_all(operators: Sequence[HermitianOperator]) -> HermitianOperator:
    if not operators:
        raise LinalgError("kron_all needs at least one operator")
    result = operators[0]
    for operator in operators[1:]:
        result = kron(result, operator)
    return result


def partial_trace(h: HermitianOperator, keep: Iterable[int]) -> HermitianOperator:
    """Trace out every subsystem not listed in ``keep``; kept factors stay in original order."""

    kept = sorted(_check_indices(h.dims, keep))
    traced = [i for i in range(len(h.dims)) if i not in kept]
    tensor = h.matrix.reshape(h.dims + h.dims)
    remaining = len(h.dims)
    for index in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=index, axis2=index + remaining)
        remaining -= 1
    kept_dims = tuple(h.dims[i] for i in kept) or (1,)
    size = prod(kept_dims)
    return HermitianOperator(np.asarray(tensor).reshape(size, size), kept_dims)


def permutation_indices(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Index map ``idx`` with ``v_new[k] = v_old[idx[k]]`` when factor k of the result is old factor perm[k]."""

    return np.arange(prod(dims)).reshape(tuple(dims)).transpose(tuple(perm)).reshape(-1)


def permute_subsystems(h: HermitianOperator, perm: Sequence[int]) -> HermitianOperator:
    perm = _check_indices(h.dims, perm)
    if len(perm) != len(h.dims):
        raise LinalgError(f"Permutation {perm} does not cover dims {h.dims}")
    idx = permutation_indices(h.dims, perm)
    return HermitianOperator(h.matrix[np.ix_(idx, idx)], tuple(h.dims[p] for p in perm))


def transpose_subsystem(h: HermitianOperator, targets: Iterable[int]) -> HermitianOperator:
    targets = _check_indices(h.dims, targets)
    n = len(h.dims)
    axes = list(range(2 * n))
    for index in targets:
        axes[index], axes[index + n] = axes[index + n], axes[index]
    tensor = h.matrix.reshape(h.dims + h.dims).transpose(axes)
    return HermitianOperator(tensor.reshape(h.dim, h.dim), h.dims)


def eig_hermitian(h: HermitianOperator) -> Tuple[np.ndarray, ComplexMatrix]:
    eigenvalues, eigenvectors = scipy.linalg.eigh(h.matrix)
    return eigenvalues, eigenvectors


def min_eigenvalue(h: HermitianOperator) -> float:
    return float(scipy.linalg.eigvalsh(h.matrix)[0])


def support_projector(h: HermitianOperator, rank_tol: float = RANK_TOL) -> HermitianOperator:
    eigenvalues, eigenvectors = eig_hermitian(h)
    if eigenvalues[0] < -NEGATIVITY_TOL:
        raise LinalgError(f"Operator has a significantly negative eigenvalue {eigenvalues[0]:.3e}")
    columns = eigenvectors[:, eigenvalues > rank_tol]
    return HermitianOperator(columns @ columns.conj().T, h.dims)


def spectral_fn(
    h: HermitianOperator,
    f: Callable[[np.ndarray], np.ndarray],
    on_support: bool = False,
    rank_tol: float = RANK_TOL,
) -> HermitianOperator:
    """Apply ``f`` to the eigenvalues of ``h``.

    With ``on_support`` the eigenvalues at or below ``rank_tol`` map to zero and ``f`` only
    sees the rest, which is how negative powers and logarithms are taken on supports.
    """

    eigenvalues, eigenvectors = eig_hermitian(h)
    if on_support:
        mask = eigenvalues > rank_tol
        mapped = np.zeros_like(eigenvalues)
        if np.any(mask):
            mapped[mask] = np.asarray(f(eigenvalues[mask]), dtype=float)
    else:
        with np.errstate(all="ignore"):
            mapped = np.asarray(f(eigenvalues), dtype=float)
    if not np.all(np.isfinite(mapped)):
        raise LinalgError("Spectral function is undefined at an eigenvalue; use on_support")
    return HermitianOperator((eigenvectors * mapped) @ eigenvectors.conj().T, h.dims)


def norms(h: HermitianOperator) -> Norms:
    eigenvalues = scipy.linalg.eigvalsh(h.matrix)
    magnitudes = np.abs(eigenvalues)
    return Norms(operator_norm=float(magnitudes.max()), trace_norm=float(magnitudes.sum()))


def max_entangled_vector(dim: int) -> np.ndarray:
    """Unnormalised vector sum_i |i>|i>."""

    return np.eye(dim, dtype=complex).reshape(-1)


def gamma_operator(dim: int) -> HermitianOperator:
    vector = max_entangled_vector(dim)
    return HermitianOperator(np.outer(vector, vector.conj()), (dim, dim))


def traceless_hermitian_basis(dim: int) -> List[np.ndarray]:
    """Generalised Gell-Mann matrices: dim**2 - 1 traceless Hermitian, mutually orthogonal."""

    basis: List[np.ndarray] = []
    for j in range(dim):
        for k in range(j + 1, dim):
            symmetric = np.zeros((dim, dim), dtype=complex)
            symmetric[j, k] = symmetric[k, j] = 1.0
            antisymmetric = np.zeros((dim, dim), dtype=complex)
            antisymmetric[j, k] = -1j
            antisymmetric[k, j] = 1j
            basis.extend([symmetric, antisymmetric])
    for level in range(1, dim):
        diagonal = np.zeros(dim, dtype=complex)
        diagonal[:level] = 1.0
        diagonal[level] = -level
        basis.append(np.sqrt(2.0 / (level * (level + 1))) * np.diag(diagonal))
    return basis


def to_pairs(matrix: ComplexMatrix) -> List[List[List[float]]]:
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def from_pairs(data: object) -> ComplexMatrix:
    """Decode a row-major nested list of ``[re, im]`` pairs."""

    try:
        array = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise LinalgError(f"Matrix entries must be numeric [re, im] pairs: {exc}") from exc
    if array.ndim != 3 or array.shape[2] != 2:
        raise LinalgError(f"Expected a rows x cols x 2 array of [re, im] pairs, got shape {array.shape}")
    return array[..., 0] + 1j * array[..., 1]
