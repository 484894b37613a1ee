"""State divergences: trace distance, fidelity, relative entropies, Rényi families and the
smoothed min/max relative entropies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import programs
from .config import SolverSettings
from .linalg import (
    HermitianOperator,
    RANK_TOL,
    eig_hermitian,
    norms,
    spectral_fn,
    support_projector,
)
from .qobjects import QState
from .sdp import Solution, SolveStatus, SolverError, solve


_LOGGER = logging.getLogger(__name__)

INF = math.inf

ExtendedReal = float

SELECTOR_KINDS = ("relative", "petz", "sandwiched", "fidelity", "dmin", "dmax", "trace", "diamond")


class DivergenceError(ValueError):
    """Raised for out-of-range orders or smoothing parameters and unmet support preconditions."""


def _check_pair(rho: QState, sigma: QState) -> None:
    if rho.dim != sigma.dim:
        raise DivergenceError(f"State dimensions differ: {rho.dim} vs {sigma.dim}")


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps < 1.0:
        raise DivergenceError(f"Smoothing parameter must lie in [0, 1), got {eps}")


# eigenvalues below this multiple of the spectral radius are solver noise
SPECTRAL_NOISE = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class _SigmaSupport:
    """Eigenpairs of σ counted as its support relative to ρ, and ρ's weight outside them."""

    values: np.ndarray
    vectors: np.ndarray
    leak: float

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return (self.vectors * np.asarray(f(self.values), dtype=float)) @ self.vectors.conj().T


def _sigma_support(rho: QState, sigma: QState, rank_tol: float) -> _SigmaSupport:
    """An eigendirection of σ is kept when its eigenvalue exceeds ``rank_tol`` or is small
    but still above ``rank_tol`` times ρ's weight along it and above the noise floor."""

    values, vectors = eig_hermitian(sigma.density)
    weights = np.real(np.einsum("ji,jk,ki->i", vectors.conj(), rho.matrix, vectors))
    noise = SPECTRAL_NOISE * max(1.0, float(np.max(np.abs(values))))
    kept = (values > rank_tol) | ((values > noise) & (values > rank_tol * weights))
    leak = float(np.sum(np.clip(weights[~kept], 0.0, None)))
    return _SigmaSupport(values[kept], vectors[:, kept], leak)


def _supported(support: _SigmaSupport, rank_tol: float) -> bool:
    return support.leak <= rank_tol


def trace_distance(rho: QState, sigma: QState) -> float:
    _check_pair(rho, sigma)
    return 0.5 * norms(rho.density - sigma.density).trace_norm


def fidelity(rho: QState, sigma: QState) -> float:
    _check_pair(rho, sigma)
    root_rho = spectral_fn(rho.density, lambda values: np.sqrt(np.clip(values, 0.0, None)))
    root_sigma = spectral_fn(sigma.density, lambda values: np.sqrt(np.clip(values, 0.0, None)))
    overlap = float(np.sum(scipy.linalg.svdvals(root_rho.matrix @ root_sigma.matrix)))
    return min(1.0, overlap**2)


def dmin(rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> ExtendedReal:
    _check_pair(rho, sigma)
    overlap = float(np.real(np.trace(support_projector(rho.density, rank_tol).matrix @ sigma.matrix)))
    if overlap <= rank_tol:
        return INF
    return -math.log2(min(overlap, 1.0))


def dmax(rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> ExtendedReal:
    _check_pair(rho, sigma)
    support = _sigma_support(rho, sigma, rank_tol)
    if not _supported(support, rank_tol):
        return INF
    inverse_root = support.apply(lambda values: values**-0.5)
    sandwich = inverse_root @ rho.matrix @ inverse_root
    largest = float(scipy.linalg.eigvalsh((sandwich + sandwich.conj().T) / 2)[-1])
    return math.log2(largest)


def _log2_on_support(h: HermitianOperator, rank_tol: float) -> np.ndarray:
    return spectral_fn(h, np.log2, on_support=True, rank_tol=rank_tol).matrix


def _log_ratio(rho: QState, support: _SigmaSupport, rank_tol: float) -> np.ndarray:
    return _log2_on_support(rho.density, rank_tol) - support.apply(np.log2)


def rel_entropy(rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> ExtendedReal:
    _check_pair(rho, sigma)
    support = _sigma_support(rho, sigma, rank_tol)
    if not _supported(support, rank_tol):
        return INF
    return float(np.real(np.trace(rho.matrix @ _log_ratio(rho, support, rank_tol))))


def renyi(kind: str, alpha: float, rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> ExtendedReal:
    """Petz or sandwiched Rényi relative entropy of order ``alpha``."""

    _check_pair(rho, sigma)
    if alpha == 1.0:
        raise DivergenceError("Order 1 is the relative entropy; use rel_entropy")
    if alpha <= 0:
        raise DivergenceError(f"Rényi order must be positive, got {alpha}")
    if kind not in ("petz", "sandwiched"):
        raise DivergenceError(f"Unknown Rényi family '{kind}'")
    support = _sigma_support(rho, sigma, rank_tol)
    if alpha > 1 and not _supported(support, rank_tol):
        return INF

    if kind == "petz":
        rho_power = spectral_fn(rho.density, lambda values: values**alpha, on_support=True, rank_tol=rank_tol)
        quasi = float(np.real(np.trace(rho_power.matrix @ support.apply(lambda values: values ** (1.0 - alpha)))))
    else:
        outer = support.apply(lambda values: values ** ((1.0 - alpha) / (2.0 * alpha)))
        inner = outer @ rho.matrix @ outer
        eigenvalues = scipy.linalg.eigvalsh((inner + inner.conj().T) / 2)
        quasi = float(np.sum(np.clip(eigenvalues, 0.0, None) ** alpha))
    if quasi <= 0:
        return INF if alpha < 1 else -INF
    return math.log2(quasi) / (alpha - 1.0)


def rel_ent_variance(rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> float:
    _check_pair(rho, sigma)
    support = _sigma_support(rho, sigma, rank_tol)
    if not _supported(support, rank_tol):
        raise DivergenceError("Relative entropy variance needs supp(rho) within supp(sigma)")
    divergence = rel_entropy(rho, sigma, rank_tol)
    centred = _log_ratio(rho, support, rank_tol) - divergence * np.eye(rho.dim)
    return max(0.0, float(np.real(np.trace(rho.matrix @ centred @ centred))))


# ---------------------------------------------------------------------------
# smoothed quantities


@dataclass(slots=True)
class HypothesisTestResult:
    value: ExtendedReal
    effect: Optional[HermitianOperator]
    solution: Solution


def _usable(solution: Solution) -> None:
    if solution.status is SolveStatus.INACCURATE and not solution.has_values:
        raise SolverError(f"{solution.program}: backend returned no usable values")


def hypothesis_test_witness(
    rho: QState,
    sigma: QState,
    eps: float,
    settings: Optional[SolverSettings] = None,
) -> HypothesisTestResult:
    _check_pair(rho, sigma)
    _check_eps(eps)
    settings = settings or SolverSettings()
    solution = solve(programs.hypothesis_test(rho.density, sigma.density, eps), settings)
    _usable(solution)
    if not solution.has_values:
        raise SolverError(f"{solution.program}: unexpected status {solution.status.value}")
    optimum = solution.objective_value
    value = INF if optimum <= settings.zero_floor else -math.log2(min(optimum, 1.0))
    return HypothesisTestResult(value, solution.value("effect"), solution)


def dmin_eps(
    rho: QState,
    sigma: QState,
    eps: float,
    settings: Optional[SolverSettings] = None,
) -> ExtendedReal:
    return hypothesis_test_witness(rho, sigma, eps, settings).value


def dmax_eps(
    rho: QState,
    sigma: QState,
    eps: float,
    settings: Optional[SolverSettings] = None,
) -> ExtendedReal:
    """Smooth max-relative entropy, smoothing in trace distance over normalised states."""

    _check_pair(rho, sigma)
    _check_eps(eps)
    settings = settings or SolverSettings()
    gamma_rho = rho.density.with_dims((1, rho.dim))
    gamma_sigma = sigma.density.with_dims((1, sigma.dim))
    solution = solve(programs.smooth_max_primal(gamma_rho, gamma_sigma, eps), settings)
    if solution.status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        return INF
    _usable(solution)
    return math.log2(max(solution.objective_value, 1.0))


# ---------------------------------------------------------------------------
# selectors


@dataclass(frozen=True)
class DivergenceSelector:
    kind: str
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in SELECTOR_KINDS:
            raise DivergenceError(f"Unknown divergence '{self.kind}'")
        if self.kind in ("petz", "sandwiched"):
            if self.alpha is None:
                raise DivergenceError(f"Divergence '{self.kind}' needs an order, e.g. '{self.kind}:0.5'")
            if self.alpha <= 0 or self.alpha == 1.0:
                raise DivergenceError(f"Invalid Rényi order {self.alpha}")
        elif self.alpha is not None:
            raise DivergenceError(f"Divergence '{self.kind}' takes no order")

    @classmethod
    def parse(cls, text: str) -> "DivergenceSelector":
        kind, _, order = text.strip().lower().partition(":")
        if not order:
            return cls(kind)
        try:
            alpha = float(order)
        except ValueError as exc:
            raise DivergenceError(f"Invalid order in selector '{text}'") from exc
        return cls(kind, alpha)

    def __str__(self) -> str:
        return self.kind if self.alpha is None else f"{self.kind}:{self.alpha:g}"


def state_divergence(selector: DivergenceSelector, rho: QState, sigma: QState, rank_tol: float = RANK_TOL) -> ExtendedReal:
    kind = selector.kind
    if kind == "relative":
        return rel_entropy(rho, sigma, rank_tol)
    if kind in ("petz", "sandwiched"):
        return renyi(kind, selector.alpha, rho, sigma, rank_tol)
    if kind == "fidelity":
        value = fidelity(rho, sigma)
        return INF if value <= 0 else -math.log2(value)
    if kind == "dmin":
        return dmin(rho, sigma, rank_tol)
    if kind == "dmax":
        return dmax(rho, sigma, rank_tol)
    if kind in ("trace", "diamond"):
        return trace_distance(rho, sigma)
    raise DivergenceError(f"No state evaluation for divergence '{kind}'")
