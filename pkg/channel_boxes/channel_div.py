"""Channel divergences: diamond distance, channel min/max relative entropies and their
smoothed versions by semidefinite programming, plus heuristic and closed-form evaluations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from . import programs
from .config import HeuristicSettings, SolverSettings
from .linalg import RANK_TOL, max_entangled_vector, to_pairs
from .qobjects import (
    UNITARY_TOL,
    Channel,
    ChannelBox,
    CQBox,
    EnvBox,
    QState,
    QuantumObjectError,
    apply_channel,
    env_seize_check,
)
from .sdp import ConicProgram, Solution, SolveStatus, SolverError, json_float, solve
from .state_div import (
    INF,
    DivergenceError,
    DivergenceSelector,
    ExtendedReal,
    dmax,
    fidelity,
    state_divergence,
    trace_distance,
)


_LOGGER = logging.getLogger(__name__)

GAP_FACTOR = 10.0


@dataclass(slots=True)
class DivergenceReport:
    value: ExtendedReal
    status: str
    gap: float = 0.0
    certificate: Dict[str, Any] = field(default_factory=dict)
    infinity_source: Optional[str] = None
    best_input: Optional[np.ndarray] = None
    smoothed: Optional[Channel] = None
    solutions: Dict[str, Solution] = field(default_factory=dict)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def serialise(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "value": json_float(self.value),
            "status": self.status,
            "gap": json_float(self.gap),
            "certificate": self.certificate,
            "infinity_source": self.infinity_source,
        }
        if self.best_input is not None:
            payload["best_input"] = [[float(z.real), float(z.imag)] for z in self.best_input]
        if self.smoothed is not None:
            payload["smoothed_choi"] = to_pairs(self.smoothed.choi.matrix)
        return payload


# ---------------------------------------------------------------------------
# SDP-backed quantities


def _solve_checked(program: ConicProgram, settings: SolverSettings) -> Solution:
    solution = solve(program, settings)
    if solution.status is SolveStatus.INACCURATE and not solution.has_values:
        raise SolverError(f"{program.name}: backend returned no usable values")
    return solution


def solve_primal_dual(
    build_primal: Callable[[], ConicProgram],
    build_dual: Callable[[], ConicProgram],
    settings: SolverSettings,
) -> Tuple[Solution, Solution, float]:
    """Solve independently assembled primal and dual programs; re-solve once at tighter
    tolerance when their optima disagree."""

    for attempt in range(2):
        primal = _solve_checked(build_primal(), settings)
        dual = _solve_checked(build_dual(), settings)
        if not (primal.has_values and dual.has_values):
            return primal, dual, float("nan")
        gap = abs(primal.objective_value - dual.objective_value)
        tolerance = GAP_FACTOR * settings.gap_tol * (1.0 + abs(primal.objective_value))
        if gap <= tolerance or attempt == 1:
            if gap > tolerance:
                _LOGGER.warning("%s: primal/dual gap %.2e remains above %.2e", primal.program, gap, tolerance)
            return primal, dual, gap
        _LOGGER.warning("%s: primal/dual gap %.2e above %.2e; re-solving tighter", primal.program, gap, tolerance)
        settings = settings.tightened()
    raise AssertionError("unreachable")


def paired_status(primal: Solution, dual: Solution, gap: float, settings: SolverSettings) -> str:
    tolerance = GAP_FACTOR * settings.gap_tol * (1.0 + abs(primal.objective_value))
    if primal.status is SolveStatus.OPTIMAL and dual.status is SolveStatus.OPTIMAL and gap <= tolerance:
        return SolveStatus.OPTIMAL.value
    return SolveStatus.INACCURATE.value


def _certificate(primal: Solution, dual: Solution) -> Dict[str, Any]:
    return {"primal": primal.serialise(), "dual": dual.serialise()}


def _check_channels(n: Channel, m: Channel) -> None:
    if (n.in_dim, n.out_dim) != (m.in_dim, m.out_dim):
        raise QuantumObjectError(f"Channel dims differ: {(n.in_dim, n.out_dim)} vs {(m.in_dim, m.out_dim)}")


def diamond_distance(n: Channel, m: Channel, settings: Optional[SolverSettings] = None) -> DivergenceReport:
    """Half the diamond norm of N - M, in [0, 1]."""

    _check_channels(n, m)
    settings = settings or SolverSettings()
    primal, dual, gap = solve_primal_dual(
        lambda: programs.diamond_primal(n.choi, m.choi),
        lambda: programs.diamond_dual(n.choi, m.choi),
        settings,
    )
    if not primal.has_values:
        raise SolverError(f"diamond distance: primal status {primal.status.value}")
    value = min(1.0, max(0.0, primal.objective_value))
    return DivergenceReport(
        value=value,
        status=paired_status(primal, dual, gap, settings),
        gap=gap,
        certificate=_certificate(primal, dual),
        solutions={"primal": primal, "dual": dual},
    )


def channel_dmax(box: ChannelBox, rank_tol: float = RANK_TOL) -> ExtendedReal:
    """D_max of the two Choi states; the maximally entangled input attains the supremum."""

    return dmax(box.first.choi_state, box.second.choi_state, rank_tol)


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps < 1.0:
        raise DivergenceError(f"Smoothing parameter must lie in [0, 1), got {eps}")


def channel_dmin_eps(box: ChannelBox, eps: float, settings: Optional[SolverSettings] = None) -> DivergenceReport:
    _check_eps(eps)
    settings = settings or SolverSettings()
    gamma_n, gamma_m = box.chois
    primal, dual, gap = solve_primal_dual(
        lambda: programs.smooth_min_primal(gamma_n, gamma_m, eps),
        lambda: programs.smooth_min_dual(gamma_n, gamma_m, eps),
        settings,
    )
    if not primal.has_values:
        raise SolverError(f"smooth channel min-relative entropy: primal status {primal.status.value}")
    optimum = primal.objective_value
    report = DivergenceReport(
        value=INF,
        status=paired_status(primal, dual, gap, settings),
        gap=gap,
        certificate=_certificate(primal, dual),
        solutions={"primal": primal, "dual": dual},
    )
    report.certificate["eps"] = eps
    if optimum <= settings.zero_floor:
        report.infinity_source = "threshold-inferred"
        _LOGGER.info("Smooth min optimum %.3e at or below zero floor; reporting +inf", optimum)
    else:
        report.value = max(0.0, -math.log2(min(optimum, 1.0)))
    return report


def channel_dmin(box: ChannelBox, settings: Optional[SolverSettings] = None) -> DivergenceReport:
    return channel_dmin_eps(box, 0.0, settings)


def channel_dmax_eps(
    box: ChannelBox,
    eps: float,
    settings: Optional[SolverSettings] = None,
    rank_tol: float = RANK_TOL,
    validation_tol: float = 1e-6,
) -> DivergenceReport:
    """Smooth channel D_max; ``smoothed`` carries the optimal channel Ñ within ε of N."""

    _check_eps(eps)
    settings = settings or SolverSettings()
    if eps == 0.0 and math.isinf(channel_dmax(box, rank_tol)):
        return DivergenceReport(value=INF, status="exact", infinity_source="support", certificate={"eps": eps})
    gamma_n, gamma_m = box.chois
    primal, dual, gap = solve_primal_dual(
        lambda: programs.smooth_max_primal(gamma_n, gamma_m, eps),
        lambda: programs.smooth_max_dual(gamma_n, gamma_m, eps),
        settings,
    )
    certificate = _certificate(primal, dual)
    certificate["eps"] = eps
    if primal.status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        source = "threshold-inferred" if primal.primal_values else "solver-declared"
        return DivergenceReport(
            value=INF,
            status=primal.status.value,
            certificate=certificate,
            infinity_source=source,
            solutions={"primal": primal, "dual": dual},
        )
    if not primal.has_values:
        raise SolverError(f"smooth channel max-relative entropy: primal status {primal.status.value}")
    smoothed = Channel.from_choi(primal.value("y"), box.in_dim, box.out_dim, repair=True, tol=validation_tol)
    return DivergenceReport(
        value=math.log2(max(primal.objective_value, 1.0)),
        status=paired_status(primal, dual, gap, settings),
        gap=gap,
        certificate=certificate,
        smoothed=smoothed,
        solutions={"primal": primal, "dual": dual},
    )


# ---------------------------------------------------------------------------
# heuristics over pure inputs


class _InfiniteValue(Exception):
    def __init__(self, vector: np.ndarray) -> None:
        super().__init__("infinite objective")
        self.vector = vector


def _unit_vector(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    vector = x[:half] + 1j * x[half:]
    norm = np.linalg.norm(vector)
    if norm < 1e-12:
        vector = np.zeros(half, dtype=complex)
        vector[0] = 1.0
        return vector
    return vector / norm


@dataclass(slots=True)
class _SearchResult:
    value: float
    vector: np.ndarray
    restart: int


def _search_inputs(
    score: Callable[[np.ndarray], float],
    in_dim: int,
    restarts: int,
    seed: int,
    settings: HeuristicSettings,
    maximise: bool,
) -> _SearchResult:
    """Multi-restart L-BFGS-B over pure states on (R, A) with R ≅ A.

    Restart 0 starts from the maximally entangled vector; restart k > 0 draws its start from
    a generator seeded with (seed, k).
    """

    size = in_dim * in_dim
    sign = -1.0 if maximise else 1.0
    best: Optional[_SearchResult] = None

    def objective(x: np.ndarray) -> float:
        scaled = sign * score(_unit_vector(x))
        if scaled == -math.inf:
            raise _InfiniteValue(_unit_vector(x))
        # +inf marks the worst possible input for the minimiser
        return scaled

    for index in range(restarts):
        if index == 0:
            start = max_entangled_vector(in_dim) / math.sqrt(in_dim)
            x0 = np.concatenate([start.real, start.imag])
        else:
            x0 = np.random.default_rng([seed, index]).standard_normal(2 * size)
        try:
            start_value = objective(x0)
            result = scipy.optimize.minimize(
                objective,
                x0,
                method="L-BFGS-B",
                options={"maxiter": settings.max_iterations, "ftol": settings.step_tol, "gtol": settings.step_tol},
            )
        except _InfiniteValue as exc:
            _LOGGER.debug("Restart %d reached an infinite divergence", index)
            return _SearchResult(-sign * INF, exc.vector, index)
        x_best, f_best = (result.x, float(result.fun)) if result.fun <= start_value else (x0, start_value)
        candidate = _SearchResult(sign * f_best, _unit_vector(x_best), index)
        if best is None or sign * candidate.value < sign * best.value:
            best = candidate
    assert best is not None
    return best


def _input_state(vector: np.ndarray, in_dim: int) -> QState:
    return QState.from_vector(vector, (in_dim, in_dim))


def channel_div_heuristic(
    div: DivergenceSelector,
    box: ChannelBox,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[HeuristicSettings] = None,
    rank_tol: float = RANK_TOL,
) -> DivergenceReport:
    """Lower bound on a generalised channel divergence from the best pure input found."""

    settings = settings or HeuristicSettings()
    restarts = settings.restarts if restarts is None else restarts
    seed = settings.seed if seed is None else seed
    if restarts < 1:
        raise DivergenceError("At least one restart is required")
    in_dim = box.in_dim

    def score(vector: np.ndarray) -> float:
        probe = _input_state(vector, in_dim)
        return state_divergence(div, apply_channel(box.first, probe), apply_channel(box.second, probe), rank_tol)

    found = _search_inputs(score, in_dim, restarts, seed, settings, maximise=True)
    return DivergenceReport(
        value=found.value,
        status="heuristic",
        certificate={
            "method": "multi-restart L-BFGS-B",
            "divergence": str(div),
            "restarts": restarts,
            "seed": seed,
            "best_restart": found.restart,
        },
        infinity_source="support" if math.isinf(found.value) else None,
        best_input=found.vector,
    )


def channel_fidelity_heuristic(
    n0: Channel,
    n1: Channel,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[HeuristicSettings] = None,
) -> float:
    """Upper bound on the channel fidelity: the least output fidelity found over pure inputs."""

    _check_channels(n0, n1)
    settings = settings or HeuristicSettings()
    restarts = settings.restarts if restarts is None else restarts
    seed = settings.seed if seed is None else seed

    def score(vector: np.ndarray) -> float:
        probe = _input_state(vector, n0.in_dim)
        return fidelity(apply_channel(n0, probe), apply_channel(n1, probe))

    found = _search_inputs(score, n0.in_dim, restarts, seed, settings, maximise=False)
    return min(1.0, max(0.0, found.value))


# ---------------------------------------------------------------------------
# closed forms


def cq_divergence(cq: CQBox, div: DivergenceSelector, rank_tol: float = RANK_TOL) -> ExtendedReal:
    if div.kind == "diamond":
        return max(trace_distance(rho, sigma) for rho, sigma in cq.pairs)
    return max(state_divergence(div, rho, sigma, rank_tol) for rho, sigma in cq.pairs)


def env_seizable_divergence(e: EnvBox, div: DivergenceSelector, rank_tol: float = RANK_TOL) -> ExtendedReal:
    report = env_seize_check(e)
    if not report.passed:
        raise DivergenceError(f"Environment box is not seizable with the supplied data: {report.serialise()}")
    rho_e, sigma_e = e.env_states
    return state_divergence(div, rho_e, sigma_e, rank_tol)


def unitary_dmin(u: Any) -> ExtendedReal:
    """-log2 of the squared distance from 0 to the convex hull of the eigenvalues of ``u``."""

    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise QuantumObjectError(f"Unitary must be square, got shape {u.shape}")
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if defect > UNITARY_TOL:
        raise QuantumObjectError(f"Matrix is not unitary (defect {defect:.3e})")
    angles = np.sort(np.mod(np.angle(scipy.linalg.eigvals(u)), 2 * math.pi))
    gaps = np.diff(np.concatenate([angles, angles[:1] + 2 * math.pi]))
    largest_gap = float(np.max(gaps))
    if largest_gap <= math.pi + 1e-12:
        return INF
    span = 2 * math.pi - largest_gap
    distance_squared = math.cos(span / 2) ** 2
    return max(0.0, -math.log2(distance_squared))


@dataclass(slots=True)
class SmoothingRow:
    eps: float
    dmin_eps: ExtendedReal
    dmax_eps: ExtendedReal

    def serialise(self) -> Dict[str, Any]:
        return {"eps": self.eps, "dmin_eps": json_float(self.dmin_eps), "dmax_eps": json_float(self.dmax_eps)}


@dataclass(slots=True)
class SmoothingTable:
    rows: List[SmoothingRow]
    dmin: ExtendedReal
    dmax: ExtendedReal
    dmin_monotone: bool
    dmax_monotone: bool
    final_gap: float
    passed: bool

    def serialise(self) -> Dict[str, Any]:
        return {
            "rows": [row.serialise() for row in self.rows],
            "dmin": json_float(self.dmin),
            "dmax": json_float(self.dmax),
            "dmin_monotone": self.dmin_monotone,
            "dmax_monotone": self.dmax_monotone,
            "final_gap": json_float(self.final_gap),
            "passed": self.passed,
        }


def _difference(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and a == b:
        return 0.0
    return abs(a - b)


def smoothing_limit_check(
    box: ChannelBox,
    eps_grid: Sequence[float],
    settings: Optional[SolverSettings] = None,
    slack: float = 1e-6,
    limit_tol: float = 1e-2,
) -> SmoothingTable:
    grid = [float(eps) for eps in eps_grid]
    if not grid or any(not 0.0 < eps < 1.0 for eps in grid):
        raise DivergenceError("Smoothing grid values must lie in (0, 1)")
    if any(later >= earlier for earlier, later in zip(grid, grid[1:])):
        raise DivergenceError("Smoothing grid must be strictly descending")
    settings = (settings or SolverSettings()).tightened()
    rows = [
        SmoothingRow(eps, channel_dmin_eps(box, eps, settings).value, channel_dmax_eps(box, eps, settings).value)
        for eps in grid
    ]
    exact_min = channel_dmin(box, settings).value
    exact_max = channel_dmax(box)
    # as eps decreases the smooth min falls toward D_min and the smooth max rises toward D_max
    dmin_monotone = all(b.dmin_eps <= a.dmin_eps + slack for a, b in zip(rows, rows[1:]))
    dmax_monotone = all(b.dmax_eps >= a.dmax_eps - slack for a, b in zip(rows, rows[1:]))
    final = rows[-1]
    final_gap = max(_difference(final.dmin_eps, exact_min), _difference(final.dmax_eps, exact_max))
    passed = dmin_monotone and dmax_monotone and final_gap <= limit_tol
    return SmoothingTable(rows, exact_min, exact_max, dmin_monotone, dmax_monotone, final_gap, passed)
