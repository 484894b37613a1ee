"""Channel-box transformations: the general transformation SDP, distillation and dilution to
and from the standard box with witnessing superchannels, and the inequality suite."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from . import programs
from .channel_div import (
    channel_div_heuristic,
    channel_dmax,
    channel_dmax_eps,
    channel_dmin,
    channel_dmin_eps,
    channel_fidelity_heuristic,
    cq_divergence,
    diamond_distance,
    paired_status,
    solve_primal_dual,
)
from .config import Settings
from .linalg import HermitianOperator, eig_hermitian, gamma_operator, permute_subsystems, spectral_fn
from .qobjects import (
    Channel,
    ChannelBox,
    CQBox,
    QState,
    QuantumObjectError,
    Superchannel,
    SuperchannelReport,
    apply_superchannel,
    basis_state,
    channel_from_kraus,
    compose_superchannels,
    measure_prepare_channel,
    replacer,
    standard_box,
    superchannel_from_pre_post,
    tensor_channels,
    unitary_channel,
    validate_superchannel,
)
from .sdp import Solution, SolveStatus, json_float
from .specs import superchannel_to_json
from .state_div import INF, DivergenceError, DivergenceSelector, ExtendedReal


_LOGGER = logging.getLogger(__name__)

CERTIFIED = "certified"
CONSISTENCY_CHECK = "consistency check"

CERTIFIED_SLACK = 1e-6
HEURISTIC_SLACK = 1e-4

MIXTURE_FLOOR = 1e-9


class TransformError(RuntimeError):
    """Raised when a box transformation cannot be computed."""


class InfeasibleTransformError(TransformError):
    """Raised when no superchannel maps the second source channel onto the second target channel."""


@dataclass(slots=True)
class TransformResult:
    epsilon_star: float
    superchannel: Superchannel
    primal_dual_gap: float
    status: str
    validation: SuperchannelReport
    solutions: Dict[str, Solution] = field(default_factory=dict)

    def serialise(self) -> Dict[str, Any]:
        return {
            "epsilon_star": json_float(self.epsilon_star),
            "primal_dual_gap": json_float(self.primal_dual_gap),
            "status": self.status,
            "validation": self.validation.serialise(),
            "superchannel": superchannel_to_json(self.superchannel),
        }


@dataclass(slots=True)
class ProtocolResult:
    """Outcome of a distillation or dilution; ``superchannel`` is None when the box is perfectly
    distinguishable."""

    log2M: ExtendedReal
    superchannel: Optional[Superchannel]
    task: str
    epsilon: float
    source: Optional[ChannelBox] = None
    target: Optional[ChannelBox] = None
    status: str = SolveStatus.OPTIMAL.value

    @property
    def perfectly_distinguishable(self) -> bool:
        return self.superchannel is None and math.isinf(self.log2M)

    def serialise(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "epsilon": self.epsilon,
            "log2M": json_float(self.log2M),
            "status": self.status,
            "perfectly_distinguishable": self.perfectly_distinguishable,
            "superchannel": None if self.superchannel is None else superchannel_to_json(self.superchannel),
        }


@dataclass(slots=True)
class BoundReport:
    name: str
    lhs: ExtendedReal
    rhs: ExtendedReal
    slack: float
    passed: bool
    label: str
    details: Dict[str, Any] = field(default_factory=dict)

    def serialise(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "lhs": json_float(self.lhs),
            "rhs": json_float(self.rhs),
            "slack": json_float(self.slack),
            "passed": self.passed,
            "label": self.label,
            "details": {key: json_float(value) if isinstance(value, float) else value for key, value in self.details.items()},
        }


@dataclass(slots=True)
class TwoStepResult:
    applicable: bool
    distill_value: ExtendedReal
    dilute_value: ExtendedReal
    epsilon_first: Optional[float] = None
    second_residual: Optional[float] = None
    superchannel: Optional[Superchannel] = None
    reason: Optional[str] = None

    def serialise(self) -> Dict[str, Any]:
        return {
            "applicable": self.applicable,
            "distill_value": json_float(self.distill_value),
            "dilute_value": json_float(self.dilute_value),
            "epsilon_first": None if self.epsilon_first is None else json_float(self.epsilon_first),
            "second_residual": None if self.second_residual is None else json_float(self.second_residual),
            "reason": self.reason,
            "superchannel": None if self.superchannel is None else superchannel_to_json(self.superchannel),
        }


@dataclass(slots=True)
class ParallelRow:
    copies: int
    dmin_per_copy: ExtendedReal
    dmax_per_copy: ExtendedReal

    def serialise(self) -> Dict[str, Any]:
        return {
            "copies": self.copies,
            "dmin_per_copy": json_float(self.dmin_per_copy),
            "dmax_per_copy": json_float(self.dmax_per_copy),
        }


# ---------------------------------------------------------------------------
# general transformation


def _transform_dims(source: ChannelBox, target: ChannelBox) -> Tuple[int, int, int, int]:
    return target.in_dim, source.out_dim, source.in_dim, target.out_dim


def transform_error(source: ChannelBox, target: ChannelBox, settings: Optional[Settings] = None) -> TransformResult:
    """Least ε with Θ(source.second) = target.second and Θ(source.first) ≈_ε target.first."""

    settings = settings or Settings()
    solver = settings.solver
    tolerance = settings.boxes.validation_tol
    dims = _transform_dims(source, target)
    for attempt in range(2):
        primal, dual, gap = solve_primal_dual(
            lambda: programs.box_transform_primal(source.chois, target.chois),
            lambda: programs.box_transform_dual(source.chois, target.chois),
            solver,
        )
        if primal.status is SolveStatus.INFEASIBLE or dual.status is SolveStatus.UNBOUNDED:
            raise InfeasibleTransformError("No superchannel maps the second source channel onto the second target channel")
        if not primal.has_values:
            raise TransformError(f"Box transformation solve failed with status {primal.status.value}")
        theta = Superchannel(dims, primal.value("theta"))
        validation = validate_superchannel(theta, tolerance)
        if validation.passed or attempt == 1:
            break
        _LOGGER.warning("Extracted superchannel fails validation %s; re-solving tighter", validation.serialise())
        solver = solver.tightened()

    accurate = validation.passed and paired_status(primal, dual, gap, solver) == SolveStatus.OPTIMAL.value
    return TransformResult(
        epsilon_star=min(1.0, max(0.0, primal.objective_value)),
        superchannel=theta,
        primal_dual_gap=gap,
        status=SolveStatus.OPTIMAL.value if accurate else SolveStatus.INACCURATE.value,
        validation=validation,
        solutions={"primal": primal, "dual": dual},
    )


def verify_protocol(
    theta: Superchannel,
    source: ChannelBox,
    target: ChannelBox,
    settings: Optional[Settings] = None,
) -> Tuple[float, float]:
    """Diamond distances of Θ(source.first) from target.first and Θ(source.second) from target.second."""

    settings = settings or Settings()
    if theta.source_dims != (source.in_dim, source.out_dim) or theta.target_dims != (target.in_dim, target.out_dim):
        raise QuantumObjectError(
            f"Superchannel dims {theta.dims} do not fit source {(source.in_dim, source.out_dim)} "
            f"and target {(target.in_dim, target.out_dim)}"
        )
    tolerance = settings.boxes.validation_tol
    first = apply_superchannel(theta, source.first, tolerance)
    second = apply_superchannel(theta, source.second, tolerance)
    eps_first = diamond_distance(first, target.first, settings.solver).value
    second_residual = diamond_distance(second, target.second, settings.solver).value
    return eps_first, second_residual


# ---------------------------------------------------------------------------
# distillation


def _clip_effect(effect: HermitianOperator) -> HermitianOperator:
    values, vectors = eig_hermitian(effect)
    clipped = (vectors * np.clip(values, 0.0, 1.0)) @ vectors.conj().T
    return HermitianOperator.from_matrix(clipped, effect.dims, tol=1e-8)


def _distillation_superchannel(
    box: ChannelBox,
    rho: HermitianOperator,
    omega: HermitianOperator,
    eps: float,
    in_dim: int,
    rank_tol: float,
) -> Tuple[Superchannel, float]:
    """Prepare ψ on (A, R) and measure {Λ, I - Λ} on (B, R); return Θ and Tr[Λ M(ψ)].

    Λ is mixed toward the identity when solver error leaves Tr[Λ N(ψ)] below 1 - eps.
    """

    d_a, d_b = box.in_dim, box.out_dim
    root = spectral_fn(rho, lambda values: np.sqrt(np.clip(values, 0.0, None)))
    inverse_root = spectral_fn(rho, lambda values: values**-0.5, on_support=True, rank_tol=rank_tol)

    lift = np.kron(root.matrix, np.eye(d_a))
    psi = lift @ gamma_operator(d_a).matrix @ lift.conj().T
    psi_ar = permute_subsystems(HermitianOperator.from_matrix(psi, (d_a, d_a), tol=1e-8), (1, 0))

    sandwich = np.kron(inverse_root.matrix, np.eye(d_b))
    effect = _clip_effect(
        HermitianOperator.from_matrix(sandwich @ omega.matrix @ sandwich.conj().T, (d_a, d_b), tol=1e-7)
    )

    reduced = np.kron(root.matrix, np.eye(d_b))
    first_output = reduced @ box.first.choi.matrix @ reduced.conj().T
    second_output = reduced @ box.second.choi.matrix @ reduced.conj().T
    accepted = float(np.real(np.trace(effect.matrix @ first_output)))
    first_weight = float(np.real(np.trace(first_output)))
    if accepted < first_weight * (1.0 - eps):
        mix = (first_weight * (1.0 - eps) - accepted) / (first_weight - accepted)
        _LOGGER.debug("Acceptance %.3e below %.3e; mixing the test effect by %.3e", accepted, 1.0 - eps, mix)
        effect = HermitianOperator((1.0 - mix) * effect.matrix + mix * np.eye(d_a * d_b), effect.dims)
    effect_br = permute_subsystems(effect, (1, 0))

    pre = replacer(QState.from_matrix(psi_ar.matrix / psi_ar.trace(), (d_a * d_a,)), in_dim)
    rest = np.eye(d_a * d_b) - effect_br.matrix
    post = measure_prepare_channel([effect_br.matrix, rest], [basis_state(2, 0), basis_state(2, 1)])
    theta = superchannel_from_pre_post(pre, post, memory_dim=d_a)

    overlap = float(np.real(np.trace(effect.matrix @ second_output)))
    return theta, overlap


def distill_eps(box: ChannelBox, eps: float, settings: Optional[Settings] = None) -> ProtocolResult:
    settings = settings or Settings()
    report = channel_dmin_eps(box, eps, settings.solver)
    if math.isinf(report.value):
        _LOGGER.info("Box is perfectly distinguishable at eps=%g; no finite distillation protocol", eps)
        return ProtocolResult(INF, None, "distill", eps, source=box, status="perfectly distinguishable")
    primal = report.solutions["primal"]
    in_dim = settings.boxes.standard_in_dim
    theta, overlap = _distillation_superchannel(
        box, primal.value("rho"), primal.value("omega"), eps, in_dim, settings.linalg.rank_tol
    )
    target = standard_box(1.0 / min(1.0, max(overlap, MIXTURE_FLOOR)), in_dim)
    return ProtocolResult(report.value, theta, "distill", eps, source=box, target=target, status=report.status)


def distill_exact(box: ChannelBox, settings: Optional[Settings] = None) -> ProtocolResult:
    return distill_eps(box, 0.0, settings)


# ---------------------------------------------------------------------------
# dilution


def _complement_channel(box: ChannelBox, lam: float, tol: float) -> Channel:
    """N' = (2^λ M - N) / (2^λ - 1), so that 2^-λ N + (1 - 2^-λ) N' = M."""

    scale = 2.0**lam
    if scale - 1.0 < MIXTURE_FLOOR:
        return box.second
    choi = (scale * box.second.choi.matrix - box.first.choi.matrix) / (scale - 1.0)
    return Channel.from_choi(choi, box.in_dim, box.out_dim, tol=tol)


def _dilution_superchannel(box: ChannelBox, lam: float, in_dim: int, tol: float) -> Superchannel:
    d_c, d_d = box.in_dim, box.out_dim
    complement = _complement_channel(box, lam, tol)
    ground = np.zeros((in_dim, 1), dtype=complex)
    ground[0, 0] = 1.0
    pre = channel_from_kraus([np.kron(ground, np.eye(d_c))], d_c, in_dim * d_c)
    controlled = np.kron(np.diag([1.0, 0.0]), box.first.choi.matrix) + np.kron(
        np.diag([0.0, 1.0]), complement.choi.matrix
    )
    post = Channel(2 * d_c, d_d, HermitianOperator.from_matrix(controlled, (2 * d_c, d_d)), tol=tol)
    return superchannel_from_pre_post(pre, post, memory_dim=d_c)


def dilute_exact(box: ChannelBox, settings: Optional[Settings] = None) -> ProtocolResult:
    settings = settings or Settings()
    lam = channel_dmax(box, settings.linalg.rank_tol)
    if math.isinf(lam):
        raise DivergenceError("Dilution needs a finite channel max-relative entropy")
    lam = max(lam, 0.0)
    in_dim = settings.boxes.standard_in_dim
    theta = _dilution_superchannel(box, lam, in_dim, settings.boxes.validation_tol)
    return ProtocolResult(lam, theta, "dilute", 0.0, source=standard_box(2.0**lam, in_dim), target=box)


def dilute_eps(box: ChannelBox, eps: float, settings: Optional[Settings] = None) -> ProtocolResult:
    """Dilution of the smoothed box (Ñ, M); the reported cost is the smooth max value."""

    settings = settings or Settings()
    if eps == 0.0:
        return dilute_exact(box, settings)
    report = channel_dmax_eps(box, eps, settings.solver, settings.linalg.rank_tol, settings.boxes.validation_tol)
    if math.isinf(report.value) or report.smoothed is None:
        raise DivergenceError(f"Dilution needs a finite smooth channel max-relative entropy at eps={eps}")
    exact = dilute_exact(ChannelBox(report.smoothed, box.second), settings)
    return ProtocolResult(
        report.value,
        exact.superchannel,
        "dilute",
        eps,
        source=exact.source,
        target=box,
        status=report.status,
    )


# ---------------------------------------------------------------------------
# tensor powers and two-step protocols


def tensor_power_box(box: ChannelBox, n: int, cap: int = 256) -> ChannelBox:
    if n < 1:
        raise QuantumObjectError(f"Tensor power needs n >= 1, got {n}")
    size = (box.in_dim * box.out_dim) ** n
    if size > cap:
        raise QuantumObjectError(f"Tensor power {n} has Choi dimension {size} above the cap {cap}")
    first, second = box.first, box.second
    for _ in range(n - 1):
        first = tensor_channels(first, box.first)
        second = tensor_channels(second, box.second)
    return ChannelBox(first, second)


def standard_box_coarse_graining(K: float, M: float, in_dim: int = 2) -> Superchannel:
    """Classical post-processing taking (R_0, R_{π_K}) to (R_0, R_{π_M}) for M <= K."""

    if M < 1 or K < 1:
        raise QuantumObjectError(f"Standard boxes need K, M >= 1, got K={K}, M={M}")
    if M > K * (1.0 + 1e-12):
        raise QuantumObjectError(f"Coarse graining cannot raise the standard box from {K} to {M}")
    flip = 0.0 if K - 1.0 < MIXTURE_FLOOR else min(1.0, max(0.0, (1.0 / M - 1.0 / K) / (1.0 - 1.0 / K)))
    relabel = QState.from_matrix(np.diag([flip, 1.0 - flip]), (2,))
    post = measure_prepare_channel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [basis_state(2, 0), relabel])
    return superchannel_from_pre_post(unitary_channel(np.eye(in_dim)), post)


def two_step_transform(
    source: ChannelBox,
    target: ChannelBox,
    eps_distill: float,
    eps_dilute: float,
    settings: Optional[Settings] = None,
) -> TwoStepResult:
    """Distill ``source`` to a standard box, coarse-grain it, then dilute into ``target``."""

    settings = settings or Settings()
    distilled = distill_eps(source, eps_distill, settings)
    diluted = dilute_eps(target, eps_dilute, settings)
    if distilled.superchannel is None:
        return TwoStepResult(
            False, distilled.log2M, diluted.log2M, reason="perfectly distinguishable source has no finite distillation"
        )
    if distilled.log2M + 1e-9 < diluted.log2M:
        return TwoStepResult(
            False,
            distilled.log2M,
            diluted.log2M,
            reason="smooth min value of the source is below the smooth max value of the target",
        )
    assert distilled.target is not None and diluted.source is not None
    produced = _standard_size(distilled.target)
    needed = _standard_size(diluted.source)
    if needed > produced:
        # the witnessing protocols can land marginally below the SDP values
        needed = produced
    coarse = standard_box_coarse_graining(produced, needed, settings.boxes.standard_in_dim)
    composite = compose_superchannels(compose_superchannels(distilled.superchannel, coarse), diluted.superchannel)
    eps_first, second_residual = verify_protocol(composite, source, target, settings)
    return TwoStepResult(
        True,
        distilled.log2M,
        diluted.log2M,
        epsilon_first=eps_first,
        second_residual=second_residual,
        superchannel=composite,
    )


def _standard_size(box: ChannelBox) -> float:
    """M of a standard box, read off the |0⟩⟨0| weight of its second replacer state."""

    weight = float(np.real(box.second.choi.matrix[0, 0]))
    return 1.0 / min(1.0, max(weight, MIXTURE_FLOOR))


def parallel_values(box: ChannelBox, n_max: int, settings: Optional[Settings] = None) -> List[ParallelRow]:
    """Per-copy D_min and D_max of tensor powers up to ``n_max`` within the dimension cap."""

    settings = settings or Settings()
    rows: List[ParallelRow] = []
    for copies in range(1, n_max + 1):
        try:
            power = tensor_power_box(box, copies, settings.boxes.tensor_dim_cap)
        except QuantumObjectError as exc:
            _LOGGER.info("Stopping parallel values at n=%d: %s", copies, exc)
            break
        lower = channel_dmin(power, settings.solver).value
        upper = channel_dmax(power, settings.linalg.rank_tol)
        rows.append(ParallelRow(copies, lower / copies, upper / copies))
    return rows


# ---------------------------------------------------------------------------
# inequality suite


def _slack(larger: float, smaller: float) -> float:
    if math.isinf(larger) and math.isinf(smaller) and larger == smaller:
        return 0.0
    return larger - smaller


def _heuristic(selector: DivergenceSelector, box: ChannelBox, settings: Settings) -> ExtendedReal:
    return channel_div_heuristic(selector, box, settings=settings.heuristic, rank_tol=settings.linalg.rank_tol).value


def _renyi_pair(kind: str, alpha: float) -> float:
    if kind == "sandwiched":
        if not 0.5 < alpha < 1.0:
            raise DivergenceError(f"Sandwiched bound needs alpha in (1/2, 1), got {alpha}")
        return alpha / (2.0 * alpha - 1.0)
    if kind == "petz":
        if not 0.0 < alpha < 1.0:
            raise DivergenceError(f"Petz bound needs alpha in (0, 1), got {alpha}")
        return 2.0 - alpha
    raise DivergenceError(f"Unknown Rényi family '{kind}'")


def bound_smooth_min_max(box: ChannelBox, eps1: float, eps2: float, settings: Optional[Settings] = None) -> BoundReport:
    if eps1 < 0 or eps2 < 0 or eps1 + eps2 >= 1:
        raise DivergenceError(f"Need eps1, eps2 >= 0 with eps1 + eps2 < 1, got {eps1}, {eps2}")
    settings = settings or Settings()
    lhs = channel_dmin_eps(box, eps1, settings.solver).value
    smooth_max = channel_dmax_eps(box, eps2, settings.solver, settings.linalg.rank_tol, settings.boxes.validation_tol)
    rhs = smooth_max.value + math.log2(1.0 / (1.0 - eps1 - eps2))
    slack = _slack(rhs, lhs)
    return BoundReport(
        "smooth-min-max",
        lhs,
        rhs,
        slack,
        slack >= -CERTIFIED_SLACK,
        CERTIFIED,
        {"eps1": eps1, "eps2": eps2},
    )


def bound_pseudo_continuity(
    kind: str,
    alpha: float,
    n0: Channel,
    n1: Channel,
    m: Channel,
    settings: Optional[Settings] = None,
) -> BoundReport:
    """Rényi pseudo-continuity between N⁰ and N¹ against the common M, from heuristic divergences."""

    beta = _renyi_pair(kind, alpha)
    settings = settings or Settings()
    reference = ChannelBox(n0, m)
    if math.isinf(channel_dmax(reference, settings.linalg.rank_tol)):
        raise DivergenceError("Pseudo-continuity needs a finite D_max(N0 || M)")
    upper = _heuristic(DivergenceSelector(kind, beta), reference, settings)
    lower = _heuristic(DivergenceSelector(kind, alpha), ChannelBox(n1, m), settings)
    lhs = _slack(upper, lower)
    details: Dict[str, Any] = {"kind": kind, "alpha": alpha, "beta": beta, "heuristic_inputs": True}
    if kind == "sandwiched":
        fid = channel_fidelity_heuristic(n0, n1, settings=settings.heuristic)
        rhs = -INF if fid <= 0 else alpha / (1.0 - alpha) * math.log2(fid)
        details["fidelity"] = fid
    else:
        distance = diamond_distance(n0, n1, settings.solver).value
        rhs = -INF if distance >= 1.0 else 2.0 / (1.0 - alpha) * math.log2(1.0 - distance)
        details["diamond_distance"] = distance
    slack = _slack(lhs, rhs)
    return BoundReport(
        f"pseudo-continuity-{kind}",
        lhs,
        rhs,
        slack,
        slack >= -HEURISTIC_SLACK,
        CONSISTENCY_CHECK,
        details,
    )


def _cq_view(box: ChannelBox, tol: float = 1e-9) -> Optional[CQBox]:
    """The cq form of ``box`` when both Choi operators are block diagonal in the input basis."""

    d_a, d_b = box.in_dim, box.out_dim
    columns = []
    for channel in (box.first, box.second):
        tensor = channel.choi.matrix.reshape(d_a, d_b, d_a, d_b)
        off_diagonal = tensor.copy()
        for x in range(d_a):
            off_diagonal[x, :, x, :] = 0.0
        if float(np.max(np.abs(off_diagonal), initial=0.0)) > tol:
            return None
        try:
            columns.append([QState.from_matrix(tensor[x, :, x, :], (d_b,)) for x in range(d_a)])
        except QuantumObjectError:
            return None
    return CQBox(tuple(zip(*columns)))


def _per_copy(
    box: ChannelBox,
    selector: DivergenceSelector,
    copies: int,
    settings: Settings,
) -> Tuple[ExtendedReal, bool]:
    """Per-copy divergence of the tensor power; exact and single-letter for cq boxes."""

    cq = _cq_view(box)
    if cq is not None:
        return cq_divergence(cq, selector, settings.linalg.rank_tol), True
    power = tensor_power_box(box, copies, settings.boxes.tensor_dim_cap)
    return _heuristic(selector, power, settings) / copies, False


def bound_parallel_converse(
    source: ChannelBox,
    target: ChannelBox,
    n: int,
    m: int,
    eps: float,
    alpha: float,
    kind: str = "sandwiched",
    settings: Optional[Settings] = None,
) -> BoundReport:
    """Rényi-ratio converse for an (n, m, ε) parallel transformation; ``passed`` is False when the
    claimed triple violates the bound."""

    beta = _renyi_pair(kind, alpha)
    if n < 1 or m < 1:
        raise DivergenceError("Copy counts must be positive")
    if not 0.0 <= eps < 1.0:
        raise DivergenceError(f"Transformation error must lie in [0, 1), got {eps}")
    settings = settings or Settings()
    source_rate, source_exact = _per_copy(source, DivergenceSelector(kind, beta), n, settings)
    target_rate, target_exact = _per_copy(target, DivergenceSelector(kind, alpha), m, settings)
    weight = 2.0 * alpha / (1.0 - alpha) if kind == "sandwiched" else 2.0 / (1.0 - alpha)
    correction = weight * math.log2(1.0 - eps) if eps > 0 else 0.0
    details: Dict[str, Any] = {
        "kind": kind,
        "alpha": alpha,
        "beta": beta,
        "n": n,
        "m": m,
        "eps": eps,
        "source_per_copy": source_rate,
        "target_per_copy": target_rate,
    }
    if target_rate <= 0:
        details["vacuous"] = True
        lhs, rhs = INF, m / n
    else:
        lhs = source_rate / target_rate
        rhs = m / n + correction / (n * target_rate)
    slack = _slack(lhs, rhs)
    exact = source_exact and target_exact
    passed = slack >= -(CERTIFIED_SLACK if exact else HEURISTIC_SLACK)
    details["claim_violates_bound"] = not passed
    return BoundReport(
        f"parallel-converse-{kind}",
        lhs,
        rhs,
        slack,
        passed,
        CERTIFIED if exact else CONSISTENCY_CHECK,
        details,
    )


def bound_smooth_dmax_lower(
    box: ChannelBox,
    alpha: float,
    eps: float,
    kind: str = "sandwiched",
    settings: Optional[Settings] = None,
) -> BoundReport:
    if not 0.0 <= eps < 1.0:
        raise DivergenceError(f"Smoothing parameter must lie in [0, 1), got {eps}")
    if kind == "sandwiched":
        if not 0.5 <= alpha < 1.0:
            raise DivergenceError(f"Sandwiched lower bound needs alpha in [1/2, 1), got {alpha}")
        selector = DivergenceSelector("sandwiched", alpha)
        weight = 2.0 * alpha / (alpha - 1.0)
    elif kind == "petz":
        if not 0.0 <= alpha < 1.0:
            raise DivergenceError(f"Petz lower bound needs alpha in [0, 1), got {alpha}")
        # order zero of the Petz family is D_min
        selector = DivergenceSelector("dmin") if alpha == 0.0 else DivergenceSelector("petz", alpha)
        weight = 2.0 / (alpha - 1.0)
    else:
        raise DivergenceError(f"Unknown Rényi family '{kind}'")
    settings = settings or Settings()
    lhs = channel_dmax_eps(box, eps, settings.solver, settings.linalg.rank_tol, settings.boxes.validation_tol).value
    divergence = _heuristic(selector, box, settings)
    rhs = divergence + weight * math.log2(1.0 / (1.0 - eps))
    slack = _slack(lhs, rhs)
    return BoundReport(
        f"dmax-lower-{kind}",
        lhs,
        rhs,
        slack,
        slack >= -HEURISTIC_SLACK,
        CONSISTENCY_CHECK,
        {"kind": kind, "alpha": alpha, "eps": eps, "divergence": divergence, "heuristic_inputs": True},
    )


def bound_cq_smooth_dmax_upper(
    cq: CQBox,
    alpha: float,
    eps: float,
    settings: Optional[Settings] = None,
) -> BoundReport:
    if alpha <= 1.0:
        raise DivergenceError(f"cq upper bound needs alpha > 1, got {alpha}")
    if not 0.0 < eps < 1.0:
        raise DivergenceError(f"cq upper bound needs eps in (0, 1), got {eps}")
    settings = settings or Settings()
    box = cq.as_box()
    lhs = channel_dmax_eps(box, eps, settings.solver, settings.linalg.rank_tol, settings.boxes.validation_tol).value
    divergence = cq_divergence(cq, DivergenceSelector("sandwiched", alpha), settings.linalg.rank_tol)
    rhs = divergence + math.log2(1.0 / eps**2) / (alpha - 1.0) + math.log2(1.0 / (1.0 - eps**2))
    slack = _slack(rhs, lhs)
    return BoundReport(
        "cq-dmax-upper",
        lhs,
        rhs,
        slack,
        slack >= -CERTIFIED_SLACK,
        CERTIFIED,
        {"alpha": alpha, "eps": eps, "symbols": cq.symbols, "divergence": divergence},
    )


def bound_smooth_dmin_petz(
    box: ChannelBox,
    alpha: float,
    eps: float,
    settings: Optional[Settings] = None,
) -> BoundReport:
    """Petz-Rényi divergence against the binary hypothesis-testing value q = 2^-D_min^ε."""

    if not 0.0 < alpha < 1.0:
        raise DivergenceError(f"Petz smooth-min bound needs alpha in (0, 1), got {alpha}")
    if not 0.0 <= eps < 1.0:
        raise DivergenceError(f"Smoothing parameter must lie in [0, 1), got {eps}")
    settings = settings or Settings()
    smooth_min = channel_dmin_eps(box, eps, settings.solver).value
    q = 0.0 if math.isinf(smooth_min) else 2.0**-smooth_min
    binary = (1.0 - eps) ** alpha * q ** (1.0 - alpha) + eps**alpha * (1.0 - q) ** (1.0 - alpha)
    rhs = INF if binary <= 0 else math.log2(binary) / (alpha - 1.0)
    lhs = _heuristic(DivergenceSelector("petz", alpha), box, settings)
    slack = _slack(lhs, rhs)
    return BoundReport(
        "dmin-petz",
        lhs,
        rhs,
        slack,
        slack >= -HEURISTIC_SLACK,
        CONSISTENCY_CHECK,
        {"alpha": alpha, "eps": eps, "smooth_min": smooth_min, "heuristic_inputs": True},
    )
