"""States, channels, superchannels and channel boxes, all in unnormalised Choi form."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import prod
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .linalg import (
    HermitianOperator,
    LinalgError,
    RANK_TOL,
    eig_hermitian,
    gamma_operator,
    identity,
    kron,
    min_eigenvalue,
    norms,
    partial_trace,
    permutation_indices,
    permute_subsystems,
    spectral_fn,
)


_LOGGER = logging.getLogger(__name__)

PSD_TOL = 1e-9
TP_TOL = 1e-8
STATE_TRACE_TOL = 1e-9
KRAUS_TOL = 1e-8
UNITARY_TOL = 1e-8
REPAIR_WARN_TOL = 1e-6

SUPERCHANNEL_ORDER = ("C", "R_B", "A", "D")


class QuantumObjectError(ValueError):
    """Raised for invalid states, channels, superchannels or mismatched dimensions."""


def _as_operator(value: Any, dims: Optional[Sequence[int]] = None) -> HermitianOperator:
    if isinstance(value, HermitianOperator):
        return value if dims is None else value.with_dims(dims)
    try:
        return HermitianOperator.from_matrix(np.asarray(value, dtype=complex), dims)
    except LinalgError as exc:
        raise QuantumObjectError(str(exc)) from exc


@dataclass(frozen=True, eq=False)
class QState:
    density: HermitianOperator

    def __post_init__(self) -> None:
        lowest = min_eigenvalue(self.density)
        if lowest < -PSD_TOL:
            raise QuantumObjectError(f"State is not positive semidefinite (min eigenvalue {lowest:.3e})")
        if abs(self.density.trace() - 1.0) > STATE_TRACE_TOL:
            raise QuantumObjectError(f"State trace {self.density.trace():.12f} differs from 1")

    @classmethod
    def from_matrix(cls, matrix: Any, dims: Optional[Sequence[int]] = None) -> "QState":
        return cls(_as_operator(matrix, dims))

    @classmethod
    def from_vector(cls, vector: Any, dims: Optional[Sequence[int]] = None) -> "QState":
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise QuantumObjectError("Zero vector is not a state")
        vector = vector / norm
        return cls(HermitianOperator(np.outer(vector, vector.conj()), tuple(dims) if dims else (vector.size,)))

    @property
    def dim(self) -> int:
        return self.density.dim

    @property
    def matrix(self) -> np.ndarray:
        return self.density.matrix


@dataclass(frozen=True, eq=False)
class Channel:
    """Quantum channel with Choi operator over (input reference, output), Tr_B Γ = I."""

    in_dim: int
    out_dim: int
    choi: HermitianOperator
    tol: float = field(default=TP_TOL, repr=False)

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise QuantumObjectError("Channel dimensions must be positive")
        if self.choi.dim != self.in_dim * self.out_dim:
            raise QuantumObjectError(
                f"Choi dimension {self.choi.dim} does not match in_dim*out_dim = {self.in_dim * self.out_dim}"
            )
        if self.choi.dims != (self.in_dim, self.out_dim):
            object.__setattr__(self, "choi", self.choi.with_dims((self.in_dim, self.out_dim)))
        lowest = min_eigenvalue(self.choi)
        if lowest < -max(PSD_TOL, self.tol / 10):
            raise QuantumObjectError(f"Channel is not completely positive (min Choi eigenvalue {lowest:.3e})")
        residual = self.tp_residual
        if residual > self.tol:
            raise QuantumObjectError(f"Channel is not trace preserving (residual {residual:.3e})")

    @classmethod
    def from_choi(
        cls,
        choi: Any,
        in_dim: int,
        out_dim: int,
        repair: bool = False,
        tol: float = TP_TOL,
    ) -> "Channel":
        operator = _as_operator(choi)
        if operator.dim != in_dim * out_dim:
            raise QuantumObjectError(f"Choi dimension {operator.dim} does not match {in_dim}x{out_dim}")
        operator = operator.with_dims((in_dim, out_dim))
        if repair:
            operator = _repair_choi(operator)
        return cls(in_dim, out_dim, operator, tol)

    @property
    def tp_residual(self) -> float:
        marginal = partial_trace(self.choi, (0,)).matrix
        return float(np.max(np.abs(marginal - np.eye(self.in_dim)), initial=0.0))

    @property
    def choi_state(self) -> QState:
        return QState(self.choi * (1.0 / self.in_dim))


def _repair_choi(choi: HermitianOperator) -> HermitianOperator:
    """Clip negative eigenvalues, then renormalise so that Tr_B Γ = I."""

    clipped = spectral_fn(choi, lambda values: np.clip(values, 0.0, None))
    marginal = partial_trace(clipped, (0,))
    if min_eigenvalue(marginal) <= RANK_TOL:
        raise QuantumObjectError("Cannot repair a Choi operator with rank-deficient input marginal")
    inverse_root = spectral_fn(marginal, lambda values: values**-0.5)
    lift = np.kron(inverse_root.matrix, np.eye(choi.dims[1]))
    repaired = HermitianOperator.from_matrix(lift @ clipped.matrix @ lift.conj().T, choi.dims, tol=1e-8)
    change = norms(repaired - choi).operator_norm
    if change > REPAIR_WARN_TOL:
        _LOGGER.warning("Projected Choi operator onto valid channels (change %.3e)", change)
    else:
        _LOGGER.debug("Projected Choi operator onto valid channels (change %.3e)", change)
    return repaired


@dataclass(frozen=True, eq=False)
class Superchannel:
    """Superchannel from A->B channels to C->D channels, Choi over (C, R_B, A, D)."""

    dims: Tuple[int, int, int, int]
    choi: HermitianOperator

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 4 or prod(dims) != self.choi.dim:
            raise QuantumObjectError(f"Superchannel dims {dims} do not match Choi dimension {self.choi.dim}")
        object.__setattr__(self, "dims", dims)
        if self.choi.dims != dims:
            object.__setattr__(self, "choi", self.choi.with_dims(dims))

    @classmethod
    def from_choi(cls, choi: Any, dims: Sequence[int], tol: float = TP_TOL) -> "Superchannel":
        theta = cls(tuple(dims), _as_operator(choi, tuple(dims)))
        report = validate_superchannel(theta, tol)
        if not report.passed:
            raise QuantumObjectError(f"Not a valid superchannel: {report.serialise()}")
        return theta

    @property
    def source_dims(self) -> Tuple[int, int]:
        return self.dims[2], self.dims[1]

    @property
    def target_dims(self) -> Tuple[int, int]:
        return self.dims[0], self.dims[3]


@dataclass(frozen=True, eq=False)
class ChannelBox:
    first: Channel
    second: Channel

    def __post_init__(self) -> None:
        if (self.first.in_dim, self.first.out_dim) != (self.second.in_dim, self.second.out_dim):
            raise QuantumObjectError(
                "Box channels must share dimensions: "
                f"{(self.first.in_dim, self.first.out_dim)} vs {(self.second.in_dim, self.second.out_dim)}"
            )

    @property
    def in_dim(self) -> int:
        return self.first.in_dim

    @property
    def out_dim(self) -> int:
        return self.first.out_dim

    @property
    def chois(self) -> Tuple[HermitianOperator, HermitianOperator]:
        return self.first.choi, self.second.choi


@dataclass(frozen=True, eq=False)
class CQBox:
    pairs: Tuple[Tuple[QState, QState], ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise QuantumObjectError("A cq box needs at least one symbol")
        dims = {state.dim for pair in self.pairs for state in pair}
        if len(dims) != 1:
            raise QuantumObjectError(f"cq box output states must share a dimension, got {sorted(dims)}")
        object.__setattr__(self, "pairs", tuple(tuple(pair) for pair in self.pairs))

    @property
    def symbols(self) -> int:
        return len(self.pairs)

    @property
    def out_dim(self) -> int:
        return self.pairs[0][0].dim

    def as_box(self) -> ChannelBox:
        return ChannelBox(
            cq_channel([first for first, _ in self.pairs]),
            cq_channel([second for _, second in self.pairs]),
        )


@dataclass(frozen=True, eq=False)
class SeizeData:
    probe: QState
    decoder: Channel


@dataclass(frozen=True, eq=False)
class EnvBox:
    """Common interaction P_{AE->B} with environment states (ρ_E, σ_E)."""

    interaction: Channel
    input_dim: int
    env_states: Tuple[QState, QState]
    seize: Optional[SeizeData] = None

    def __post_init__(self) -> None:
        rho_e, sigma_e = self.env_states
        if rho_e.dim != sigma_e.dim:
            raise QuantumObjectError("Environment states must share a dimension")
        if self.interaction.in_dim != self.input_dim * rho_e.dim:
            raise QuantumObjectError(
                f"Interaction input {self.interaction.in_dim} differs from {self.input_dim}*{rho_e.dim}"
            )
        if self.seize is not None:
            probe_dim = self.seize.probe.dim
            if probe_dim % self.input_dim:
                raise QuantumObjectError("Probe state must end with the channel input factor")
            reference = probe_dim // self.input_dim
            if self.seize.decoder.in_dim != reference * self.interaction.out_dim:
                raise QuantumObjectError("Decoder input must be the probe reference times the channel output")
            if self.seize.decoder.out_dim != rho_e.dim:
                raise QuantumObjectError("Decoder output must be the environment dimension")

    @property
    def env_dim(self) -> int:
        return self.env_states[0].dim


@dataclass(slots=True)
class SuperchannelReport:
    min_eigenvalue: float
    tp_residual: float
    no_signalling_residual: float
    passed: bool

    def serialise(self) -> Dict[str, Any]:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "tp_residual": self.tp_residual,
            "no_signalling_residual": self.no_signalling_residual,
            "passed": self.passed,
        }


@dataclass(slots=True)
class SeizeReport:
    first_residual: float
    second_residual: float
    passed: bool

    def serialise(self) -> Dict[str, Any]:
        return {
            "first_residual": self.first_residual,
            "second_residual": self.second_residual,
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# channels


def channel_from_kraus(kraus: Sequence[Any], dA: int, dB: int) -> Channel:
    operators = [np.asarray(k, dtype=complex) for k in kraus]
    if not operators:
        raise QuantumObjectError("At least one Kraus operator is required")
    for operator in operators:
        if operator.shape != (dB, dA):
            raise QuantumObjectError(f"Kraus operator shape {operator.shape} is not {(dB, dA)}")
    completeness = sum(k.conj().T @ k for k in operators)
    residual = float(np.max(np.abs(completeness - np.eye(dA))))
    if residual > KRAUS_TOL:
        raise QuantumObjectError(f"Kraus operators are not trace preserving (residual {residual:.3e})")
    choi = np.zeros((dA * dB, dA * dB), dtype=complex)
    for operator in operators:
        vector = operator.T.reshape(-1)
        choi += np.outer(vector, vector.conj())
    return Channel(dA, dB, HermitianOperator(choi, (dA, dB)))


def channel_kraus(n: Channel, rank_tol: float = RANK_TOL) -> List[np.ndarray]:
    eigenvalues, eigenvectors = eig_hermitian(n.choi)
    return [
        np.sqrt(value) * eigenvectors[:, index].reshape(n.in_dim, n.out_dim).T
        for index, value in enumerate(eigenvalues)
        if value > rank_tol
    ]


def unitary_channel(u: Any) -> Channel:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise QuantumObjectError(f"Unitary must be square, got shape {u.shape}")
    defect = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
    if defect > UNITARY_TOL:
        raise QuantumObjectError(f"Matrix is not unitary (defect {defect:.3e})")
    return channel_from_kraus([u], u.shape[0], u.shape[0])


def replacer(sigma: QState, dA: int) -> Channel:
    return Channel(dA, sigma.dim, HermitianOperator(np.kron(np.eye(dA), sigma.matrix), (dA, sigma.dim)))


def pi_state(M: float) -> QState:
    if M < 1:
        raise QuantumObjectError(f"pi_M requires M >= 1, got {M}")
    return QState(HermitianOperator(np.diag([1.0 / M, 1.0 - 1.0 / M]).astype(complex), (2,)))


def basis_state(dim: int, index: int = 0) -> QState:
    density = np.zeros((dim, dim), dtype=complex)
    density[index, index] = 1.0
    return QState(HermitianOperator(density, (dim,)))


def max_entangled_state(d: int) -> QState:
    return QState(gamma_operator(d) * (1.0 / d))


def cq_channel(states: Sequence[QState]) -> Channel:
    if not states:
        raise QuantumObjectError("cq channel needs at least one state")
    dims = {state.dim for state in states}
    if len(dims) != 1:
        raise QuantumObjectError(f"cq channel states must share a dimension, got {sorted(dims)}")
    symbols = len(states)
    choi = sum(
        np.kron(np.diag(np.eye(symbols)[x]).astype(complex), state.matrix) for x, state in enumerate(states)
    )
    return Channel(symbols, states[0].dim, HermitianOperator(choi, (symbols, states[0].dim)))


def measure_prepare_channel(effects: Sequence[Any], states: Sequence[QState]) -> Channel:
    """Channel ρ -> Σ_k Tr[E_k ρ] σ_k, Choi Σ_k E_kᵀ ⊗ σ_k."""

    if len(effects) != len(states) or not effects:
        raise QuantumObjectError("Need one prepared state per effect")
    matrices = [np.asarray(e.matrix if isinstance(e, HermitianOperator) else e, dtype=complex) for e in effects]
    d_in = matrices[0].shape[0]
    d_out = states[0].dim
    choi = sum(np.kron(e.T, s.matrix) for e, s in zip(matrices, states))
    return Channel(d_in, d_out, _as_operator(choi, (d_in, d_out)))


def apply_to_factors(
    op: HermitianOperator,
    channel: Channel,
    targets: Sequence[int],
    out_dims: Optional[Sequence[int]] = None,
) -> HermitianOperator:
    """Apply ``channel`` to the factors ``targets`` of ``op`` (in that order).

    The untouched factors keep their order and the output factor(s) are appended last.
    """

    targets = [int(t) for t in targets]
    if any(t < 0 or t >= len(op.dims) for t in targets) or len(set(targets)) != len(targets):
        raise QuantumObjectError(f"Invalid target factors {targets} for dims {op.dims}")
    target_dim = prod(op.dims[t] for t in targets)
    if target_dim != channel.in_dim:
        raise QuantumObjectError(f"Targeted factors have dimension {target_dim}, channel expects {channel.in_dim}")
    rest = [i for i in range(len(op.dims)) if i not in targets]
    rest_dims = tuple(op.dims[i] for i in rest)
    rest_dim = prod(rest_dims)
    idx = permutation_indices(op.dims, rest + targets)
    arranged = op.matrix[np.ix_(idx, idx)].reshape(rest_dim, target_dim, rest_dim, target_dim)
    choi = channel.choi.matrix.reshape(channel.in_dim, channel.out_dim, channel.in_dim, channel.out_dim)
    result = np.einsum("iajb,akbl->ikjl", arranged, choi).reshape(rest_dim * channel.out_dim, -1)
    out_dims = tuple(out_dims) if out_dims else (channel.out_dim,)
    if prod(out_dims) != channel.out_dim:
        raise QuantumObjectError(f"Output dims {out_dims} do not multiply to {channel.out_dim}")
    dims = tuple(d for d in rest_dims) + out_dims
    return HermitianOperator.from_matrix(result, dims, tol=1e-9)


def apply_channel(n: Channel, rho: QState) -> QState:
    """Apply ``n`` to the last tensor factor of ``rho`` (a reference factor may precede it)."""

    dims = rho.density.dims
    if dims[-1] != n.in_dim:
        if rho.dim % n.in_dim:
            raise QuantumObjectError(f"State dimension {rho.dim} does not end with a factor of {n.in_dim}")
        dims = (rho.dim // n.in_dim, n.in_dim)
    output = apply_to_factors(rho.density.with_dims(dims), n, (len(dims) - 1,))
    return QState(output)


def compose_channels(first: Channel, second: Channel) -> Channel:
    """The channel ``second`` after ``first``."""

    if first.out_dim != second.in_dim:
        raise QuantumObjectError(f"Cannot compose: output {first.out_dim} vs input {second.in_dim}")
    choi = apply_to_factors(first.choi, second, (1,))
    return Channel(first.in_dim, second.out_dim, choi)


def tensor_channels(a: Channel, b: Channel) -> Channel:
    product = permute_subsystems(kron(a.choi, b.choi), (0, 2, 1, 3))
    d_in, d_out = a.in_dim * b.in_dim, a.out_dim * b.out_dim
    return Channel(d_in, d_out, product.with_dims((d_in, d_out)), tol=max(a.tol, b.tol))


# ---------------------------------------------------------------------------
# superchannels


def identity_superchannel(dA: int, dB: int) -> Superchannel:
    product = kron(gamma_operator(dA), gamma_operator(dB))
    return Superchannel((dA, dB, dA, dB), permute_subsystems(product, (0, 2, 1, 3)))


def superchannel_from_pre_post(pre: Channel, post: Channel, memory_dim: int = 1) -> Superchannel:
    """Superchannel N -> post ∘ (N ⊗ id_mem) ∘ pre.

    ``pre`` maps C to A ⊗ mem and ``post`` maps B ⊗ mem to D.
    """

    if memory_dim < 1 or pre.out_dim % memory_dim or post.in_dim % memory_dim:
        raise QuantumObjectError(f"Memory dimension {memory_dim} does not divide the pre/post interfaces")
    d_c = pre.in_dim
    d_a = pre.out_dim // memory_dim
    d_b = post.in_dim // memory_dim
    d_d = post.out_dim
    pre_choi = pre.choi.with_dims((d_c, d_a, memory_dim))
    joint = kron(pre_choi, gamma_operator(d_b))
    plugged = apply_to_factors(joint, post, (4, 2))
    theta = permute_subsystems(plugged, (0, 2, 1, 3))
    return Superchannel((d_c, d_b, d_a, d_d), theta)


def apply_superchannel(theta: Superchannel, n: Channel, tol: float = TP_TOL) -> Channel:
    d_c, d_b, d_a, d_d = theta.dims
    if (n.in_dim, n.out_dim) != (d_a, d_b):
        raise QuantumObjectError(f"Channel {(n.in_dim, n.out_dim)} does not fit superchannel input {(d_a, d_b)}")
    gamma = n.choi.matrix.reshape(d_a, d_b, d_a, d_b)
    big = theta.choi.matrix.reshape(d_c, d_b, d_a, d_d, d_c, d_b, d_a, d_d)
    output = np.einsum("pqrs,cqpdesrf->cdef", gamma, big).reshape(d_c * d_d, d_c * d_d)
    choi = HermitianOperator.from_matrix(output, (d_c, d_d), tol=1e-8)
    return Channel(d_c, d_d, choi, tol=tol)


def compose_superchannels(first: Superchannel, second: Superchannel) -> Superchannel:
    """The superchannel ``second`` after ``first``."""

    d_c, d_b, d_a, d_d = first.dims
    d_e, d_r, d_p, d_f = second.dims
    if (d_p, d_r) != (d_c, d_d):
        raise QuantumObjectError(f"Cannot compose superchannels: {first.dims} then {second.dims}")
    one = first.choi.matrix.reshape(d_c, d_b, d_a, d_d, d_c, d_b, d_a, d_d)
    two = second.choi.matrix.reshape(d_e, d_d, d_c, d_f, d_e, d_d, d_c, d_f)
    composite = np.einsum("pbaqrxys,eqpfgsrh->ebafgxyh", one, two, optimize=True)
    size = d_e * d_b * d_a * d_f
    choi = HermitianOperator.from_matrix(composite.reshape(size, size), (d_e, d_b, d_a, d_f), tol=1e-8)
    return Superchannel((d_e, d_b, d_a, d_f), choi)


def validate_superchannel(theta: Superchannel, tol: float) -> SuperchannelReport:
    d_c, d_b, d_a, d_d = theta.dims
    lowest = min_eigenvalue(theta.choi)
    marginal = partial_trace(theta.choi, (0, 1)).matrix
    tp = float(np.max(np.abs(marginal - np.eye(d_c * d_b)), initial=0.0))
    three = partial_trace(theta.choi, (0, 1, 2))
    reduced = partial_trace(three, (0, 2))
    expected = permute_subsystems(kron(reduced, identity(d_b) * (1.0 / d_b)), (0, 2, 1))
    ns = float(np.max(np.abs(three.matrix - expected.matrix), initial=0.0))
    passed = lowest >= -tol and tp <= tol and ns <= tol
    return SuperchannelReport(float(lowest), tp, ns, passed)


# ---------------------------------------------------------------------------
# boxes


def standard_box(M: float, in_dim: int = 2) -> ChannelBox:
    return ChannelBox(replacer(basis_state(2), in_dim), replacer(pi_state(M), in_dim))


def state_box(rho: QState, sigma: QState, in_dim: int = 1) -> ChannelBox:
    return ChannelBox(replacer(rho, in_dim), replacer(sigma, in_dim))


def _interaction_output(e: EnvBox, env_state: QState) -> Channel:
    probe = kron(gamma_operator(e.input_dim), env_state.density)
    choi = apply_to_factors(probe, e.interaction, (1, 2))
    return Channel(e.input_dim, e.interaction.out_dim, choi, tol=e.interaction.tol)


def env_realize(e: EnvBox) -> ChannelBox:
    rho_e, sigma_e = e.env_states
    return ChannelBox(_interaction_output(e, rho_e), _interaction_output(e, sigma_e))


def trivial_env_box(box: ChannelBox) -> EnvBox:
    """Realise ``box`` with a qubit environment that selects which channel acts."""

    d_a, d_b = box.in_dim, box.out_dim
    terms = []
    for index, channel in enumerate((box.first, box.second)):
        selector = basis_state(2, index).density
        terms.append(permute_subsystems(kron(channel.choi, selector), (0, 2, 1)).matrix)
    interaction = Channel(2 * d_a, d_b, HermitianOperator(sum(terms), (2 * d_a, d_b)))
    return EnvBox(interaction, d_a, (basis_state(2, 0), basis_state(2, 1)))


def env_seize_check(e: EnvBox, tol: float = 1e-6) -> SeizeReport:
    if e.seize is None:
        raise QuantumObjectError("Environment box has no seize data to check")
    box = env_realize(e)
    probe = e.seize.probe.density
    reference = probe.dim // e.input_dim
    probe = probe.with_dims((reference, e.input_dim))
    residuals = []
    for channel, expected in zip((box.first, box.second), e.env_states):
        output = apply_to_factors(probe, channel, (1,))
        recovered = apply_to_factors(output.with_dims((reference * channel.out_dim,)), e.seize.decoder, (0,))
        residuals.append(0.5 * norms(recovered - expected.density.with_dims(recovered.dims)).trace_norm)
    return SeizeReport(residuals[0], residuals[1], max(residuals) <= tol)
