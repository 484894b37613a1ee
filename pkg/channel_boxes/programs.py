"""Primal and dual semidefinite programs over Choi operators.

Channel Choi operators are unnormalised and ordered (input, output). Superchannel Choi
operators are ordered (C, R_B, A, D) for a superchannel taking A->B channels to C->D channels.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from . import sdp
from .linalg import HermitianOperator, LinalgError, permute_subsystems, traceless_hermitian_basis
from .sdp import BlockKind, ConicProgram


def _check_pair(first: HermitianOperator, second: HermitianOperator) -> Tuple[int, int]:
    if first.dims != second.dims or len(first.dims) != 2:
        raise LinalgError(f"Choi operators must share (input, output) dims, got {first.dims} and {second.dims}")
    return first.dims


def _eye(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


# ---------------------------------------------------------------------------
# diamond distance, normalised to half the diamond norm


def diamond_primal(gamma_n: HermitianOperator, gamma_m: HermitianOperator) -> ConicProgram:
    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("diamond-primal")
    rho = program.add_block("rho", BlockKind.PSD_HERMITIAN, (d_in,))
    omega = program.add_block("omega", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    program.maximize(sdp.inner(gamma_n - gamma_m, omega))
    program.psd("domination", sdp.kron(rho, sdp.const(_eye(d_out))) - omega)
    program.equal("normalisation", sdp.trace(rho) - 1.0)
    return program


def diamond_dual(gamma_n: HermitianOperator, gamma_m: HermitianOperator) -> ConicProgram:
    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("diamond-dual")
    z = program.add_block("z", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    mu = program.add_block("mu", BlockKind.NONNEG_SCALAR)
    program.minimize(mu)
    program.psd("cover", z - sdp.const(gamma_n - gamma_m))
    program.psd("marginal", sdp.scale_by(mu, _eye(d_in)) - sdp.partial_trace(z, (0,)))
    return program


# ---------------------------------------------------------------------------
# smooth channel min-relative entropy (hypothesis testing)


def smooth_min_primal(gamma_n: HermitianOperator, gamma_m: HermitianOperator, eps: float) -> ConicProgram:
    """min Tr[Ω Γ_M] s.t. Tr[Ω Γ_N] >= 1-ε, 0 <= Ω <= ρ ⊗ I, ρ a state; the value is 2^(-D_min^ε)."""

    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("smooth-min-primal")
    rho = program.add_block("rho", BlockKind.PSD_HERMITIAN, (d_in,))
    omega = program.add_block("omega", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    program.minimize(sdp.inner(gamma_m, omega))
    program.psd("success", sdp.inner(gamma_n, omega) - (1.0 - eps))
    program.psd("domination", sdp.kron(rho, sdp.const(_eye(d_out))) - omega)
    program.equal("normalisation", sdp.trace(rho) - 1.0)
    return program


def smooth_min_dual(gamma_n: HermitianOperator, gamma_m: HermitianOperator, eps: float) -> ConicProgram:
    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("smooth-min-dual")
    y = program.add_block("y", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    mu = program.add_block("mu", BlockKind.NONNEG_SCALAR)
    lam = program.add_block("lam", BlockKind.FREE_SCALAR)
    program.maximize((1.0 - eps) * mu - lam)
    program.psd("cover", sdp.const(gamma_m) + y - sdp.scale_by(mu, gamma_n))
    program.psd("marginal", sdp.scale_by(lam, _eye(d_in)) - sdp.partial_trace(y, (0,)))
    return program


# ---------------------------------------------------------------------------
# smooth channel max-relative entropy


def smooth_max_primal(gamma_n: HermitianOperator, gamma_m: HermitianOperator, eps: float) -> ConicProgram:
    """min λ over channels Ñ (block ``y``) within ε of N in diamond distance with Γ_Ñ <= λ Γ_M."""

    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("smooth-max-primal")
    lam = program.add_block("lam", BlockKind.NONNEG_SCALAR)
    y = program.add_block("y", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    z = program.add_block("z", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    program.minimize(lam)
    program.psd("domination", sdp.scale_by(lam, gamma_m) - y)
    program.equal("trace_preserving", sdp.partial_trace(y, (0,)) - sdp.const(_eye(d_in)))
    program.psd("smoothing_budget", sdp.const(eps * _eye(d_in)) - sdp.partial_trace(z, (0,)))
    program.psd("smoothing_cover", z - sdp.const(gamma_n) + y)
    return program


def smooth_max_dual(gamma_n: HermitianOperator, gamma_m: HermitianOperator, eps: float) -> ConicProgram:
    d_in, d_out = _check_pair(gamma_n, gamma_m)
    program = ConicProgram("smooth-max-dual")
    big_l = program.add_block("l", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    p = program.add_block("p", BlockKind.PSD_HERMITIAN, (d_in,))
    q = program.add_block("q", BlockKind.PSD_HERMITIAN, (d_in, d_out))
    z_r = program.add_block("z_r", BlockKind.FREE_HERMITIAN, (d_in,))
    identity_out = sdp.const(_eye(d_out))
    program.maximize(sdp.trace(z_r) - eps * sdp.trace(p) + sdp.inner(gamma_n, q))
    program.psd("normalisation", 1.0 - sdp.inner(gamma_m, big_l))
    program.psd("smoothing", sdp.kron(p, identity_out) - q)
    program.psd("domination", big_l - sdp.kron(z_r, identity_out) - q)
    return program


# ---------------------------------------------------------------------------
# state hypothesis testing


def hypothesis_test(rho: HermitianOperator, sigma: HermitianOperator, eps: float) -> ConicProgram:
    if rho.dim != sigma.dim:
        raise LinalgError(f"State dimensions differ: {rho.dim} vs {sigma.dim}")
    program = ConicProgram("hypothesis-test")
    effect = program.add_block("effect", BlockKind.PSD_HERMITIAN, (rho.dim,))
    program.minimize(sdp.inner(sigma.matrix, effect))
    program.psd("success", sdp.inner(rho.matrix, effect) - (1.0 - eps))
    program.psd("effect_bound", sdp.const(_eye(rho.dim)) - effect)
    return program


# ---------------------------------------------------------------------------
# channel-box transformation


def link_operator(gamma: HermitianOperator) -> np.ndarray:
    """Operator X on (R_B, A) with Θ(N) = Tr_{R_B A}[(I_C ⊗ X ⊗ I_D) Γ_Θ]."""

    return permute_subsystems(gamma, (1, 0)).matrix.T.copy()


def _transform_dims(
    source: Tuple[HermitianOperator, HermitianOperator],
    target: Tuple[HermitianOperator, HermitianOperator],
) -> Tuple[int, int, int, int]:
    d_a, d_b = _check_pair(*source)
    d_c, d_d = _check_pair(*target)
    return d_c, d_b, d_a, d_d


def _link(theta: sdp.Expr, gamma: HermitianOperator) -> sdp.Expr:
    return sdp.contract(theta, (1, 2), link_operator(gamma))


def box_transform_primal(
    source: Tuple[HermitianOperator, HermitianOperator],
    target: Tuple[HermitianOperator, HermitianOperator],
) -> ConicProgram:
    """Least ε for which a superchannel maps source.second exactly onto target.second and
    source.first to within ε of target.first.

    Trace preservation and no-signalling are stated on independent components: the full
    trace over (R_B, A, D) and the traceless R_B components of the (C, R_B, A) marginal. The
    exact second-channel condition is stated on its D-traceless components only, its D-trace
    part being implied by the other two.
    """

    d_c, d_b, d_a, d_d = _transform_dims(source, target)
    gamma_n, gamma_m = source
    gamma_k, gamma_l = target
    program = ConicProgram("box-transform-primal")
    mu = program.add_block("mu", BlockKind.NONNEG_SCALAR)
    z = program.add_block("z", BlockKind.PSD_HERMITIAN, (d_c, d_d))
    theta = program.add_block("theta", BlockKind.PSD_HERMITIAN, (d_c, d_b, d_a, d_d))
    program.minimize(mu)

    program.psd("diamond_budget", sdp.scale_by(mu, _eye(d_c)) - sdp.partial_trace(z, (0,)))
    program.psd("diamond_cover", z - sdp.const(gamma_k) + _link(theta, gamma_n))

    mismatch = _link(theta, gamma_m) - sdp.const(gamma_l)
    for index, generator in enumerate(traceless_hermitian_basis(d_d)):
        program.equal(f"second_channel_{index}", sdp.contract(mismatch, (1,), generator))

    program.equal("trace_preserving", sdp.partial_trace(theta, (0,)) - sdp.const(d_b * _eye(d_c)))
    marginal = sdp.partial_trace(theta, (0, 1, 2))
    for index, generator in enumerate(traceless_hermitian_basis(d_b)):
        program.equal(f"no_signalling_{index}", sdp.contract(marginal, (1,), generator))
    return program


def box_transform_dual(
    source: Tuple[HermitianOperator, HermitianOperator],
    target: Tuple[HermitianOperator, HermitianOperator],
) -> ConicProgram:
    d_c, d_b, d_a, d_d = _transform_dims(source, target)
    gamma_n, gamma_m = source
    gamma_k, gamma_l = target
    program = ConicProgram("box-transform-dual")
    m = program.add_block("m", BlockKind.PSD_HERMITIAN, (d_c,))
    y = program.add_block("y", BlockKind.PSD_HERMITIAN, (d_c, d_d))
    s = program.add_block("s", BlockKind.FREE_HERMITIAN, (d_c,))

    second_terms: List[sdp.Expr] = []
    for index, generator in enumerate(traceless_hermitian_basis(d_d)):
        w_k = program.add_block(f"w_{index}", BlockKind.FREE_HERMITIAN, (d_c,))
        second_terms.append(sdp.kron(w_k, sdp.const(generator, (d_d,))))
    signalling_terms: List[sdp.Expr] = []
    for index, generator in enumerate(traceless_hermitian_basis(d_b)):
        l_k = program.add_block(f"l_{index}", BlockKind.FREE_HERMITIAN, (d_c, d_a))
        signalling_terms.append(sdp.permute(sdp.kron(l_k, sdp.const(generator, (d_b,))), (0, 2, 1)))

    to_theta_order = (0, 2, 3, 1)
    adjoint_terms = [
        sdp.permute(sdp.kron(y, sdp.const(link_operator(gamma_n), (d_b, d_a))), to_theta_order),
        sdp.kron(s, sdp.const(_eye(d_b * d_a * d_d), (d_b, d_a, d_d))),
    ]
    objective = sdp.inner(gamma_k, y) + d_b * sdp.trace(s)
    if second_terms:
        w = _sum(second_terms)
        adjoint_terms.append(
            sdp.permute(sdp.kron(w, sdp.const(link_operator(gamma_m), (d_b, d_a))), to_theta_order)
        )
        objective = objective + sdp.inner(gamma_l, w)
    if signalling_terms:
        adjoint_terms.append(sdp.kron(_sum(signalling_terms), sdp.const(_eye(d_d))))

    program.maximize(objective)
    program.psd("budget", 1.0 - sdp.trace(m))
    program.psd("cover", sdp.kron(m, sdp.const(_eye(d_d))) - y)
    program.psd("superchannel_cone", -_sum(adjoint_terms))
    return program


def _sum(terms: List[sdp.Expr]) -> sdp.Expr:
    return sdp.Sum(tuple((1.0, term) for term in terms))
