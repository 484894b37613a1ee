import numpy as np
import pytest

from channel_boxes.linalg import HermitianOperator
from channel_boxes.qobjects import (
    Channel,
    ChannelBox,
    CQBox,
    EnvBox,
    QState,
    QuantumObjectError,
    SeizeData,
    Superchannel,
    apply_channel,
    apply_superchannel,
    basis_state,
    channel_from_kraus,
    channel_kraus,
    compose_channels,
    compose_superchannels,
    cq_channel,
    env_realize,
    env_seize_check,
    identity_superchannel,
    max_entangled_state,
    measure_prepare_channel,
    pi_state,
    replacer,
    standard_box,
    superchannel_from_pre_post,
    tensor_channels,
    trivial_env_box,
    unitary_channel,
    validate_superchannel,
)

from conftest import random_channel, random_state

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def test_states_are_validated():
    with pytest.raises(QuantumObjectError):
        QState.from_matrix(np.eye(2))
    with pytest.raises(QuantumObjectError):
        QState.from_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(QuantumObjectError):
        QState.from_vector([0.0, 0.0])

    plus = QState.from_vector([1.0, 1.0])
    assert np.allclose(plus.matrix, np.full((2, 2), 0.5))


def test_channel_rejects_non_trace_preserving_choi():
    with pytest.raises(QuantumObjectError):
        Channel(2, 2, HermitianOperator(np.eye(4) * 0.3, (2, 2)))
    with pytest.raises(QuantumObjectError):
        Channel.from_choi(np.eye(4), 2, 3)


def test_kraus_round_trip_preserves_choi(rng):
    channel = random_channel(rng, 2, 3, kraus_count=3)

    rebuilt = channel_from_kraus(channel_kraus(channel), 2, 3)

    assert channel.choi.trace() == pytest.approx(2.0)
    assert channel.tp_residual < 1e-10
    assert np.allclose(rebuilt.choi.matrix, channel.choi.matrix)


def test_bad_kraus_and_unitary_inputs():
    with pytest.raises(QuantumObjectError):
        channel_from_kraus([np.eye(2) * 0.5], 2, 2)
    with pytest.raises(QuantumObjectError):
        channel_from_kraus([np.eye(2)], 2, 3)
    with pytest.raises(QuantumObjectError):
        unitary_channel(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_repair_projects_small_defects_onto_channels(rng):
    channel = random_channel(rng)
    noisy = channel.choi.matrix + 1e-7 * np.diag([1.0, -1.0, 0.5, 0.0])

    with pytest.raises(QuantumObjectError):
        Channel.from_choi(noisy, 2, 2)
    repaired = Channel.from_choi(noisy, 2, 2, repair=True)

    assert repaired.tp_residual < 1e-10
    assert np.allclose(repaired.choi.matrix, channel.choi.matrix, atol=1e-6)


def test_choi_state_is_channel_on_maximally_entangled_input(rng):
    channel = random_channel(rng, 2, 3)

    output = apply_channel(channel, max_entangled_state(2))

    assert np.allclose(output.matrix, channel.choi_state.matrix)


def test_composition_and_tensor_products(rng):
    hadamard = unitary_channel(HADAMARD)
    sigma = random_state(rng, 2)
    tau = random_state(rng, 3)

    assert np.allclose(compose_channels(hadamard, hadamard).choi.matrix, unitary_channel(np.eye(2)).choi.matrix)
    product = tensor_channels(replacer(sigma, 2), replacer(tau, 1))
    assert (product.in_dim, product.out_dim) == (2, 6)
    assert np.allclose(product.choi.matrix, np.kron(np.eye(2), np.kron(sigma.matrix, tau.matrix)))
    with pytest.raises(QuantumObjectError):
        compose_channels(replacer(tau, 2), hadamard)


def test_measure_prepare_in_computational_basis_is_cq(rng):
    states = [random_state(rng, 2), random_state(rng, 2), random_state(rng, 2)]
    effects = [np.diag(row) for row in np.eye(3)]

    assert np.allclose(measure_prepare_channel(effects, states).choi.matrix, cq_channel(states).choi.matrix)


def test_identity_superchannel_leaves_channels_unchanged(rng):
    channel = random_channel(rng, 2, 3)
    theta = identity_superchannel(2, 3)

    assert validate_superchannel(theta, 1e-9).passed
    assert np.allclose(apply_superchannel(theta, channel).choi.matrix, channel.choi.matrix)


def test_pre_post_superchannel_matches_direct_composition(rng):
    pre = random_channel(rng, 3, 2)
    post = random_channel(rng, 2, 2)
    channel = random_channel(rng, 2, 2)

    theta = superchannel_from_pre_post(pre, post)
    direct = compose_channels(compose_channels(pre, channel), post)

    assert theta.dims == (3, 2, 2, 2)
    assert validate_superchannel(theta, 1e-8).passed
    assert np.allclose(apply_superchannel(theta, channel).choi.matrix, direct.choi.matrix)


def test_superchannel_composition(rng):
    first = superchannel_from_pre_post(random_channel(rng, 2, 2), random_channel(rng, 2, 2))
    second = superchannel_from_pre_post(random_channel(rng, 2, 2), random_channel(rng, 2, 3))
    channel = random_channel(rng, 2, 2)

    composite = compose_superchannels(first, second)
    stepwise = apply_superchannel(second, apply_superchannel(first, channel))

    assert np.allclose(apply_superchannel(composite, channel).choi.matrix, stepwise.choi.matrix)
    with pytest.raises(QuantumObjectError):
        compose_superchannels(second, first)


def test_invalid_superchannel_is_rejected():
    doubled = identity_superchannel(2, 2).choi * 2.0

    report = validate_superchannel(Superchannel((2, 2, 2, 2), doubled), 1e-6)

    assert not report.passed
    assert report.tp_residual == pytest.approx(1.0)
    with pytest.raises(QuantumObjectError):
        Superchannel.from_choi(doubled.matrix, (2, 2, 2, 2))


def test_standard_box_and_pi_state():
    box = standard_box(4.0)

    assert np.allclose(box.second.choi_state.matrix, np.kron(np.eye(2) / 2, np.diag([0.25, 0.75])))
    assert np.allclose(box.first.choi_state.matrix, np.kron(np.eye(2) / 2, np.diag([1.0, 0.0])))
    with pytest.raises(QuantumObjectError):
        pi_state(0.5)


def test_box_and_cq_box_shapes(rng):
    with pytest.raises(QuantumObjectError):
        ChannelBox(random_channel(rng, 2, 2), random_channel(rng, 2, 3))
    with pytest.raises(QuantumObjectError):
        CQBox(((random_state(rng, 2), random_state(rng, 3)),))

    cq = CQBox(((random_state(rng, 2), random_state(rng, 2)), (random_state(rng, 2), random_state(rng, 2))))
    box = cq.as_box()

    assert (box.in_dim, box.out_dim) == (2, 2)
    assert cq.symbols == 2


def test_trivial_environment_realises_the_box(rng):
    box = ChannelBox(random_channel(rng, 2, 2), random_channel(rng, 2, 2))

    realised = env_realize(trivial_env_box(box))

    assert np.allclose(realised.first.choi.matrix, box.first.choi.matrix)
    assert np.allclose(realised.second.choi.matrix, box.second.choi.matrix)
    with pytest.raises(QuantumObjectError):
        env_seize_check(trivial_env_box(box))


def test_seizable_environment_is_recovered():
    box = ChannelBox(replacer(basis_state(2, 0), 1), replacer(basis_state(2, 1), 1))
    env = trivial_env_box(box)
    seize = SeizeData(basis_state(1), unitary_channel(np.eye(2)))

    report = env_seize_check(EnvBox(env.interaction, env.input_dim, env.env_states, seize))

    assert report.passed
    assert report.first_residual == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(QuantumObjectError):
        EnvBox(env.interaction, env.input_dim, env.env_states, SeizeData(basis_state(1), unitary_channel(np.eye(3))))
