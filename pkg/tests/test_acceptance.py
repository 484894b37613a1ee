"""Seeded sweeps over random boxes; slow, so they only run with CHANNEL_BOXES_RUN_SLOW=1."""

import math
import os

import numpy as np
import pytest

from channel_boxes import boxtrans, channel_div
from channel_boxes.config import Settings
from channel_boxes.qobjects import (
    ChannelBox,
    CQBox,
    QState,
    apply_channel,
    apply_superchannel,
    max_entangled_state,
    replacer,
    standard_box,
    superchannel_from_pre_post,
    unitary_channel,
)
from channel_boxes.state_div import DivergenceSelector, dmax, dmin, trace_distance

from conftest import random_box, random_channel, random_state

pytestmark = pytest.mark.skipif(
    os.environ.get("CHANNEL_BOXES_RUN_SLOW") != "1",
    reason="acceptance sweeps run only with CHANNEL_BOXES_RUN_SLOW=1",
)

SETTINGS = Settings()


def _boxes(count, seed):
    rng = np.random.default_rng(seed)
    return [random_box(rng) for _ in range(count)]


def _close(a, b, tol):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol


def _gap_ok(report):
    objective = report.solutions["primal"].objective_value
    return report.gap <= 1e-6 * (1.0 + abs(objective))


@pytest.mark.parametrize("M", [2.0, 4.0, 8.0])
def test_standard_box_values(M):
    box = standard_box(M)

    assert boxtrans.distill_exact(box, SETTINGS).log2M == pytest.approx(math.log2(M), abs=1e-6)
    assert boxtrans.dilute_exact(box, SETTINGS).log2M == pytest.approx(math.log2(M), abs=1e-6)


def test_strong_duality_on_random_boxes():
    for box in _boxes(20, 1):
        for report in (
            channel_div.diamond_distance(box.first, box.second, SETTINGS.solver),
            channel_div.channel_dmin_eps(box, 0.1, SETTINGS.solver),
            channel_div.channel_dmax_eps(box, 0.1, SETTINGS.solver),
        ):
            assert _gap_ok(report), report.serialise()
        target = standard_box(2.0)
        result = boxtrans.transform_error(box, target, SETTINGS)
        assert result.primal_dual_gap <= 1e-6 * (1.0 + abs(result.epsilon_star))


def test_max_divergence_is_attained_at_the_entangled_input():
    rng = np.random.default_rng(3)
    for box in _boxes(20, 3):
        exact = channel_div.channel_dmax(box)
        phi = max_entangled_state(2)
        assert dmax(apply_channel(box.first, phi), apply_channel(box.second, phi)) == pytest.approx(exact, abs=1e-6)
        for _ in range(200):
            vector = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            probe = QState.from_vector(vector / np.linalg.norm(vector), (2, 2))
            assert dmax(apply_channel(box.first, probe), apply_channel(box.second, probe)) <= exact + 1e-6


def test_protocol_superchannels_reproduce_their_targets():
    for box in _boxes(10, 4):
        diluted = boxtrans.dilute_exact(box, SETTINGS)
        for produced, expected in zip(
            (apply_superchannel(diluted.superchannel, c) for c in (diluted.source.first, diluted.source.second)),
            (box.first, box.second),
        ):
            assert np.max(np.abs(produced.choi.matrix - expected.choi.matrix)) <= 1e-8

        weight = 2.0 ** -diluted.log2M
        complement = boxtrans._complement_channel(box, diluted.log2M, 1e-6)
        mixture = weight * box.first.choi.matrix + (1.0 - weight) * complement.choi.matrix
        assert np.max(np.abs(mixture - box.second.choi.matrix)) <= 1e-9

        distilled = boxtrans.distill_exact(box, SETTINGS)
        eps_first, second_residual = boxtrans.verify_protocol(distilled.superchannel, box, distilled.target, SETTINGS)
        assert eps_first <= 1e-6
        assert second_residual <= 1e-6


def test_transformations_to_the_standard_box_are_certified():
    for box in _boxes(10, 5):
        exact = channel_div.channel_dmin(box, SETTINGS.solver).value
        assert boxtrans.transform_error(box, standard_box(2.0**exact), SETTINGS).epsilon_star <= 1e-5

        smooth = channel_div.channel_dmin_eps(box, 0.1, SETTINGS.solver).value
        assert boxtrans.transform_error(box, standard_box(2.0**smooth), SETTINGS).epsilon_star <= 0.1 + 1e-5


def test_replacer_boxes_reduce_to_state_quantities():
    rng = np.random.default_rng(6)
    for _ in range(20):
        rho, sigma = random_state(rng), random_state(rng)
        box = ChannelBox(replacer(rho, 2), replacer(sigma, 2))

        assert channel_div.diamond_distance(box.first, box.second, SETTINGS.solver).value == pytest.approx(
            trace_distance(rho, sigma), abs=1e-6
        )
        assert channel_div.channel_dmax(box) == pytest.approx(dmax(rho, sigma), abs=1e-6)
        assert channel_div.channel_dmin(box, SETTINGS.solver).value == pytest.approx(dmin(rho, sigma), abs=1e-6)


def test_cq_closed_forms_match_channel_quantities():
    rng = np.random.default_rng(7)
    for _ in range(10):
        cq = CQBox(tuple((random_state(rng), random_state(rng)) for _ in range(3)))
        box = cq.as_box()

        assert _close(
            channel_div.diamond_distance(box.first, box.second, SETTINGS.solver).value,
            channel_div.cq_divergence(cq, DivergenceSelector("diamond")),
            1e-6,
        )
        assert _close(channel_div.channel_dmax(box), channel_div.cq_divergence(cq, DivergenceSelector("dmax")), 1e-6)
        assert _close(
            channel_div.channel_dmin(box, SETTINGS.solver).value,
            channel_div.cq_divergence(cq, DivergenceSelector("dmin")),
            1e-6,
        )
        relative = DivergenceSelector("relative")
        heuristic = channel_div.channel_div_heuristic(relative, box, settings=SETTINGS.heuristic).value
        assert heuristic == pytest.approx(channel_div.cq_divergence(cq, relative), abs=1e-4)


def test_inequality_suites_hold_on_random_boxes():
    rng = np.random.default_rng(8)
    for box in _boxes(50, 8):
        for eps1, eps2 in ((0.1, 0.1), (0.2, 0.05)):
            assert boxtrans.bound_smooth_min_max(box, eps1, eps2, SETTINGS).passed
        assert boxtrans.bound_smooth_dmax_lower(box, 0.75, 0.1, "sandwiched", SETTINGS).passed
        other = random_channel(rng)
        assert boxtrans.bound_pseudo_continuity("sandwiched", 0.75, box.first, other, box.second, SETTINGS).passed
        assert boxtrans.bound_parallel_converse(box, box, 1, 1, 0.1, 0.75, settings=SETTINGS).passed

        cq = CQBox(tuple((random_state(rng), random_state(rng)) for _ in range(3)))
        assert boxtrans.bound_cq_smooth_dmax_upper(cq, 2.0, 0.2, SETTINGS).passed


def test_non_additivity_of_the_unitary_hull_value():
    unitary = np.diag([1.0, 1j])

    assert channel_div.unitary_dmin(unitary) == pytest.approx(1.0, abs=1e-9)
    assert channel_div.unitary_dmin(np.kron(unitary, unitary)) == math.inf

    pair = ChannelBox(unitary_channel(np.eye(2)), unitary_channel(unitary))
    report = channel_div.channel_dmin(boxtrans.tensor_power_box(pair, 2), SETTINGS.solver)
    assert report.is_infinite or report.value > 30


def test_data_processing_under_random_superchannels():
    rng = np.random.default_rng(10)
    thetas = [superchannel_from_pre_post(random_channel(rng, 2, 4), random_channel(rng, 4, 2), memory_dim=2) for _ in range(20)]
    for box in _boxes(10, 11):
        before = (
            channel_div.channel_dmax(box),
            channel_div.channel_dmin_eps(box, 0.1, SETTINGS.solver).value,
            channel_div.channel_dmax_eps(box, 0.1, SETTINGS.solver).value,
            channel_div.diamond_distance(box.first, box.second, SETTINGS.solver).value,
        )
        for theta in thetas:
            image = ChannelBox(apply_superchannel(theta, box.first), apply_superchannel(theta, box.second))
            after = (
                channel_div.channel_dmax(image),
                channel_div.channel_dmin_eps(image, 0.1, SETTINGS.solver).value,
                channel_div.channel_dmax_eps(image, 0.1, SETTINGS.solver).value,
                channel_div.diamond_distance(image.first, image.second, SETTINGS.solver).value,
            )
            for value_before, value_after in zip(before, after):
                assert value_after <= value_before + 1e-6


def test_smoothing_limits_on_random_boxes():
    for box in _boxes(5, 12):
        table = channel_div.smoothing_limit_check(box, [1e-1, 1e-2, 1e-3, 1e-4], SETTINGS.solver)

        assert table.passed, table.serialise()
