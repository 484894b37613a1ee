import math

import numpy as np
import pytest

from channel_boxes import boxtrans
from channel_boxes.config import BoxSettings, Settings
from channel_boxes.qobjects import (
    ChannelBox,
    CQBox,
    QState,
    QuantumObjectError,
    apply_superchannel,
    basis_state,
    identity_superchannel,
    pi_state,
    replacer,
    standard_box,
    validate_superchannel,
)
from channel_boxes.sdp import Solution, SolveStatus
from channel_boxes.state_div import DivergenceError

from conftest import random_box

MIXED = QState.from_matrix(np.eye(2) / 2)


def _replacer_box(M=4.0):
    return ChannelBox(replacer(basis_state(2), 2), replacer(pi_state(M), 2))


def _orthogonal_box():
    return ChannelBox(replacer(basis_state(2, 0), 2), replacer(basis_state(2, 1), 2))


@pytest.fixture
def settings():
    return Settings()


def test_transforming_a_box_into_itself_costs_nothing(rng, settings):
    box = random_box(rng)

    result = boxtrans.transform_error(box, box, settings)

    assert result.epsilon_star == pytest.approx(0.0, abs=1e-5)
    assert result.validation.passed
    assert result.superchannel.dims == (2, 2, 2, 2)
    assert result.serialise()["superchannel"]["order"] == ["C", "R_B", "A", "D"]


def test_standard_boxes_only_coarse_grain_downwards(settings):
    down = boxtrans.transform_error(_replacer_box(4.0), _replacer_box(2.0), settings)
    up = boxtrans.transform_error(_replacer_box(2.0), _replacer_box(4.0), settings)

    assert down.epsilon_star == pytest.approx(0.0, abs=1e-5)
    assert up.epsilon_star == pytest.approx(0.5, abs=1e-5)

    eps_first, second_residual = boxtrans.verify_protocol(up.superchannel, _replacer_box(2.0), _replacer_box(4.0), settings)
    assert eps_first == pytest.approx(0.5, abs=1e-4)
    assert second_residual < 1e-4


def test_infeasible_second_channel_raises(monkeypatch, settings):
    infeasible = Solution("box-transform-primal", SolveStatus.INFEASIBLE, {}, {}, math.inf, 0.0)
    unbounded = Solution("box-transform-dual", SolveStatus.UNBOUNDED, {}, {}, math.inf, 0.0)
    monkeypatch.setattr(boxtrans, "solve_primal_dual", lambda *args: (infeasible, unbounded, math.nan))

    with pytest.raises(boxtrans.InfeasibleTransformError):
        boxtrans.transform_error(_replacer_box(), _replacer_box(2.0), settings)


def test_verify_protocol_checks_dimensions(settings):
    with pytest.raises(QuantumObjectError):
        boxtrans.verify_protocol(identity_superchannel(2, 3), _replacer_box(), _replacer_box(), settings)


@pytest.mark.parametrize("eps", [0.0, 0.2])
def test_distillation_witness_reaches_the_standard_box(eps, settings):
    box = _replacer_box(4.0)

    result = boxtrans.distill_eps(box, eps, settings)

    assert result.log2M == pytest.approx(2.0 - math.log2(1.0 - eps), abs=1e-5)
    assert result.superchannel is not None
    assert validate_superchannel(result.superchannel, 1e-6).passed
    eps_first, second_residual = boxtrans.verify_protocol(result.superchannel, box, result.target, settings)
    assert eps_first <= eps + 1e-5
    assert second_residual < 1e-5


def test_distillation_of_perfectly_distinguishable_box(settings):
    result = boxtrans.distill_eps(_orthogonal_box(), 0.1, settings)

    assert result.perfectly_distinguishable
    assert result.status == "perfectly distinguishable"
    payload = result.serialise()
    assert payload["log2M"] == "+inf"
    assert payload["superchannel"] is None


def test_exact_distillation_of_a_random_box_verifies(rng, settings):
    box = random_box(rng)

    result = boxtrans.distill_exact(box, settings)
    eps_first, second_residual = boxtrans.verify_protocol(result.superchannel, box, result.target, settings)

    assert eps_first <= 1e-6
    assert second_residual <= 1e-6


def test_transform_status_follows_the_paired_gap(rng, settings):
    for _ in range(2):
        result = boxtrans.transform_error(random_box(rng), random_box(rng), settings)

        assert result.status == "optimal"
        assert result.primal_dual_gap <= 1e-6 * (1.0 + result.epsilon_star)


def test_exact_dilution_from_the_standard_box(rng, settings):
    box = random_box(rng)

    result = boxtrans.dilute_exact(box, settings)

    assert result.log2M == pytest.approx(boxtrans.channel_dmax(box))
    eps_first, second_residual = boxtrans.verify_protocol(result.superchannel, result.source, box, settings)
    assert eps_first < 1e-5
    assert second_residual < 1e-5


def test_dilution_needs_finite_max_divergence(settings):
    with pytest.raises(DivergenceError):
        boxtrans.dilute_exact(_orthogonal_box(), settings)
    assert boxtrans.dilute_eps(_replacer_box(), 0.0, settings).log2M == pytest.approx(2.0)


def test_smoothed_dilution(settings):
    box = _replacer_box(4.0)

    result = boxtrans.dilute_eps(box, 0.1, settings)

    assert result.log2M == pytest.approx(2.0 + math.log2(0.9), abs=1e-5)
    eps_first, second_residual = boxtrans.verify_protocol(result.superchannel, result.source, box, settings)
    assert eps_first <= 0.1 + 1e-5
    assert second_residual < 1e-5


def test_tensor_power_box_dimensions_and_cap():
    box = _replacer_box()

    power = boxtrans.tensor_power_box(box, 2)

    assert (power.in_dim, power.out_dim) == (4, 4)
    with pytest.raises(QuantumObjectError):
        boxtrans.tensor_power_box(box, 3, cap=16)
    with pytest.raises(QuantumObjectError):
        boxtrans.tensor_power_box(box, 0)


def test_coarse_graining_between_standard_boxes():
    theta = boxtrans.standard_box_coarse_graining(4.0, 2.0)
    larger, smaller = standard_box(4.0), standard_box(2.0)

    assert np.allclose(apply_superchannel(theta, larger.first).choi.matrix, smaller.first.choi.matrix)
    assert np.allclose(apply_superchannel(theta, larger.second).choi.matrix, smaller.second.choi.matrix)
    with pytest.raises(QuantumObjectError):
        boxtrans.standard_box_coarse_graining(2.0, 4.0)


def test_two_step_transform_composes_distill_and_dilute(settings):
    result = boxtrans.two_step_transform(_replacer_box(4.0), _replacer_box(2.0), 0.0, 0.0, settings)

    assert result.applicable
    assert result.distill_value == pytest.approx(2.0, abs=1e-5)
    assert result.dilute_value == pytest.approx(1.0)
    assert result.epsilon_first < 1e-4
    assert result.second_residual < 1e-4


def test_two_step_transform_reports_when_not_applicable(settings):
    result = boxtrans.two_step_transform(_replacer_box(2.0), _replacer_box(4.0), 0.0, 0.0, settings)

    assert not result.applicable
    assert "below" in result.reason
    assert result.serialise()["superchannel"] is None


def test_parallel_values_are_additive_for_replacers():
    settings = Settings(boxes=BoxSettings(tensor_dim_cap=16))

    rows = boxtrans.parallel_values(_replacer_box(4.0), 5, settings)

    assert [row.copies for row in rows] == [1, 2]
    for row in rows:
        assert row.dmin_per_copy == pytest.approx(2.0, abs=1e-4)
        assert row.dmax_per_copy == pytest.approx(2.0)


def test_smooth_min_max_bound_is_certified(settings):
    report = boxtrans.bound_smooth_min_max(_replacer_box(), 0.1, 0.1, settings)

    assert report.passed
    assert report.label == boxtrans.CERTIFIED
    assert report.lhs == pytest.approx(2.0 - math.log2(0.9), abs=1e-5)
    with pytest.raises(DivergenceError):
        boxtrans.bound_smooth_min_max(_replacer_box(), 0.6, 0.5, settings)


def test_cq_smooth_dmax_upper_bound(settings):
    cq = CQBox(((basis_state(2), pi_state(4.0)), (MIXED, pi_state(2.0))))

    report = boxtrans.bound_cq_smooth_dmax_upper(cq, 2.0, 0.1, settings)

    assert report.passed
    assert report.details["symbols"] == 2
    with pytest.raises(DivergenceError):
        boxtrans.bound_cq_smooth_dmax_upper(cq, 0.5, 0.1, settings)


def test_parallel_converse_flags_impossible_claims(settings):
    box = _replacer_box(4.0)

    honest = boxtrans.bound_parallel_converse(box, box, 1, 1, 0.0, 0.75, settings=settings)
    greedy = boxtrans.bound_parallel_converse(box, box, 1, 3, 0.1, 0.75, settings=settings)

    assert honest.passed
    assert honest.label == boxtrans.CERTIFIED
    assert honest.lhs == pytest.approx(1.0)
    assert not greedy.passed
    assert greedy.details["claim_violates_bound"]
    with pytest.raises(DivergenceError):
        boxtrans.bound_parallel_converse(box, box, 1, 1, 0.0, 0.25, settings=settings)


@pytest.mark.parametrize("kind, alpha", [("sandwiched", 0.75), ("petz", 0.5), ("petz", 0.0)])
def test_smooth_dmax_lower_bound(kind, alpha, settings):
    report = boxtrans.bound_smooth_dmax_lower(_replacer_box(), alpha, 0.1, kind, settings)

    assert report.passed
    assert report.label == boxtrans.CONSISTENCY_CHECK


def test_pseudo_continuity_bounds(settings):
    near = QState.from_matrix(np.diag([0.9, 0.1]))
    n0, n1, m = replacer(basis_state(2), 2), replacer(near, 2), replacer(pi_state(4.0), 2)

    sandwiched = boxtrans.bound_pseudo_continuity("sandwiched", 0.75, n0, n1, m, settings)
    petz = boxtrans.bound_pseudo_continuity("petz", 0.5, n0, n1, m, settings)

    assert sandwiched.passed and petz.passed
    assert sandwiched.details["fidelity"] == pytest.approx(0.9, abs=1e-6)
    assert petz.details["diamond_distance"] == pytest.approx(0.1, abs=1e-6)
    with pytest.raises(DivergenceError):
        boxtrans.bound_pseudo_continuity("sandwiched", 0.4, n0, n1, m, settings)


def test_smooth_dmin_petz_bound(settings):
    report = boxtrans.bound_smooth_dmin_petz(_replacer_box(), 0.5, 0.1, settings)

    assert report.passed
    assert report.serialise()["details"]["heuristic_inputs"] is True


def test_bound_report_serialises_infinities():
    report = boxtrans.BoundReport("demo", math.inf, 1.0, math.inf, True, boxtrans.CERTIFIED, {"x": math.inf})

    payload = report.serialise()

    assert payload["lhs"] == "+inf"
    assert payload["details"]["x"] == "+inf"


def test_identity_superchannel_witnesses_zero_error(settings):
    box = _replacer_box()
    theta = identity_superchannel(2, 2)

    assert boxtrans.verify_protocol(theta, box, box, settings) == pytest.approx((0.0, 0.0), abs=1e-6)

