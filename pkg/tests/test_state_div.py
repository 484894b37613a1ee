import math

import numpy as np
import pytest

from channel_boxes.config import SolverSettings
from channel_boxes.qobjects import QState, basis_state
from channel_boxes.state_div import (
    DivergenceError,
    DivergenceSelector,
    dmax,
    dmax_eps,
    dmin,
    dmin_eps,
    fidelity,
    hypothesis_test_witness,
    rel_ent_variance,
    rel_entropy,
    renyi,
    state_divergence,
    trace_distance,
)

from conftest import random_state

ZERO = basis_state(2, 0)
ONE = basis_state(2, 1)
MIXED = QState.from_matrix(np.eye(2) / 2)


def _diagonal(*probabilities):
    return QState.from_matrix(np.diag(probabilities))


def test_distances_between_pure_and_mixed():
    assert trace_distance(ZERO, MIXED) == pytest.approx(0.5)
    assert fidelity(ZERO, MIXED) == pytest.approx(0.5)
    assert trace_distance(ZERO, ONE) == pytest.approx(1.0)
    assert fidelity(ZERO, ONE) == pytest.approx(0.0)


def test_min_and_max_relative_entropies():
    assert dmin(ZERO, MIXED) == pytest.approx(1.0)
    assert dmax(ZERO, MIXED) == pytest.approx(1.0)
    assert dmax(MIXED, ZERO) == math.inf
    assert dmin(ZERO, ONE) == math.inf
    assert dmin(MIXED, ZERO) == pytest.approx(0.0)


def test_commuting_states_reduce_to_classical_formulas():
    p, q = _diagonal(0.7, 0.3), _diagonal(0.4, 0.6)
    alpha = 0.6

    classical = 0.7 * math.log2(0.7 / 0.4) + 0.3 * math.log2(0.3 / 0.6)
    power_sum = 0.7**alpha * 0.4 ** (1 - alpha) + 0.3**alpha * 0.6 ** (1 - alpha)
    variance = 0.7 * (math.log2(0.7 / 0.4) - classical) ** 2 + 0.3 * (math.log2(0.3 / 0.6) - classical) ** 2

    assert rel_entropy(p, q) == pytest.approx(classical)
    assert renyi("petz", alpha, p, q) == pytest.approx(math.log2(power_sum) / (alpha - 1))
    assert renyi("sandwiched", alpha, p, q) == pytest.approx(math.log2(power_sum) / (alpha - 1))
    assert rel_ent_variance(p, q) == pytest.approx(variance)


def test_renyi_family_ordering(rng):
    rho, sigma = random_state(rng, 3), random_state(rng, 3)

    lowest = dmin(rho, sigma)
    relative = rel_entropy(rho, sigma)
    highest = dmax(rho, sigma)

    assert lowest <= relative + 1e-9 <= highest + 2e-9
    for alpha in (0.5, 0.8, 1.5, 2.0):
        assert renyi("sandwiched", alpha, rho, sigma) <= renyi("petz", alpha, rho, sigma) + 1e-9
    assert renyi("sandwiched", 0.5, rho, sigma) == pytest.approx(-math.log2(fidelity(rho, sigma)))
    assert renyi("sandwiched", 1.5, rho, sigma) <= highest + 1e-9


def test_renyi_support_and_argument_errors():
    assert renyi("petz", 2.0, MIXED, ZERO) == math.inf
    assert rel_entropy(MIXED, ZERO) == math.inf
    with pytest.raises(DivergenceError):
        renyi("petz", 1.0, ZERO, MIXED)
    with pytest.raises(DivergenceError):
        renyi("petz", -0.5, ZERO, MIXED)
    with pytest.raises(DivergenceError):
        renyi("geometric", 0.5, ZERO, MIXED)
    with pytest.raises(DivergenceError):
        rel_ent_variance(MIXED, ZERO)
    with pytest.raises(DivergenceError):
        trace_distance(ZERO, basis_state(3))


def test_hypothesis_test_of_identical_states():
    rho = _diagonal(0.6, 0.4)

    result = hypothesis_test_witness(rho, rho, 0.25, SolverSettings())

    assert result.value == pytest.approx(-math.log2(0.75), abs=1e-6)
    assert result.effect is not None
    assert np.real(np.trace(result.effect.matrix @ rho.matrix)) >= 0.75 - 1e-6


def test_smoothed_min_entropy_is_monotone_in_eps(rng):
    rho, sigma = random_state(rng, 2), random_state(rng, 2)

    values = [dmin_eps(rho, sigma, eps, SolverSettings()) for eps in (0.0, 0.1, 0.3)]

    assert values[0] == pytest.approx(dmin(rho, sigma), abs=1e-5)
    assert values[0] <= values[1] + 1e-7 <= values[2] + 2e-7


def test_orthogonal_hypothesis_test_is_infinite():
    assert dmin_eps(ZERO, ONE, 0.1, SolverSettings()) == math.inf


def test_smoothed_max_entropy_of_pure_state_against_mixed():
    assert dmax_eps(ZERO, MIXED, 0.0, SolverSettings()) == pytest.approx(1.0, abs=1e-5)
    assert dmax_eps(ZERO, MIXED, 0.1, SolverSettings()) == pytest.approx(1 + math.log2(0.9), abs=1e-5)
    assert dmax_eps(MIXED, MIXED, 0.2, SolverSettings()) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("eps", [-0.1, 1.0])
def test_smoothing_parameter_must_be_in_range(eps):
    with pytest.raises(DivergenceError):
        dmin_eps(ZERO, MIXED, eps)
    with pytest.raises(DivergenceError):
        dmax_eps(ZERO, MIXED, eps)


def test_selector_parsing():
    assert str(DivergenceSelector.parse("Petz:0.5")) == "petz:0.5"
    assert DivergenceSelector.parse("dmax") == DivergenceSelector("dmax")
    for text in ("sandwiched", "dmin:0.5", "petz:1", "petz:x", "hellinger"):
        with pytest.raises(DivergenceError):
            DivergenceSelector.parse(text)


def test_state_divergence_dispatch():
    assert state_divergence(DivergenceSelector("fidelity"), ZERO, ONE) == math.inf
    assert state_divergence(DivergenceSelector("trace"), ZERO, MIXED) == pytest.approx(0.5)
    assert state_divergence(DivergenceSelector("dmax"), ZERO, MIXED) == pytest.approx(1.0)
    assert state_divergence(DivergenceSelector("relative"), ZERO, MIXED) == pytest.approx(1.0)
    assert state_divergence(DivergenceSelector("diamond"), ZERO, MIXED) == pytest.approx(0.5)


def test_state_divergence_rejects_kinds_without_a_state_form():
    selector = DivergenceSelector("trace")
    object.__setattr__(selector, "kind", "hellinger")

    with pytest.raises(DivergenceError):
        state_divergence(selector, ZERO, MIXED)


def test_small_but_resolved_eigenvalues_stay_in_the_support():
    rho = _diagonal(0.6, 0.4 - 5e-10, 5e-10)
    sigma = _diagonal(0.5, 0.5 - 5e-11, 5e-11)
    classical = (
        0.6 * math.log2(0.6 / 0.5)
        + (0.4 - 5e-10) * math.log2((0.4 - 5e-10) / (0.5 - 5e-11))
        + 5e-10 * math.log2(10.0)
    )
    quasi = 0.6**2 / 0.5 + (0.4 - 5e-10) ** 2 / (0.5 - 5e-11) + (5e-10) ** 2 / 5e-11

    assert dmax(rho, sigma) == pytest.approx(math.log2(10.0), abs=1e-6)
    assert rel_entropy(rho, sigma) == pytest.approx(classical, abs=1e-9)
    assert renyi("sandwiched", 2.0, rho, sigma) == pytest.approx(math.log2(quasi), abs=1e-9)
    assert rel_ent_variance(rho, sigma) >= 0.0


def test_weight_outside_the_support_is_infinite():
    rho = _diagonal(1 - 1e-9, 1e-9)
    sigma = _diagonal(1.0, 0.0)

    assert dmax(rho, sigma) == math.inf
    assert rel_entropy(rho, sigma) == math.inf
    assert renyi("petz", 2.0, rho, sigma) == math.inf
    assert math.isfinite(renyi("petz", 0.5, rho, sigma))


def test_rounding_noise_is_not_support():
    rotation = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2) @ np.diag([1.0, 1j])
    sigma = QState.from_matrix(rotation @ np.diag([1.0, 0.0]) @ rotation.conj().T)
    rho = QState.from_matrix(rotation @ np.diag([0.5, 0.5]) @ rotation.conj().T)

    assert dmax(rho, sigma) == math.inf
    assert rel_entropy(rho, sigma) == math.inf
    assert dmax(sigma, rho) == pytest.approx(1.0, abs=1e-9)
