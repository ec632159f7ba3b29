import random

import pytest
from hypothesis import given, strategies as st

from rational_trust.errors import ParameterError
from rational_trust.trust import Action
from rational_trust.utility import (
    UtilityParams,
    base_utility,
    cooperation_is_equilibrium,
    external_gain_beta,
    future_loss_gamma,
    overall_utility,
    selection_weight,
)

TOL = 1e-12
C, D = Action.COOPERATE, Action.DEFECT


def progression_sum(rho, lifetime, k):
    """Term-by-term lifetime loss while climbing back from 0 in k steps."""
    total = 0.0
    for j in range(k + 1):
        total += lifetime - j * lifetime / k
    return rho / 2 * total


@pytest.mark.parametrize("t, expected", [(-1, 0.0), (1, 1.0), (0, 0.5)])
def test_selection_weight(t, expected):
    assert selection_weight(t) == expected


@pytest.mark.parametrize("t, expected", [(0, 50.0), (1, 100.0), (-1, 0.0)])
def test_base_utility(t, expected):
    assert base_utility(t, 100.0) == pytest.approx(expected, abs=TOL)


def test_base_utility_rejects_nonpositive_omega():
    with pytest.raises(ParameterError):
        base_utility(0.0, 0.0)


@pytest.mark.parametrize(
    "mu, sigma, expected", [(0.05, 0.01, 0.06), (0.0, 0.01, 0.01), (0.09, 0.001, 0.091)]
)
def test_beta(mu, sigma, expected):
    p = UtilityParams(mu_effective=mu, sigma=sigma)
    assert external_gain_beta(p) == pytest.approx(expected, abs=TOL)


def test_gamma_k5_instance():
    assert future_loss_gamma(UtilityParams(rho=0.01, lifetime=1)) == pytest.approx(0.015, abs=TOL)


def test_gamma_zero_lifetime():
    assert future_loss_gamma(UtilityParams(rho=0.3, lifetime=0, recovery_steps_k=7)) == 0.0


def test_gamma_k9():
    p = UtilityParams(rho=0.02, lifetime=10, recovery_steps_k=9)
    assert progression_sum(0.02, 10, 9) == pytest.approx(0.5, abs=TOL)
    assert future_loss_gamma(p) == pytest.approx(0.5, abs=TOL)


def test_gamma_matches_progression():
    rng = random.Random(3)
    for k in range(1, 51):
        rho, lifetime = rng.uniform(0, 0.05), rng.uniform(0, 200)
        p = UtilityParams(rho=rho, lifetime=lifetime, recovery_steps_k=k)
        assert abs(future_loss_gamma(p) - progression_sum(rho, lifetime, k)) <= TOL


def test_bad_k_rejected():
    with pytest.raises(ParameterError):
        UtilityParams(recovery_steps_k=0)


class TestOverallUtility:
    def test_f1_defect(self):
        p = UtilityParams(mu_effective=0.05, sigma=0.01)
        assert overall_utility("f1", D, p) == pytest.approx(53.5, abs=TOL)

    def test_f1_cooperate(self):
        p = UtilityParams(mu_effective=0.05, sigma=0.01)
        assert overall_utility("f1", C, p) == pytest.approx(52.5, abs=TOL)

    def test_f2_cooperate(self):
        p = UtilityParams(mu_effective=0.05, rho=0.01, lifetime=1)
        assert overall_utility("f2", C, p) == pytest.approx(53.0, abs=TOL)

    def test_f2_defect(self):
        p = UtilityParams(mu_effective=0.05, sigma=0.01, rho=0.01, lifetime=1)
        assert overall_utility("f2", D, p) == pytest.approx(52.5, abs=TOL)

    def test_f1_defect_is_unsimplified_form(self):
        p = UtilityParams(mu_effective=0.07, sigma=0.02, omega=3.0)
        raw = p.omega * ((-p.mu_effective + 1) / 2 + external_gain_beta(p))
        assert overall_utility("f1", D, p) == pytest.approx(raw, abs=TOL)


@pytest.mark.parametrize(
    "kwargs, expected",
    [
        (dict(rho=0.01, lifetime=1, sigma=0.01), True),
        (dict(rho=0.01, lifetime=0, sigma=0.01), False),
        (dict(rho=0.01, lifetime=1, sigma=0.02), False),
    ],
)
def test_cooperation_is_equilibrium(kwargs, expected):
    assert cooperation_is_equilibrium(UtilityParams(**kwargs)) is expected


@given(st.floats(-1, 1))
def test_selection_weight_range(t):
    assert 0.0 <= selection_weight(t) <= 1.0
