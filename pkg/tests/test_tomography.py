import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmeas import qcore, tomography as tomo
from pmeas.rng import make_rng

thetas = st.floats(0.01, math.pi - 0.01)
phis = st.floats(0, 2 * math.pi, exclude_max=True)
strengths = st.floats(0.05, 1.0)


def _dphi(a, b):
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


@settings(max_examples=200)
@given(thetas, phis, strengths)
def test_exact_roundtrip(theta, phi, p):
    probs = tomo.exact_probabilities(qcore.bloch_state(theta, phi), p)
    th = tomo.estimate_theta(probs["z"], p)
    assert th == pytest.approx(theta, abs=1e-9)
    assert _dphi(tomo.estimate_phi(probs["h"], probs["y"], p, th), phi) <= 1e-9


def test_setting_probabilities_known_states():
    p = 0.5
    assert tomo.setting_probability(qcore.ONE, p, "z") == pytest.approx(p)
    assert tomo.setting_probability(qcore.PLUS, p, "h") == pytest.approx(0)
    assert tomo.setting_probability(qcore.MINUS, p, "h") == pytest.approx(p)
    # +y eigenstate: sigma_y = +1 means zero switching in the y setting
    assert tomo.setting_probability(qcore.bloch_state(math.pi / 2, math.pi / 2), p, "y") == pytest.approx(0, abs=1e-15)


def test_phi_undefined_at_pole():
    with pytest.raises(ValueError, match="pole"):
        tomo.estimate_phi(0.25, 0.25, 0.5, 0.0)


def test_inconsistent_frequency_rejected():
    with pytest.raises(ValueError):
        tomo.estimate_theta(0.7, 0.5)
    with pytest.raises(ValueError):
        tomo.estimate_theta(0.1, 0.0)


def test_wrap_phi():
    assert tomo.wrap_phi(2 * math.pi - 0.5) == pytest.approx(-0.5)
    assert tomo.wrap_phi(-math.pi) == math.pi
    assert -math.pi < tomo.wrap_phi(7.0) <= math.pi


def test_sampled_counts_and_clamping():
    counts = tomo.CountTable({"z": (0, 100), "h": (50, 50), "y": (50, 50)})
    est = tomo.ensemble_estimate(counts, 0.6)
    assert "z" in est.clamped
    assert est.angles.theta == pytest.approx(math.pi)


def test_count_table_validation():
    with pytest.raises(ValueError):
        tomo.CountTable({"z": (1, 1)})


def test_standard_errors_shrink():
    s = qcore.bloch_state(1.2, 2.2)
    rng = make_rng(8)
    small = tomo.ensemble_estimate(tomo.sample_counts(s, 0.7, 1_000, rng), 0.7)
    big = tomo.ensemble_estimate(tomo.sample_counts(s, 0.7, 100_000, rng), 0.7)
    assert big.theta_se < small.theta_se / 5
    assert set(big.to_dict()) >= {"theta", "phi", "theta_se", "phi_se"}


def test_survival_is_state_independent():
    p, rounds, n = 0.4, 2, 40_000
    a = tomo.survival_monte_carlo(qcore.ZERO, p, rounds, n, seed=1)
    b = tomo.survival_monte_carlo(qcore.bloch_state(2.0, 1.0), p, rounds, n, seed=2)
    assert abs(tomo.two_proportion_z(round(a * n), n, round(b * n), n)) < 3
    assert tomo.survival_probability(p, rounds) == pytest.approx(0.36)


def test_survival_argument_checks():
    with pytest.raises(ValueError):
        tomo.survival_probability(1.0, 1)
    with pytest.raises(ValueError):
        tomo.survival_probability(0.5, -1)


def test_two_proportion_z_degenerate():
    assert tomo.two_proportion_z(0, 10, 0, 10) == 0.0
