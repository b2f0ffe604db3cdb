import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmeas import povm, qcore
from pmeas.povm import IrreversibleMeasurementError, Outcome, PartialMeasurement
from pmeas.qcore import ImpossibleBranchError
from pmeas.rng import make_rng

unit = st.floats(0, 1, allow_nan=False)
open_unit = st.floats(0.01, 0.99)
seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("p,q", [(-0.1, 0), (1.2, 0), (0.5, -1e-3), (float("nan"), 0)])
def test_strength_validation(p, q):
    with pytest.raises(ValueError, match="out of"):
        PartialMeasurement(p, q)


def test_clamp_probability():
    assert povm.clamp_probability(-1e-14) == 0.0
    assert povm.clamp_probability(1 + 1e-14) == 1.0
    with pytest.raises(qcore.InvariantError):
        povm.clamp_probability(1.1)


@settings(max_examples=100)
@given(unit, unit)
def test_kraus_complete(p, q):
    assert povm.kraus_completeness_error(PartialMeasurement(p, q)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(unit, seeds)
def test_born_probability_q0(p, seed):
    s = qcore.random_state(make_rng(seed))
    pm, pmbar = povm.branch_probabilities(s, PartialMeasurement(p))
    assert pmbar == pytest.approx(p * abs(s.amplitudes[1]) ** 2, abs=1e-12)
    assert pm + pmbar == pytest.approx(1, abs=1e-12)


def test_known_post_states():
    s = qcore.PLUS
    b = povm.apply_branch(s, PartialMeasurement(0.75), "m")
    assert b.probability == pytest.approx(1 - 0.75 / 2)
    want = np.array([1, 0.5]) / math.sqrt(1.25)
    assert np.allclose(b.post_state.amplitudes, want)
    assert povm.apply_branch(s, PartialMeasurement(0.75), "mbar").post_state.allclose(qcore.ONE)


def test_impossible_branch():
    with pytest.raises(ImpossibleBranchError):
        povm.apply_branch(qcore.ZERO, PartialMeasurement(0.5), Outcome.MBAR)


def test_projective_limit():
    b = povm.apply_branch(qcore.PLUS, PartialMeasurement(1.0), "m")
    assert b.post_state.allclose(qcore.ZERO)


def test_choose_rule():
    meas = PartialMeasurement(1.0)
    assert povm.choose(qcore.PLUS, meas, 0.49).outcome is Outcome.MBAR
    assert povm.choose(qcore.PLUS, meas, 0.5).outcome is Outcome.M


def test_sample_frequency():
    rng = make_rng(5)
    meas = PartialMeasurement(0.6)
    n = 4000
    k = sum(povm.sample(qcore.PLUS, meas, rng).outcome is Outcome.MBAR for _ in range(n))
    assert abs(k - n * 0.3) <= 3 * math.sqrt(n * 0.3 * 0.7)


@settings(max_examples=60, deadline=None)
@given(open_unit, seeds)
def test_reversal_restores_state(p, seed):
    s = qcore.random_state(make_rng(seed))
    meas = PartialMeasurement(p)
    first = povm.apply_branch(s, meas, "m")
    back = povm.reverse_branch(first.post_state, meas)
    assert back.post_state.allclose(s, atol=1e-10)
    assert first.probability * back.probability == pytest.approx(1 - p, abs=1e-12)


def test_reversal_kraus_and_inverse():
    meas = PartialMeasurement(0.6, 0.3)
    r_m, r_mbar = povm.reversal_kraus(meas)
    m, mbar = povm.kraus_pair(meas)
    assert np.allclose(r_m.matrix @ m.matrix, math.sqrt(0.4 * 0.7) * np.eye(2))
    assert np.allclose(r_mbar.matrix @ mbar.matrix, math.sqrt(0.18) * np.eye(2))
    inv = povm.inverse_kraus(meas, "m")
    assert np.allclose(inv.matrix @ m.matrix, np.eye(2))


def test_reversal_singular_cases():
    assert povm.reversal_kraus(PartialMeasurement(0.5))[1] is None
    with pytest.raises(IrreversibleMeasurementError, match="irreversible"):
        povm.reversal_kraus(PartialMeasurement(1.0))
    with pytest.raises(IrreversibleMeasurementError):
        povm.do_undo(qcore.PLUS, PartialMeasurement(1.0), 0)


def test_do_undo_trajectory():
    rec = povm.do_undo(qcore.PLUS, PartialMeasurement(0.5), 7)
    assert rec.seed == 7
    if rec.survived:
        assert rec.final_state.allclose(qcore.PLUS)
        assert len(rec.steps) == 2
    again = povm.do_undo(qcore.PLUS, PartialMeasurement(0.5), 7)
    assert again.survived == rec.survived and again.steps == rec.steps


def test_do_undo_batch_prefix_stable():
    meas = PartialMeasurement(0.4)
    a = povm.do_undo_batch(qcore.PLUS, meas, 5000, seed=2)
    b = povm.do_undo_batch(qcore.PLUS, meas, 9000, seed=2)
    assert np.array_equal(a, b[:5000])


def test_multi_round_survival():
    ok = povm.do_undo_batch(qcore.ONE, PartialMeasurement(0.3), 50_000, seed=4, rounds=3)
    want = 0.7**3
    assert abs(ok.mean() - want) <= 3 * math.sqrt(want * (1 - want) / 50_000)


@settings(max_examples=40, deadline=None)
@given(unit, unit, seeds)
def test_dilation_matches_direct(p, q, seed):
    s = qcore.random_state(make_rng(seed))
    meas = PartialMeasurement(p, q)
    pm, pmbar, sm, smbar = povm.dilated_measure(s, meas)
    dm, dmbar = povm.branch_probabilities(s, meas)
    assert pm == pytest.approx(dm, abs=1e-12) and pmbar == pytest.approx(dmbar, abs=1e-12)
    if dm > 1e-9:
        assert sm.allclose(povm.apply_branch(s, meas, "m").post_state, atol=1e-9)


def test_dilation_on_wider_register():
    s = qcore.tensor(qcore.PLUS, qcore.bloch_state(1.0, 0.5))
    meas = PartialMeasurement(0.7, 0.2, target=1)
    pm, _, sm, _ = povm.dilated_measure(s, meas)
    direct = povm.apply_branch(s, meas, "m")
    assert pm == pytest.approx(direct.probability)
    assert sm.allclose(direct.post_state)


def test_dilation_rejects_unnormalized():
    with pytest.raises(ValueError):
        povm.dilated_measure(qcore.StateVector([1, 1]), PartialMeasurement(0.5))


def test_entropy():
    assert povm.binary_entropy(0.5) == pytest.approx(math.log(2))
    assert povm.measurement_entropy(qcore.ZERO, PartialMeasurement(0.5)) == 0.0
    with pytest.raises(ValueError):
        povm.measurement_entropy(qcore.ZERO, PartialMeasurement(0.5, 0.1))


def test_x_measurement_form():
    meas = povm.x_measurement(0.64)
    m, mbar = povm.kraus_pair(meas)
    assert np.allclose(mbar.matrix, 0.8 * qcore.projector(qcore.MINUS).matrix)
    assert povm.branch_probabilities(qcore.PLUS, meas)[1] == pytest.approx(0)
    assert np.allclose(meas.flip.matrix, qcore.Z.matrix)
    # reversal works in the rotated basis too
    s = qcore.bloch_state(0.9, 2.0)
    first = povm.apply_branch(s, meas, "m")
    assert povm.reverse_branch(first.post_state, meas).post_state.allclose(s, atol=1e-12)


def test_rotated_rejects_non_unitary():
    with pytest.raises(ValueError):
        povm.rotated(PartialMeasurement(0.5), qcore.Operator([[1, 1], [0, 1]]))


@pytest.mark.parametrize("p,q,order", [(0.7, 0.2, "swapped"), (0.4, 0.4, "both"), (0.0, 0.9, "swapped")])
def test_composition_order(p, q, order):
    rep = povm.compose_identity_check(p, q)
    assert rep.order == order
    assert rep.cross_term_zero and rep.mbar_matches_qp
    assert rep.to_dict()["order"] == order


def test_tunneling_conversion():
    assert povm.p_from_tunneling(povm.TunnelingModel(2.0, 0.0)) == 0.0
    assert povm.p_from_tunneling(povm.TunnelingModel(1.0, math.log(4))) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        povm.TunnelingModel(-1.0, 1.0)
