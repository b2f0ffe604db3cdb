import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmeas import entanglement as ent, qcore
from pmeas.entanglement import BellLabel
from pmeas.qcore import StateVector, apply_op, basis_state
from pmeas.rng import make_rng


@pytest.mark.parametrize("label", ent.BELL_LABELS)
def test_bell_states_maximally_entangled(label):
    s = ent.bell_state(label)
    assert qcore.is_normalized(s)
    assert ent.concurrence(s) == pytest.approx(1.0, abs=1e-12)


def test_bell_states_orthonormal():
    g = np.array([[qcore.inner(ent.bell_state(a), ent.bell_state(b)) for b in ent.BELL_LABELS]
                  for a in ent.BELL_LABELS])
    assert np.allclose(g, np.eye(4))


def test_product_state_has_zero_concurrence():
    assert ent.concurrence(qcore.tensor(qcore.PLUS, qcore.bloch_state(1, 2))) == pytest.approx(0, abs=1e-12)


@given(st.floats(0, math.pi))
def test_concurrence_of_cos_sin_state(t):
    s = StateVector([math.cos(t / 2), 0, 0, math.sin(t / 2)])
    assert ent.concurrence(s) == pytest.approx(abs(math.sin(t)), abs=1e-12)


def test_concurrence_guards():
    with pytest.raises(ValueError):
        ent.concurrence(qcore.PLUS)
    with pytest.raises(ValueError):
        ent.concurrence(StateVector([1, 0, 0, 1]))


def test_chsh_tsirelson_and_product():
    assert ent.chsh_value(ent.bell_state("Phi+")) == pytest.approx(2 * math.sqrt(2))
    assert abs(ent.chsh_value(basis_state("00"))) <= 2 + 1e-12
    assert ent.violates_chsh(ent.bell_state("Phi+"))


def test_chsh_threshold_constant():
    assert ent.CHSH_THRESHOLD_P == pytest.approx(0.8284271247, abs=1e-9)
    at = ent.partially_measured_bell("Phi+", ent.CHSH_THRESHOLD_P)
    assert ent.chsh_value(at) == pytest.approx(2.0, abs=1e-12)


def test_basis_change_table():
    v = ent.bell_basis_change("to_computational")
    for label, bits in ent.BELL_TO_COMPUTATIONAL.items():
        assert apply_op(ent.bell_state(label), v, [0, 1]).allclose(basis_state(bits))
    back = ent.bell_basis_change("to_bell")
    assert np.allclose(back.matrix @ v.matrix, np.eye(4))
    with pytest.raises(ValueError):
        ent.bell_basis_change("sideways")


def test_bell_pair_state_layout():
    s = ent.bell_pair_state("Phi+", "Psi-")
    # qubits a,b,c,d = 0,1,2,3; (a,d) in Phi+, (b,c) in Psi-
    pops = ent.bell_populations(s, (0, 3), (1, 2))
    assert pops[0, 0].real == pytest.approx(1)
    pops_bc = ent.bell_populations(s, (1, 2), (0, 3))
    assert pops_bc[3, 3].real == pytest.approx(1)


def test_expansion_of_singlet_pair():
    s = qcore.tensor(ent.bell_state("Psi-"), ent.bell_state("Psi-"))
    c = ent.bell_expansion(s)
    nonzero = {(str(a), str(b)): v for (a, b), v in c.items() if abs(v) > 1e-12}
    assert nonzero == pytest.approx({("Psi+", "Psi+"): 0.5, ("Psi-", "Psi-"): -0.5,
                                     ("Phi+", "Phi+"): -0.5, ("Phi-", "Phi-"): 0.5})


def test_expansion_guards():
    with pytest.raises(ValueError):
        ent.bell_expansion(ent.bell_state("Phi+"))
    with pytest.raises(ValueError):
        ent.bell_expansion(basis_state("0000"), partition=((0, 1), (1, 2)))


def test_bell_diagonal_concurrence():
    assert ent.bell_diagonal_concurrence(np.diag([0.7, 0.1, 0.1, 0.1])) == pytest.approx(0.4)
    assert ent.bell_diagonal_concurrence(np.diag([0.25] * 4)) == 0.0
    with pytest.raises(ValueError, match="Bell-diagonal"):
        ent.bell_diagonal_concurrence(np.full((4, 4), 0.25))


@pytest.mark.parametrize("label", ent.BELL_LABELS)
@pytest.mark.parametrize("target", [0, 1])
def test_measured_bell_closed_form(label, target):
    for p in (0.0, 0.3, 0.9, 1.0):
        s = ent.partially_measured_bell(label, p, target)
        assert ent.concurrence(s) == pytest.approx(ent.measured_bell_concurrence(p), abs=1e-12)


def test_chsh_sweep_rows():
    rows = ent.chsh_sweep([0.0, 0.5])
    assert list(rows[0]) == ["p", "concurrence", "chsh"]
    assert rows[1]["chsh"] == pytest.approx(2 * math.sqrt(2) * rows[1]["concurrence"])


def test_random_two_qubit_concurrence_bounded():
    rng = make_rng(3)
    for _ in range(50):
        c = ent.concurrence(qcore.random_state(rng, 2))
        assert 0 <= c <= 1


def test_label_str():
    assert str(BellLabel.PSI_MINUS) == "Psi-"
