"""Bell states, pure-state concurrence, the CHSH combination and Bell-basis tools."""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from . import qcore
from .povm import PartialMeasurement, apply_branch
from .qcore import (
    ATOL,
    InvariantError,
    Operator,
    StateVector,
    expectation,
    inner,
    is_normalized,
    kron,
)


class BellLabel(str, enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    PSI_PLUS = "Psi+"
    PSI_MINUS = "Psi-"

    def __str__(self):
        return self.value


BELL_LABELS = (BellLabel.PHI_PLUS, BellLabel.PHI_MINUS, BellLabel.PSI_PLUS, BellLabel.PSI_MINUS)

# Bell label -> computational label produced by bell_basis_change("to_computational")
BELL_TO_COMPUTATIONAL = {
    BellLabel.PHI_PLUS: "00",
    BellLabel.PSI_PLUS: "01",
    BellLabel.PHI_MINUS: "10",
    BellLabel.PSI_MINUS: "11",
}
COMPUTATIONAL_TO_BELL = {v: k for k, v in BELL_TO_COMPUTATIONAL.items()}

SIGMA_YY = kron(qcore.Y, qcore.Y)


def bell_state(label: BellLabel | str) -> StateVector:
    """``(|00> +- |11>)/sqrt(2)`` or ``(|01> +- |10>)/sqrt(2)``."""
    label = BellLabel(label)
    a = np.zeros(4, dtype=complex)
    if label in (BellLabel.PHI_PLUS, BellLabel.PHI_MINUS):
        a[0], a[3] = 1, (1 if label is BellLabel.PHI_PLUS else -1)
    else:
        a[1], a[2] = 1, (1 if label is BellLabel.PSI_PLUS else -1)
    return StateVector(a / math.sqrt(2))


def concurrence(s: StateVector) -> float:
    """Pure-state concurrence ``|<s| sigma_y x sigma_y |s*>|``."""
    if s.n_qubits != 2:
        raise ValueError(f"concurrence needs a 2-qubit state, got {s.n_qubits} qubits")
    if not is_normalized(s):
        raise ValueError("concurrence needs a normalized state")
    a = s.amplitudes
    c = abs(a.conj() @ SIGMA_YY.matrix @ a.conj())
    if c > 1 + ATOL:
        raise InvariantError(f"concurrence {c!r} exceeds 1")
    return float(min(c, 1.0))


def correlator(s: StateVector, a: Operator, b: Operator) -> float:
    """``<s| a x b |s>`` for single-qubit observables on qubits 0 and 1."""
    return expectation(s, kron(a, b), [0, 1])


def chsh_value(s: StateVector) -> float:
    """``<X s+> + <X s-> + <Y s-> - <Y s+>`` with ``s+- = (X +- Y)/sqrt(2)``.

    On ``a|00> + b|11>`` with real ``a, b`` this equals ``2 sqrt(2)`` times the
    concurrence.
    """
    if s.n_qubits != 2:
        raise ValueError("chsh_value needs a 2-qubit state")
    sx, sy = qcore.SIGMA_X, qcore.SIGMA_Y
    sp, sm = qcore.SIGMA_PLUS, qcore.SIGMA_MINUS
    return (correlator(s, sx, sp) + correlator(s, sx, sm)
            + correlator(s, sy, sm) - correlator(s, sy, sp))


def violates_chsh(s: StateVector) -> bool:
    return abs(chsh_value(s)) > 2.0


# p at which a partially measured Bell state stops violating CHSH
CHSH_THRESHOLD_P = 2 * math.sqrt(2) - 2


def bell_pair_state(label_ad: BellLabel | str, label_bc: BellLabel | str,
                    partition: Sequence[Sequence[int]] = ((0, 3), (1, 2))) -> StateVector:
    """``|label_ad>_(ad) |label_bc>_(bc)`` laid out on qubits 0..3."""
    (a, d), (b, c) = partition
    prod = qcore.tensor(bell_state(label_ad), bell_state(label_bc))  # order a, d, b, c
    order = [0] * 4
    for new_pos, q in zip((a, d, b, c), range(4)):
        order[new_pos] = q
    return qcore.permute_qubits(prod, order)


def bell_expansion(s: StateVector, partition: Sequence[Sequence[int]] = ((0, 3), (1, 2))
                   ) -> dict[tuple[BellLabel, BellLabel], complex]:
    """Coefficients of a 4-qubit state in the ``|Bell>_ad |Bell>_bc`` basis.

    ``partition`` is ``((a, d), (b, c))``: the qubit indices of each pair, in
    ket order within the pair.
    """
    if s.n_qubits != 4:
        raise ValueError("bell_expansion needs a 4-qubit state")
    flat = sorted(q for pair in partition for q in pair)
    if flat != [0, 1, 2, 3]:
        raise ValueError(f"partition {partition} must cover qubits 0..3 once")
    coeffs = {}
    for x in BELL_LABELS:
        for y in BELL_LABELS:
            coeffs[(x, y)] = inner(bell_pair_state(x, y, partition), s)
    total = sum(abs(c) ** 2 for c in coeffs.values())
    if abs(total - qcore.norm(s) ** 2) > 1e-10:
        raise InvariantError("Bell expansion lost norm")
    return coeffs


def bell_basis_change(direction: str = "to_computational") -> Operator:
    """Unitary mapping Bell states to computational states (CNOT, then H on qubit 0).

    Table: Phi+ -> 00, Psi+ -> 01, Phi- -> 10, Psi- -> 11, all with phase +1.
    ``direction="to_bell"`` returns the inverse.
    """
    v = kron(qcore.H, qcore.I2) @ qcore.CNOT
    v = Operator(v.matrix, unitary=True, name="V")
    if direction == "to_computational":
        return v
    if direction == "to_bell":
        return Operator(v.matrix.conj().T, unitary=True, name="V^dagger")
    raise ValueError(f"unknown direction {direction!r}")


def bell_populations(s: StateVector, pair: Sequence[int], rest: Sequence[int]) -> np.ndarray:
    """Reduced state of ``pair`` written in the Bell basis (4x4, Hermitian).

    Entry ``[x, y]`` is ``<v_y|v_x>`` with ``v_x = (<Bell_x|_pair x I)|s>``;
    only overlaps of vectors on ``rest`` are taken, no density matrix of the
    whole register is formed.
    """
    n = s.n_qubits
    if n != len(pair) + len(rest) or len(pair) != 2:
        raise ValueError("pair and rest must partition the register, pair of size 2")
    psi = np.transpose(s.amplitudes.reshape((2,) * n), list(pair) + list(rest)).reshape(4, -1)
    vecs = [bell_state(x).amplitudes.conj() @ psi for x in BELL_LABELS]
    return np.array([[np.vdot(vecs[y], vecs[x]) for y in range(4)] for x in range(4)])


def bell_diagonal_concurrence(populations: np.ndarray) -> float:
    """Concurrence ``max(0, 2 w_max - 1)`` of a Bell-diagonal two-qubit state.

    Raises if the supplied Bell-basis matrix has coherences.
    """
    g = np.asarray(populations)
    tr = np.trace(g).real
    if tr <= ATOL:
        raise ValueError("empty state")
    g = g / tr
    off = g - np.diag(np.diag(g))
    if np.max(np.abs(off)) > 1e-10:
        raise ValueError("state is not Bell-diagonal")
    w = np.diag(g).real
    return float(max(0.0, 2 * w.max() - 1))


def partially_measured_bell(label: BellLabel | str, p: float, target: int = 0) -> StateVector:
    """A Bell state after a strength-``p`` partial measurement on ``target`` gave ``m``."""
    return apply_branch(bell_state(label), PartialMeasurement(p, 0.0, target), "m").post_state


def measured_bell_concurrence(p: float) -> float:
    """``2 sqrt(1-p) / (2-p)``."""
    return 2 * math.sqrt(1 - p) / (2 - p)


def chsh_sweep(ps: Sequence[float]) -> list[dict[str, float]]:
    """Concurrence and CHSH value of the partially measured ``Phi+`` family."""
    rows = []
    for p in ps:
        s = partially_measured_bell(BellLabel.PHI_PLUS, float(p))
        rows.append({"p": float(p), "concurrence": concurrence(s), "chsh": chsh_value(s)})
    return rows
