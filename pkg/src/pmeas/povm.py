"""Partial (unsharp) two-outcome measurements and their probabilistic reversal.

A measurement of strengths ``(p, q)`` has Kraus operators::

    M_m    = sqrt(1-q)|0><0| + sqrt(1-p)|1><1|     (no switch, outcome "m")
    M_mbar = sqrt(q)  |0><0| + sqrt(p)  |1><1|     (switch, outcome "mbar")

``q = 0`` gives the single-parameter measurement that leaves ``|0>`` alone;
``p = 1, q = 0`` is a projective ``sigma_z`` measurement.  An optional
``basis_rotation`` ``u`` turns the pair into ``u M u^dagger``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import qcore
from .qcore import (
    ATOL,
    ImpossibleBranchError,
    InvariantError,
    Operator,
    StateVector,
    apply_op,
    expectation,
    is_normalized,
)
from .rng import block_uniforms, make_rng


class IrreversibleMeasurementError(ValueError):
    """The requested branch has a singular Kraus operator."""


class Outcome(str, enum.Enum):
    M = "m"
    MBAR = "mbar"

    def __str__(self):
        return self.value


def clamp_probability(x: float, tol: float = ATOL) -> float:
    """Clamp rounding noise at the ends of [0, 1]; anything worse is a bug."""
    if -tol <= x < 0.0:
        return 0.0
    if 1.0 < x <= 1.0 + tol:
        return 1.0
    if not 0.0 <= x <= 1.0:
        raise InvariantError(f"probability {x!r} outside [0, 1]")
    return float(x)


@dataclass(frozen=True, eq=False)
class PartialMeasurement:
    """Strengths ``p`` (on ``|1>``) and ``q`` (on ``|0>``) acting on ``target``."""

    p: float
    q: float = 0.0
    target: int = 0
    basis_rotation: Operator | None = None

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"{name} out of [0,1]: {v!r}")
        if self.basis_rotation is not None:
            u = self.basis_rotation
            if u.dim != 2 or not np.allclose(u.matrix.conj().T @ u.matrix, np.eye(2), atol=ATOL):
                raise ValueError("basis_rotation must be a 2x2 unitary")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @property
    def rotated_basis(self) -> bool:
        return self.basis_rotation is not None and not self.basis_rotation.allclose(qcore.I2)

    def on(self, target: int) -> "PartialMeasurement":
        return replace(self, target=target)

    def _conj(self, m: np.ndarray) -> Operator:
        if self.basis_rotation is None:
            return Operator(m)
        u = self.basis_rotation.matrix
        return Operator(u @ m @ u.conj().T)

    @property
    def flip(self) -> Operator:
        """The bit flip in the measurement basis, ``u X u^dagger``."""
        if self.basis_rotation is None:
            return qcore.X
        u = self.basis_rotation.matrix
        return Operator(u @ qcore.X.matrix @ u.conj().T, unitary=True, name="X'")


@dataclass(frozen=True, eq=False)
class Branch:
    outcome: Outcome
    probability: float
    post_state: StateVector


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One sampled run: ``steps`` holds ``(label, outcome, conditional probability)``."""

    seed: int | None
    steps: tuple[tuple[str, Outcome, float], ...]
    final_state: StateVector
    survived: bool

    @property
    def joint_probability(self) -> float:
        return float(np.prod([s[2] for s in self.steps])) if self.steps else 1.0


@dataclass(frozen=True)
class TunnelingModel:
    """Switching rate ``gamma`` (1/time) held for duration ``tau`` (time)."""

    gamma: float
    tau: float

    def __post_init__(self):
        if self.gamma < 0 or self.tau < 0:
            raise ValueError("gamma and tau must be non-negative")


def p_from_tunneling(model: TunnelingModel) -> float:
    """Switching probability ``1 - exp(-gamma tau)`` of the excited state."""
    return min(1.0, -math.expm1(-model.gamma * model.tau))


# -- Kraus operators and effects -------------------------------------------------

def kraus_pair(meas: PartialMeasurement) -> tuple[Operator, Operator]:
    """``(M_m, M_mbar)`` in the computational basis."""
    p, q = meas.p, meas.q
    m = np.diag([math.sqrt(1 - q), math.sqrt(1 - p)])
    mbar = np.diag([math.sqrt(q), math.sqrt(p)])
    return meas._conj(m), meas._conj(mbar)


def kraus(meas: PartialMeasurement, outcome: Outcome) -> Operator:
    m, mbar = kraus_pair(meas)
    return m if Outcome(outcome) is Outcome.M else mbar


def effects(meas: PartialMeasurement) -> tuple[Operator, Operator]:
    """``(E_m, E_mbar)`` with ``E = M^dagger M``.

    For an unrotated ``q = 0`` measurement the sigma_z form
    ``E_mbar = (p/2)(1 - sigma_z)`` is cross-checked.
    """
    m, mbar = kraus_pair(meas)
    e_m = Operator(m.matrix.conj().T @ m.matrix)
    e_mbar = Operator(mbar.matrix.conj().T @ mbar.matrix)
    if not np.allclose(e_m.matrix + e_mbar.matrix, np.eye(2), atol=ATOL):
        raise InvariantError("effects do not resolve the identity")
    if meas.q == 0 and not meas.rotated_basis:
        zform = meas.p / 2 * (np.eye(2) - qcore.Z.matrix)
        if not (np.allclose(e_mbar.matrix, zform, atol=ATOL)
                and np.allclose(e_m.matrix, np.eye(2) - zform, atol=ATOL)):
            raise InvariantError("effects disagree with their sigma_z form")
    return e_m, e_mbar


def branch_probabilities(s: StateVector, meas: PartialMeasurement) -> tuple[float, float]:
    """``(P(m), P(mbar))`` for a normalized state."""
    if not is_normalized(s):
        raise ValueError("branch_probabilities needs a normalized state")
    _, e_mbar = effects(meas)
    p_mbar = clamp_probability(expectation(s, e_mbar, meas.target))
    return clamp_probability(1.0 - p_mbar), p_mbar


def apply_branch(s: StateVector, meas: PartialMeasurement, outcome: Outcome | str) -> Branch:
    """Post-measurement branch ``M_outcome|s> / sqrt(P(outcome))``."""
    outcome = Outcome(outcome)
    probs = branch_probabilities(s, meas)
    prob = probs[0] if outcome is Outcome.M else probs[1]
    if prob <= ATOL:
        raise ImpossibleBranchError(f"impossible branch: P({outcome}) = {prob!r}")
    raw = apply_op(s, kraus(meas, outcome), meas.target)
    return Branch(outcome, prob, StateVector(raw.amplitudes / math.sqrt(prob)))


def choose(s: StateVector, meas: PartialMeasurement, u: float) -> Branch:
    """Branch selected by the uniform draw ``u``: ``mbar`` iff ``u < P(mbar)``."""
    _, p_mbar = branch_probabilities(s, meas)
    return apply_branch(s, meas, Outcome.MBAR if u < p_mbar else Outcome.M)


def sample(s: StateVector, meas: PartialMeasurement, rng: np.random.Generator) -> Branch:
    """Born-rule sample of one outcome; consumes exactly one uniform from ``rng``."""
    return choose(s, meas, float(rng.random()))


# -- reversal --------------------------------------------------------------------

def reversal_kraus(meas: PartialMeasurement) -> tuple[Operator, Operator | None]:
    """``(R_m, R_mbar)`` where ``R = X M X`` (in the measurement basis).

    ``R_m M_m = sqrt((1-p)(1-q)) I`` and ``R_mbar M_mbar = sqrt(pq) I``.
    Raises :class:`IrreversibleMeasurementError` when the ``m`` branch is
    singular (``p = 1`` or ``q = 1``).  ``R_mbar`` is ``None`` when only the
    switching branch is singular, which is always the case for ``q = 0``.
    """
    r_m = reversal_operator(meas, Outcome.M)
    try:
        r_mbar = reversal_operator(meas, Outcome.MBAR)
    except IrreversibleMeasurementError:
        r_mbar = None
    return r_m, r_mbar


def reversal_operator(meas: PartialMeasurement, outcome: Outcome | str) -> Operator:
    outcome = Outcome(outcome)
    p, q = meas.p, meas.q
    if outcome is Outcome.M:
        if p >= 1 or q >= 1:
            raise IrreversibleMeasurementError(
                f"irreversible measurement: outcome m with p={p}, q={q}")
        factor = math.sqrt((1 - p) * (1 - q))
    else:
        if p <= 0 or q <= 0:
            raise IrreversibleMeasurementError(
                f"irreversible measurement: outcome mbar with p={p}, q={q}")
        factor = math.sqrt(p * q)
    f = meas.flip
    m = kraus(meas, outcome)
    r = Operator(f.matrix @ m.matrix @ f.matrix)
    if not np.allclose(r.matrix @ m.matrix, factor * np.eye(2), atol=ATOL):
        raise InvariantError("reversal is not proportional to the inverse")
    return r


def inverse_kraus(meas: PartialMeasurement, outcome: Outcome | str) -> Operator:
    """Exact matrix inverse of the branch's Kraus operator."""
    outcome = Outcome(outcome)
    p, q = meas.p, meas.q
    factor = math.sqrt((1 - p) * (1 - q)) if outcome is Outcome.M else math.sqrt(p * q)
    r = reversal_operator(meas, outcome)
    return Operator(r.matrix / factor)


def reverse_branch(s: StateVector, meas: PartialMeasurement, outcome: Outcome | str = Outcome.M) -> Branch:
    """Run the physical reversal: flip, same measurement post-selected on ``outcome``, flip."""
    outcome = Outcome(outcome)
    reversal_operator(meas, outcome)  # raises on singular branches
    flipped = apply_op(s, meas.flip, meas.target)
    b = apply_branch(flipped, meas, outcome)
    return Branch(outcome, b.probability, apply_op(b.post_state, meas.flip, meas.target))


def do_undo_probabilities(s: StateVector, meas: PartialMeasurement) -> tuple[float, float]:
    """Conditional success probabilities of measuring ``m`` and then reversing with ``m``.

    Their product is the survival probability; for ``q = 0`` it equals ``1 - p``.
    """
    first = apply_branch(s, meas, Outcome.M)
    second = reverse_branch(first.post_state, meas, Outcome.M)
    return first.probability, second.probability


def do_undo(s: StateVector, meas: PartialMeasurement, rng: np.random.Generator | int) -> TrajectoryRecord:
    """Sample a measurement and, if it gave ``m``, attempt its reversal.

    Survival means both draws gave ``m``; the final state then equals ``s``.
    The analytic joint survival probability is checked against ``1 - p``.
    """
    if meas.q != 0:
        raise ValueError("do_undo uses the q = 0 reversal sequence")
    if meas.p >= 1:
        raise IrreversibleMeasurementError("irreversible measurement: p = 1")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = make_rng(seed)
    p1, p2 = do_undo_probabilities(s, meas)
    if abs(p1 * p2 - (1 - meas.p)) > ATOL:
        raise InvariantError(f"do/undo survival {p1 * p2!r} != 1 - p")

    first = sample(s, meas, rng)
    steps = [("measure", first.outcome, first.probability)]
    if first.outcome is Outcome.MBAR:
        return TrajectoryRecord(seed, tuple(steps), first.post_state, False)
    flipped = apply_op(first.post_state, meas.flip, meas.target)
    second = sample(flipped, meas, rng)
    steps.append(("reverse", second.outcome, second.probability))
    final = apply_op(second.post_state, meas.flip, meas.target)
    return TrajectoryRecord(seed, tuple(steps), final, second.outcome is Outcome.M)


def do_undo_batch(s: StateVector, meas: PartialMeasurement, trials: int, seed: int, rounds: int = 1) -> np.ndarray:
    """Survival flags for ``trials`` independent copies of ``s``.

    Each copy goes through ``rounds`` do/undo cycles and survives only if every
    draw gives ``m``.  A surviving cycle returns the copy to ``s`` exactly, so
    each round uses the same pair of conditional probabilities.
    """
    p1, p2 = do_undo_probabilities(s, meas)
    u = block_uniforms(seed, trials, 2 * rounds)
    # draw k: mbar iff u < P(mbar | history)
    ok = np.ones(trials, dtype=bool)
    for r in range(rounds):
        ok &= u[:, 2 * r] >= 1 - p1
        ok &= u[:, 2 * r + 1] >= 1 - p2
    return ok


# -- dilation --------------------------------------------------------------------

def dilation_unitary(meas: PartialMeasurement) -> Operator:
    """4x4 system-ancilla unitary in the basis ``{|0m>, |1m>, |0mbar>, |1mbar>}``.

    The ancilla is the most significant index bit here (targets are given as
    ``(ancilla, system)``) with ``|m> = |0>`` and ``|mbar> = |1>``.  The matrix
    satisfies ``U|psi>|m> = M_m|psi>|m> + M_mbar|psi>|mbar>``.
    """
    p, q = meas.p, meas.q
    a, b = math.sqrt(1 - q), math.sqrt(q)
    c, d = math.sqrt(1 - p), math.sqrt(p)
    u = np.array([
        [a, 0, -b, 0],
        [0, c, 0, -d],
        [b, 0, a, 0],
        [0, d, 0, c],
    ], dtype=complex)
    if meas.basis_rotation is not None:
        r = np.kron(np.eye(2), meas.basis_rotation.matrix)
        u = r @ u @ r.conj().T
    return Operator(u, unitary=True, name="U")


def dilated_measure(s: StateVector, meas: PartialMeasurement) -> tuple[float, float, StateVector | None, StateVector | None]:
    """Measure by coupling to an ancilla and reading the ancilla sharply.

    Returns ``(P(m), P(mbar), post_m, post_mbar)``; a post-state is ``None`` for
    a zero-probability outcome.
    """
    if not is_normalized(s):
        raise ValueError("dilated_measure needs a normalized state")
    n = s.n_qubits
    joint = apply_op(qcore.tensor(s, qcore.ZERO), dilation_unitary(meas), [n, meas.target])
    amps = joint.amplitudes.reshape(2**n, 2)
    out = []
    for k in (0, 1):
        branch = amps[:, k]
        prob = clamp_probability(float(np.vdot(branch, branch).real))
        out.append((prob, StateVector(branch / math.sqrt(prob)) if prob > ATOL else None))
    (pm, sm), (pmbar, smbar) = out
    return pm, pmbar, sm, smbar


# -- entropy ---------------------------------------------------------------------

def _xlogx(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log(x)


def binary_entropy(x: float) -> float:
    """Natural-log binary entropy."""
    return -_xlogx(x) - _xlogx(1.0 - x)


def measurement_entropy(s: StateVector, meas: PartialMeasurement) -> float:
    """Shannon entropy (nats) of the two outcomes."""
    if meas.q != 0:
        raise ValueError("measurement_entropy is defined for q = 0")
    pm, pmbar = branch_probabilities(s, meas)
    return -_xlogx(pm) - _xlogx(pmbar)


# -- rotations and composition identities -----------------------------------------

def rotated(meas: PartialMeasurement, u: Operator) -> PartialMeasurement:
    """Same strengths along a rotated axis: Kraus pair ``u M u^dagger``."""
    if u.dim != 2 or not np.allclose(u.matrix.conj().T @ u.matrix, np.eye(2), atol=ATOL):
        raise ValueError("rotation must be a 2x2 unitary")
    base = meas.basis_rotation.matrix if meas.basis_rotation is not None else np.eye(2)
    new = replace(meas, basis_rotation=Operator(u.matrix @ base, unitary=True))
    if u.allclose(qcore.H) and meas.basis_rotation is None and meas.q == 0:
        m, mbar = kraus_pair(new)
        proj_plus = qcore.projector(qcore.PLUS).matrix
        proj_minus = qcore.projector(qcore.MINUS).matrix
        ok = (np.allclose(mbar.matrix, math.sqrt(meas.p) * proj_minus, atol=ATOL)
              and np.allclose(m.matrix, proj_plus + math.sqrt(1 - meas.p) * proj_minus, atol=ATOL))
        if not ok:
            raise InvariantError("Hadamard-rotated Kraus pair has the wrong form")
    return new


def x_measurement(p: float, target: int = 0) -> PartialMeasurement:
    """Partial measurement along x (Hadamard-rotated)."""
    return rotated(PartialMeasurement(p, 0.0, target), qcore.H)


@dataclass
class CompositionReport:
    p: float
    q: float
    m_product: np.ndarray
    mbar_sum: np.ndarray
    m_matches_pq: bool
    m_matches_qp: bool
    m_alt_order_equal: bool
    mbar_matches_pq: bool
    mbar_matches_qp: bool
    cross_term_zero: bool
    notes: list[str] = field(default_factory=list)

    @property
    def order(self) -> str:
        """``"as-written"``, ``"swapped"``, ``"both"`` (p = q) or ``"neither"``."""
        if self.m_matches_pq and self.m_matches_qp:
            return "both"
        if self.m_matches_pq:
            return "as-written"
        if self.m_matches_qp:
            return "swapped"
        return "neither"

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "m_product_diag": [float(x.real) for x in np.diag(self.m_product)],
            "mbar_sum_diag": [float(x.real) for x in np.diag(self.mbar_sum)],
            "m_matches_M_m(p,q)": self.m_matches_pq,
            "m_matches_M_m(q,p)": self.m_matches_qp,
            "m_alternative_order_equal": self.m_alt_order_equal,
            "mbar_matches_M_mbar(p,q)": self.mbar_matches_pq,
            "mbar_matches_M_mbar(q,p)": self.mbar_matches_qp,
            "double_switch_term_zero": self.cross_term_zero,
            "order": self.order,
        }


def compose_identity_check(p: float, q: float) -> CompositionReport:
    """Build a two-strength measurement out of two single-strength ones.

    Computes ``X M_m(p) X M_m(q)`` (and the other written order
    ``M_m(q) X M_m(p) X``) plus the three-term switching sum, and compares
    them with ``M(p, q)`` and with the index-swapped ``M(q, p)``.
    """
    x = qcore.X.matrix
    mp, mbp = (o.matrix for o in kraus_pair(PartialMeasurement(p)))
    mq, mbq = (o.matrix for o in kraus_pair(PartialMeasurement(q)))
    prod = x @ mp @ x @ mq
    alt = mq @ x @ mp @ x
    cross = x @ mbp @ x @ mbq
    msum = x @ mbp @ x @ mq + x @ mp @ x @ mbq + cross
    m_pq, mb_pq = (o.matrix for o in kraus_pair(PartialMeasurement(p, q)))
    m_qp, mb_qp = (o.matrix for o in kraus_pair(PartialMeasurement(q, p)))
    close = lambda a, b: bool(np.allclose(a, b, atol=ATOL))  # noqa: E731
    return CompositionReport(
        p=p, q=q, m_product=prod, mbar_sum=msum,
        m_matches_pq=close(prod, m_pq), m_matches_qp=close(prod, m_qp),
        m_alt_order_equal=close(prod, alt),
        mbar_matches_pq=close(msum, mb_pq), mbar_matches_qp=close(msum, mb_qp),
        cross_term_zero=close(cross, np.zeros((2, 2))),
    )


def kraus_completeness_error(meas: PartialMeasurement) -> float:
    m, mbar = kraus_pair(meas)
    total = m.matrix.conj().T @ m.matrix + mbar.matrix.conj().T @ mbar.matrix
    return float(np.max(np.abs(total - np.eye(2))))


__all__: Sequence[str] = [
    "Branch", "CompositionReport", "IrreversibleMeasurementError", "Outcome",
    "PartialMeasurement", "TrajectoryRecord", "TunnelingModel", "apply_branch",
    "binary_entropy", "branch_probabilities", "choose", "clamp_probability",
    "compose_identity_check", "dilated_measure", "dilation_unitary", "do_undo",
    "do_undo_batch", "do_undo_probabilities", "effects", "inverse_kraus", "kraus",
    "kraus_completeness_error", "kraus_pair", "measurement_entropy", "p_from_tunneling",
    "reversal_kraus", "reversal_operator", "reverse_branch", "rotated", "sample",
    "x_measurement",
]
