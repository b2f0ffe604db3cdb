"""Single-qubit tomography from partial-measurement statistics.

Three settings are used, all with the same strength ``p``:

``z``  the bare measurement, ``P(mbar) = p sin^2(theta/2) = p (1 - <Z>)/2``
``h``  Hadamard first, ``P(mbar) = p (1 - <X>)/2``
``y``  ``S^dagger`` then Hadamard first, ``P(mbar) = p (1 - <Y>)/2``

so every Bloch component is ``1 - 2 P(mbar)/p``.  With ``|psi> = cos(theta/2)|0>
+ sin(theta/2) e^{i phi}|1>`` one has ``<X> = sin theta cos phi`` and
``<Y> = sin theta sin phi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .povm import PartialMeasurement, branch_probabilities, do_undo_batch
from .qcore import Operator, StateVector, apply_op

SETTINGS = ("z", "h", "y")

# pre-rotation applied to the state before the z-type partial measurement
PRE_ROTATIONS: dict[str, Operator] = {
    "z": qcore.I2,
    "h": qcore.H,
    "y": qcore.H @ qcore.S_DAG,
}

POLE_TOL = 1e-9


@dataclass(frozen=True)
class BlochAngles:
    theta: float
    phi: float

    def state(self) -> StateVector:
        return qcore.bloch_state(self.theta, self.phi)


@dataclass
class CountTable:
    """``counts[setting] = (n_m, n_mbar)``."""

    counts: dict[str, tuple[int, int]]

    def __post_init__(self):
        for s in SETTINGS:
            if s not in self.counts:
                raise ValueError(f"missing setting {s!r}")
            n_m, n_mbar = self.counts[s]
            if n_m < 0 or n_mbar < 0:
                raise ValueError("counts must be non-negative")
            if n_m + n_mbar < 1:
                raise ValueError(f"empty counts for setting {s!r}")

    def total(self, setting: str) -> int:
        return sum(self.counts[setting])

    def frequency(self, setting: str) -> float:
        """Observed ``mbar`` frequency."""
        n_m, n_mbar = self.counts[setting]
        return n_mbar / (n_m + n_mbar)


@dataclass
class Estimate:
    angles: BlochAngles
    theta_se: float
    phi_se: float
    clamped: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"theta": self.angles.theta, "phi": self.angles.phi,
                "theta_se": self.theta_se, "phi_se": self.phi_se, "clamped": self.clamped}


def wrap_phi(phi: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w <= -math.pi else w


def setting_probability(s: StateVector, p: float, setting: str) -> float:
    """Exact ``P(mbar)`` of one setting."""
    rotated = apply_op(s, PRE_ROTATIONS[setting], 0)
    return branch_probabilities(rotated, PartialMeasurement(p))[1]


def exact_probabilities(s: StateVector, p: float) -> dict[str, float]:
    return {k: setting_probability(s, p, k) for k in SETTINGS}


def _component(p_mbar: float, p: float) -> float:
    return 1.0 - 2.0 * p_mbar / p


def _check_strength(p_mbar: float, p: float, name: str):
    if not 0 < p <= 1:
        raise ValueError(f"strength p must be in (0, 1], got {p!r}")
    if not -1e-12 <= p_mbar <= p + 1e-12:
        raise ValueError(f"{name} = {p_mbar!r} inconsistent with strength p = {p!r}")


def estimate_theta(p_mbar_z: float, p: float) -> float:
    """Polar angle from the bare setting, ``arccos(1 - 2 P(mbar)/p)``."""
    _check_strength(p_mbar_z, p, "P(mbar) for z")
    return math.acos(min(1.0, max(-1.0, _component(p_mbar_z, p))))


def estimate_phi(p_mbar_h: float, p_mbar_y: float, p: float, theta: float) -> float:
    """Azimuth from the Hadamard and sigma_y-resolving settings.

    The Hadamard setting fixes ``sin(theta) cos(phi)`` and the y setting
    ``sin(theta) sin(phi)``; ``atan2`` of the pair keeps full precision near
    ``phi = 0`` and ``phi = pi`` where ``arccos`` would lose half the digits.
    """
    _check_strength(p_mbar_h, p, "P(mbar) for h")
    _check_strength(p_mbar_y, p, "P(mbar) for y")
    if abs(math.sin(theta)) < POLE_TOL:
        raise ValueError("phi undefined at pole")
    x = _component(p_mbar_h, p)
    y = _component(p_mbar_y, p)
    return wrap_phi(math.atan2(y, x))


def sample_counts(s: StateVector, p: float, shots: int, rng: np.random.Generator) -> CountTable:
    """Binomial counts for ``shots`` fresh copies per setting."""
    counts = {}
    for k in SETTINGS:
        n_mbar = int(rng.binomial(shots, setting_probability(s, p, k)))
        counts[k] = (shots - n_mbar, n_mbar)
    return CountTable(counts)


def ensemble_estimate(counts: CountTable, p: float) -> Estimate:
    """Angles from observed frequencies with delta-method standard errors.

    Frequencies outside ``[0, p]`` (sampling noise) are clamped to the nearest
    end and the setting is listed in ``Estimate.clamped``.
    """
    if not 0 < p <= 1:
        raise ValueError(f"strength p must be in (0, 1], got {p!r}")
    freq, var, clamped = {}, {}, []
    for k in SETTINGS:
        f = counts.frequency(k)
        n = counts.total(k)
        var[k] = f * (1 - f) / n
        if f > p:
            f = p
            clamped.append(k)
        freq[k] = f
    theta = estimate_theta(freq["z"], p)
    sin_t = math.sin(theta)
    x = _component(freq["h"], p)
    y = _component(freq["y"], p)
    phi = wrap_phi(math.atan2(y, x)) if (x or y) else 0.0
    # d theta / d f_z = (2/p) / sin(theta)
    theta_se = (2 / p) * math.sqrt(var["z"]) / sin_t if sin_t > POLE_TOL else math.inf
    r2 = x * x + y * y
    if r2 > 0:
        sx2 = (2 / p) ** 2 * var["h"]
        sy2 = (2 / p) ** 2 * var["y"]
        phi_se = math.sqrt(y * y * sx2 + x * x * sy2) / r2
    else:
        phi_se = math.inf
    return Estimate(BlochAngles(theta, phi), theta_se, phi_se, clamped)


def survival_probability(p: float, rounds: int) -> float:
    """Chance a single copy survives ``rounds`` do/undo cycles: ``(1-p)**rounds``.

    The per-round factor does not depend on the state, so survival carries no
    information about it.
    """
    if not 0 <= p < 1:
        raise ValueError("p must be in [0, 1)")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    return (1 - p) ** rounds


def survival_monte_carlo(s: StateVector, p: float, rounds: int, trials: int, seed: int) -> float:
    """Observed survival frequency of single copies through ``rounds`` cycles."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return float(do_undo_batch(s, PartialMeasurement(p), trials, seed, rounds).mean())


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    pooled = (k1 + k2) / (n1 + n2)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    return 0.0 if se == 0 else (k1 / n1 - k2 / n2) / se


def survival_comparison(s: StateVector, p: float, rounds: int, trials: int, seed: int) -> dict:
    """Survival of ``s`` against ``|0>`` through the same cycles, with a two-proportion z."""
    k1 = int(do_undo_batch(s, PartialMeasurement(p), trials, seed, rounds).sum())
    k2 = int(do_undo_batch(qcore.ZERO, PartialMeasurement(p), trials, seed + 1, rounds).sum())
    return {"frequency_input_state": k1 / trials, "frequency_ground_state": k2 / trials,
            "two_proportion_z": two_proportion_z(k1, trials, k2, trials)}
