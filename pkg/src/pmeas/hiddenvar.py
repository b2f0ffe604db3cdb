"""Bell-Mermin hidden-variable model of a single spin-1/2.

A prepared state is a unit vector ``n``; the hidden variable ``h`` is uniform
on the sphere.  Measuring ``A = a0 + a1 . sigma`` yields ``a0 + |a1|`` when
``(n + h) . a1 > 0`` and ``a0 - |a1|`` otherwise (ties go to ``+``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .povm import PartialMeasurement, apply_branch


@dataclass(frozen=True, eq=False)
class Observable3:
    a0: float
    a1: np.ndarray

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float).reshape(3)
        if not np.linalg.norm(a1) > 0:
            raise ValueError("observable needs a nonzero vector part")
        object.__setattr__(self, "a1", a1)

    @property
    def values(self) -> tuple[float, float]:
        r = float(np.linalg.norm(self.a1))
        return self.a0 + r, self.a0 - r

    def quantum_mean(self, n) -> float:
        """``a0 + a1 . n``."""
        return float(self.a0 + self.a1 @ np.asarray(n, dtype=float))


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero vector")
    return v / nrm


@dataclass(frozen=True, eq=False)
class HVState:
    n: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        for name in ("n", "h"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if abs(np.linalg.norm(v) - 1) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
            object.__setattr__(self, name, v)


X_HAT = np.array([1.0, 0.0, 0.0])
Y_HAT = np.array([0.0, 1.0, 0.0])
Z_HAT = np.array([0.0, 0.0, 1.0])
SIGMA_X = Observable3(0.0, X_HAT)
SIGMA_Z = Observable3(0.0, Z_HAT)


def sample_h(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform unit vector(s) on the sphere from normalized Gaussian triples."""
    g = rng.standard_normal(3 if size is None else (size, 3))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def hv_outcomes(n, h: np.ndarray, obs: Observable3) -> np.ndarray:
    """Vectorized outcome rule over an ``(k, 3)`` array of hidden variables."""
    hi, lo = obs.values
    proj = (np.asarray(n, dtype=float) + np.atleast_2d(h)) @ obs.a1
    return np.where(proj >= 0, hi, lo)


def hv_outcome(state: HVState, obs: Observable3) -> float:
    return float(hv_outcomes(state.n, state.h, obs)[0])


@dataclass(frozen=True)
class MonteCarloMean:
    value: float
    stderr: float
    trials: int

    def __float__(self):
        return self.value


def hv_average(n, obs: Observable3, trials: int, rng: np.random.Generator) -> MonteCarloMean:
    """Sample mean of the model's outcomes for preparation ``n``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    v = hv_outcomes(_unit(n), sample_h(rng, trials), obs)
    se = float(v.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloMean(float(v.mean()), se, trials)


def qm_plus_probability(p: float) -> float:
    """``P(sigma_x = +1)`` for ``|+>`` after a partial measurement kept on ``m``."""
    return (1 + math.sqrt(1 - p)) ** 2 / (2 * (2 - p))


def selection_experiment(p: float, trials: int, rng: np.random.Generator) -> dict:
    """Compare the model with quantum mechanics on a post-selected ``|+>`` ensemble.

    Model arm: keep hidden variables with ``(x + h) . z >= 0`` (the ones that
    would not switch) and measure sigma_x.  Quantum arm: partially measure
    ``|+>``, keep outcome ``m``, then measure sigma_x sharply.
    """
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    h = sample_h(rng, trials)
    keep = (X_HAT + h) @ Z_HAT >= 0
    survivors = h[keep]
    hv_x = hv_outcomes(X_HAT, survivors, SIGMA_X)
    hv_plus = float(np.mean(hv_x == 1.0)) if survivors.size else float("nan")

    branch = apply_branch(qcore.PLUS, PartialMeasurement(p), "m")
    qm_plus = qcore.expectation(branch.post_state, qcore.projector(qcore.PLUS), 0)
    closed = qm_plus_probability(p)
    if abs(qm_plus - closed) > 1e-12:
        raise qcore.InvariantError("sigma_x probability disagrees with its closed form")
    # draws for the quantum arm, same trial count
    u = rng.random((trials, 2))
    survived = u[:, 0] >= 1 - branch.probability
    qm_freq = float(np.mean(u[survived, 1] < qm_plus)) if survived.any() else float("nan")
    return {
        "p": p,
        "trials": trials,
        "hv_selected_fraction": float(keep.mean()),
        "hv_sigma_x_plus_frequency": hv_plus,
        "qm_survival_probability": branch.probability,
        "qm_survival_frequency": float(survived.mean()),
        "qm_sigma_x_plus_probability": qm_plus,
        "qm_sigma_x_plus_frequency": qm_freq,
        "divergence": hv_plus - qm_plus,
        "qm_survival_below_hv_fraction": branch.probability < float(keep.mean()),
    }
