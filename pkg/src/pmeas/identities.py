"""Self-checks of the measurement algebra, used by the ``identities`` subcommand."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import povm, qcore
from .povm import Outcome, PartialMeasurement
from .rng import make_rng

GRID = np.linspace(0.0, 1.0, 21)
TOL = 1e-12


@dataclass
class IdentityResult:
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _grid():
    for p in GRID:
        for q in GRID:
            yield float(p), float(q)


def kraus_completeness() -> IdentityResult:
    err = max(povm.kraus_completeness_error(PartialMeasurement(p, q)) for p, q in _grid())
    return IdentityResult("kraus_completeness", err <= TOL, f"max |M^+M + Mbar^+Mbar - I| = {err:.3e} on 21x21 grid")


def effects_resolve_identity() -> IdentityResult:
    err = 0.0
    for p, q in _grid():
        e_m, e_mbar = povm.effects(PartialMeasurement(p, q))  # also checks the sigma_z form at q = 0
        err = max(err, float(np.max(np.abs(e_m.matrix + e_mbar.matrix - np.eye(2)))))
    return IdentityResult("effects_sum_to_identity", err <= TOL, f"max deviation {err:.3e}")


def reversal_m() -> IdentityResult:
    err = 0.0
    for p, q in _grid():
        if p < 1 and q < 1:
            meas = PartialMeasurement(p, q)
            r = povm.reversal_operator(meas, Outcome.M).matrix @ povm.kraus(meas, Outcome.M).matrix
            err = max(err, float(np.max(np.abs(r - math.sqrt((1 - p) * (1 - q)) * np.eye(2)))))
    return IdentityResult("reversal_m", err <= TOL, f"R_m M_m = sqrt((1-p)(1-q)) I, max deviation {err:.3e}")


def reversal_mbar() -> IdentityResult:
    err = 0.0
    for p, q in _grid():
        if p > 0 and q > 0:
            meas = PartialMeasurement(p, q)
            r = povm.reversal_operator(meas, Outcome.MBAR).matrix @ povm.kraus(meas, Outcome.MBAR).matrix
            err = max(err, float(np.max(np.abs(r - math.sqrt(p * q) * np.eye(2)))))
    return IdentityResult("reversal_mbar", err <= TOL, f"R_mbar M_mbar = sqrt(pq) I, max deviation {err:.3e}")


def inverses() -> IdentityResult:
    err = 0.0
    for p, q in _grid():
        meas = PartialMeasurement(p, q)
        for o in Outcome:
            try:
                inv = povm.inverse_kraus(meas, o)
            except povm.IrreversibleMeasurementError:
                continue
            err = max(err, float(np.max(np.abs(inv.matrix @ povm.kraus(meas, o).matrix - np.eye(2)))))
    return IdentityResult("inverse_kraus", err <= 1e-9, f"max |M^-1 M - I| = {err:.3e}")


def composition(p: float, q: float) -> list[IdentityResult]:
    rep = povm.compose_identity_check(p, q)
    m_ok = (rep.m_matches_pq or rep.m_matches_qp) and rep.m_alt_order_equal
    mbar_ok = (rep.mbar_matches_pq or rep.mbar_matches_qp) and rep.cross_term_zero
    diag = ", ".join(f"{x.real:.6g}" for x in np.diag(rep.m_product))
    return [
        IdentityResult("composition_m", m_ok,
                       f"X M_m({p:g}) X M_m({q:g}) = diag({diag}); matches index order: {rep.order}"),
        IdentityResult("composition_mbar", mbar_ok,
                       "three-term switching sum = diag(sqrt(p), sqrt(q)); "
                       f"matches (p,q): {rep.mbar_matches_pq}, (q,p): {rep.mbar_matches_qp}"),
    ]


def dilation(p: float, q: float, seed: int, cases: int = 100, name: str = "dilation_equivalence") -> IdentityResult:
    rng = make_rng(seed)
    err = 0.0
    for _ in range(cases):
        s = qcore.random_state(rng)
        meas = PartialMeasurement(p, q)
        pm, pmbar, sm, smbar = povm.dilated_measure(s, meas)
        dm, dmbar = povm.branch_probabilities(s, meas)
        err = max(err, abs(pm - dm), abs(pmbar - dmbar))
        for prob, post, o in ((pm, sm, Outcome.M), (pmbar, smbar, Outcome.MBAR)):
            if prob > 1e-9:
                direct = povm.apply_branch(s, meas, o).post_state
                err = max(err, float(np.max(np.abs(post.amplitudes - direct.amplitudes))))
    return IdentityResult(name, err <= TOL,
                          f"{cases} random states at (p={p:g}, q={q:g}), max deviation {err:.3e}")


def do_undo_survival(p: float, seed: int, cases: int = 20) -> IdentityResult:
    if p >= 1:
        return IdentityResult("do_undo_survival", True, "p = 1: not reversible, skipped")
    rng = make_rng(seed)
    err = 0.0
    for _ in range(cases):
        p1, p2 = povm.do_undo_probabilities(qcore.random_state(rng), PartialMeasurement(p))
        err = max(err, abs(p1 * p2 - (1 - p)))
    return IdentityResult("do_undo_survival", err <= TOL, f"P(m) P(m|reversal) = 1-p over {cases} states, max deviation {err:.3e}")


def hadamard_rotation(p: float) -> IdentityResult:
    try:
        povm.x_measurement(p)
        return IdentityResult("hadamard_rotated_kraus", True, "H M_mbar H = sqrt(p)|-><-|")
    except qcore.InvariantError as exc:
        return IdentityResult("hadamard_rotated_kraus", False, str(exc))


def tunneling() -> IdentityResult:
    val = povm.p_from_tunneling(povm.TunnelingModel(1.0, math.log(2)))
    return IdentityResult("tunneling_conversion", abs(val - 0.5) <= TOL, f"gamma tau = ln 2 -> p = {val!r}")


def run_identities(p: float = 0.75, q: float = 0.36, seed: int = 0) -> list[IdentityResult]:
    results = [kraus_completeness(), effects_resolve_identity(), reversal_m(), reversal_mbar(), inverses()]
    results += composition(p, q)
    results += [dilation(p, q, seed), dilation(p, 0.0, seed + 1, name="dilation_equivalence_q0"),
                do_undo_survival(p, seed), hadamard_rotation(p), tunneling()]
    return results
