"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 1 a violated internal check
(the CLI doubles as a self-test harness).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import entanglement, hiddenvar, identities, tomography
from .protocols import ScenarioConfig, run_monte_carlo
from .qcore import InvariantError, bloch_state
from .report import ReportEnvelope, payload_bytes, payload_csv
from .rng import make_rng

SUBCOMMANDS = ("epr", "teleport", "swap", "tomography", "hv", "chsh-sweep", "identities")
SEED_ENV = "PMEAS_SEED"

DEFAULTS: dict[str, Any] = {
    "p": 0.5, "q": 0.0, "theta": math.pi / 2, "phi": 0.0,
    "ordering": "alice-first", "bob_measures": "0", "mode": "projective", "outcome": "Psi+",
    "trajectories": 0, "rounds": 3, "format": "json",
    "param": "p", "start": 0.0, "end": 0.9, "steps": 10,
}


@dataclass
class RunSpec:
    subcommand: str
    p: float | None = None
    q: float | None = None
    p2: float | None = None
    theta: float | None = None
    phi: float | None = None
    ordering: str | None = None
    bob_measures: str | None = None
    mode: str | None = None
    outcome: str | None = None
    trajectories: int | None = None
    rounds: int | None = None
    seed: int | None = None
    param: str | None = None
    start: float | None = None
    end: float | None = None
    steps: int | None = None
    format: str | None = None
    out: str | None = None
    defaulted: list[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "RunSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def validate(spec: RunSpec, environ=None) -> tuple[RunSpec, list[str]]:
    """Fill defaults and collect every violation (returned, never raised)."""
    environ = os.environ if environ is None else environ
    s = RunSpec(**asdict(spec))
    errors: list[str] = []
    if s.subcommand not in SUBCOMMANDS:
        return s, [f"unknown subcommand {s.subcommand!r}"]
    for name, value in DEFAULTS.items():
        if getattr(s, name) is None:
            setattr(s, name, value)
            s.defaulted.append(name)
    if s.p2 is None:
        s.p2 = s.p
        s.defaulted.append("p2")
    if s.seed is None:
        env = environ.get(SEED_ENV)
        try:
            s.seed = int(env) if env not in (None, "") else 0
        except ValueError:
            errors.append(f"{SEED_ENV}: not an integer: {env!r}")
            s.seed = 0
        s.defaulted.append("seed")

    def in_unit(flag, v, open_low=False):
        if not (0.0 <= v <= 1.0) or math.isnan(v) or (open_low and v == 0.0):
            lo = "(0" if open_low else "[0"
            errors.append(f"--{flag}: {flag} out of {lo},1]")

    strict = s.subcommand in ("tomography", "hv")
    in_unit("p", s.p, open_low=strict)
    in_unit("q", s.q)
    in_unit("p2", s.p2)
    if not 0.0 <= s.theta <= math.pi:
        errors.append("--theta: theta out of [0,pi]")
    if not math.isfinite(s.phi):
        errors.append("--phi: phi must be finite")
    if s.ordering not in ("alice-first", "bob-first"):
        errors.append("--ordering: must be alice-first or bob-first")
    if str(s.bob_measures) not in ("none", "0", "1"):
        errors.append("--bob-measures: must be none, 0 or 1")
    s.bob_measures = str(s.bob_measures)
    if s.mode not in ("projective", "partial"):
        errors.append("--mode: must be projective or partial")
    if s.outcome not in ("Phi+", "Phi-", "Psi+", "Psi-"):
        errors.append("--outcome: must be one of Phi+, Phi-, Psi+, Psi-")
    if s.trajectories < 0:
        errors.append("--trajectories: must be >= 0")
    if s.subcommand == "hv" and s.trajectories < 1:
        errors.append("--trajectories: hv needs at least 1 trial")
    if s.rounds < 0:
        errors.append("--rounds: must be >= 0")
    if s.format not in ("json", "csv"):
        errors.append("--format: must be json or csv")
    if s.subcommand == "chsh-sweep":
        if s.param != "p":
            errors.append(f"--param: cannot sweep {s.param!r} (only p)")
        in_unit("start", s.start)
        in_unit("end", s.end)
        if s.steps < 1:
            errors.append("--steps: must be >= 1")
    return s, errors


# -- payloads ----------------------------------------------------------------------

def _scenario(spec: RunSpec, name: str) -> dict:
    cfg = ScenarioConfig(
        scenario=name, p=spec.p, p2=spec.p2, theta=spec.theta, phi=spec.phi,
        ordering=spec.ordering,
        bob_measures=None if spec.bob_measures == "none" else int(spec.bob_measures),
        swap_mode=spec.mode, swap_outcome=spec.outcome,
        trajectories=spec.trajectories, seed=spec.seed,
    )
    return run_monte_carlo(cfg).to_dict()


def _tomography(spec: RunSpec) -> dict:
    psi = bloch_state(spec.theta, spec.phi)
    probs = tomography.exact_probabilities(psi, spec.p)
    out: dict[str, Any] = {"theta": spec.theta, "phi": spec.phi, "p": spec.p,
                           "exact_probabilities": probs}
    theta = tomography.estimate_theta(probs["z"], spec.p)
    exact = {"theta": theta}
    try:
        exact["phi"] = tomography.estimate_phi(probs["h"], probs["y"], spec.p, theta)
    except ValueError as exc:
        exact["phi"] = None
        exact["note"] = str(exc)
    out["exact_estimate"] = exact
    if spec.trajectories > 0:
        counts = tomography.sample_counts(psi, spec.p, spec.trajectories, make_rng(spec.seed))
        out["counts"] = {k: list(v) for k, v in counts.counts.items()}
        out["sampled_estimate"] = tomography.ensemble_estimate(counts, spec.p).to_dict()
    if spec.p < 1:
        surv = {"rounds": spec.rounds,
                "analytic": tomography.survival_probability(spec.p, spec.rounds)}
        if spec.trajectories > 0:
            surv.update(tomography.survival_comparison(psi, spec.p, spec.rounds,
                                                       spec.trajectories, spec.seed))
        out["single_copy_survival"] = surv
    return out


def _hv(spec: RunSpec) -> dict:
    return hiddenvar.selection_experiment(spec.p, spec.trajectories, make_rng(spec.seed))


def _sweep(spec: RunSpec) -> dict:
    values = np.linspace(spec.start, spec.end, spec.steps)
    rows = entanglement.chsh_sweep(values)
    cols = ["p", "concurrence", "chsh"]
    return {"columns": cols, "rows": [[r[c] for c in cols] for r in rows]}


def _identities(spec: RunSpec) -> dict:
    results = identities.run_identities(spec.p, spec.q, spec.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}", file=sys.stderr)
    return {"columns": ["name", "passed", "detail"],
            "rows": [[r.name, r.passed, r.detail] for r in results],
            "all_passed": all(r.passed for r in results)}


def build_payload(spec: RunSpec) -> Any:
    if spec.subcommand in ("epr", "teleport", "swap"):
        return _scenario(spec, spec.subcommand)
    return {"tomography": _tomography, "hv": _hv, "chsh-sweep": _sweep,
            "identities": _identities}[spec.subcommand](spec)


def run(spec: RunSpec, stdout=None) -> int:
    """Validate, dispatch, and emit the envelope. Returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    spec, errors = validate(spec)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        payload = build_payload(spec)
    except InvariantError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 1
    env = ReportEnvelope(spec=asdict(spec), payload=payload)
    text = env.to_json() + "\n" if spec.format == "json" else payload_csv(payload)
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        stdout.write(text)
    if isinstance(payload, dict) and payload.get("all_passed") is False:
        return 1
    return 0


def replay(path: str) -> int:
    """Re-run the RunSpec stored in a JSON envelope and compare payloads byte for byte."""
    env = json.loads(Path(path).read_text())
    spec = RunSpec.from_dict(env["spec"])
    spec.defaulted = []
    spec, errors = validate(spec)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        payload = build_payload(spec)
    except InvariantError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 1
    # compare after a JSON round trip so tuples and lists look alike
    fresh = json.loads(json.dumps(payload, default=lambda o: o.item() if hasattr(o, "item") else o))
    same = payload_bytes(fresh) == payload_bytes(env["payload"])
    print("identical" if same else "DIFFERENT", file=sys.stderr)
    return 0 if same else 1


# -- argument parsing ------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--p", type=float, help="partial measurement strength")
    parser.add_argument("--seed", type=int, help=f"RNG seed (default: ${SEED_ENV} or 0)")
    parser.add_argument("--trajectories", type=int, help="Monte Carlo trajectories / shots")
    parser.add_argument("--format", choices=["json", "csv"])
    parser.add_argument("--out", help="write to this path instead of stdout")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmeas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("epr", help="EPR pair with partial measurement and reversal")
    tp = sub.add_parser("teleport", help="teleportation with partial measurements")
    tp.add_argument("--p2", type=float, help="strength on Alice's second qubit")
    tp.add_argument("--theta", type=float)
    tp.add_argument("--phi", type=float)
    tp.add_argument("--ordering", choices=["alice-first", "bob-first"])
    tp.add_argument("--bob-measures", dest="bob_measures", choices=["none", "0", "1"])
    sw = sub.add_parser("swap", help="entanglement swapping")
    sw.add_argument("--mode", choices=["projective", "partial"])
    sw.add_argument("--outcome", choices=["Phi+", "Phi-", "Psi+", "Psi-"],
                    help="Bell outcome to follow in projective mode")
    to = sub.add_parser("tomography", help="Bloch-angle estimation from partial measurements")
    to.add_argument("--theta", type=float)
    to.add_argument("--phi", type=float)
    to.add_argument("--rounds", type=int, help="do/undo rounds for the single-copy survival check")
    sub.add_parser("hv", help="Bell-Mermin model vs quantum post-selection")
    cs = sub.add_parser("chsh-sweep", help="concurrence and CHSH over a range of p")
    cs.add_argument("--param")
    cs.add_argument("--start", type=float)
    cs.add_argument("--end", type=float)
    cs.add_argument("--steps", type=int)
    idn = sub.add_parser("identities", help="check the measurement algebra")
    idn.add_argument("--q", type=float)
    for name in SUBCOMMANDS:
        _common(sub.choices[name])
    rp = sub.add_parser("replay", help="re-run a saved JSON report and compare payloads")
    rp.add_argument("path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.subcommand == "replay":
        return replay(args.path)
    known = {f.name for f in fields(RunSpec)}
    spec = RunSpec(**{k: v for k, v in vars(args).items() if k in known})
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
