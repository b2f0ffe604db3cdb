import csv
import io
import json
import subprocess
import sys

import pytest

from pmeas import cli, identities
from pmeas.cli import RunSpec, validate
from pmeas.qcore import InvariantError


def run_json(argv, capsys):
    code = cli.main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_p_out_of_range():
    _, errors = validate(RunSpec("epr", p=1.2))
    assert "--p: p out of [0,1]" in errors


def test_missing_seed_defaults_to_zero():
    spec, errors = validate(RunSpec("epr"), environ={})
    assert not errors and spec.seed == 0 and "seed" in spec.defaulted


def test_env_seed_and_flag_precedence():
    spec, _ = validate(RunSpec("epr"), environ={"PMEAS_SEED": "42"})
    assert spec.seed == 42 and "seed" in spec.defaulted
    spec, _ = validate(RunSpec("epr", seed=5), environ={"PMEAS_SEED": "42"})
    assert spec.seed == 5 and "seed" not in spec.defaulted
    _, errors = validate(RunSpec("epr"), environ={"PMEAS_SEED": "abc"})
    assert errors


def test_sweep_steps_zero():
    _, errors = validate(RunSpec("chsh-sweep", steps=0))
    assert any(e.startswith("--steps") for e in errors)


def test_unsweepable_param():
    _, errors = validate(RunSpec("chsh-sweep", param="theta"))
    assert any(e.startswith("--param") for e in errors)


@pytest.mark.parametrize("sub,kw", [("tomography", {"p": 0.0}), ("hv", {"p": 0.5}),
                                    ("teleport", {"theta": 4.0}), ("epr", {"trajectories": -2})])
def test_other_validation_errors(sub, kw):
    _, errors = validate(RunSpec(sub, **kw))
    assert errors


def test_validation_exit_code(capsys):
    assert cli.main(["epr", "--p", "1.2"]) == 2
    assert "p out of [0,1]" in capsys.readouterr().err


def test_argparse_rejects_bad_choice():
    with pytest.raises(SystemExit) as exc:
        cli.main(["teleport", "--ordering", "sideways"])
    assert exc.value.code == 2


def test_envelope_shape(capsys):
    code, env = run_json(["epr", "--p", "0.5"], capsys)
    assert code == 0
    assert set(env) == {"version", "timestamp", "spec", "payload"}
    assert env["spec"]["subcommand"] == "epr"
    assert env["payload"]["metrics"]["p_bob_z0_given_m"] == pytest.approx(2 / 3)


def test_floats_roundtrip_bit_exact(capsys):
    from pmeas.entanglement import chsh_sweep
    _, env = run_json(["chsh-sweep", "--start", "0.1", "--end", "0.7", "--steps", "4"], capsys)
    want = chsh_sweep([0.1, 0.3, 0.5, 0.7])
    for row, ref in zip(env["payload"]["rows"], want):
        assert row[2] == ref["chsh"]


def test_json_and_csv_sweeps_agree(capsys):
    _, env = run_json(["chsh-sweep", "--steps", "7"], capsys)
    assert cli.main(["chsh-sweep", "--steps", "7", "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["p", "concurrence", "chsh"]
    assert len(rows) == 8
    for jrow, crow in zip(env["payload"]["rows"], rows[1:]):
        for a, b in zip(jrow, crow):
            assert f"{a:.15g}" == f"{float(b):.15g}"


def test_scenario_csv_is_key_value(capsys):
    assert cli.main(["swap", "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["key", "value"]
    assert any(r[0] == "metrics.ad_concurrence_final" for r in rows)


def test_identities_subcommand(capsys):
    assert cli.main(["identities"]) == 0
    err = capsys.readouterr().err
    assert err.count("PASS") >= 10 and "FAIL" not in err


def test_identity_failure_gives_exit_1(monkeypatch, capsys):
    bad = identities.IdentityResult("broken", False, "forced")
    monkeypatch.setattr(identities, "run_identities", lambda *a, **k: [bad])
    assert cli.main(["identities"]) == 1
    assert "FAIL  broken" in capsys.readouterr().err


def test_invariant_violation_gives_exit_1(monkeypatch, capsys):
    def boom(_):
        raise InvariantError("dilation mismatch")
    monkeypatch.setattr(cli, "run_monte_carlo", boom)
    assert cli.main(["epr"]) == 1
    assert "dilation mismatch" in capsys.readouterr().err


def test_out_file_and_replay(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert cli.main(["teleport", "--p", "0.3", "--trajectories", "300", "--seed", "1", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert cli.main(["replay", str(path)]) == 0
    env = json.loads(path.read_text())
    env["payload"]["survival_probability"] = 0.123
    path.write_text(json.dumps(env))
    assert cli.main(["replay", str(path)]) == 1


def test_seed_changes_tallies(capsys):
    _, a = run_json(["epr", "--trajectories", "200", "--seed", "1"], capsys)
    _, b = run_json(["epr", "--trajectories", "200", "--seed", "2"], capsys)
    assert a["payload"]["monte_carlo"]["tallies"] != b["payload"]["monte_carlo"]["tallies"]


def test_tomography_payload(capsys):
    code, env = run_json(["tomography", "--p", "0.5", "--theta", "1.0", "--phi", "2.0",
                          "--trajectories", "5000"], capsys)
    assert code == 0
    pl = env["payload"]
    assert pl["exact_estimate"]["theta"] == pytest.approx(1.0)
    assert pl["exact_estimate"]["phi"] == pytest.approx(2.0)
    assert pl["single_copy_survival"]["analytic"] == pytest.approx(0.125)


def test_tomography_at_pole_reports_undefined_phi(capsys):
    _, env = run_json(["tomography", "--theta", "0"], capsys)
    assert env["payload"]["exact_estimate"]["phi"] is None


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "pmeas", "epr", "--p", "2"], capture_output=True, text=True)
    assert r.returncode == 2
