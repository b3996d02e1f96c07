import json
import os

import pytest

from grassmann_stream import cli, grouse


def _write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


BASE_CFG = {
    "n": 40,
    "d": 4,
    "op_kind": "full",
    "zeta_star": 0.999,
    "max_iters": 2000,
    "seed": 3,
    "diagnostics_level": "full",
}


def test_missing_config_exits_2(tmp_path, capsys):
    rc = cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_invalid_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    rc = cli.main(["run", "--config", str(path), "--out", str(tmp_path)])
    assert rc == 2


def test_bad_field_exits_2(tmp_path):
    cfg = _write_cfg(tmp_path, {**BASE_CFG, "zeta_star": 2.0})
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    cfg = _write_cfg(tmp_path, {**BASE_CFG, "bogus_key": 1})
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_no_command_exits_2(capsys):
    assert cli.main([]) == 2


def test_run_writes_series_and_summary(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    out = tmp_path / "out"
    rc = cli.main(["run", "--config", cfg, "--out", str(out)])
    assert rc == 0
    lines = (out / "series.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,zeta,kappa,theta,norm_p,norm_r_tilde,norm_r,delta,det_lower_bound,status"
    assert len(lines) > 1
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["converged"] is True
    assert summary["config"]["seed"] == 3


def test_run_seed_repeatability_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", cfg, "--out", str(out1), "--seed", "7"]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(out2), "--seed", "7"]) == 0
    assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cli.main(["run", "--config", cfg, "--out", str(out1), "--seed", "7"])
    cli.main(["run", "--config", cfg, "--out", str(out2), "--seed", "8"])
    assert (out1 / "series.csv").read_bytes() != (out2 / "series.csv").read_bytes()


def test_gs_seed_env_fallback(tmp_path, monkeypatch):
    cfg_payload = {k: v for k, v in BASE_CFG.items() if k != "seed"}
    cfg = _write_cfg(tmp_path, cfg_payload)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("GS_SEED", "99")
    assert cli.main(["run", "--config", cfg, "--out", str(out1)]) == 0
    summary = json.loads((out1 / "summary.json").read_text(encoding="utf-8"))
    assert summary["config"]["seed"] == 99
    # Explicit --seed wins over the environment.
    assert cli.main(["run", "--config", cfg, "--out", str(out2), "--seed", "5"]) == 0
    summary2 = json.loads((out2 / "summary.json").read_text(encoding="utf-8"))
    assert summary2["config"]["seed"] == 5


def test_run_json_format_stdout(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    rc = cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--format", "json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["converged"] is True


def test_sweep_grid_csv(tmp_path):
    cfg = _write_cfg(
        tmp_path,
        {
            **BASE_CFG,
            "max_iters": 5000,
            "sweep": {"ns": [40], "ds": [4], "ms": [None], "trials_per_cell": 3},
        },
    )
    out = tmp_path / "out"
    rc = cli.main(["sweep", "--config", cfg, "--out", str(out)])
    assert rc == 0
    lines = (out / "grid.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "n,d,m,mean_ratio,var_ratio,fail_frac"
    assert len(lines) == 2


def test_sweep_empty_grid_exits_2(tmp_path):
    cfg = _write_cfg(tmp_path, {**BASE_CFG, "sweep": {"ns": [], "ds": [4], "ms": [None]}})
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_sweep_missing_block_exits_2(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_verify_passes_and_writes_report(tmp_path):
    cfg = _write_cfg(tmp_path, {**BASE_CFG, "verify": {"num_steps": 60}})
    out = tmp_path / "out"
    rc = cli.main(["verify", "--config", cfg, "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "verify.json").read_text(encoding="utf-8"))
    assert report["passed"] is True
    for res in report["identities"].values():
        assert set(res) >= {"max_violation", "tolerance", "passed", "samples"}


def test_verify_fault_injection_exits_1(tmp_path, monkeypatch):
    # Corrupt the update so the deterministic identities break.
    real_step = grouse.step

    def corrupted_step(state, op, x):
        report = real_step(state, op, x)
        if report.status is grouse.StepStatus.UPDATED:
            state.U[0, 0] += 1e-4
        return report

    monkeypatch.setattr(grouse, "step", corrupted_step)
    cfg = _write_cfg(tmp_path, {**BASE_CFG, "verify": {"num_steps": 40}})
    out = tmp_path / "out"
    rc = cli.main(["verify", "--config", cfg, "--out", str(out)])
    assert rc == 1
    report = json.loads((out / "verify.json").read_text(encoding="utf-8"))
    assert report["passed"] is False


def test_bounds_outputs(tmp_path, capsys):
    cfg = _write_cfg(
        tmp_path,
        {"n": 5000, "d": 10, "bounds": {"rho": 0.1, "zeta_star": 0.9999}},
    )
    out = tmp_path / "out"
    rc = cli.main(["bounds", "--config", cfg, "--out", str(out), "--format", "json"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["iteration_bound_full"]["K2"] == pytest.approx(
        216.39556568820785, rel=1e-10
    )
    on_disk = json.loads((out / "bounds.json").read_text(encoding="utf-8"))
    assert on_disk["iteration_bound_full"]["value"] == pytest.approx(
        14642.562582424067, rel=1e-10
    )


def test_bounds_invalid_delta_exits_2(tmp_path):
    cfg = _write_cfg(tmp_path, {"n": 100, "d": 5, "bounds": {"delta": 2.0}})
    assert cli.main(["bounds", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_float_formatting_17_digits(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CFG)
    out = tmp_path / "out"
    cli.main(["run", "--config", cfg, "--out", str(out)])
    lines = (out / "series.csv").read_text(encoding="utf-8").splitlines()
    zeta_str = lines[1].split(",")[1]
    # Round-trips exactly through float parsing.
    assert format(float(zeta_str), ".17g") == zeta_str
