import json

import numpy as np
import pytest

from diagcoag import cli
from diagcoag.profile import read_profile_csv


def run(argv):
    return cli.main(argv)


# -- mu ------------------------------------------------------------------------


def test_mu_canonical(capsys):
    assert run(["mu", "--gamma", "0", "--beta", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["mu"] - 1.0) <= 1e-12
    assert out["residual"] <= 1e-13


def test_mu_rho_equivalent(capsys):
    assert run(["mu", "--gamma", "0", "--beta", "2"]) == 0
    via_beta = capsys.readouterr().out
    assert run(["mu", "--gamma", "0", "--rho", "0.5"]) == 0
    via_rho = capsys.readouterr().out
    assert via_beta == via_rho


def test_mu_invalid_gamma(capsys):
    assert run(["mu", "--gamma", "1.5", "--beta", "2"]) == 2
    assert "gamma must be < 1" in capsys.readouterr().err


def test_mu_needs_exactly_one_of_beta_rho(capsys):
    assert run(["mu", "--gamma", "0"]) == 2
    assert run(["mu", "--gamma", "0", "--beta", "2", "--rho", "0.5"]) == 2


# -- profile ---------------------------------------------------------------------


def test_profile_full_pipeline(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    assert run(["profile", "--gamma", "0", "--rho", "0.5", "--out", str(out)]) == 0
    prof = read_profile_csv(out)
    assert prof.normalized
    assert prof.x_max / prof.x_min > 1e12
    assert np.all(np.diff(prof.h_values) < 0.0)
    meta = json.loads((tmp_path / "prof.meta.json").read_text())
    assert meta["normalized"] is True
    assert meta["m"] == 64


def test_profile_degenerate_refused(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    assert run(["profile", "--gamma", "0", "--beta", "1", "--out", str(out)]) == 2
    assert "degenerate" in capsys.readouterr().err


def test_profile_degenerate_allowed(tmp_path, capsys):
    out = tmp_path / "prof.csv"
    code = run(
        ["profile", "--gamma", "0", "--beta", "1", "--allow-degenerate", "--out", str(out)]
    )
    assert code == 0
    assert out.exists()


def test_profile_constant_branch(tmp_path, capsys):
    out = tmp_path / "const.csv"
    assert run(["profile", "--gamma", "0", "--beta", "2", "--c", "0", "--out", str(out)]) == 0
    prof = read_profile_csv(out)
    assert np.all(prof.h_values == 2.0)


def test_profile_deterministic(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(["profile", "--gamma", "0", "--rho", "0.5", "--out", str(a)]) == 0
    assert run(["profile", "--gamma", "0", "--rho", "0.5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_profile_config_file_merging(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gamma": 0.0, "rho": 0.5, "m": 64}))
    out = tmp_path / "from_config.csv"
    # flag overrides config: rho 0.5 in config, but we pass beta via flag only
    assert run(["profile", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.exists()


def test_profile_json_format(tmp_path, capsys):
    out = tmp_path / "prof.json"
    assert run(
        ["profile", "--gamma", "0", "--rho", "0.5", "--format", "json", "--out", str(out)]
    ) == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"meta", "x", "h", "g", "dhdx"}


# -- verify ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def saved_profile(tmp_path_factory):
    path = tmp_path_factory.mktemp("profiles") / "canon.csv"
    assert run(["profile", "--gamma", "0", "--rho", "0.5", "--out", str(path)]) == 0
    return path


def test_verify_fresh_profile(saved_profile, capsys):
    assert run(["verify", str(saved_profile)]) == 0
    report = json.loads(capsys.readouterr().out)[str(saved_profile)]
    assert report["slope_fit"] == pytest.approx(-0.5, abs=0.005)
    assert report["upper_bound_ok"] and report["lower_bound_ok"]
    assert report["max_residual_sss4b"] <= 1e-6


def test_verify_corrupted_profile(saved_profile, tmp_path, capsys):
    rows = saved_profile.read_text().splitlines()
    k = len(rows) // 2
    cols = rows[k].split(",")
    cols[1] = f"{float(cols[1]) * 1.01:.17g}"
    rows[k] = ",".join(cols)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(rows) + "\n")
    meta = saved_profile.with_name(saved_profile.stem + ".meta.json")
    (tmp_path / "bad.meta.json").write_text(meta.read_text())
    assert run(["verify", str(bad)]) == 4


def test_verify_constant_profile_precondition(tmp_path, capsys):
    out = tmp_path / "const.csv"
    assert run(["profile", "--gamma", "0", "--beta", "2", "--c", "0", "--out", str(out)]) == 0
    assert run(["verify", str(out)]) == 2


# -- simulate --------------------------------------------------------------------


def test_simulate_profile_collapse(saved_profile, tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = run(
        [
            "simulate",
            "--gamma", "0", "--rho", "0.5",
            "--init", f"profile:{saved_profile}",
            "--t-end", "2", "--snapshots", "3",
            "--octaves", "30",
            "--out", str(tmp_path / "sim"),
        ]
    )
    assert code == 0
    report = json.loads((tmp_path / "sim.collapse.json").read_text())
    assert max(report["distances"]) < 0.05
    snaps = list(tmp_path.glob("sim.t*.csv"))
    assert len(snaps) == 3
    header = snaps[0].read_text().splitlines()[0]
    assert header == "xi,f,x_rescaled,density_rescaled"


def test_simulate_stationary_power_law(tmp_path, capsys):
    code = run(
        [
            "simulate",
            "--gamma", "0", "--beta", "2",
            "--init", "powerlaw",
            "--t-end", "1.2", "--snapshots", "2",
            "--octaves", "20",
            "--out", str(tmp_path / "pl"),
        ]
    )
    assert code == 0


# -- sweep -----------------------------------------------------------------------


def test_sweep_single_row(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert run(["sweep", "--gammas", "0", "--rhos", "0.5", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    header = rows[0].split(",")
    assert header[:5] == ["gamma", "rho", "beta", "mu", "kappa"]
    assert len(rows) == 2
    assert rows[1].split(",")[-1] == "ok"


def test_sweep_empty_rho_list(capsys):
    assert run(["sweep", "--gammas", "0", "--rhos", ""]) == 2


def test_sweep_boundary_row_marked_invalid(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    # rho = gamma is outside the open interval; that row is recorded as
    # invalid while the valid row still completes
    assert run(["sweep", "--gammas", "0", "--rhos", "0,0.5", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    statuses = {r.split(",")[1]: r.split(",")[-1] for r in rows}
    assert statuses["0"] == "invalid"
    assert statuses["0.5"] == "ok"
