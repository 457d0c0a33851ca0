import json
import math

import numpy as np
import pytest

from heavy_ou.cli import CONFIG_SCHEMA, apply_overrides, load_config, main


def write_cfg(tmp_path, **sections):
    cfg = {"schema": CONFIG_SCHEMA, "model": {"sigma": 1.0}}
    for k, v in sections.items():
        cfg.setdefault(k, {}).update(v)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_missing_sigma_names_the_field(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"schema": CONFIG_SCHEMA}))
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) != 0
    assert "model.sigma" in capsys.readouterr().err


def test_bad_field_type_names_the_field(tmp_path, capsys):
    p = write_cfg(tmp_path, sim={"T": "long"})
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "sim.T" in capsys.readouterr().err


def test_wrong_schema_rejected(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"schema": "other/9", "model": {"sigma": 1}}))
    assert main(["scaling", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "schema" in capsys.readouterr().err


def test_overrides_by_dotted_path():
    cfg = apply_overrides({"a": {"b": 1}}, ["a.b=2.5", "a.c=[1,2]", "d.e=text"])
    assert cfg == {"a": {"b": 2.5, "c": [1, 2]}, "d": {"e": "text"}}
    with pytest.raises(ValueError):
        apply_overrides({}, ["novalue"])


def test_simulate_is_byte_reproducible(tmp_path, capsys):
    p = write_cfg(tmp_path, sim={"T": 20.0})
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / d), "--seed", "42"]) == 0
    for f in ("path.csv", "jumps.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    out = capsys.readouterr().out
    assert "jumps=" in out and "final_x=" in out


def test_simulate_refuses_overwrite(tmp_path):
    p = write_cfg(tmp_path, sim={"T": 5.0})
    args = ["simulate", "--config", str(p), "--out", str(tmp_path / "o")]
    assert main(args) == 0
    assert main(args) == 2
    assert main(args + ["--force"]) == 0


def test_coarse_grid_error_surfaces(tmp_path, capsys):
    p = write_cfg(tmp_path, sim={"T": 10.0, "h": 0.5, "eps_cut": 0.01})
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "grid too coarse for jump bookkeeping" in capsys.readouterr().err


def _read_csv(path):
    lines = path.read_text().splitlines()
    head = lines[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return {h: rows[:, i] for i, h in enumerate(head)}


def test_scaling_table(tmp_path):
    p = write_cfg(tmp_path, scaling={"T_grid": [10.0, 1e3, 1e6, 1e8]})
    assert main(["scaling", "--config", str(p), "--out", str(tmp_path)]) == 0
    t = _read_csv(tmp_path / "scaling.csv")
    np.testing.assert_allclose(t["phi"], t["phi_closed_form"], rtol=1e-6)
    assert np.all(np.diff(t["phi"]) < 0)
    assert np.all(t["residual"] < 1e-8)


def test_scaling_log_perturbed_has_no_closed_form(tmp_path):
    p = write_cfg(tmp_path)
    args = ["scaling", "--config", str(p), "--out", str(tmp_path),
            "model.jumps.kind=log_perturbed", "model.jumps.gamma=1.0"]
    assert main(args) == 0
    t = _read_csv(tmp_path / "scaling.csv")
    assert np.all(np.isnan(t["phi_closed_form"]))
    assert np.all(t["residual"] < 1e-8)


def test_stable_sample(tmp_path):
    p = write_cfg(tmp_path, stable_sample={"n": 100000})
    args = ["stable-sample", "--config", str(p), "--seed", "3", "model.jumps.alpha=1.0"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "stable_samples.csv").read_bytes()
    assert a == (tmp_path / "b" / "stable_samples.csv").read_bytes()
    s = _read_csv(tmp_path / "a" / "stable_samples.csv")["S"]
    assert np.all(s > 0)
    v = np.exp(-s)
    assert abs(v.mean() - math.exp(-math.sqrt(math.pi))) < 3 * v.std(ddof=1) / math.sqrt(v.size)


def test_unknown_experiment_lists_names(tmp_path, capsys):
    p = write_cfg(tmp_path)
    assert main(["experiment", "bogus", "--config", str(p), "--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err
    for name in ("x2", "joint", "lamn", "mle", "eta_qv", "tail"):
        assert name in err


def test_experiment_exit_status_follows_gates(tmp_path):
    p = write_cfg(
        tmp_path,
        sim={"h": 0.02},
        experiment={"horizons": [50.0], "replications": 200},
    )
    code = main(["experiment", "x2", "--config", str(p), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "x2_report.json").read_text())
    assert code == (0 if rep["all_passed"] else 1)
    assert rep["schema"] == "heavy_ou.report/1"
    assert rep["config"]["replications"] == 200
    # 17 significant digits round-trip
    lines = (tmp_path / "x2_samples.csv").read_text().splitlines()
    first = lines[1].split(",")[0]
    assert float(first) == rep["samples_empirical"][0]


def test_experiment_observed_joint_is_a_config_error(tmp_path, capsys):
    p = write_cfg(tmp_path, experiment={"mode": "observed", "horizons": [20.0], "replications": 100})
    assert main(["experiment", "joint", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "experiment.mode" in capsys.readouterr().err


def test_defaults_without_config_need_sigma(tmp_path):
    cfg = load_config(None, ["model.sigma=2"])
    assert cfg["model"]["sigma"] == 2
    assert main(["scaling", "--out", str(tmp_path)]) == 2
