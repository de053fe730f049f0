import json
import time

import numpy as np
import pytest

from ferrosim.cli import main
from ferrosim.config import ConfigError, default_raw, load, parse_override, resolve
from ferrosim.io import read_table, read_trace_csv, write_trace_csv
from ferrosim.runner import FIGURES, bundled_config
from ferrosim.traces import Trace


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- config --------------------------------------------------------------------

def test_bundled_configs_validate(capsys):
    for name in sorted({e for exps in FIGURES.values() for e in exps}):
        assert main(["validate", name]) == 0
    assert "OK" in capsys.readouterr().out


def test_negative_thickness_names_stack_rule(tmp_path, capsys):
    cfg = _write(tmp_path, '[device.stack]\nd_wox = -1.0\n[experiment]\nname = "pv-loop"\n')
    assert main(["validate", cfg]) == 2
    assert "DeviceStack.d_wox must be strictly positive" in capsys.readouterr().err


def test_inverted_thresholds_name_ensemble_rule(tmp_path, capsys):
    cfg = _write(tmp_path, '[device.ensemble]\nmean_v_up = -2.0\nmean_v_down = 1.0\n'
                           '[experiment]\nname = "pv-loop"\n')
    assert main(["validate", cfg]) == 2
    assert "EnsembleConfig" in capsys.readouterr().err


def test_unknown_key_is_named(tmp_path, capsys):
    cfg = _write(tmp_path, '[device]\nbogus = 1\n[experiment]\nname = "pv-loop"\n')
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "device.bogus" in err and "Traceback" not in err
    assert not (tmp_path / "o").exists()


def test_wrong_type_and_bad_param(capsys):
    assert main(["validate", "pv-loop", "--set", "device.scale=abc"]) == 2
    assert "device.scale" in capsys.readouterr().err
    assert main(["validate", "pv-loop", "--set", "experiment.params.amplitude=-1"]) == 2
    assert "amplitude" in capsys.readouterr().err


def test_unknown_experiment_and_missing_file(capsys):
    assert main(["run", "no-such-experiment"]) == 2
    assert main(["run", "missing/config.toml"]) == 2
    assert main(["figures", "fig99"]) == 2
    assert "unknown figure" in capsys.readouterr().err


def test_parse_override():
    assert parse_override("device.scale=0.2") == ("device.scale", 0.2)
    assert parse_override("experiment.params.thickness=[8, 15]") == (
        "experiment.params.thickness", [8, 15])
    assert parse_override("device.noise_reference=r_true") == ("device.noise_reference", "r_true")
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_config_hash_ignores_output_location():
    a, _ = resolve({"experiment": {"name": "pv-loop"}})
    b, _ = resolve({"experiment": {"name": "pv-loop"}, "output": {"directory": "/elsewhere"}})
    c, _ = resolve({"experiment": {"name": "pv-loop"}}, seed=1)
    from ferrosim.config import config_hash
    assert config_hash(a) == config_hash(b) != config_hash(c)
    assert len(config_hash(a)) == 16


def test_stored_config_round_trips(tmp_path):
    cfg = load(bundled_config("rv-hysteresis"))
    p = tmp_path / "rt.toml"
    p.write_text(cfg.to_toml())
    assert load(p).config_hash() == cfg.config_hash()
    assert default_raw("pv-loop")["experiment"]["name"] == "pv-loop"


# -- io ------------------------------------------------------------------------

def test_trace_csv_round_trip(tmp_path):
    tr = Trace([0.0, 1e-3, 2e-3], [0.1, -0.2, 0.3], [1.5e5, 1.25e5, 1.0e5], "resistance",
               aux={"cycle": np.array([0, 0, 1])})
    write_trace_csv(tmp_path / "t.csv", tr, {"experiment": "x", "seed": 3})
    back = read_trace_csv(tmp_path / "t.csv")
    assert back.kind == "resistance"
    assert np.allclose(back.t, tr.t, rtol=1e-9) and np.allclose(back.value, tr.value, rtol=1e-9)
    assert np.array_equal(back.aux["cycle"], [0, 0, 1])
    header, cols, _ = read_table(tmp_path / "t.csv")
    assert header["experiment"] == "x" and header["seed"] == "3"
    assert cols[:3] == ["t", "v", "resistance"]


def test_read_trace_csv_rejects_bad_columns(tmp_path):
    (tmp_path / "b.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trace_csv(tmp_path / "b.csv")


# -- run -----------------------------------------------------------------------

def test_run_is_byte_identical(tmp_path):
    assert main(["run", "rv-hysteresis", "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["run", "rv-hysteresis", "--out", str(tmp_path / "b"), "--quiet"]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b and "rv_d8nm.csv" in a


def test_seed_override_is_reproducible_and_distinct(tmp_path):
    for d in ("s1a", "s1b"):
        assert main(["run", "pv-loop", "--seed", "1", "--out", str(tmp_path / d), "--quiet"]) == 0
    assert main(["run", "pv-loop", "--out", str(tmp_path / "s0"), "--quiet"]) == 0
    assert _files(tmp_path / "s1a") == _files(tmp_path / "s1b")
    assert _files(tmp_path / "s1a")["pv_woken.csv"] != _files(tmp_path / "s0")["pv_woken.csv"]


def test_rerun_from_stored_config(tmp_path):
    assert main(["run", "retention", "--seed", "4", "--out", str(tmp_path / "a"), "--quiet"]) == 0
    stored = tmp_path / "a" / "config.toml"
    assert main(["run", str(stored), "--out", str(tmp_path / "b"), "--quiet"]) == 0
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_csv_header_and_manifest(tmp_path):
    assert main(["run", "pund", "--out", str(tmp_path), "--quiet"]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    header, _, _ = read_table(tmp_path / "pund.csv")
    assert header["experiment"] == "pund"
    assert header["seed"] == "0"
    assert header["config_hash"] == man["config_hash"]


def test_extra_formats(tmp_path):
    assert main(["run", "cv-butterfly", "--out", str(tmp_path), "--format", "json",
                 "--format", "svg", "--quiet"]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"cv.csv", "cv.json", "cv.svg"} <= names
    assert (tmp_path / "cv.svg").read_text().startswith("<svg")
    json.loads((tmp_path / "cv.json").read_text())


def test_metrics_from_input(tmp_path, capsys):
    assert main(["run", "potdep-amplitude", "--set", "experiment.params.n_cycles=5",
                 "--out", str(tmp_path / "pd"), "--quiet"]) == 0
    assert main(["run", "metrics", "--input", str(tmp_path / "pd" / "potdep.csv"),
                 "--out", str(tmp_path / "m")]) == 0
    assert "adj_r2" in capsys.readouterr().out
    rep = json.loads((tmp_path / "m" / "metrics.json").read_text())
    assert {"adj_r2", "sf", "sf_mean", "sf_center", "branches"} <= set(rep)
    assert "snr" in rep["branches"]["potentiation"]


def test_input_only_for_metrics(tmp_path):
    assert main(["run", "pv-loop", "--input", "x.csv", "--out", str(tmp_path)]) == 2


def test_runtime_error_exit_code(tmp_path, capsys):
    code = main(["run", "metrics", "--input", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "m")])
    err = capsys.readouterr().err
    assert code == 3
    assert err.startswith("runtime error:") and "Traceback" not in err


def test_env_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv("FERROSIM_OUT", str(tmp_path / "env"))
    assert main(["run", "xd-curve", "--quiet"]) == 0
    assert (tmp_path / "env" / "xd-curve" / "xd_curve.csv").exists()


def test_figure_fig5(tmp_path):
    assert main(["figures", "fig5", "--out", str(tmp_path), "--quiet"]) == 0
    d = tmp_path / "fig5" / "metrics"
    csvs = sorted(p.name for p in d.glob("fig5*.csv"))
    assert csvs == ["fig5a_linear_fit.csv", "fig5b_residuals.csv", "fig5c_gpr.csv",
                    "fig5d_snr.csv", "fig5e_delta_r.csv", "fig5f_sf.csv"]
    index = json.loads((tmp_path / "index.json").read_text())
    assert index["figures"]["fig5"][0]["experiment"] == "metrics"


def test_figures_all_within_budget(tmp_path):
    t0 = time.perf_counter()
    assert main(["figures", "all", "--out", str(tmp_path), "--quiet"]) == 0
    assert time.perf_counter() - t0 < 60
    index = json.loads((tmp_path / "index.json").read_text())
    assert set(index["figures"]) == set(FIGURES)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "pv-loop" in out and "fig5" in out
