import json

import numpy as np
import pytest

from metastable import io
from metastable.cli import main
from metastable.config import ConfigError, load_config, parse_config
from metastable.markov import GridSpec, analyze_matrix, spectrum

LINEAR = {
    "schema_version": 1,
    "system": {"name": "linear_gaussian", "params": {"a": 0.4, "lo": -1.0, "hi": 1.0}},
    "grid": {"lo": -1.0, "hi": 1.0, "n_cells": 21},
    "noise": {"variance": 0.25},
    "estimator": {"method": "ut", "n_samples": 2000},
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def with_(base, **changes):
    cfg = json.loads(json.dumps(base))
    for key, value in changes.items():
        cfg[key] = value
    return cfg


def test_parse_valid_config():
    cfg = parse_config(LINEAR)
    assert cfg.grid.n_cells == 21 and cfg.estimator.method == "ut"
    assert cfg.build_system().a == 0.4
    assert cfg.with_overrides(seed=5, threads=3).estimator.seed == 5


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda c: c["grid"].update(n_cells=0), "n_cells"),
        (lambda c: c.update(extra=1), "extra"),
        (lambda c: c["system"].update(name="biped"), "system/name"),
        (lambda c: c["estimator"].update(w0=1.0), "w0"),
        (lambda c: c["grid"].update(lo=2.0), "lo must be below hi"),
        (lambda c: c.update(noise={"covariance": [[1.0, 0.0], [0.0, 1.0]]}), "1x1"),
        (lambda c: c.update(noise={"covariance": [[-1.0]]}), "noise"),
        (lambda c: c.update(schema_version=2), "schema_version"),
        (lambda c: c.update(sweep={"sigmas": [0.2, 0.1]}), "ascending"),
        (lambda c: c["system"]["params"].update(k=3), "params"),
    ],
)
def test_config_rejections(mutate, needle):
    cfg = json.loads(json.dumps(LINEAR))
    mutate(cfg)
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert any(needle in e for e in info.value.errors), info.value.errors


def test_hopper_grid_below_leg_rejected():
    cfg = {"schema_version": 1, "system": {"name": "hopper"},
           "grid": {"lo": 0.2, "hi": 1.5, "n_cells": 5}, "noise": {"variance": 0.05}}
    with pytest.raises(ConfigError, match="rest length"):
        parse_config(cfg)


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = with_(LINEAR, grid={"lo": -1.0, "hi": 1.0, "n_cells": 0})
    assert main(["analyze", "--config", write_cfg(tmp_path, bad), "--out", str(tmp_path)]) == 2
    assert "n_cells" in capsys.readouterr().err


def test_cli_analyze_outputs_and_round_trip(tmp_path):
    out = tmp_path / "run"
    assert main(["analyze", "--config", write_cfg(tmp_path, LINEAR), "--out", str(out)]) == 0
    for name in ("transition_matrix.csv", "report.csv", "eigenvalues.csv", "stochastic_return_map.svg",
                 "mfpt_state.svg", "metastable_distribution.svg", "metastable_neighborhood.svg"):
        assert (out / name).exists(), name
    T, meta = io.read_matrix(out / "transition_matrix.csv")
    assert T.n == 22 and meta["n_cells"] == 21 and meta["absorbing_state"] == 0
    rmeta, header, table = io.read_csv(out / "report.csv")
    assert header == ["state", "midpoint", "mfpt", "metastable"]
    again = spectrum(T, len(rmeta["eigenvalues_real"])).values
    np.testing.assert_allclose(again.real, rmeta["eigenvalues_real"], rtol=0, atol=1e-12)
    rep = analyze_matrix(T)
    np.testing.assert_allclose(table[:, 2], rep.mfpt_state, rtol=0, atol=1e-12)
    np.testing.assert_allclose(table[:, 3], rep.metastable, rtol=0, atol=1e-12)
    svg = (out / "stochastic_return_map.svg").read_text()
    assert svg.startswith("<?xml") and 'version="1.1"' in svg and "<polyline" in svg


def test_cli_total_absorption(tmp_path, capsys):
    cfg = with_(LINEAR, system={"name": "linear_gaussian", "params": {"a": 0.4, "lo": 5.0, "hi": 6.0}})
    assert main(["analyze", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 4
    meta, _, _ = io.read_csv(tmp_path / "o" / "report.csv")
    assert meta["mfpt_system"] == 1.0
    assert any("absorbs" in w for w in meta["warnings"])
    assert "warning" in capsys.readouterr().err


def test_cli_numerical_failure(tmp_path, capsys):
    cfg = with_(LINEAR, noise={"variance": 1e4}, reduction={"steps": 50})
    assert main(["reduce", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_seed_and_threads_flags(tmp_path):
    cfg = with_(LINEAR, estimator={"method": "mc", "n_samples": 500})
    path = write_cfg(tmp_path, cfg)
    main(["analyze", "--config", path, "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["analyze", "--config", path, "--out", str(tmp_path / "b"), "--seed", "2", "--threads", "3"])
    main(["analyze", "--config", path, "--out", str(tmp_path / "c"), "--seed", "2"])
    read = lambda d: (tmp_path / d / "transition_matrix.csv").read_bytes()
    assert read("a") != read("b")
    assert read("b") == read("c")
    with pytest.raises(SystemExit):
        main(["analyze", "--config", path, "--threads", "0"])
    with pytest.raises(SystemExit):
        main(["analyze", "--config", path, "--seed", str(2**64)])


def test_single_point_sweep_matches_analyze(tmp_path):
    cfg = with_(LINEAR, sweep={"sigmas": [0.5]})
    path = write_cfg(tmp_path, cfg)
    assert main(["sweep-noise", "--config", path, "--out", str(tmp_path / "s")]) == 0
    assert main(["analyze", "--config", path, "--out", str(tmp_path / "a")]) == 0
    lines = [l for l in (tmp_path / "s" / "sweep.csv").read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "sigma,lambda2,mfpt,reliable,status"
    sigma, lam2, mfpt, reliable, status = lines[1].split(",")
    meta, _, _ = io.read_csv(tmp_path / "a" / "report.csv")
    assert float(lam2) == meta["eigenvalues_real"][1]
    assert float(mfpt) == meta["mfpt_system"]
    assert (reliable, status) == ("1", "ok")
    assert (tmp_path / "s" / "mfpt_sweep.svg").exists()


def test_sweep_zero_noise_flagged(tmp_path):
    from metastable.analysis import sweep_noise

    cfg = parse_config(with_(LINEAR, system={"name": "linear_gaussian", "params": {"a": 1.0}},
                             sweep={"sigmas": [0.0, 0.3]}))
    rows = sweep_noise(cfg, tmp_path)
    assert not rows[0]["reliable"] and rows[0]["status"] == "unreliable"
    assert rows[1]["reliable"]


def test_sweep_requires_sigmas(tmp_path, capsys):
    assert main(["sweep-noise", "--config", write_cfg(tmp_path, LINEAR), "--out", str(tmp_path)]) == 2


def test_compare_estimators_affine(tmp_path):
    from metastable.analysis import compare_estimators

    # variance 0.09 keeps every sigma point inside (-1, 1), so nothing is absorbed
    cfg = parse_config(with_(LINEAR, noise={"variance": 0.09}, estimator={"n_samples": 4000}))
    out = compare_estimators(cfg, tmp_path)
    rows = np.array([[float(x) for x in r] for r in out["rows"]])
    # columns: state, mid, mc mean/var/se/se/abs, lin mean/var/missing, ut mean/var/abs
    assert np.all(rows[:, 12] == 0.0) and np.all(rows[:, 9] == 0.0)
    np.testing.assert_allclose(rows[:, 10], rows[:, 7], rtol=0, atol=1e-9)
    np.testing.assert_allclose(rows[:, 11], rows[:, 8], rtol=0, atol=1e-9)
    np.testing.assert_allclose(rows[:, 11], 0.09, rtol=1e-9)
    # Monte Carlo agrees within sampling error (a few tail draws absorb at the edges)
    assert np.all(np.abs(rows[:, 2] - rows[:, 10]) <= 4 * rows[:, 4])
    methods = [t[0] for t in out["table"]]
    assert methods == ["slicing", "mc", "ut", "linearized"]
    for name in ("comparison.csv", "eigen_comparison.csv", "comparison_mean.svg", "comparison_variance.svg"):
        assert (tmp_path / name).exists()


def test_compare_estimators_quadratic(tmp_path):
    from metastable.analysis import compare_estimators

    var = 0.05
    cfg = parse_config({"schema_version": 1, "system": {"name": "quadratic"},
                        "grid": {"lo": -2.5, "hi": 2.5, "n_cells": 5}, "noise": {"variance": var},
                        "estimator": {"n_samples": 2000}})
    out = compare_estimators(cfg, tmp_path)
    mid = [r for r in out["rows"] if r[1] == 0.0][0]
    assert mid[8] == 0.0  # linearized variance at x0 = 0
    assert mid[10] == pytest.approx(var, abs=1e-9)  # UT mean


def test_compare_requires_samples(tmp_path):
    cfg = with_(LINEAR, estimator={"n_samples": 100})
    assert main(["compare-estimators", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_reduce_and_simulate(tmp_path, capsys):
    cfg = {"schema_version": 1, "system": {"name": "surrogate"},
           "grid": {"lo": -5.0, "hi": 5.0, "n_cells": 10},
           "noise": {"covariance": [[0.05, 0.0], [0.0, 0.05]]},
           "reduction": {"steps": 2000}, "simulate": {"steps": 30}, "seed": 4}
    path = write_cfg(tmp_path, cfg)
    assert main(["reduce", "--config", path, "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "PCA indicator: 3" in text and "Jacobian indicator: 3" in text
    data, labels = io.read_dataset(tmp_path / "dataset.csv")
    assert data.shape == (4, 2000) and labels == ["x0", "x1", "x2", "x3"]

    # the same dataset read back through the config gives the same answer
    cfg["reduction"] = {"dataset": str(tmp_path / "dataset.csv")}
    assert main(["reduce", "--config", write_cfg(tmp_path, cfg, "c2.json"), "--out", str(tmp_path / "r")]) == 0
    assert "PCA indicator: 3" in capsys.readouterr().out

    assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == 0
    _, header, traj = io.read_csv(tmp_path / "trajectory.csv")
    assert header == ["step", "absorbed", "x0", "x1", "x2", "x3"]
    assert traj.shape == (31, 6)


def test_dataset_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((3, 7))
    io.write_dataset(tmp_path / "d.csv", X, ["a", "b", "c"])
    Y, labels = io.read_dataset(tmp_path / "d.csv")
    assert labels == ["a", "b", "c"]
    np.testing.assert_array_equal(X, Y)


def test_matrix_round_trip_exact(tmp_path):
    from metastable.markov import assemble_matrix

    g = GridSpec(0.0, 1.0, 4)
    rng = np.random.default_rng(1)
    rows = rng.random((4, 5))
    rows /= rows.sum(axis=1, keepdims=True)
    T = assemble_matrix(rows, g)
    io.write_matrix(tmp_path / "t.csv", T)
    U, meta = io.read_matrix(tmp_path / "t.csv")
    np.testing.assert_array_equal(T.T, U.T)
    assert U.grid == g
