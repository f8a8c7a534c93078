"""End-to-end runs behind the CLI subcommands."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from . import io, svg
from .config import AnalysisConfig
from .core import EmpiricalDistribution, NoiseSpec, matrix_sqrt
from .estimators import LinearizationError
from .markov import (
    MetastableReport,
    TransitionMatrix,
    analyze_matrix,
    assemble_matrix,
    row_from_belief,
    row_from_samples,
)
from .pipeline import (
    build_transition_matrix,
    deterministic_map,
    estimate_state,
    grid_states,
    map_states,
)
from .reduction import TrajectoryDataset, collect_dataset, indicator_state, jacobian_indicator, pca

log = logging.getLogger(__name__)


@dataclass
class AnalysisResult:
    matrix: TransitionMatrix
    report: MetastableReport
    files: dict

    @property
    def totally_absorbed(self) -> bool:
        return bool(np.all(self.matrix.T[:, 0] == 1.0))


def _base_state(cfg: AnalysisConfig):
    return None if cfg.base_state is None else np.array(cfg.base_state)


def _meta(cfg: AnalysisConfig, **extra) -> dict:
    return {
        "system": cfg.system_name,
        "method": cfg.estimator.method,
        "seed": cfg.estimator.seed,
        **extra,
    }


def run_matrix(cfg: AnalysisConfig, noise: NoiseSpec | None = None) -> TransitionMatrix:
    system = cfg.build_system()
    return build_transition_matrix(
        system, cfg.grid, noise or cfg.noise, cfg.estimator, cfg.threads, _base_state(cfg)
    )


def analyze(cfg: AnalysisConfig, out_dir=None) -> AnalysisResult:
    """Estimate the chain, compute every metric, write CSVs and SVGs."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    system = cfg.build_system()
    T = run_matrix(cfg)
    report = analyze_matrix(T)
    all_absorbed = bool(np.all(T.T[:, 0] == 1.0))
    if all_absorbed:
        report.warnings.append("every state absorbs in one step")
    meta = _meta(cfg, noise_covariance=cfg.noise.covariance.tolist())

    files = {
        "matrix": out / "transition_matrix.csv",
        "report": out / "report.csv",
        "eigenvalues": out / "eigenvalues.csv",
        "return_map": out / "stochastic_return_map.svg",
        "mfpt": out / "mfpt_state.svg",
        "metastable": out / "metastable_distribution.svg",
        "neighborhood": out / "metastable_neighborhood.svg",
    }
    io.write_matrix(files["matrix"], T, meta)
    io.write_report(files["report"], report, cfg.grid, meta)
    io.write_eigenvalues(files["eigenvalues"], report, meta)

    mids = cfg.grid.midpoints
    extent = (cfg.grid.lo, cfg.grid.hi)
    det = deterministic_map(system, cfg.grid, _base_state(cfg))
    svg.heat_map(
        files["return_map"], T.bar, extent,
        title="Stochastic return map", xlabel="current state", ylabel="next state",
        overlay=(mids, det),
    )
    svg.line_plot(
        files["mfpt"], mids, report.mfpt_state[1:],
        title="State-dependent MFPT", xlabel="state", ylabel="steps to absorption",
    )
    svg.line_plot(
        files["metastable"], mids, report.metastable[1:],
        title="Metastable distribution", xlabel="state", ylabel="probability",
    )
    svg.heat_map(
        files["neighborhood"], report.neighborhood[1:, 1:], extent,
        title="Metastable neighborhood", xlabel="state k", ylabel="state k+1",
        overlay=(mids, det),
    )
    return AnalysisResult(T, report, files)


def sweep_noise(cfg: AnalysisConfig, out_dir=None) -> list[dict]:
    """One analysis per noise standard deviation (covariance ``sigma^2 I``)."""
    if not cfg.sweep:
        raise ValueError("configuration has no sweep.sigmas")
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for sigma in cfg.sweep:
        rec = {"sigma": float(sigma), "lambda2": float("nan"), "mfpt": float("nan"),
               "reliable": False, "status": "ok"}
        try:
            T = run_matrix(cfg, cfg.noise.scaled(sigma))
            rep = analyze_matrix(T, k=2)
            rec["lambda2"] = float(abs(rep.spectrum.values[1]))
            rec["mfpt"] = rep.mfpt.value
            rec["reliable"] = rep.mfpt.reliable
            if not rep.mfpt.reliable:
                rec["status"] = "unreliable"
        except Exception as exc:  # noqa: BLE001 - a failed point must not stop the sweep
            log.warning("sweep point sigma=%g failed: %s", sigma, exc)
            rec["status"] = f"failed: {type(exc).__name__}: {exc}".replace(",", ";")
        rows.append(rec)

    io.write_table(
        out / "sweep.csv",
        ["sigma", "lambda2", "mfpt", "reliable", "status"],
        [[r["sigma"], r["lambda2"], r["mfpt"], r["reliable"], r["status"]] for r in rows],
        _meta(cfg, kind="noise_sweep", grid_n_cells=cfg.grid.n_cells),
    )
    sig = np.array([r["sigma"] for r in rows])
    M = np.array([r["mfpt"] if np.isfinite(r["mfpt"]) else np.nan for r in rows])
    svg.line_plot(
        out / "mfpt_sweep.svg", sig, M, title="System-wide MFPT vs noise",
        xlabel="noise standard deviation", ylabel="MFPT [steps]", log_y=True, markers=True,
    )
    return rows


DEFAULT_SLICES = 2000


def sliced_row(system, x0, noise: NoiseSpec, grid, n_slices: int = DEFAULT_SLICES, span: float = 6.0):
    """Transition row by slicing scalar noise over +-span sigma.

    Each slice is stepped once at its midpoint and carries the Gaussian mass
    of its interval; the two tails are folded into the outermost slices.
    """
    if noise.dim != 1:
        raise ValueError("noise slicing needs scalar noise")
    sd = float(np.sqrt(noise.covariance[0, 0]))
    if sd == 0.0:
        w = np.zeros(1)
        p = np.ones(1)
    else:
        z = np.linspace(-span, span, n_slices + 1)
        p = np.diff(ndtr(z))
        p[0] += ndtr(-span)
        p[-1] += ndtr(-span)
        w = 0.5 * (z[1:] + z[:-1]) * sd
    X = np.tile(np.asarray(x0, dtype=float), (len(w), 1))
    Y, absorbed = system.step_batch(X, w[:, None])
    row = np.zeros(grid.n_states)
    cells = grid.cell_of(np.where(absorbed, np.nan, Y[:, system.indicator_index]))
    np.add.at(row, cells, p)
    return row / row.sum()


def _moments(est, index: int):
    if isinstance(est, EmpiricalDistribution):
        n = est.n_live
        if n < 2:
            return np.nan, np.nan, np.nan, np.nan, est.absorbed_fraction
        mean = est.mean[index]
        var = est.covariance[index, index]
        mean_se = np.sqrt(var / n)
        var_se = var * np.sqrt(2.0 / (n - 1))
        return mean, var, mean_se, var_se, est.absorbed_fraction
    if est is None or est.belief is None:
        return np.nan, np.nan, np.nan, np.nan, 1.0
    mu, var = est.belief.marginal(index)
    return mu, var, np.nan, np.nan, est.absorbed_mass


def compare_estimators(cfg: AnalysisConfig, out_dir=None, n_slices: int | None = None) -> dict:
    """Per-state moments and leading eigenvalues for each estimator.

    Rows of the eigenvalue table: noise slicing (scalar noise only), Monte
    Carlo, UT and linearization, with the number of model evaluations used.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    system = cfg.build_system()
    grid = cfg.grid
    X = grid_states(system, grid, _base_state(cfg))
    idx = system.indicator_index
    n_aug = system.state_dim + system.noise_dim
    if n_slices is None:
        n_slices = cfg.raw.get("estimator", {}).get("n_slices", DEFAULT_SLICES)

    def run(method):
        settings = replace(cfg.estimator, method=method)

        def one(i):
            if method == "linearized":
                try:
                    est = estimate_state(system, X[i], cfg.noise, settings, i + 1, strict=True)
                except LinearizationError:
                    return None, _absorbing(grid), True
                return est, row_from_belief(est.belief, est.absorbed_mass, grid, idx), False
            est = estimate_state(system, X[i], cfg.noise, settings, i + 1)
            if method == "mc":
                return est, row_from_samples(est.samples[:, idx], est.n_total, grid), False
            return est, row_from_belief(est.belief, est.absorbed_mass, grid, idx), False

        results = map_states(one, grid.n_cells, cfg.threads)
        T = assemble_matrix(np.vstack([r[1] for r in results]), grid)
        return results, analyze_matrix(T, k=4)

    per_method = {m: run(m) for m in ("mc", "ut", "linearized")}
    evaluations = {
        "mc": cfg.estimator.n_samples * grid.n_cells,
        "ut": (2 * n_aug + 1) * grid.n_cells,
        "linearized": (2 * n_aug + 1) * grid.n_cells,
    }
    order = ["mc", "ut", "linearized"]
    reports = {m: per_method[m][1] for m in order}
    if system.noise_dim == 1:
        rows = map_states(
            lambda i: sliced_row(system, X[i], cfg.noise, grid, n_slices), grid.n_cells, cfg.threads
        )
        reports["slicing"] = analyze_matrix(assemble_matrix(np.vstack(rows), grid), k=4)
        evaluations["slicing"] = n_slices * grid.n_cells
        order.insert(0, "slicing")

    header = [
        "state", "midpoint",
        "mc_mean", "mc_var", "mc_mean_se", "mc_var_se", "mc_absorbed",
        "lin_mean", "lin_var", "lin_missing",
        "ut_mean", "ut_var", "ut_absorbed",
    ]
    rows = []
    for i in range(grid.n_cells):
        mc = _moments(per_method["mc"][0][i][0], idx)
        lin_est, _, lin_missing = per_method["linearized"][0][i]
        lin = _moments(lin_est, idx)
        ut = _moments(per_method["ut"][0][i][0], idx)
        rows.append([i + 1, grid.midpoints[i], *mc, lin[0], lin[1], lin_missing, ut[0], ut[1], ut[4]])
    io.write_table(out / "comparison.csv", header, rows, _meta(cfg, kind="estimator_comparison"))

    table = []
    for method in order:
        ev = reports[method].spectrum.values
        vals = [float(v.real) for v in ev] + [float("nan")] * (4 - len(ev))
        table.append([method, evaluations[method], *vals[:4], reports[method].mfpt.value])
    io.write_table(
        out / "eigen_comparison.csv",
        ["method", "evaluations", "lambda1", "lambda2", "lambda3", "lambda4", "mfpt"],
        table,
        _meta(cfg, kind="eigenvalue_comparison", noise_covariance=cfg.noise.covariance.tolist()),
    )

    mids = grid.midpoints
    data = np.array([[float(v) for v in r[2:]] for r in rows])
    labels = ["MC", "linearized", "UT"]
    svg.line_plot(
        out / "comparison_mean.svg", mids, [data[:, 0], data[:, 5], data[:, 8]],
        title="Next-state mean", xlabel="state", ylabel="mean", labels=labels,
    )
    svg.line_plot(
        out / "comparison_variance.svg", mids, [data[:, 1], data[:, 6], data[:, 9]],
        title="Next-state variance", xlabel="state", ylabel="variance", labels=labels,
    )
    return {"rows": rows, "table": table, "reports": reports}


def _absorbing(grid):
    row = np.zeros(grid.n_states)
    row[0] = 1.0
    return row


def reduce(cfg: AnalysisConfig, out_dir=None) -> dict:
    """Pick the indicator coordinate by PCA (dataset or simulated) and by the Jacobian."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = cfg.reduction
    standardize = opts.get("standardize", True)
    system = cfg.build_system()
    x0 = np.array(opts["x0"]) if "x0" in opts else system.nominal_state()

    if "dataset" in opts:
        data, labels = io.read_dataset(opts["dataset"])
        ds = TrajectoryDataset(data, tuple(labels))
    else:
        ds = collect_dataset(system, x0, opts.get("steps", 100), cfg.noise, cfg.estimator.seed)
        io.write_dataset(out / "dataset.csv", ds.data, ds.labels, _meta(cfg))
    res = pca(ds, standardize)
    choice = indicator_state(res)
    result = {"pca_index": choice.index, "pca_tie": choice.tie,
              "explained_ratio": res.explained_ratio.tolist()}
    try:
        jac = jacobian_indicator(system, x0)
        result.update(jacobian_index=jac.index, jacobian_flagged=jac.flagged)
    except LinearizationError as exc:
        result.update(jacobian_index=-1, jacobian_flagged=True)
        log.warning("jacobian indicator unavailable: %s", exc)

    io.write_table(
        out / "pca.csv",
        ["state", "label", "pc1_loading", "explained_ratio"],
        [[i, ds.labels[i], res.loadings[i, 0], res.explained_ratio[i]] for i in range(ds.shape[0])],
        _meta(cfg, kind="pca", standardized=standardize, pca_index=choice.index,
              pca_tie=choice.tie, jacobian_index=result["jacobian_index"]),
    )
    svg.line_plot(
        out / "scree.svg", np.arange(1, ds.shape[0] + 1), res.explained_ratio,
        title="Explained variance", xlabel="component", ylabel="ratio", markers=True,
    )
    return result


def simulate(cfg: AnalysisConfig, out_dir=None) -> np.ndarray:
    """Raw noisy trajectory dump; stops at absorption."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    system = cfg.build_system()
    opts = cfg.simulate
    x0 = np.array(opts["x0"]) if "x0" in opts else system.nominal_state()
    steps = opts.get("steps", 100)
    rng = np.random.default_rng(cfg.estimator.seed)
    S = matrix_sqrt(cfg.noise.covariance)
    x = x0.astype(float)
    rows = [[0, 0, *x]]
    for k in range(1, steps + 1):
        o = system.step(x, S @ rng.standard_normal(system.noise_dim))
        if o.absorbed:
            rows.append([k, 1, *np.full(system.state_dim, np.nan)])
            break
        x = o.state
        rows.append([k, 0, *x])
    io.write_table(
        out / "trajectory.csv",
        ["step", "absorbed", *[f"x{i}" for i in range(system.state_dim)]],
        rows,
        _meta(cfg, kind="trajectory"),
    )
    return np.array(rows, dtype=float)


__all__ = [
    "AnalysisResult",
    "analyze",
    "compare_estimators",
    "sliced_row",
    "reduce",
    "simulate",
    "sweep_noise",
]
