"""Benchmark protocols: simulated replications, train/test generalization, code tables."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (FeatureProductSpec, RawDataset, estimate_delta_y, expand_features,
                   generate_sim, load_csv, split)
from .intcode import elias_delta_len, length_u, length_un
from .objective import DesignMatrix
from .optimize import OptimizerConfig, fit_clr, ols_init
from .ratcode import DEFAULT_CONSTANTS, alpha_len, alpha_smooth
from .sphere import DEFAULT_BUDGET, h_applied, h_bar, lattice_count

METRICS = ("nonzero", "mse", "sd_ratio", "seconds")


def _mean_sd(values) -> tuple[float, float]:
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], float)
    if v.size == 0:
        return float("nan"), float("nan")
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def _write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# Simulated replications
# ---------------------------------------------------------------------------

@dataclass
class SimReport:
    rows: list = field(default_factory=list)  # one dict per (sim, method, replication)

    def aggregate(self) -> list[dict]:
        keys = []
        for r in self.rows:
            k = (r["sim"], r["method"])
            if k not in keys:
                keys.append(k)
        out = []
        for sim, method in keys:
            sel = [r for r in self.rows if r["sim"] == sim and r["method"] == method]
            agg = {"sim": sim, "method": method, "n": len(sel),
                   "failures": sum(1 for r in sel if r.get("error"))}
            for m in METRICS:
                agg[f"{m}_mean"], agg[f"{m}_sd"] = _mean_sd(r[m] for r in sel)
            agg["seconds_total"] = float(sum(r["seconds"] for r in sel if r["seconds"] is not None))
            out.append(agg)
        l2_time = {a["sim"]: a["seconds_total"] for a in out if a["method"] == "L2"}
        for a in out:
            base = l2_time.get(a["sim"])
            a["time_ratio_to_l2"] = a["seconds_total"] / base if base else float("nan")
        return out

    def to_dict(self) -> dict:
        return {"rows": self.rows, "aggregate": self.aggregate()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table_csv(self) -> str:
        agg = self.aggregate()
        header = ["sim", "method", "n", "failures"] + [f"{m}_{s}" for m in METRICS for s in ("mean", "sd")] \
            + ["time_ratio_to_l2"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for a in agg:
            w.writerow([a[h] for h in header])
        return buf.getvalue()

    def get(self, sim: str, method: str) -> dict:
        for a in self.aggregate():
            if a["sim"] == sim and a["method"] == method:
                return a
        raise KeyError((sim, method))


def _sim_metrics(theta, beta, X, y, sigma):
    e = y - X.T @ theta
    coef = theta[:beta.size]
    return {
        "nonzero": int(np.count_nonzero(coef)),
        "mse": float(np.mean((coef - beta) ** 2)),
        "sd_ratio": float(np.sqrt(np.mean(e * e)) / sigma),
    }


def _run_replication(args):
    name, rep, ds, beta, sigma, config_dict, compute_exact = args
    config = OptimizerConfig.from_dict(config_dict)
    X, _, bias = expand_features(ds, FeatureProductSpec(include_bias=True))
    y = ds.target
    rows = []
    try:
        t0 = time.perf_counter()
        dm = DesignMatrix(X, y, estimate_delta_y(y))
        model = fit_clr(dm, config, DEFAULT_CONSTANTS, exempt=(bias,), compute_exact=compute_exact)
        row = _sim_metrics(model.full_theta(sharp=True), beta, X, y, sigma)
        row.update(seconds=time.perf_counter() - t0, description_length_bits=model.description_length_bits,
                   exact_bits=model.exact_bits, round_limit_hit=model.round_limit_hit, error=None)
    except Exception as exc:  # recorded, not fatal
        row = dict(nonzero=None, mse=None, sd_ratio=None, seconds=None, error=repr(exc))
    rows.append({"sim": name, "method": "CLR", "rep": rep, **row})
    t0 = time.perf_counter()
    theta = ols_init(DesignMatrix(X, y, 1.0))
    row = _sim_metrics(theta, beta, X, y, sigma)
    rows.append({"sim": name, "method": "L2", "rep": rep, **row,
                 "seconds": time.perf_counter() - t0, "error": None})
    return rows


def run_sim(specs, config: OptimizerConfig | None = None, workers: int = 1,
            compute_exact: bool = False) -> SimReport:
    """Fit CLR and least squares (both with a bias row) on every replication.

    Counts and parameter errors exclude the bias; ``sd_ratio`` is the training
    residual RMS divided by the simulation noise level.
    """
    config = config or OptimizerConfig()
    jobs = []
    for spec in specs:
        beta = np.asarray(spec.beta)
        for rep, ds in enumerate(generate_sim(spec)):
            jobs.append((spec.name, rep, ds, beta, spec.sigma, config.to_dict(), compute_exact))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_replication, jobs))
    else:
        results = [_run_replication(j) for j in jobs]
    return SimReport([r for rows in results for r in rows])


# ---------------------------------------------------------------------------
# Train / test generalization
# ---------------------------------------------------------------------------

@dataclass
class GeneralizationReport:
    rows: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows}, indent=2)

    def plot_csv(self) -> str:
        """x = test SD ratio, y = train SD ratio, one line per dataset and method."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "method", "x_test_sd_ratio", "y_train_sd_ratio"])
        for r in self.rows:
            if r.get("error"):
                continue
            w.writerow([r["dataset"], "CLR", r["clr_test_sd_ratio"], r["clr_train_sd_ratio"]])
            w.writerow([r["dataset"], "L2", r["l2_test_sd_ratio"], r["l2_train_sd_ratio"]])
        return buf.getvalue()

    def mean_sparsity(self) -> float:
        return _mean_sd(r.get("sparsity") for r in self.rows)[0]


def _sd_ratio(e, y) -> float:
    sy = float(np.std(y))
    return float(np.std(e) / sy) if sy > 0 else float("nan")


def generalize_dataset(ds: RawDataset, name: str, config: OptimizerConfig | None = None,
                       features: dict | None = None, train_fraction: float = 2 / 3,
                       seed: int = 0) -> dict:
    config = config or OptimizerConfig()
    spec = FeatureProductSpec.from_dict(features or {"preset": "squares", "include_bias": True}, ds.n_features)
    train, test = split(ds, train_fraction, seed)
    Xtr, names, bias = expand_features(train, spec)
    Xte, _, _ = expand_features(test, spec)
    ytr, yte = train.target, test.target
    dm = DesignMatrix(Xtr, ytr, estimate_delta_y(ytr))
    exempt = () if bias is None else (bias,)
    model = fit_clr(dm, config, DEFAULT_CONSTANTS, exempt=exempt, compute_exact=False)
    theta = model.full_theta(sharp=True)
    ols = ols_init(dm)
    K = Xtr.shape[0]
    survivors = [names[i] for i in model.active_features if i != bias]
    return {
        "dataset": name, "N": ds.n_obs, "J": ds.n_features, "K": K,
        "clr_train_sd_ratio": _sd_ratio(ytr - Xtr.T @ theta, ytr),
        "clr_test_sd_ratio": _sd_ratio(yte - Xte.T @ theta, yte),
        "l2_train_sd_ratio": _sd_ratio(ytr - Xtr.T @ ols, ytr),
        "l2_test_sd_ratio": _sd_ratio(yte - Xte.T @ ols, yte),
        "sparsity": len(survivors) / K,
        "selected": survivors,
        "description_length_bits": model.description_length_bits,
        "error": None,
    }


def run_generalize(paths, config: OptimizerConfig | None = None, features: dict | None = None,
                   target_column: str | None = None, train_fraction: float = 2 / 3,
                   seed: int = 0) -> GeneralizationReport:
    rows = []
    for p in paths:
        try:
            ds = load_csv(p, target_column)
            rows.append(generalize_dataset(ds, Path(p).stem, config, features, train_fraction, seed))
        except Exception as exc:  # per-dataset failure is reported, the rest still run
            rows.append({"dataset": Path(p).stem, "error": repr(exc)})
    return GeneralizationReport(rows)


# ---------------------------------------------------------------------------
# Code-length tables
# ---------------------------------------------------------------------------

DEFAULT_TABLES = {
    "u_max": 1000,
    "alpha_log_theta": [-4, 8, 25],
    "alpha_log_ratio": [0, 8, 17],
    "sphere_dims": [1, 2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 50],
    "sphere_radii": [1, 2, 3, 5, 8, 10, 15, 20, 30, 50, 100],
    "budget": DEFAULT_BUDGET,
}


def code_tables(cfg: dict | None = None) -> dict:
    """Tables of exact and smooth code lengths as ``{name: (header, rows)}``.

    Sphere cells whose exact count would exceed the budget are left empty.
    """
    c = dict(DEFAULT_TABLES, **(cfg or {}))
    u_rows = [[n, length_un(n), length_u(n), elias_delta_len(n) if n >= 1 else ""]
              for n in range(int(c["u_max"]) + 1)]

    lt = np.linspace(*c["alpha_log_theta"][:2], int(c["alpha_log_theta"][2]))
    lr = np.linspace(*c["alpha_log_ratio"][:2], int(c["alpha_log_ratio"][2]))
    a_rows = []
    for a in lt:
        for b in lr:
            theta, delta = 2.0 ** a, 2.0 ** (a - b)
            a_rows.append([a, b, theta, delta, alpha_len(theta, delta),
                           alpha_smooth(theta, delta, DEFAULT_CONSTANTS)])

    s_rows = []
    for N in c["sphere_dims"]:
        for r in c["sphere_radii"]:
            s = r * r
            exact = ""
            if N * s <= c["budget"]:
                exact = length_u(lattice_count(N, s, c["budget"]) - 1)
            s_rows.append([N, r, exact, h_bar(N, s), h_applied(N, r / math.sqrt(N))])
    return {
        "u": (["n", "len_un", "len_u_signed", "len_elias_delta"], u_rows),
        "alpha": (["log2_theta", "log2_ratio", "theta", "delta", "alpha_exact", "alpha_smooth"], a_rows),
        "sphere": (["N", "r", "h_exact", "h_bar", "h_ap"], s_rows),
    }


def write_code_tables(out_dir, cfg: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, rows) in code_tables(cfg).items():
        p = out_dir / f"codetable_{name}.csv"
        _write_csv(p, header, rows)
        paths.append(p)
    return paths
