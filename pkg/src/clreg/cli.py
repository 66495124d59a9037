"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 capacity error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, codec
from .data import DataError, FeatureProductSpec, SimSpec, estimate_delta_y, expand_features, load_csv
from .intcode import DecodeError
from .objective import DesignMatrix
from .optimize import CLRModel, OptimizerConfig, fit_clr, model_exact_bits
from .ratcode import DEFAULT_CONSTANTS
from .sphere import DEFAULT_BUDGET, CapacityError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _optimizer(cfg: dict, seed) -> OptimizerConfig:
    d = dict(cfg.get("optimizer", {}))
    if seed is not None:
        d["seed"] = seed
    try:
        return OptimizerConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad optimizer config: {exc}") from exc


def _features(cfg: dict, J: int, default="identity") -> tuple[dict, FeatureProductSpec]:
    fd = dict(cfg.get("features") or {"preset": default, "include_bias": True})
    return fd, FeatureProductSpec.from_dict(fd, J)


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _fit_report(ds, cfg, seed) -> dict:
    budget = int(cfg.get("budget", DEFAULT_BUDGET))
    fd, spec = _features(cfg, ds.n_features)
    X, names, bias = expand_features(ds, spec)
    y = ds.target
    delta_y = float(cfg["delta_y"]) if cfg.get("delta_y") else estimate_delta_y(y)
    offset = float(np.min(y))
    config = _optimizer(cfg, seed)
    config.exact_budget = budget
    t0 = time.perf_counter()
    model = fit_clr(DesignMatrix(X, y, delta_y), config, DEFAULT_CONSTANTS,
                    exempt=() if bias is None else (bias,), offset=offset)
    return {
        "features": fd,
        "feature_names": list(names),
        "bias_index": bias,
        "delta_y": delta_y,
        "offset": offset,
        "n_obs": ds.n_obs,
        "model": model.to_dict(),
        "selected": [names[i] for i in model.active_features],
        "naive_bits": codec.naive_bits(y, delta_y, offset),
        "seconds": time.perf_counter() - t0,
    }


def cmd_fit(args, cfg):
    ds = load_csv(args.input, args.target_col)
    _emit(json.dumps(_fit_report(ds, cfg, args.seed), indent=2), args.out)


def cmd_encode(args, cfg):
    ds = load_csv(args.input, args.target_col)
    budget = int(cfg.get("budget", DEFAULT_BUDGET))
    if args.model:
        report = json.loads(Path(args.model).read_text())
    else:
        report = _fit_report(ds, cfg, args.seed)
    model = CLRModel.from_dict(report["model"])
    spec = FeatureProductSpec.from_dict(report["features"], ds.n_features)
    X, _, _ = expand_features(ds, spec)
    if X.shape[0] != model.n_features:
        raise DataError(f"model has {model.n_features} features, data expands to {X.shape[0]}")
    dm = DesignMatrix(X, ds.target, report["delta_y"])
    exact = model_exact_bits(dm, model, report["offset"], budget)
    if exact is None:
        raise CapacityError("residual is beyond exact-count capacity; use `fit` for the approximate "
                            "description length, or raise the `budget` config value")
    data = codec.encode(X, ds.target, model.full_theta(), model.full_delta(),
                        report["delta_y"], report["offset"], budget)
    out = args.out or str(Path(args.input).with_suffix(".clr"))
    Path(out).write_bytes(data)
    summary = {"file": out, "bytes": len(data), "header_bits": codec.HEADER_BITS, "payload_bits": exact,
               "expected_bytes": codec.expected_size(exact),
               "naive_bits": codec.naive_bits(ds.target, report["delta_y"], report["offset"])}
    print(json.dumps(summary, indent=2))


def cmd_decode(args, cfg):
    ds = load_csv(args.features, args.target_col)
    budget = int(cfg.get("budget", DEFAULT_BUDGET))
    _, spec = _features(cfg, ds.n_features)
    X, _, _ = expand_features(ds, spec)
    data = Path(args.input).read_bytes()
    dec = codec.decode(data, X, budget)
    # a few digits below the grid step hide floating-point residue of offset + k * step
    digits = max(0, 6 - math.floor(math.log10(dec.header.delta_y)))
    lines = [f"{args.target_col or ds.target_name},index"]
    lines += [f"{round(float(v), digits)!r},{int(q)}" for v, q in zip(dec.target, dec.quantized)]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_sim(args, cfg):
    sc = dict(cfg.get("sim", {}))
    presets = sc.pop("presets", ["SIM1", "SIM2", "SIM3"])
    workers = int(sc.pop("workers", 1))
    compute_exact = bool(sc.pop("compute_exact", False))
    if args.seed is not None:
        sc["seed"] = args.seed
    try:
        specs = [SimSpec.preset(p, **sc) for p in presets]
    except TypeError as exc:
        raise UsageError(f"bad sim config: {exc}") from exc
    report = bench.run_sim(specs, _optimizer(cfg, args.seed), workers, compute_exact)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sim_report.json").write_text(report.to_json())
        (out / "sim_table.csv").write_text(report.table_csv())
    sys.stdout.write(report.table_csv())


def cmd_generalize(args, cfg):
    features = cfg.get("features") or {"preset": "squares", "include_bias": True}
    report = bench.run_generalize(args.inputs, _optimizer(cfg, args.seed), features, args.target_col,
                                  float(cfg.get("train_fraction", 2 / 3)),
                                  args.seed if args.seed is not None else 0)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "generalization.json").write_text(report.to_json())
        (out / "generalization_plot.csv").write_text(report.plot_csv())
    sys.stdout.write(report.plot_csv())
    if any(r.get("error") for r in report.rows):
        for r in report.rows:
            if r.get("error"):
                print(f"{r['dataset']}: {r['error']}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_codetables(args, cfg):
    paths = bench.write_code_tables(args.out or ".", cfg.get("codetables"))
    for p in paths:
        print(p)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="clreg", description="Sparse linear regression by minimum description length.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output path")
    common.add_argument("--target-col", help="target column name (default: last column)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fit", parents=[common], help="fit a model to a CSV and print a JSON report")
    s.add_argument("input")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("encode", parents=[common], help="losslessly encode a CSV target")
    s.add_argument("input")
    s.add_argument("--model", help="fit report from `fit` (default: fit now)")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", parents=[common], help="decode a stream given the feature CSV")
    s.add_argument("input", help="encoded file")
    s.add_argument("features", help="CSV with the same feature columns used for encoding")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("sim", parents=[common], help="simulated replication benchmark")
    s.set_defaults(func=cmd_sim)

    s = sub.add_parser("generalize", parents=[common], help="train/test protocol on CSV datasets")
    s.add_argument("inputs", nargs="+")
    s.set_defaults(func=cmd_generalize)

    s = sub.add_parser("codetables", parents=[common], help="write code-length tables as CSV")
    s.set_defaults(func=cmd_codetables)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        rc = args.func(args, cfg)
        return EXIT_OK if rc is None else rc
    except UsageError as exc:
        print(f"clreg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"clreg: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DataError, DecodeError, OSError) as exc:
        print(f"clreg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
