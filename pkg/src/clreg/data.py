"""Datasets, target quantization, feature products and the simulated benchmarks."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Bad or unusable input data."""


class DegenerateTargetError(DataError):
    pass


@dataclass(frozen=True)
class RawDataset:
    observations: np.ndarray  # J x N
    target: np.ndarray
    feature_names: tuple = ()
    target_name: str = "y"
    dropped_columns: tuple = ()

    def __post_init__(self):
        D = np.asarray(self.observations, dtype=float)
        if D.ndim == 1:
            D = D[None, :]
        y = np.asarray(self.target, dtype=float).ravel()
        if D.ndim != 2 or D.shape[1] != y.shape[0]:
            raise DataError(f"observations {D.shape} do not match target length {y.shape[0]}")
        if y.shape[0] < 2:
            raise DataError("need at least 2 observations")
        if not (np.all(np.isfinite(D)) and np.all(np.isfinite(y))):
            raise DataError("non-finite values in dataset")
        names = tuple(self.feature_names) or tuple(f"x{i + 1}" for i in range(D.shape[0]))
        if len(names) != D.shape[0]:
            raise DataError("feature_names length does not match observations")
        object.__setattr__(self, "observations", D)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.observations.shape[0]

    @property
    def n_obs(self) -> int:
        return self.observations.shape[1]

    def take(self, idx) -> "RawDataset":
        idx = np.asarray(idx, dtype=int)
        return RawDataset(self.observations[:, idx], self.target[idx], self.feature_names, self.target_name)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _to_float(s: str):
    try:
        v = float(s)
    except ValueError:
        return None
    return v


def load_csv(path, target_column: str | None = None) -> RawDataset:
    """Read a headed, comma-separated file.  The target defaults to the last column.

    Columns that do not parse as numbers everywhere are dropped with a warning.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if any(len(r) != len(header) for r in body):
        raise DataError(f"{path}: ragged rows")
    if target_column is None:
        target_column = header[-1]
    if target_column not in header:
        raise DataError(f"target column {target_column!r} not in {header}")
    cols = {}
    dropped = []
    for j, name in enumerate(header):
        vals = [_to_float(r[j]) for r in body]
        if any(v is None for v in vals):
            if name == target_column:
                raise DataError(f"target column {name!r} is not numeric")
            dropped.append(name)
            continue
        cols[name] = np.array(vals, dtype=float)
    if dropped:
        warnings.warn(f"dropped non-numeric columns: {', '.join(dropped)}", stacklevel=2)
    names = [n for n in header if n in cols and n != target_column]
    D = np.array([cols[n] for n in names]).reshape(len(names), len(body))
    return RawDataset(D, cols[target_column], tuple(names), target_column, tuple(dropped))


def save_csv(ds: RawDataset, path):
    """Write a dataset so that :func:`load_csv` reads it back bit-exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [ds.target_name])
        for i in range(ds.n_obs):
            w.writerow([repr(float(v)) for v in ds.observations[:, i]] + [repr(float(ds.target[i]))])


# ---------------------------------------------------------------------------
# Target quantization
# ---------------------------------------------------------------------------

FALLBACK_BITS = 16
REL_TOL = 1e-6


def _is_multiple(x: np.ndarray, g: float) -> bool:
    r = x / g
    return bool(np.all(np.abs(r - np.rint(r)) <= REL_TOL * np.maximum(1.0, np.abs(r))))


def estimate_delta_y(target) -> float:
    """Quantization step of the target: the largest ``g`` with every
    ``(y_i - y_min) / g`` integral (floating GCD), or ``range / 2**16`` when
    no such ``g`` above that floor exists."""
    y = np.asarray(target, dtype=float).ravel()
    if y.size < 2 or not np.all(np.isfinite(y)):
        raise DataError("target needs at least 2 finite values")
    u = np.unique(y)
    if u.size < 2:
        raise DegenerateTargetError("target is constant")
    span = float(u[-1] - u[0])
    floor = span / 2 ** FALLBACK_BITS
    diffs = np.unique(np.diff(u))
    x = u - u[0]
    g = float(diffs[0])
    tol = REL_TOL * span
    for d in diffs[1:]:
        a, b = float(d), g
        if a < b:
            a, b = b, a
        # Euclid with a tolerance for floating-point residue
        while b > tol:
            r = math.fmod(a, b)
            if b - r <= tol:
                r = 0.0
            a, b = b, r
        g = a
        if g < floor:
            return floor
    if g < floor or not _is_multiple(x, g):
        return floor
    # prefer the short decimal (0.1 rather than 0.10000000000000009)
    nice = float(f"{g:.12g}")
    return nice if _is_multiple(x, nice) else g


def quantize(y, delta_y: float, offset: float) -> np.ndarray:
    """Integer grid indices of ``y`` on ``offset + delta_y * Z``."""
    return np.rint((np.asarray(y, float) - offset) / delta_y).astype(np.int64)


# ---------------------------------------------------------------------------
# Feature products
# ---------------------------------------------------------------------------

FEATURE_FUNCTIONS = {
    "identity": (1, lambda rows: rows[0], "{0}"),
    "square": (1, lambda rows: rows[0] ** 2, "{0}^2"),
    "product": (2, lambda rows: rows[0] * rows[1], "{0}*{1}"),
}


@dataclass(frozen=True)
class FeatureProductSpec:
    """Extra rows appended to the raw features: one per ``(indices, tag)`` group."""

    groups: tuple = ()
    include_bias: bool = False

    def __post_init__(self):
        groups = []
        for g in self.groups:
            try:
                idx, tag = g
            except (TypeError, ValueError):
                raise DataError(f"feature group must be (indices, tag), got {g!r}") from None
            if tag not in FEATURE_FUNCTIONS:
                raise DataError(f"unknown feature function {tag!r}")
            idx = tuple(int(i) for i in (idx if np.ndim(idx) else [idx]))
            if len(idx) != FEATURE_FUNCTIONS[tag][0]:
                raise DataError(f"{tag!r} takes {FEATURE_FUNCTIONS[tag][0]} index(es), got {idx}")
            groups.append((idx, tag))
        object.__setattr__(self, "groups", tuple(groups))

    @classmethod
    def squares(cls, J: int, include_bias: bool = True) -> "FeatureProductSpec":
        return cls(tuple(((i,), "square") for i in range(J)), include_bias)

    @classmethod
    def pairs(cls, J: int, include_bias: bool = True) -> "FeatureProductSpec":
        return cls(tuple(((i, j), "product") for i in range(J) for j in range(i + 1, J)), include_bias)

    @classmethod
    def from_dict(cls, d: dict | None, J: int | None = None) -> "FeatureProductSpec":
        d = d or {}
        bias = bool(d.get("include_bias", True))
        kind = d.get("preset")
        if kind == "squares":
            return cls.squares(J, bias)
        if kind == "pairs":
            return cls.pairs(J, bias)
        if kind not in (None, "identity"):
            raise DataError(f"unknown feature preset {kind!r}")
        return cls(tuple((tuple(g[0]), g[1]) for g in d.get("groups", [])), bias)

    def n_out(self, J: int) -> int:
        return J + len(self.groups) + int(self.include_bias)


def expand_matrix(D, spec: FeatureProductSpec, names=None):
    """Expand a J x N matrix; returns ``(X, names, bias_index)`` with X of shape K x N."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    J = D.shape[0]
    names = list(names) if names is not None else [f"x{i + 1}" for i in range(J)]
    rows = [D]
    for idx, tag in spec.groups:
        if any(i < 0 or i >= J for i in idx):
            raise DataError(f"feature index out of range in {idx} (J={J})")
        _, fn, fmt = FEATURE_FUNCTIONS[tag]
        rows.append(fn([D[i] for i in idx])[None, :])
        names.append(fmt.format(*(names[i] for i in idx)))
    bias_index = None
    if spec.include_bias:
        rows.append(np.ones((1, D.shape[1])))
        names.append("bias")
        bias_index = len(names) - 1
    return np.vstack(rows), tuple(names), bias_index


def expand_features(ds: RawDataset, spec: FeatureProductSpec):
    """Return ``(X, names, bias_index)`` with X of shape K x N."""
    return expand_matrix(ds.observations, spec, ds.feature_names)


# ---------------------------------------------------------------------------
# Simulated regression problems
# ---------------------------------------------------------------------------

SIM_PRESETS = {
    "SIM1": (3.0, (3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0)),
    "SIM2": (3.0, (0.85,) * 8),
    "SIM3": (2.0, (5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)),
}


@dataclass(frozen=True)
class SimSpec:
    beta: tuple
    sigma: float
    n_obs: int = 20
    rho: float = 0.5
    n_datasets: int = 50
    seed: int = 0
    quantum: float | None = None  # round y to this grid (None: keep continuous)
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.beta:
            raise DataError("beta must be non-empty")
        if not self.sigma > 0:
            raise DataError("sigma must be positive")
        if not abs(self.rho) < 1:
            raise DataError("|rho| must be < 1")
        if self.n_obs < 2 or self.n_datasets < 1:
            raise DataError("n_obs must be >= 2 and n_datasets >= 1")
        if self.quantum is not None and not self.quantum > 0:
            raise DataError("quantum must be positive")

    @classmethod
    def preset(cls, name: str, **kw) -> "SimSpec":
        try:
            sigma, beta = SIM_PRESETS[name.upper()]
        except KeyError:
            raise DataError(f"unknown simulation {name!r}; choose from {sorted(SIM_PRESETS)}") from None
        kw.setdefault("sigma", sigma)
        return cls(beta=beta, name=name.upper(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        d = dict(d)
        if "preset" in d:
            return cls.preset(d.pop("preset"), **d)
        return cls(**d)

    def covariance(self) -> np.ndarray:
        J = len(self.beta)
        i = np.arange(J)
        return self.rho ** np.abs(i[:, None] - i[None, :])


def generate_sim(spec: SimSpec) -> list[RawDataset]:
    """Draw ``n_datasets`` independent datasets; features are redrawn for each one."""
    L = np.linalg.cholesky(spec.covariance())
    beta = np.asarray(spec.beta)
    out = []
    for child in np.random.SeedSequence(spec.seed).spawn(spec.n_datasets):
        rng = np.random.default_rng(child)
        X = rng.standard_normal((spec.n_obs, beta.size)) @ L.T
        y = X @ beta + spec.sigma * rng.standard_normal(spec.n_obs)
        if spec.quantum is not None:
            y = spec.quantum * np.rint(y / spec.quantum)
        out.append(RawDataset(X.T, y))
    return out


def split(ds: RawDataset, train_fraction: float = 2 / 3, seed: int = 0):
    """Seeded random partition into ``ceil(f N)`` training rows and the rest."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must be in (0, 1)")
    n = ds.n_obs
    n_train = math.ceil(train_fraction * n - 1e-9)
    if n_train < 2 or n - n_train < 2:
        raise DataError(f"too few rows ({n}) to split")
    perm = np.random.default_rng(seed).permutation(n)
    return ds.take(np.sort(perm[:n_train])), ds.take(np.sort(perm[n_train:]))
