"""Description-length objective for linear regression.

The design is stored features-by-observations (``X`` is K x N) so that the
model predicts ``X.T @ theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ratcode import DEFAULT_CONSTANTS, AlphaApproxConstants, alpha_encode, alpha_len, alpha_smooth
from .sphere import DEFAULT_BUDGET, LOG2E, h_bar, spherical_code_len


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    delta_y: float
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[1] != y.shape[0]:
            raise DimensionError(f"X has {X.shape[1]} observations, y has {y.shape[0]}")
        if not self.delta_y > 0:
            raise ValueError("delta_y must be positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta_y", float(self.delta_y))
        object.__setattr__(self, "gram", X @ X.T)

    @property
    def n_features(self) -> int:
        return self.X.shape[0]

    @property
    def n_obs(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "DesignMatrix":
        return DesignMatrix(self.X[np.asarray(rows, dtype=int)], self.y, self.delta_y)


@dataclass(frozen=True)
class ObjectiveEval:
    param_bits: float
    residual_bits: float
    total_bits: float
    s_sq: float
    penalty: float


def _vec(v, k: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != k:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {k}")
    return v


def residual_norm_sq(dm: DesignMatrix, theta) -> float:
    theta = _vec(theta, dm.n_features, "theta")
    e = dm.y - dm.X.T @ theta
    return float(e @ e)


def expected_perturbation(dm: DesignMatrix, delta) -> float:
    """Expected growth of the squared residual when each parameter is moved
    uniformly within its precision interval: (1/3) sum_i gram_ii delta_i^2."""
    delta = _vec(delta, dm.n_features, "delta")
    return float(np.diag(dm.gram) @ (delta * delta)) / 3.0


def residual_floor(dm: DesignMatrix) -> float:
    """Residuals below half a quantum carry no information."""
    return 0.25 * dm.delta_y ** 2 * dm.n_obs


def clr_objective(dm: DesignMatrix, theta, delta,
                  constants: AlphaApproxConstants = DEFAULT_CONSTANTS) -> ObjectiveEval:
    k = dm.n_features
    theta = _vec(theta, k, "theta")
    delta = _vec(delta, k, "delta")
    if np.any(delta <= 0):
        raise ValueError("delta must be positive")
    param_bits = float(np.sum(alpha_smooth(theta, delta, constants))) if k else 0.0
    s_sq = residual_norm_sq(dm, theta)
    penalty = expected_perturbation(dm, delta)
    residual_bits = h_bar(dm.n_obs, max(s_sq + penalty, residual_floor(dm)), dm.delta_y)
    return ObjectiveEval(param_bits, residual_bits, param_bits + residual_bits, s_sq, penalty)


class ObjectiveFunction:
    """Fast scalar objective over ``[theta, log(delta)]`` for the optimizer."""

    def __init__(self, dm: DesignMatrix, constants: AlphaApproxConstants = DEFAULT_CONSTANTS):
        self.dm = dm
        self.constants = constants
        self.k = dm.n_features
        self._Xt = np.ascontiguousarray(dm.X.T)
        self._diag = np.diag(dm.gram).copy()
        self._floor = residual_floor(dm)
        n = dm.n_obs
        self._h_const = (0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0)) * LOG2E \
            - n * math.log2(dm.delta_y)
        self._half_n = 0.5 * n
        self.n_evals = 0

    def __call__(self, v) -> float:
        self.n_evals += 1
        k = self.k
        theta = v[:k]
        delta = np.exp(v[k:])
        c = self.constants
        param = float(np.sum(alpha_smooth(theta, delta, c)))
        e = self.dm.y - self._Xt @ theta
        s = float(e @ e) + float(self._diag @ (delta * delta)) / 3.0
        s = max(s, self._floor)
        return param + self._h_const + self._half_n * math.log2(s)


# ---------------------------------------------------------------------------
# Exact (loss-less) description length
# ---------------------------------------------------------------------------

def sharpen(theta, delta) -> np.ndarray:
    """Decoded values of the alpha codes for each (theta_i, delta_i)."""
    return np.array([alpha_encode(float(t), float(d)).value for t, d in zip(theta, delta)], dtype=float)


def quantized_residual(dm: DesignMatrix, theta_sharp, offset: float = 0.0) -> np.ndarray:
    """Integer residual of the quantized target against the rounded prediction."""
    target = np.rint((dm.y - offset) / dm.delta_y)
    pred = np.rint((dm.X.T @ np.asarray(theta_sharp, float) - offset) / dm.delta_y)
    return (target - pred).astype(np.int64)


def exact_description_length(dm: DesignMatrix, theta, delta, offset: float = 0.0,
                             budget: int = DEFAULT_BUDGET) -> int:
    """Bits of the loss-less code: alpha codes of the parameters plus the
    spherical code of the quantized residual."""
    k = dm.n_features
    theta = _vec(theta, k, "theta")
    delta = _vec(delta, k, "delta")
    bits = alpha_len(theta, delta) if k else 0
    resid = quantized_residual(dm, sharpen(theta, delta), offset)
    return int(bits) + spherical_code_len(resid, budget)
