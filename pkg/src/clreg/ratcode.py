"""Prefix-free code for reals stored to a given precision, and its smooth length.

A value ``theta`` with precision ``delta`` is stored as a dyadic rational
``q * 2**k``.  ``k`` ranges over every exponent at or below ``floor(log2 delta)``
and ``q = round(theta / 2**k)``; the pair with the shortest ``U(q) U(k)`` wins
(ties go to the coarsest exponent).  Rounding at such a ``k`` keeps the error
at most ``2**(k-1) <= delta / 2``, and because the candidate set only grows
with ``delta`` the code length never increases with ``delta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .intcode import BitReader, Codeword, CodeError, decode_u, encode_u, length_u

_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class RationalCode:
    mantissa: int
    exponent: int
    codeword: Codeword

    @property
    def value(self) -> float:
        return math.ldexp(self.mantissa, self.exponent)

    @property
    def length(self) -> int:
        return self.codeword.length


@dataclass(frozen=True)
class AlphaApproxConstants:
    c0: float
    c1: float
    c2: float
    mean_abs_error: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "AlphaApproxConstants":
        return cls(float(d["c0"]), float(d["c1"]), float(d["c2"]), d.get("mean_abs_error"))

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "AlphaApproxConstants":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _check(theta: float, delta: float):
    if not (math.isfinite(theta) and math.isfinite(delta)):
        raise CodeError("theta and delta must be finite")
    if delta <= 0:
        raise CodeError("delta must be positive")


def _floor_log2(x: float) -> int:
    # exact for any positive double: x = m * 2**e with m in [0.5, 1)
    return math.frexp(x)[1] - 1


def _best_pair(theta: float, delta: float) -> tuple[int, int, int]:
    """Return (q, k, bits) of the shortest admissible dyadic approximation."""
    _check(theta, delta)
    k = _floor_log2(delta)
    best = None
    while True:
        q = round(math.ldexp(theta, -k))
        lq = length_u(q)
        # for every k' <= k: U(q') >= U(q), and U(k') >= U(k) once k <= 0 (else >= U(0) = 1)
        if best is not None and lq + (length_u(k) if k <= 0 else 1) >= best[2]:
            break
        bits = lq + length_u(k)
        if best is None or bits < best[2]:
            best = (q, k, bits)
        k -= 1
    return best


def alpha_encode(theta: float, delta: float) -> RationalCode:
    q, k, _ = _best_pair(float(theta), float(delta))
    return RationalCode(q, k, encode_u(q) + encode_u(k))


def read_alpha(reader: BitReader) -> RationalCode:
    start = reader.pos
    q, _ = decode_u(reader)
    k, _ = decode_u(reader)
    return RationalCode(q, k, Codeword(reader.bits[start:reader.pos]))


def alpha_decode(code) -> float:
    """Value ``q * 2**k`` carried by a :class:`RationalCode` or its bits.

    The codeword bits are decoded (not the cached mantissa/exponent) so a
    malformed code raises :class:`~clreg.intcode.DecodeError`.
    """
    bits = code.codeword.bits if isinstance(code, RationalCode) else str(code)
    reader = BitReader(bits)
    decoded = read_alpha(reader)
    if reader.remaining:
        raise CodeError("trailing bits after alpha codeword")
    if isinstance(code, RationalCode) and (decoded.mantissa, decoded.exponent) != (code.mantissa, code.exponent):
        raise CodeError("codeword does not match mantissa/exponent")
    return decoded.value


def alpha_len(theta, delta):
    """Exact alpha code length in bits; vectors give the sum over elements."""
    if np.ndim(theta) == 0 and np.ndim(delta) == 0:
        return _best_pair(float(theta), float(delta))[2]
    theta, delta = np.broadcast_arrays(np.asarray(theta, float), np.asarray(delta, float))
    return int(sum(_best_pair(t, d)[2] for t, d in zip(theta.ravel(), delta.ravel())))


def alpha_len_array(theta, delta) -> np.ndarray:
    """Elementwise exact lengths (no summation)."""
    theta, delta = np.broadcast_arrays(np.asarray(theta, float), np.asarray(delta, float))
    out = np.fromiter((_best_pair(t, d)[2] for t, d in zip(theta.ravel(), delta.ravel())),
                      dtype=float, count=theta.size)
    return out.reshape(theta.shape)


# ---------------------------------------------------------------------------
# Smooth approximation
# ---------------------------------------------------------------------------

# fit_alpha_constants() on the default 1e5-point grid
DEFAULT_CONSTANTS = AlphaApproxConstants(c0=1.50855416, c1=13.67856284, c2=0.26, mean_abs_error=0.858)


def _smooth(theta, delta, c0, c1, c2):
    a = np.maximum(np.abs(theta), _LOG_FLOOR)
    delta = np.maximum(delta, _LOG_FLOOR)
    # soft step: ~2 when |theta| >> delta, ~0 once delta exceeds |theta|
    step = erf(10.0 * (a - delta) / a) + 1.0
    # exponent cost; c2 > 1/4 keeps d(ln tau)/d(ln delta) < 1, so the
    # length is strictly decreasing in delta
    tau = c1 * np.sqrt(np.log(delta) ** 2 + c2)
    arg = np.maximum(tau * step * a + delta, _LOG_FLOOR)
    return c0 * (np.log2(arg) - np.log2(delta)) + 1.0


def alpha_smooth(theta, delta, constants: AlphaApproxConstants):
    """Smooth approximation of :func:`alpha_len` (elementwise)."""
    out = _smooth(np.asarray(theta, float), np.asarray(delta, float),
                  constants.c0, constants.c1, constants.c2)
    return float(out) if np.ndim(out) == 0 else out


def fit_grid(n_points: int = 100_000, log_theta=(-8.0, 8.0), log_ratio=(0.0, 8.0)):
    """Evenly spaced (theta, delta) grid in log2|theta| x log2(theta/delta), both signs."""
    if n_points < 8:
        raise ValueError("grid needs at least 8 points")
    if not (log_theta[1] > log_theta[0] and log_ratio[1] > log_ratio[0]):
        raise ValueError("degenerate grid ranges")
    side = int(math.ceil(math.sqrt(n_points / 2)))
    lt = np.linspace(*log_theta, side)
    lr = np.linspace(*log_ratio, side)
    LT, LR = np.meshgrid(lt, lr, indexing="ij")
    mag = np.exp2(LT).ravel()
    delta = np.exp2(LT - LR).ravel()
    theta = np.concatenate([mag, -mag])
    delta = np.concatenate([delta, delta])
    return theta, delta


def fit_alpha_constants(n_points: int = 100_000, log_theta=(-8.0, 8.0), log_ratio=(0.0, 8.0),
                        start=(1.4, 10.0, 1.0)) -> AlphaApproxConstants:
    """Least-squares fit of the smooth length constants against exact lengths."""
    theta, delta = fit_grid(n_points, log_theta, log_ratio)
    exact = alpha_len_array(theta, delta)

    def resid(c):
        return _smooth(theta, delta, *c) - exact

    best = None
    for x0 in (start, (0.8, 1.0, 2.0), (2.0, 3.0, 5.0)):
        res = least_squares(resid, np.asarray(x0, float), bounds=([0.05, 1e-3, 0.26], [20.0, 20.0, 20.0]))
        if best is None or res.cost < best.cost:
            best = res
    c = best.x
    mae = float(np.mean(np.abs(resid(c))))
    return AlphaApproxConstants(float(c[0]), float(c[1]), float(c[2]), mae)
