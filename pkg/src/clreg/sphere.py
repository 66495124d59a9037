"""Spherical coding of integer residual vectors.

Integer vectors are ranked by squared norm, ties broken lexicographically, and
the rank is written with the universal signed-integer code.  Counting relies on
the number of lattice points on each shell ``{z in Z^d : |z|^2 = s}``, obtained
by dynamic programming over dimensions.

A shell table for dimensions ``0..N`` and radii ``0..S`` is held as one big
integer per dimension with every count in a fixed-width slot, so the DP step
``c_d(s) = sum_k c_{d-1}(s - k^2)`` is a handful of shift-and-add operations on
whole tables instead of a Python loop per cell.
"""

from __future__ import annotations

import bisect
import math
from functools import lru_cache

import numpy as np

try:
    import gmpy2
except ImportError:  # pragma: no cover - pure Python fallback
    gmpy2 = None

from .intcode import length_u
from .ratcode import alpha_len

DEFAULT_BUDGET = 10**8
LOG2E = 1.0 / math.log(2.0)


class CapacityError(RuntimeError):
    """Exact lattice counting would exceed the configured cell budget."""


def _check_budget(dim: int, s_max: int, budget: int):
    if dim * max(s_max, 1) > budget:
        raise CapacityError(
            f"exact count needs {dim} x {s_max} DP cells, budget is {budget}; "
            "use the smooth approximation instead")


class ShellTable:
    """Exact shell counts ``c_d(s)`` for ``d <= dim`` and ``s <= s_max``."""

    def __init__(self, dim: int, s_max: int):
        if dim < 0 or s_max < 0:
            raise ValueError("dim and s_max must be non-negative")
        self.dim = dim
        self.s_max = s_max
        r = math.isqrt(s_max)
        slot_bits = dim * math.log2(2 * r + 1) + 2
        self.slot_bytes = max(1, math.ceil(slot_bits / 8))
        width = 8 * self.slot_bytes
        self._nbytes = (s_max + 1) * self.slot_bytes
        rows = [1]
        if gmpy2 is not None:
            width_mask = (gmpy2.mpz(1) << ((s_max + 1) * width)) - 1
            theta = gmpy2.mpz(sum((1 if k == 0 else 2) << (k * k * width) for k in range(r + 1)))
            prev = gmpy2.mpz(1)
            for _ in range(dim):
                prev = (prev * theta) & width_mask
                rows.append(int(prev))
        else:
            for _ in range(dim):
                prev = rows[-1]
                acc = prev
                for k in range(1, r + 1):
                    keep = s_max + 1 - k * k
                    part = (prev & ((1 << (keep * width)) - 1)) << (k * k * width)
                    acc += part << 1  # +k and -k
                rows.append(acc)
        self._rows = [row.to_bytes(self._nbytes, "little") for row in rows]
        self._prefix = None

    def shell(self, d: int, s: int) -> int:
        if s < 0 or s > self.s_max:
            if s < 0:
                return 0
            raise IndexError("s beyond table")
        w = self.slot_bytes
        return int.from_bytes(self._rows[d][s * w:(s + 1) * w], "little")

    def prefix(self) -> list[int]:
        """Cumulative counts for the top dimension: entry s = #{|z|^2 <= s}."""
        if self._prefix is None:
            total = 0
            out = []
            for s in range(self.s_max + 1):
                total += self.shell(self.dim, s)
                out.append(total)
            self._prefix = out
        return self._prefix

    def count_le(self, s: int) -> int:
        if s < 0:
            return 0
        return self.prefix()[s]


def _table_size(s: int) -> int:
    # ladder of sizes 2**(j/4) so cached tables are shared between nearby radii
    if s <= 16:
        return 16
    j = math.ceil(4 * math.log2(s))
    size = math.ceil(2 ** (j / 4))
    while size < s:
        j += 1
        size = math.ceil(2 ** (j / 4))
    return size


@lru_cache(maxsize=8)
def _cached_table(dim: int, s_max: int) -> ShellTable:
    return ShellTable(dim, s_max)


def shell_table(dim: int, s: int, budget: int = DEFAULT_BUDGET) -> ShellTable:
    """A (cached, immutable) table covering radius squared ``s``."""
    _check_budget(dim, s, budget)
    size = _table_size(s)
    if dim * size > budget:
        size = s
    return _cached_table(dim, size)


def lattice_count(N: int, radius_sq: int, budget: int = DEFAULT_BUDGET) -> int:
    """Number of points of Z^N with squared norm at most ``radius_sq``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if radius_sq < 0:
        raise ValueError("radius_sq must be >= 0")
    return shell_table(N, int(radius_sq), budget).count_le(int(radius_sq))


def spiral_rank(vector, budget: int = DEFAULT_BUDGET) -> int:
    """Rank of an integer vector in norm-then-lexicographic order."""
    v = [int(x) for x in vector]
    if not v:
        raise ValueError("empty vector")
    N = len(v)
    s = sum(x * x for x in v)
    table = shell_table(N, s, budget)
    rank = table.count_le(s - 1)
    rem = s
    for i, vi in enumerate(v):
        d = N - i - 1
        r = math.isqrt(rem)
        for t in range(-r, vi):
            rank += table.shell(d, rem - t * t)
        rem -= vi * vi
    return rank


def spiral_unrank(N: int, rank: int, budget: int = DEFAULT_BUDGET) -> list[int]:
    """Inverse of :func:`spiral_rank`."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if rank < 0:
        raise ValueError("rank must be >= 0")
    # start from the radius whose ball volume matches the rank
    if rank > 0:
        log_unit = sphere_volume_log(N, 1.0)
        r_est = 2.0 ** ((math.log2(rank) - log_unit) / N)
        s_max = _table_size(int(r_est * r_est))
    else:
        s_max = 16
    while True:
        if N * s_max > budget:
            s_max = budget // N
            if s_max < 1:
                raise CapacityError("rank beyond exact-count capacity")
            table = shell_table(N, s_max, budget)
            if table.count_le(s_max) <= rank:
                raise CapacityError("rank beyond exact-count capacity")
            break
        table = shell_table(N, s_max, budget)
        if table.count_le(table.s_max) > rank:
            break
        s_max = _table_size(s_max + 1)
    prefix = table.prefix()
    s = bisect.bisect_right(prefix, rank)
    pos = rank - (prefix[s - 1] if s > 0 else 0)
    out = []
    rem = s
    for i in range(N):
        d = N - i - 1
        r = math.isqrt(rem)
        for t in range(-r, r + 1):
            c = table.shell(d, rem - t * t)
            if pos < c:
                out.append(t)
                rem -= t * t
                break
            pos -= c
        else:  # pragma: no cover - table inconsistency
            raise RuntimeError("unrank failed")
    return out


def spherical_code_len(residual, budget: int = DEFAULT_BUDGET) -> int:
    """Bits needed to store an integer residual vector with the spherical code."""
    return length_u(spiral_rank(residual, budget))


def sphere_volume_log(N: int, r: float) -> float:
    """log2 of the volume of the N-ball with radius r."""
    if r <= 0:
        raise ValueError("r must be positive")
    return (0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N + 1.0)) * LOG2E + N * math.log2(r)


def h_bar(N: int, s_sq, delta_y: float = 1.0, floor: float = 1e-300):
    """Smooth residual length: log2 volume of the ball of radius sqrt(s_sq)/delta_y."""
    s_sq = np.maximum(s_sq, floor)
    const = (0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N + 1.0)) * LOG2E
    out = const + 0.5 * N * np.log2(s_sq / (delta_y * delta_y))
    return float(out) if np.ndim(out) == 0 else out


def h_applied(N: int, sigma: float, n_grid: int = 241, return_argmin: bool = False):
    """Gaussian code length plus the cost of storing sigma at the best precision."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    grid = sigma * np.logspace(-6, 0, n_grid)
    costs = np.array([N * math.log2(sigma + d) + alpha_len(sigma, float(d)) for d in grid])
    i = int(np.argmin(costs))
    value = 0.5 * N * math.log2(2 * math.pi * math.e) + float(costs[i])
    if return_argmin:
        return value, float(grid[i]), i
    return value
