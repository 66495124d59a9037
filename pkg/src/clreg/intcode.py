"""Prefix-free universal codes for integers.

Two schemes are combined into one code for non-negative integers:

* ``F``: a canonical, Fibonacci-like code.  Codewords are generated by
  binary-adding one to the previous word; block sizes follow the Fibonacci
  numbers 1, 1, 2, 3, 5, ... and the last word of every block gets a trailing
  zero.  The first two words are ``0`` and ``100``.  The number of codewords of
  length ``L >= 3`` is ``fib(L - 2)`` so the full F code is complete (its Kraft
  sum is exactly one).
* ``E``: standard Elias-delta.

The F word with index 2 (``1010``) is withheld from the data alphabet and used
as an escape prefix: integers at or above :data:`SWITCH_POINT` are written as
``1010`` followed by their Elias-delta word.  The switch point is the smallest
``n`` from which the escaped code is never longer than continuing with F.

Signed integers are mapped through the zigzag ordering 0, -1, 1, -2, 2, ...
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


class CodeError(ValueError):
    """Raised for arguments outside a code's domain."""


class DecodeError(ValueError):
    """Raised when a bit stream does not start with a valid codeword."""


@dataclass(frozen=True)
class Codeword:
    bits: str

    def __post_init__(self):
        if self.bits.strip("01"):
            raise ValueError(f"codeword may only contain '0' and '1': {self.bits!r}")

    @property
    def length(self) -> int:
        return len(self.bits)

    def __len__(self):
        return len(self.bits)

    def __add__(self, other: "Codeword") -> "Codeword":
        return Codeword(self.bits + other.bits)

    def __str__(self):
        return self.bits


class BitReader:
    """Sequential reader over a string of '0'/'1' characters."""

    def __init__(self, bits: str, pos: int = 0):
        self.bits = bits
        self.pos = pos

    def read(self, n: int = 1) -> str:
        end = self.pos + n
        if end > len(self.bits):
            raise DecodeError("truncated bit stream")
        out = self.bits[self.pos:end]
        self.pos = end
        return out

    def read_bit(self) -> int:
        return int(self.read(1))

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.pos


# ---------------------------------------------------------------------------
# Canonical F code tables
# ---------------------------------------------------------------------------

ESCAPE_INDEX = 2
_MAX_LEVEL = 400  # F code lengths covered by the tables (n up to ~1e83)


def _build_f_levels(max_level: int):
    """Return (lengths, counts, first_index, first_code) per used length."""
    counts = {1: 1}
    a, b = 1, 1
    for length in range(3, max_level + 1):
        counts[length] = a
        a, b = b, a + b
    lengths, cnts, first_index, first_code = [], [], [], []
    index = 0
    code = None
    prev_len = None
    for length in sorted(counts):
        if code is None:
            code = 0
        else:
            # last code of previous level + 1, shifted to the new length
            code = (code + cnts[-1]) << (length - prev_len)
        lengths.append(length)
        cnts.append(counts[length])
        first_index.append(index)
        first_code.append(code)
        index += counts[length]
        prev_len = length
    return lengths, cnts, first_index, first_code


_F_LEN, _F_CNT, _F_FIRST_INDEX, _F_FIRST_CODE = _build_f_levels(_MAX_LEVEL)
_F_CODE_BY_LEN = {L: (c, cnt, i) for L, c, cnt, i in zip(_F_LEN, _F_FIRST_CODE, _F_CNT, _F_FIRST_INDEX)}


def _f_raw_level(index: int) -> int:
    pos = bisect.bisect_right(_F_FIRST_INDEX, index) - 1
    if pos >= len(_F_LEN) - 1 and index >= _F_FIRST_INDEX[-1] + _F_CNT[-1]:
        raise CodeError("index beyond F code tables")
    return pos


def _f_raw_len(index: int) -> int:
    return _F_LEN[_f_raw_level(index)]


def _f_raw_word(index: int) -> str:
    pos = _f_raw_level(index)
    length = _F_LEN[pos]
    value = _F_FIRST_CODE[pos] + (index - _F_FIRST_INDEX[pos])
    return format(value, f"0{length}b")


def _data_to_raw(n: int) -> int:
    return n if n < ESCAPE_INDEX else n + 1


ESCAPE = Codeword(_f_raw_word(ESCAPE_INDEX))


def elias_delta_len(n: int) -> int:
    """Length in bits of the Elias-delta word for ``n >= 1``."""
    if n < 1:
        raise CodeError("Elias-delta is defined for n >= 1")
    nbits = n.bit_length()
    return nbits + 2 * (nbits.bit_length() - 1)


def _f_data_len(n: int) -> int:
    return _f_raw_len(_data_to_raw(n))


def _find_switch_point() -> int:
    """Smallest n such that escape + E(n') <= F(n') for every n' >= n.

    Both length functions are step functions, so the predicate only needs to
    be evaluated once per segment between consecutive breakpoints.
    """
    esc = ESCAPE.length
    breaks = set()
    for first in _F_FIRST_INDEX:
        # data index d maps to raw index d (d < 2) or d + 1
        for d in (first, first - 1):
            if d >= 1:
                breaks.add(d)
    horizon = _F_FIRST_INDEX[-1] - 2
    p = 1
    while p < horizon:
        breaks.add(p)
        p <<= 1
    breaks = sorted(b for b in breaks if 1 <= b < horizon)
    switch = None
    for lo in reversed(breaks):
        if esc + elias_delta_len(lo) > _f_data_len(lo):
            break
        switch = lo
    if switch is None:
        raise RuntimeError("no switch point found within table range")
    # the segment starting at `switch` is good; predicate failed on the one before
    # it, so refine inside that previous segment
    idx = breaks.index(switch)
    lo = breaks[idx - 1] if idx > 0 else 1
    for n in range(switch - 1, lo - 1, -1):
        if esc + elias_delta_len(n) > _f_data_len(n):
            return n + 1
    return lo


SWITCH_POINT = _find_switch_point()


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------

def encode_f(n: int) -> Codeword:
    """F-scheme codeword for data symbol ``n`` (the escape word is skipped)."""
    if n < 0:
        raise CodeError("F code is defined for n >= 0")
    if n >= SWITCH_POINT:
        raise CodeError(f"n={n} is at or above the switch point {SWITCH_POINT}; use encode_un")
    return Codeword(_f_raw_word(_data_to_raw(n)))


def encode_e(n: int) -> Codeword:
    """Elias-delta codeword for ``n >= 1``."""
    if n < 1:
        raise CodeError("E code is defined for n >= 1")
    nbits = n.bit_length()
    lbits = nbits.bit_length()
    return Codeword("0" * (lbits - 1) + format(nbits, "b") + format(n, "b")[1:])


def decode_e(reader: BitReader) -> int:
    zeros = 0
    while reader.read_bit() == 0:
        zeros += 1
        if zeros > 64:
            raise DecodeError("Elias-delta length prefix too long")
    nbits = int("1" + reader.read(zeros), 2)
    return int("1" + reader.read(nbits - 1), 2)


def encode_un(n: int) -> Codeword:
    """Universal code for non-negative integers."""
    if n < 0:
        raise CodeError("U_n is defined for n >= 0")
    if n < SWITCH_POINT:
        return encode_f(n)
    return ESCAPE + encode_e(n)


@lru_cache(maxsize=4096)
def _length_un_small(n: int) -> int:
    return _f_data_len(n)


def length_un(n: int) -> int:
    """Exact length of ``encode_un(n)`` without building the bits."""
    if n < 0:
        raise CodeError("U_n is defined for n >= 0")
    if n < SWITCH_POINT:
        return _length_un_small(n) if n < 4096 else _f_data_len(n)
    return ESCAPE.length + elias_delta_len(n)


def decode_un(reader: BitReader) -> int:
    value = 0
    length = 0
    while True:
        value = (value << 1) | reader.read_bit()
        length += 1
        level = _F_CODE_BY_LEN.get(length)
        if level is not None:
            first_code, count, first_index = level
            offset = value - first_code
            if 0 <= offset < count:
                raw = first_index + offset
                break
        if length > _F_LEN[-1]:
            raise DecodeError("no F codeword matches the stream prefix")
    if raw == ESCAPE_INDEX:
        n = decode_e(reader)
        if n < SWITCH_POINT:
            raise DecodeError("escaped value below the switch point")
        return n
    n = raw if raw < ESCAPE_INDEX else raw - 1
    if n >= SWITCH_POINT:
        raise DecodeError("F codeword beyond the switch point")
    return n


def zigzag(z: int) -> int:
    return 2 * z if z >= 0 else -2 * z - 1


def unzigzag(n: int) -> int:
    return n // 2 if n % 2 == 0 else -(n + 1) // 2


def encode_u(z: int) -> Codeword:
    """Universal code for signed integers (ordering 0, -1, 1, -2, 2, ...)."""
    return encode_un(zigzag(z))


def decode_u(bits, pos: int = 0) -> tuple[int, int]:
    """Decode one signed integer; returns ``(value, bits consumed)``.

    ``bits`` may be a string, a :class:`Codeword` or a :class:`BitReader`
    (in which case the reader is advanced and ``pos`` is ignored).
    """
    if isinstance(bits, BitReader):
        start = bits.pos
        value = unzigzag(decode_un(bits))
        return value, bits.pos - start
    if isinstance(bits, Codeword):
        bits = bits.bits
    reader = BitReader(bits, pos)
    value = unzigzag(decode_un(reader))
    return value, reader.pos - pos


def length_u(z: int) -> int:
    return length_un(zigzag(z))


# ---------------------------------------------------------------------------
# Kraft sums
# ---------------------------------------------------------------------------

def length_histogram(n_max: int) -> dict[int, int]:
    """Number of integers in ``[0, n_max]`` per code length of U_n."""
    hist: dict[int, int] = {}
    f_top = min(n_max, SWITCH_POINT - 1)
    # data indices 0, 1 then raw indices 3.. (data 2..)
    for n in range(0, min(f_top, 1) + 1):
        L = _f_data_len(n)
        hist[L] = hist.get(L, 0) + 1
    if f_top >= 2:
        raw_lo, raw_hi = 3, f_top + 1
        for L, first, cnt in zip(_F_LEN, _F_FIRST_INDEX, _F_CNT):
            lo, hi = max(first, raw_lo), min(first + cnt - 1, raw_hi)
            if lo <= hi:
                hist[L] = hist.get(L, 0) + hi - lo + 1
            if first > raw_hi:
                break
    if n_max >= SWITCH_POINT:
        lo = SWITCH_POINT
        while lo <= n_max:
            hi = min((1 << lo.bit_length()) - 1, n_max)
            L = ESCAPE.length + elias_delta_len(lo)
            hist[L] = hist.get(L, 0) + hi - lo + 1
            lo = hi + 1
    return hist


def kraft_sum(n_max: int) -> Fraction:
    """Exact partial Kraft sum over ``n`` in ``[0, n_max]``."""
    return sum((Fraction(c, 1 << L) for L, c in length_histogram(n_max).items()), Fraction(0))


def _elias_delta_mass_below(a: int) -> Fraction:
    """Exact sum of 2^-E(n) for 1 <= n < a."""
    total = Fraction(0)
    lo = 1
    while lo < a:
        hi = min((1 << lo.bit_length()) - 1, a - 1)
        total += Fraction(hi - lo + 1, 1 << elias_delta_len(lo))
        lo = hi + 1
    return total


def kraft_tail(n_max: int) -> Fraction:
    """Exact value of the Kraft sum over ``n > n_max``.

    The F part is summed level by level; the escaped part uses the fact that
    Elias-delta is complete, so its mass above ``a`` is one minus the mass below.
    """
    tail = Fraction(0)
    if n_max < SWITCH_POINT - 1:
        below = kraft_sum(SWITCH_POINT - 1) - kraft_sum(n_max)
        tail += below
    start = max(n_max + 1, SWITCH_POINT)
    tail += Fraction(1, 1 << ESCAPE.length) * (1 - _elias_delta_mass_below(start))
    return tail
