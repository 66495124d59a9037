"""Loss-less bit-stream format for a quantized target given its features.

Layout (little-endian header, then a bit payload padded with zeros to a byte)::

    "CLR1" | u32 version | u64 N | u64 K | f64 delta_y | f64 offset
    alpha(theta_1, delta_1) ... alpha(theta_K, delta_K) | U(spiral rank of residual)

The decoder needs the same K x N feature matrix as the encoder.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .data import DataError, quantize
from .intcode import BitReader, DecodeError, decode_u, encode_u, length_u
from .ratcode import alpha_encode, read_alpha
from .sphere import DEFAULT_BUDGET, spiral_rank, spiral_unrank

MAGIC = b"CLR1"
VERSION = 1
_HEADER = struct.Struct("<4sIQQdd")
HEADER_BITS = 8 * _HEADER.size


class FormatError(DataError):
    pass


@dataclass(frozen=True)
class StreamHeader:
    n_obs: int
    n_features: int
    delta_y: float
    offset: float
    version: int = VERSION

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, self.version, self.n_obs, self.n_features, self.delta_y, self.offset)

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < _HEADER.size:
            raise FormatError("file shorter than header")
        magic, version, n, k, dy, off = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        return cls(n, k, dy, off, version)


@dataclass(frozen=True)
class Decoded:
    header: StreamHeader
    theta_sharp: np.ndarray
    quantized: np.ndarray  # integer grid indices of the target

    @property
    def target(self) -> np.ndarray:
        return self.header.offset + self.header.delta_y * self.quantized.astype(float)


def _predicted_index(X: np.ndarray, theta_sharp, delta_y: float, offset: float) -> np.ndarray:
    return quantize(X.T @ np.asarray(theta_sharp, float), delta_y, offset)


def _to_bytes(bits: str) -> bytes:
    pad = (-len(bits)) % 8
    bits += "0" * pad
    return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""


def _to_bits(data: bytes) -> str:
    return "".join(format(b, "08b") for b in data)


def encode_payload(X, y, theta, delta, delta_y: float, offset: float,
                   budget: int = DEFAULT_BUDGET) -> str:
    """Payload bits (no header, no padding)."""
    X = np.atleast_2d(np.asarray(X, float))
    codes = [alpha_encode(float(t), float(d)) for t, d in zip(theta, delta)]
    theta_sharp = np.array([c.value for c in codes])
    resid = quantize(y, delta_y, offset) - _predicted_index(X, theta_sharp, delta_y, offset)
    rank = spiral_rank(resid.tolist(), budget)
    return "".join(c.codeword.bits for c in codes) + encode_u(rank).bits


def encode(X, y, theta, delta, delta_y: float, offset: float,
           budget: int = DEFAULT_BUDGET) -> bytes:
    """Full file contents.  Raises :class:`~clreg.sphere.CapacityError` when the
    residual is beyond exact-count capacity."""
    X = np.atleast_2d(np.asarray(X, float))
    if len(theta) != X.shape[0] or len(delta) != X.shape[0]:
        raise DataError("theta/delta length does not match the feature count")
    head = StreamHeader(X.shape[1], X.shape[0], float(delta_y), float(offset)).pack()
    return head + _to_bytes(encode_payload(X, y, theta, delta, delta_y, offset, budget))


def expected_size(payload_bits: int) -> int:
    return -(-(HEADER_BITS + payload_bits) // 8)


def decode(data: bytes, X, budget: int = DEFAULT_BUDGET) -> Decoded:
    head = StreamHeader.unpack(data)
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape != (head.n_features, head.n_obs):
        raise FormatError(f"stream is for a {head.n_features} x {head.n_obs} design, got {X.shape}")
    reader = BitReader(_to_bits(data[_HEADER.size:]))
    try:
        theta_sharp = np.array([read_alpha(reader).value for _ in range(head.n_features)], dtype=float)
        rank, _ = decode_u(reader)
    except DecodeError as exc:
        raise FormatError(f"corrupt payload: {exc}") from exc
    if rank < 0:
        raise FormatError("negative residual rank")
    if reader.remaining >= 8 or set(reader.bits[reader.pos:]) - {"0"}:
        raise FormatError("unexpected trailing data")
    resid = np.array(spiral_unrank(head.n_obs, rank, budget), dtype=np.int64)
    q = _predicted_index(X, theta_sharp, head.delta_y, head.offset) + resid
    return Decoded(head, theta_sharp, q)


def naive_bits(y, delta_y: float, offset: float) -> int:
    """Baseline: every quantized target value coded on its own with U."""
    return int(sum(length_u(int(v)) for v in quantize(y, delta_y, offset)))
