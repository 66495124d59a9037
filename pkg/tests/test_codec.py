import numpy as np
import pytest
from hypothesis import given, strategies as st

from clreg import codec
from clreg.codec import FormatError, StreamHeader
from clreg.data import FeatureProductSpec, SimSpec, estimate_delta_y, expand_features, generate_sim
from clreg.objective import DesignMatrix, exact_description_length
from clreg.optimize import fit_clr
from clreg.sphere import CapacityError


def _fit_encode(ds, spec=FeatureProductSpec(include_bias=True)):
    X, _, bias = expand_features(ds, spec)
    y = ds.target
    dy, off = estimate_delta_y(y), float(y.min())
    m = fit_clr(DesignMatrix(X, y, dy), exempt=() if bias is None else (bias,), offset=off)
    data = codec.encode(X, y, m.full_theta(), m.full_delta(), dy, off)
    return X, y, dy, off, m, data


def test_header_layout():
    h = StreamHeader(20, 9, 0.5, -3.25)
    raw = h.pack()
    assert raw[:4] == b"CLR1" and len(raw) == 40
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:16], "little") == 20
    assert int.from_bytes(raw[16:24], "little") == 9
    assert np.frombuffer(raw[24:40], "<f8").tolist() == [0.5, -3.25]
    assert StreamHeader.unpack(raw) == h


def test_round_trip_and_size():
    ds = generate_sim(SimSpec.preset("SIM1", n_datasets=1, quantum=0.1, seed=1))[0]
    X, y, dy, off, m, data = _fit_encode(ds)
    assert len(data) == codec.expected_size(m.exact_bits)
    dec = codec.decode(data, X)
    assert np.array_equal(dec.quantized, codec.quantize(y, dy, off))
    assert np.allclose(dec.target, y, atol=1e-9)
    assert np.array_equal(dec.theta_sharp, m.full_theta(sharp=True))


def test_payload_length_is_exact_description_length():
    ds = generate_sim(SimSpec.preset("SIM3", n_datasets=1, quantum=0.25, seed=2))[0]
    X, y, dy, off, m, _ = _fit_encode(ds)
    bits = codec.encode_payload(X, y, m.full_theta(), m.full_delta(), dy, off)
    assert len(bits) == exact_description_length(DesignMatrix(X, y, dy), m.full_theta(), m.full_delta(), off)


def test_bias_only_model():
    rng = np.random.default_rng(3)
    X = np.ones((1, 10))
    y = np.round(rng.standard_normal(10), 1)
    data = codec.encode(X, y, [0.0], [1.0], 0.1, float(y.min()))
    assert np.array_equal(codec.decode(data, X).quantized, codec.quantize(y, 0.1, y.min()))


@given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=1, max_value=4),
       st.integers(min_value=2, max_value=15))
def test_random_models_round_trip(seed, K, N):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((K, N))
    y = np.round(rng.standard_normal(N) * 20) * 0.25
    theta = rng.standard_normal(K)
    delta = np.exp(rng.uniform(-5, 1, K))
    dy, off = 0.25, float(y.min())
    data = codec.encode(X, y, theta, delta, dy, off)
    payload = codec.encode_payload(X, y, theta, delta, dy, off)
    assert len(data) == codec.expected_size(len(payload))
    assert np.array_equal(codec.decode(data, X).quantized, codec.quantize(y, dy, off))


def test_compresses_better_than_naive():
    for ds in generate_sim(SimSpec.preset("SIM1", n_datasets=5, quantum=0.1, seed=4)):
        X, y, dy, off, m, data = _fit_encode(ds)
        assert m.exact_bits <= codec.naive_bits(y, dy, off)


def test_corrupt_streams():
    ds = generate_sim(SimSpec.preset("SIM1", n_datasets=1, quantum=0.5))[0]
    X, y, dy, off, m, data = _fit_encode(ds)
    with pytest.raises(FormatError):
        codec.decode(b"XXXX" + data[4:], X)
    with pytest.raises(FormatError):
        codec.decode(data[:20], X)
    with pytest.raises(FormatError):
        codec.decode(data, X[:, :-1])
    with pytest.raises(FormatError):
        codec.decode(data + b"\xff", X)
    with pytest.raises(FormatError):
        codec.decode(data[:41], X)
    bad_version = data[:4] + (7).to_bytes(4, "little") + data[8:]
    with pytest.raises(FormatError):
        codec.decode(bad_version, X)


def test_capacity_error():
    X = np.ones((1, 10))
    y = np.arange(10.0) * 1000
    with pytest.raises(CapacityError):
        codec.encode(X, y, [0.0], [1.0], 1.0, 0.0, budget=1000)


def test_length_mismatch():
    with pytest.raises(ValueError):
        codec.encode(np.ones((2, 3)), np.ones(3), [1.0], [1.0], 1.0, 0.0)
