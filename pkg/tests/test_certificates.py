import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skewlab.certificates import (
    ProbeCertificate,
    cache_path,
    cached,
    canonical_json,
    content_hash,
    decode_complex,
    encode,
)
from skewlab.config import RunConfig, parse_complex, parse_grid
from skewlab.outputs import read_pgm, read_raw, write_pgm, write_raw


@given(st.complex_numbers(allow_nan=False, allow_infinity=False))
def test_complex_round_trip_is_exact(z):
    assert decode_complex(encode(z)) == z


def test_canonical_json_sorted_and_stable():
    a = canonical_json({"b": 1, "a": [1 + 2j, np.float64(0.5)]})
    b = canonical_json({"a": [1 + 2j, 0.5], "b": 1})
    assert a == b and json.loads(a)["a"][0] == ["1.0", "2.0"]


def test_encode_rejects_unknown_objects():
    with pytest.raises(TypeError):
        encode(object())


def test_runtime_not_serialized():
    a = ProbeCertificate("x", {"k": 1}, {"v": 2.0}, "pass", runtime=1.0)
    b = ProbeCertificate("x", {"k": 1}, {"v": 2.0}, "pass", runtime=5.0)
    assert a.dumps() == b.dumps()
    assert "runtime" not in a.dumps()


def test_exit_codes():
    codes = {v: ProbeCertificate("x", {}, {}, v).exit_code for v in ("pass", "fail", "inconclusive")}
    assert codes == {"pass": 0, "fail": 2, "inconclusive": 3}
    with pytest.raises(ValueError):
        ProbeCertificate("x", {}, {}, "maybe")


def test_input_hash_tracks_inputs():
    a = ProbeCertificate("x", {"k": 1}, {}, "pass").to_json()
    b = ProbeCertificate("x", {"k": 2}, {}, "pass").to_json()
    assert a["input_hash"] != b["input_hash"]


def test_corrupted_cache_is_rebuilt(tmp_path, monkeypatch):
    monkeypatch.setenv("SKEWLAB_CACHE", str(tmp_path))
    calls = []

    def build():
        calls.append(1)
        return {"value": 42}

    doc, path = cached("demo", {"x": 1}, build)
    assert doc["value"] == 42 and len(calls) == 1
    cached("demo", {"x": 1}, build)
    assert len(calls) == 1
    path.write_text("{ not json")
    doc, _ = cached("demo", {"x": 1}, build)
    assert doc["value"] == 42 and len(calls) == 2
    assert path == cache_path("demo", content_hash({"x": 1}))


def test_pgm_round_trip(tmp_path):
    img = (np.arange(60).reshape(6, 10) * 4).astype(np.uint8)
    path = write_pgm(tmp_path / "a.pgm", img, {"z": 1j})
    back, meta = read_pgm(path)
    assert np.array_equal(back, img) and meta["z"] == ["0.0", "1.0"]
    assert path.read_bytes().startswith(b"P5\n# ")


def test_raw_round_trip(tmp_path):
    arr = np.linspace(0, 1, 12).reshape(3, 4)
    path, side = write_raw(tmp_path / "p.f32", arr, {"note": "x"})
    back, meta = read_raw(path)
    assert np.array_equal(back, arr.astype(np.float32)) and meta["shape"] == [3, 4]
    assert path.stat().st_size == 48


def test_config_hash_ignores_output_directory():
    assert RunConfig(out="a").hash == RunConfig(out="b").hash
    assert RunConfig(seed=1).hash != RunConfig(seed=2).hash


def test_config_validation():
    with pytest.raises(ValueError, match="d >= 3"):
        RunConfig(d=2)
    assert parse_grid("64x32") == (64, 32)
    assert parse_complex("1.5-2i") == 1.5 - 2j
    with pytest.raises(ValueError):
        parse_grid("64by32")
