"""Raster emission: binary PGM for membership masks, raw float32 plus a JSON sidecar for potentials."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .certificates import canonical_json, encode


def write_pgm(path: str | Path, image: np.ndarray, meta: dict | None = None) -> Path:
    """8-bit P5 image; ``meta`` goes on a single JSON comment line of the header."""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 array")
    h, w = image.shape
    header = b"P5\n"
    if meta:
        header += b"# " + json.dumps(encode(meta), sort_keys=True, separators=(",", ":")).encode("ascii") + b"\n"
    header += f"{w} {h}\n255\n".encode("ascii")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + np.ascontiguousarray(image).tobytes())
    return path


def read_pgm(path: str | Path) -> tuple[np.ndarray, dict]:
    data = Path(path).read_bytes()
    lines = []
    meta: dict = {}
    pos = 0
    while len(lines) < 3:
        end = data.index(b"\n", pos)
        line = data[pos:end]
        pos = end + 1
        if line.startswith(b"#"):
            meta = json.loads(line[1:].decode("ascii"))
            continue
        lines.append(line)
    if lines[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = map(int, lines[1].split())
    img = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos).reshape(h, w)
    return img, meta


def write_raw(path: str | Path, array: np.ndarray, meta: dict | None = None) -> tuple[Path, Path]:
    """Little-endian float32 raster (row 0 first) and ``<path>.json`` describing it."""
    array = np.asarray(array, dtype="<f4")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(array).tobytes())
    side = path.with_name(path.name + ".json")
    doc = {"dtype": "float32", "byteorder": "little", "shape": list(array.shape), **(meta or {})}
    side.write_text(canonical_json(doc))
    return path, side


def read_raw(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    arr = np.frombuffer(path.read_bytes(), dtype="<f4").reshape(meta["shape"])
    return arr, meta
