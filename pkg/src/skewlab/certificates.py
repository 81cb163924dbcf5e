"""JSON certificates, canonical encoding, content hashes and the on-disk cache."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

SCHEMA_VERSION = 1
VERDICTS = ("pass", "fail", "inconclusive")


def encode(obj: Any) -> Any:
    """Convert to JSON-ready data; complex numbers become [re, im] decimal strings."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_json"):
            return encode(obj.to_json())
        return encode(dataclasses.asdict(obj))
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [repr(float(obj.real)), repr(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def decode_complex(pair) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def canonical_json(obj: Any) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def content_hash(obj: Any) -> str:
    text = json.dumps(encode(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


@dataclass
class ProbeCertificate:
    """Outcome of one probe run.

    ``runtime`` is kept in memory only; it is excluded from the serialized
    form so that certificates are reproducible byte for byte.
    """

    kind: str
    inputs: dict
    measured: dict
    verdict: str
    runtime: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "kind": self.kind,
            "inputs": encode(self.inputs),
            "input_hash": content_hash(self.inputs),
            "measured": encode(self.measured),
            "verdict": self.verdict,
        }

    def dumps(self) -> str:
        return canonical_json(self.to_json())

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 2, "inconclusive": 3}[self.verdict]


def cache_dir() -> Path:
    root = os.environ.get("SKEWLAB_CACHE")
    if root:
        return Path(root)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "skewlab"


def cache_path(kind: str, key: str) -> Path:
    return cache_dir() / kind / f"{key}.json"


def cache_load(kind: str, key: str) -> dict | None:
    """Return the cached document or None when missing or corrupted."""
    path = cache_path(kind, key)
    if not path.exists():
        return None
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if not isinstance(doc, dict) or doc.get("cache_key") != key or doc.get("schema") != SCHEMA_VERSION:
        return None
    return doc


def cache_store(kind: str, key: str, doc: dict) -> Path:
    doc = dict(doc)
    doc["cache_key"] = key
    doc["schema"] = SCHEMA_VERSION
    path = cache_path(kind, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(canonical_json(doc))
    tmp.replace(path)
    return path


def cached(kind: str, config: dict, build: Callable[[], dict]) -> tuple[dict, Path]:
    """Load ``kind`` keyed by the hash of ``config``, rebuilding when absent or corrupt."""
    key = content_hash(config)
    doc = cache_load(kind, key)
    if doc is None:
        doc = build()
        cache_store(kind, key, doc)
        doc = cache_load(kind, key)
    return doc, cache_path(kind, key)
