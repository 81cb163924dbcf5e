"""Run configuration shared by the command line and the acceptance runner."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

from .certificates import content_hash
from .family import GOLDEN


@dataclass(frozen=True)
class RunConfig:
    d: int = 3
    c: complex | None = None
    beta: complex = 1.0
    theta: float = GOLDEN
    nradius: float = 0.05
    grid: tuple[int, int] = (512, 512)
    nmax: int = 4096
    tol: float = 1e-12
    seed: int = 0
    probes: tuple[str, ...] = ()
    out: str = "skewlab-out"
    quick: bool = False
    unchecked: bool = False

    def __post_init__(self) -> None:
        if self.d < 3:
            raise ValueError("d >= 3 required: the construction needs a free critical point besides 0")
        if self.nradius <= 0:
            raise ValueError("nradius must be positive")
        if min(self.grid) < 8:
            raise ValueError("grid must be at least 8x8")

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["grid"] = list(self.grid)
        doc["probes"] = list(self.probes)
        doc["beta"] = complex(self.beta)
        if self.c is not None:
            doc["c"] = complex(self.c)
        # the output location does not influence any result
        doc.pop("out")
        return doc

    @property
    def hash(self) -> str:
        return content_hash(self.to_json())

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ValueError(f"grid must look like 512x512, got {text!r}") from None


def parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))
