"""Result records, seeding and the on-disk formats (CSV + JSON sidecar)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

__version__ = "0.1.0"

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Per-task seed: splitmix64(splitmix64(master) xor index).

    Identical (master, index) pairs give identical streams regardless of which
    worker runs the task.
    """
    if not 0 <= master <= MASK64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return splitmix64(splitmix64(master) ^ (index & MASK64))


def rng_for(master: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, index))


@dataclass
class DiagnosticsReport:
    """One estimator result: estimate, error bar, sample counts and seed."""

    name: str
    estimate: float
    error: float
    n_samples: int
    seed: int | None = None
    flags: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


def to_jsonable(obj):
    """Plain-JSON view of dataclasses, numpy scalars/arrays and non-finite floats."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def write_csv(path, header: list[str], columns: list[np.ndarray], index: bool = False) -> int:
    """RFC-4180 CSV with shortest round-trip float text; returns the row count."""
    path = Path(path)
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0]) if cols else 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow((["n"] if index else []) + header)
        text = [c.tolist() for c in cols]
        if index:
            w.writerows(zip(range(n), *[map(repr, t) for t in text]))
        else:
            w.writerows(zip(*[map(repr, t) for t in text]))
    return n


def read_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {h: data[:, j] for j, h in enumerate(header)}


def write_sidecar(path, envelope: dict) -> Path:
    side = Path(str(path) + ".json")
    side.write_text(dumps(envelope) + "\n")
    return side
