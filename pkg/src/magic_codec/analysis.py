"""Compression statistics and the computation/transmission energy cutoff."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

CSV_COLUMNS = ("file", "bytes", "bpp")


class NoCutoffError(ValueError):
    """The codec output is not smaller than the competitor's, so no cutoff exists."""


@dataclass(frozen=True)
class DatasetStats:
    count: int
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def dataset_stats(values) -> DatasetStats:
    """Mean, population std and linearly interpolated quartiles of BPP values."""
    v = np.asarray(list(values), dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return DatasetStats(count=int(v.size), mean=float(v.mean()), std=float(v.std()),
                        min=float(q[0]), q1=float(q[1]), median=float(q[2]),
                        q3=float(q[3]), max=float(q[4]))


def bpp(n_bits: int, rows: int, cols: int) -> float:
    return n_bits / (rows * cols)


@dataclass(frozen=True)
class CtInputs:
    e1: float               # mean encode seconds, this codec
    e2: float               # mean encode seconds, competitor
    i1: float               # mean encoded bytes, this codec
    i2: float               # mean encoded bytes, competitor
    f: float = 3.7e9        # CPU clock, Hz

    def __post_init__(self):
        if min(self.e1, self.e2, self.i1, self.i2, self.f) <= 0:
            raise ValueError("all inputs must be positive")


def ct_cutoff(c, e2=None, i1=None, i2=None, f=3.7e9) -> float:
    """Extra clock cycles per saved byte, in millions.

    Takes a :class:`CtInputs` or the five values positionally.  A device whose
    energy cost of sending one byte exceeds this many million cycles of
    computation saves energy by using this codec.  Negative values mean the
    codec is both faster and smaller.
    """
    if not isinstance(c, CtInputs):
        c = CtInputs(c, e2, i1, i2, f)
    if c.i2 <= c.i1:
        raise NoCutoffError(f"codec output ({c.i1} B) is not smaller than the competitor's ({c.i2} B)")
    return (c.e1 - c.e2) * c.f / ((c.i2 - c.i1) * 1e6)


def write_sizes_csv(records, fh) -> None:
    """Write ``(file, bytes, bpp)`` records as CSV to an open text file."""
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS)
    for name, nbytes, b in records:
        w.writerow([name, int(nbytes), repr(float(b))])


def read_sizes_csv(fh) -> list[tuple[str, int, float]]:
    rows = list(csv.DictReader(fh))
    if rows and not set(CSV_COLUMNS) <= set(rows[0]):
        raise ValueError(f"CSV must have columns {', '.join(CSV_COLUMNS)}")
    return [(r["file"], int(r["bytes"]), float(r["bpp"])) for r in rows]
