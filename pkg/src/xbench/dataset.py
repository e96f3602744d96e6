"""DMU panels: CSV ingestion, validation and per-factor rescaling.

CSV layout: the first column is headed ``dmu``; input columns are headed
``in:<name>`` and output columns ``out:<name>``.  Column order fixes the
factor order.  Every value must be strictly positive.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class DmuRecord:
    id: str
    inputs: tuple[float, ...]
    outputs: tuple[float, ...]

    def __post_init__(self):
        for kind, vals in (("input", self.inputs), ("output", self.outputs)):
            for i, v in enumerate(vals):
                if not (math.isfinite(v) and v > 0):
                    raise DatasetError(f"DMU {self.id!r}: {kind} {i} must be > 0, got {v!r}")


@dataclass(frozen=True)
class Dataset:
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    records: tuple[DmuRecord, ...]

    def __post_init__(self):
        if not self.input_names or not self.output_names:
            raise DatasetError("need at least one input and one output")
        if not self.records:
            raise DatasetError("need at least one DMU")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DatasetError(f"duplicate DMU id {rec.id!r}")
            seen.add(rec.id)
            if len(rec.inputs) != self.m or len(rec.outputs) != self.s:
                raise DatasetError(f"DMU {rec.id!r}: expected {self.m} inputs and {self.s} outputs")

    @property
    def m(self) -> int:
        return len(self.input_names)

    @property
    def s(self) -> int:
        return len(self.output_names)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @property
    def factor_names(self) -> list[str]:
        return [*self.input_names, *self.output_names]

    @property
    def X(self) -> np.ndarray:
        """Inputs as an ``(n, m)`` array."""
        return np.array([r.inputs for r in self.records], dtype=float)

    @property
    def Y(self) -> np.ndarray:
        """Outputs as an ``(n, s)`` array."""
        return np.array([r.outputs for r in self.records], dtype=float)

    def index(self, dmu_id: str) -> int:
        for j, r in enumerate(self.records):
            if r.id == dmu_id:
                return j
        raise KeyError(dmu_id)

    @classmethod
    def from_arrays(cls, X, Y, ids: Sequence[str] | None = None,
                    input_names: Sequence[str] | None = None,
                    output_names: Sequence[str] | None = None) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if X.shape[0] != Y.shape[0]:
            raise DatasetError("X and Y must have the same number of rows")
        n = X.shape[0]
        ids = list(ids) if ids is not None else [f"DMU{j + 1}" for j in range(n)]
        input_names = tuple(input_names or (f"x{i + 1}" for i in range(X.shape[1])))
        output_names = tuple(output_names or (f"y{r + 1}" for r in range(Y.shape[1])))
        recs = tuple(DmuRecord(ids[j], tuple(map(float, X[j])), tuple(map(float, Y[j])))
                     for j in range(n))
        return cls(input_names, output_names, recs)


def parse_dataset(text: str) -> Dataset:
    """Parse a CSV document into a :class:`Dataset`.

    Errors name the offending line and column.
    """
    rows = [row for row in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError("empty document: missing header")
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "dmu":
        raise DatasetError("line 1: missing header; first column must be 'dmu'")
    kinds = []
    in_names, out_names = [], []
    for col, h in enumerate(header[1:], start=2):
        if h.startswith("in:") and h[3:]:
            kinds.append("in")
            in_names.append(h[3:])
        elif h.startswith("out:") and h[4:]:
            kinds.append("out")
            out_names.append(h[4:])
        else:
            raise DatasetError(f"line 1, column {col}: header {h!r} must start with 'in:' or 'out:'")
    records = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DatasetError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        dmu_id = row[0].strip()
        if not dmu_id:
            raise DatasetError(f"line {lineno}, column dmu: empty id")
        if dmu_id in seen:
            raise DatasetError(f"line {lineno}, column dmu: duplicate id {dmu_id!r}")
        seen.add(dmu_id)
        ins, outs = [], []
        for cell, kind, name in zip(row[1:], kinds, header[1:]):
            try:
                value = float(cell.strip())
            except ValueError:
                raise DatasetError(f"line {lineno}, column {name}: non-numeric value {cell!r}") from None
            if not (math.isfinite(value) and value > 0):
                raise DatasetError(f"line {lineno}, column {name}: value {cell.strip()!r} "
                                   "violates strict positivity")
            (ins if kind == "in" else outs).append(value)
        records.append(DmuRecord(dmu_id, tuple(ins), tuple(outs)))
    return Dataset(tuple(in_names), tuple(out_names), tuple(records))


def load_dataset(path: str | Path) -> Dataset:
    return parse_dataset(Path(path).read_text(encoding="utf-8"))


def serialize_dataset(d: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dmu", *(f"in:{n}" for n in d.input_names), *(f"out:{n}" for n in d.output_names)])
    for r in d.records:
        w.writerow([r.id, *(repr(v) for v in r.inputs), *(repr(v) for v in r.outputs)])
    return buf.getvalue()


def rescale(d: Dataset, factors: Sequence[float]) -> Dataset:
    """Multiply factor column ``i`` (inputs first, then outputs) by ``factors[i]``."""
    factors = [float(f) for f in factors]
    if len(factors) != d.m + d.s:
        raise DatasetError(f"expected {d.m + d.s} factors, got {len(factors)}")
    if any(not (math.isfinite(f) and f > 0) for f in factors):
        raise DatasetError("rescaling factors must be positive")
    fx, fy = factors[:d.m], factors[d.m:]
    recs = tuple(DmuRecord(r.id, tuple(v * f for v, f in zip(r.inputs, fx)),
                           tuple(v * f for v, f in zip(r.outputs, fy)))
                 for r in d.records)
    return Dataset(d.input_names, d.output_names, recs)
