"""Data containers, grid arithmetic, dataset splitting, and long-format CSV I/O.

Subjects are stored as irregular (time, value) observation vectors on the
domain [0, 1].  All containers are immutable after construction and safe to
share across parallel workers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    InsufficientDataError,
    ParseError,
    SchemaError,
)

__all__ = [
    "SubjectRecord",
    "FunctionalDataset",
    "EvaluationGrid",
    "SplitPair",
    "ingest_long_csv",
    "write_long_csv",
    "split_dataset",
    "riemann_inner",
]


def _frozen(a) -> np.ndarray:
    out = np.asarray(a, dtype=np.float64).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SubjectRecord:
    """One subject's observations: sorted times in [0, 1] and matching values."""

    id: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.times.ndim != 1 or self.values.ndim != 1:
            raise DimensionError(f"subject {self.id!r}: times and values must be 1-D")
        if len(self.times) != len(self.values) or len(self.times) == 0:
            raise DimensionError(
                f"subject {self.id!r}: times and values must have equal, positive length"
            )
        if np.any(self.times < 0.0) or np.any(self.times > 1.0):
            raise DomainError(f"subject {self.id!r}: observation times must lie in [0, 1]")
        if np.any(np.diff(self.times) < 0.0):
            raise DomainError(f"subject {self.id!r}: times must be sorted ascending")

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class FunctionalDataset:
    """A collection of subjects with unique ids."""

    subjects: tuple[SubjectRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        ids = [s.id for s in self.subjects]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DomainError(f"duplicate subject ids: {dup}")

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    @property
    def n_total(self) -> int:
        return sum(len(s) for s in self.subjects)

    def pooled(self) -> tuple[np.ndarray, np.ndarray]:
        """All observations concatenated as (times, values)."""
        if not self.subjects:
            return np.empty(0), np.empty(0)
        t = np.concatenate([s.times for s in self.subjects])
        y = np.concatenate([s.values for s in self.subjects])
        return t, y

    def common_times(self) -> np.ndarray | None:
        """The shared time vector if all subjects have identical times, else None."""
        if not self.subjects:
            return None
        t0 = self.subjects[0].times
        for s in self.subjects[1:]:
            if len(s.times) != len(t0) or not np.array_equal(s.times, t0):
                return None
        return t0


@dataclass(frozen=True)
class EvaluationGrid:
    """Equally spaced points t_1 < ... < t_m with t_1 = 0 and t_m = 1."""

    points: np.ndarray
    delta: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        p = self.points
        if p.ndim != 1 or len(p) < 2:
            raise DimensionError("grid needs at least two points")
        d = (p[-1] - p[0]) / (len(p) - 1)
        object.__setattr__(self, "delta", float(d))
        gaps = np.diff(p)
        if np.any(np.abs(gaps - d) > 1e-12 * max(abs(d), 1.0)):
            raise DimensionError("grid points are not equally spaced")
        if abs(p[0]) > 1e-12 or abs(p[-1] - 1.0) > 1e-12:
            raise DomainError("grid must span [0, 1] exactly")

    @classmethod
    def uniform(cls, m: int) -> "EvaluationGrid":
        if m < 2:
            raise DimensionError("grid needs at least two points")
        return cls(np.linspace(0.0, 1.0, m))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SplitPair:
    """Disjoint halves of a dataset; `first` holds ceil(n/2) subjects."""

    first: FunctionalDataset
    second: FunctionalDataset
    seed: int


def ingest_long_csv(path, schema=("subject", "time", "value"), rescale: bool = False) -> FunctionalDataset:
    """Read a long-format CSV (one observation per row) into a dataset.

    `schema` names the (subject id, time, value) columns.  Rows are grouped
    by subject and sorted by time within each subject.  Times outside [0, 1]
    raise unless `rescale` requests min-max normalization of the time axis.
    """
    sub_col, time_col, val_col = schema
    by_subject: dict[str, list[tuple[float, float]]] = {}
    order: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        for col in schema:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column {col!r} (header has {reader.fieldnames})")
        for rownum, row in enumerate(reader, start=2):
            sid = row[sub_col]
            try:
                t = float(row[time_col])
                y = float(row[val_col])
            except (TypeError, ValueError):
                raise ParseError(
                    f"{path}: row {rownum}: non-numeric cell "
                    f"(time={row[time_col]!r}, value={row[val_col]!r})"
                ) from None
            if not math.isfinite(t) or not math.isfinite(y):
                raise ParseError(f"{path}: row {rownum}: non-finite cell")
            if sid not in by_subject:
                by_subject[sid] = []
                order.append(sid)
            by_subject[sid].append((rownum, t, y))
    if not order:
        raise SchemaError(f"{path}: no data rows")

    all_rows = [r for rows in by_subject.values() for r in rows]
    tmin = min(r[1] for r in all_rows)
    tmax = max(r[1] for r in all_rows)
    if rescale:
        span = tmax - tmin
        if span <= 0.0:
            raise DomainError(f"{path}: cannot rescale, all times equal {tmin}")
        shift, scale = tmin, span
    else:
        for rows in by_subject.values():
            for rownum, t, _ in rows:
                if t < 0.0 or t > 1.0:
                    raise DomainError(
                        f"{path}: row {rownum}: time {t} outside [0, 1]; "
                        "pass the min-max rescale option to normalize"
                    )
        shift, scale = 0.0, 1.0

    subjects = []
    for sid in order:
        rows = sorted(by_subject[sid], key=lambda r: (r[1], r[0]))
        times = np.array([(t - shift) / scale for _, t, _ in rows])
        values = np.array([y for _, _, y in rows])
        subjects.append(SubjectRecord(sid, times, values))
    return FunctionalDataset(tuple(subjects))


def write_long_csv(data: FunctionalDataset, path, schema=("subject", "time", "value")) -> None:
    """Write a dataset back to long format with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema)
        for s in data.subjects:
            for t, y in zip(s.times, s.values):
                writer.writerow([s.id, format(t, ".17g"), format(y, ".17g")])


def split_dataset(data: FunctionalDataset, seed: int) -> SplitPair:
    """Randomly partition subjects into halves of sizes (ceil(n/2), floor(n/2)).

    The permutation is drawn from a counter-based generator keyed by `seed`,
    so the same (data, seed) always yields the same split.
    """
    n = data.n_subjects
    if n < 4:
        raise InsufficientDataError(f"need at least 4 subjects to split, got {n}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    perm = rng.permutation(n)
    k = (n + 1) // 2
    first = FunctionalDataset(tuple(data.subjects[i] for i in perm[:k]))
    second = FunctionalDataset(tuple(data.subjects[i] for i in perm[k:]))
    return SplitPair(first=first, second=second, seed=int(seed))


def riemann_inner(f, g, delta: float) -> float:
    """Riemann inner product delta * sum_i f(t_i) g(t_i) on a shared grid."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape or f.ndim != 1:
        raise DimensionError(f"length mismatch: {f.shape} vs {g.shape}")
    return float(delta * np.dot(f, g))
