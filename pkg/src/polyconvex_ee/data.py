"""Load-path datasets and their CSV representation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensors import det

CSV_HEADER = (
    ["path_id", "step"]
    + [f"F{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    + ["d1", "d2", "d3"]
    + [f"P{i}{j}" for i in range(1, 4) for j in range(1, 4)]
    + ["e1", "e2", "e3"]
)


@dataclass
class LoadPath:
    """One load path; arrays are stacked over the load steps."""

    path_id: str
    F: np.ndarray
    d0: np.ndarray
    P: np.ndarray
    e0: np.ndarray

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float).reshape(-1, 3, 3)
        n = len(self.F)
        self.d0 = np.asarray(self.d0, dtype=float).reshape(n, 3)
        self.P = np.asarray(self.P, dtype=float).reshape(n, 3, 3)
        self.e0 = np.asarray(self.e0, dtype=float).reshape(n, 3)

    def __len__(self) -> int:
        return len(self.F)

    @property
    def rows(self):
        return list(zip(self.F, self.d0, self.P, self.e0))


@dataclass
class Dataset:
    paths: list[LoadPath]

    def __post_init__(self):
        ids = [p.path_id for p in self.paths]
        if len(set(ids)) != len(ids):
            raise ValueError("path ids must be unique")
        for p in self.paths:
            if len(p) and np.any(det(p.F) <= 0.0):
                raise ValueError(f"path {p.path_id}: non-positive det F")

    def __len__(self) -> int:
        return sum(len(p) for p in self.paths)

    @property
    def path_ids(self) -> list[str]:
        return [p.path_id for p in self.paths]

    def stacked(self):
        """``(F, d0, P, e0, path_index)`` concatenated over all paths."""
        F = np.concatenate([p.F for p in self.paths])
        d0 = np.concatenate([p.d0 for p in self.paths])
        P = np.concatenate([p.P for p in self.paths])
        e0 = np.concatenate([p.e0 for p in self.paths])
        idx = np.concatenate([np.full(len(p), k) for k, p in enumerate(self.paths)])
        return F, d0, P, e0, idx

    def subset(self, indices) -> Dataset:
        return Dataset([self.paths[i] for i in indices])

    def __add__(self, other: Dataset) -> Dataset:
        return Dataset(self.paths + other.paths)


def _fmt(x: float) -> str:
    return "%.17g" % x


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in ds.paths:
        for k in range(len(p)):
            w.writerow([p.path_id, k] + [_fmt(v) for v in p.F[k].ravel()] + [_fmt(v) for v in p.d0[k]]
                       + [_fmt(v) for v in p.P[k].ravel()] + [_fmt(v) for v in p.e0[k]])
    return buf.getvalue()


def write_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(ds), encoding="utf-8", newline="")


def read_dataset(path) -> Dataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header")
        groups: dict[str, list[list[float]]] = {}
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"{path}: malformed row {row[:2]}")
            groups.setdefault(row[0], []).append([float(v) for v in row[2:]])
    paths = []
    for pid, rows in groups.items():
        a = np.array(rows)
        paths.append(LoadPath(pid, a[:, 0:9], a[:, 9:12], a[:, 12:21], a[:, 21:24]))
    return Dataset(paths)
