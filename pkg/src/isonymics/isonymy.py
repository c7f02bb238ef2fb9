"""Isonymy, surname diversity, and isonymic distances between area cells."""

from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from isonymics.ingest import AreaCell

log = logging.getLogger(__name__)

METRICS = ("euclidean", "lasker", "nei")
_METRIC_CODES = {"euclidean": 1, "lasker": 2, "nei": 3}
_BINARY_MAGIC = b"ISNM"


def isonymy(a: AreaCell, b: AreaCell) -> float:
    """Sum of relative-frequency products over surnames present in both cells.

    Zero when the cells share no surname; for a cell with itself this equals
    sum(p^2), the reciprocal of its effective surname number.
    """
    if a.count == 0 or b.count == 0:
        raise ValueError("isonymy of an empty cell is undefined")
    small, big = (a.freq, b.freq) if len(a.freq) <= len(b.freq) else (b.freq, a.freq)
    return sum(p * big[s] for s, p in small.items() if s in big)


def alpha(a: AreaCell) -> float:
    """Effective surname number 1 / sum(p^2): m for a uniform distribution
    over m surnames, 1 for a single-surname cell."""
    if a.count == 0:
        raise ValueError("alpha of an empty cell is undefined")
    return 1.0 / sum(p * p for p in a.freq.values())


def _bhattacharyya(a: AreaCell, b: AreaCell) -> float:
    small, big = (a.freq, b.freq) if len(a.freq) <= len(b.freq) else (b.freq, a.freq)
    return sum(math.sqrt(p * big[s]) for s, p in small.items() if s in big)


def distance(a: AreaCell, b: AreaCell, metric: str) -> float:
    """Isonymic distance between two cells.

    ``euclidean``: sqrt(1 - sum(sqrt(p_i * q_i))), in [0, 1].
    ``lasker``:    -ln(I_ab).
    ``nei``:       -ln(I_ab / sqrt(I_aa * I_bb)).

    Lasker and Nei are infinite for cells with disjoint surname sets; that
    case raises and the caller decides on a cap.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if metric == "euclidean":
        return math.sqrt(max(0.0, 1.0 - _bhattacharyya(a, b)))
    i_ab = isonymy(a, b)
    if i_ab <= 0.0:
        raise ValueError(f"infinite {metric} distance: cells share no surname")
    if metric == "lasker":
        return -math.log(i_ab)
    i_aa = isonymy(a, a)
    i_bb = isonymy(b, b)
    return -math.log(i_ab / math.sqrt(i_aa * i_bb))


@dataclass
class DistanceMatrix:
    """Symmetric pairwise-distance matrix over cells, zero diagonal.

    ``n_capped`` counts infinite log-distance entries that were replaced by
    1.05 times the largest finite entry.
    """

    n: int
    metric: str
    values: np.ndarray
    labels: list[str]
    n_capped: int = 0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.n, self.n):
            raise ValueError("matrix shape does not match n")
        if len(self.labels) != self.n:
            raise ValueError("labels do not match n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["cell"] + self.labels)
            for label, row in zip(self.labels, self.values):
                writer.writerow([label] + [repr(v) for v in row])

    def save_binary(self, path: str | Path) -> None:
        """Row-major little-endian doubles behind a 16-byte header."""
        header = struct.pack("<4sIII", _BINARY_MAGIC, self.n, _METRIC_CODES[self.metric], 0)
        with open(path, "wb") as handle:
            handle.write(header)
            handle.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load_binary(cls, path: str | Path, labels: list[str] | None = None) -> "DistanceMatrix":
        raw = Path(path).read_bytes()
        magic, n, code, _ = struct.unpack_from("<4sIII", raw)
        if magic != _BINARY_MAGIC:
            raise ValueError("not a distance-matrix file")
        metric = {v: k for k, v in _METRIC_CODES.items()}[code]
        values = np.frombuffer(raw, dtype="<f8", offset=16).reshape(n, n).copy()
        if labels is None:
            labels = [str(i) for i in range(n)]
        return cls(n=n, metric=metric, values=values, labels=labels)


def _frequency_matrix(cells: Sequence[AreaCell]) -> sp.csr_matrix:
    vocab: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, cell in enumerate(cells):
        for surname, p in cell.freq.items():
            rows.append(i)
            cols.append(vocab.setdefault(surname, len(vocab)))
            vals.append(p)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(cells), len(vocab)))


def distance_matrix(cells: Sequence[AreaCell], metric: str) -> DistanceMatrix:
    """Pairwise distances between all cells under one metric.

    Infinite Lasker/Nei entries (disjoint surname sets) are capped at 1.05
    times the largest finite off-diagonal entry and counted in ``n_capped``.
    The diagonal is exactly zero for every metric.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if len(cells) < 2:
        raise ValueError("need at least two cells")
    n = len(cells)
    freq = _frequency_matrix(cells)

    if metric == "euclidean":
        coef = np.asarray((freq.sqrt() @ freq.sqrt().T).todense())
        values = np.sqrt(np.clip(1.0 - coef, 0.0, None))
        n_capped = 0
    else:
        iso = np.asarray((freq @ freq.T).todense())
        if metric == "nei":
            self_iso = iso.diagonal().copy()
            norm = np.sqrt(np.outer(self_iso, self_iso))
        else:
            norm = 1.0
        with np.errstate(divide="ignore"):
            values = -np.log(np.where(iso > 0.0, iso / norm, np.nan))
        off_diag = ~np.eye(n, dtype=bool)
        infinite = np.isnan(values) & off_diag
        n_capped = int(infinite.sum()) // 2
        if n_capped:
            finite = values[off_diag & ~infinite]
            if finite.size == 0:
                raise ValueError("no pair of cells shares a surname; distances all infinite")
            cap = float(finite.max()) * 1.05
            values[infinite] = cap
            log.warning("%s matrix: capped %d infinite pair distances at %.6g",
                        metric, n_capped, cap)

    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 0.0)
    labels = [c.label for c in cells]
    return DistanceMatrix(n=n, metric=metric, values=values, labels=labels, n_capped=n_capped)
