"""Record parsing, SES normalization, and aggregation into grid cells."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("paternal", "maternal", "lon", "lat", "ses_raw")


def normalize_surname(raw: str) -> str:
    """Uppercase, fold diacritics to ASCII, trim, and collapse internal spaces."""
    decomposed = unicodedata.normalize("NFKD", raw.upper())
    folded = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(folded.split())


@dataclass(frozen=True)
class PersonRecord:
    """One resident: both surnames (already normalized), location, raw SES."""

    paternal: str
    maternal: str
    lon: float
    lat: float
    ses_raw: float


def parse_records(
    source: str | Path | io.TextIOBase | Iterable[str],
    delimiter: str = ",",
) -> tuple[list[PersonRecord], int]:
    """Parse a delimited record file into person records.

    The header must name all of ``paternal, maternal, lon, lat, ses_raw``
    (any column order, extra columns ignored). Rows with unparseable or
    non-finite coordinates, unparseable or negative SES, or a surname that
    is empty after normalization are rejected and counted.

    Returns ``(records, rejected_count)``.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return parse_records(handle, delimiter=delimiter)

    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("input has no header row") from None
    positions = {name.strip().lower(): i for i, name in enumerate(header)}
    missing = [c for c in REQUIRED_COLUMNS if c not in positions]
    if missing:
        raise ValueError(f"header is missing required columns: {', '.join(missing)}")
    cols = [positions[c] for c in REQUIRED_COLUMNS]

    records: list[PersonRecord] = []
    rejected = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        try:
            paternal = normalize_surname(row[cols[0]])
            maternal = normalize_surname(row[cols[1]])
            lon = float(row[cols[2]])
            lat = float(row[cols[3]])
            ses_raw = float(row[cols[4]])
        except (ValueError, IndexError):
            rejected += 1
            log.debug("rejected line %d: unparseable fields", lineno)
            continue
        if not paternal or not maternal:
            rejected += 1
            log.debug("rejected line %d: empty surname after normalization", lineno)
            continue
        if not (math.isfinite(lon) and math.isfinite(lat)) or not math.isfinite(ses_raw) or ses_raw < 0:
            rejected += 1
            log.debug("rejected line %d: bad coordinate or SES value", lineno)
            continue
        records.append(PersonRecord(paternal, maternal, lon, lat, ses_raw))
    if rejected:
        log.info("parsed %d records, rejected %d rows", len(records), rejected)
    return records, rejected


def normalize_ses(values: Sequence[float]) -> list[float]:
    """Min-max rescale values onto [0, 100].

    Requires at least two distinct values; a constant input has no scale.
    """
    if len(values) < 2:
        raise ValueError("need at least two values to normalize")
    lo = min(values)
    hi = max(values)
    if hi == lo:
        raise ValueError("all SES values identical; normalization undefined")
    span = hi - lo
    return [100.0 * (v - lo) / span for v in values]


@dataclass(frozen=True)
class Grid:
    """Regular lon/lat grid over a bounding box: ``nx`` columns by ``ny`` rows."""

    bbox: tuple[float, float, float, float]  # (min_lon, min_lat, max_lon, max_lat)
    nx: int
    ny: int

    def __post_init__(self) -> None:
        min_lon, min_lat, max_lon, max_lat = self.bbox
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs nx >= 1 and ny >= 1")
        if not (max_lon > min_lon and max_lat > min_lat):
            raise ValueError("degenerate bounding box")

    @classmethod
    def from_records(cls, records: Sequence[PersonRecord], nx: int, ny: int) -> "Grid":
        """Tight bounding box of the record coordinates."""
        if not records:
            raise ValueError("no records to build a grid from")
        lons = [r.lon for r in records]
        lats = [r.lat for r in records]
        return cls((min(lons), min(lats), max(lons), max(lats)), nx, ny)

    def cell_of(self, lon: float, lat: float) -> tuple[int, int]:
        """(row, col) of the cell containing the point; the top/right edges
        belong to the last row/column."""
        min_lon, min_lat, max_lon, max_lat = self.bbox
        col = int((lon - min_lon) / (max_lon - min_lon) * self.nx)
        row = int((lat - min_lat) / (max_lat - min_lat) * self.ny)
        return min(row, self.ny - 1), min(col, self.nx - 1)

    def cell_bounds(self, row: int, col: int) -> tuple[float, float, float, float]:
        min_lon, min_lat, max_lon, max_lat = self.bbox
        w = (max_lon - min_lon) / self.nx
        h = (max_lat - min_lat) / self.ny
        return (min_lon + col * w, min_lat + row * h, min_lon + (col + 1) * w, min_lat + (row + 1) * h)


@dataclass
class AreaCell:
    """One grid cell: surname token counts, normalized mean SES, diversity.

    ``tokens`` counts both surnames of every resident, so token counts sum
    to twice ``count``. ``freq`` is the derived relative-frequency
    distribution and ``alpha`` its effective surname number 1 / sum(p^2).
    """

    cell_id: tuple[int, int]
    count: int
    tokens: dict[str, int]
    ses_mean: float
    bounds: tuple[float, float, float, float]
    alpha: float = field(init=False)
    freq: dict[str, float] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        total = 2 * self.count
        self.freq = {s: n / total for s, n in self.tokens.items()}
        self.alpha = 1.0 / sum(p * p for p in self.freq.values())

    @property
    def label(self) -> str:
        return f"r{self.cell_id[0]}c{self.cell_id[1]}"


def build_grid(
    records: Sequence[PersonRecord],
    nx: int,
    ny: int,
    min_count: int = 50,
) -> list[AreaCell]:
    """Segment records into an ``nx`` x ``ny`` grid and aggregate per cell.

    SES is min-max normalized over *all* records before averaging per cell.
    Cells with fewer than ``min_count`` residents are discarded; at least one
    cell must survive. Cells are returned sorted by (row, col).
    """
    if not records:
        raise ValueError("no records")
    grid = Grid.from_records(records, nx, ny)
    ses_norm = normalize_ses([r.ses_raw for r in records])

    counts: dict[tuple[int, int], int] = {}
    token_maps: dict[tuple[int, int], dict[str, int]] = {}
    ses_sums: dict[tuple[int, int], float] = {}
    for rec, z in zip(records, ses_norm):
        key = grid.cell_of(rec.lon, rec.lat)
        counts[key] = counts.get(key, 0) + 1
        ses_sums[key] = ses_sums.get(key, 0.0) + z
        tok = token_maps.setdefault(key, {})
        tok[rec.paternal] = tok.get(rec.paternal, 0) + 1
        tok[rec.maternal] = tok.get(rec.maternal, 0) + 1

    cells = [
        AreaCell(
            cell_id=key,
            count=counts[key],
            tokens=dict(sorted(token_maps[key].items())),
            ses_mean=ses_sums[key] / counts[key],
            bounds=grid.cell_bounds(*key),
        )
        for key in sorted(counts)
        if counts[key] >= min_count
    ]
    if not cells:
        raise ValueError(f"no cell reached min_count={min_count}")
    log.info("grid %dx%d: %d occupied cells, %d retained (min_count=%d)",
             nx, ny, len(counts), len(cells), min_count)
    return cells


def cells_to_json(cells: Sequence[AreaCell], path: str | Path) -> None:
    """Write cells as a JSON array (token counts kept as exact integers)."""
    payload = [
        {
            "cell_id": list(c.cell_id),
            "count": c.count,
            "ses_mean": c.ses_mean,
            "alpha": c.alpha,
            "bounds": list(c.bounds),
            "tokens": c.tokens,
        }
        for c in cells
    ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def cells_from_json(path: str | Path) -> list[AreaCell]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        AreaCell(
            cell_id=tuple(item["cell_id"]),
            count=item["count"],
            tokens=item["tokens"],
            ses_mean=item["ses_mean"],
            bounds=tuple(item["bounds"]),
        )
        for item in payload
    ]


def cell_polygon(cell: AreaCell) -> list[list[float]]:
    """Closed counterclockwise (lon, lat) ring of the cell rectangle."""
    min_lon, min_lat, max_lon, max_lat = cell.bounds
    return [
        [min_lon, min_lat],
        [max_lon, min_lat],
        [max_lon, max_lat],
        [min_lon, max_lat],
        [min_lon, min_lat],
    ]


def cells_to_geojson(
    cells: Sequence[AreaCell],
    path: str | Path,
    communities: dict[tuple[int, int], int] | None = None,
) -> None:
    """Write cells as a GeoJSON FeatureCollection of cell polygons.

    ``communities`` optionally maps cell_id to a community id, adding a
    ``community`` property to each feature.
    """
    features = []
    for c in cells:
        props: dict[str, object] = {
            "cell_id": list(c.cell_id),
            "count": c.count,
            "ses_mean": c.ses_mean,
            "alpha": c.alpha,
        }
        if communities is not None:
            props["community"] = communities.get(c.cell_id)
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [cell_polygon(c)]},
                "properties": props,
            }
        )
    collection = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(collection, indent=2, sort_keys=True), encoding="utf-8")
