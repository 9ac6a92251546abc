"""Dataset ingestion and storage.

Parses raw trace files (CabSpotting logs, GeoLife PLT, generic CSV) into
canonical immutable trajectories, applies dataset filters, and reads/writes
the canonical on-disk CSV format::

    pseudo_id,t_unix_s,lat_e6,lon_e6

with lat_e6/lon_e6 as signed degrees * 10^6 and t_unix_s empty for
spatial-only data.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, Mapping

from .geo import GpsPoint

CANONICAL_COLUMNS = ("pseudo_id", "t_unix_s", "lat_e6", "lon_e6")

# Generous municipal bounds for Beijing: (lat_min, lat_max, lon_min, lon_max).
BEIJING_BBOX = (39.4, 41.1, 115.4, 117.6)


class ParseError(ValueError):
    """Raised for malformed input records; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered point sequence for one pseudo-identity.

    Points are sorted ascending by timestamp at construction; duplicate
    (lat, lon, t) triplets are retained.
    """

    pseudo_id: str
    points: tuple[GpsPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError(f"trajectory {self.pseudo_id!r} has no points")
        stamped = [p.t is not None for p in pts]
        if any(stamped) and not all(stamped):
            raise ValueError(f"trajectory {self.pseudo_id!r} mixes timestamped and spatial-only points")
        if all(stamped):
            pts = tuple(sorted(pts, key=lambda p: p.t))
        object.__setattr__(self, "points", pts)

    @property
    def has_time(self) -> bool:
        return self.points[0].t is not None

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[GpsPoint]:
        return iter(self.points)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of trajectories with unique pseudo-identities.

    Iteration order is always ascending pseudo_id. ``resolution_digits``
    records the coarsest spatial transformation applied so far.
    """

    name: str
    trajectories: tuple[Trajectory, ...]
    resolution_digits: int = 6

    def __post_init__(self):
        trajs = tuple(sorted(self.trajectories, key=lambda tr: tr.pseudo_id))
        ids = [tr.pseudo_id for tr in trajs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"dataset {self.name!r} has duplicate pseudo_ids")
        if not 1 <= self.resolution_digits <= 6:
            raise ValueError("resolution_digits must be in 1..6")
        object.__setattr__(self, "trajectories", trajs)

    @property
    def pseudo_ids(self) -> tuple[str, ...]:
        return tuple(tr.pseudo_id for tr in self.trajectories)

    def get(self, pseudo_id: str) -> Trajectory:
        for tr in self.trajectories:
            if tr.pseudo_id == pseudo_id:
                return tr
        raise KeyError(pseudo_id)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.trajectories)


def point_key(p: GpsPoint, mode: str):
    """Hashable matching key for a point in the given mode."""
    if mode == "spatial":
        return (p.lat_e6, p.lon_e6)
    if mode == "spatiotemporal":
        return (p.lat_e6, p.lon_e6, p.t)
    raise ValueError(f"unknown mode {mode!r}; use 'spatial' or 'spatiotemporal'")


def _to_lines(source) -> list[str]:
    if isinstance(source, bytes):
        return source.decode("utf-8").splitlines()
    if isinstance(source, str):
        return source.splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.splitlines()


def parse_cabspotting(source, pseudo_id: str) -> Trajectory:
    """Parse a CabSpotting log: whitespace-separated "lat lon occupancy t".

    The occupancy column is discarded; points are re-sorted ascending by time.
    """
    lines = _to_lines(source)
    points = []
    for i, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        parts = s.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", i)
        try:
            lat = float(parts[0])
            lon = float(parts[1])
            t = int(parts[3])
            points.append(GpsPoint.from_degrees(lat, lon, t))
        except ValueError as exc:
            raise ParseError(str(exc), i) from exc
    if not points:
        raise ParseError(f"no records for {pseudo_id!r}")
    return Trajectory(pseudo_id, tuple(points))


def parse_plt(source, pseudo_id: str) -> Trajectory:
    """Parse a GeoLife PLT file: 6 header lines, then
    "lat,lon,0,alt,days,date,time" records. Altitude and serial-days fields
    are discarded; date+time are interpreted as UTC.
    """
    lines = _to_lines(source)
    if len(lines) < 7:
        raise ParseError(f"PLT file for {pseudo_id!r} has fewer than 7 lines")
    points = []
    for i, line in enumerate(lines[6:], start=7):
        s = line.strip()
        if not s:
            continue
        parts = s.split(",")
        if len(parts) < 7:
            raise ParseError(f"expected 7 fields, got {len(parts)}", i)
        try:
            lat = float(parts[0])
            lon = float(parts[1])
            dt = datetime.strptime(f"{parts[5]} {parts[6]}", "%Y-%m-%d %H:%M:%S")
            t = int(dt.replace(tzinfo=timezone.utc).timestamp())
            points.append(GpsPoint.from_degrees(lat, lon, t))
        except ValueError as exc:
            raise ParseError(str(exc), i) from exc
    if not points:
        raise ParseError(f"no records for {pseudo_id!r}")
    return Trajectory(pseudo_id, tuple(points))


def parse_csv(source, schema: Mapping[str, str], pseudo_id: str) -> Trajectory:
    """Parse a generic CSV with a user-declared column mapping.

    ``schema`` maps the keys "lat", "lon" and optionally "t" to column names
    in the file's header. Without a "t" column the result is spatial-only.
    """
    for key in ("lat", "lon"):
        if key not in schema:
            raise ValueError(f"schema must name a {key!r} column")
    lines = _to_lines(source)
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    for key, col in schema.items():
        if col not in header:
            raise ParseError(f"schema column {col!r} (for {key!r}) missing from header")
    points = []
    for row in reader:
        line_no = reader.line_num
        try:
            lat = float(row[schema["lat"]])
            lon = float(row[schema["lon"]])
            t = None
            if "t" in schema:
                t = int(float(row[schema["t"]]))
            points.append(GpsPoint.from_degrees(lat, lon, t))
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from exc
    if not points:
        raise ParseError(f"no records for {pseudo_id!r}")
    return Trajectory(pseudo_id, tuple(points))


def write_canonical(dataset: Dataset, target) -> None:
    """Write the canonical trace CSV (UTF-8, LF line endings)."""
    own = isinstance(target, str)
    fh: IO[str] = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        fh.write(",".join(CANONICAL_COLUMNS) + "\n")
        for traj in dataset:
            for p in traj.points:
                t = "" if p.t is None else str(p.t)
                fh.write(f"{traj.pseudo_id},{t},{p.lat_e6},{p.lon_e6}\n")
    finally:
        if own:
            fh.close()


def read_canonical(source, name: str = "dataset", resolution_digits: int = 6) -> Dataset:
    """Read a canonical trace CSV back into a Dataset."""
    if isinstance(source, str) and "\n" not in source and "," not in source:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = _to_lines(source)
    if not lines or lines[0].split(",") != list(CANONICAL_COLUMNS):
        raise ParseError("missing or malformed canonical header", 1)
    by_id: dict[str, list[GpsPoint]] = {}
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", i)
        pid, t_s, lat_s, lon_s = parts
        try:
            t = None if t_s == "" else int(t_s)
            by_id.setdefault(pid, []).append(GpsPoint(int(lat_s), int(lon_s), t))
        except ValueError as exc:
            raise ParseError(str(exc), i) from exc
    if not by_id:
        raise ParseError("canonical file has no records")
    trajs = tuple(Trajectory(pid, tuple(pts)) for pid, pts in by_id.items())
    return Dataset(name, trajs, resolution_digits)


def filter_dataset(
    dataset: Dataset,
    time_range: tuple[int, int] | None = None,
    bbox: tuple[float, float, float, float] | None = None,
    min_points: int = 1,
) -> Dataset:
    """Crop trajectories to a time range / bounding box and drop short traces.

    ``time_range`` is (t_min, t_max) in Unix seconds, inclusive on both ends;
    ``bbox`` is (lat_min, lat_max, lon_min, lon_max) in degrees. The input
    dataset is unmodified. An empty result is returned with a warning rather
    than treated as silent success.
    """
    kept = []
    for traj in dataset:
        pts = traj.points
        if time_range is not None:
            t_min, t_max = time_range
            pts = tuple(p for p in pts if p.t is not None and t_min <= p.t <= t_max)
        if bbox is not None:
            lat_min, lat_max, lon_min, lon_max = bbox
            pts = tuple(
                p for p in pts
                if lat_min <= p.lat <= lat_max and lon_min <= p.lon <= lon_max
            )
        if len(pts) >= max(min_points, 1):
            kept.append(Trajectory(traj.pseudo_id, pts))
    if not kept:
        warnings.warn(f"filter emptied dataset {dataset.name!r}", stacklevel=2)
    return Dataset(dataset.name, tuple(kept), dataset.resolution_digits)


def merge_trajectories(pseudo_id: str, trajectories: Iterable[Trajectory]) -> Trajectory:
    """Concatenate several partial traces of the same identity (GeoLife users
    store one PLT file per trip)."""
    points: list[GpsPoint] = []
    for tr in trajectories:
        points.extend(tr.points)
    return Trajectory(pseudo_id, tuple(points))


def canonical_bytes(dataset: Dataset) -> bytes:
    """Canonical CSV serialization as bytes; handy for determinism checks."""
    buf = io.StringIO()
    write_canonical(dataset, buf)
    return buf.getvalue().encode("utf-8")
