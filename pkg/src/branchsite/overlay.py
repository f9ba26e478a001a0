"""Raster suitability surfaces: per-criterion rasterization and weighted
combination over a uniform analysis grid.

Cells are scored at their centers. Row 0 is the southernmost row; exports
write rows top-down as the Esri ASCII grid format expects. Combination
accumulates rasters in criterion-id order so the result is bit-identical
under any input permutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .criteria import (
    KIND_CATEGORICAL,
    KIND_DENSITY,
    NormalizedCriterion,
    ScoreScheme,
    classify,
    score,
)
from .errors import InputError
from .geo import GEODESIC, PLANAR, Point, Polygon, geodesic_distance
from .weights import WeightVector

MAX_CELLS = 4_000_000
NODATA = -9999.0


class CombineMode(str, Enum):
    WEIGHTED_SUM = "weighted_sum"
    LITERAL_PRODUCT = "literal_product"
    WEIGHTED_GEOMETRIC = "weighted_geometric"


def parse_combine_mode(name: str) -> CombineMode:
    try:
        return CombineMode(name)
    except ValueError:
        raise InputError(
            f"unknown combine mode {name!r} "
            f"(expected one of {[m.value for m in CombineMode]})"
        ) from None


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: origin at the lower-left corner, square cells.

    Coordinates follow the project mode: meters in planar mode, degrees
    (lon/lat) in geodesic mode.
    """

    origin_x: float
    origin_y: float
    cell_size: float
    ncols: int
    nrows: int

    def __post_init__(self):
        if self.cell_size <= 0:
            raise InputError(f"cell_size must be positive, got {self.cell_size}")
        if self.ncols < 1 or self.nrows < 1:
            raise InputError("grid must have at least one column and row")
        if self.ncols * self.nrows > MAX_CELLS:
            raise InputError(
                f"grid has {self.ncols * self.nrows} cells, above the cap of {MAX_CELLS}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def cell_center(self, row: int, col: int) -> Point:
        return Point(
            self.origin_x + (col + 0.5) * self.cell_size,
            self.origin_y + (row + 0.5) * self.cell_size,
        )

    def center_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) arrays of shape (nrows, ncols); identical arithmetic to
        cell_center so scalar and vector paths agree bit for bit."""
        xs = self.origin_x + (np.arange(self.ncols, dtype=float) + 0.5) * self.cell_size
        ys = self.origin_y + (np.arange(self.nrows, dtype=float) + 0.5) * self.cell_size
        return np.broadcast_to(xs, (self.nrows, self.ncols)).copy(), \
            np.broadcast_to(ys[:, None], (self.nrows, self.ncols)).copy()


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SuitabilityRaster:
    """Per-criterion scores over the grid; NaN outside the study area."""

    grid: GridSpec
    criterion_id: str
    values: np.ndarray
    mask: np.ndarray  # True where the cell is inside the study area

    def __post_init__(self):
        if self.values.shape != self.grid.shape or self.mask.shape != self.grid.shape:
            raise InputError("raster arrays must match the grid shape")
        _freeze(self.values)
        _freeze(self.mask)


@dataclass(frozen=True)
class ScoreRaster:
    """Combined suitability surface; NaN outside the study area."""

    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray
    mode: CombineMode

    def __post_init__(self):
        if self.values.shape != self.grid.shape or self.mask.shape != self.grid.shape:
            raise InputError("raster arrays must match the grid shape")
        _freeze(self.values)
        _freeze(self.mask)


def _points_in_polygon_bulk(xs: np.ndarray, ys: np.ndarray, poly: Polygon) -> np.ndarray:
    """Vectorized twin of geo.point_in_polygon (boundary counts as inside)."""

    def ring_arrays(ring):
        ax = np.array([p.x for p in ring])
        ay = np.array([p.y for p in ring])
        bx = np.roll(ax, -1)
        by = np.roll(ay, -1)
        return ax, ay, bx, by

    def crossings_odd(ring):
        ax, ay, bx, by = ring_arrays(ring)
        inside = np.zeros(xs.shape, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i in range(len(ax)):
                cond = (ay[i] > ys) != (by[i] > ys)
                if not cond.any():
                    continue
                x_at = ax[i] + (ys - ay[i]) * (bx[i] - ax[i]) / (by[i] - ay[i])
                inside ^= cond & (xs < x_at)
        return inside

    def on_ring(ring):
        ax, ay, bx, by = ring_arrays(ring)
        on = np.zeros(xs.shape, dtype=bool)
        for i in range(len(ax)):
            cross = (bx[i] - ax[i]) * (ys - ay[i]) - (by[i] - ay[i]) * (xs - ax[i])
            bbox = (
                (np.minimum(ax[i], bx[i]) <= xs) & (xs <= np.maximum(ax[i], bx[i]))
                & (np.minimum(ay[i], by[i]) <= ys) & (ys <= np.maximum(ay[i], by[i]))
            )
            on |= (cross == 0.0) & bbox
        return on

    boundary = on_ring(poly.exterior)
    for hole in poly.holes:
        boundary |= on_ring(hole)
    inside = crossings_odd(poly.exterior)
    for hole in poly.holes:
        inside &= ~crossings_odd(hole)
    return boundary | inside


def build_mask(grid: GridSpec, polygons: Sequence[Polygon]) -> np.ndarray:
    """True where the cell center lies inside any of the polygons."""
    xs, ys = grid.center_arrays()
    mask = np.zeros(grid.shape, dtype=bool)
    for poly in polygons:
        mask |= _points_in_polygon_bulk(xs, ys, poly)
    return mask


def _min_distances(xs: np.ndarray, ys: np.ndarray, points: Sequence[Point],
                   mode: str) -> np.ndarray:
    if mode == GEODESIC:
        # scalar kernel per cell keeps bit-parity with geo.geodesic_distance
        out = np.empty(xs.shape)
        flat_x, flat_y = xs.ravel(), ys.ravel()
        flat = out.ravel()
        for i in range(flat_x.size):
            q = Point(float(flat_x[i]), float(flat_y[i]))
            flat[i] = min(geodesic_distance(q, p) for p in points)
        return out
    px = np.array([p.x for p in points])
    py = np.array([p.y for p in points])
    best = np.full(xs.shape, np.inf)
    for i in range(px.size):
        dx = xs - px[i]
        dy = ys - py[i]
        np.minimum(best, np.sqrt(dx * dx + dy * dy), out=best)
    return best


def _classify_scores(spec: NormalizedCriterion, raws: np.ndarray,
                     scheme: ScoreScheme) -> np.ndarray:
    """Vectorized band lookup; comparisons mirror criteria.classify."""
    out = np.full(raws.shape, np.nan)
    assigned = np.zeros(raws.shape, dtype=bool)
    for seg in spec.segments:
        above = (raws > seg.lo) | (seg.lo_inc & (raws == seg.lo))
        below = (raws < seg.hi) | (seg.hi_inc & (raws == seg.hi))
        hit = above & below & ~assigned
        out[hit] = score(seg.cls, scheme)
        assigned |= hit
    if not assigned.all():
        bad = float(raws[~assigned].flat[0])
        raise InputError(f"criterion {spec.id!r}: raw value {bad} outside normalized bands")
    return out


def rasterize(spec: NormalizedCriterion, features, grid: GridSpec,
              scheme: ScoreScheme, mask: np.ndarray | None = None,
              mode: str = PLANAR) -> SuitabilityRaster:
    """Score one criterion at every in-area cell center.

    ``features`` is a point sequence for distance criteria, or a sequence of
    (Polygon, attribute) zones for categorical/density criteria. Zones may
    nest; the smallest zone containing the center wins, so the result does
    not depend on feature order.
    """
    if mask is None:
        mask = np.ones(grid.shape, dtype=bool)
    if mask.shape != grid.shape:
        raise InputError("mask shape does not match the grid")
    xs, ys = grid.center_arrays()
    values = np.full(grid.shape, np.nan)

    if spec.kind in (KIND_CATEGORICAL, KIND_DENSITY):
        zones = list(features)
        if not zones:
            raise InputError(f"criterion {spec.id!r}: empty zone layer")
        if not _is_zone_layer(zones):
            raise InputError(
                f"criterion {spec.id!r} expects (Polygon, attribute) zones"
            )
        best_area = np.full(grid.shape, np.inf)
        zone_idx = np.full(grid.shape, -1)
        for k, (poly, _value) in enumerate(zones):
            contains = _points_in_polygon_bulk(xs, ys, poly) & mask
            take = contains & (poly.area < best_area)
            best_area[take] = poly.area
            zone_idx[take] = k
        missing = mask & (zone_idx < 0)
        if missing.any():
            row, col = map(int, np.argwhere(missing)[0])
            center = grid.cell_center(row, col)
            raise InputError(
                f"criterion {spec.id!r}: cell (row={row}, col={col}) at "
                f"({center.x}, {center.y}) is covered by no zone polygon"
            )
        for k, (_poly, value) in enumerate(zones):
            cells = zone_idx == k
            if cells.any():
                values[cells] = score(classify(spec, value), scheme)
        return SuitabilityRaster(grid, spec.id, values, mask.copy())

    points = list(features)
    if not points:
        raise InputError(f"criterion {spec.id!r}: empty feature layer")
    if not all(isinstance(p, Point) for p in points):
        raise InputError(f"criterion {spec.id!r} expects point features")
    raws = _min_distances(xs, ys, points, mode)
    values[mask] = _classify_scores(spec, raws[mask], scheme)
    return SuitabilityRaster(grid, spec.id, values, mask.copy())


def _is_zone_layer(features) -> bool:
    for item in features:
        return isinstance(item, tuple) and isinstance(item[0], Polygon)
    return False


def combine(rasters: Sequence[SuitabilityRaster], weights,
            mode: CombineMode) -> ScoreRaster:
    """Weighted per-cell combination of suitability rasters.

    weighted_sum:        sum_k w_k * s_k
    literal_product:     prod_k (w_k * s_k)
    weighted_geometric:  prod_k s_k ** w_k   (0 ** w = 0)
    """
    if not rasters:
        raise InputError("combine needs at least one raster")
    ids = [r.criterion_id for r in rasters]
    if len(set(ids)) != len(ids):
        raise InputError("combine: duplicate criterion ids")

    if isinstance(weights, WeightVector):
        if set(weights.items) != set(ids):
            raise InputError(
                f"combine: weight ids {sorted(weights.items)} do not match "
                f"raster ids {sorted(ids)}"
            )
        wmap = weights.as_dict()
        w_list = [wmap[i] for i in ids]
    else:
        w_list = [float(w) for w in weights]
        if len(w_list) != len(rasters):
            raise InputError(
                f"combine: {len(w_list)} weights for {len(rasters)} rasters"
            )
    if abs(sum(w_list) - 1.0) > 1e-9:
        raise InputError(f"combine: weights must sum to 1, got {sum(w_list)!r}")

    grid = rasters[0].grid
    mask = rasters[0].mask
    for r in rasters[1:]:
        if r.grid != grid:
            raise InputError(
                f"combine: raster {r.criterion_id!r} is on a different grid"
            )
        if not np.array_equal(r.mask, mask):
            raise InputError(
                f"combine: raster {r.criterion_id!r} has a different study-area mask"
            )

    # canonical order by criterion id: bit-identical under input permutation
    order = sorted(range(len(rasters)), key=lambda k: rasters[k].criterion_id)
    if mode is CombineMode.WEIGHTED_SUM:
        acc = np.zeros(grid.shape)
        for k in order:
            acc = acc + w_list[k] * rasters[k].values
    elif mode is CombineMode.LITERAL_PRODUCT:
        acc = np.ones(grid.shape)
        for k in order:
            acc = acc * (w_list[k] * rasters[k].values)
    elif mode is CombineMode.WEIGHTED_GEOMETRIC:
        acc = np.ones(grid.shape)
        for k in order:
            acc = acc * np.power(rasters[k].values, w_list[k])
    else:
        raise InputError(f"unknown combine mode: {mode!r}")
    acc[~mask] = np.nan
    return ScoreRaster(grid, acc, mask.copy(), mode)


def esri_ascii_text(grid: GridSpec, values: np.ndarray, nodata: float = NODATA) -> str:
    """Esri ASCII grid body; rows written north to south."""
    lines = [
        f"NCOLS {grid.ncols}",
        f"NROWS {grid.nrows}",
        f"XLLCORNER {grid.origin_x!r}",
        f"YLLCORNER {grid.origin_y!r}",
        f"CELLSIZE {grid.cell_size!r}",
        f"NODATA_VALUE {nodata!r}",
    ]
    for row in range(grid.nrows - 1, -1, -1):
        cells = [
            repr(nodata) if math.isnan(v) else repr(float(v))
            for v in values[row, :]
        ]
        lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def write_esri_ascii(raster, path: str | Path, nodata: float = NODATA) -> None:
    Path(path).write_text(esri_ascii_text(raster.grid, raster.values, nodata))


def read_esri_ascii(path: str | Path) -> tuple[GridSpec, np.ndarray]:
    """Parse an Esri ASCII grid; nodata cells come back as NaN."""
    text = Path(path).read_text().strip().splitlines()
    header: dict[str, float] = {}
    data_lines = []
    for line in text:
        parts = line.split()
        if len(parts) == 2 and parts[0].upper() in (
            "NCOLS", "NROWS", "XLLCORNER", "YLLCORNER", "CELLSIZE", "NODATA_VALUE"
        ):
            header[parts[0].upper()] = float(parts[1])
        else:
            data_lines.append(parts)
    try:
        grid = GridSpec(
            origin_x=header["XLLCORNER"],
            origin_y=header["YLLCORNER"],
            cell_size=header["CELLSIZE"],
            ncols=int(header["NCOLS"]),
            nrows=int(header["NROWS"]),
        )
    except KeyError as exc:
        raise InputError(f"esri ascii grid missing header field {exc}") from None
    nodata = header.get("NODATA_VALUE", NODATA)
    rows = [[float(v) for v in line] for line in data_lines]
    if len(rows) != grid.nrows or any(len(r) != grid.ncols for r in rows):
        raise InputError("esri ascii grid body does not match NCOLS/NROWS")
    values = np.array(rows[::-1], dtype=float)  # back to row 0 = south
    values[values == nodata] = np.nan
    return grid, values


def score_points_geojson(raster, meta: dict | None = None) -> dict:
    """GeoJSON FeatureCollection of in-area cell centers with their score.

    ``meta`` entries (config digest, mode, ...) are added as top-level
    foreign members so the file identifies the run that produced it.
    """
    features = []
    grid = raster.grid
    for row in range(grid.nrows):
        for col in range(grid.ncols):
            v = raster.values[row, col]
            if math.isnan(v):
                continue
            center = grid.cell_center(row, col)
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [center.x, center.y]},
                "properties": {"score": float(v)},
            })
    payload = {"type": "FeatureCollection", "features": features}
    if meta:
        payload.update(meta)
    return payload
