"""Candidate-site extraction, priority tiering, and merge with existing
branches.

Extraction is greedy non-maximum suppression over the combined score
surface: repeatedly take the best remaining cell (ties by row then column,
ascending), emit its center, and suppress everything closer than the
separation distance. Tiers are positional terciles of the score ordering,
with remainders going to the higher tiers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import InputError
from .geo import PLANAR, Point, distance
from .overlay import ScoreRaster

ORIGIN_PROPOSED = "proposed"
ORIGIN_EXISTING = "existing"

TIER_FIRST = "first"
TIER_SECOND = "second"
TIER_THIRD = "third"
TIERS = (TIER_FIRST, TIER_SECOND, TIER_THIRD)


@dataclass(frozen=True)
class CandidateSite:
    id: str
    location: Point
    score: float | None
    origin: str
    tier: str | None = None
    fixed_open: bool = False

    def __post_init__(self):
        if self.origin not in (ORIGIN_PROPOSED, ORIGIN_EXISTING):
            raise InputError(f"candidate {self.id!r}: unknown origin {self.origin!r}")
        if self.origin == ORIGIN_PROPOSED and not (self.score is not None and self.score > 0):
            raise InputError(f"candidate {self.id!r}: proposed sites need a positive score")
        if self.tier is not None and self.tier not in TIERS:
            raise InputError(f"candidate {self.id!r}: unknown tier {self.tier!r}")


@dataclass(frozen=True)
class ExtractionConfig:
    min_score: float
    min_separation: float
    max_proposed: int

    def __post_init__(self):
        if self.min_separation < 0:
            raise InputError("min_separation must be >= 0")
        if self.max_proposed < 1:
            raise InputError("max_proposed must be >= 1")


def extract(raster: ScoreRaster, cfg: ExtractionConfig,
            mode: str = PLANAR, id_prefix: str = "p") -> list[CandidateSite]:
    """Greedy peak extraction with non-maximum suppression.

    Returns proposed candidates in pick order; empty when no cell reaches
    min_score (an empty-result signal, not an error). Zero-score cells are
    never eligible.
    """
    eligible: list[tuple[float, int, int]] = []
    values = raster.values
    for row in range(raster.grid.nrows):
        for col in range(raster.grid.ncols):
            v = values[row, col]
            if math.isnan(v) or v <= 0.0 or v < cfg.min_score:
                continue
            eligible.append((float(v), row, col))
    eligible.sort(key=lambda t: (-t[0], t[1], t[2]))

    picked: list[tuple[float, Point]] = []
    for v, row, col in eligible:
        if len(picked) >= cfg.max_proposed:
            break
        center = raster.grid.cell_center(row, col)
        if any(distance(center, p, mode) < cfg.min_separation for _, p in picked):
            continue
        picked.append((v, center))

    width = max(2, len(str(cfg.max_proposed)))
    return [
        CandidateSite(
            id=f"{id_prefix}{i + 1:0{width}d}",
            location=loc,
            score=v,
            origin=ORIGIN_PROPOSED,
        )
        for i, (v, loc) in enumerate(picked)
    ]


def tier_sizes(n: int) -> tuple[int, int, int]:
    """Tercile sizes; the remainder of an uneven split goes to higher tiers."""
    base, rem = divmod(n, 3)
    return tuple(base + (1 if i < rem else 0) for i in range(3))


def assign_tiers(sites: Sequence[CandidateSite]) -> list[CandidateSite]:
    """Score-ordered tercile split into first/second/third priority.

    The ordering is a stable sort on descending score, so equal-scored sites
    keep their given order and split positionally.
    """
    if not sites:
        return []
    for s in sites:
        if s.score is None:
            raise InputError(f"candidate {s.id!r} has no score; cannot tier")
    order = sorted(range(len(sites)), key=lambda i: (-sites[i].score, i))
    sizes = tier_sizes(len(sites))
    tier_of_position = []
    for tier, size in zip(TIERS, sizes):
        tier_of_position.extend([tier] * size)
    out: list[CandidateSite] = list(sites)
    for pos, idx in enumerate(order):
        out[idx] = replace(sites[idx], tier=tier_of_position[pos])
    return out


def merge(proposed: Sequence[CandidateSite],
          existing: Sequence[CandidateSite]) -> list[CandidateSite]:
    """Union of proposed and existing candidates, preserving origin labels.

    The proposed-proposed separation constraint does not bind across the
    merge; a proposed site may sit arbitrarily close to an existing branch.
    """
    merged = list(proposed) + list(existing)
    seen: set[str] = set()
    for site in merged:
        if site.id in seen:
            raise InputError(f"duplicate candidate id {site.id!r} after merge")
        seen.add(site.id)
    return merged


def existing_site(site_id: str, location: Point, fixed_open: bool = False) -> CandidateSite:
    return CandidateSite(
        id=site_id, location=location, score=None,
        origin=ORIGIN_EXISTING, fixed_open=fixed_open,
    )


def candidates_geojson(sites: Sequence[CandidateSite], meta: dict | None = None) -> dict:
    """GeoJSON FeatureCollection with id/score/origin/tier properties.

    ``meta`` entries are added as top-level foreign members so the file
    identifies the run that produced it.
    """
    features = []
    for s in sites:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [s.location.x, s.location.y]},
            "properties": {
                "id": s.id,
                "score": None if s.score is None else float(s.score),
                "origin": s.origin,
                "tier": s.tier,
                "fixed_open": s.fixed_open,
            },
        })
    payload = {"type": "FeatureCollection", "features": features}
    if meta:
        payload.update(meta)
    return payload
