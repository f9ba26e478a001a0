"""Maximal covering location problem: coverage matrix construction, an exact
branch-and-bound solver, a greedy heuristic with swap improvement, and
coverage curves over the facility budget.

An instance is demand areas I (each a weighted point: the area centroid),
candidates J, and the binary coverage matrix a[i][j] = 1 iff candidate j
lies within the coverage standard of centroid i. Choosing p candidates, the
objective is the total population of areas covered by at least one choice.

Objective values are recomputed canonically (one numpy sum over the covered
rows) so solver and oracle agree exactly; with integer-valued populations
every comparison in the solvers is exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .candidates import CandidateSite, existing_site
from .errors import ConfigError, InputError, SolverRefused
from .geo import PLANAR, Point, Polygon, distance, point_in_polygon

EXACT_SIZE_CAP = 30

METHOD_EXACT = "exact"
METHOD_GREEDY_SWAP = "greedy+swap"
METHODS = (METHOD_EXACT, METHOD_GREEDY_SWAP)


@dataclass(frozen=True)
class DemandArea:
    """A city section with its service population, represented by a centroid."""

    id: str
    population: float
    centroid: Point | None = None
    geometry: Polygon | None = None

    def __post_init__(self):
        if self.population < 0:
            raise InputError(f"demand area {self.id!r}: population must be >= 0")
        if self.centroid is None:
            if self.geometry is None:
                raise InputError(f"demand area {self.id!r}: needs a centroid or geometry")
            object.__setattr__(self, "centroid", self.geometry.centroid)
        if self.geometry is not None and not point_in_polygon(self.centroid, self.geometry):
            raise InputError(f"demand area {self.id!r}: centroid lies outside its geometry")


@dataclass(frozen=True)
class CoverageStandard:
    """Coverage rule: a straight radius, or a travel time at a fixed speed
    converted to the equivalent radius."""

    kind: str = "radius"
    radius: float | None = None
    minutes: float | None = None
    speed_kmh: float | None = None

    def __post_init__(self):
        if self.kind == "radius":
            if self.radius is None or self.radius <= 0:
                raise ConfigError("coverage standard: radius must be positive")
        elif self.kind == "travel_time":
            if (self.minutes is None or self.minutes <= 0
                    or self.speed_kmh is None or self.speed_kmh <= 0):
                raise ConfigError(
                    "coverage standard: travel time needs positive minutes and speed"
                )
        else:
            raise ConfigError(f"coverage standard: unknown kind {self.kind!r}")

    @property
    def effective_radius_m(self) -> float:
        if self.kind == "radius":
            return float(self.radius)
        return float(self.speed_kmh) * 1000.0 / 60.0 * float(self.minutes)

    def to_dict(self) -> dict:
        if self.kind == "radius":
            return {"kind": "radius", "radius": self.radius}
        return {"kind": "travel_time", "minutes": self.minutes, "speed_kmh": self.speed_kmh}

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageStandard":
        return cls(
            kind=d.get("kind", "radius"),
            radius=d.get("radius"),
            minutes=d.get("minutes"),
            speed_kmh=d.get("speed_kmh"),
        )


@dataclass(frozen=True)
class MclpInstance:
    areas: tuple[DemandArea, ...]
    candidates: tuple[CandidateSite, ...]
    matrix: np.ndarray  # bool, |I| x |J|
    standard: CoverageStandard | None = None
    mode: str = PLANAR

    def __post_init__(self):
        if self.matrix.shape != (len(self.areas), len(self.candidates)):
            raise InputError("coverage matrix shape does not match areas x candidates")
        ids = [a.id for a in self.areas]
        if len(set(ids)) != len(ids):
            raise InputError("demand area ids must be unique")
        cids = [c.id for c in self.candidates]
        if len(set(cids)) != len(cids):
            raise InputError("candidate ids must be unique")
        m = self.matrix.astype(bool)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def populations(self) -> np.ndarray:
        return np.array([a.population for a in self.areas], dtype=float)

    @property
    def total_population(self) -> float:
        return float(self.populations.sum())

    def covering_candidates(self, area_index: int) -> list[str]:
        """N_i: ids of the candidates covering area i."""
        return [
            self.candidates[j].id
            for j in range(len(self.candidates))
            if self.matrix[area_index, j]
        ]

    def candidate_area_masks(self) -> list[int]:
        """Per-candidate bitmask of covered area indices."""
        masks = []
        for j in range(len(self.candidates)):
            m = 0
            col = self.matrix[:, j]
            for i in range(len(self.areas)):
                if col[i]:
                    m |= 1 << i
            masks.append(m)
        return masks

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "standard": None if self.standard is None else self.standard.to_dict(),
            "areas": [
                {"id": a.id, "population": a.population,
                 "centroid": [a.centroid.x, a.centroid.y]}
                for a in self.areas
            ],
            "candidates": [
                {"id": c.id, "location": [c.location.x, c.location.y],
                 "fixed_open": c.fixed_open}
                for c in self.candidates
            ],
            "matrix": [[int(v) for v in row] for row in self.matrix],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MclpInstance":
        mode = d.get("mode", PLANAR)
        standard = None
        if d.get("standard") is not None:
            standard = CoverageStandard.from_dict(d["standard"])
        areas = tuple(
            DemandArea(
                id=str(a["id"]),
                population=float(a["population"]),
                centroid=Point(float(a["centroid"][0]), float(a["centroid"][1])),
            )
            for a in d.get("areas", [])
        )
        cands = tuple(
            existing_site(
                str(c["id"]),
                Point(float(c["location"][0]), float(c["location"][1])),
                fixed_open=bool(c.get("fixed_open", False)),
            )
            for c in d.get("candidates", [])
        )
        if d.get("matrix") is not None:
            matrix = np.array(d["matrix"], dtype=bool)
        else:
            if standard is None:
                raise InputError("instance needs either a matrix or a coverage standard")
            return build_coverage(areas, cands, standard, mode=mode)
        return cls(areas=areas, candidates=cands, matrix=matrix,
                   standard=standard, mode=mode)


@dataclass(frozen=True)
class MclpSolution:
    p: int
    selected: tuple[str, ...]       # sorted candidate ids with x_j = 1
    covered: tuple[str, ...]        # area ids with y_i = 1
    objective: float                # persons covered
    coverage_pct: float             # 100 * objective / total population
    method: str
    optimal: bool
    marginal_gains: tuple[float, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "selected": list(self.selected),
            "covered": list(self.covered),
            "objective": self.objective,
            "coverage_pct": self.coverage_pct,
            "method": self.method,
            "optimal": self.optimal,
            "marginal_gains": list(self.marginal_gains),
        }


@dataclass(frozen=True)
class CoverageCurve:
    rows: tuple[MclpSolution, ...]

    def __post_init__(self):
        pcts = [r.coverage_pct for r in self.rows]
        if any(b < a - 1e-9 for a, b in zip(pcts, pcts[1:])):
            raise InputError("coverage curve must be non-decreasing in p")

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}


def build_coverage(areas: Sequence[DemandArea], candidates: Sequence[CandidateSite],
                   standard: CoverageStandard, mode: str = PLANAR) -> MclpInstance:
    """Coverage matrix: a[i][j] = 1 iff candidate j is within the effective
    radius of centroid i (boundary inclusive)."""
    if not areas or not candidates:
        raise InputError("coverage needs at least one area and one candidate")
    radius = standard.effective_radius_m
    matrix = np.zeros((len(areas), len(candidates)), dtype=bool)
    for i, area in enumerate(areas):
        for j, cand in enumerate(candidates):
            matrix[i, j] = distance(area.centroid, cand.location, mode) <= radius
    return MclpInstance(
        areas=tuple(areas), candidates=tuple(candidates),
        matrix=matrix, standard=standard, mode=mode,
    )


def _popcount_weight(mask: int, pops: Sequence[float]) -> float:
    total = 0.0
    i = 0
    while mask:
        if mask & 1:
            total += pops[i]
        mask >>= 1
        i += 1
    return total


def _finish_solution(inst: MclpInstance, chosen_ids: Iterable[str], method: str,
                     optimal: bool, gains: Sequence[float] = ()) -> MclpSolution:
    """Build the solution record, recomputing z canonically from the matrix."""
    selected = tuple(sorted(chosen_ids))
    idx = {c.id: j for j, c in enumerate(inst.candidates)}
    cols = [idx[s] for s in selected]
    covered_rows = inst.matrix[:, cols].any(axis=1) if cols else np.zeros(len(inst.areas), bool)
    pops = inst.populations
    z = float(pops[covered_rows].sum())
    total = inst.total_population
    pct = 100.0 * z / total if total > 0 else 0.0
    covered = tuple(inst.areas[i].id for i in range(len(inst.areas)) if covered_rows[i])
    return MclpSolution(
        p=len(selected), selected=selected, covered=covered,
        objective=z, coverage_pct=pct, method=method, optimal=optimal,
        marginal_gains=tuple(gains),
    )


def _prepare(inst: MclpInstance, p: int):
    n = len(inst.candidates)
    if not 1 <= p <= n:
        raise InputError(f"p must be in [1, {n}], got {p}")
    order = sorted(range(n), key=lambda j: inst.candidates[j].id)
    pops = [a.population for a in inst.areas]
    masks = inst.candidate_area_masks()
    fixed = [j for j in order if inst.candidates[j].fixed_open]
    if len(fixed) > p:
        raise InputError(
            f"{len(fixed)} candidates are fixed open but p={p}"
        )
    return order, pops, masks, fixed


def solve_exact(inst: MclpInstance, p: int, size_cap: int = EXACT_SIZE_CAP,
                override_cap: bool = False) -> MclpSolution:
    """Provably optimal solution by depth-first branch and bound.

    Candidates are explored in ascending id order with an include-first
    strategy, and a branch is pruned when its submodular upper bound (current
    coverage plus the best p-k residual gains) cannot beat the incumbent;
    the first optimum found is therefore the lexicographically smallest
    optimal id set.
    """
    n = len(inst.candidates)
    if n > size_cap and not override_cap:
        raise SolverRefused(
            f"instance has {n} candidates, above the exact-solver cap of {size_cap}; "
            "use the greedy solver or override the cap"
        )
    order, pops, masks, fixed = _prepare(inst, p)
    free_order = [j for j in order if j not in set(fixed)]

    start_mask = 0
    for j in fixed:
        start_mask |= masks[j]
    start_z = _popcount_weight(start_mask, pops)

    # greedy incumbent: prunes hard, but stays replaceable by an equal-value
    # DFS solution so the reported set is still the lexicographically
    # smallest optimum (strict pruning until DFS finds its own incumbent)
    best_z = _greedy_value(free_order, masks, pops, start_mask, start_z,
                           p - len(fixed))
    best_sel: list[int] = []
    seeded = True

    # suffix_union[k] = every area any candidate from position k on can cover
    suffix_union = [0] * (len(free_order) + 1)
    for k in range(len(free_order) - 1, -1, -1):
        suffix_union[k] = suffix_union[k + 1] | masks[free_order[k]]

    def residual_gains(covered: int, start: int) -> list[float]:
        gains = []
        for idx in range(start, len(free_order)):
            j = free_order[idx]
            gains.append(_popcount_weight(masks[j] & ~covered, pops))
        return gains

    def dfs(start: int, chosen: list[int], covered: int, z: float):
        nonlocal best_z, best_sel, seeded
        slots = p - len(fixed) - len(chosen)
        if slots == 0:
            if z > best_z or (seeded and z == best_z):
                best_z = z
                best_sel = list(chosen)
                seeded = False
            return
        remaining = len(free_order) - start
        if remaining < slots:
            return
        gains = residual_gains(covered, start)
        top = sum(sorted(gains, reverse=True)[:slots])
        reachable = _popcount_weight(suffix_union[start] & ~covered, pops)
        bound = z + min(top, reachable)
        if bound < best_z or (bound == best_z and not seeded):
            return
        j = free_order[start]
        gain = _popcount_weight(masks[j] & ~covered, pops)
        dfs(start + 1, chosen + [j], covered | masks[j], z + gain)
        dfs(start + 1, chosen, covered, z)

    dfs(0, [], start_mask, start_z)
    chosen_ids = [inst.candidates[j].id for j in fixed + best_sel]
    return _finish_solution(inst, chosen_ids, METHOD_EXACT, optimal=True)


def _greedy_value(free_order: Sequence[int], masks: Sequence[int],
                  pops: Sequence[float], covered: int, z: float,
                  rounds: int) -> float:
    for _ in range(rounds):
        best_gain = 0.0
        best_mask = 0
        for j in free_order:
            g = _popcount_weight(masks[j] & ~covered, pops)
            if g > best_gain:
                best_gain = g
                best_mask = masks[j]
        covered |= best_mask
        z += best_gain
    return z


def solve_greedy(inst: MclpInstance, p: int) -> MclpSolution:
    """Greedy heuristic: p rounds, each adding the candidate with the largest
    marginal covered population (ties to the smallest id). Records the
    marginal gain sequence, which is non-increasing by submodularity."""
    order, pops, masks, fixed = _prepare(inst, p)
    chosen: list[int] = []
    covered = 0
    gains: list[float] = []
    for j in fixed:
        gains.append(_popcount_weight(masks[j] & ~covered, pops))
        covered |= masks[j]
        chosen.append(j)
    while len(chosen) < p:
        best_j = None
        best_gain = -1.0
        for j in order:
            if j in chosen:
                continue
            g = _popcount_weight(masks[j] & ~covered, pops)
            if g > best_gain:
                best_gain = g
                best_j = j
        chosen.append(best_j)
        covered |= masks[best_j]
        gains.append(best_gain)
    free_gains = gains[len(fixed):]
    if any(b > a + 1e-9 for a, b in zip(free_gains, free_gains[1:])):
        raise AssertionError("greedy marginal gains must be non-increasing")
    ids = [inst.candidates[j].id for j in chosen]
    return _finish_solution(inst, ids, METHOD_GREEDY_SWAP, optimal=False, gains=gains)


def improve_swap(inst: MclpInstance, sol: MclpSolution) -> MclpSolution:
    """Best-improvement single swaps until no swap strictly raises z."""
    order, pops, masks, _fixed = _prepare(inst, sol.p)
    id_to_idx = {c.id: j for j, c in enumerate(inst.candidates)}
    fixed_ids = {c.id for c in inst.candidates if c.fixed_open}
    selected = sorted(sol.selected)
    z_cur = sol.objective
    improved = True
    while improved:
        improved = False
        best = None  # (z_new, out_id, in_id)
        sel_set = set(selected)
        for out_id in selected:
            if out_id in fixed_ids:
                continue
            keep = [id_to_idx[s] for s in selected if s != out_id]
            base_mask = 0
            for j in keep:
                base_mask |= masks[j]
            for j in order:  # candidates in id order: deterministic scan
                cand_id = inst.candidates[j].id
                if cand_id in sel_set:
                    continue
                z_new = _popcount_weight(base_mask | masks[j], pops)
                if z_new > z_cur and (best is None or z_new > best[0]):
                    best = (z_new, out_id, cand_id)
        if best is not None:
            _, out_id, in_id = best
            selected = sorted(set(selected) - {out_id} | {in_id})
            z_cur = best[0]
            improved = True
    out = _finish_solution(inst, selected, METHOD_GREEDY_SWAP, optimal=False,
                           gains=sol.marginal_gains)
    if out.objective < sol.objective:
        raise AssertionError("swap improvement must not lower the objective")
    return out


def _greedy_swap(inst: MclpInstance, p: int) -> MclpSolution:
    return improve_swap(inst, solve_greedy(inst, p))


def coverage_curve(inst: MclpInstance, p_max: int,
                   method: str = METHOD_EXACT,
                   size_cap: int = EXACT_SIZE_CAP,
                   override_cap: bool = False) -> CoverageCurve:
    """Solve for every p in 1..p_max independently.

    The exact curve is monotone because any p-solution extends to p+1. For
    the heuristic, each row is additionally seeded with the previous row's
    selection plus its best extension, and the better of the two is kept, so
    the reported best-known curve is monotone by construction.
    """
    if method not in METHODS:
        raise InputError(f"unknown solver method {method!r}")
    n = len(inst.candidates)
    if not 1 <= p_max <= n:
        raise InputError(f"p_max must be in [1, {n}], got {p_max}")
    rows: list[MclpSolution] = []
    for p in range(1, p_max + 1):
        if method == METHOD_EXACT:
            sol = solve_exact(inst, p, size_cap=size_cap, override_cap=override_cap)
        else:
            sol = _greedy_swap(inst, p)
            if rows:
                ext = _extend_by_best(inst, rows[-1])
                if ext.objective > sol.objective:
                    sol = ext
        rows.append(sol)
    return CoverageCurve(tuple(rows))


def _extend_by_best(inst: MclpInstance, prev: MclpSolution) -> MclpSolution:
    """prev's selection plus the candidate with the best marginal gain."""
    order, pops, masks, _ = _prepare(inst, prev.p + 1)
    id_to_idx = {c.id: j for j, c in enumerate(inst.candidates)}
    covered = 0
    for s in prev.selected:
        covered |= masks[id_to_idx[s]]
    best_j = None
    best_gain = -1.0
    sel = set(prev.selected)
    for j in order:
        if inst.candidates[j].id in sel:
            continue
        g = _popcount_weight(masks[j] & ~covered, pops)
        if g > best_gain:
            best_gain = g
            best_j = j
    ids = list(prev.selected) + [inst.candidates[best_j].id]
    return _finish_solution(inst, ids, METHOD_GREEDY_SWAP, optimal=False,
                            gains=tuple(prev.marginal_gains) + (best_gain,))


def verify_solution(inst: MclpInstance, sol: MclpSolution) -> bool:
    """Re-evaluate feasibility and the coverage linkage from the raw matrix."""
    if len(sol.selected) != sol.p:
        return False
    idx = {c.id: j for j, c in enumerate(inst.candidates)}
    if any(s not in idx for s in sol.selected):
        return False
    cols = [idx[s] for s in sol.selected]
    covered_rows = inst.matrix[:, cols].any(axis=1)
    covered_ids = {inst.areas[i].id for i in range(len(inst.areas)) if covered_rows[i]}
    if covered_ids != set(sol.covered):
        return False
    z = float(inst.populations[covered_rows].sum())
    return z == sol.objective


def instance_to_json(inst: MclpInstance) -> str:
    return json.dumps(inst.to_dict(), indent=2, sort_keys=True) + "\n"


def instance_from_json(text: str) -> MclpInstance:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid instance JSON: {exc}") from exc
    return MclpInstance.from_dict(d)


def coverage_table_csv(curve: CoverageCurve) -> str:
    """CSV mirror of the solution table: p, selected ids, covering percentage."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["p", "selected_ids", "covering_percentage"])
    for row in curve.rows:
        writer.writerow([row.p, ";".join(row.selected), repr(row.coverage_pct)])
    return buf.getvalue()


def parse_coverage_table_csv(text: str) -> list[tuple[int, tuple[str, ...], float]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != ["p", "selected_ids", "covering_percentage"]:
        raise InputError(f"unexpected coverage table header: {header}")
    out = []
    for row in reader:
        if not row:
            continue
        out.append((int(row[0]), tuple(row[1].split(";")), float(row[2])))
    return out
