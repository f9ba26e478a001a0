"""Project configuration, GeoJSON ingestion, the end-to-end pipeline, and
report rendering.

A project is one JSON file declaring the coordinate mode, analysis grid,
score scheme, criterion specs with their layer files, the judgment-matrix
hierarchy, extraction and coverage parameters, and the solver. Loading is
fail-fast: schema problems, missing files, unnormalizable criteria, and
consistency-gate failures all abort before any computation starts.

The pipeline is a pure function of the config and its input files; two runs
produce byte-identical artifacts (no timestamps anywhere).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .candidates import (
    CandidateSite,
    ExtractionConfig,
    assign_tiers,
    candidates_geojson,
    existing_site,
    extract,
    merge,
)
from .criteria import (
    Band,
    CriterionSpec,
    KIND_CATEGORICAL,
    KIND_DENSITY,
    NormalizedCriterion,
    ScoreScheme,
    parse_class,
    validate_spec,
)
from .errors import BranchSiteError, ConfigError, GateError, InputError, StageError
from .geo import GEODESIC, MODES, Point, Polygon
from .mclp import (
    CoverageStandard,
    DemandArea,
    MclpInstance,
    METHODS,
    build_coverage,
    coverage_curve,
    coverage_table_csv,
)
from .overlay import (
    CombineMode,
    GridSpec,
    ScoreRaster,
    SuitabilityRaster,
    build_mask,
    combine,
    esri_ascii_text,
    parse_combine_mode,
    rasterize,
    score_points_geojson,
)
from .weights import (
    GateResult,
    Hierarchy,
    HierarchyNode,
    WeightVector,
    gate,
    load_matrix_csv,
    synthesize,
)


def _req(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"missing config field: {path}.{key}")
    return obj[key]


def _num(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"config field {path} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class ProjectConfig:
    path: Path
    base_dir: Path
    digest: str
    mode: str
    grid: GridSpec
    scheme: ScoreScheme
    combine_mode: CombineMode
    criteria: tuple[NormalizedCriterion, ...]
    layer_paths: dict[str, Path]
    demand_path: Path
    existing_path: Path
    hierarchy: Hierarchy
    cr_threshold: float
    extraction: ExtractionConfig
    standard: CoverageStandard
    p_max: int
    solver: str

    def input_files(self) -> dict[str, Path]:
        """Every file the pipeline reads, keyed by config-relative name."""
        files = {str(self.path.name): self.path}
        for cid, p in sorted(self.layer_paths.items()):
            files[str(p.relative_to(self.base_dir))] = p
        files[str(self.demand_path.relative_to(self.base_dir))] = self.demand_path
        files[str(self.existing_path.relative_to(self.base_dir))] = self.existing_path
        for node in self.hierarchy.nodes:
            if node.matrix is not None:
                p = self.base_dir / node.matrix.id
                # matrix ids hold the config-relative path; see load_project
                files[node.matrix.id] = p
        return files


def _parse_bands(entries, path: str) -> tuple[Band, ...]:
    bands = []
    for i, entry in enumerate(entries):
        where = f"{path}[{i}]"
        lo = _num(_req(entry, "min", where), f"{where}.min")
        hi = entry.get("max")
        if hi is not None:
            hi = _num(hi, f"{where}.max")
        cls = parse_class(_req(entry, "class", where))
        bands.append(Band(lo, hi, cls))
    return tuple(bands)


def _parse_criterion(entry: dict, idx: int, base_dir: Path) -> tuple[NormalizedCriterion, Path]:
    where = f"criteria[{idx}]"
    cid = _req(entry, "id", where)
    kind = _req(entry, "kind", where)
    layer_rel = _req(entry, "layer", where)
    layer_path = base_dir / layer_rel
    if not layer_path.is_file():
        raise ConfigError(f"{where}.layer: file not found: {layer_path}")
    if "categories" in entry:
        categories = {
            name: parse_class(cls) for name, cls in entry["categories"].items()
        }
        spec = CriterionSpec(id=cid, kind=kind, categories=categories,
                             layer_ref=str(layer_rel))
    else:
        bands = _parse_bands(_req(entry, "bands", where), f"{where}.bands")
        spec = CriterionSpec(id=cid, kind=kind, bands=bands,
                             direction=entry.get("direction", "band"),
                             layer_ref=str(layer_rel))
    return validate_spec(spec), layer_path


def _parse_hierarchy(cfg: dict, base_dir: Path) -> tuple[Hierarchy, float]:
    hcfg = _req(cfg, "hierarchy", "config")
    threshold = _num(hcfg.get("cr_threshold", 0.1), "hierarchy.cr_threshold")
    nodes = []
    for i, entry in enumerate(_req(hcfg, "nodes", "hierarchy")):
        where = f"hierarchy.nodes[{i}]"
        node_id = _req(entry, "id", where)
        children = tuple(_req(entry, "children", where))
        matrix_rel = entry.get("matrix")
        matrix = None
        if matrix_rel is not None:
            matrix_path = base_dir / matrix_rel
            if not matrix_path.is_file():
                raise ConfigError(f"{where}.matrix: file not found: {matrix_path}")
            # keep the config-relative path as the matrix id for reporting
            matrix = load_matrix_csv(matrix_path, matrix_id=str(matrix_rel))
            if matrix.items != children:
                raise ConfigError(
                    f"{where}: matrix header {matrix.items} does not match "
                    f"children {children}"
                )
        nodes.append(HierarchyNode(node_id, children, matrix))
    return Hierarchy(nodes=tuple(nodes), root=_req(hcfg, "root", "hierarchy")), threshold


def load_project(path: str | Path) -> ProjectConfig:
    """Parse and validate a project file; every gate and schema check runs now."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read project file {path}: {exc}") from exc
    digest = hashlib.sha256(raw).hexdigest()
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"project file {path} is not valid JSON: {exc}") from exc
    base_dir = path.parent

    mode = _req(cfg, "mode", "config")
    if mode not in MODES:
        raise ConfigError(f"config.mode must be one of {MODES}, got {mode!r}")

    gcfg = _req(cfg, "grid", "config")
    origin = _req(gcfg, "origin", "grid")
    grid = GridSpec(
        origin_x=_num(origin[0], "grid.origin[0]"),
        origin_y=_num(origin[1], "grid.origin[1]"),
        cell_size=_num(_req(gcfg, "cell_size", "grid"), "grid.cell_size"),
        ncols=int(_req(gcfg, "ncols", "grid")),
        nrows=int(_req(gcfg, "nrows", "grid")),
    )

    scfg = cfg.get("scheme", {})
    scheme = ScoreScheme(
        high=_num(scfg.get("high", 0.6), "scheme.high"),
        mid=_num(scfg.get("mid", 0.4), "scheme.mid"),
        non=_num(scfg.get("non", 0.0), "scheme.non"),
    )

    combine_mode = parse_combine_mode(cfg.get("combine_mode", "weighted_geometric"))

    criteria = []
    layer_paths: dict[str, Path] = {}
    for i, entry in enumerate(_req(cfg, "criteria", "config")):
        spec, layer_path = _parse_criterion(entry, i, base_dir)
        if spec.id in layer_paths:
            raise ConfigError(f"criteria[{i}]: duplicate criterion id {spec.id!r}")
        criteria.append(spec)
        layer_paths[spec.id] = layer_path

    hierarchy, cr_threshold = _parse_hierarchy(cfg, base_dir)
    leaves = set(hierarchy.leaves())
    declared = set(layer_paths)
    missing = leaves - declared
    if missing:
        raise ConfigError(
            f"hierarchy references undeclared criteria: {sorted(missing)}"
        )
    unused = declared - leaves
    if unused:
        raise ConfigError(
            f"criteria never referenced by the hierarchy: {sorted(unused)}"
        )

    # fail fast on inconsistent matrices
    failures = []
    gates = []
    for m in hierarchy.matrices():
        result = gate(m, cr_threshold)
        gates.append(result)
        if not result.passed:
            failures.append((m.id, result.cr))
    if failures:
        raise GateError(failures)

    demand_path = base_dir / _req(cfg, "demand_areas", "config")
    if not demand_path.is_file():
        raise ConfigError(f"config.demand_areas: file not found: {demand_path}")
    existing_path = base_dir / _req(cfg, "existing_branches", "config")
    if not existing_path.is_file():
        raise ConfigError(f"config.existing_branches: file not found: {existing_path}")

    ecfg = _req(cfg, "extraction", "config")
    extraction = ExtractionConfig(
        min_score=_num(_req(ecfg, "min_score", "extraction"), "extraction.min_score"),
        min_separation=_num(_req(ecfg, "min_separation", "extraction"),
                            "extraction.min_separation"),
        max_proposed=int(_req(ecfg, "max_proposed", "extraction")),
    )

    standard = CoverageStandard.from_dict(_req(cfg, "standard", "config"))
    p_max = int(_req(cfg, "p_max", "config"))
    if p_max < 1:
        raise ConfigError(f"config.p_max must be >= 1, got {p_max}")
    solver = cfg.get("solver", "exact")
    if solver not in METHODS:
        raise ConfigError(f"config.solver must be one of {METHODS}, got {solver!r}")

    return ProjectConfig(
        path=path, base_dir=base_dir, digest=digest, mode=mode, grid=grid,
        scheme=scheme, combine_mode=combine_mode, criteria=tuple(criteria),
        layer_paths=layer_paths, demand_path=demand_path,
        existing_path=existing_path, hierarchy=hierarchy,
        cr_threshold=cr_threshold, extraction=extraction, standard=standard,
        p_max=p_max, solver=solver,
    )


def _load_geojson(path: Path) -> list[dict]:
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read layer {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"layer {path} is not valid JSON: {exc}") from exc
    if data.get("type") != "FeatureCollection" or "features" not in data:
        raise InputError(f"layer {path} is not a GeoJSON FeatureCollection")
    return data["features"]


def _check_mode_range(p: Point, mode: str, where: str):
    if mode == GEODESIC and not (-180.0 <= p.x <= 180.0 and -90.0 <= p.y <= 90.0):
        raise InputError(f"{where}: coordinates ({p.x}, {p.y}) out of lon/lat range")


def load_point_layer(path: Path, mode: str) -> list[tuple[str | None, Point]]:
    out = []
    for i, feat in enumerate(_load_geojson(path)):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Point":
            raise InputError(
                f"{path} feature {i}: expected Point geometry, got {geom.get('type')!r}"
            )
        x, y = geom["coordinates"][:2]
        p = Point(float(x), float(y))
        _check_mode_range(p, mode, f"{path} feature {i}")
        fid = (feat.get("properties") or {}).get("id")
        out.append((None if fid is None else str(fid), p))
    return out


def _polygon_from_geojson(geom: dict, where: str) -> Polygon:
    if geom.get("type") != "Polygon":
        raise InputError(f"{where}: expected Polygon geometry, got {geom.get('type')!r}")
    rings = geom["coordinates"]
    if not rings:
        raise InputError(f"{where}: polygon has no rings")
    return Polygon.from_coords(rings[0], holes=rings[1:])


def load_zone_layer(path: Path, mode: str) -> list[tuple[Polygon, object]]:
    out = []
    for i, feat in enumerate(_load_geojson(path)):
        where = f"{path} feature {i}"
        poly = _polygon_from_geojson(feat.get("geometry") or {}, where)
        for v in poly.exterior:
            _check_mode_range(v, mode, where)
        props = feat.get("properties") or {}
        if "level" not in props:
            raise InputError(f"{where}: zone polygon is missing the 'level' property")
        out.append((poly, props["level"]))
    return out


def load_demand_layer(path: Path, mode: str) -> list[DemandArea]:
    out = []
    for i, feat in enumerate(_load_geojson(path)):
        where = f"{path} feature {i}"
        poly = _polygon_from_geojson(feat.get("geometry") or {}, where)
        for v in poly.exterior:
            _check_mode_range(v, mode, where)
        props = feat.get("properties") or {}
        if "population" not in props:
            raise InputError(f"{where}: demand area is missing the 'population' property")
        population = float(props["population"])
        aid = str(props.get("id", f"area{i + 1:02d}"))
        centroid = None
        if props.get("centroid") is not None:
            cx, cy = props["centroid"][:2]
            centroid = Point(float(cx), float(cy))
        out.append(DemandArea(id=aid, population=population,
                              centroid=centroid, geometry=poly))
    ids = [a.id for a in out]
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: demand area ids are not unique")
    return out


def load_existing_branches(path: Path, mode: str) -> list[CandidateSite]:
    sites = []
    for i, (fid, p) in enumerate(load_point_layer(path, mode)):
        sites.append(existing_site(fid or f"e{i + 1:02d}", p))
    return sites


class _Stage:
    """Context manager labeling errors with the failing pipeline stage."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is None:
            return False
        if isinstance(exc, BranchSiteError):
            exc.args = (f"[stage {self.name}] {exc}",)
            return False
        raise StageError(self.name, exc) from exc


@dataclass
class SurfaceResult:
    weights: WeightVector
    gates: tuple[GateResult, ...]
    areas: tuple[DemandArea, ...]
    mask: np.ndarray
    rasters: tuple[SuitabilityRaster, ...]
    score: ScoreRaster


@dataclass
class RunReport:
    """Everything a run produced; ``data`` alone re-renders every artifact."""

    data: dict
    rasters: tuple[SuitabilityRaster, ...]
    score: ScoreRaster | None

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"


def evaluate_weights(cfg: ProjectConfig) -> tuple[WeightVector, tuple[GateResult, ...]]:
    gates = tuple(gate(m, cfg.cr_threshold) for m in cfg.hierarchy.matrices())
    return synthesize(cfg.hierarchy, cfg.cr_threshold), gates


def build_surface(cfg: ProjectConfig) -> SurfaceResult:
    with _Stage("weights"):
        weights, gates = evaluate_weights(cfg)

    with _Stage("layers"):
        areas = tuple(load_demand_layer(cfg.demand_path, cfg.mode))
        features = {}
        for spec in cfg.criteria:
            layer_path = cfg.layer_paths[spec.id]
            if spec.kind in (KIND_CATEGORICAL, KIND_DENSITY):
                features[spec.id] = load_zone_layer(layer_path, cfg.mode)
            else:
                features[spec.id] = [p for _, p in load_point_layer(layer_path, cfg.mode)]

    with _Stage("rasterize"):
        mask = build_mask(cfg.grid, [a.geometry for a in areas])
        rasters = tuple(
            rasterize(spec, features[spec.id], cfg.grid, cfg.scheme,
                      mask=mask, mode=cfg.mode)
            for spec in cfg.criteria
        )

    with _Stage("combine"):
        score = combine(rasters, weights, cfg.combine_mode)

    return SurfaceResult(weights=weights, gates=gates, areas=areas,
                         mask=mask, rasters=rasters, score=score)


def build_candidate_set(cfg: ProjectConfig, surface: SurfaceResult
                        ) -> tuple[list[CandidateSite], list[CandidateSite]]:
    """(proposed-with-tiers, merged-with-existing)."""
    with _Stage("candidates"):
        proposed = extract(surface.score, cfg.extraction, mode=cfg.mode)
        tiered = assign_tiers(proposed)
        existing = load_existing_branches(cfg.existing_path, cfg.mode)
        merged = merge(tiered, existing)
    return tiered, merged


def run_pipeline(cfg: ProjectConfig) -> RunReport:
    """Weights -> rasters -> surface -> candidates -> coverage curve -> report."""
    surface = build_surface(cfg)
    tiered, merged = build_candidate_set(cfg, surface)
    extraction_empty = not tiered

    instance: MclpInstance | None = None
    curve = None
    if not extraction_empty:
        with _Stage("solve"):
            instance = build_coverage(surface.areas, merged, cfg.standard,
                                      mode=cfg.mode)
            curve = coverage_curve(instance, cfg.p_max, method=cfg.solver)

    with _Stage("report"):
        digests = {
            name: hashlib.sha256(p.read_bytes()).hexdigest()
            for name, p in cfg.input_files().items()
        }
        score_values = [
            [None if math.isnan(v) else float(v) for v in row]
            for row in surface.score.values
        ]
        data = {
            "config_digest": cfg.digest,
            "input_digests": digests,
            "mode": cfg.mode,
            "combine_mode": cfg.combine_mode.value,
            "scheme": {"high": cfg.scheme.high, "mid": cfg.scheme.mid,
                       "non": cfg.scheme.non},
            "grid": {"origin": [cfg.grid.origin_x, cfg.grid.origin_y],
                     "cell_size": cfg.grid.cell_size,
                     "ncols": cfg.grid.ncols, "nrows": cfg.grid.nrows},
            "weights": surface.weights.as_dict(),
            "consistency": [
                {"matrix": g.matrix_id, "cr": g.cr, "threshold": g.threshold,
                 "passed": g.passed}
                for g in surface.gates
            ],
            "criteria": [
                {"id": spec.id, "kind": spec.kind,
                 "normalization_repairs": list(spec.repairs)}
                for spec in cfg.criteria
            ],
            "extraction_empty": extraction_empty,
            "candidates": [
                {"id": s.id, "location": [s.location.x, s.location.y],
                 "score": s.score, "origin": s.origin, "tier": s.tier,
                 "fixed_open": s.fixed_open}
                for s in merged
            ],
            "solver": cfg.solver,
            "p_max": cfg.p_max,
            "curve": None if curve is None else [r.to_dict() for r in curve.rows],
            "instance": None if instance is None else instance.to_dict(),
            "score_raster": {"values": score_values},
        }
    return RunReport(data=data, rasters=surface.rasters, score=surface.score)


def _grid_from_report(data: dict) -> GridSpec:
    g = data["grid"]
    return GridSpec(origin_x=g["origin"][0], origin_y=g["origin"][1],
                    cell_size=g["cell_size"], ncols=g["ncols"], nrows=g["nrows"])


def _score_raster_from_report(data: dict) -> ScoreRaster:
    grid = _grid_from_report(data)
    values = np.array(
        [[np.nan if v is None else v for v in row]
         for row in data["score_raster"]["values"]],
        dtype=float,
    )
    mask = ~np.isnan(values)
    return ScoreRaster(grid, values, mask, CombineMode(data["combine_mode"]))


def _candidates_from_report(data: dict) -> list[CandidateSite]:
    sites = []
    for c in data["candidates"]:
        sites.append(CandidateSite(
            id=c["id"], location=Point(c["location"][0], c["location"][1]),
            score=c["score"], origin=c["origin"], tier=c["tier"],
            fixed_open=c["fixed_open"],
        ))
    return sites


def _curve_csv_from_report(data: dict) -> str | None:
    if not data.get("curve"):
        return None
    from .mclp import CoverageCurve, MclpSolution
    rows = tuple(
        MclpSolution(
            p=r["p"], selected=tuple(r["selected"]), covered=tuple(r["covered"]),
            objective=r["objective"], coverage_pct=r["coverage_pct"],
            method=r["method"], optimal=r["optimal"],
            marginal_gains=tuple(r.get("marginal_gains", ())),
        )
        for r in data["curve"]
    )
    return coverage_table_csv(CoverageCurve(rows))


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def render_report(data: dict, out_dir: str | Path) -> list[Path]:
    """Re-emit every artifact from a report body. Removes anything it wrote
    if a write fails partway.

    JSON/GeoJSON artifacts embed the config digest and mode so each file is
    self-describing; the Esri ASCII grid and the fixed-column coverage table
    have no room for extra fields and stay bare.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config_digest": data["config_digest"], "mode": data["mode"]}
    score = _score_raster_from_report(data)
    texts: list[tuple[Path, str]] = [
        (out / "report.json", _dump_json(data)),
        (out / "candidates.geojson",
         _dump_json(candidates_geojson(_candidates_from_report(data), meta=meta))),
        (out / "score.asc", esri_ascii_text(score.grid, score.values)),
        (out / "score_points.geojson",
         _dump_json(score_points_geojson(score, meta=meta))),
    ]
    csv_text = _curve_csv_from_report(data)
    if csv_text is not None:
        texts.append((out / "coverage.csv", csv_text))
        texts.append((out / "solutions.json",
                      _dump_json({**meta, "rows": data["curve"]})))
    if data.get("instance") is not None:
        texts.append((out / "instance.json",
                      _dump_json({**meta, **data["instance"]})))

    written: list[Path] = []
    try:
        for path, text in texts:
            path.write_text(text)
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def write_pipeline_artifacts(report: RunReport, out_dir: str | Path) -> list[Path]:
    """render_report plus one Esri ASCII grid per criterion raster."""
    out = Path(out_dir)
    written = render_report(report.data, out)
    raster_dir = out / "rasters"
    raster_dir.mkdir(parents=True, exist_ok=True)
    try:
        for raster in report.rasters:
            path = raster_dir / f"{raster.criterion_id}.asc"
            path.write_text(esri_ascii_text(raster.grid, raster.values))
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written
