"""End-to-end orchestration: config, prior build, increment chain, artifacts.

A run config (JSON) names the containment disk, scenario mixture, environment
fields, and the ordered search increments. `run()` builds the prior, folds
the Bayes updates over the increments, and persists one particle snapshot and
heatmap per posterior plus a beacon-failed variant and a manifest of digests.
Every random draw is keyed from the config seed: re-running a config
reproduces byte-identical snapshots regardless of worker count.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, rng
from .bayes import degraded_failure, run_chain
from .detection import (
    AcousticSearch,
    LateralRangeTable,
    Sortie,
    SortieLeg,
    SweepRegion,
    acoustic_failure,
    surface_search_failure,
    sweep_failure,
)
from .drift import DriftConfig, GriddedEnvironment, LeewayModel, RecoveryObservation, drift_particles, path_times
from .environment import PerturbationParams, VelocityField
from .geo import (
    Disk,
    DomainError,
    GeoPoint,
    GridSpec,
    LocalFrame,
    ParticleSet,
    grid_aggregate,
    linestring_from_geojson,
    polygon_from_geojson,
)
from .prior import ScenarioSpec, build_scenario, likelihood_mixture, mix
from .units import NM_M, parse_time

OUTPUT_ROOT_ENV = "DRIFTSEARCH_OUTPUT_ROOT"
_CHUNK = 4096


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Validated run description; see fixtures/mini/config.json for an example."""

    seed: int
    n_particles: int
    crash_time_min: float
    disk: Disk
    cell_size_m: float
    margin_cells: int
    environment: GriddedEnvironment
    leeway: LeewayModel
    drift: DriftConfig
    scenarios: list[dict]
    increments: list[dict]
    workers: int
    output_dir: Path
    base_dir: Path
    raw: dict
    current_params: PerturbationParams
    wind_params: PerturbationParams
    prior_mode: str = "mixture"

    @property
    def frame(self) -> LocalFrame:
        return self.disk.frame

    def grid_spec(self, cell_size_m: float | None = None) -> GridSpec:
        return GridSpec.covering_disk(
            self.disk, cell_size_m or self.cell_size_m, self.margin_cells
        )

    def config_digest(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    raw = json.loads(path.read_text())
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: str | Path = ".") -> RunConfig:
    base_dir = Path(base_dir)

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base_dir / q

    try:
        seed = int(raw["seed"])
        n_particles = int(raw.get("n_particles", 75_000))
        if n_particles <= 0:
            raise DomainError("n_particles must be positive")
        crash_time = parse_time(raw["crash_time"])
        d = raw["disk"]
        disk = Disk(
            GeoPoint(float(d["center_lat"]), float(d["center_lon"])),
            float(d.get("radius_nm", 40.0)) * NM_M,
        )
        g = raw.get("grid", {})
        cell_size_m = float(g.get("cell_size_m", NM_M))
        margin_cells = int(g.get("margin_cells", 1))
        e = raw["environment"]
        current = VelocityField.from_csv(resolve(e["current_csv"]), kind="current")
        wind = VelocityField.from_csv(resolve(e["wind_csv"]), kind="wind")
        env = GriddedEnvironment(current, wind)
        half_life = float(e.get("noise_half_life_min", 60.0))
        alpha = float(np.log(2.0)) / half_life
        cur_params = PerturbationParams(float(e.get("current_sigma_kts", 0.22)), alpha)
        wind_params = PerturbationParams(float(e.get("wind_sigma_kts", 2.0)), alpha)
        lw = raw.get("leeway", {})
        leeway = LeewayModel(
            downwind_slope=float(lw.get("downwind_slope", 1.17)),
            downwind_offset_cms=float(lw.get("downwind_offset_cms", 10.2)),
            crosswind_slope=float(lw.get("crosswind_slope", 0.04)),
            crosswind_offset_cms=float(lw.get("crosswind_offset_cms", 3.9)),
            downwind_residual_std_cms=float(lw.get("downwind_residual_std_cms", 3.0)),
            crosswind_residual_std_cms=float(lw.get("crosswind_residual_std_cms", 2.0)),
            crosswind_switch_per_hour=float(lw.get("crosswind_switch_per_hour", 0.25)),
            alpha_per_min=alpha,
        )
        dr = raw.get("drift", {})
        drift_cfg = DriftConfig(
            time_step_min=float(dr.get("time_step_min", 60.0)),
            direction="forward",
            stochastic=bool(dr.get("stochastic", True)),
        )
        scenarios = list(raw["scenarios"])
        weights = [float(s["weight"]) for s in scenarios]
        prior_mode = raw.get("prior_mode", "mixture")
        if prior_mode not in ("mixture", "likelihood"):
            raise DomainError(f"unknown prior_mode: {prior_mode}")
        if prior_mode == "mixture" and abs(sum(weights) - 1.0) > 1e-9:
            raise DomainError(f"scenario weights must sum to 1, got {sum(weights)}")
        increments = list(raw.get("increments", []))
        last = -np.inf
        for inc in increments:
            if "label" not in inc or "type" not in inc:
                raise DomainError("each increment needs label and type")
            t = parse_time(inc.get("start_time", inc.get("time", crash_time)))
            if t < last:
                raise DomainError("increments must be ordered by time")
            last = t
        workers = int(raw.get("workers", 1))
        out_dir = Path(raw.get("output_dir", "runs/out"))
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if not out_dir.is_absolute():
            out_dir = (Path(root) if root else base_dir) / out_dir
    except KeyError as exc:
        raise DomainError(f"config missing required key: {exc}") from exc
    return RunConfig(
        seed=seed,
        n_particles=n_particles,
        crash_time_min=crash_time,
        disk=disk,
        cell_size_m=cell_size_m,
        margin_cells=margin_cells,
        environment=env,
        leeway=leeway,
        drift=drift_cfg,
        scenarios=scenarios,
        increments=increments,
        workers=workers,
        output_dir=out_dir,
        base_dir=base_dir,
        raw=raw,
        current_params=cur_params,
        wind_params=wind_params,
        prior_mode=prior_mode,
    )


# -- prior construction ---------------------------------------------------------


def _load_observations(spec: dict, base_dir: Path) -> list[RecoveryObservation]:
    out = []
    for obs in spec["observations"]:
        if "polygon" in obs:
            ring = tuple(GeoPoint(float(a), float(o)) for a, o in obs["polygon"])
        else:
            gj = json.loads((base_dir / obs["polygon_geojson"]).read_text())
            if gj.get("type") == "FeatureCollection":
                gj = gj["features"][int(obs.get("polygon_index", 0))]
            ring = tuple(polygon_from_geojson(gj))
        out.append(
            RecoveryObservation(
                ring, parse_time(obs["recovery_time"]), int(obs.get("samples", 16_000))
            )
        )
    return out


def _scenario_spec(raw: dict, config: "RunConfig") -> ScenarioSpec:
    kind = raw["kind"]
    center = raw.get("center")
    return ScenarioSpec(
        kind=kind,
        weight=float(raw["weight"]),
        label=raw.get("label", kind),
        samples=int(raw.get("samples", config.n_particles)),
        sigma_m=float(raw.get("sigma_nm", 8.0)) * NM_M,
        center=GeoPoint(float(center[0]), float(center[1])) if center else None,
        observations=tuple(_load_observations(raw, config.base_dir))
        if kind == "reverse_drift"
        else (),
    )


def build_prior(config: RunConfig) -> ParticleSet:
    """Assemble the scenario prior for this config, tagged by scenario.

    The default composes the weighted mixture. ``"prior_mode":
    "likelihood"`` instead treats the reverse-drift cloud as a likelihood
    multiplying an equal mix of the other two scenarios.
    """
    clouds: list[tuple[ParticleSet, float, str]] = []
    by_kind: dict[str, ParticleSet] = {}
    for i, raw in enumerate(config.scenarios):
        spec = _scenario_spec(raw, config)
        if spec.weight == 0.0 and config.prior_mode == "mixture":
            continue
        cloud = build_scenario(
            spec,
            config.disk,
            config.seed + i,
            env=config.environment,
            drift_cfg=DriftConfig(
                config.drift.time_step_min, "reverse", config.drift.stochastic
            ),
            crash_time_min=config.crash_time_min,
            leeway=config.leeway,
            frame=config.frame,
            workers=config.workers,
            cur_params=config.current_params,
            wind_params=config.wind_params,
        )
        clouds.append((cloud, spec.weight, spec.label))
        by_kind[spec.kind] = cloud
    if config.prior_mode == "likelihood":
        missing = {"uniform_disk", "circular_normal", "reverse_drift"} - set(by_kind)
        if missing:
            raise DomainError(f"likelihood prior mode needs scenarios {sorted(missing)}")
        return likelihood_mixture(
            by_kind["uniform_disk"],
            by_kind["circular_normal"],
            by_kind["reverse_drift"],
            config.frame,
            config.n_particles,
            config.seed,
        )
    return mix(clouds, config.n_particles, config.seed)


# -- increment evaluation --------------------------------------------------------


def _parse_sorties(spec: dict, base_dir: Path) -> tuple[list[Sortie], dict]:
    src = spec["sorties"]
    data = json.loads((base_dir / src).read_text()) if isinstance(src, str) else src
    sorties = []
    for s in data["sorties"] if isinstance(data, dict) else data:
        legs = tuple(
            SortieLeg(
                GeoPoint(float(l["start"][0]), float(l["start"][1])),
                GeoPoint(float(l["end"][0]), float(l["end"][1])),
                parse_time(l["start_time"]),
                parse_time(l["end_time"]),
                float(l["speed_kts"]),
                float(l["altitude_ft"]),
                str(l.get("visibility", "")),
                str(l.get("sea_state", "")),
            )
            for l in s["legs"]
        )
        sorties.append(Sortie(str(s.get("platform", "aircraft")), legs))
    tables = {
        platform: LateralRangeTable.from_csv(base_dir / p)
        for platform, p in spec["tables"].items()
    }
    return sorties, tables


def _geojson_features(src, base_dir: Path) -> list[dict]:
    data = json.loads((base_dir / src).read_text()) if isinstance(src, str) else src
    if data.get("type") == "FeatureCollection":
        return [f["geometry"] for f in data["features"]]
    if data.get("type") == "Feature":
        return [data["geometry"]]
    return [data]


class SurfaceIncrement:
    """Six-day (configurable) drifting-object search scored by CPA tables."""

    def __init__(self, label, sorties, tables, config: RunConfig, spec: dict):
        self.label = label
        self.sorties = sorties
        self.tables = tables
        self.config = config
        self.beta = float(spec.get("ineffective_probability", 0.7))
        drift_days = float(spec.get("drift_days", 6.0))
        t0 = parse_time(spec.get("drift_start", spec.get("start_time", config.crash_time_min)))
        self.t0 = t0
        self.t1 = t0 + drift_days * 24 * 60
        self.times = path_times(self.t0, self.t1, config.drift.time_step_min)

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        cfg = self.config
        x0, y0 = cfg.frame.project_arrays(ps.lats, ps.lons)
        q = np.empty(len(ps))
        drift_cfg = DriftConfig(
            cfg.drift.time_step_min, "forward", cfg.drift.stochastic
        )
        # outer blocks bound path memory; inner chunking feeds the workers
        block = _CHUNK * max(1, cfg.workers)
        for s in range(0, len(ps), block):
            e = min(s + block, len(ps))
            px, py = drift_particles(
                x0[s:e],
                y0[s:e],
                self.times,
                cfg.environment,
                drift_cfg,
                cfg.leeway,
                cfg.frame,
                cfg.seed,
                ps.ids[s:e],
                phase=rng.PHASE_SURFACE_DRIFT,
                workers=cfg.workers,
                cur_params=cfg.current_params,
                wind_params=cfg.wind_params,
            )
            q[s:e] = surface_search_failure(
                px, py, self.times, self.sorties, self.tables, cfg.frame
            )
        return degraded_failure(q, self.beta, self.label).failure


class AcousticIncrement:
    def __init__(self, label, search: AcousticSearch, frame: LocalFrame):
        self.label = label
        self.search = search
        self.frame = frame

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        return acoustic_failure(ps, self.search, self.frame)


class SweepIncrement:
    def __init__(self, label, region: SweepRegion):
        self.label = label
        self.region = region

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        return sweep_failure(ps, self.region)


class NullIncrement:
    """Stands in for an acoustic increment when the beacons are assumed dead."""

    def __init__(self, label):
        self.label = label

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        return np.ones(len(ps))


class LazyIncrement:
    """Defers parsing/IO to first evaluation so config errors fail their own
    stage inside the chain (partial artifacts stay on disk)."""

    def __init__(self, spec: dict, config: RunConfig):
        self.spec = spec
        self.config = config
        self.label = spec["label"]
        self._built = None

    def build(self):
        if self._built is None:
            self._built = build_increment(self.spec, self.config)
        return self._built

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        return self.build().evaluate(ps)


def build_increment(spec: dict, config: RunConfig):
    kind = spec["type"]
    label = spec["label"]
    if kind == "surface":
        sorties, tables = _parse_sorties(spec, config.base_dir)
        return SurfaceIncrement(label, sorties, tables, config, spec)
    if kind == "acoustic":
        lines = [
            tuple(linestring_from_geojson(g))
            for g in _geojson_features(spec["tracklines"], config.base_dir)
        ]
        search = AcousticSearch(
            tracklines=tuple(lines),
            lateral_range_m=float(spec.get("lateral_range_m", 1730.0)),
            sensor_cap=float(spec.get("sensor_cap", 0.9)),
            beacon_survival=float(spec.get("beacon_survival", 0.8)),
            weight_independent=float(spec.get("weight_independent", 0.25)),
        )
        return AcousticIncrement(label, search, config.frame)
    if kind == "sweep":
        rings = tuple(
            tuple(polygon_from_geojson(g))
            for g in _geojson_features(spec["regions"], config.base_dir)
        )
        region = SweepRegion(rings, float(spec.get("p_inside", 0.9)))
        return SweepIncrement(label, region)
    raise DomainError(f"unknown increment type: {kind}")


# -- persistence -----------------------------------------------------------------


def snapshot_csv(ps: ParticleSet) -> bytes:
    """Deterministic particle snapshot: id, lat, lon, weight, scenario."""
    buf = io.StringIO()
    buf.write("id,lat,lon,weight,scenario\n")
    scen = ps.scenarios
    for i in range(len(ps)):
        tag = "" if scen is None else str(scen[i])
        # repr of the python float: shortest round-trip decimal, stable bytes
        buf.write(
            f"{int(ps.ids[i])},{float(ps.lats[i])!r},{float(ps.lons[i])!r},{float(ps.weights[i])!r},{tag}\n"
        )
    return buf.getvalue().encode()


def load_snapshot_csv(data: bytes) -> ParticleSet:
    import csv as _csv

    rows = list(_csv.DictReader(io.StringIO(data.decode())))
    ids = np.array([int(r["id"]) for r in rows], dtype=np.int64)
    lats = np.array([float(r["lat"]) for r in rows])
    lons = np.array([float(r["lon"]) for r in rows])
    weights = np.array([float(r["weight"]) for r in rows])
    scen = np.array([r["scenario"] for r in rows])
    return ParticleSet(ids, lats, lons, weights, scen if any(scen) else None)


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunManifest:
    config_digest: str
    versions: dict
    stages: list[dict]
    config: dict  # full increment descriptions, parameters and seeds
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None
    beacon_failed: dict | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_digest": self.config_digest,
                "versions": self.versions,
                "stages": self.stages,
                "status": self.status,
                "failed_stage": self.failed_stage,
                "error": self.error,
                "beacon_failed": self.beacon_failed,
                "config": self.config,
            },
            indent=2,
        )


def _persist_snapshot(out: Path, index: int, label: str, ps: ParticleSet, grid: GridSpec):
    safe = label.replace("/", "_").replace(" ", "_")
    snap_dir = out / "snapshots"
    heat_dir = out / "heatmaps"
    snap_dir.mkdir(parents=True, exist_ok=True)
    heat_dir.mkdir(parents=True, exist_ok=True)
    data = snapshot_csv(ps)
    (snap_dir / f"{index:03d}_{safe}.csv").write_bytes(data)
    cm = grid_aggregate(ps, grid)
    png = cm.to_png()
    (heat_dir / f"{index:03d}_{safe}.png").write_bytes(png)
    (heat_dir / f"{index:03d}_{safe}.csv").write_text(cm.to_csv())
    return _digest(data), _digest(png)


def run(config: RunConfig) -> RunManifest:
    """Execute the configured pipeline; artifacts land in config.output_dir."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = config.grid_spec()
    versions = {"driftsearch": __version__, "numpy": np.__version__}
    stages: list[dict] = []
    manifest = RunManifest(config.config_digest(), versions, stages, config.raw)

    t_start = time.perf_counter()
    prior = build_prior(config)
    stages.append({"label": "prior", "seconds": round(time.perf_counter() - t_start, 3)})

    increments = [LazyIncrement(spec, config) for spec in config.increments]
    snapshots: list[tuple[str, ParticleSet]] = []

    def persist(label: str, ps: ParticleSet):
        idx = len(snapshots)
        snap_digest, heat_digest = _persist_snapshot(out, idx, label, ps, grid)
        snapshots.append((label, ps))
        entry = next((s for s in stages if s["label"] == label), None)
        if entry is None:
            entry = {"label": label}
            stages.append(entry)
        entry["snapshot_digest"] = snap_digest
        entry["heatmap_digest"] = heat_digest

    stage_clock = {"t": time.perf_counter()}

    def on_snapshot(label: str, ps: ParticleSet):
        now = time.perf_counter()
        if label != "prior":
            stages.append({"label": label, "seconds": round(now - stage_clock["t"], 3)})
        stage_clock["t"] = now
        persist(label, ps)

    chain = run_chain(prior, increments, on_snapshot=on_snapshot)
    if chain.failed_stage is not None:
        manifest.status = "failed"
        manifest.failed_stage = chain.failed_stage
        manifest.error = repr(chain.error)
        (out / "manifest.json").write_text(manifest.to_json())
        return manifest

    # beacon-failed variant: acoustic increments carry no information
    variant_incs = [
        NullIncrement(inc.label) if isinstance(inc.build(), AcousticIncrement) else inc
        for inc in increments
    ]
    if any(isinstance(i, NullIncrement) for i in variant_incs):
        t0 = time.perf_counter()
        variant_chain = run_chain(prior, variant_incs)
        if variant_chain.failed_stage is None:
            bf_dir = out / "beacon_failed"
            bf_dir.mkdir(exist_ok=True)
            ps = variant_chain.final
            data = snapshot_csv(ps)
            (bf_dir / "final.csv").write_bytes(data)
            cm = grid_aggregate(ps, grid)
            png = cm.to_png()
            (bf_dir / "final.png").write_bytes(png)
            manifest.beacon_failed = {
                "snapshot_digest": _digest(data),
                "heatmap_digest": _digest(png),
                "seconds": round(time.perf_counter() - t0, 3),
            }
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest
