"""Per-increment detection and failure probabilities.

Three sensor families:

* visual sortie legs: closest-point-of-approach range against a drifting
  particle, looked up in a lateral-range table keyed by altitude/speed band
  and environment descriptors; independent detection per leg;
* passive acoustic tracklines: definite-range (cookie-cutter) detection of
  the locator-beacon system within a lateral range, with beacon survival
  folded in;
* swept regions: uniform detection probability inside a polygon set.

All functions return *failure* probabilities (1 - detection), the quantity
the Bayes update consumes. A particle untouched by an increment has failure
exactly 1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import shapely

from . import kernels
from .drift import DriftPath
from .geo import DomainError, GeoPoint, LocalFrame, ParticleSet

DEFAULT_ACOUSTIC_RANGE_M = 1730.0
DEFAULT_SENSOR_CAP = 0.9
DEFAULT_BEACON_SURVIVAL = 0.8
DEFAULT_WEIGHT_INDEPENDENT = 0.25
DEFAULT_SWEEP_P = 0.9


@dataclass(frozen=True)
class SortieLeg:
    """One straight flight (or ship) leg at constant speed and altitude."""

    start: GeoPoint
    end: GeoPoint
    start_time_min: float
    end_time_min: float
    speed_kts: float
    altitude_ft: float
    visibility: str = ""
    sea_state: str = ""

    def __post_init__(self) -> None:
        if self.end_time_min <= self.start_time_min:
            raise DomainError("leg end time must be after start time")
        if self.speed_kts <= 0:
            raise DomainError("leg speed must be positive")


@dataclass(frozen=True)
class Sortie:
    """A platform's sequence of legs; the platform picks the range table."""

    platform: str
    legs: tuple[SortieLeg, ...]


@dataclass(frozen=True)
class _Band:
    altitude_min_ft: float
    altitude_max_ft: float
    speed_min_kts: float
    speed_max_kts: float
    visibility: str
    sea_state: str

    def matches(self, leg: SortieLeg) -> bool:
        return (
            self.altitude_min_ft <= leg.altitude_ft < self.altitude_max_ft
            and self.speed_min_kts <= leg.speed_kts < self.speed_max_kts
            and self.visibility == leg.visibility
            and self.sea_state == leg.sea_state
        )


class LateralRangeTable:
    """Detection probability vs lateral range, per condition band.

    CSV columns: altitude_min_ft, altitude_max_ft, speed_min_kts,
    speed_max_kts, visibility, sea_state, range_m, probability. Rows in one
    band form the breakpoint curve: ranges strictly increasing, probabilities
    nonincreasing in [0, 1]; beyond the last range detection is 0.
    """

    def __init__(self, bands: list[tuple[_Band, np.ndarray, np.ndarray]]):
        if not bands:
            raise DomainError("lateral-range table has no bands")
        for band, ranges, probs in bands:
            if np.any(np.diff(ranges) <= 0):
                raise DomainError("breakpoint ranges must be strictly increasing")
            if np.any(probs < 0) or np.any(probs > 1):
                raise DomainError("probabilities must lie in [0, 1]")
            if np.any(np.diff(probs) > 0):
                raise DomainError("detection probability must not increase with range")
        self.bands = bands

    @classmethod
    def from_csv(cls, text_or_path) -> "LateralRangeTable":
        if hasattr(text_or_path, "read"):
            text = text_or_path.read()
        else:
            text = open(text_or_path, "r", encoding="utf-8").read()
        reader = csv.DictReader(io.StringIO(text))
        grouped: dict[_Band, list[tuple[float, float]]] = {}
        for row in reader:
            band = _Band(
                float(row["altitude_min_ft"]),
                float(row["altitude_max_ft"]),
                float(row["speed_min_kts"]),
                float(row["speed_max_kts"]),
                row["visibility"].strip(),
                row["sea_state"].strip(),
            )
            grouped.setdefault(band, []).append(
                (float(row["range_m"]), float(row["probability"]))
            )
        bands = []
        for band, pts in grouped.items():
            pts.sort(key=lambda rp: rp[0])
            ranges = np.array([r for r, _ in pts])
            probs = np.array([p for _, p in pts])
            bands.append((band, ranges, probs))
        return cls(bands)

    def curve_for(self, leg: SortieLeg) -> tuple[np.ndarray, np.ndarray]:
        for band, ranges, probs in self.bands:
            if band.matches(leg):
                return ranges, probs
        raise DomainError(
            f"no table band for altitude {leg.altitude_ft} ft, speed {leg.speed_kts} kts, "
            f"visibility {leg.visibility!r}, sea state {leg.sea_state!r}"
        )

    def detection_probability(self, leg: SortieLeg, cpa_m: float | np.ndarray) -> np.ndarray:
        ranges, probs = self.curve_for(leg)
        return np.interp(cpa_m, ranges, probs, left=probs[0], right=0.0)


@dataclass(frozen=True)
class AcousticSearch:
    """Passive acoustic tracklines with the beacon-system detection model."""

    tracklines: tuple[tuple[GeoPoint, ...], ...]
    lateral_range_m: float = DEFAULT_ACOUSTIC_RANGE_M
    sensor_cap: float = DEFAULT_SENSOR_CAP
    beacon_survival: float = DEFAULT_BEACON_SURVIVAL
    weight_independent: float = DEFAULT_WEIGHT_INDEPENDENT

    def __post_init__(self) -> None:
        for p in (self.sensor_cap, self.beacon_survival, self.weight_independent):
            if not 0.0 <= p <= 1.0:
                raise DomainError("probabilities must lie in [0, 1]")
        if self.lateral_range_m <= 0:
            raise DomainError("lateral range must be positive")
        if not self.tracklines or any(len(t) < 2 for t in self.tracklines):
            raise DomainError("each trackline needs at least 2 points")

    def segments(self, frame: LocalFrame):
        ax, ay, bx, by = [], [], [], []
        for line in self.tracklines:
            lats = np.array([p.lat for p in line])
            lons = np.array([p.lon for p in line])
            xs, ys = frame.project_arrays(lats, lons)
            ax.extend(xs[:-1])
            ay.extend(ys[:-1])
            bx.extend(xs[1:])
            by.extend(ys[1:])
        return (np.array(ax), np.array(ay), np.array(bx), np.array(by))


@dataclass(frozen=True)
class SweepRegion:
    """Polygon set with one uniform detection probability inside."""

    polygons: tuple[tuple[GeoPoint, ...], ...]
    p_inside: float = DEFAULT_SWEEP_P

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_inside <= 1.0:
            raise DomainError("p_inside must lie in [0, 1]")
        if not self.polygons:
            raise DomainError("sweep region needs at least one polygon")
        for ring in self.polygons:
            geom = shapely.Polygon([(p.lon, p.lat) for p in ring])
            if not geom.is_valid or geom.area <= 0:
                raise DomainError("degenerate sweep polygon")

    def geometry(self):
        polys = [shapely.Polygon([(p.lon, p.lat) for p in ring]) for ring in self.polygons]
        return shapely.union_all(polys)


# -- beacon-system arithmetic --------------------------------------------------


def beacon_system_detection(
    p_det: float = DEFAULT_SENSOR_CAP,
    p_surv: float = DEFAULT_BEACON_SURVIVAL,
    w_indep: float = DEFAULT_WEIGHT_INDEPENDENT,
) -> float:
    """Probability of detecting at least one of the two locator beacons,
    given the wreck lies within lateral range.

    The independent branch assumes each beacon survives with p_surv and is
    detected with p_det on its own; the dependent branch ties both beacons'
    survival together. The returned value mixes the branches with w_indep.
    """
    for p in (p_det, p_surv, w_indep):
        if not 0.0 <= p <= 1.0:
            raise DomainError("probabilities must lie in [0, 1]")
    p_indep = (1.0 - (1.0 - p_det) ** 2) * p_surv**2 + p_det * 2.0 * p_surv * (1.0 - p_surv)
    p_dep = p_det * p_surv
    return w_indep * p_indep + (1.0 - w_indep) * p_dep


# -- failure computations ------------------------------------------------------


def leg_failure(path: DriftPath, leg: SortieLeg, table: LateralRangeTable) -> float:
    """1 - detection probability for one leg against one drifting particle."""
    q = leg_failure_batch(
        path.xs[None, :], path.ys[None, :], path.times, leg, table, path.frame
    )
    return float(q[0])


def leg_failure_batch(
    px: np.ndarray,
    py: np.ndarray,
    times: np.ndarray,
    leg: SortieLeg,
    table: LateralRangeTable,
    frame: LocalFrame,
) -> np.ndarray:
    ax, ay = frame.project(leg.start)
    bx, by = frame.project(leg.end)
    cpa = kernels.cpa_ranges(
        px,
        py,
        times,
        np.array([ax]),
        np.array([ay]),
        np.array([bx]),
        np.array([by]),
        np.array([leg.start_time_min]),
        np.array([leg.end_time_min]),
    )[:, 0]
    return 1.0 - table.detection_probability(leg, cpa)


def surface_search_failure(
    px: np.ndarray,
    py: np.ndarray,
    times: np.ndarray,
    sorties: list[Sortie],
    tables: LateralRangeTable | dict[str, LateralRangeTable],
    frame: LocalFrame,
) -> np.ndarray:
    """Product over every leg of every sortie of the per-leg failure.

    Legs are independent detection opportunities; ship sorties go through the
    same machinery with their platform's table. ``px/py`` are particle paths
    (n, len(times)) in frame meters.
    """
    q = np.ones(px.shape[0])
    for sortie in sorties:
        table = tables[sortie.platform] if isinstance(tables, dict) else tables
        for leg in sortie.legs:
            q = q * leg_failure_batch(px, py, times, leg, table, frame)
    return q


def acoustic_failure(
    ps: ParticleSet, search: AcousticSearch, frame: LocalFrame | None = None
) -> np.ndarray:
    """Cookie-cutter acoustic model: one multiplication for in-range particles.

    A particle within the lateral range of any trackline gets failure
    1 - beacon_system_detection(...); everything else is untouched (1.0).
    The boundary is closed: exactly at range counts as in range.
    """
    if frame is None:
        first = search.tracklines[0][0]
        frame = LocalFrame(first)
    x, y = frame.project_arrays(ps.lats, ps.lons)
    segs = search.segments(frame)
    dist = kernels.min_polyline_distance(x, y, *segs)
    p_d = beacon_system_detection(
        search.sensor_cap, search.beacon_survival, search.weight_independent
    )
    return np.where(dist <= search.lateral_range_m, 1.0 - p_d, 1.0)


def sweep_failure(ps: ParticleSet, region: SweepRegion) -> np.ndarray:
    """1 - p_inside for particles in the region (boundary counts as inside)."""
    geom = region.geometry()
    shapely.prepare(geom)
    pts = shapely.points(np.column_stack([ps.lons, ps.lats]))
    inside = shapely.intersects(geom, pts)  # boundary points intersect: closed region
    return np.where(inside, 1.0 - region.p_inside, 1.0)
