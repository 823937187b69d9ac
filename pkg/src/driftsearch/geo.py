"""Geographic primitives: points, local tangent frames, particle sets, grids.

The local projection is equirectangular about a fixed origin: over the
operational scale here (a 40 NM disk near the equator) the distortion against
true geodesics is below 0.1%, which is dwarfed by every other uncertainty in
the problem. Points project to (x east, y north) meters.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .units import METERS_PER_DEG, NM_M


class DomainError(ValueError):
    """Input outside an operation's documented domain."""


COORD_TOL_DEG = 1e-9
MAX_FRAME_RANGE_M = 500 * NM_M


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in degrees, lat in [-90, 90], lon in [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise DomainError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon < 180.0:
            raise DomainError(f"longitude out of range: {self.lon}")

    def approx_eq(self, other: "GeoPoint", tol: float = COORD_TOL_DEG) -> bool:
        return abs(self.lat - other.lat) <= tol and abs(self.lon - other.lon) <= tol


@dataclass(frozen=True)
class LocalFrame:
    """Equirectangular tangent frame: x = R·Δlon·cos(lat₀), y = R·Δlat."""

    origin: GeoPoint

    @property
    def cos_lat0(self) -> float:
        return math.cos(math.radians(self.origin.lat))

    def project(self, p: GeoPoint) -> tuple[float, float]:
        x, y = self.project_arrays(np.array([p.lat]), np.array([p.lon]))
        return float(x[0]), float(y[0])

    def unproject(self, x: float, y: float) -> GeoPoint:
        lats, lons = self.unproject_arrays(np.array([x]), np.array([y]))
        return GeoPoint(float(lats[0]), float(lons[0]))

    def project_arrays(self, lats: np.ndarray, lons: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        dlon = lons - self.origin.lon
        # wrap so that points straddling the antimeridian stay local
        dlon = (dlon + 180.0) % 360.0 - 180.0
        x = dlon * METERS_PER_DEG * self.cos_lat0
        y = (lats - self.origin.lat) * METERS_PER_DEG
        r = np.hypot(x, y)
        if np.any(r > MAX_FRAME_RANGE_M):
            raise DomainError("point beyond 500 NM of frame origin")
        return x, y

    def unproject_arrays(self, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        lats = self.origin.lat + ys / METERS_PER_DEG
        lons = self.origin.lon + xs / (METERS_PER_DEG * self.cos_lat0)
        lons = (lons + 180.0) % 360.0 - 180.0
        return lats, lons


def project(frame: LocalFrame, p: GeoPoint) -> tuple[float, float]:
    """Project ``p`` into ``frame`` meters; error beyond 500 NM."""
    return frame.project(p)


@dataclass(frozen=True)
class Disk:
    """Containment disk; membership measured in a tangent frame at its center."""

    center: GeoPoint
    radius_m: float

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise DomainError(f"disk radius must be positive: {self.radius_m}")

    @property
    def frame(self) -> LocalFrame:
        return LocalFrame(self.center)

    def contains(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        x, y = self.frame.project_arrays(lats, lons)
        return np.hypot(x, y) <= self.radius_m


@dataclass(frozen=True)
class Particle:
    """Single-particle view: location hypothesis with probability mass."""

    id: int
    position: GeoPoint
    weight: float
    scenario: str = ""
    path: tuple[tuple[float, GeoPoint], ...] | None = None  # (time_min, point)


WEIGHT_SUM_TOL = 1e-9


class ParticleSet:
    """Columnar, immutable set of weighted location particles.

    Weights must be nonnegative and sum to 1 within 1e-9. Arrays are copied on
    construction and frozen, so sets can be shared across workers.
    """

    __slots__ = ("ids", "lats", "lons", "weights", "scenarios", "beacon_functional")

    def __init__(
        self,
        ids: np.ndarray,
        lats: np.ndarray,
        lons: np.ndarray,
        weights: np.ndarray,
        scenarios: np.ndarray | None = None,
        beacon_functional: np.ndarray | None = None,
    ) -> None:
        ids = np.array(ids, dtype=np.int64)
        lats = np.array(lats, dtype=np.float64)
        lons = np.array(lons, dtype=np.float64)
        weights = np.array(weights, dtype=np.float64)
        n = len(ids)
        if not (len(lats) == len(lons) == len(weights) == n):
            raise ValueError("particle arrays must share one length")
        if n == 0:
            raise ValueError("a particle set cannot be empty")
        if np.any(weights < 0):
            raise ValueError("negative particle weight")
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1 ± {WEIGHT_SUM_TOL}")
        if scenarios is not None:
            scenarios = np.array(scenarios)
            if len(scenarios) != n:
                raise ValueError("scenario tags must match particle count")
        if beacon_functional is not None:
            beacon_functional = np.array(beacon_functional, dtype=np.float64)
            if len(beacon_functional) != n:
                raise ValueError("beacon-state priors must match particle count")
        for arr in (ids, lats, lons, weights, scenarios, beacon_functional):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "scenarios", scenarios)
        object.__setattr__(self, "beacon_functional", beacon_functional)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("ParticleSet is immutable")

    def __len__(self) -> int:
        return len(self.ids)

    def particle(self, i: int) -> Particle:
        return Particle(
            id=int(self.ids[i]),
            position=GeoPoint(float(self.lats[i]), float(self.lons[i])),
            weight=float(self.weights[i]),
            scenario="" if self.scenarios is None else str(self.scenarios[i]),
        )

    @classmethod
    def equal_weights(
        cls,
        lats: np.ndarray,
        lons: np.ndarray,
        scenarios: np.ndarray | None = None,
        ids: np.ndarray | None = None,
    ) -> "ParticleSet":
        n = len(lats)
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        return cls(ids, lats, lons, np.full(n, 1.0 / n), scenarios)

    def with_weights(self, weights: np.ndarray) -> "ParticleSet":
        return ParticleSet(self.ids, self.lats, self.lons, weights, self.scenarios, self.beacon_functional)

    def with_beacon_prior(self, functional: np.ndarray | float) -> "ParticleSet":
        arr = np.broadcast_to(np.asarray(functional, dtype=np.float64), (len(self),))
        return ParticleSet(self.ids, self.lats, self.lons, self.weights, self.scenarios, arr)

    def subset(self, mask: np.ndarray, renormalize: bool = False) -> "ParticleSet":
        if not np.any(mask):
            raise DomainError("all mass outside support")
        w = self.weights[mask]
        if renormalize:
            w = w / np.sum(w)
        return ParticleSet(
            self.ids[mask],
            self.lats[mask],
            self.lons[mask],
            w,
            None if self.scenarios is None else self.scenarios[mask],
            None if self.beacon_functional is None else self.beacon_functional[mask],
        )


def truncate_renormalize(ps: ParticleSet, disk: Disk) -> ParticleSet:
    """Drop particles outside ``disk`` and rescale the survivors to total 1.

    Particles are removed (not zero-weighted) so the set size stays meaningful
    for later resampling decisions. Raises if nothing survives.
    """
    inside = disk.contains(ps.lats, ps.lons)
    return ps.subset(inside, renormalize=True)


@dataclass(frozen=True)
class GridSpec:
    """Cell grid over a frame extent; cells are half-open [lo, hi) in x and y."""

    frame: LocalFrame
    cell_size_m: float
    extent: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self) -> None:
        if self.cell_size_m <= 0:
            raise DomainError("cell size must be positive")
        xmin, ymin, xmax, ymax = self.extent
        if not (xmax > xmin and ymax > ymin):
            raise DomainError("degenerate grid extent")

    @property
    def nx(self) -> int:
        xmin, _, xmax, _ = self.extent
        return int(math.ceil((xmax - xmin) / self.cell_size_m))

    @property
    def ny(self) -> int:
        _, ymin, _, ymax = self.extent
        return int(math.ceil((ymax - ymin) / self.cell_size_m))

    @classmethod
    def covering_disk(cls, disk: Disk, cell_size_m: float, margin_cells: int = 1) -> "GridSpec":
        pad = margin_cells * cell_size_m
        r = disk.radius_m + pad
        return cls(disk.frame, cell_size_m, (-r, -r, r, r))


@dataclass(frozen=True)
class CellProbabilityMap:
    """Per-cell probability mass plus whatever fell off the extent."""

    grid: GridSpec
    values: np.ndarray  # (ny, nx), row j = y index
    off_extent_mass: float

    def __post_init__(self) -> None:
        self.values.setflags(write=False)

    @property
    def total(self) -> float:
        return float(np.sum(self.values) + self.off_extent_mass)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cell_x", "cell_y", "probability"])
        ny, nx = self.values.shape
        for j in range(ny):
            for i in range(nx):
                writer.writerow([i, j, repr(float(self.values[j, i]))])
        return buf.getvalue()

    def to_gray(self) -> np.ndarray:
        """8-bit grayscale raster, black = highest-probability cell, north up."""
        vmax = float(np.max(self.values))
        if vmax <= 0.0:
            gray = np.full(self.values.shape, 255, dtype=np.uint8)
        else:
            scaled = np.rint(255.0 * (1.0 - self.values / vmax))
            gray = scaled.astype(np.uint8)
        return gray[::-1, :]  # row 0 = northernmost

    def to_pgm(self) -> bytes:
        gray = self.to_gray()
        ny, nx = gray.shape
        header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
        return header + gray.tobytes()

    def to_png(self) -> bytes:
        from PIL import Image

        img = Image.fromarray(self.to_gray(), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        xmin, ymin, _, _ = self.grid.extent
        cs = self.grid.cell_size_m
        cx = xmin + (np.arange(self.grid.nx) + 0.5) * cs
        cy = ymin + (np.arange(self.grid.ny) + 0.5) * cs
        return cx, cy


def grid_aggregate(ps: ParticleSet, grid: GridSpec) -> CellProbabilityMap:
    """Sum particle weights into grid cells (half-open bins, off-extent tracked)."""
    from . import kernels

    x, y = grid.frame.project_arrays(ps.lats, ps.lons)
    xmin, ymin, xmax, ymax = grid.extent
    values, off = kernels.bin_weights(
        x, y, ps.weights, xmin, ymin, grid.cell_size_m, grid.nx, grid.ny
    )
    return CellProbabilityMap(grid, values, off)


# --- GeoJSON helpers --------------------------------------------------------


def point_to_geojson(p: GeoPoint) -> dict:
    return {"type": "Point", "coordinates": [p.lon, p.lat]}


def point_from_geojson(obj: dict) -> GeoPoint:
    if obj.get("type") != "Point":
        raise ValueError(f"expected Point geometry, got {obj.get('type')}")
    lon, lat = obj["coordinates"][:2]
    return GeoPoint(lat, lon)


def polygon_to_geojson(ring: list[GeoPoint]) -> dict:
    coords = [[p.lon, p.lat] for p in ring]
    if coords and coords[0] != coords[-1]:
        coords.append(coords[0])
    return {"type": "Polygon", "coordinates": [coords]}


def polygon_from_geojson(obj: dict) -> list[GeoPoint]:
    if obj.get("type") == "Feature":
        obj = obj["geometry"]
    if obj.get("type") != "Polygon":
        raise ValueError(f"expected Polygon geometry, got {obj.get('type')}")
    ring = [GeoPoint(lat, lon) for lon, lat in obj["coordinates"][0]]
    if len(ring) > 1 and ring[0].approx_eq(ring[-1]):
        ring = ring[:-1]
    return ring


def linestring_from_geojson(obj: dict) -> list[GeoPoint]:
    if obj.get("type") == "Feature":
        obj = obj["geometry"]
    if obj.get("type") != "LineString":
        raise ValueError(f"expected LineString geometry, got {obj.get('type')}")
    return [GeoPoint(lat, lon) for lon, lat in obj["coordinates"]]


def disk_to_geojson(d: Disk) -> dict:
    return {
        "type": "Feature",
        "geometry": point_to_geojson(d.center),
        "properties": {"radius_m": d.radius_m},
    }


def disk_from_geojson(obj: dict) -> Disk:
    center = point_from_geojson(obj["geometry"])
    return Disk(center, float(obj["properties"]["radius_m"]))
