"""Gridded wind/current fields with stochastic perturbation.

Fields are snapshots of (u, v) in knots on a fixed set of spatial nodes at
strictly increasing times. Spatial interpolation takes the three nearest
nodes weighted by inverse distance; time interpolation is linear between the
two bracketing grid times. The stochastic component is a stationary Gaussian
AR(1) per particle and per component, with correlation exp(-alpha*dt) and the
half-life fixed at 60 minutes by default.

Field CSV format: header ``kind,time_iso8601,lat,lon,u_kts,v_kts``; every
node must appear at every time, and times must be strictly increasing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from . import kernels, rng
from .geo import DomainError, GeoPoint, LocalFrame
from .units import format_time, parse_time

DEFAULT_CURRENT_SIGMA_KTS = 0.22
DEFAULT_WIND_SIGMA_KTS = 2.0
DEFAULT_ALPHA_PER_MIN = math.log(2.0) / 60.0  # sixty-minute half-life


@dataclass(frozen=True)
class PerturbationParams:
    """Stationary std (knots) and exponential decay rate (per minute)."""

    sigma_kts: float
    alpha_per_min: float = DEFAULT_ALPHA_PER_MIN

    def __post_init__(self) -> None:
        if self.sigma_kts < 0:
            raise DomainError("sigma must be nonnegative")
        if self.alpha_per_min <= 0:
            raise DomainError("alpha must be positive")

    @classmethod
    def for_kind(cls, kind: str) -> "PerturbationParams":
        if kind == "current":
            return cls(DEFAULT_CURRENT_SIGMA_KTS)
        if kind == "wind":
            return cls(DEFAULT_WIND_SIGMA_KTS)
        raise DomainError(f"unknown field kind: {kind}")


class VelocityField:
    """Immutable gridded velocity snapshot sequence, velocities in knots."""

    __slots__ = ("kind", "lats", "lons", "times", "u", "v")

    def __init__(self, kind, lats, lons, times, u, v):
        if kind not in ("wind", "current"):
            raise DomainError(f"field kind must be wind or current, got {kind!r}")
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        times = np.asarray(times, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if lats.ndim != 1 or lats.shape != lons.shape:
            raise DomainError("node lats/lons must be matching vectors")
        if times.ndim != 1 or len(times) == 0:
            raise DomainError("field needs at least one time")
        if np.any(np.diff(times) <= 0):
            raise DomainError("field times must be strictly increasing")
        if u.shape != (len(times), len(lats)) or v.shape != u.shape:
            raise DomainError("u/v must have shape (n_times, n_nodes)")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DomainError("field velocities must be finite")
        for arr in (lats, lons, times, u, v):
            arr.setflags(write=False)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lats", lats)
        object.__setattr__(self, "lons", lons)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("VelocityField is immutable")

    @property
    def n_nodes(self) -> int:
        return len(self.lats)

    def time_span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def default_frame(self) -> LocalFrame:
        return LocalFrame(GeoPoint(float(np.mean(self.lats)), float(np.mean(self.lons))))

    def localize(self, frame: LocalFrame):
        """(gx, gy, times, u, v) arrays for kernel consumption."""
        gx, gy = frame.project_arrays(self.lats, self.lons)
        return (
            np.ascontiguousarray(gx),
            np.ascontiguousarray(gy),
            self.times,
            np.ascontiguousarray(self.u),
            np.ascontiguousarray(self.v),
        )

    # -- CSV round trip -------------------------------------------------

    @classmethod
    def from_csv(cls, text_or_path, kind: str | None = None) -> "VelocityField":
        if hasattr(text_or_path, "read"):
            text = text_or_path.read()
        else:
            text = open(text_or_path, "r", encoding="utf-8").read()
        reader = csv.DictReader(io.StringIO(text))
        required = {"kind", "time_iso8601", "lat", "lon", "u_kts", "v_kts"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DomainError(f"field CSV must have columns {sorted(required)}")
        rows = list(reader)
        if not rows:
            raise DomainError("empty field file")
        kinds = {r["kind"] for r in rows}
        if kind is None:
            if len(kinds) > 1:
                raise DomainError(f"file mixes kinds {sorted(kinds)}; pass kind=")
            kind = kinds.pop()
        rows = [r for r in rows if r["kind"] == kind]
        if not rows:
            raise DomainError(f"no rows of kind {kind!r}")
        by_time: dict[float, dict[tuple[float, float], tuple[float, float]]] = {}
        for r in rows:
            t = parse_time(r["time_iso8601"])
            node = (float(r["lat"]), float(r["lon"]))
            by_time.setdefault(t, {})[node] = (float(r["u_kts"]), float(r["v_kts"]))
        times = sorted(by_time)
        nodes = sorted(by_time[times[0]])
        node_set = set(nodes)
        for t in times:
            if set(by_time[t]) != node_set:
                raise DomainError(f"node set differs at {format_time(t)}")
        lats = np.array([n[0] for n in nodes])
        lons = np.array([n[1] for n in nodes])
        u = np.array([[by_time[t][n][0] for n in nodes] for t in times])
        v = np.array([[by_time[t][n][1] for n in nodes] for t in times])
        return cls(kind, lats, lons, np.array(times), u, v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "time_iso8601", "lat", "lon", "u_kts", "v_kts"])
        for ti, t in enumerate(self.times):
            stamp = format_time(float(t))
            for ni in range(self.n_nodes):
                writer.writerow(
                    [
                        self.kind,
                        stamp,
                        repr(float(self.lats[ni])),
                        repr(float(self.lons[ni])),
                        repr(float(self.u[ti, ni])),
                        repr(float(self.v[ti, ni])),
                    ]
                )
        return buf.getvalue()


def interpolate(
    field: VelocityField, p: GeoPoint, t: float, frame: LocalFrame | None = None
) -> tuple[float, float]:
    """(u, v) knots at point and time; errors outside the field's time span."""
    t0, t1 = field.time_span()
    if not t0 <= t <= t1:
        raise DomainError(
            f"time {format_time(t)} outside field span [{format_time(t0)}, {format_time(t1)}]"
        )
    if field.n_nodes < 3:
        raise DomainError("interpolation needs at least 3 spatial grid points")
    if frame is None:
        frame = field.default_frame()
    gx, gy, times, u, v = field.localize(frame)
    x, y = frame.project_arrays(np.array([p.lat]), np.array([p.lon]))
    uu, vv = kernels.interp_velocity(x, y, t, gx, gy, times, u, v)
    return float(uu[0]), float(vv[0])


class Ar1Stream:
    """Stationary Gaussian AR(1) sampled at caller-chosen step times.

    Marginals are N(0, sigma^2); corr(e_t, e_{t+dt}) = exp(-alpha*|dt|). The
    batch drift path reproduces these values exactly because both consume the
    same per-(particle, purpose) Philox stream in the same order. ``sigma``
    is in whatever unit the consumer adds the noise in (knots for fields,
    cm/s for leeway residuals).
    """

    def __init__(self, sigma: float, alpha_per_min: float, generator: Generator):
        if sigma < 0 or alpha_per_min <= 0:
            raise DomainError("sigma must be >= 0 and alpha > 0")
        self.sigma = sigma
        self.alpha_per_min = alpha_per_min
        self.gen = generator
        self._value: float | None = None
        self._t: float | None = None

    def value_at(self, t: float) -> float:
        """Noise value at ``t``; repeated queries at the same time are stable.

        Steps use |dt| so reverse-time paths (decreasing query times) draw
        from the same time-symmetric process.
        """
        if self._value is None:
            self._value = self.sigma * float(self.gen.standard_normal())
            self._t = t
            return self._value
        if t != self._t:
            phi = math.exp(-self.alpha_per_min * abs(t - self._t))
            scale = self.sigma * math.sqrt(1.0 - phi * phi)
            self._value = phi * self._value + scale * float(self.gen.standard_normal())
            self._t = t
        return self._value


class VelocityNoise:
    """Per-particle (u, v) perturbation streams for one field kind."""

    def __init__(self, u_stream: Ar1Stream, v_stream: Ar1Stream):
        self.u = u_stream
        self.v = v_stream

    @classmethod
    def for_particle(
        cls,
        seed: int,
        particle_id: int,
        kind: str,
        params: PerturbationParams | None = None,
        phase: int = rng.PHASE_GENERIC,
    ) -> "VelocityNoise":
        if params is None:
            params = PerturbationParams.for_kind(kind)
        pu, pv = {"current": (rng.CUR_U, rng.CUR_V), "wind": (rng.WIND_U, rng.WIND_V)}[kind]
        return cls(
            Ar1Stream(params.sigma_kts, params.alpha_per_min, rng.particle_stream(seed, particle_id, pu, phase)),
            Ar1Stream(params.sigma_kts, params.alpha_per_min, rng.particle_stream(seed, particle_id, pv, phase)),
        )


def perturbed_velocity(
    field: VelocityField,
    p: GeoPoint,
    t: float,
    noise: VelocityNoise,
    frame: LocalFrame | None = None,
) -> tuple[float, float]:
    """Interpolated velocity plus the particle's AR(1) perturbation, knots."""
    u, v = interpolate(field, p, t, frame)
    return u + noise.u.value_at(t), v + noise.v.value_at(t)


def ar1_scan(z: np.ndarray, dts_min: np.ndarray, sigma: float, alpha: float) -> np.ndarray:
    """Vectorized AR(1) over pre-drawn standard normals.

    z has shape (n, S); dts_min[k] is the time gap before step k (dts_min[0]
    is ignored: step 0 is the stationary initial draw). Returns noise values
    per step, identical to stepping Ar1Stream at the same times.
    """
    z = np.asarray(z, dtype=np.float64)
    n, steps = z.shape
    e = np.empty_like(z)
    e[:, 0] = sigma * z[:, 0]
    # scalar math.exp keeps this bit-identical to Ar1Stream stepping
    phis = np.array([math.exp(-alpha * abs(float(d))) for d in np.asarray(dts_min)])
    scales = sigma * np.sqrt(1.0 - phis * phis)
    for k in range(1, steps):
        e[:, k] = phis[k] * e[:, k - 1] + scales[k] * z[:, k]
    return e


# -- synthetic field generators (testing and demos) --------------------------


def uniform_field(
    kind: str,
    u_kts: float,
    v_kts: float,
    center: GeoPoint,
    radius_m: float,
    spacing_m: float,
    times: np.ndarray,
) -> VelocityField:
    """Constant field on a square node grid covering a disk."""
    lats, lons = _node_grid(center, radius_m, spacing_m)
    shape = (len(times), len(lats))
    return VelocityField(kind, lats, lons, times, np.full(shape, u_kts), np.full(shape, v_kts))


def gyre_field(
    kind: str,
    omega_per_hour: float,
    center: GeoPoint,
    radius_m: float,
    spacing_m: float,
    times: np.ndarray,
) -> VelocityField:
    """Solid-body rotation about ``center``: u = -w·y, v = w·x (knots)."""
    lats, lons = _node_grid(center, radius_m, spacing_m)
    frame = LocalFrame(center)
    x, y = frame.project_arrays(lats, lons)
    w_per_s = omega_per_hour / 3600.0
    u_ms = -w_per_s * y
    v_ms = w_per_s * x
    u_kts = u_ms / (1852.0 / 3600.0)
    v_kts = v_ms / (1852.0 / 3600.0)
    u = np.tile(u_kts, (len(times), 1))
    v = np.tile(v_kts, (len(times), 1))
    return VelocityField(kind, lats, lons, times, u, v)


def _node_grid(center: GeoPoint, radius_m: float, spacing_m: float):
    if spacing_m <= 0 or radius_m <= 0:
        raise DomainError("radius and spacing must be positive")
    frame = LocalFrame(center)
    half = int(math.ceil(radius_m / spacing_m))
    offsets = np.arange(-half, half + 1) * spacing_m
    xx, yy = np.meshgrid(offsets, offsets)
    lats, lons = frame.unproject_arrays(xx.ravel(), yy.ravel())
    return lats, lons
