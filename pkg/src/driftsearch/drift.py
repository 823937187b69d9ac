"""Monte Carlo drift of floating objects under current plus wind leeway.

A drifting object moves with the ocean current plus leeway. Leeway splits
into a downwind component (along the wind) and a crosswind component whose
direction is unpredictable: the simulation switches the crosswind side at
exponentially distributed times. Mean leeway magnitudes follow the
person-in-water regression DW = 1.17·W + 10.2 cm/s, CW = 0.04·W + 3.9 cm/s
(W in m/s); residuals about the means are AR(1)-correlated like the field
noise. Reverse drift integrates the same velocity with a negative time step.

Integration is explicit Euler on the configured step (60 minutes by
default), with a shorter final step when the span is not a multiple.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import shapely
from numpy.random import Generator

from . import kernels, rng
from .environment import (
    DEFAULT_ALPHA_PER_MIN,
    Ar1Stream,
    PerturbationParams,
    VelocityField,
)
from .geo import DomainError, GeoPoint, LocalFrame
from .units import KNOT_MS

_TIME_EPS_MIN = 1e-9
_CHUNK = 4096


@dataclass(frozen=True)
class LeewayModel:
    """Linear leeway regression plus residual/crosswind-switch parameters."""

    downwind_slope: float = 1.17
    downwind_offset_cms: float = 10.2
    crosswind_slope: float = 0.04
    crosswind_offset_cms: float = 3.9
    downwind_residual_std_cms: float = 3.0
    crosswind_residual_std_cms: float = 2.0
    crosswind_switch_per_hour: float = 0.25
    alpha_per_min: float = DEFAULT_ALPHA_PER_MIN

    def __post_init__(self) -> None:
        for name in (
            "downwind_slope",
            "downwind_offset_cms",
            "crosswind_slope",
            "crosswind_offset_cms",
            "downwind_residual_std_cms",
            "crosswind_residual_std_cms",
            "crosswind_switch_per_hour",
        ):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")

    def mean_cms(self, wind_speed_ms: float) -> tuple[float, float]:
        if wind_speed_ms < 0:
            raise DomainError("wind speed must be nonnegative")
        dw = self.downwind_slope * wind_speed_ms + self.downwind_offset_cms
        cw = self.crosswind_slope * wind_speed_ms + self.crosswind_offset_cms
        return dw, cw

    def coeffs(self) -> tuple[float, float, float, float]:
        return (
            self.downwind_slope,
            self.downwind_offset_cms,
            self.crosswind_slope,
            self.crosswind_offset_cms,
        )


def leeway_mean(wind_speed_ms: float, model: LeewayModel | None = None) -> tuple[float, float]:
    """Mean (downwind, crosswind) leeway in cm/s for a wind speed in m/s."""
    return (model or LeewayModel()).mean_cms(wind_speed_ms)


@dataclass(frozen=True)
class DriftConfig:
    """Step size, direction, and stochastic switches for a drift run."""

    time_step_min: float = 60.0
    direction: str = "forward"
    stochastic: bool = False
    crosswind_sign: int | None = None  # freeze the sign; None = process/+1

    def __post_init__(self) -> None:
        if self.time_step_min <= 0:
            raise DomainError("time step must be positive")
        if self.direction not in ("forward", "reverse"):
            raise DomainError(f"direction must be forward or reverse: {self.direction}")
        if self.crosswind_sign not in (None, 1, -1):
            raise DomainError("crosswind_sign must be +1, -1 or None")


@dataclass(frozen=True)
class RecoveryObservation:
    """Polygon of recovered-object positions at a recovery time."""

    polygon: tuple[GeoPoint, ...]
    recovery_time_min: float
    samples: int = 16000

    def __post_init__(self) -> None:
        if self.samples <= 0:
            raise DomainError("samples must be positive")
        if len(self.polygon) < 3:
            raise DomainError("polygon needs at least 3 vertices")


# -- environment samplers ----------------------------------------------------


class GriddedEnvironment:
    """Current + wind velocity fields sharing one frame for kernel runs."""

    def __init__(self, current: VelocityField, wind: VelocityField):
        if current.kind != "current" or wind.kind != "wind":
            raise DomainError("GriddedEnvironment needs (current, wind) fields")
        if current.n_nodes < 3 or wind.n_nodes < 3:
            raise DomainError("fields need at least 3 spatial grid points")
        self.current = current
        self.wind = wind

    def time_span(self) -> tuple[float, float]:
        c0, c1 = self.current.time_span()
        w0, w1 = self.wind.time_span()
        return max(c0, w0), min(c1, w1)

    def localize(self, frame: LocalFrame):
        return self.current.localize(frame), self.wind.localize(frame)


class AnalyticEnvironment:
    """Closed-form fields for tests: callables (x_m, y_m, t_min) -> knots."""

    def __init__(self, current_fn, wind_fn):
        self.current_fn = current_fn
        self.wind_fn = wind_fn

    @classmethod
    def uniform(cls, cur_u_kts=0.0, cur_v_kts=0.0, wind_u_kts=0.0, wind_v_kts=0.0):
        return cls(
            lambda x, y, t: (np.full_like(x, cur_u_kts), np.full_like(x, cur_v_kts)),
            lambda x, y, t: (np.full_like(x, wind_u_kts), np.full_like(x, wind_v_kts)),
        )

    @classmethod
    def gyre(cls, omega_per_hour: float, wind_u_kts=0.0, wind_v_kts=0.0):
        w = omega_per_hour / 3600.0 / KNOT_MS  # knots per meter of radius

        def cur(x, y, t):
            return -w * y, w * x

        return cls(cur, lambda x, y, t: (np.full_like(x, wind_u_kts), np.full_like(x, wind_v_kts)))


# -- step/path construction ---------------------------------------------------


def path_times(t0: float, t1: float, dt_min: float) -> np.ndarray:
    """Timestamps t0 + k*dt toward t1, plus a final partial step to t1."""
    if t0 == t1:
        raise DomainError("path needs t0 != t1")
    span = t1 - t0
    sign = 1.0 if span > 0 else -1.0
    n_full = int(abs(span) / dt_min + _TIME_EPS_MIN)
    times = [t0 + sign * dt_min * k for k in range(n_full + 1)]
    if abs(times[-1] - t1) > _TIME_EPS_MIN:
        times.append(t1)
    else:
        times[-1] = t1
    return np.array(times, dtype=np.float64)


def step_gaps(times: np.ndarray) -> np.ndarray:
    """gaps[k] = |times[k] - times[k-1]| for k >= 1; gaps[0] unused."""
    steps = len(times) - 1
    gaps = np.zeros(steps)
    if steps > 1:
        gaps[1:] = np.abs(np.diff(times))[: steps - 1]
    return gaps


def crosswind_signs(gen: Generator, n_steps: int, gaps_min: np.ndarray, rate_per_min: float) -> np.ndarray:
    """Per-step crosswind signs: equiprobable start, Poisson flip parity.

    Flip counts over each inter-step gap are Poisson(rate·gap); the sign
    during step k carries the parity of all flips before it, which is the
    exponential-switching process observed at step boundaries.
    """
    s0 = 1.0 if float(gen.random()) < 0.5 else -1.0
    signs = np.full(n_steps, s0)
    if n_steps > 1 and rate_per_min > 0:
        flips = gen.poisson(rate_per_min * gaps_min[1:])
        parity = np.cumsum(flips) % 2
        signs[1:] = np.where(parity == 1, -s0, s0)
    return signs


class ParticleNoise:
    """Noise streams for one particle: field perturbations, leeway residuals,
    and the crosswind sign process, all keyed so any evaluation order across
    particles reproduces the same values."""

    def __init__(self, seed, particle_id, cur_params, wind_params, leeway, phase):
        mk = lambda sigma, alpha, purpose: Ar1Stream(
            sigma, alpha, rng.particle_stream(seed, particle_id, purpose, phase)
        )
        self.cur_u = mk(cur_params.sigma_kts, cur_params.alpha_per_min, rng.CUR_U)
        self.cur_v = mk(cur_params.sigma_kts, cur_params.alpha_per_min, rng.CUR_V)
        self.wind_u = mk(wind_params.sigma_kts, wind_params.alpha_per_min, rng.WIND_U)
        self.wind_v = mk(wind_params.sigma_kts, wind_params.alpha_per_min, rng.WIND_V)
        self.lee_dw = mk(leeway.downwind_residual_std_cms, leeway.alpha_per_min, rng.LEE_DW)
        self.lee_cw = mk(leeway.crosswind_residual_std_cms, leeway.alpha_per_min, rng.LEE_CW)
        self.sign_gen = rng.particle_stream(seed, particle_id, rng.CROSSWIND, phase)


def _euler_step(x, y, t, dt_min, cu_kts, cv_kts, wu_kts, wv_kts, leeway_coeffs, e_dw, e_cw, sign):
    """One Euler step, same operation order as the kernels. dt may be < 0."""
    dw_slope, dw_off, cw_slope, cw_off = leeway_coeffs
    dt_s = dt_min * 60.0
    uw = wu_kts * KNOT_MS
    vw = wv_kts * KNOT_MS
    vx = cu_kts * KNOT_MS
    vy = cv_kts * KNOT_MS
    wspd = np.sqrt(uw * uw + vw * vw)
    windy = wspd > 0.0
    safe = np.where(windy, wspd, 1.0)
    dwm = (dw_slope * wspd + dw_off + e_dw) * 0.01
    cwm = (cw_slope * wspd + cw_off + e_cw) * 0.01
    ux = uw / safe
    uy = vw / safe
    lee_x = np.where(windy, dwm * ux + sign * cwm * uy, 0.0)
    lee_y = np.where(windy, dwm * uy + sign * cwm * (-ux), 0.0)
    vx = vx + lee_x
    vy = vy + lee_y
    return x + vx * dt_s, y + vy * dt_s


def drift_step(
    pos: GeoPoint,
    t: float,
    dt_min: float,
    env,
    crosswind_sign: int,
    cfg: DriftConfig,
    leeway: LeewayModel | None = None,
    frame: LocalFrame | None = None,
    noise: ParticleNoise | None = None,
) -> GeoPoint:
    """One drift step of ``dt_min`` minutes from ``pos`` at time ``t``.

    Forward steps displace by +velocity*dt, reverse by -velocity*dt.
    Stochastic residuals are added only when ``cfg.stochastic`` and a noise
    bundle is supplied.
    """
    if dt_min <= 0:
        raise DomainError("dt must be positive")
    leeway = leeway or LeewayModel()
    frame = frame or LocalFrame(pos)
    x, y = frame.project(pos)
    signed_dt = dt_min if cfg.direction == "forward" else -dt_min
    cu, cv, wu, wv = _sample_env(env, np.array([x]), np.array([y]), t, frame)
    if cfg.stochastic and noise is not None:
        cu = cu + noise.cur_u.value_at(t)
        cv = cv + noise.cur_v.value_at(t)
        wu = wu + noise.wind_u.value_at(t)
        wv = wv + noise.wind_v.value_at(t)
        e_dw = noise.lee_dw.value_at(t)
        e_cw = noise.lee_cw.value_at(t)
    else:
        e_dw = 0.0
        e_cw = 0.0
    x2, y2 = _euler_step(
        x, y, t, signed_dt, cu, cv, wu, wv, leeway.coeffs(), e_dw, e_cw, float(crosswind_sign)
    )
    return frame.unproject(float(x2[0]), float(y2[0]))


def _sample_env(env, xs, ys, t, frame):
    if isinstance(env, GriddedEnvironment):
        t0, t1 = env.time_span()
        if not t0 <= t <= t1:
            raise DomainError(f"time {t} outside environment span [{t0}, {t1}]")
        cur_arrays, wind_arrays = env.localize(frame)
        cu, cv = kernels.interp_velocity(xs, ys, t, *cur_arrays)
        wu, wv = kernels.interp_velocity(xs, ys, t, *wind_arrays)
        return cu, cv, wu, wv
    cu, cv = env.current_fn(xs, ys, t)
    wu, wv = env.wind_fn(xs, ys, t)
    return (
        np.broadcast_to(np.asarray(cu, dtype=np.float64), xs.shape),
        np.broadcast_to(np.asarray(cv, dtype=np.float64), xs.shape),
        np.broadcast_to(np.asarray(wu, dtype=np.float64), xs.shape),
        np.broadcast_to(np.asarray(wv, dtype=np.float64), xs.shape),
    )


@dataclass(frozen=True)
class DriftPath:
    """Simulated space-time path in a frame, timestamps in epoch minutes."""

    frame: LocalFrame
    times: np.ndarray
    xs: np.ndarray
    ys: np.ndarray

    def positions(self) -> list[GeoPoint]:
        lats, lons = self.frame.unproject_arrays(self.xs, self.ys)
        return [GeoPoint(float(a), float(o)) for a, o in zip(lats, lons)]

    def endpoint(self) -> GeoPoint:
        return self.frame.unproject(float(self.xs[-1]), float(self.ys[-1]))

    def to_geojson(self) -> dict:
        from .units import format_time

        lats, lons = self.frame.unproject_arrays(self.xs, self.ys)
        return {
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[float(o), float(a)] for a, o in zip(lats, lons)],
            },
            "properties": {"times": [format_time(float(t)) for t in self.times]},
        }


def _noise_block(seed, particle_ids, times, cur_params, wind_params, leeway, cfg, phase):
    """Pre-drawn per-step AR(1) noise and crosswind signs for a particle block."""
    n = len(particle_ids)
    steps = len(times) - 1
    if not cfg.stochastic:
        zeros = np.zeros((n, steps))
        sign = float(cfg.crosswind_sign if cfg.crosswind_sign is not None else 1)
        return zeros, zeros, zeros, zeros, zeros, zeros, np.full((n, steps), sign)
    gaps = step_gaps(times)
    specs = [
        (rng.CUR_U, cur_params.sigma_kts, cur_params.alpha_per_min),
        (rng.CUR_V, cur_params.sigma_kts, cur_params.alpha_per_min),
        (rng.WIND_U, wind_params.sigma_kts, wind_params.alpha_per_min),
        (rng.WIND_V, wind_params.sigma_kts, wind_params.alpha_per_min),
        (rng.LEE_DW, leeway.downwind_residual_std_cms, leeway.alpha_per_min),
        (rng.LEE_CW, leeway.crosswind_residual_std_cms, leeway.alpha_per_min),
    ]
    from .environment import ar1_scan

    blocks = []
    for purpose, sigma, alpha in specs:
        z = np.empty((n, steps))
        for row, pid in enumerate(particle_ids):
            z[row] = rng.particle_stream(seed, int(pid), purpose, phase).standard_normal(steps)
        blocks.append(ar1_scan(z, gaps, sigma, alpha))
    if cfg.crosswind_sign is not None:
        signs = np.full((n, steps), float(cfg.crosswind_sign))
    else:
        rate = leeway.crosswind_switch_per_hour / 60.0
        signs = np.empty((n, steps))
        for row, pid in enumerate(particle_ids):
            gen = rng.particle_stream(seed, int(pid), rng.CROSSWIND, phase)
            signs[row] = crosswind_signs(gen, steps, gaps, rate)
    return (*blocks, signs)


def drift_particles(
    x0: np.ndarray,
    y0: np.ndarray,
    times: np.ndarray,
    env: GriddedEnvironment,
    cfg: DriftConfig,
    leeway: LeewayModel,
    frame: LocalFrame,
    seed: int,
    particle_ids: np.ndarray,
    phase: int = rng.PHASE_GENERIC,
    workers: int = 1,
    cur_params: PerturbationParams | None = None,
    wind_params: PerturbationParams | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Drift many particles along ``times``; returns paths (n, len(times)).

    Output is independent of ``workers`` and of how particles are chunked:
    noise is keyed per particle and the integration is per-particle pure.
    """
    cur_params = cur_params or PerturbationParams.for_kind("current")
    wind_params = wind_params or PerturbationParams.for_kind("wind")
    span0, span1 = env.time_span()
    tmin, tmax = float(np.min(times)), float(np.max(times))
    if tmin < span0 - _TIME_EPS_MIN or tmax > span1 + _TIME_EPS_MIN:
        raise DomainError(
            f"path window [{tmin}, {tmax}] outside environment span [{span0}, {span1}]"
        )
    cur_arrays, wind_arrays = env.localize(frame)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    n = len(x0)
    chunks = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]

    def run_chunk(bounds):
        s, e = bounds
        noise = _noise_block(
            seed, particle_ids[s:e], times, cur_params, wind_params, leeway, cfg, phase
        )
        return kernels.advance_paths(
            x0[s:e], y0[s:e], times, cur_arrays, wind_arrays, leeway.coeffs(), *noise
        )

    if workers <= 1 or len(chunks) == 1:
        results = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, chunks))
    px = np.concatenate([r[0] for r in results], axis=0)
    py = np.concatenate([r[1] for r in results], axis=0)
    return px, py


def simulate_path(
    start: GeoPoint,
    t0: float,
    t1: float,
    cfg: DriftConfig,
    env,
    leeway: LeewayModel | None = None,
    frame: LocalFrame | None = None,
    seed: int = 0,
    particle_id: int = 0,
    phase: int = rng.PHASE_GENERIC,
    cur_params: PerturbationParams | None = None,
    wind_params: PerturbationParams | None = None,
) -> DriftPath:
    """Simulate one particle's path from t0 to t1 (t1 < t0 means reverse)."""
    if t0 == t1:
        raise DomainError("simulate_path needs t0 != t1")
    if cfg.direction == "reverse" and not t1 < t0:
        raise DomainError("reverse drift requires t1 < t0")
    if cfg.direction == "forward" and not t1 > t0:
        raise DomainError("forward drift requires t1 > t0")
    leeway = leeway or LeewayModel()
    frame = frame or LocalFrame(start)
    times = path_times(t0, t1, cfg.time_step_min)
    x0, y0 = frame.project(start)
    if isinstance(env, GriddedEnvironment):
        px, py = drift_particles(
            np.array([x0]),
            np.array([y0]),
            times,
            env,
            cfg,
            leeway,
            frame,
            seed,
            np.array([particle_id]),
            phase,
            cur_params=cur_params,
            wind_params=wind_params,
        )
        return DriftPath(frame, times, px[0], py[0])
    # analytic environment: python stepping with the same arithmetic
    cur_params = cur_params or PerturbationParams.for_kind("current")
    wind_params = wind_params or PerturbationParams.for_kind("wind")
    noise = _noise_block(
        seed, np.array([particle_id]), times, cur_params, wind_params, leeway, cfg, phase
    )
    e_cu, e_cv, e_wu, e_wv, e_dw, e_cw, signs = noise
    xs = np.empty(len(times))
    ys = np.empty(len(times))
    x = np.array([x0])
    y = np.array([y0])
    xs[0], ys[0] = x0, y0
    for k in range(len(times) - 1):
        t = float(times[k])
        dt = float(times[k + 1] - times[k])
        cu, cv, wu, wv = _sample_env(env, x, y, t, frame)
        x, y = _euler_step(
            x,
            y,
            t,
            dt,
            cu + e_cu[0, k],
            cv + e_cv[0, k],
            wu + e_wu[0, k],
            wv + e_wv[0, k],
            leeway.coeffs(),
            e_dw[0, k],
            e_cw[0, k],
            signs[0, k],
        )
        xs[k + 1], ys[k + 1] = float(x[0]), float(y[0])
    return DriftPath(frame, times, xs, ys)


def sample_polygon(polygon: list[GeoPoint], n: int, seed_or_gen) -> tuple[np.ndarray, np.ndarray]:
    """n i.i.d. uniform points inside a simple polygon, by bbox rejection.

    Sampling happens in a tangent frame at the ring's vertex mean, so
    "uniform" means uniform in local area. Returns (lats, lons).
    """
    if n <= 0:
        raise DomainError("sample count must be positive")
    gen = seed_or_gen if isinstance(seed_or_gen, Generator) else np.random.default_rng(seed_or_gen)
    ring = list(polygon)
    frame = LocalFrame(
        GeoPoint(
            float(np.mean([p.lat for p in ring])),
            float(np.mean([p.lon for p in ring])),
        )
    )
    xs, ys = frame.project_arrays(
        np.array([p.lat for p in ring]), np.array([p.lon for p in ring])
    )
    poly = shapely.Polygon(zip(xs, ys))
    if not poly.is_valid or poly.area <= 0:
        raise DomainError("polygon must be simple with positive area")
    minx, miny, maxx, maxy = poly.bounds
    out_x = np.empty(n)
    out_y = np.empty(n)
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 1024)
        cand_x = minx + gen.random(m) * (maxx - minx)
        cand_y = miny + gen.random(m) * (maxy - miny)
        keep = shapely.contains_xy(poly, cand_x, cand_y)
        kx, ky = cand_x[keep], cand_y[keep]
        take = min(len(kx), n - filled)
        out_x[filled : filled + take] = kx[:take]
        out_y[filled : filled + take] = ky[:take]
        filled += take
    return frame.unproject_arrays(out_x, out_y)
