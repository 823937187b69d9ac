"""Scenario-mixture prior for the lost object's location.

Three scenario families are supported: uniform over the containment disk,
circular normal about the last known position (8 NM std by default), and
reverse drift of recovery observations back to the loss time. Each scenario
yields a particle cloud; the prior is a weighted mixture of the clouds,
truncated to the containment disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .drift import (
    DriftConfig,
    GriddedEnvironment,
    LeewayModel,
    RecoveryObservation,
    drift_particles,
    path_times,
    sample_polygon,
)
from .environment import PerturbationParams
from .geo import Disk, DomainError, GeoPoint, LocalFrame, ParticleSet, truncate_renormalize
from .units import NM_M

DEFAULT_SIGMA_M = 8.0 * NM_M
DEFAULT_PARTICLES = 75_000

SCENARIO_KINDS = ("uniform_disk", "circular_normal", "reverse_drift")


@dataclass(frozen=True)
class ScenarioSpec:
    """One loss hypothesis: a distribution family plus its mixture weight."""

    kind: str
    weight: float
    label: str = ""
    samples: int = DEFAULT_PARTICLES
    sigma_m: float = DEFAULT_SIGMA_M  # circular_normal spread
    center: GeoPoint | None = None  # circular_normal center; disk center if None
    observations: tuple[RecoveryObservation, ...] = ()  # reverse_drift inputs

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise DomainError(f"unknown scenario kind: {self.kind}")
        if self.weight < 0:
            raise DomainError("scenario weight must be nonnegative")
        if self.samples <= 0:
            raise DomainError("scenario sample count must be positive")
        if self.sigma_m <= 0:
            raise DomainError("sigma must be positive")
        if self.kind == "reverse_drift" and self.weight > 0 and not self.observations:
            raise DomainError("reverse_drift scenario needs recovery observations")
        if not self.label:
            object.__setattr__(self, "label", self.kind)


def build_scenario(
    spec: ScenarioSpec,
    disk: Disk,
    seed: int,
    env: GriddedEnvironment | None = None,
    drift_cfg: DriftConfig | None = None,
    crash_time_min: float | None = None,
    leeway: LeewayModel | None = None,
    frame: LocalFrame | None = None,
    workers: int = 1,
    cur_params: PerturbationParams | None = None,
    wind_params: PerturbationParams | None = None,
) -> ParticleSet:
    """Realize one scenario as a particle cloud inside the disk."""
    if spec.kind == "uniform_disk":
        return build_uniform_disk(disk, spec.samples, seed)
    if spec.kind == "circular_normal":
        center = spec.center or disk.center
        return build_circular_normal(center, spec.sigma_m, disk, spec.samples, seed)
    if env is None or crash_time_min is None:
        raise DomainError("reverse_drift needs an environment and crash time")
    cfg = drift_cfg or DriftConfig(direction="reverse", stochastic=True)
    return build_reverse_drift(
        list(spec.observations), env, cfg, crash_time_min, disk, seed,
        leeway=leeway, frame=frame, workers=workers,
        cur_params=cur_params, wind_params=wind_params,
    )


def build_uniform_disk(disk: Disk, n: int, seed: int) -> ParticleSet:
    """n equal-weight particles i.i.d. uniform over the disk."""
    if n <= 0:
        raise DomainError("particle count must be positive")
    gen = rng.scalar_stream(seed, rng.LABEL_UNIFORM_DISK)
    r = disk.radius_m * np.sqrt(gen.random(n))
    theta = 2.0 * np.pi * gen.random(n)
    x = r * np.cos(theta)
    y = r * np.sin(theta)
    lats, lons = disk.frame.unproject_arrays(x, y)
    return ParticleSet.equal_weights(lats, lons)


def build_circular_normal(
    center: GeoPoint, sigma_m: float, disk: Disk, n: int, seed: int
) -> ParticleSet:
    """Isotropic bivariate normal about ``center``, rejection-kept inside the disk."""
    if sigma_m <= 0:
        raise DomainError("sigma must be positive")
    if n <= 0:
        raise DomainError("particle count must be positive")
    gen = rng.scalar_stream(seed, rng.LABEL_CIRCULAR_NORMAL)
    frame = disk.frame
    cx, cy = frame.project(center)
    out_x = np.empty(n)
    out_y = np.empty(n)
    filled = 0
    while filled < n:
        m = max(2 * (n - filled), 1024)
        z = gen.standard_normal((m, 2)) * sigma_m
        x = cx + z[:, 0]
        y = cy + z[:, 1]
        keep = x * x + y * y <= disk.radius_m * disk.radius_m
        kx, ky = x[keep], y[keep]
        take = min(len(kx), n - filled)
        out_x[filled : filled + take] = kx[:take]
        out_y[filled : filled + take] = ky[:take]
        filled += take
    lats, lons = frame.unproject_arrays(out_x, out_y)
    return ParticleSet.equal_weights(lats, lons)


def build_reverse_drift(
    observations: list[RecoveryObservation],
    env: GriddedEnvironment,
    cfg: DriftConfig,
    crash_time_min: float,
    disk: Disk,
    seed: int,
    leeway: LeewayModel | None = None,
    frame: LocalFrame | None = None,
    workers: int = 1,
    cur_params: PerturbationParams | None = None,
    wind_params: PerturbationParams | None = None,
) -> ParticleSet:
    """Reverse-drift recovery polygons to the loss time and pool endpoints.

    Each observation's polygon is sampled uniformly; every sample drifts
    backward from its recovery time to ``crash_time_min`` and the pooled
    endpoints (equal weight per sample) are truncated to the disk.
    """
    if not observations:
        raise DomainError("need at least one recovery observation")
    if cfg.direction != "reverse":
        cfg = DriftConfig(cfg.time_step_min, "reverse", cfg.stochastic, cfg.crosswind_sign)
    leeway = leeway or LeewayModel()
    frame = frame or disk.frame
    all_x: list[np.ndarray] = []
    all_y: list[np.ndarray] = []
    pid_base = 0
    for i, obs in enumerate(observations):
        if obs.recovery_time_min <= crash_time_min:
            raise DomainError("recovery times must be after the crash time")
        gen = rng.scalar_stream(seed, rng.LABEL_POLYGON_BASE + i)
        lats, lons = sample_polygon(list(obs.polygon), obs.samples, gen)
        x0, y0 = frame.project_arrays(lats, lons)
        times = path_times(obs.recovery_time_min, crash_time_min, cfg.time_step_min)
        ids = pid_base + np.arange(obs.samples, dtype=np.int64)
        px, py = drift_particles(
            x0, y0, times, env, cfg, leeway, frame, seed, ids,
            phase=rng.PHASE_REVERSE_DRIFT, workers=workers,
            cur_params=cur_params, wind_params=wind_params,
        )
        all_x.append(px[:, -1])
        all_y.append(py[:, -1])
        pid_base += obs.samples
    xs = np.concatenate(all_x)
    ys = np.concatenate(all_y)
    lats, lons = frame.unproject_arrays(xs, ys)
    pooled = ParticleSet.equal_weights(lats, lons)
    return truncate_renormalize(pooled, disk)


def mix(
    scenarios: list[tuple[ParticleSet, float, str]],
    n_out: int,
    seed: int,
) -> ParticleSet:
    """Resample a weighted mixture of scenario clouds into one tagged set.

    Each output particle picks a scenario with its weight, then a particle
    uniformly from that scenario's cloud; weights come out exactly 1/n_out
    and every particle carries its source-scenario label.
    """
    if n_out <= 0:
        raise DomainError("output count must be positive")
    weights = np.array([w for _, w, _ in scenarios], dtype=np.float64)
    if np.any(weights < 0):
        raise DomainError("scenario weights must be nonnegative")
    if abs(float(np.sum(weights)) - 1.0) > 1e-9:
        raise DomainError(f"scenario weights must sum to 1, got {np.sum(weights)}")
    for ps, w, label in scenarios:
        if w > 0 and len(ps) == 0:
            raise DomainError(f"scenario {label!r} has weight {w} but no particles")
    gen = rng.scalar_stream(seed, rng.LABEL_MIX)
    cum = np.cumsum(weights)
    u = gen.random(n_out)
    sel = np.searchsorted(cum, u, side="right")
    sel = np.minimum(sel, len(scenarios) - 1)
    lats = np.empty(n_out)
    lons = np.empty(n_out)
    labels = np.empty(n_out, dtype=object)
    for s, (ps, w, label) in enumerate(scenarios):
        mask = sel == s
        count = int(np.sum(mask))
        if count == 0:
            continue
        idx = gen.integers(0, len(ps), size=count)
        lats[mask] = ps.lats[idx]
        lons[mask] = ps.lons[idx]
        labels[mask] = label
    return ParticleSet.equal_weights(lats, lons, scenarios=labels.astype(str))


def likelihood_mixture(
    d1: ParticleSet,
    d2: ParticleSet,
    d3: ParticleSet,
    frame: LocalFrame,
    n_out: int,
    seed: int,
) -> ParticleSet:
    """Alternate prior: treat the reverse-drift cloud as a likelihood.

    A Gaussian KDE (Silverman bandwidth) of the reverse-drift endpoints
    multiplies an equal mixture of the other two scenarios, renormalized.
    """
    from scipy.stats import gaussian_kde

    base = mix([(d1, 0.5, "uniform"), (d2, 0.5, "normal")], n_out, seed)
    d3x, d3y = frame.project_arrays(d3.lats, d3.lons)
    kde = gaussian_kde(np.vstack([d3x, d3y]), bw_method="silverman", weights=d3.weights)
    bx, by = frame.project_arrays(base.lats, base.lons)
    like = kde(np.vstack([bx, by]))
    total = float(np.sum(like * base.weights))
    if total <= 0:
        raise DomainError("likelihood annihilates the base mixture")
    return base.with_weights(base.weights * like / total)
