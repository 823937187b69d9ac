"""Sequential posterior updates for unsuccessful search increments.

Given per-particle failure probabilities 1 - p_d(n), the posterior weights
are

    w~_n = (1 - p_d(n)) w_n / sum_n' (1 - p_d(n')) w_n'

with positions unchanged: the wreck never moves, so increments reweight the
same particle cloud and applying increments one at a time equals one update
with the product of the failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from . import rng
from .geo import DomainError, ParticleSet


@dataclass(frozen=True)
class IncrementResult:
    """Per-particle failure probabilities for one search increment."""

    label: str
    failure: np.ndarray  # 1 - p_d(n)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        failure = np.asarray(self.failure, dtype=np.float64)
        if np.any(failure < 0) or np.any(failure > 1):
            raise DomainError("failure probabilities must lie in [0, 1]")
        failure.setflags(write=False)
        object.__setattr__(self, "failure", failure)


def bayes_update(ps: ParticleSet, result: IncrementResult | np.ndarray) -> ParticleSet:
    """Reweight particles by failure probability; positions unchanged.

    Errors if the increment claims certain detection everywhere, which is
    inconsistent with the search having failed.
    """
    failure = result.failure if isinstance(result, IncrementResult) else np.asarray(result, dtype=np.float64)
    if len(failure) != len(ps):
        raise DomainError(f"failure length {len(failure)} != particle count {len(ps)}")
    if np.any(failure < 0) or np.any(failure > 1):
        raise DomainError("failure probabilities must lie in [0, 1]")
    numer = failure * ps.weights
    z = float(np.sum(numer))  # numpy pairwise sum: fixed order, reproducible
    if z <= 0.0:
        raise DomainError("search exhausts all probability: every particle detected")
    return ps.with_weights(numer / z)


def degraded_failure(
    q: np.ndarray | float, beta: float = 0.7, label: str = "degraded-search"
) -> IncrementResult:
    """Mix an ineffective-search branch into computed failure probabilities.

    With probability ``beta`` the search was ineffective (failure 1), else
    the modeled failure q(n) applies: 1 - p_d(n) = beta + (1 - beta) q(n).
    """
    if not 0.0 <= beta <= 1.0:
        raise DomainError("beta must lie in [0, 1]")
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if np.any(q < 0) or np.any(q > 1):
        raise DomainError("q must lie in [0, 1]")
    return IncrementResult(label, beta + (1.0 - beta) * q, {"beta": beta})


@dataclass(frozen=True)
class JointBeaconPosterior:
    """Joint (location, beacon-state) posterior after an acoustic increment."""

    particles: ParticleSet  # marginal over beacon state
    beacon_failed_probability: float
    functional_posterior: np.ndarray  # per-particle P(functional | failure)
    conditional_failed: ParticleSet  # location posterior given both beacons failed


def joint_beacon_update(
    ps: ParticleSet,
    failure_if_functional: np.ndarray,
    functional_prior: float | np.ndarray | None = None,
) -> JointBeaconPosterior:
    """Bayes update over the joint (location, beacon-state) space.

    A functional beacon system fails to be detected with the acoustic
    failure probability; a failed system is never detected (failure 1).
    The marginal location posterior and the posterior probability that the
    beacons failed come out of the same joint table. Conditioning the joint
    on the failed state reproduces the prior weights: an acoustic increment
    carries no information if the beacons could not transmit.
    """
    if functional_prior is None:
        if ps.beacon_functional is None:
            raise DomainError("particles carry no beacon-state prior; pass functional_prior")
        p_func = ps.beacon_functional
    else:
        p_func = np.broadcast_to(np.asarray(functional_prior, dtype=np.float64), (len(ps),))
    if np.any(p_func < 0) or np.any(p_func > 1):
        raise DomainError("functional prior must lie in [0, 1]")
    failure = np.asarray(failure_if_functional, dtype=np.float64)
    if len(failure) != len(ps):
        raise DomainError("failure length != particle count")
    a = ps.weights * p_func * failure  # functional branch
    b = ps.weights * (1.0 - p_func)  # failed branch: failure is certain
    z = float(np.sum(a) + np.sum(b))
    if z <= 0.0:
        raise DomainError("search exhausts all probability: every joint state detected")
    marginal = (a + b) / z
    with np.errstate(divide="ignore", invalid="ignore"):
        func_post = np.where(a + b > 0, a / (a + b), 0.0)
    zb = float(np.sum(b))
    if zb > 0.0:
        conditional_failed = ps.with_weights(b / zb)
    else:
        conditional_failed = ps  # degenerate functional prior: slice undefined, keep prior
    return JointBeaconPosterior(
        particles=ps.with_weights(marginal).with_beacon_prior(func_post),
        beacon_failed_probability=zb / z,
        functional_posterior=func_post,
        conditional_failed=conditional_failed,
    )


@runtime_checkable
class SearchIncrement(Protocol):
    """Anything that can score a particle set: a label plus failure function."""

    label: str

    def evaluate(self, ps: ParticleSet) -> np.ndarray: ...


@dataclass(frozen=True)
class FunctionIncrement:
    """Adapter wrapping a plain callable as a SearchIncrement."""

    label: str
    fn: Callable[[ParticleSet], np.ndarray]

    def evaluate(self, ps: ParticleSet) -> np.ndarray:
        return self.fn(ps)


@dataclass
class PosteriorChain:
    """Ordered snapshots: the prior, then one posterior per increment."""

    snapshots: list[tuple[str, ParticleSet]]
    failed_stage: str | None = None
    error: Exception | None = None

    @property
    def final(self) -> ParticleSet:
        return self.snapshots[-1][1]

    def labels(self) -> list[str]:
        return [label for label, _ in self.snapshots]


def run_chain(
    prior: ParticleSet,
    increments: list[SearchIncrement],
    on_snapshot: Callable[[str, ParticleSet], None] | None = None,
) -> PosteriorChain:
    """Fold bayes_update over increments, snapshotting after each.

    The chain halts at the first failing increment; snapshots computed so far
    are preserved and the failure recorded on the returned chain.
    """
    snapshots: list[tuple[str, ParticleSet]] = [("prior", prior)]
    if on_snapshot:
        on_snapshot("prior", prior)
    current = prior
    for inc in increments:
        try:
            failure = inc.evaluate(current)
            current = bayes_update(current, failure)
        except Exception as exc:  # halt, keep partials
            return PosteriorChain(snapshots, failed_stage=inc.label, error=exc)
        snapshots.append((inc.label, current))
        if on_snapshot:
            on_snapshot(inc.label, current)
    return PosteriorChain(snapshots)


def systematic_resample(ps: ParticleSet, n: int, seed: int) -> ParticleSet:
    """Optional equal-weight resampling pass (off by default downstream)."""
    if n <= 0:
        raise DomainError("resample count must be positive")
    gen = rng.scalar_stream(seed, rng.LABEL_RESAMPLE)
    positions = (float(gen.random()) + np.arange(n)) / n
    cum = np.cumsum(ps.weights)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, positions, side="left")
    return ParticleSet.equal_weights(
        ps.lats[idx],
        ps.lons[idx],
        None if ps.scenarios is None else ps.scenarios[idx],
    )
