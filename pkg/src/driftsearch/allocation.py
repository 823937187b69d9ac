"""Optimal allocation of search effort over cells.

The object sits in one of J cells with probabilities p(j); detection in cell
j after effort z is b_j(z), concave and nondecreasing. For a budget T the
optimizer maximizes P(Z) = sum b_j(z_j) p(j) subject to sum z_j <= T.

The default family is exponential, b_j(z) = 1 - exp(-rho_j z): the classical
random-search law. Its optimum equalizes marginal rates p(j) rho_j
exp(-rho_j z_j) across funded cells, found here by bisection on the Lagrange
multiplier. Tabulated concave detection functions are handled by greedy
marginal analysis on discrete effort quanta.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geo import CellProbabilityMap, DomainError

EFFORT_SUM_TOL = 1e-9
_BISECT_ITERS = 200
_TABULATED_QUANTA = 10_000


@dataclass(frozen=True)
class CellPrior:
    """Cell probabilities p(j), summing to 1."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(probs < 0):
            raise DomainError("cell probabilities must be nonnegative")
        if abs(float(np.sum(probs)) - 1.0) > EFFORT_SUM_TOL:
            raise DomainError(f"cell probabilities sum to {np.sum(probs)}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)


class ExponentialDetection:
    """b_j(z) = 1 - exp(-rho_j z) with per-cell sweep rate rho_j > 0."""

    def __init__(self, rhos: np.ndarray | float, n_cells: int | None = None):
        if np.isscalar(rhos):
            if n_cells is None:
                raise DomainError("scalar rho needs n_cells")
            rhos = np.full(n_cells, float(rhos))
        rhos = np.asarray(rhos, dtype=np.float64)
        if np.any(rhos <= 0):
            raise DomainError("sweep rates must be positive")
        rhos.setflags(write=False)
        self.rhos = rhos

    def __len__(self) -> int:
        return len(self.rhos)

    def prob(self, efforts: np.ndarray) -> np.ndarray:
        return 1.0 - np.exp(-self.rhos * efforts)


class TabulatedDetection:
    """Per-cell piecewise-linear concave b_j given as (effort, prob) breakpoints.

    Every curve must start at (0, 0), be nondecreasing, bounded by 1, and have
    nonincreasing slopes (concavity); violating curves are rejected.
    """

    def __init__(self, curves: list[tuple[np.ndarray, np.ndarray]]):
        if not curves:
            raise DomainError("need at least one detection curve")
        checked = []
        for z, b in curves:
            z = np.asarray(z, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if z[0] != 0.0 or b[0] != 0.0:
                raise DomainError("detection curves must start at (0, 0)")
            if np.any(np.diff(z) <= 0):
                raise DomainError("curve efforts must be strictly increasing")
            if np.any(np.diff(b) < 0) or np.any(b > 1.0):
                raise DomainError("detection must be nondecreasing and bounded by 1")
            slopes = np.diff(b) / np.diff(z)
            if np.any(np.diff(slopes) > 1e-12):
                raise DomainError("requires concavity: curve slopes must not increase")
            checked.append((z, b))
        self.curves = checked

    def __len__(self) -> int:
        return len(self.curves)

    def prob(self, efforts: np.ndarray) -> np.ndarray:
        out = np.empty(len(self.curves))
        for j, (z, b) in enumerate(self.curves):
            # flat extrapolation beyond the last breakpoint
            out[j] = np.interp(efforts[j], z, b, left=0.0, right=b[-1])
        return out


@dataclass(frozen=True)
class Allocation:
    """Effort per cell under a budget."""

    efforts: np.ndarray
    budget: float

    def __post_init__(self) -> None:
        efforts = np.asarray(self.efforts, dtype=np.float64)
        if np.any(efforts < 0):
            raise DomainError("efforts must be nonnegative")
        if float(np.sum(efforts)) > self.budget + EFFORT_SUM_TOL:
            raise DomainError("allocation exceeds budget")
        efforts.setflags(write=False)
        object.__setattr__(self, "efforts", efforts)


def evaluate(
    alloc: Allocation | np.ndarray, prior: CellPrior, detfns
) -> tuple[float, float]:
    """(detection probability, total effort) for an allocation."""
    efforts = alloc.efforts if isinstance(alloc, Allocation) else np.asarray(alloc, dtype=np.float64)
    if len(efforts) != len(prior) or len(detfns) != len(prior):
        raise DomainError("allocation, prior and detection functions must align")
    if np.any(efforts < 0):
        raise DomainError("efforts must be nonnegative")
    p = float(np.sum(detfns.prob(efforts) * prior.probs))
    c = float(np.sum(efforts))
    return p, c


def _exponential_efforts(prior: CellPrior, det: ExponentialDetection, lam: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        raw = np.log(prior.probs * det.rhos / lam) / det.rhos
    return np.where(prior.probs > 0, np.maximum(0.0, raw), 0.0)


def optimize(prior: CellPrior, detfns, budget: float) -> Allocation:
    """Optimal allocation Z* with C(Z*) <= budget.

    Exponential family: z_j(lam) = max(0, ln(p_j rho_j / lam) / rho_j) spends
    exactly the budget at the multiplier found by bisection. Tabulated
    concave curves: greedy marginal analysis on budget/10^4 effort quanta.
    """
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    if len(detfns) != len(prior):
        raise DomainError("prior and detection functions must align")
    if budget == 0 or not np.any(prior.probs > 0):
        return Allocation(np.zeros(len(prior)), budget)
    if isinstance(detfns, ExponentialDetection):
        return _optimize_exponential(prior, detfns, budget)
    if isinstance(detfns, TabulatedDetection):
        return _optimize_tabulated(prior, detfns, budget)
    raise DomainError(f"unsupported detection family: {type(detfns).__name__}")


def _optimize_exponential(prior: CellPrior, det: ExponentialDetection, budget: float) -> Allocation:
    rates = prior.probs * det.rhos
    lam_hi = float(np.max(rates))  # zero effort everywhere
    lam_lo = lam_hi * math.exp(-float(np.max(det.rhos)) * budget)  # spends >= budget
    for _ in range(_BISECT_ITERS):
        lam = math.sqrt(lam_lo * lam_hi)
        spent = float(np.sum(_exponential_efforts(prior, det, lam)))
        if spent > budget:
            lam_lo = lam
        else:
            lam_hi = lam
    efforts = _exponential_efforts(prior, det, lam_hi)
    total = float(np.sum(efforts))
    if total > budget:  # guard against the last iterate landing a hair over
        efforts = efforts * (budget / total)
    return Allocation(efforts, budget)


def _optimize_tabulated(prior: CellPrior, det: TabulatedDetection, budget: float) -> Allocation:
    quantum = budget / _TABULATED_QUANTA
    efforts = np.zeros(len(prior))

    def gain(j: int) -> float:
        z, b = det.curves[j]
        now = np.interp(efforts[j], z, b, left=0.0, right=b[-1])
        nxt = np.interp(efforts[j] + quantum, z, b, left=0.0, right=b[-1])
        return float(prior.probs[j] * (nxt - now))

    heap = [(-gain(j), j) for j in range(len(prior)) if prior.probs[j] > 0]
    heapq.heapify(heap)
    for _ in range(_TABULATED_QUANTA):
        while heap:
            neg, j = heapq.heappop(heap)
            fresh = gain(j)
            if fresh <= 0.0:
                continue
            if -neg - fresh > 1e-15:  # stale entry: effort moved past a breakpoint
                heapq.heappush(heap, (-fresh, j))
                continue
            efforts[j] += quantum
            heapq.heappush(heap, (-gain(j), j))
            break
        else:
            break
    return Allocation(efforts, budget)


def posterior_given_failure(prior: CellPrior, alloc: Allocation, detfns) -> CellPrior:
    """Cell-space Bayes update: p~(j) proportional to (1 - b_j(z_j)) p(j)."""
    if len(alloc.efforts) != len(prior):
        raise DomainError("allocation and prior must align")
    numer = (1.0 - detfns.prob(alloc.efforts)) * prior.probs
    z = float(np.sum(numer))
    if z <= 0.0:
        raise DomainError("search exhausts all probability")
    return CellPrior(numer / z)


def from_cell_map(cell_map: CellProbabilityMap, include_empty: bool = False):
    """Flatten a gridded probability map into a CellPrior for planning.

    Returns (prior, indices) where indices[k] = (iy, ix) of prior cell k. The
    off-extent mass (if any) is dropped and the rest renormalized.
    """
    values = cell_map.values
    if include_empty:
        mask = np.ones_like(values, dtype=bool)
    else:
        mask = values > 0
    if not np.any(mask):
        raise DomainError("probability map is empty")
    probs = values[mask].astype(np.float64)
    probs = probs / float(np.sum(probs))
    indices = np.argwhere(mask)
    return CellPrior(probs), indices
