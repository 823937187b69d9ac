"""Hot numeric kernels with two interchangeable backends.

`DRIFTSEARCH_NUMBA=0` selects the pure-numpy reference backend; anything else
(default) selects the numba @njit backend when numba imports, falling back to
the reference with a one-time warning otherwise.

Both backends perform the same floating-point operations in the same order and
restrict themselves to exactly-rounded primitives (+ - * / sqrt floor), so
their outputs are bit-identical; `benchmarks/bench_kernels.py` compares their
speed and `tests/test_kernels.py` asserts the equality.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_flag = os.environ.get("DRIFTSEARCH_NUMBA", "1")
if _flag == "0":
    from . import _reference as _impl

    _BACKEND = "numpy"
else:
    try:
        from . import _jit as _impl

        _BACKEND = "numba"
    except ImportError:  # pragma: no cover - exercised only without numba
        warnings.warn(
            "numba unavailable; falling back to the pure-numpy kernel backend",
            RuntimeWarning,
        )
        from . import _reference as _impl

        _BACKEND = "numpy"


def backend() -> str:
    return _BACKEND


def bracket_times(times: np.ndarray, t: float) -> tuple[int, int, float]:
    """Indices and fraction for linear interpolation in a sorted time grid.

    Requires times[0] <= t <= times[-1]. Exact grid hits return theta == 0 so
    the lower value is reproduced exactly.
    """
    idx = int(np.searchsorted(times, t, side="right")) - 1
    if idx < 0:
        idx = 0
    if idx >= len(times) - 1:
        return len(times) - 1, len(times) - 1, 0.0
    lo, hi = idx, idx + 1
    theta = (t - times[lo]) / (times[hi] - times[lo])
    return lo, hi, theta


def interp_velocity(
    px: np.ndarray,
    py: np.ndarray,
    t: float,
    gx: np.ndarray,
    gy: np.ndarray,
    times: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse-distance interpolation of a gridded velocity field.

    Three nearest nodes weighted by 1/distance at the two bracketing grid
    times, then linear in time. A query within 1 m of a node returns that
    node's (time-interpolated) value exactly.
    """
    lo, hi, theta = bracket_times(times, t)
    return _impl.idw3_block(px, py, gx, gy, u[lo], u[hi], v[lo], v[hi], theta)


def advance_paths(
    x0,
    y0,
    times,
    current_arrays,
    wind_arrays,
    leeway_coeffs,
    e_cu,
    e_cv,
    e_wu,
    e_wv,
    e_dw,
    e_cw,
    signs,
):
    """Integrate particle paths through current + wind leeway.

    ``times`` are the path timestamps (decreasing for reverse drift; the
    negative dt applies the drift-vector negation). Noise arrays hold AR(1)
    values per step: field noise in knots, leeway residuals in cm/s; pass
    zeros for deterministic runs. ``signs`` is the per-step crosswind sign.
    Returns (px, py) of shape (n, len(times)).
    """
    cgx, cgy, ct, cu, cv = current_arrays
    wgx, wgy, wt, wu, wv = wind_arrays
    dw_slope, dw_off, cw_slope, cw_off = leeway_coeffs
    return _impl.advance_paths(
        x0, y0, times,
        cgx, cgy, ct, cu, cv,
        wgx, wgy, wt, wu, wv,
        dw_slope, dw_off, cw_slope, cw_off,
        e_cu, e_cv, e_wu, e_wv, e_dw, e_cw, signs,
    )


def cpa_ranges(px, py, times, ax, ay, bx, by, ta, tb):
    """Closest-point-of-approach range between drifting particles and legs.

    Particle paths are piecewise linear on ``times``; each leg's platform
    moves linearly from (ax, ay) at ta to (bx, by) at tb. Legs must lie inside
    the path time window. Returns (n, n_legs) CPA distances in meters.
    """
    times = np.ascontiguousarray(times, dtype=np.float64)
    n_legs = len(ax)
    k0 = np.empty(n_legs, dtype=np.int64)
    k1 = np.empty(n_legs, dtype=np.int64)
    for l in range(n_legs):
        if ta[l] < times[0] or tb[l] > times[-1] or not ta[l] < tb[l]:
            raise ValueError("leg time window outside particle path window")
        k0[l] = max(0, int(np.searchsorted(times, ta[l], side="right")) - 1)
        k1[l] = min(len(times) - 2, int(np.searchsorted(times, tb[l], side="left")) - 1)
    return _impl.cpa_ranges(px, py, times, ax, ay, bx, by, ta, tb, k0, k1)


def min_polyline_distance(px, py, sax, say, sbx, sby):
    """Minimum distance from each point to a set of segments, meters."""
    return _impl.min_polyline_distance(px, py, sax, say, sbx, sby)


def bin_weights(x, y, w, xmin, ymin, cell, nx, ny):
    """Sum weights into half-open grid cells; returns (values[ny, nx], off_mass)."""
    ix = np.floor((x - xmin) / cell).astype(np.int64)
    iy = np.floor((y - ymin) / cell).astype(np.int64)
    inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    flat = iy[inside] * nx + ix[inside]
    values = _impl.accumulate_bins(flat, np.ascontiguousarray(w[inside]), nx * ny)
    off = float(np.sum(w[~inside]))
    return values.reshape(ny, nx), off
