"""Pure-numpy kernel backend: vectorized across particles, python over steps.

Operation-for-operation mirror of `_jit`; keep the two in sync. Only exactly
rounded float ops appear here (see package docstring), so results are
bit-identical to the numba backend.
"""

from __future__ import annotations

import numpy as np

KNOT_MS = 1852.0 / 3600.0
SNAP_DISTANCE_M = 1.0


def _nearest3(px: np.ndarray, py: np.ndarray, gx: np.ndarray, gy: np.ndarray):
    """First-occurrence argmin three times: indices and distances of the
    3 nearest nodes, ties resolved to the lowest node index."""
    dx = px[:, None] - gx[None, :]
    dy = py[:, None] - gy[None, :]
    d = np.sqrt(dx * dx + dy * dy)
    n = px.shape[0]
    rows = np.arange(n)
    idx = np.empty((n, 3), dtype=np.int64)
    dist = np.empty((n, 3))
    scratch = d.copy()
    for k in range(3):
        j = np.argmin(scratch, axis=1)
        idx[:, k] = j
        dist[:, k] = d[rows, j]
        scratch[rows, j] = np.inf
    return idx, dist


def idw3_block(px, py, gx, gy, u_lo, u_hi, v_lo, v_hi, theta):
    idx, dist = _nearest3(px, py, gx, gy)
    i0, i1, i2 = idx[:, 0], idx[:, 1], idx[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = 1.0 / dist[:, 0]
        w1 = 1.0 / dist[:, 1]
        w2 = 1.0 / dist[:, 2]
        den = w0 + w1 + w2
        ulo = (w0 * u_lo[i0] + w1 * u_lo[i1] + w2 * u_lo[i2]) / den
        uhi = (w0 * u_hi[i0] + w1 * u_hi[i1] + w2 * u_hi[i2]) / den
        vlo = (w0 * v_lo[i0] + w1 * v_lo[i1] + w2 * v_lo[i2]) / den
        vhi = (w0 * v_hi[i0] + w1 * v_hi[i1] + w2 * v_hi[i2]) / den
    u = (1.0 - theta) * ulo + theta * uhi
    v = (1.0 - theta) * vlo + theta * vhi
    snap = dist[:, 0] < SNAP_DISTANCE_M
    if np.any(snap):
        u = np.where(snap, (1.0 - theta) * u_lo[i0] + theta * u_hi[i0], u)
        v = np.where(snap, (1.0 - theta) * v_lo[i0] + theta * v_hi[i0], v)
    return u, v


def _bisect_right(times: np.ndarray, t: float) -> int:
    return int(np.searchsorted(times, t, side="right"))


def _sample_field(x, y, t, gx, gy, ft, fu, fv):
    idx = _bisect_right(ft, t) - 1
    if idx < 0:
        idx = 0
    if idx >= len(ft) - 1:
        lo = hi = len(ft) - 1
        theta = 0.0
    else:
        lo, hi = idx, idx + 1
        theta = (t - ft[lo]) / (ft[hi] - ft[lo])
    return idw3_block(x, y, gx, gy, fu[lo], fu[hi], fv[lo], fv[hi], theta)


def advance_paths(
    x0, y0, times,
    cgx, cgy, ct, cu, cv,
    wgx, wgy, wt, wu, wv,
    dw_slope, dw_off, cw_slope, cw_off,
    e_cu, e_cv, e_wu, e_wv, e_dw, e_cw, signs,
):
    n = x0.shape[0]
    n_steps = times.shape[0] - 1
    px = np.empty((n, n_steps + 1))
    py = np.empty((n, n_steps + 1))
    x = x0.astype(np.float64).copy()
    y = y0.astype(np.float64).copy()
    px[:, 0] = x
    py[:, 0] = y
    for k in range(n_steps):
        t = times[k]
        dt_s = (times[k + 1] - times[k]) * 60.0
        cu_k, cv_k = _sample_field(x, y, t, cgx, cgy, ct, cu, cv)
        wu_k, wv_k = _sample_field(x, y, t, wgx, wgy, wt, wu, wv)
        uw = (wu_k + e_wu[:, k]) * KNOT_MS
        vw = (wv_k + e_wv[:, k]) * KNOT_MS
        vx = (cu_k + e_cu[:, k]) * KNOT_MS
        vy = (cv_k + e_cv[:, k]) * KNOT_MS
        wspd = np.sqrt(uw * uw + vw * vw)
        windy = wspd > 0.0
        safe = np.where(windy, wspd, 1.0)
        dwm = (dw_slope * wspd + dw_off + e_dw[:, k]) * 0.01
        cwm = (cw_slope * wspd + cw_off + e_cw[:, k]) * 0.01
        ux = uw / safe
        uy = vw / safe
        s = signs[:, k]
        # crosswind unit is 90° clockwise of downwind at sign +1;
        # zero wind has no leeway direction, hence no leeway at all
        lee_x = np.where(windy, dwm * ux + s * cwm * uy, 0.0)
        lee_y = np.where(windy, dwm * uy + s * cwm * (-ux), 0.0)
        vx = vx + lee_x
        vy = vy + lee_y
        x = x + vx * dt_s
        y = y + vy * dt_s
        px[:, k + 1] = x
        py[:, k + 1] = y
    return px, py


def cpa_ranges(px, py, times, ax, ay, bx, by, ta, tb, k0, k1):
    n = px.shape[0]
    n_legs = ax.shape[0]
    out = np.empty((n, n_legs))
    for l in range(n_legs):
        leg_dt = tb[l] - ta[l]
        best = np.full(n, np.inf)
        for k in range(int(k0[l]), int(k1[l]) + 1):
            t_lo = max(ta[l], times[k])
            t_hi = min(tb[l], times[k + 1])
            seg_dt = times[k + 1] - times[k]
            f_lo = (t_lo - times[k]) / seg_dt
            f_hi = (t_hi - times[k]) / seg_dt
            g_lo = (t_lo - ta[l]) / leg_dt
            g_hi = (t_hi - ta[l]) / leg_dt
            p_lo_x = px[:, k] + f_lo * (px[:, k + 1] - px[:, k])
            p_lo_y = py[:, k] + f_lo * (py[:, k + 1] - py[:, k])
            p_hi_x = px[:, k] + f_hi * (px[:, k + 1] - px[:, k])
            p_hi_y = py[:, k] + f_hi * (py[:, k + 1] - py[:, k])
            q_lo_x = ax[l] + g_lo * (bx[l] - ax[l])
            q_lo_y = ay[l] + g_lo * (by[l] - ay[l])
            q_hi_x = ax[l] + g_hi * (bx[l] - ax[l])
            q_hi_y = ay[l] + g_hi * (by[l] - ay[l])
            r0x = p_lo_x - q_lo_x
            r0y = p_lo_y - q_lo_y
            r1x = p_hi_x - q_hi_x
            r1y = p_hi_y - q_hi_y
            dx = r1x - r0x
            dy = r1y - r0y
            dd = dx * dx + dy * dy
            safe = np.where(dd > 0.0, dd, 1.0)
            s = -(r0x * dx + r0y * dy) / safe
            s = np.where(dd > 0.0, s, 0.0)
            s = np.minimum(1.0, np.maximum(0.0, s))
            mx = r0x + s * dx
            my = r0y + s * dy
            d = np.sqrt(mx * mx + my * my)
            best = np.minimum(best, d)
        out[:, l] = best
    return out


def min_polyline_distance(px, py, sax, say, sbx, sby):
    n = px.shape[0]
    best = np.full(n, np.inf)
    for s in range(sax.shape[0]):
        wx = sbx[s] - sax[s]
        wy = sby[s] - say[s]
        ww = wx * wx + wy * wy
        rx = px - sax[s]
        ry = py - say[s]
        if ww > 0.0:
            t = (rx * wx + ry * wy) / ww
            t = np.minimum(1.0, np.maximum(0.0, t))
        else:
            t = np.zeros(n)
        dx = rx - t * wx
        dy = ry - t * wy
        d = np.sqrt(dx * dx + dy * dy)
        best = np.minimum(best, d)
    return best


def accumulate_bins(flat_idx, w, size):
    if len(flat_idx) == 0:
        return np.zeros(size)
    return np.bincount(flat_idx, weights=w, minlength=size).astype(np.float64)
