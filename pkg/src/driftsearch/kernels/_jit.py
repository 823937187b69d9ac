"""Numba @njit kernel backend.

Operation-for-operation mirror of `_reference`; keep the two in sync. No
fastmath anywhere: strict IEEE ordering is what guarantees bit-identical
results across backends.
"""

from __future__ import annotations

import numpy as np
from numba import njit

KNOT_MS = 1852.0 / 3600.0
SNAP_DISTANCE_M = 1.0


@njit(cache=True, nogil=True)
def _nearest3_scalar(x, y, gx, gy):
    d0 = np.inf
    d1 = np.inf
    d2 = np.inf
    i0 = -1
    i1 = -1
    i2 = -1
    for j in range(gx.shape[0]):
        dx = x - gx[j]
        dy = y - gy[j]
        d = np.sqrt(dx * dx + dy * dy)
        if d < d0:
            d2 = d1; i2 = i1
            d1 = d0; i1 = i0
            d0 = d; i0 = j
        elif d < d1:
            d2 = d1; i2 = i1
            d1 = d; i1 = j
        elif d < d2:
            d2 = d; i2 = j
    return i0, i1, i2, d0, d1, d2


@njit(cache=True, nogil=True)
def _idw3_scalar(x, y, gx, gy, u_lo, u_hi, v_lo, v_hi, theta):
    i0, i1, i2, d0, d1, d2 = _nearest3_scalar(x, y, gx, gy)
    if d0 < SNAP_DISTANCE_M:
        u = (1.0 - theta) * u_lo[i0] + theta * u_hi[i0]
        v = (1.0 - theta) * v_lo[i0] + theta * v_hi[i0]
        return u, v
    w0 = 1.0 / d0
    w1 = 1.0 / d1
    w2 = 1.0 / d2
    den = w0 + w1 + w2
    ulo = (w0 * u_lo[i0] + w1 * u_lo[i1] + w2 * u_lo[i2]) / den
    uhi = (w0 * u_hi[i0] + w1 * u_hi[i1] + w2 * u_hi[i2]) / den
    vlo = (w0 * v_lo[i0] + w1 * v_lo[i1] + w2 * v_lo[i2]) / den
    vhi = (w0 * v_hi[i0] + w1 * v_hi[i1] + w2 * v_hi[i2]) / den
    u = (1.0 - theta) * ulo + theta * uhi
    v = (1.0 - theta) * vlo + theta * vhi
    return u, v


@njit(cache=True, nogil=True)
def idw3_block(px, py, gx, gy, u_lo, u_hi, v_lo, v_hi, theta):
    n = px.shape[0]
    u = np.empty(n)
    v = np.empty(n)
    for i in range(n):
        u[i], v[i] = _idw3_scalar(px[i], py[i], gx, gy, u_lo, u_hi, v_lo, v_hi, theta)
    return u, v


@njit(cache=True, nogil=True)
def _bisect_right(times, t):
    lo = 0
    hi = times.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if t < times[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True)
def _sample_field_scalar(x, y, t, gx, gy, ft, fu, fv):
    idx = _bisect_right(ft, t) - 1
    if idx < 0:
        idx = 0
    if idx >= ft.shape[0] - 1:
        lo = ft.shape[0] - 1
        hi = lo
        theta = 0.0
    else:
        lo = idx
        hi = idx + 1
        theta = (t - ft[lo]) / (ft[hi] - ft[lo])
    return _idw3_scalar(x, y, gx, gy, fu[lo], fu[hi], fv[lo], fv[hi], theta)


@njit(cache=True, nogil=True)
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
    for i in range(n):
        x = x0[i]
        y = y0[i]
        px[i, 0] = x
        py[i, 0] = y
        for k in range(n_steps):
            t = times[k]
            dt_s = (times[k + 1] - times[k]) * 60.0
            cu_k, cv_k = _sample_field_scalar(x, y, t, cgx, cgy, ct, cu, cv)
            wu_k, wv_k = _sample_field_scalar(x, y, t, wgx, wgy, wt, wu, wv)
            uw = (wu_k + e_wu[i, k]) * KNOT_MS
            vw = (wv_k + e_wv[i, k]) * KNOT_MS
            vx = (cu_k + e_cu[i, k]) * KNOT_MS
            vy = (cv_k + e_cv[i, k]) * KNOT_MS
            wspd = np.sqrt(uw * uw + vw * vw)
            safe = wspd if wspd > 0.0 else 1.0
            dwm = (dw_slope * wspd + dw_off + e_dw[i, k]) * 0.01
            cwm = (cw_slope * wspd + cw_off + e_cw[i, k]) * 0.01
            ux = uw / safe
            uy = vw / safe
            s = signs[i, k]
            if wspd > 0.0:
                lee_x = dwm * ux + s * cwm * uy
                lee_y = dwm * uy + s * cwm * (-ux)
            else:
                lee_x = 0.0
                lee_y = 0.0
            vx = vx + lee_x
            vy = vy + lee_y
            x = x + vx * dt_s
            y = y + vy * dt_s
            px[i, k + 1] = x
            py[i, k + 1] = y
    return px, py


@njit(cache=True, nogil=True)
def cpa_ranges(px, py, times, ax, ay, bx, by, ta, tb, k0, k1):
    n = px.shape[0]
    n_legs = ax.shape[0]
    out = np.empty((n, n_legs))
    for l in range(n_legs):
        leg_dt = tb[l] - ta[l]
        for i in range(n):
            best = np.inf
            for k in range(k0[l], k1[l] + 1):
                t_lo = max(ta[l], times[k])
                t_hi = min(tb[l], times[k + 1])
                seg_dt = times[k + 1] - times[k]
                f_lo = (t_lo - times[k]) / seg_dt
                f_hi = (t_hi - times[k]) / seg_dt
                g_lo = (t_lo - ta[l]) / leg_dt
                g_hi = (t_hi - ta[l]) / leg_dt
                p_lo_x = px[i, k] + f_lo * (px[i, k + 1] - px[i, k])
                p_lo_y = py[i, k] + f_lo * (py[i, k + 1] - py[i, k])
                p_hi_x = px[i, k] + f_hi * (px[i, k + 1] - px[i, k])
                p_hi_y = py[i, k] + f_hi * (py[i, k + 1] - py[i, k])
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
                if dd > 0.0:
                    s = -(r0x * dx + r0y * dy) / dd
                else:
                    s = 0.0
                s = min(1.0, max(0.0, s))
                mx = r0x + s * dx
                my = r0y + s * dy
                d = np.sqrt(mx * mx + my * my)
                best = min(best, d)
            out[i, l] = best
    return out


@njit(cache=True, nogil=True)
def min_polyline_distance(px, py, sax, say, sbx, sby):
    n = px.shape[0]
    best = np.full(n, np.inf)
    for s in range(sax.shape[0]):
        wx = sbx[s] - sax[s]
        wy = sby[s] - say[s]
        ww = wx * wx + wy * wy
        for i in range(n):
            rx = px[i] - sax[s]
            ry = py[i] - say[s]
            if ww > 0.0:
                t = (rx * wx + ry * wy) / ww
                t = min(1.0, max(0.0, t))
            else:
                t = 0.0
            dx = rx - t * wx
            dy = ry - t * wy
            d = np.sqrt(dx * dx + dy * dy)
            if d < best[i]:
                best[i] = d
    return best


@njit(cache=True, nogil=True)
def accumulate_bins(flat_idx, w, size):
    out = np.zeros(size)
    for i in range(flat_idx.shape[0]):
        out[flat_idx[i]] += w[i]
    return out
