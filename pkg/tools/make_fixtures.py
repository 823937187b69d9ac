"""Generate the committed mini fixture: a small synthetic loss scenario.

Writes fixtures/mini/: uniform current and wind fields, two recovery
polygons downstream of the loss point, a surface-search sortie plan with
lateral-range tables, acoustic tracklines, two sonar sweep regions, and the
run config wiring them together. Deterministic output; run from the repo
root: python tools/make_fixtures.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from driftsearch.environment import uniform_field
from driftsearch.geo import GeoPoint, LocalFrame
from driftsearch.units import KNOT_MS, NM_M, parse_time

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "fixtures" / "mini"

LKP = GeoPoint(2.98, -30.59)
FRAME = LocalFrame(LKP)
CRASH = "2009-06-01T02:14:00Z"
CRASH_MIN = parse_time(CRASH)

CUR_U, CUR_V = 0.33, 0.12  # knots
WIND_U, WIND_V = 5.66, 5.66  # knots (8 kt toward NE)


def mean_drift_velocity_ms(sign=1.0):
    uw, vw = WIND_U * KNOT_MS, WIND_V * KNOT_MS
    w = math.hypot(uw, vw)
    dw = (1.17 * w + 10.2) * 0.01
    cw = (0.04 * w + 3.9) * 0.01
    ux, uy = uw / w, vw / w
    vx = CUR_U * KNOT_MS + dw * ux + sign * cw * uy
    vy = CUR_V * KNOT_MS + dw * uy + sign * cw * (-ux)
    return vx, vy


def rounded_ring(xy_m):
    lats, lons = FRAME.unproject_arrays(
        np.array([p[0] for p in xy_m]), np.array([p[1] for p in xy_m])
    )
    return [[round(float(lon), 6), round(float(lat), 6)] for lat, lon in zip(lats, lons)]


def square_xy(cx, cy, half):
    return [
        (cx - half, cy - half),
        (cx + half, cy - half),
        (cx + half, cy + half),
        (cx - half, cy + half),
        (cx - half, cy - half),
    ]


def feature_collection(geoms, props=None):
    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "geometry": g, "properties": (props or [{}] * len(geoms))[i]}
            for i, g in enumerate(geoms)
        ],
    }


def write_fields():
    times = np.arange(
        parse_time("2009-05-25T00:00:00Z"), parse_time("2009-06-12T00:00:00Z") + 1, 720.0
    )
    cur = uniform_field("current", CUR_U, CUR_V, LKP, 200 * NM_M, 50 * NM_M, times)
    wind = uniform_field("wind", WIND_U, WIND_V, LKP, 200 * NM_M, 50 * NM_M, times)
    (OUT / "current.csv").write_text(cur.to_csv())
    (OUT / "wind.csv").write_text(wind.to_csv())


def write_recoveries():
    vx, vy = mean_drift_velocity_ms()
    polys = []
    times = []
    for iso in ("2009-06-06T09:00:00Z", "2009-06-07T00:00:00Z"):
        dt_s = (parse_time(iso) - CRASH_MIN) * 60.0
        cx, cy = vx * dt_s, vy * dt_s
        ring = rounded_ring(square_xy(cx, cy, 3 * NM_M))
        polys.append({"type": "Polygon", "coordinates": [ring]})
        times.append(iso)
    fc = feature_collection(polys, [{"recovery_time": t} for t in times])
    (OUT / "recoveries.geojson").write_text(json.dumps(fc, indent=2))
    return times


def write_sorties():
    sorties = []
    # three aircraft sorties sweeping the northeast corridor on successive days
    for day, (base_x, base_y) in enumerate([(0.0, 0.0), (25.0, 15.0), (50.0, 30.0)]):
        legs = []
        for k in range(4):
            y = (base_y + 6.0 * k - 9.0) * NM_M
            x0, x1 = (base_x - 22.0) * NM_M, (base_x + 22.0) * NM_M
            if k % 2:
                x0, x1 = x1, x0
            start_lat, start_lon = FRAME.unproject_arrays(np.array([x0]), np.array([y]))
            end_lat, end_lon = FRAME.unproject_arrays(np.array([x1]), np.array([y]))
            t0 = CRASH_MIN + (6.0 + 24.0 * day) * 60.0 + k * 30.0
            legs.append(
                {
                    "start": [round(float(start_lat[0]), 6), round(float(start_lon[0]), 6)],
                    "end": [round(float(end_lat[0]), 6), round(float(end_lon[0]), 6)],
                    "start_time": iso(t0),
                    "end_time": iso(t0 + 18.0),
                    "speed_kts": 150.0,
                    "altitude_ft": 1500.0,
                    "visibility": "good",
                    "sea_state": "moderate",
                }
            )
        sorties.append({"platform": "aircraft", "legs": legs})
    # one slow ship track near the loss point on days 2-3
    ship_legs = []
    for k, (x0, y0, x1, y1) in enumerate(
        [(-10.0, -5.0, 15.0, 5.0), (15.0, 5.0, -5.0, 18.0)]
    ):
        t0 = CRASH_MIN + (30.0 + 10.0 * k) * 60.0
        a_lat, a_lon = FRAME.unproject_arrays(np.array([x0 * NM_M]), np.array([y0 * NM_M]))
        b_lat, b_lon = FRAME.unproject_arrays(np.array([x1 * NM_M]), np.array([y1 * NM_M]))
        ship_legs.append(
            {
                "start": [round(float(a_lat[0]), 6), round(float(a_lon[0]), 6)],
                "end": [round(float(b_lat[0]), 6), round(float(b_lon[0]), 6)],
                "start_time": iso(t0),
                "end_time": iso(t0 + 150.0),
                "speed_kts": 10.0,
                "altitude_ft": 0.0,
                "visibility": "good",
                "sea_state": "moderate",
            }
        )
    sorties.append({"platform": "ship", "legs": ship_legs})
    (OUT / "sorties.json").write_text(json.dumps({"sorties": sorties}, indent=2))


def iso(minutes: float) -> str:
    from driftsearch.units import format_time

    return format_time(minutes)


def write_tables():
    air = (
        "altitude_min_ft,altitude_max_ft,speed_min_kts,speed_max_kts,visibility,sea_state,range_m,probability\n"
        "500,5000,100,250,good,moderate,0,0.78\n"
        "500,5000,100,250,good,moderate,1852,0.65\n"
        "500,5000,100,250,good,moderate,3704,0.45\n"
        "500,5000,100,250,good,moderate,9260,0.15\n"
        "500,5000,100,250,good,moderate,18520,0.0\n"
    )
    ship = (
        "altitude_min_ft,altitude_max_ft,speed_min_kts,speed_max_kts,visibility,sea_state,range_m,probability\n"
        "0,100,5,30,good,moderate,0,0.9\n"
        "0,100,5,30,good,moderate,1852,0.7\n"
        "0,100,5,30,good,moderate,5556,0.3\n"
        "0,100,5,30,good,moderate,11112,0.0\n"
    )
    (OUT / "lrt_air.csv").write_text(air)
    (OUT / "lrt_ship.csv").write_text(ship)


def write_tracklines():
    lines = []
    for k in range(5):  # north-south lines through the center strip
        x = (k - 2) * 1.8 * NM_M
        lats, lons = FRAME.unproject_arrays(
            np.array([x, x]), np.array([-30 * NM_M, 30 * NM_M])
        )
        lines.append(
            {
                "type": "LineString",
                "coordinates": [
                    [round(float(lons[0]), 6), round(float(lats[0]), 6)],
                    [round(float(lons[1]), 6), round(float(lats[1]), 6)],
                ],
            }
        )
    for k in range(2):  # two east-west ties
        y = (k * 2 - 1) * 10 * NM_M
        lats, lons = FRAME.unproject_arrays(
            np.array([-25 * NM_M, 25 * NM_M]), np.array([y, y])
        )
        lines.append(
            {
                "type": "LineString",
                "coordinates": [
                    [round(float(lons[0]), 6), round(float(lats[0]), 6)],
                    [round(float(lons[1]), 6), round(float(lats[1]), 6)],
                ],
            }
        )
    (OUT / "tracklines.geojson").write_text(json.dumps(feature_collection(lines), indent=2))


def write_sweeps():
    r2009 = {
        "type": "Polygon",
        "coordinates": [rounded_ring(square_xy(2 * NM_M, -18 * NM_M, 6 * NM_M))],
    }
    (OUT / "sweep2009.geojson").write_text(json.dumps(feature_collection([r2009]), indent=2))
    rect2010 = {
        "type": "Polygon",
        "coordinates": [rounded_ring(square_xy(-14 * NM_M, 10 * NM_M, 7 * NM_M))],
    }
    pent = []
    for k in range(5):
        a = 2 * math.pi * k / 5
        pent.append((-22 * NM_M + 5 * NM_M * math.cos(a), -6 * NM_M + 5 * NM_M * math.sin(a)))
    pent.append(pent[0])
    poly2010 = {"type": "Polygon", "coordinates": [rounded_ring(pent)]}
    (OUT / "sweep2010.geojson").write_text(
        json.dumps(feature_collection([rect2010, poly2010]), indent=2)
    )


def write_config(recovery_times):
    config = {
        "seed": 20090601,
        "n_particles": 5000,
        "crash_time": CRASH,
        "disk": {"center_lat": LKP.lat, "center_lon": LKP.lon, "radius_nm": 40.0},
        "grid": {"cell_size_m": 3704.0, "margin_cells": 1},
        "environment": {
            "current_csv": "current.csv",
            "wind_csv": "wind.csv",
            "current_sigma_kts": 0.22,
            "wind_sigma_kts": 2.0,
            "noise_half_life_min": 60.0,
        },
        "drift": {"time_step_min": 60.0, "stochastic": True},
        "scenarios": [
            {"kind": "uniform_disk", "weight": 0.35, "samples": 5000},
            {"kind": "circular_normal", "weight": 0.35, "sigma_nm": 8.0, "samples": 5000},
            {
                "kind": "reverse_drift",
                "weight": 0.30,
                "observations": [
                    {
                        "polygon_geojson": "recoveries.geojson",
                        "polygon_index": 0,
                        "recovery_time": recovery_times[0],
                        "samples": 4000,
                    },
                    {
                        "polygon_geojson": "recoveries.geojson",
                        "polygon_index": 1,
                        "recovery_time": recovery_times[1],
                        "samples": 4000,
                    },
                ],
            },
        ],
        "increments": [
            {
                "label": "surface-2009",
                "type": "surface",
                "start_time": CRASH,
                "drift_days": 5.9,
                "sorties": "sorties.json",
                "tables": {"aircraft": "lrt_air.csv", "ship": "lrt_ship.csv"},
                "ineffective_probability": 0.7,
            },
            {
                "label": "acoustic-2009",
                "type": "acoustic",
                "start_time": "2009-06-10T00:00:00Z",
                "tracklines": "tracklines.geojson",
                "lateral_range_m": 1730.0,
                "sensor_cap": 0.9,
                "beacon_survival": 0.8,
                "weight_independent": 0.25,
            },
            {
                "label": "sonar-2009",
                "type": "sweep",
                "start_time": "2009-08-01T00:00:00Z",
                "regions": "sweep2009.geojson",
                "p_inside": 0.9,
            },
            {
                "label": "sonar-2010",
                "type": "sweep",
                "start_time": "2010-04-01T00:00:00Z",
                "regions": "sweep2010.geojson",
                "p_inside": 0.9,
            },
        ],
        "workers": 1,
        "output_dir": "runs/mini",
    }
    (OUT / "config.json").write_text(json.dumps(config, indent=2))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_fields()
    times = write_recoveries()
    write_sorties()
    write_tables()
    write_tracklines()
    write_sweeps()
    write_config(times)
    print(f"fixture written to {OUT}")


if __name__ == "__main__":
    main()
