"""Shared fixtures: reference location, synthetic fields, small particle sets."""

from __future__ import annotations

import numpy as np
import pytest

from driftsearch.environment import uniform_field
from driftsearch.geo import Disk, GeoPoint, LocalFrame
from driftsearch.units import NM_M, parse_time

LKP = GeoPoint(2.98, -30.59)
CRASH_TIME = parse_time("2009-06-01T02:14:00Z")


@pytest.fixture
def lkp() -> GeoPoint:
    return LKP


@pytest.fixture
def frame() -> LocalFrame:
    return LocalFrame(LKP)


@pytest.fixture
def disk() -> Disk:
    return Disk(LKP, 40.0 * NM_M)


def make_uniform_env(cur_u=0.0, cur_v=0.0, wind_u=0.0, wind_v=0.0,
                     t0=CRASH_TIME - 24 * 60, t1=CRASH_TIME + 12 * 24 * 60,
                     center=LKP, radius_m=150 * NM_M, spacing_m=50 * NM_M):
    """Gridded uniform current+wind environment covering a generous window."""
    from driftsearch.drift import GriddedEnvironment

    times = np.array([t0, t1])
    cur = uniform_field("current", cur_u, cur_v, center, radius_m, spacing_m, times)
    wind = uniform_field("wind", wind_u, wind_v, center, radius_m, spacing_m, times)
    return GriddedEnvironment(cur, wind)


@pytest.fixture
def still_env():
    return make_uniform_env()


@pytest.fixture
def east_current_env():
    return make_uniform_env(cur_u=1.0)
