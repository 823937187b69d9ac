"""Unit constants and time parsing shared across the package.

Canonical internal units: meters for distance, knots for field velocities,
cm/s for leeway magnitudes, minutes-since-Unix-epoch (float, UTC) for time.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone

EARTH_RADIUS_M = 6_371_000.0
METERS_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0  # 111194.9266 m per degree of arc
NM_M = 1852.0
KNOT_MS = 1852.0 / 3600.0  # 0.51444... m/s
CMS_MS = 0.01
MIN_S = 60.0


def knots_to_ms(kts: float) -> float:
    return kts * KNOT_MS


def ms_to_knots(ms: float) -> float:
    return ms / KNOT_MS


def parse_time(value: str | float | int) -> float:
    """Parse an ISO-8601 timestamp (or pass through a number) to epoch minutes.

    Naive timestamps are taken as UTC. Numbers are already epoch minutes.
    """
    if isinstance(value, (int, float)):
        return float(value)
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp() / MIN_S


def format_time(minutes: float) -> str:
    """Epoch minutes back to ISO-8601 (UTC, second resolution)."""
    dt = datetime.fromtimestamp(minutes * MIN_S, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
