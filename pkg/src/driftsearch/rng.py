"""Deterministic random-stream derivation.

Every stochastic draw in the package comes from a Philox counter RNG keyed by
(run seed, phase, particle id, purpose). Streams are therefore independent of
particle chunking, worker count and evaluation order, which is what makes
byte-identical re-runs possible.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

# Purpose ids (second key word, low byte).
CUR_U = 0
CUR_V = 1
WIND_U = 2
WIND_V = 3
LEE_DW = 4
LEE_CW = 5
CROSSWIND = 6

# Phase ids partition streams between pipeline stages that both simulate drift.
PHASE_GENERIC = 0
PHASE_REVERSE_DRIFT = 1
PHASE_SURFACE_DRIFT = 2

# Non-particle streams (scenario sampling, mixing) use a distinct high bit so
# they can never collide with a particle stream.
_SCALAR_STREAM = 1 << 62

_MASK64 = (1 << 64) - 1


def particle_stream(seed: int, particle_id: int, purpose: int, phase: int = PHASE_GENERIC) -> Generator:
    """Generator for one (particle, purpose) stream within a phase."""
    if not 0 <= purpose < 256:
        raise ValueError(f"purpose out of range: {purpose}")
    if particle_id < 0:
        raise ValueError(f"particle id must be nonnegative: {particle_id}")
    word = (phase << 48) | ((particle_id & 0xFFFFFFFFFF) << 8) | purpose
    key = np.array([seed & _MASK64, word & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


def scalar_stream(seed: int, label: int) -> Generator:
    """Generator for a whole-operation stream (scenario build, mixing, ...)."""
    key = np.array([seed & _MASK64, (_SCALAR_STREAM | label) & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


# Labels for scalar streams.
LABEL_UNIFORM_DISK = 1
LABEL_CIRCULAR_NORMAL = 2
LABEL_POLYGON_BASE = 0x100  # + observation index
LABEL_MIX = 3
LABEL_RESAMPLE = 4
