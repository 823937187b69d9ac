"""HTTP planning service: sessions, increments, heatmaps, allocations.

The service wraps the exact batch code path: an increment POSTed to a session
runs the same evaluation and Bayes update as `pipeline.run`, so replaying a
config's increments interactively reproduces the batch snapshots bit for bit
(the manifest endpoint exposes the digests proving it).

Endpoints live under /v1; all payloads are JSON except heatmap images.
"""

from __future__ import annotations

import threading
from typing import Any

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import __version__
from .allocation import ExponentialDetection, evaluate as eval_allocation, from_cell_map, optimize
from .bayes import bayes_update
from .geo import DomainError, GridSpec, ParticleSet, grid_aggregate
from .pipeline import (
    RunConfig,
    build_increment,
    build_prior,
    load_config,
    parse_config,
    snapshot_csv,
    _digest,
)


class Session:
    def __init__(self, sid: str, config: RunConfig, prior: ParticleSet):
        self.id = sid
        self.config = config
        self.snapshots: list[tuple[str, ParticleSet]] = [("prior", prior)]
        self.increment_specs: list[dict] = []
        self.lock = threading.Lock()

    @property
    def current(self) -> ParticleSet:
        return self.snapshots[-1][1]


class CreateSessionRequest(BaseModel):
    config: dict[str, Any] | None = None
    config_path: str | None = None


class UndoRequest(BaseModel):
    to: int = Field(ge=0)


class AllocationRequest(BaseModel):
    budget_hours: float = Field(gt=0)
    cell_size_m: float | None = Field(default=None, gt=0)
    sweep_rate_per_hour: float = Field(default=1.0, gt=0)
    snapshot: int | None = None


def _ess(ps: ParticleSet) -> float:
    return float(1.0 / np.sum(ps.weights**2))


def create_app(default_config: RunConfig | None = None) -> FastAPI:
    app = FastAPI(title="driftsearch planning service", version=__version__)
    sessions: dict[str, Session] = {}
    counter = threading.Lock()
    state = {"next_id": 1}

    def get_session(sid: str) -> Session:
        if sid not in sessions:
            raise HTTPException(404, f"unknown session {sid}")
        return sessions[sid]

    def summary(sess: Session, index: int) -> dict:
        label, ps = sess.snapshots[index]
        cm = grid_aggregate(ps, sess.config.grid_spec())
        iy, ix = np.unravel_index(int(np.argmax(cm.values)), cm.values.shape)
        cx, cy = cm.cell_centers()
        lat, lon = sess.config.frame.unproject_arrays(
            np.array([cx[ix]]), np.array([cy[iy]])
        )
        return {
            "index": index,
            "label": label,
            "n_particles": len(ps),
            "effective_sample_size": _ess(ps),
            "top_cell": {
                "lat": float(lat[0]),
                "lon": float(lon[0]),
                "probability": float(cm.values[iy, ix]),
            },
        }

    def session_state(sess: Session) -> dict:
        disk = sess.config.disk
        return {
            "session_id": sess.id,
            "config_digest": sess.config.config_digest(),
            "disk": {
                "center_lat": disk.center.lat,
                "center_lon": disk.center.lon,
                "radius_m": disk.radius_m,
            },
            "chain": [summary(sess, i) for i in range(len(sess.snapshots))],
            "increments": sess.increment_specs,
        }

    def grid_for(sess: Session, cell_m: float | None) -> GridSpec:
        return sess.config.grid_spec(cell_m)

    def snapshot_or_404(sess: Session, k: int) -> tuple[str, ParticleSet]:
        if not 0 <= k < len(sess.snapshots):
            raise HTTPException(404, f"no snapshot {k}; chain has {len(sess.snapshots)}")
        return sess.snapshots[k]

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        if req.config_path:
            config = load_config(req.config_path)
        elif req.config is not None:
            base = default_config.base_dir if default_config else "."
            try:
                config = parse_config(req.config, base_dir=base)
            except DomainError as exc:
                raise HTTPException(400, f"invalid config: {exc}")
        elif default_config is not None:
            config = default_config
        else:
            raise HTTPException(400, "no config supplied and no server default")
        try:
            prior = build_prior(config)
        except DomainError as exc:
            raise HTTPException(400, f"prior construction failed: {exc}")
        with counter:
            sid = f"s{state['next_id']:04d}"
            state["next_id"] += 1
        sessions[sid] = Session(sid, config, prior)
        return session_state(sessions[sid])

    @app.get("/v1/sessions")
    def list_sessions():
        return {"sessions": [session_state(s) for s in sessions.values()]}

    @app.get("/v1/sessions/{sid}")
    def get_state(sid: str):
        return session_state(get_session(sid))

    @app.get("/v1/sessions/{sid}/chain")
    def get_chain(sid: str):
        sess = get_session(sid)
        return {"chain": [summary(sess, i) for i in range(len(sess.snapshots))]}

    @app.post("/v1/sessions/{sid}/increments")
    def post_increment(sid: str, spec: dict):
        sess = get_session(sid)
        with sess.lock:
            try:
                inc = build_increment(spec, sess.config)
            except (DomainError, KeyError, ValueError, OSError) as exc:
                raise HTTPException(400, f"invalid increment: {exc}")
            try:
                failure = inc.evaluate(sess.current)
                updated = bayes_update(sess.current, failure)
            except DomainError as exc:
                raise HTTPException(500, f"update failed at {inc.label}: {exc}")
            sess.snapshots.append((inc.label, updated))
            sess.increment_specs.append(spec)
        return summary(sess, len(sess.snapshots) - 1)

    @app.post("/v1/sessions/{sid}/undo")
    def undo(sid: str, req: UndoRequest):
        sess = get_session(sid)
        with sess.lock:
            if req.to >= len(sess.snapshots):
                raise HTTPException(400, f"cannot undo forward to {req.to}")
            sess.snapshots = sess.snapshots[: req.to + 1]
            sess.increment_specs = sess.increment_specs[: req.to]
        return session_state(sess)

    @app.get("/v1/sessions/{sid}/snapshots/{k}/grid")
    def snapshot_grid(sid: str, k: int, cell_m: float | None = None):
        sess = get_session(sid)
        label, ps = snapshot_or_404(sess, k)
        grid = grid_for(sess, cell_m)
        cm = grid_aggregate(ps, grid)
        return {
            "label": label,
            "nx": grid.nx,
            "ny": grid.ny,
            "cell_size_m": grid.cell_size_m,
            "extent_m": list(grid.extent),
            "origin": {"lat": grid.frame.origin.lat, "lon": grid.frame.origin.lon},
            # rows south to north (iy ascending); renderers flip for display
            "values": cm.values.tolist(),
            "max_value": float(cm.values.max()),
            "off_extent_mass": cm.off_extent_mass,
        }

    @app.get("/v1/sessions/{sid}/snapshots/{k}/heatmap.png")
    def snapshot_png(sid: str, k: int, cell_m: float | None = None):
        sess = get_session(sid)
        _, ps = snapshot_or_404(sess, k)
        cm = grid_aggregate(ps, grid_for(sess, cell_m))
        return Response(cm.to_png(), media_type="image/png")

    @app.get("/v1/sessions/{sid}/snapshots/{k}/heatmap.pgm")
    def snapshot_pgm(sid: str, k: int, cell_m: float | None = None):
        sess = get_session(sid)
        _, ps = snapshot_or_404(sess, k)
        cm = grid_aggregate(ps, grid_for(sess, cell_m))
        return Response(cm.to_pgm(), media_type="image/x-portable-graymap")

    @app.get("/v1/sessions/{sid}/snapshots/{k}/particles.csv")
    def snapshot_particles(sid: str, k: int):
        sess = get_session(sid)
        _, ps = snapshot_or_404(sess, k)
        return Response(snapshot_csv(ps), media_type="text/csv")

    @app.get("/v1/sessions/{sid}/manifest")
    def manifest(sid: str):
        sess = get_session(sid)
        stages = [
            {"label": label, "snapshot_digest": _digest(snapshot_csv(ps))}
            for label, ps in sess.snapshots
        ]
        return {
            "config_digest": sess.config.config_digest(),
            "versions": {"driftsearch": __version__, "numpy": np.__version__},
            "stages": stages,
        }

    @app.post("/v1/sessions/{sid}/allocation")
    def allocation(sid: str, req: AllocationRequest):
        sess = get_session(sid)
        k = req.snapshot if req.snapshot is not None else len(sess.snapshots) - 1
        _, ps = snapshot_or_404(sess, k)
        grid = grid_for(sess, req.cell_size_m)
        cm = grid_aggregate(ps, grid)
        try:
            prior, indices = from_cell_map(cm)
        except DomainError as exc:
            raise HTTPException(500, f"allocation failed: {exc}")
        det = ExponentialDetection(req.sweep_rate_per_hour, len(prior))
        alloc = optimize(prior, det, req.budget_hours)
        achieved, cost = eval_allocation(alloc, prior, det)
        cx, cy = cm.cell_centers()
        cells = []
        for (iy, ix), effort, p in zip(indices, alloc.efforts, prior.probs):
            if effort <= 0:
                continue
            lat, lon = grid.frame.unproject_arrays(
                np.array([cx[ix]]), np.array([cy[iy]])
            )
            cells.append(
                {
                    "ix": int(ix),
                    "iy": int(iy),
                    "lat": float(lat[0]),
                    "lon": float(lon[0]),
                    "effort_hours": float(effort),
                    "prior_probability": float(p),
                }
            )
        return {
            "snapshot": k,
            "budget_hours": req.budget_hours,
            "achieved_detection_probability": achieved,
            "spent_hours": cost,
            "cell_size_m": grid.cell_size_m,
            "cells": cells,
        }

    return app
