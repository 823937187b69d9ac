"""Batch pipeline: config validation, determinism, worker invariance, failure paths."""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from driftsearch.geo import DomainError
from driftsearch.pipeline import (
    build_prior,
    load_config,
    load_snapshot_csv,
    parse_config,
    run,
    snapshot_csv,
)

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "mini"


def mini_raw(**overrides):
    raw = json.loads((FIXTURE / "config.json").read_text())
    raw.update(overrides)
    return raw


def small_raw(tmp_path, n=600, increments=None, **overrides):
    """The mini fixture scaled down for fast unit runs."""
    raw = mini_raw(
        n_particles=n,
        output_dir=str(tmp_path / "out"),
        **overrides,
    )
    raw["scenarios"][0]["samples"] = n
    raw["scenarios"][1]["samples"] = n
    for obs in raw["scenarios"][2]["observations"]:
        obs["samples"] = 400
    if increments is not None:
        raw["increments"] = increments
    return raw


class TestConfigParsing:
    def test_fixture_config_loads(self):
        config = load_config(FIXTURE / "config.json")
        assert config.n_particles == 5000
        assert config.disk.radius_m == pytest.approx(40 * 1852.0)
        assert len(config.increments) == 4

    def test_missing_key_reported(self, tmp_path):
        raw = mini_raw()
        del raw["seed"]
        with pytest.raises(DomainError, match="missing required key"):
            parse_config(raw, base_dir=FIXTURE)

    def test_scenario_weights_validated(self, tmp_path):
        raw = mini_raw()
        raw["scenarios"][0]["weight"] = 0.9
        with pytest.raises(DomainError, match="sum to 1"):
            parse_config(raw, base_dir=FIXTURE)

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DRIFTSEARCH_OUTPUT_ROOT", str(tmp_path))
        config = parse_config(mini_raw(), base_dir=FIXTURE)
        assert str(config.output_dir).startswith(str(tmp_path))

    def test_increments_must_be_ordered(self):
        raw = mini_raw()
        raw["increments"][0], raw["increments"][3] = raw["increments"][3], raw["increments"][0]
        with pytest.raises(DomainError, match="ordered by time"):
            parse_config(raw, base_dir=FIXTURE)


class TestScenarioSpec:
    def test_kinds_validated(self):
        from driftsearch.prior import ScenarioSpec

        with pytest.raises(DomainError, match="unknown scenario kind"):
            ScenarioSpec(kind="teleport", weight=0.5)

    def test_reverse_drift_needs_observations(self):
        from driftsearch.prior import ScenarioSpec

        with pytest.raises(DomainError, match="recovery observations"):
            ScenarioSpec(kind="reverse_drift", weight=0.3)

    def test_label_defaults_to_kind(self):
        from driftsearch.prior import ScenarioSpec

        assert ScenarioSpec(kind="uniform_disk", weight=1.0).label == "uniform_disk"

    def test_build_scenario_dispatch(self, tmp_path):
        from driftsearch.prior import ScenarioSpec, build_scenario

        config = parse_config(small_raw(tmp_path), base_dir=FIXTURE)
        cloud = build_scenario(
            ScenarioSpec(kind="uniform_disk", weight=1.0, samples=50),
            config.disk,
            seed=4,
        )
        assert len(cloud) == 50


class TestLikelihoodPriorMode:
    def test_likelihood_mode_runs_and_reweights(self, tmp_path):
        raw = small_raw(tmp_path, n=800)
        raw["prior_mode"] = "likelihood"
        config = parse_config(raw, base_dir=FIXTURE)
        prior = build_prior(config)
        assert len(prior) == 800
        assert abs(float(np.sum(prior.weights)) - 1.0) < 1e-9
        # weights are no longer uniform: the drift cloud acts as a likelihood
        assert float(np.ptp(prior.weights)) > 0

    def test_unknown_mode_rejected(self, tmp_path):
        raw = small_raw(tmp_path)
        raw["prior_mode"] = "bogus"
        with pytest.raises(DomainError, match="prior_mode"):
            parse_config(raw, base_dir=FIXTURE)


class TestPrior:
    def test_prior_tagged_and_contained(self, tmp_path):
        config = parse_config(small_raw(tmp_path), base_dir=FIXTURE)
        prior = build_prior(config)
        assert len(prior) == 600
        assert set(np.unique(prior.scenarios)) == {
            "uniform_disk",
            "circular_normal",
            "reverse_drift",
        }
        assert config.disk.contains(prior.lats, prior.lons).all()

    def test_prior_deterministic(self, tmp_path):
        config = parse_config(small_raw(tmp_path), base_dir=FIXTURE)
        a = build_prior(config)
        b = build_prior(config)
        np.testing.assert_array_equal(a.lats, b.lats)
        np.testing.assert_array_equal(a.weights, b.weights)


class TestRun:
    def test_zero_increments_prior_only(self, tmp_path):
        config = parse_config(small_raw(tmp_path, increments=[]), base_dir=FIXTURE)
        manifest = run(config)
        assert manifest.status == "ok"
        assert [s["label"] for s in manifest.stages] == ["prior"]
        assert (config.output_dir / "snapshots" / "000_prior.csv").exists()
        assert (config.output_dir / "heatmaps" / "000_prior.png").exists()

    def test_full_chain_artifacts(self, tmp_path):
        config = parse_config(small_raw(tmp_path), base_dir=FIXTURE)
        manifest = run(config)
        assert manifest.status == "ok"
        labels = [s["label"] for s in manifest.stages]
        assert labels == ["prior", "surface-2009", "acoustic-2009", "sonar-2009", "sonar-2010"]
        snaps = sorted((config.output_dir / "snapshots").iterdir())
        assert len(snaps) == 5
        assert manifest.beacon_failed is not None
        assert (config.output_dir / "beacon_failed" / "final.csv").exists()
        # the persisted manifest carries everything needed to reproduce the run
        saved = json.loads((config.output_dir / "manifest.json").read_text())
        assert saved["config"]["seed"] == config.seed
        assert [i["label"] for i in saved["config"]["increments"]] == labels[1:]

    def test_snapshot_round_trip(self, tmp_path):
        config = parse_config(small_raw(tmp_path, increments=[]), base_dir=FIXTURE)
        prior = build_prior(config)
        again = load_snapshot_csv(snapshot_csv(prior))
        np.testing.assert_array_equal(again.lats, prior.lats)
        np.testing.assert_array_equal(again.weights, prior.weights)
        assert (again.scenarios == prior.scenarios).all()

    def test_reruns_byte_identical(self, tmp_path):
        config_a = parse_config(small_raw(tmp_path / "a"), base_dir=FIXTURE)
        config_b = parse_config(small_raw(tmp_path / "b"), base_dir=FIXTURE)
        ma = run(config_a)
        mb = run(config_b)
        da = [s["snapshot_digest"] for s in ma.stages]
        db = [s["snapshot_digest"] for s in mb.stages]
        assert da == db
        assert ma.beacon_failed["snapshot_digest"] == mb.beacon_failed["snapshot_digest"]

    def test_worker_count_invariant(self, tmp_path):
        ma = run(parse_config(small_raw(tmp_path / "w1", workers=1), base_dir=FIXTURE))
        mb = run(parse_config(small_raw(tmp_path / "w4", workers=4), base_dir=FIXTURE))
        assert [s["snapshot_digest"] for s in ma.stages] == [
            s["snapshot_digest"] for s in mb.stages
        ]

    def test_failure_preserves_partials(self, tmp_path):
        incs = [
            {
                "label": "sonar-ok",
                "type": "sweep",
                "regions": "sweep2009.geojson",
                "p_inside": 0.9,
            },
            {
                "label": "broken",
                "type": "sweep",
                "regions": "missing-file.geojson",
                "p_inside": 0.9,
            },
        ]
        config = parse_config(small_raw(tmp_path, increments=incs), base_dir=FIXTURE)
        manifest = run(config)
        assert manifest.status == "failed"
        assert manifest.failed_stage == "broken"
        persisted = sorted(p.name for p in (config.output_dir / "snapshots").iterdir())
        assert persisted == ["000_prior.csv", "001_sonar-ok.csv"]
        saved = json.loads((config.output_dir / "manifest.json").read_text())
        assert saved["status"] == "failed"

    def test_searched_regions_depleted(self, tmp_path):
        # posterior mass inside a swept region must drop by about 10x odds
        incs = [
            {
                "label": "sonar-2009",
                "type": "sweep",
                "regions": "sweep2009.geojson",
                "p_inside": 0.9,
            }
        ]
        config = parse_config(small_raw(tmp_path, n=2000, increments=incs), base_dir=FIXTURE)
        prior = build_prior(config)
        manifest = run(config)
        post = load_snapshot_csv(
            (config.output_dir / "snapshots" / "001_sonar-2009.csv").read_bytes()
        )
        from driftsearch.detection import SweepRegion
        from driftsearch.geo import polygon_from_geojson

        gj = json.loads((FIXTURE / "sweep2009.geojson").read_text())
        ring = tuple(polygon_from_geojson(gj["features"][0]["geometry"]))
        region = SweepRegion((ring,), 0.9)
        from driftsearch.detection import sweep_failure

        inside_prior = sweep_failure(prior, region) < 1.0
        mass_prior = float(prior.weights[inside_prior].sum())
        inside_post = sweep_failure(post, region) < 1.0
        mass_post = float(post.weights[inside_post].sum())
        expected = 0.1 * mass_prior / (0.1 * mass_prior + (1 - mass_prior))
        assert mass_post == pytest.approx(expected, rel=1e-6)
