import math

import numpy as np
import pytest

from odlab.errors import PropagationError
from odlab.propagators import (_check_failures, dee_initial_weights,
                               initial_cloud, run_dee, run_mc)
from odlab.scenarios import ScenarioConfig
from odlab.stochastics import Gaussian2D

TWO_PI = 2.0 * math.pi


def small_scenario(**overrides) -> ScenarioConfig:
    base = dict(name="unit", phi0=2.2069, e0=0.145,
                delta_phi=math.pi / 8, delta_e=0.05,
                t_final=1.0, dt_snap=0.5,
                n_sam=400, n_grid=60, n_bins1=12, n_bins2=12, seed=7)
    base.update(overrides)
    return ScenarioConfig(**base)


class TestInitialCloud:
    def test_matches_scenario_gaussian(self):
        sc = small_scenario(n_sam=60_000, t_final=0.0, dt_snap=0.5)
        pts = initial_cloud(sc)
        n = len(pts)
        sd_phi = sc.delta_phi / 2.0
        sd_e = sc.delta_e / 2.0
        # CLT bands at five standard errors
        assert abs(pts[:, 0].mean() - sc.phi0) < 5.0 * sd_phi / math.sqrt(n)
        assert abs(pts[:, 1].mean() - sc.e0) < 5.0 * sd_e / math.sqrt(n)
        assert abs(pts[:, 0].std() / sd_phi - 1.0) < 5.0 / math.sqrt(n)
        assert abs(pts[:, 1].std() / sd_e - 1.0) < 5.0 / math.sqrt(n)
        assert abs(np.corrcoef(pts.T)[0, 1]) < 5.0 / math.sqrt(n)

    def test_seed_shared_across_pipelines(self):
        sc = small_scenario()
        mc = run_mc(sc)
        dee = run_dee(sc)
        np.testing.assert_array_equal(mc.snapshots[0].samples,
                                      dee.snapshots[0].samples)

    def test_seed_changes_cloud(self):
        a = initial_cloud(small_scenario(seed=1))
        b = initial_cloud(small_scenario(seed=2))
        assert not np.array_equal(a, b)


class TestRunShapes:
    def test_mc_snapshot_structure(self):
        sc = small_scenario()
        res = run_mc(sc)
        assert res.method == "MC"
        assert len(res.snapshots) == 3
        np.testing.assert_array_equal([s.time for s in res.snapshots],
                                      [0.0, 0.5, 1.0])
        for s in res.snapshots:
            assert s.sample_weights is None and s.moment_weights is None
            assert s.samples.shape == (sc.n_sam, 2)
            assert abs(s.joint.total_mass - 1.0) < 1e-12
            assert abs(s.marginal_phi.total_mass - 1.0) < 1e-12
            assert abs(s.marginal_e.total_mass - 1.0) < 1e-12
            lo = sc.branch_start
            assert np.all((s.samples[:, 0] >= lo)
                          & (s.samples[:, 0] < lo + TWO_PI))
        assert res.t_total == res.t_propagation + res.t_interpolation

    def test_dee_snapshot_structure(self):
        sc = small_scenario()
        res = run_dee(sc)
        assert res.method == "DEE"
        for s in res.snapshots:
            assert s.sample_weights is not None
            assert np.all(s.sample_weights >= 0.0)
            assert abs(s.joint.total_mass - 1.0) < 1e-12
            assert abs(s.marginal_phi.total_mass - 1e0) < 1e-12
            assert abs(s.marginal_e.total_mass - 1.0) < 1e-12
            # grid moments: probability-mass weights on bin centers
            assert s.moment_weights is not None
            assert abs(s.moment_weights.sum() - 1.0) < 1e-12

    def test_branch_window_respected(self):
        sc = small_scenario(phi0=0.3004, e0=0.23, branch_start=-math.pi)
        res = run_mc(sc)
        for s in res.snapshots:
            assert np.all(s.samples[:, 0] >= -math.pi)
            assert np.all(s.samples[:, 0] < math.pi)

    def test_zero_horizon_single_snapshot(self):
        sc = small_scenario(t_final=0.0)
        res = run_mc(sc)
        assert len(res.snapshots) == 1
        assert res.snapshots[0].time == 0.0


class TestDeterminism:
    def test_rerun_bitwise(self):
        sc = small_scenario()
        a = run_mc(sc)
        b = run_mc(sc)
        for sa, sb in zip(a.snapshots, b.snapshots):
            np.testing.assert_array_equal(sa.samples, sb.samples)
            np.testing.assert_array_equal(sa.joint.values, sb.joint.values)

    def test_workers_bitwise_mc(self):
        sc = small_scenario()
        a = run_mc(sc, workers=1)
        b = run_mc(sc, workers=3)
        for sa, sb in zip(a.snapshots, b.snapshots):
            np.testing.assert_array_equal(sa.samples, sb.samples)

    def test_workers_bitwise_dee(self):
        sc = small_scenario()
        a = run_dee(sc, workers=1)
        b = run_dee(sc, workers=4)
        for sa, sb in zip(a.snapshots, b.snapshots):
            np.testing.assert_array_equal(sa.samples, sb.samples)
            np.testing.assert_array_equal(sa.sample_weights, sb.sample_weights)
            np.testing.assert_array_equal(sa.joint.values, sb.joint.values)


class TestRadiationOffInvariances:
    def test_mc_eccentricity_frozen(self):
        # with the radiation term off, e is a constant of motion
        sc = small_scenario(C=0.0, n_sam=200)
        res = run_mc(sc)
        e0 = res.snapshots[0].samples[:, 1]
        for s in res.snapshots[1:]:
            np.testing.assert_allclose(s.samples[:, 1], e0, atol=1e-9)

    def test_dee_weights_frozen(self):
        # density rate is proportional to the radiation strength
        sc = small_scenario(C=0.0, n_sam=200)
        res = run_dee(sc)
        w0 = np.sort(res.snapshots[0].sample_weights)
        for s in res.snapshots[1:]:
            np.testing.assert_allclose(np.sort(s.sample_weights), w0,
                                       rtol=1e-9)


class TestJacobianModes:
    def test_initial_weights_differ_by_log_e(self, rng):
        g = Gaussian2D(mean=np.array([2.0, 0.4]),
                       cov=np.diag([0.04, 0.0009]))
        pts = np.column_stack([rng.normal(2.0, 0.2, 500),
                               rng.uniform(0.2, 0.6, 500)])
        on = dee_initial_weights(pts, g, True)
        off = dee_initial_weights(pts, g, False)
        np.testing.assert_allclose(on, off - np.log(pts[:, 1]), atol=1e-12)

    def test_modes_produce_different_fields(self):
        sc = small_scenario()
        on = run_dee(sc, jacobian_correction=True)
        off = run_dee(sc, jacobian_correction=False)
        assert not np.allclose(on.snapshots[-1].joint.values,
                               off.snapshots[-1].joint.values)

    def test_scenario_default_used(self):
        sc = small_scenario(jacobian_correction=False)
        auto = run_dee(sc)
        explicit = run_dee(sc, jacobian_correction=False)
        np.testing.assert_array_equal(auto.snapshots[-1].joint.values,
                                      explicit.snapshots[-1].joint.values)


class TestFailurePolicy:
    def test_check_failures_threshold(self):
        ok = np.zeros(1000, dtype=bool)
        ok[0] = True  # exactly 0.1 percent is tolerated
        assert _check_failures(ok, "MC") == 1
        bad = np.zeros(1000, dtype=bool)
        bad[:2] = True
        with pytest.raises(PropagationError) as err:
            _check_failures(bad, "MC")
        assert "2/1000" in str(err.value)

    def test_impossible_tolerance_aborts(self):
        sc = small_scenario(rel_tol=1e-30, abs_tol=1e-300, n_sam=50)
        with pytest.raises(PropagationError):
            run_mc(sc)
