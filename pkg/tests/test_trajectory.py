"""Seeded joint simulation, the mixture statistic, and contour helpers."""

import numpy as np
import pytest

from lgq import (
    GaussianState,
    SystemModel,
    ellipse_points,
    empty_unravelling,
    evolve_snapshot,
    filtered_steady,
    innovations,
    kappa,
    mixture_statistic,
    simulate_joint,
    stack,
    true_steady,
)

from conftest import FAST_CFG, frobenius


def hurwitz_toy():
    return SystemModel(N=1, A=[[-1.0, 0.0], [0.0, -2.0]], D=np.eye(2))


class TestSimulateJoint:
    def test_same_seed_bit_identical(self, opo, alice, bob_homodyne):
        first = simulate_joint(opo, alice, bob_homodyne, 2.0, 1e-3, 42, FAST_CFG)
        second = simulate_joint(opo, alice, bob_homodyne, 2.0, 1e-3, 42, FAST_CFG)
        assert np.array_equal(first.true_means, second.true_means)
        assert np.array_equal(first.filtered_means, second.filtered_means)
        assert np.array_equal(first.observed.values, second.observed.values)
        assert np.array_equal(first.unobserved.values, second.unobserved.values)

    def test_different_seeds_differ(self, opo, alice, bob_homodyne):
        first = simulate_joint(opo, alice, bob_homodyne, 1.0, 1e-3, 1, FAST_CFG)
        second = simulate_joint(opo, alice, bob_homodyne, 1.0, 1e-3, 2, FAST_CFG)
        assert not np.array_equal(first.true_means, second.true_means)

    def test_no_record_means_stay_at_steady_mean(self):
        model = hurwitz_toy()
        empty = empty_unravelling(model)
        bundle = simulate_joint(model, empty, empty, 1.0, 1e-3, 3, FAST_CFG)
        assert np.abs(bundle.true_means).max() == 0.0
        assert np.abs(bundle.filtered_means).max() == 0.0

    def test_record_shapes_and_split(self, opo, alice, bob_heterodyne):
        bundle = simulate_joint(opo, alice, bob_heterodyne, 0.5, 1e-3, 5, FAST_CFG)
        assert bundle.observed.values.shape == (1, 500)
        assert bundle.unobserved.values.shape == (2, 500)
        assert bundle.n_steps == 500

    def test_noise_increments_calibrated(self, opo, alice, bob_homodyne):
        dt = 1e-3
        bundle = simulate_joint(opo, alice, bob_homodyne, 40.0, dt, 11, FAST_CFG)
        total = stack(alice, bob_homodyne)
        records = np.vstack([bundle.observed.values, bundle.unobserved.values])
        true_prev = bundle.true_means[:, :-1]
        dw = records[:, 1:] * dt - (total.C @ true_prev) * dt
        n = dw.shape[1]
        se_var = dt * np.sqrt(2.0 / n)
        for r in range(2):
            assert abs(dw[r].var() - dt) <= 3 * se_var
        cross = float(np.mean(dw[0] * dw[1]))
        assert abs(cross) <= 3 * dt / np.sqrt(n)

    def test_innovations_are_white(self, opo, alice, bob_homodyne):
        dt = 1e-3
        bundle = simulate_joint(opo, alice, bob_homodyne, 40.0, dt, 12, FAST_CFG)
        innov = innovations(bundle, alice)
        n = innov.shape[1]
        assert abs(innov[0].var() - dt) <= 3 * dt * np.sqrt(2.0 / n)
        # one-step autocorrelation vanishes for an optimal filter
        auto = float(np.mean(innov[0, 1:] * innov[0, :-1]))
        assert abs(auto) <= 3 * dt / np.sqrt(n)

    def test_input_validation(self, opo, alice, bob_homodyne):
        with pytest.raises(ValueError):
            simulate_joint(opo, alice, bob_homodyne, 1.0, -1e-3, 0, FAST_CFG)
        with pytest.raises(ValueError):
            simulate_joint(opo, alice, bob_homodyne, 1e-4, 1e-3, 0, FAST_CFG)


class TestMixtureStatistic:
    def test_all_observed_gives_zero(self, opo, alice):
        bundle = simulate_joint(
            opo, alice, empty_unravelling(opo), 5.0, 1e-3, 21, FAST_CFG
        )
        statistic = mixture_statistic(bundle, 1.0)
        assert np.abs(statistic).max() < 1e-25

    def test_statistic_is_psd(self, opo, alice, bob_homodyne):
        bundle = simulate_joint(opo, alice, bob_homodyne, 5.0, 1e-3, 22, FAST_CFG)
        statistic = mixture_statistic(bundle, 1.0)
        assert np.array_equal(statistic, statistic.T)
        assert np.linalg.eigvalsh(statistic).min() >= 0

    def test_burn_in_validation(self, opo, alice, bob_homodyne):
        bundle = simulate_joint(opo, alice, bob_homodyne, 1.0, 1e-3, 23, FAST_CFG)
        with pytest.raises(ValueError):
            mixture_statistic(bundle, 1.0)

    def test_matches_mixture_decomposition(self, opo, alice, bob_homodyne, ctx, V_T_homodyne):
        # Independent oracle: propagate the estimation-error process as an
        # ensemble (vectorized over trajectories, ensemble average at the
        # final time) instead of one long time average.
        target = ctx.V_F - V_T_homodyne
        total = stack(alice, bob_homodyne)
        K_T = kappa(V_T_homodyne, total, +1)
        K_F = kappa(ctx.V_F, alice, +1)
        drift = opo.A - K_F @ alice.C
        noise_obs = K_T[:, :1] - K_F
        noise_unobs = K_T[:, 1:]
        rng = np.random.default_rng(314)
        dt, n_traj, n_steps = 1e-3, 4000, 8000
        e = np.zeros((2, n_traj))
        sqrt_dt = np.sqrt(dt)
        for _ in range(n_steps):
            dw_o = rng.standard_normal((1, n_traj)) * sqrt_dt
            dw_u = rng.standard_normal((1, n_traj)) * sqrt_dt
            e = e + drift @ e * dt + noise_obs @ dw_o + noise_unobs @ dw_u
        ensemble = e @ e.T / n_traj
        assert frobenius(ensemble - target) / frobenius(target) < 0.08

        # the time-average route at a pinned seed agrees with the same target
        bundle = simulate_joint(opo, alice, bob_homodyne, 100.0, 1e-3, 9, FAST_CFG)
        statistic = mixture_statistic(bundle, 5.0)
        assert frobenius(statistic - target) / frobenius(target) < 0.05


class TestEvolveSnapshot:
    def test_cov_path_is_seed_independent(self, opo, alice, fixtures):
        one = evolve_snapshot(opo, alice, fixtures["a"], np.zeros(2), 1e-3, 0.3, 1)
        two = evolve_snapshot(opo, alice, fixtures["a"], np.zeros(2), 1e-3, 0.3, 2)
        assert np.array_equal(one.cov_path.covs, two.cov_path.covs)
        assert not np.array_equal(one.mean_path, two.mean_path)

    def test_zero_time_returns_initial(self, opo, alice, fixtures):
        paths = evolve_snapshot(opo, alice, fixtures["b"], np.array([0.3, -0.1]), 1e-3, 0.0, 7)
        assert paths.mean_path.shape == (2, 1)
        assert np.allclose(paths.mean_path[:, 0], [0.3, -0.1])
        assert np.array_equal(paths.cov_path.covs[0], fixtures["b"])

    def test_noiseless_monitoring_decays_mean(self):
        model = hurwitz_toy()
        empty = empty_unravelling(model)
        paths = evolve_snapshot(
            model, empty, 0.5 * np.eye(2), np.array([2.0, -1.0]), 1e-3, 6.0, 0
        )
        start = np.linalg.norm(paths.mean_path[:, 0])
        end = np.linalg.norm(paths.mean_path[:, -1])
        assert end < 1e-2 * start

    def test_containment_flags_match_direct_integration(self, opo, alice, fixtures):
        paths = evolve_snapshot(opo, alice, fixtures["a"], np.zeros(2), 1e-4, 0.8, 0)
        final = paths.cov_path.covs[-1]
        assert np.linalg.eigvalsh(final - fixtures["a"]).min() > -1e-6
        paths_c = evolve_snapshot(opo, alice, fixtures["c"], np.zeros(2), 1e-4, 0.8, 0)
        assert np.linalg.eigvalsh(paths_c.cov_path.covs[-1] - fixtures["c"]).min() < -1e-3


class TestEllipsePoints:
    def test_unit_circle(self):
        points = ellipse_points(GaussianState(np.zeros(2), np.eye(2)), 64)
        radii = np.linalg.norm(points, axis=1)
        assert np.allclose(radii, 1.0, atol=1e-12)

    def test_axis_aligned_ellipse(self):
        points = ellipse_points(GaussianState(np.zeros(2), np.diag([4.0, 1.0])), 256)
        assert np.abs(points[:, 0]).max() == pytest.approx(2.0, abs=1e-6)
        assert np.abs(points[:, 1]).max() == pytest.approx(1.0, abs=1e-6)

    def test_mean_offset(self):
        mean = np.array([3.0, -2.0])
        points = ellipse_points(GaussianState(mean, np.eye(2)), 16)
        assert np.allclose(points.mean(axis=0), mean, atol=1e-12)

    def test_tilt_matches_principal_eigenvector(self, fixtures):
        cov = fixtures["b"]
        points = ellipse_points(GaussianState(np.zeros(2), cov), 4096)
        extremal = points[np.argmax(np.linalg.norm(points, axis=1))]
        tilt = np.arctan2(extremal[1], extremal[0]) % np.pi
        eigvals, eigvecs = np.linalg.eigh(cov)
        principal = eigvecs[:, np.argmax(eigvals)]
        expected = np.arctan2(principal[1], principal[0]) % np.pi
        assert tilt == pytest.approx(expected, abs=2e-3)

    def test_rejects_non_psd(self):
        with pytest.raises(ValueError):
            ellipse_points(GaussianState(np.zeros(2), np.diag([1.0, -0.5])), 8)
        with pytest.raises(ValueError):
            ellipse_points(GaussianState(np.zeros(2), np.eye(2)), 2)


class TestBundleCsv:
    def test_roundtrip_columns(self, tmp_path, opo, alice, bob_homodyne):
        from lgq import write_bundle_csv

        bundle = simulate_joint(opo, alice, bob_homodyne, 0.05, 1e-3, 8, FAST_CFG)
        path = tmp_path / "bundle.csv"
        write_bundle_csv(bundle, opo, path, metadata={"note": "test"})
        lines = path.read_text().splitlines()
        comments = [line for line in lines if line.startswith("#")]
        assert any("seed=8" in line for line in comments)
        assert any("dt=" in line for line in comments)
        header = next(line for line in lines if not line.startswith("#"))
        assert header.split(",") == ["t", "true_q", "true_p", "filt_q", "filt_p", "y_1", "y_2"]
        data = np.genfromtxt(path, delimiter=",", skip_header=len(comments) + 1)
        assert data.shape == (50, 7)
        assert np.allclose(data[:, 1], bundle.true_means[0], atol=1e-15)
