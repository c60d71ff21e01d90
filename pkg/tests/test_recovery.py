import math

import numpy as np
import pytest

from oracles import ascent_oracle, dual_bound, random_instances

from onebitcs import recovery
from onebitcs.prf import RandomSource


class TestSolve:
    def test_pinned_case_against_grid(self):
        # c = (3, 1), radius 1: brute grid over the feasible square
        grid = np.linspace(-1, 1, 401)
        zz = np.stack(np.meshgrid(grid, grid), axis=-1).reshape(-1, 2)
        feasible = zz[
            (np.abs(zz).sum(axis=1) <= 1.0) & (np.linalg.norm(zz, axis=1) <= 1.0)
        ]
        objective = feasible @ np.array([3.0, 1.0])
        best = feasible[np.argmax(objective)]
        z = recovery.solve_l1l2(np.array([3.0, 1.0]), 1.0)
        assert np.allclose(z, [1.0, 0.0], atol=1e-12)
        assert np.linalg.norm(best - z) <= 0.01  # grid resolution

    def test_inactive_l1_constraint(self):
        c = np.array([1.0, -2.0, 0.5])
        z = recovery.solve_l1l2(c, math.sqrt(3))  # sqrt(dim) makes l1 slack
        assert np.allclose(z, c / np.linalg.norm(c), atol=1e-12)

    def test_zero_vector(self):
        assert np.array_equal(recovery.solve_l1l2(np.zeros(4), 2.0), np.zeros(4))

    def test_rejects_empty_support(self):
        with pytest.raises(ValueError):
            recovery.solve_l1l2(np.empty(0), 1.0)

    def test_feasibility_always(self):
        C, dims, radius = random_instances(300, 6, seed=1)
        for c, d, r in zip(C, dims, radius):
            z = recovery.solve_l1l2(c[:d], r)
            assert np.abs(z).sum() <= r + 1e-9
            assert np.linalg.norm(z) <= 1 + 1e-9

    def test_matches_ascent_oracle(self):
        C, dims, radius = random_instances(200, 5, seed=2)
        oracle = ascent_oracle(C, radius)
        for c, d, r, want in zip(C, dims, radius, oracle):
            got = float(c[:d] @ recovery.solve_l1l2(c[:d], r))
            assert abs(got - want) <= 1e-6

    def test_matches_dual_certificate(self):
        C, dims, radius = random_instances(400, 5, seed=3)
        bound = dual_bound(C, radius)
        for c, d, r, want in zip(C, dims, radius, bound):
            got = float(c[:d] @ recovery.solve_l1l2(c[:d], r))
            assert abs(got - want) <= 1e-8

    def test_dominates_random_feasible_points(self):
        rng = np.random.default_rng(4)
        c = rng.standard_normal(8)
        radius = math.sqrt(3)
        z = recovery.solve_l1l2(c, radius)
        best = float(c @ z)
        samples = rng.standard_normal((100_000, 8))
        samples /= np.maximum(np.linalg.norm(samples, axis=1, keepdims=True), 1e-12)
        samples *= rng.random((100_000, 1))
        over = np.abs(samples).sum(axis=1) > radius
        samples[over] *= (radius / np.abs(samples[over]).sum(axis=1))[:, None]
        assert best >= (samples @ c).max() - 1e-9


class TestGaussianMeasurements:
    def test_zero_signal_all_plus(self):
        schema = recovery.GaussianSchema(rows=64, n=16, seed=5)
        assert np.all(recovery.sign_measure(schema, np.zeros(16)) == 1)

    def test_basis_vector_sign_symmetry(self):
        schema = recovery.GaussianSchema(rows=10**5, n=8, seed=6)
        x = np.zeros(8)
        x[0] = 1.0
        y = recovery.sign_measure(schema, x)
        assert abs(float(np.mean(y))) < 0.01

    def test_deterministic(self):
        schema = recovery.GaussianSchema(rows=512, n=32, seed=7)
        x = RandomSource(8).gaussian(np.arange(32))
        assert np.array_equal(
            recovery.sign_measure(schema, x), recovery.sign_measure(schema, x)
        )

    def test_entries_regenerate_consistently(self):
        schema = recovery.GaussianSchema(rows=32, n=64, seed=9)
        block = schema.entries(np.arange(32), np.arange(64))
        # row-block and column-subset paths agree with the full block
        assert np.allclose(block[5:9, [3, 7]], schema.entries(np.arange(5, 9), [3, 7]))

    def test_noise_changes_bits(self):
        x = RandomSource(10).gaussian(np.arange(32)) * 0.01
        quiet = recovery.GaussianSchema(rows=2048, n=32, seed=11, noise_sigma=0.0)
        loud = recovery.GaussianSchema(rows=2048, n=32, seed=11, noise_sigma=5.0)
        assert not np.array_equal(
            recovery.sign_measure(quiet, x), recovery.sign_measure(loud, x)
        )


class TestPipeline:
    def test_spike_recovery(self):
        n, k = 1 << 10, 1
        wins = 0
        trials = 20
        for t in range(trials):
            schema = recovery.build_pipeline(n, k, 0.25, seed=100 + t, gauss_rows=2000)
            x = np.zeros(n)
            x[17] = 1.0
            bits = recovery.measure(schema, x)
            estimate, diag = recovery.decode(schema, bits)
            err = float(np.sum((x - estimate.to_dense(n)) ** 2))
            wins += err <= 0.25
        assert wins / trials >= 0.9

    def test_zero_signal_flagged(self):
        n, k = 256, 2
        schema = recovery.build_pipeline(n, k, 0.5, seed=12, gauss_rows=64)
        estimate, diag = recovery.decode(schema, recovery.measure(schema, np.zeros(n)))
        assert diag.support_empty
        assert estimate.indices.size == 0

    def test_error_decomposition_identity(self):
        n, k = 1 << 10, 2
        schema = recovery.build_pipeline(n, k, 0.3, seed=13, gauss_rows=500)
        src = RandomSource(14)
        x = src.gaussian(np.arange(n))
        x /= np.linalg.norm(x)
        estimate, diag = recovery.decode(schema, recovery.measure(schema, x))
        xh = estimate.to_dense(n)
        S = diag.support
        mask = np.zeros(n, dtype=bool)
        mask[S] = True
        total = float(np.sum((x - xh) ** 2))
        on_support = float(np.sum((x[mask] - xh[mask]) ** 2))
        off_support = float(np.sum(x[~mask] ** 2))
        assert abs(total - (on_support + off_support)) <= 1e-12

    def test_row_budget_reported(self):
        schema = recovery.build_pipeline(1 << 10, 2, 0.25, seed=15)
        assert schema.total_rows == schema.support_rows + schema.gauss_rows
        assert schema.gauss_rows == recovery.default_gauss_rows(1 << 10, 2, 0.25)

    def test_more_rows_help(self):
        # median error strictly improves when the gaussian block grows 10x
        n, k = 1 << 10, 4
        src = RandomSource(16)
        sup = src.derive(1).choice_without_replacement(n, k)
        x = np.zeros(n)
        x[sup] = src.derive(2).signs(np.arange(k)) / math.sqrt(k)
        errs = {}
        for rows in (200, 2000):
            trial_errs = []
            for t in range(30):
                schema = recovery.GaussianSchema(rows=rows, n=n, seed=500 + t)
                y = recovery.sign_measure(schema, x)
                c = recovery.correlation(schema, y, sup)
                z = recovery.solve_l1l2(c, math.sqrt(k))
                xh = np.zeros(n)
                xh[sup] = z
                trial_errs.append(float(np.sum((x - xh) ** 2)))
            errs[rows] = float(np.median(trial_errs))
        assert errs[2000] < errs[200]
