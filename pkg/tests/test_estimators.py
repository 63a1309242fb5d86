import math

import numpy as np
import pytest

from corrupted_bandits.estimators import (
    HuberSolverError,
    SequentialHuber,
    catoni_estimate,
    default_root_tol,
    floor_pow2,
    huber_estimate,
    influence,
    influence_derivative,
    mad_scale,
    median_of_means,
)


def huber_loss_grid_oracle(samples, beta, lo, hi, coarse=20001, fine=20001):
    """Grid-search minimizer of the Huber loss; two-stage refinement.

    The loss is convex in theta, so refining around the coarse minimizer is
    exact up to the fine grid resolution.
    """
    x = np.asarray(samples, dtype=float)

    def loss(thetas):
        r = np.abs(x[:, None] - thetas[None, :])
        vals = np.where(r <= beta, 0.5 * r * r, beta * r - 0.5 * beta * beta)
        return vals.sum(axis=0)

    grid = np.linspace(lo, hi, coarse)
    step = grid[1] - grid[0]
    best = grid[np.argmin(loss(grid))]
    refined = np.linspace(best - 2 * step, best + 2 * step, fine)
    return float(refined[np.argmin(loss(refined))])


class TestInfluence:
    def test_identity_region(self):
        assert influence(0.5, 1.0) == 0.5

    def test_clipped_region(self):
        assert influence(-3.0, 1.0) == -1.0

    def test_boundary_continuity(self):
        assert influence(1.0, 1.0) == 1.0

    def test_odd_and_bounded(self):
        rng = np.random.default_rng(0)
        xs = rng.normal(scale=5.0, size=200)
        for beta in (0.1, 1.0, 7.0):
            vals = influence(xs, beta)
            assert np.allclose(influence(-xs, beta), -vals)
            assert np.all(np.abs(vals) <= beta)

    def test_derivative_indicator(self):
        assert influence_derivative(0.0, 1.0) == 1.0
        assert influence_derivative(2.0, 1.0) == 0.0
        # closed-interval convention at the clip point
        assert influence_derivative(1.0, 1.0) == 1.0
        assert influence_derivative(-1.0, 1.0) == 1.0

    def test_beta_validation(self):
        with pytest.raises(ValueError):
            influence(1.0, 0.0)
        with pytest.raises(ValueError):
            influence_derivative(1.0, -1.0)


class TestHuberEstimate:
    def test_symmetry(self):
        for beta in (0.3, 1.0, 10.0):
            assert abs(huber_estimate([-1.0, 1.0], beta)) < 1e-12

    def test_large_beta_is_mean(self):
        assert huber_estimate([0.0, 1.0, 2.0, 3.0], 100.0) == pytest.approx(1.5, abs=1e-9)

    def test_grid_oracle_contaminated(self):
        est = huber_estimate([0.0, 0.0, 0.0, 10.0], 1.0)
        oracle = huber_loss_grid_oracle([0.0, 0.0, 0.0, 10.0], 1.0, 0.0, 10.0)
        assert abs(est - oracle) < 1e-5
        # analytic root: 3*psi(-theta) + psi(10-theta) = 0 -> theta = 1/3
        assert est == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_root_contract_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            n = int(rng.integers(2, 500))
            x = rng.normal(size=n)
            if rng.random() < 0.5:
                x[: n // 5] = 50.0
            beta = float(rng.uniform(0.05, 10.0))
            theta = huber_estimate(x, beta)
            resid = np.clip(x - theta, -beta, beta).sum()
            assert abs(resid) <= default_root_tol(n, beta)
            assert x.min() <= theta <= x.max()

    def test_translation_equivariance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_t(3, size=101)
        beta = 2.0
        base = huber_estimate(x, beta)
        for shift in (-17.5, 0.3, 4e3):
            shifted = huber_estimate(x + shift, beta)
            assert shifted - shift == pytest.approx(base, abs=2 * default_root_tol(x.size, beta) / x.size + 1e-9 * abs(shift))

    def test_scale_equivariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=64)
        beta = 1.3
        base = huber_estimate(x, beta)
        for c in (0.05, 3.0, 250.0):
            scaled = huber_estimate(c * x, c * beta)
            assert scaled == pytest.approx(c * base, abs=1e-6 * c)

    def test_small_beta_near_median(self):
        rng = np.random.default_rng(3)
        x = np.sort(rng.normal(size=31))
        spread = x[-1] - x[0]
        est = huber_estimate(x, 1e-6 * spread)
        m = x.size // 2
        window = x[m + 1] - x[m - 1]
        assert abs(est - np.median(x)) <= window

    def test_monotone_in_single_sample(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=25)
        beta = 0.8
        base = huber_estimate(x, beta)
        for bump in (0.1, 1.0, 100.0):
            y = x.copy()
            y[7] += bump
            assert huber_estimate(y, beta) >= base - 1e-9

    def test_variance_domination(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.standard_t(2.5, size=200)
            beta = float(rng.uniform(0.2, 5.0))
            theta = huber_estimate(x, beta)
            psi = np.clip(x - theta, -beta, beta)
            assert psi.var() <= x.var() + 1e-12

    def test_constant_samples(self):
        assert huber_estimate([2.5] * 10, 0.01) == 2.5

    def test_empty_and_bad_beta(self):
        with pytest.raises(ValueError):
            huber_estimate([], 1.0)
        with pytest.raises(ValueError):
            huber_estimate([1.0], 0.0)


class TestCatoni:
    def test_shared_solver_on_symmetric_data(self):
        x = np.array([-2.0, -1.0, 1.0, 2.0])
        beta = 1.0 * math.sqrt(4)
        assert catoni_estimate(x, sigma=1.0) == huber_estimate(x, beta)

    def test_threshold_arithmetic(self):
        # n=4, sigma=1, scale=1 -> beta=2; equivalent call must agree exactly
        x = np.array([0.0, 0.5, 1.0, 4.0])
        assert catoni_estimate(x, 1.0, 1.0) == huber_estimate(x, 2.0)

    def test_growing_threshold_follows_contamination(self):
        # With n large enough that sigma*sqrt(n) > 4*sigma, the heavy-tail
        # tuning tracks the contaminated mean more closely than beta = 4*sigma.
        x = np.concatenate([np.zeros(96), np.full(4, 1000.0)])
        contaminated_mean = x.mean()
        fragile = catoni_estimate(x, sigma=1.0)
        robust = huber_estimate(x, 4.0)
        assert abs(fragile - contaminated_mean) < abs(robust - contaminated_mean)

    def test_validation(self):
        with pytest.raises(ValueError):
            catoni_estimate([1.0], 0.0)
        with pytest.raises(ValueError):
            catoni_estimate([1.0], 1.0, scale=0.0)


class TestMedianOfMeans:
    def test_single_block_is_mean(self):
        x = [1.0, 4.0, -2.0, 7.0]
        assert median_of_means(x, 1) == np.mean(x)

    def test_n_blocks_is_median(self):
        x = [5.0, 1.0, 9.0, 2.0, 3.0]
        assert median_of_means(x, len(x)) == np.median(x)

    def test_hand_computed(self):
        assert median_of_means([1, 2, 3, 4, 5, 6], 3) == 3.5

    def test_remainder_from_front(self):
        # 7 samples, 3 blocks -> sizes 3,2,2
        x = np.array([0.0, 0.0, 0.0, 10.0, 10.0, 4.0, 4.0])
        expected = np.median([0.0, 10.0, 4.0])
        assert median_of_means(x, 3) == expected

    def test_validation(self):
        with pytest.raises(ValueError):
            median_of_means([1.0, 2.0], 3)
        with pytest.raises(ValueError):
            median_of_means([], 1)


class TestMadScale:
    def test_constant(self):
        assert mad_scale([3.0, 3.0, 3.0]) == 0.0

    def test_single_outlier_ignored(self):
        assert mad_scale([0.0, 0.0, 0.0, 0.0, 100.0]) == 0.0

    def test_gaussian_consistency(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=100_000)
        assert mad_scale(x) == pytest.approx(1.0, abs=0.02)


class TestFloorPow2:
    @pytest.mark.parametrize("t,expected", [(1, 1), (2, 2), (3, 2), (5, 4), (8, 8), (1023, 512), (1024, 1024)])
    def test_values(self, t, expected):
        assert floor_pow2(t) == expected

    def test_domain(self):
        with pytest.raises(ValueError):
            floor_pow2(0)


class TestSequentialHuber:
    def test_initial_state(self):
        s = SequentialHuber(1.0)
        assert s.count == 0
        assert s.value == 0.0
        assert s.buffer.size == 0

    def test_single_sample(self):
        s = SequentialHuber(1.0)
        s.update(5.0)
        assert s.value == huber_estimate([5.0], 1.0) == 5.0

    def test_power_of_two_matches_batch_exactly(self):
        rng = np.random.default_rng(11)
        data = rng.standard_t(3, size=300)
        data[::17] = -40.0
        s = SequentialHuber(1.5)
        for i, x in enumerate(data, 1):
            s.update(float(x))
            if i == floor_pow2(i):
                assert s.value == huber_estimate(data[:i], 1.5)

    def test_alternating_stream_stays_zero(self):
        s = SequentialHuber(0.5)
        for i in range(1, 201):
            s.update(-1.0 if i % 2 else 1.0)
            if i % 2 == 0:
                assert abs(s.value) < 1e-12

    def test_large_beta_reduces_to_running_mean(self):
        rng = np.random.default_rng(13)
        xs = rng.normal(size=100)
        s = SequentialHuber(1e6)
        for i, x in enumerate(xs, 1):
            s.update(float(x))
            assert abs(s.value - xs[:i].mean()) <= 1e-10

    def test_zero_denominator_returns_anchor(self):
        s = SequentialHuber(1.0)
        s.update(0.0)
        s.update(10.0)  # anchor lands mid-gap, both samples clipped
        assert s.psi_prime_sum == 0.0
        anchor = s.anchor
        s.update(50.0)  # still outside the clip window
        assert s.psi_prime_sum == 0.0
        assert s.value == anchor

    def test_correction_arithmetic(self):
        s = SequentialHuber(1.0)
        s.count = 5
        s.anchor = 1.0
        s.psi_sum = 0.5
        s.psi_prime_sum = 5.0
        assert s.value == pytest.approx(1.1)

    def test_state_invariants(self):
        rng = np.random.default_rng(17)
        s = SequentialHuber(1.0)
        for i, x in enumerate(rng.normal(size=150), 1):
            s.update(float(x))
            assert s.count == i == s.buffer.size
            assert 0.0 <= s.psi_prime_sum <= s.count
            anchor_n = floor_pow2(i)
            assert s.anchor == huber_estimate(s.buffer[:anchor_n], 1.0)

    def test_solver_touches_bounded_by_2n(self):
        rng = np.random.default_rng(19)
        n = 1000
        s = SequentialHuber(2.0)
        for x in rng.normal(size=n):
            s.update(float(x))
        assert s.solver_samples <= 2 * n

    def test_close_to_batch_on_gaussian_streams(self):
        # Non-anchor staleness stays within a few standard errors.
        rng = np.random.default_rng(23)
        fails = 0
        runs = 60
        for _ in range(runs):
            data = rng.normal(size=2**9)
            s = SequentialHuber(4.0)
            for x in data:
                s.update(float(x))
            t = data.size - 1  # most stale point before the final anchor
            batch = huber_estimate(data[:t], 4.0)
            se = data[:t].std() / math.sqrt(t)
            seq_val_stream = SequentialHuber(4.0)
            for x in data[:t]:
                seq_val_stream.update(float(x))
            if abs(seq_val_stream.value - batch) > 5 * se:
                fails += 1
        assert fails <= 1
