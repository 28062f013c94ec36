import numpy as np
import pytest

from prodgap.errors import DomainError
from prodgap.params import ModelParams, single_interval
from prodgap import fredholm, montecarlo


def spec_1x1(trials=50_000, seed=11):
    return montecarlo.EnsembleSpec(
        n0=1, params=ModelParams((0.0,)), trials=trials, seed=seed
    )


class TestSampling:
    def test_output_shape_sorted_nonnegative(self):
        spec = montecarlo.EnsembleSpec(
            n0=4, params=ModelParams((1.0, 2.0)), trials=10, seed=3
        )
        vals = montecarlo.sample_squared_singular_values(spec, 0)
        assert vals.shape == (4,)
        assert np.all(vals >= 0)
        assert np.all(np.diff(vals) >= 0)

    def test_reproducible_bitwise(self):
        spec = spec_1x1(trials=100)
        a = montecarlo.sample_squared_singular_values(spec, 42)
        b = montecarlo.sample_squared_singular_values(spec, 42)
        assert np.array_equal(a, b)
        same = montecarlo.EnsembleSpec(
            n0=1, params=ModelParams((0.0,)), trials=100, seed=11
        )
        c = montecarlo.sample_squared_singular_values(same, 42)
        assert np.array_equal(a, c)

    def test_trials_differ(self):
        spec = spec_1x1(trials=100)
        a = montecarlo.sample_squared_singular_values(spec, 0)
        b = montecarlo.sample_squared_singular_values(spec, 1)
        assert not np.array_equal(a, b)

    def test_integer_nu_required(self):
        with pytest.raises(DomainError):
            montecarlo.EnsembleSpec(
                n0=4, params=ModelParams((0.5,)), trials=10, seed=3
            )

    def test_exponential_mean(self):
        spec = spec_1x1(trials=100_000, seed=21)
        vals = montecarlo.min_squared_singular_values(spec)
        assert np.mean(vals) == pytest.approx(1.0, abs=0.01)

    def test_second_moment_identity(self):
        # E[sum of squared singular values] = N_0 prod_j N_j, checked on a
        # small case by direct averaging
        spec = montecarlo.EnsembleSpec(
            n0=2, params=ModelParams((1.0, 2.0)), trials=4000, seed=17
        )
        total = np.mean(
            [
                np.sum(montecarlo.sample_squared_singular_values(spec, i))
                for i in range(spec.trials)
            ]
        )
        target = 2 * 3 * 4
        assert total == pytest.approx(target, rel=0.05)


class TestEmpiricalGap:
    def test_tends_to_one_at_zero(self):
        spec = spec_1x1(trials=2000)
        est, err = montecarlo.empirical_gap(spec, 1e-12)
        assert est == pytest.approx(1.0, abs=1e-3)
        assert err >= 0.0

    def test_exponential_law_within_three_se(self):
        spec = spec_1x1(trials=100_000, seed=7)
        for s in [0.25, 1.0, 2.0]:
            est, err = montecarlo.empirical_gap(spec, s)
            assert abs(est - np.exp(-s)) <= 3.0 * err

    def test_monotone_in_s(self):
        spec = spec_1x1(trials=5000)
        grid = np.linspace(0.1, 3.0, 12)
        est, _ = montecarlo.empirical_gap_curve(spec, grid)
        assert np.all(np.diff(est) <= 0)

    def test_dimension_convergence_trend(self):
        # deviation from the limit shrinks as N0 grows; nu = 1 has a genuine
        # finite-size bias (nu = 0 would be exactly on the limit at every N0)
        params = ModelParams((1.0,))
        f_limit = fredholm.gap_probability(params, single_interval(1.0), 60)
        devs = []
        for n0 in (4, 16, 64):
            spec = montecarlo.EnsembleSpec(n0=n0, params=params, trials=20000, seed=5)
            est, _ = montecarlo.empirical_gap(spec, 1.0)
            devs.append(abs(est - f_limit))
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] < 0.01

    def test_matches_fredholm_at_moderate_dimension(self):
        params = ModelParams((0.0, 0.0))
        spec = montecarlo.EnsembleSpec(n0=50, params=params, trials=4000, seed=13)
        f_ref = fredholm.gap_probability(params, single_interval(1.0), 60)
        est, err = montecarlo.empirical_gap(spec, 1.0)
        assert abs(est - f_ref) <= 0.03
