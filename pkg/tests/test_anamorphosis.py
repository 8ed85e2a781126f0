import numpy as np
import pytest
from scipy.stats import kstest, norm

from floodchain.anamorphosis import (
    dump_knots_csv,
    fit,
    forward,
    inverse,
    saturation_fraction,
)


class TestFit:
    def test_three_sample_knots(self):
        amap = fit([0.1, 0.5, 0.9])
        assert np.array_equal(amap.values, [0.1, 0.5, 0.9])
        expected = norm.ppf([1 / 6, 1 / 2, 5 / 6])
        assert np.allclose(amap.scores, expected, atol=1e-14)
        assert amap.scores[1] == 0.0

    def test_order_invariant(self):
        a = fit([0.9, 0.1, 0.5])
        b = fit([0.1, 0.5, 0.9])
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.scores, b.scores)

    def test_all_identical_degenerate(self):
        with pytest.warns(UserWarning, match="degenerate"):
            amap = fit([0.3, 0.3, 0.3])
        assert amap.degenerate
        assert forward(amap, 0.7) == 0.7
        assert inverse(amap, -1.2) == -1.2

    def test_duplicates_collapse_to_mean_score(self):
        amap = fit([0.0, 0.0, 0.5, 1.0])  # m=4, p = 1/8, 3/8, 5/8, 7/8
        assert np.array_equal(amap.values, [0.0, 0.5, 1.0])
        expected0 = 0.5 * (norm.ppf(1 / 8) + norm.ppf(3 / 8))
        assert amap.scores[0] == pytest.approx(expected0, abs=1e-14)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit([0.5])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            fit([0.1, np.nan])


class TestForwardInverse:
    def test_median_maps_to_zero(self):
        amap = fit([0.2, 0.6, 0.7, 0.9, 0.95])
        assert forward(amap, 0.7) == pytest.approx(0.0, abs=1e-15)
        assert inverse(amap, 0.0) == pytest.approx(0.7, abs=1e-15)

    def test_interpolation_between_knots(self):
        amap = fit([0.1, 0.5, 0.9])
        expected = 0.5 * (norm.ppf(1 / 6) + 0.0)
        got = forward(amap, 0.3)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-0.4837, abs=5e-4)

    def test_monotone(self):
        rng = np.random.default_rng(0)
        amap = fit(rng.beta(0.4, 0.4, 60))
        xs = np.sort(rng.uniform(-0.2, 1.2, 500))
        ys = forward(amap, xs)
        assert np.all(np.diff(ys) >= 0)
        zs = np.sort(rng.normal(0, 2, 500))
        vs = inverse(amap, zs)
        assert np.all(np.diff(vs) >= 0)

    def test_round_trip_on_sample_range(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform(0, 1, 40)
        amap = fit(samples)
        for x in np.linspace(samples.min(), samples.max(), 200):
            assert inverse(amap, forward(amap, x)) == pytest.approx(x, abs=1e-12)
        scores = forward(amap, np.sort(samples))
        assert np.array_equal(np.argsort(scores), np.arange(40))  # rank preserving

    def test_score_clamped_at_bound(self):
        amap = fit([0.4, 0.45, 0.5, 0.55, 0.6], score_bound=4.0)
        assert forward(amap, 1e9) == 4.0
        assert forward(amap, -1e9) == -4.0

    def test_wsr_map_clips_to_unit_interval(self):
        amap = fit([0.2, 0.5, 0.8], clip_range=(0.0, 1.0))
        assert inverse(amap, 10.0) == 1.0
        assert inverse(amap, -10.0) == 0.0


class TestDistributionalPull:
    @pytest.mark.parametrize(
        "name,sampler",
        [
            ("uniform", lambda rng: rng.uniform(0, 1, 200)),
            ("beta", lambda rng: rng.beta(0.5, 0.5, 200)),
            ("lognormal", lambda rng: rng.lognormal(0.0, 1.0, 200)),
        ],
    )
    def test_transformed_samples_pass_ks(self, name, sampler):
        rng = np.random.default_rng(42)
        samples = sampler(rng)
        amap = fit(samples)
        z = forward(amap, samples)
        assert kstest(z, "norm").pvalue > 0.01


class TestSaturation:
    def test_fraction(self):
        assert saturation_fraction([0.0, 1.0, 0.5, 0.0]) == 0.75
        assert saturation_fraction([0.2, 0.3]) == 0.0


def test_knots_dump(tmp_path):
    amap = fit([0.1, 0.5, 0.9])
    p = tmp_path / "knots.csv"
    dump_knots_csv(p, {"sub1@3600": amap})
    lines = p.read_text().splitlines()
    assert lines[0] == "label,knot,value,score,degenerate"
    assert len(lines) == 4
    assert lines[2].startswith("sub1@3600,1,0.5,0.0")
