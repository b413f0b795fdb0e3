import numpy as np
import pytest

from mewls.synth import (
    NoiseSpec,
    gen_helix,
    gen_profile,
    gen_spiral,
    helix_points,
    spiral_points,
    two_bump_profile,
)


class TestSpiral:
    def test_reference_configuration(self):
        raw, planted = gen_spiral(200, 1.0, 4.0, NoiseSpec(30.0, seed=7))
        assert raw.y.shape == (200, 2) and planted.size == 100
        assert planted.tolist() == list(range(0, 200, 2))
        assert raw.t[0] == 0 and raw.t[-1] == pytest.approx(4 * np.pi, rel=1e-14)
        clean = np.setdiff1d(np.arange(200), planted)
        np.testing.assert_allclose(raw.y[clean], spiral_points(raw.t[clean]), rtol=0, atol=1e-12)
        assert np.all(np.abs(raw.y) <= 60)
        assert np.any(raw.y[planted] != spiral_points(raw.t[planted]))

    def test_zero_noise(self):
        raw, planted = gen_spiral(50, noise=NoiseSpec(0.0))
        np.testing.assert_array_equal(raw.y, spiral_points(raw.t))
        assert planted.size == 25

    def test_deterministic_and_seeded(self):
        a, _ = gen_spiral(noise=NoiseSpec(30.0, seed=3))
        b, _ = gen_spiral(noise=NoiseSpec(30.0, seed=3))
        c, _ = gen_spiral(noise=NoiseSpec(30.0, seed=4))
        assert np.array_equal(a.y, b.y) and not np.array_equal(a.y, c.y)

    def test_box_respected_with_large_variance(self):
        box = ((-60.0, 60.0), (-60.0, 60.0))
        raw, _ = gen_spiral(noise=NoiseSpec(5000.0, box, seed=1))
        assert np.all(np.abs(raw.y) <= 60)

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_spiral(1)
        with pytest.raises(ValueError):
            NoiseSpec(-1.0)
        with pytest.raises(ValueError):
            NoiseSpec(1.0, ((1.0, 1.0),))


class TestHelix:
    def test_reference_configuration(self):
        raw, planted = gen_helix(400, 2.0, 1.0, 100, NoiseSpec(20.0, seed=0))
        assert raw.y.shape == (400, 3)
        assert planted.size == 100 and np.unique(planted).size == 100
        assert raw.t[0] == -4 and raw.t[-1] == pytest.approx(4, rel=1e-14)
        clean = np.setdiff1d(np.arange(400), planted)
        np.testing.assert_allclose(raw.y[clean], helix_points(raw.t[clean]), rtol=0, atol=1e-12)
        assert np.all(np.abs(raw.y) <= 4)

    def test_clean_helix(self):
        raw, planted = gen_helix(n_corrupted=0)
        assert planted.size == 0
        np.testing.assert_array_equal(raw.y, helix_points(raw.t))

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_helix(10, n_corrupted=11)


class TestProfile:
    def test_reference_configuration(self):
        raw, planted = gen_profile(32, 12, seed=0)
        assert raw.t.size == 44 and planted.size == 12
        assert np.all(np.diff(raw.t) >= 0)
        inl = np.setdiff1d(np.arange(44), planted)
        dev = np.abs(raw.y[:, 0] - two_bump_profile(raw.t))
        assert np.all(dev[planted] >= 5 * 0.01)
        assert np.all(dev[planted] >= 0.2 - 1e-12)
        assert np.all(dev[inl] < 5 * 0.01)
        assert np.all((raw.y >= 0) & (raw.y <= 1))

    def test_no_outliers(self):
        raw, planted = gen_profile(20, 0, seed=2)
        assert planted.size == 0
        assert np.all(np.abs(raw.y[:, 0] - two_bump_profile(raw.t)) < 5 * 0.01)

    def test_custom_profile_and_range(self):
        raw, planted = gen_profile(10, 3, profile=lambda x: 0.5 + 0 * x, displacement=(0.2, 0.3),
                                   seed=4)
        dev = np.abs(raw.y[planted, 0] - 0.5)
        assert np.all((dev >= 0.2) & (dev <= 0.3))

    def test_deterministic(self):
        a, pa = gen_profile(seed=9)
        b, pb = gen_profile(seed=9)
        assert np.array_equal(a.y, b.y) and np.array_equal(pa, pb)

    @pytest.mark.parametrize(
        "kwargs",
        [{"n_inliers": -1}, {"n_inliers": 0, "n_outliers": 0}, {"displacement": 0.04},
         {"margin": 0.5}],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            gen_profile(**kwargs)
