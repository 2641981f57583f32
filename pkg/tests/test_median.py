import numpy as np
import pytest

from pagkit import (
    EmptyInputError,
    NoConvergeError,
    geometric_median,
    mad_about,
    scalar_median,
)


class TestScalarMedian:
    def test_odd_count(self):
        assert scalar_median([1.0, 2.0, 10.0]) == 2.0

    def test_even_count_midpoint(self):
        assert scalar_median([1.0, 2.0, 3.0, 4.0]) == 2.5

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            scalar_median([])

    def test_monotone_wrapped_exponential(self):
        # median of a monotone map is its midpoint value
        T, N = 2.0, 4096
        t = np.arange(N) * T / N
        samples = np.exp(-t) / (1 - np.exp(-2.0))
        want = np.exp(-1.0) / (1 - np.exp(-2.0))  # = 0.42546
        assert abs(scalar_median(samples) - want) < 1e-3 * want


class TestGeometricMedian:
    def test_identical_points(self):
        pts = np.tile([2.0, -1.0], (10, 1))
        res = geometric_median(pts)
        assert np.allclose(res.mu, [2.0, -1.0])
        assert res.mad == 0.0
        assert res.residual <= 1e-10

    def test_equilateral_triangle(self):
        angles = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        pts = np.column_stack([np.cos(angles), np.sin(angles)])
        res = geometric_median(pts)
        assert np.linalg.norm(res.mu) < 1e-8
        assert abs(res.mad - 1.0) < 1e-8

    def test_reduces_to_scalar(self):
        res = geometric_median(np.array([[1.0], [2.0], [10.0]]))
        assert abs(res.mu[0] - 2.0) < 1e-8
        assert abs(res.mad - 3.0) < 1e-8

    def test_translation_equivariance(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((50, 3))
        shift = np.array([5.0, -2.0, 1.0])
        a = geometric_median(pts)
        b = geometric_median(pts + shift)
        assert np.allclose(b.mu, a.mu + shift, atol=1e-8)
        assert abs(b.mad - a.mad) < 1e-9

    def test_scale_equivariance(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((40, 2))
        a = geometric_median(pts)
        b = geometric_median(3.0 * pts)
        assert np.allclose(b.mu, 3.0 * a.mu, atol=1e-8)
        assert abs(b.mad - 3.0 * a.mad) < 1e-8

    def test_agrees_with_scalar_median_odd(self):
        rng = np.random.default_rng(2)
        vals = rng.standard_normal(51)
        res = geometric_median(vals[:, None])
        assert abs(res.mu[0] - scalar_median(vals)) < 1e-7

    def test_collinear_cloud(self):
        # rank-1 cloud in 2-D: same iteration, no special casing
        t = np.linspace(-1.0, 2.0, 31)
        pts = np.column_stack([t, 2.0 * t])
        res = geometric_median(pts)
        assert np.allclose(res.mu, [0.5, 1.0], atol=1e-6)

    def test_minimality(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((100, 2))
        res = geometric_median(pts)
        spread = np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1))
        for _ in range(100):
            d = rng.standard_normal(2)
            d *= 1e-3 * spread / np.linalg.norm(d)
            assert res.mad <= mad_about(pts, res.mu + d) + 1e-9

    def test_no_converge_carries_best(self):
        rng = np.random.default_rng(4)
        pts = rng.standard_normal((30, 2))
        with pytest.raises(NoConvergeError) as exc:
            geometric_median(pts, tol=1e-16, max_iter=2)
        assert exc.value.best is not None
        assert exc.value.best.iterations == 2


class TestMadAbout:
    def test_single_point(self):
        assert mad_about(np.array([[1.0, 2.0]]), [1.0, 2.0]) == 0.0

    def test_suboptimal_center(self):
        pts = np.array([[1.0], [2.0], [10.0]])
        assert abs(mad_about(pts, [3.0]) - 10.0 / 3.0) < 1e-12
        assert mad_about(pts, [3.0]) > mad_about(pts, [2.0])

    def test_local_minimality_probe(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((60, 2)) * [2.0, 0.5]
        res = geometric_median(pts)
        for _ in range(20):
            v = rng.standard_normal(2)
            v /= np.linalg.norm(v)
            assert mad_about(pts, res.mu) <= mad_about(pts, res.mu + 1e-3 * v) + 1e-9
