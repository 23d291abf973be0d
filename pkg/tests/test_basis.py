import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from tkrr.basis import (FeatureMapConfig, approx_gram, approx_kernel, exact_rbf_kernel,
                        feature_tensor, grid_error_1d, local_feature_map, rbf_spectral_density)
from tkrr.exceptions import DimensionError, DomainError, ParameterError
from tkrr.tensor import CpdTensor, cpd_to_dense


class TestSpectralDensity:
    def test_at_zero(self):
        assert rbf_spectral_density(0.0, 1.0) == pytest.approx(np.sqrt(2 * np.pi))

    def test_even(self):
        w = np.random.default_rng(0).normal(size=20)
        np.testing.assert_array_equal(rbf_spectral_density(w, 0.7), rbf_spectral_density(-w, 0.7))

    @pytest.mark.parametrize("ell", [0.3, 1.0, 2.5])
    def test_integrates_to_unit_variance(self, ell):
        # inverse Fourier transform at lag 0: k(0) = (1/2pi) * integral of S
        val, _ = integrate.quad(lambda w: rbf_spectral_density(w, ell), -40 / ell, 40 / ell,
                                limit=200)
        assert val / (2 * np.pi) == pytest.approx(1.0, abs=1e-6)

    def test_bad_lengthscale(self):
        with pytest.raises(ParameterError):
            rbf_spectral_density(1.0, 0.0)


class TestLocalFeatureMap:
    cfg = FeatureMapConfig.uniform(2, basis=16, half_width=2.0, lengthscale=0.5)

    @pytest.mark.parametrize("x", [-2.0, 2.0])
    def test_boundary_vanishes(self, x):
        phi = local_feature_map(x, 0, self.cfg)
        assert np.all(np.abs(phi) < 1e-12 * np.arange(1, 17))

    def test_entries_follow_closed_form(self):
        x, u, ell = 0.3, 2.0, 0.5
        phi = local_feature_map(x, 1, self.cfg)
        for i in range(1, 17):
            w = np.pi * i / (2 * u)
            s = ell * np.sqrt(2 * np.pi) * np.exp(-(ell * w) ** 2 / 2)
            assert phi[i - 1] == pytest.approx(np.sqrt(s / u) * np.sin(w * (x + u)), abs=1e-15)

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            local_feature_map(2.5, 0, self.cfg)
        with pytest.raises(DomainError):
            local_feature_map(np.array([0.0, np.nan]), 0, self.cfg)

    def test_bad_dimension(self):
        with pytest.raises(DimensionError):
            local_feature_map(0.0, 2, self.cfg)

    def test_2d_grid_approximates_rbf(self):
        cfg = FeatureMapConfig((32,), (2.0,), 0.5)
        g = np.linspace(-1, 1, 21)
        phi = local_feature_map(g, 0, cfg)
        exact = np.exp(-(g[:, None] - g[None, :]) ** 2 / (2 * 0.25))
        assert np.max(np.abs(phi @ phi.T - exact)) < 1e-3


class TestFeatureTensor:
    cfg = FeatureMapConfig((3, 4), (1.5, 2.0), 0.8)

    def test_matches_local_maps(self):
        x = np.array([0.2, -0.7])
        vecs = feature_tensor(x, self.cfg)
        np.testing.assert_array_equal(vecs[0], local_feature_map(0.2, 0, self.cfg))
        np.testing.assert_array_equal(vecs[1], local_feature_map(-0.7, 1, self.cfg))

    def test_outer_product_is_rank_one_cpd(self):
        vecs = feature_tensor(np.array([0.1, 0.4]), self.cfg)
        dense = cpd_to_dense(CpdTensor(tuple(v[:, None] for v in vecs))).to_array()
        np.testing.assert_allclose(dense, np.outer(vecs[0], vecs[1]), atol=1e-15)

    def test_one_dimension(self):
        cfg = FeatureMapConfig((5,), (1.0,), 0.4)
        np.testing.assert_array_equal(feature_tensor(np.array([0.3]), cfg)[0],
                                      local_feature_map(0.3, 0, cfg))

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            feature_tensor(np.zeros(3), self.cfg)


class TestApproxKernel:
    cfg = FeatureMapConfig.uniform(3, basis=32, half_width=2.0, lengthscale=0.7)

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        x, y = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        assert approx_kernel(x, y, self.cfg) == approx_kernel(y, x, self.cfg)

    def test_close_to_exact_rbf(self):
        # the error is set by the boundary image term exp(-(x + x' + 2U)^2 / (2 l^2));
        # across seeds 0-4 the 50-pair maximum ranged 2.6e-3 .. 8.1e-3
        rng = np.random.default_rng(0)
        errs = [abs(approx_kernel(x, y, self.cfg) - exact_rbf_kernel(x, y, 0.7))
                for x, y in zip(rng.uniform(-1, 1, (50, 3)), rng.uniform(-1, 1, (50, 3)))]
        assert max(errs) < 1e-2

    def test_diagonal_bounded(self):
        rng = np.random.default_rng(2)
        for x in rng.uniform(-1, 1, (50, 3)):
            assert approx_kernel(x, x, self.cfg) <= 1 + 1e-3

    def test_product_of_one_dimensional_kernels(self):
        rng = np.random.default_rng(3)
        x, y = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        parts = [approx_kernel(x[d:d + 1], y[d:d + 1], FeatureMapConfig((32,), (2.0,), 0.7))
                 for d in range(3)]
        assert approx_kernel(x, y, self.cfg) == pytest.approx(np.prod(parts), abs=1e-12)

    def test_domain_violation(self):
        with pytest.raises(DomainError):
            approx_kernel(np.array([3.0, 0, 0]), np.zeros(3), self.cfg)


class TestExactRbf:
    def test_identical_points(self):
        assert exact_rbf_kernel([0.3, 0.1], [0.3, 0.1], 0.5) == 1.0

    def test_closed_form(self):
        ell = 0.8
        x2 = np.array([ell * np.sqrt(2), 0.0])
        assert exact_rbf_kernel(np.zeros(2), x2, ell) == pytest.approx(np.exp(-1))

    def test_monotone_in_distance(self):
        d = np.sort(np.random.default_rng(4).uniform(0, 3, 30))
        vals = [exact_rbf_kernel([0.0], [v], 0.6) for v in d]
        assert np.all(np.diff(vals) <= 0)

    def test_bad_lengthscale(self):
        with pytest.raises(ParameterError):
            exact_rbf_kernel([0.0], [1.0], -1.0)


def test_grid_error_nonincreasing_in_basis_size():
    grid = np.linspace(-1, 1, 41)
    errs = [grid_error_1d(m, 2.0, 0.5, grid) for m in (4, 8, 16, 32, 64)]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 25), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_gram_is_psd(n, dims, seed):
    rng = np.random.default_rng(seed)
    cfg = FeatureMapConfig.uniform(dims, basis=8, half_width=1.25, lengthscale=0.4)
    X = rng.uniform(-1.25, 1.25, (n, dims))
    assert np.linalg.eigvalsh(approx_gram(X, X, cfg)).min() >= -1e-9


def test_config_validation():
    with pytest.raises(ParameterError):
        FeatureMapConfig((0,), (1.0,), 1.0)
    with pytest.raises(ParameterError):
        FeatureMapConfig((3,), (0.0,), 1.0)
    with pytest.raises(DimensionError):
        FeatureMapConfig((3, 3), (1.0,), 1.0)
    with pytest.raises(ParameterError):
        FeatureMapConfig((3,), (1.0,), 0.0)
