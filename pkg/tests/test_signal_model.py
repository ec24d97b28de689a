"""
Tests for steering subspaces, covariance families and dataset generation.
"""

import numpy as np
import pytest

from models.schemas import Hypothesis, NoiseSpec, SubspaceSpec
from services.signal_model import (
    ModelError,
    base_covariance,
    build_noise_spec,
    build_subspaces,
    default_phi,
    fourier_steering,
    generate_dataset,
    heterogeneous_test_cov,
    sample_complex_gaussian,
    snr_db_of,
    split_groups,
    theta_for_snr,
)
from utils.linalg import HermitianPD, sample_covariance


class TestFourierSteering:
    """Tests for fourier_steering."""

    def test_zero_frequency(self):
        """f=0 gives the normalized all-ones vector."""
        np.testing.assert_allclose(fourier_steering(0.0, 5), np.ones(5) / np.sqrt(5))

    def test_half_cycle(self):
        """f=0.5, N=2 alternates sign."""
        np.testing.assert_allclose(fourier_steering(0.5, 2), np.array([1, -1]) / np.sqrt(2), atol=1e-15)

    def test_matches_direct_evaluation(self):
        """Entries are e^{-j2πfn}/√N."""
        n = np.arange(5)
        expected = np.exp(-1j * 0.2 * np.pi * n) / np.sqrt(5)
        np.testing.assert_allclose(fourier_steering(0.1, 5), expected, atol=1e-15)

    @pytest.mark.parametrize("f", [0.0, 0.1, 0.37, -0.025])
    def test_unit_norm(self, f):
        """Steering vectors have unit norm."""
        assert np.linalg.norm(fourier_steering(f, 7)) == pytest.approx(1.0, abs=1e-12)

    def test_invalid_dimension(self):
        """N < 1 is rejected."""
        with pytest.raises(ModelError):
            fourier_steering(0.1, 0)


class TestBuildSubspaces:
    """Tests for build_subspaces."""

    def test_default_frequencies(self, default_spec):
        """H sits at 0.10 and 0.15, B at 0."""
        h, b = build_subspaces(default_spec)
        np.testing.assert_allclose(h[:, 0], fourier_steering(0.10, 5), atol=1e-15)
        np.testing.assert_allclose(h[:, 1], fourier_steering(0.15, 5), atol=1e-15)
        np.testing.assert_allclose(b[:, 0], np.ones(5) / np.sqrt(5), atol=1e-15)

    def test_single_signal_column(self):
        """p=1 puts H at 0.10."""
        h, b = build_subspaces(SubspaceSpec(n=5, p=1, t=1))
        assert h.shape == (5, 1) and b.shape == (5, 1)
        np.testing.assert_allclose(h[:, 0], fourier_steering(0.10, 5), atol=1e-15)

    def test_columns_unit_norm(self):
        """Every column has unit norm."""
        h, b = build_subspaces(SubspaceSpec(n=8, p=3, t=2))
        np.testing.assert_allclose(np.linalg.norm(np.hstack([h, b]), axis=0), 1.0, atol=1e-12)

    def test_default_well_conditioned(self, default_subspaces):
        """[H, B] of the default spec has singular values > 0.1."""
        h, b = default_subspaces
        assert np.linalg.svd(np.hstack([h, b]), compute_uv=False).min() > 0.1


class TestGroupsAndDefaults:
    """Tests for split_groups, default_phi and base_covariance."""

    def test_even_split(self):
        """500 over two groups is 250 each."""
        assert split_groups(500, 2) == (250, 250)

    def test_remainder_goes_last(self):
        """Remainder is spread over the last groups."""
        assert split_groups(11, 3) == (3, 4, 4)

    def test_too_many_groups(self):
        """J > K is rejected."""
        with pytest.raises(ModelError):
            split_groups(2, 3)

    def test_default_phi_unit_norm(self):
        """φ defaults to ones/√t."""
        np.testing.assert_allclose(default_phi(4), np.full(4, 0.5))

    def test_base_covariance_preset_value(self):
        """N=5 uses 0.44·I."""
        np.testing.assert_allclose(base_covariance(5).matrix, 0.44 * np.eye(5))

    def test_base_covariance_unit_norm(self):
        """Other N use I/√N."""
        assert np.linalg.norm(base_covariance(8).matrix) == pytest.approx(1.0)


class TestSampleComplexGaussian:
    """Tests for sample_complex_gaussian."""

    def test_identity_covariance(self, rng):
        """10⁴ draws of CN(0, I5) have covariance within 0.1 of I."""
        draws = sample_complex_gaussian(np.zeros(5), np.eye(5), rng, size=10_000)
        assert np.linalg.norm(sample_covariance(draws) - np.eye(5)) < 0.1

    def test_vanishing_noise(self, rng):
        """cov = 1e-12·I returns the mean."""
        mean = np.array([1 + 2j, -1, 0.5j])
        draw = sample_complex_gaussian(mean, 1e-12 * np.eye(3), rng)
        np.testing.assert_allclose(draw, mean, atol=1e-5)

    def test_diagonal_variance(self, rng):
        """cov = diag(4, 1) gives variance ≈ 4 on the first coordinate."""
        draws = sample_complex_gaussian(np.zeros(2), np.diag([4.0, 1.0]), rng, size=10_000)
        assert np.mean(np.abs(draws[:, 0]) ** 2) == pytest.approx(4.0, rel=0.1)

    def test_singular_covariance_uses_eigen_factor(self, rng):
        """Rank-deficient covariances are sampled inside their range."""
        v = np.array([1.0, 1.0j, 0.0]) / np.sqrt(2)
        draws = sample_complex_gaussian(np.zeros(3), np.outer(v, v.conj()), rng, size=50)
        assert np.allclose(draws[:, 2], 0.0, atol=1e-6)

    def test_indefinite_covariance_raises(self, rng):
        """Negative eigenvalues are rejected."""
        with pytest.raises(ModelError):
            sample_complex_gaussian(np.zeros(2), np.diag([1.0, -1.0]), rng)

    def test_dimension_mismatch(self, rng):
        """Mean and covariance must agree."""
        with pytest.raises(ModelError):
            sample_complex_gaussian(np.zeros(3), np.eye(2), rng)


class TestThetaForSnr:
    """Tests for theta_for_snr."""

    @pytest.mark.parametrize("snr_db", [-20.0, 0.0, 8.0, 40.0])
    def test_round_trip(self, default_subspaces, snr_db):
        """The SNR of θ is the requested SNR."""
        h, _ = default_subspaces
        r = base_covariance(5)
        theta = theta_for_snr(h, r, 5.0, snr_db)
        assert snr_db_of(theta, h, r, 5.0) == pytest.approx(snr_db, abs=1e-9)

    def test_round_trip_structured_covariance(self, default_subspaces, pd_factory):
        """Holds for a non-diagonal R as well."""
        h, _ = default_subspaces
        r = pd_factory(5)
        theta = theta_for_snr(h, r, 2.0, 3.0)
        assert snr_db_of(theta, h, r, 2.0) == pytest.approx(3.0, abs=1e-9)

    def test_positive_at_preset_snr(self, default_subspaces):
        """8 dB gives a nonzero θ along ones/√p."""
        h, _ = default_subspaces
        theta = theta_for_snr(h, base_covariance(5), 5.0, 8.0)
        assert np.linalg.norm(theta) > 0
        np.testing.assert_allclose(theta / np.linalg.norm(theta), np.ones(2) / np.sqrt(2))

    def test_doubling_noise_scales_theta(self, default_subspaces):
        """Doubling σ² scales ‖θ‖ by √2."""
        h, _ = default_subspaces
        r = base_covariance(5)
        ratio = np.linalg.norm(theta_for_snr(h, r, 10.0, 8.0)) / np.linalg.norm(theta_for_snr(h, r, 5.0, 8.0))
        assert ratio == pytest.approx(np.sqrt(2), rel=1e-12)


class TestHeterogeneousTestCov:
    """Tests for heterogeneous_test_cov."""

    def test_alpha_zero_returns_input(self):
        """α=0 leaves R_s untouched."""
        r_s = base_covariance(5)
        assert heterogeneous_test_cov(r_s, 0.0, 0.95) is r_s

    def test_structure_before_normalization(self):
        """Off-diagonals follow 2·0.95^|i−j| up to the normalization."""
        r_s = base_covariance(5)
        out = heterogeneous_test_cov(r_s, 2.0, 0.95).matrix
        raw = 0.44 * np.eye(5) + 2.0 * 0.95 ** np.abs(np.subtract.outer(np.arange(5), np.arange(5)))
        np.testing.assert_allclose(out, raw / np.linalg.norm(raw), atol=1e-12)

    def test_unit_norm_and_pd(self):
        """The result has unit norm and is positive definite."""
        out = heterogeneous_test_cov(base_covariance(5), 2.0, 0.95)
        assert np.linalg.norm(out.matrix) == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.eigvalsh(out.matrix)[0] > 0

    @pytest.mark.parametrize("decay", [0.0, 1.5, -0.1])
    def test_decay_out_of_range(self, decay):
        """decay must lie in (0, 1]."""
        with pytest.raises(ModelError):
            heterogeneous_test_cov(base_covariance(5), 2.0, decay)


class TestGenerateDataset:
    """Tests for generate_dataset."""

    @staticmethod
    def quiet_noise(spec, sizes=(4,)):
        r = HermitianPD(np.eye(spec.n, dtype=np.complex128) / np.sqrt(spec.n), 1e-3)
        return NoiseSpec(
            r_s_base=r, r_test=r, sigma2_test=1e-12,
            group_sizes=sizes, group_scales=(1.0,) * len(sizes),
        )

    def test_h0_noiseless_is_zero(self, default_spec, rng):
        """H0 with φ=0 and vanishing noise gives y ≈ 0."""
        ds = generate_dataset(
            default_spec, self.quiet_noise(default_spec), np.ones(2), np.zeros(1), Hypothesis.H0, rng
        )
        np.testing.assert_allclose(ds.y, 0, atol=1e-5)
        assert ds.truth is Hypothesis.H0

    def test_h1_noiseless_is_signal(self, default_spec, default_subspaces, rng):
        """H1 with vanishing noise gives y ≈ Hθ + Bφ."""
        h, b = default_subspaces
        theta, phi = np.array([1.0, 2.0j]), np.array([0.5])
        ds = generate_dataset(default_spec, self.quiet_noise(default_spec), theta, phi, Hypothesis.H1, rng)
        np.testing.assert_allclose(ds.y, h @ theta + b @ phi, atol=1e-5)

    def test_hypotheses_differ_by_signal_only(self, default_spec, default_subspaces):
        """Same seed: y(H1) − y(H0) = Hθ and the secondary data match."""
        h, _ = default_subspaces
        noise = build_noise_spec(5, (10, 6), (5.0, 15.0), 5.0)
        theta, phi = np.array([0.3, -0.2j]), default_phi(1)
        d0 = generate_dataset(default_spec, noise, theta, phi, Hypothesis.H0, np.random.default_rng(3))
        d1 = generate_dataset(default_spec, noise, theta, phi, Hypothesis.H1, np.random.default_rng(3))
        np.testing.assert_allclose(d1.y - d0.y, h @ theta, atol=1e-12)
        for g0, g1 in zip(d0.secondary, d1.secondary):
            np.testing.assert_array_equal(g0, g1)

    def test_group_shapes(self, default_spec, rng):
        """Group j holds K_j vectors of dimension N."""
        noise = build_noise_spec(5, (7, 3), (1.0, 2.0), 1.0)
        ds = generate_dataset(default_spec, noise, np.zeros(2), default_phi(1), Hypothesis.H0, rng)
        assert ds.group_sizes == (7, 3)
        assert ds.pooled.shape == (10, 5)

    def test_h0_covariance(self, default_spec, rng):
        """Under H0 with φ=0, y has covariance σ²R_test."""
        noise = build_noise_spec(5, (1,), (1.0,), 5.0, alpha=2.0)
        ys = np.array([
            generate_dataset(default_spec, noise, np.zeros(2), np.zeros(1), Hypothesis.H0, rng).y
            for _ in range(10_000)
        ])
        target = noise.true_test_cov
        assert np.linalg.norm(sample_covariance(ys) - target) < 0.05 * np.linalg.norm(target)

    def test_dimension_mismatch(self, default_spec, rng):
        """θ of the wrong size is rejected."""
        with pytest.raises(ModelError):
            generate_dataset(
                default_spec, self.quiet_noise(default_spec), np.ones(3), np.zeros(1), Hypothesis.H1, rng
            )
