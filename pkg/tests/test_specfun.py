"""Spectral profiles: step polynomials, projection profiles, attenuation."""

import numpy as np
import pytest

from gibbslab import models, numerics, promises, specfun
from gibbslab.errors import DomainError, IntervalVanishes

GRID01 = np.linspace(0.0, 1.0, 10001)


def assert_unit_range(profile, grid=GRID01):
    vals = profile(grid)
    assert vals.min() >= -1e-9
    assert vals.max() <= 1 + 1e-9


class TestStepPoly:
    def test_half_at_origin(self):
        theta = specfun.step_poly(0.1, 1e-3)
        assert abs(theta(0.0) - 0.5) < 1e-12

    def test_plateau_errors(self):
        theta = specfun.step_poly(0.1, 1e-3)
        assert theta(-0.5) <= 1e-3
        assert theta(0.5) >= 1 - 1e-3
        grid = np.linspace(-2.0, 2.0, 20001)
        vals = theta(grid)
        assert np.max(vals[grid <= -0.05]) <= 1e-3
        assert np.min(vals[grid >= 0.05]) >= 1 - 1e-3
        assert vals.min() >= -1e-9 and vals.max() <= 1 + 1e-9

    @pytest.mark.parametrize("kappa", [0.05, 0.1, 0.2])
    def test_degree_growth_in_delta(self, kappa):
        for delta in (1e-2, 1e-4):
            d_finer = specfun.step_poly(kappa, delta / 10).degree
            d = specfun.step_poly(kappa, delta).degree
            assert d_finer / d <= 2.5

    def test_degree_law_stability(self):
        laws = []
        for kappa in (0.05, 0.1, 0.2):
            for delta in (1e-2, 1e-4, 1e-6):
                theta = specfun.step_poly(kappa, delta)
                laws.append(theta.degree * kappa / np.log(1.0 / delta))
        assert max(laws) / min(laws) <= 3.0

    def test_domain_enforced(self):
        theta = specfun.step_poly(0.1, 1e-3)
        with pytest.raises(DomainError):
            theta(2.5)


class TestProjectionPoly:
    def test_constant_when_no_flips(self):
        spec = specfun.ProfileSpec(((0.0, 0.4), (0.5, 1.0)), (1, 1), delta=1e-3)
        profile = specfun.projection_poly(spec)
        assert profile.degree == 0
        assert np.allclose(profile(GRID01), 1.0)

    def test_single_flip(self):
        spec = specfun.ProfileSpec(((0.0, 0.45), (0.55, 1.0)), (0, 1), delta=1e-4)
        profile = specfun.projection_poly(spec)
        assert np.max(np.abs(profile(np.linspace(0.0, 0.45, 500)))) <= 1e-4
        assert np.max(np.abs(profile(np.linspace(0.55, 1.0, 500)) - 1)) <= 1e-4
        assert_unit_range(profile)

    @pytest.mark.parametrize("delta", [1e-2, 1e-4, 1e-6])
    def test_multi_flip_error_target(self, delta):
        kappa = 0.05
        spec = specfun.ProfileSpec(
            ((0.0, 0.2), (0.2 + kappa, 0.5), (0.5 + kappa, 0.8), (0.8 + kappa, 1.0)),
            (1, 0, 1, 0),
            delta=delta,
        )
        profile = specfun.projection_poly(spec)
        for (a, b), c in zip(spec.intervals, spec.labels):
            pts = np.linspace(a, b, 2001)
            assert np.max(np.abs(profile(pts) - c)) <= delta
        assert_unit_range(profile)


class TestAmplifyT3:
    def test_fixed_points(self):
        assert abs(specfun.amplify_t3(specfun.constant_profile(1.0))(0.3) - 1.0) < 1e-15
        assert abs(specfun.amplify_t3(specfun.constant_profile(0.0))(0.3)) < 1e-15

    def test_error_contraction_near_zero(self):
        out = specfun.amplify_t3(specfun.constant_profile(0.01))(0.5)
        assert out <= 0.02

    def test_error_contraction_near_one(self):
        out = specfun.amplify_t3(specfun.constant_profile(0.99))(0.5)
        assert out >= 0.98


class TestLrProfile:
    def test_poly_mode_bounds(self):
        delta_sup = 1e-3
        profile = specfun.lr_profile(2, 1, delta_sup, "poly")
        for lo, hi in promises.deletion_windows(2, 1, "L"):
            pts = np.linspace(lo, hi, 201)
            assert np.max(profile(pts) ** 2) <= delta_sup / 3
        for lo, hi in promises.deletion_windows(2, 1, "R"):
            pts = np.linspace(lo, hi, 201)
            assert np.max(1 - profile(pts) ** 2) <= delta_sup / 3
        assert_unit_range(profile)

    def test_exact_mode_plateaus(self):
        profile = specfun.lr_profile(2, 1, 1e-3, "exact")
        for lo, hi in promises.deletion_windows(2, 1, "L"):
            assert np.max(np.abs(profile(np.linspace(lo, hi, 51)))) == 0.0
        for lo, hi in promises.deletion_windows(2, 1, "R"):
            assert np.min(profile(np.linspace(lo, hi, 51))) == 1.0
        assert_unit_range(profile)


class TestAttenuation:
    def setup_method(self):
        fine = promises.fine_grained(2, 1, "L")
        self.promise = promises.coarse_grained(fine, 2, 1, "L", 0)

    def test_exact_zero_on_gaps(self):
        profile = specfun.attenuation_profile(self.promise, 0.2, 1e-6, "exact")
        for lo, hi in self.promise.gaps:
            assert np.max(np.abs(profile(np.linspace(lo + 1e-12, hi - 1e-12, 51)))) == 0.0

    def test_exact_one_on_truncation(self):
        gamma = 0.2
        profile = specfun.attenuation_profile(self.promise, gamma, 1e-6, "exact")
        truncated = self.promise.truncate(self.promise.kappa * gamma)
        for a, b in truncated.intervals:
            # the margin kappa*gamma is not binary-exact, so the truncation
            # endpoints can sit one ulp inside the ramp
            assert np.min(profile(np.linspace(a, b, 51))) >= 1.0 - 1e-12

    def test_poly_plateaus(self):
        gamma, delta_leak = 0.2, 1e-6
        profile = specfun.attenuation_profile(self.promise, gamma, delta_leak, "poly")
        truncated = self.promise.truncate(self.promise.kappa * gamma)
        for a, b in truncated.intervals:
            assert np.min(profile(np.linspace(a, b, 101))) >= 1 - delta_leak
        for lo, hi in self.promise.gaps:
            assert np.max(profile(np.linspace(lo, hi, 101))) <= delta_leak
        assert_unit_range(profile)

    def test_gamma_zero_exact_is_indicator(self):
        profile = specfun.attenuation_profile(self.promise, 0.0, 1e-6, "exact")
        for a, b in self.promise.intervals:
            assert profile(a) == 1.0 and profile(b) == 1.0
        for lo, hi in self.promise.gaps:
            assert profile((lo + hi) / 2) == 0.0

    def test_gamma_zero_poly_rejected(self):
        with pytest.raises(IntervalVanishes):
            specfun.attenuation_profile(self.promise, 0.0, 1e-6, "poly")

    def test_paired_profiles_uniformly_close(self):
        delta_leak = 1e-4
        exact, poly = specfun.paired_attenuation_profiles(self.promise, 0.2, delta_leak)
        diff = np.max(np.abs(exact(GRID01) - poly(GRID01)))
        assert diff <= delta_leak


class TestBitProjectors:
    def setup_method(self):
        fine = promises.fine_grained(2, 1, "R")
        self.promise = promises.coarse_grained(fine, 2, 1, "R", 1)
        self.model = models.random_diag(12, seed=3)

    def test_exact_mode_is_indicator_on_promise(self):
        bits = specfun.bit_projector_profiles(self.promise, 1e-6, "exact")
        for x, (a, b) in enumerate(self.promise.intervals):
            profile = bits.interval_profile(x)
            pts = np.linspace(a, b, 51)
            assert np.allclose(profile(pts), 1.0)
            for y, (c, d) in enumerate(self.promise.intervals):
                if y != x:
                    assert np.allclose(profile(np.linspace(c, d, 51)), 0.0)

    def test_poly_mode_partition_of_unity_on_promise(self):
        delta_est = 1e-4
        bits = specfun.bit_projector_profiles(self.promise, delta_est, "poly")
        profiles = bits.all_interval_profiles()
        for a, b in self.promise.intervals:
            pts = np.linspace(a, b, 101)
            total = sum(p(pts) for p in profiles)
            assert np.max(np.abs(total - 1.0)) <= 2 * delta_est

    def test_poly_mode_error_target(self):
        delta_est = 1e-4
        bits = specfun.bit_projector_profiles(self.promise, delta_est, "poly")
        for x, (a, b) in enumerate(self.promise.intervals):
            profile = bits.interval_profile(x)
            pts = np.linspace(a, b, 101)
            assert np.max(np.abs(profile(pts) - 1.0)) <= delta_est
        assert_unit_range(bits.interval_profile(0))

    def test_operator_level_commutation(self):
        # the lifted operators commute with H and with the promised projector
        spectrum = self.model.spectrum()
        bits = specfun.bit_projector_profiles(self.promise, 1e-6, "poly")
        H = spectrum.hamiltonian()
        P = sum(
            proj
            for lam, proj in zip(spectrum.eigenvalues, spectrum.projectors)
            if self.promise.contains(float(lam))
        )
        for x in range(self.promise.s):
            op = numerics.apply_function(spectrum, bits.interval_profile(x))
            assert numerics.spectral_norm(op @ H - H @ op) <= 1e-9
            assert numerics.spectral_norm(op @ P - P @ op) <= 1e-9


class TestCsvDump:
    def test_profile_samples_roundtrip(self, tmp_path):
        profile = specfun.lr_profile(2, 1, 1e-3, "exact")
        path = tmp_path / "profile.csv"
        specfun.dump_csv(profile, path, npoints=101)
        body = path.read_text().splitlines()
        assert body[0] == "lambda,value"
        assert len(body) == 102
        lam, val = body[50].split(",")
        assert abs(float(val) - profile(float(lam))) < 1e-15


class TestPromiseProjectors:
    def test_resolution_on_promised_subspace(self):
        # indicator-profile projectors resolve P^(M) and stay below identity
        model = models.random_diag(10, seed=4)
        spectrum = model.spectrum()
        fine = promises.fine_grained(3, 2, "L")
        promise = promises.coarse_grained(fine, 3, 2, "L", 2)
        blocks = []
        for x in range(promise.s):
            a, b = promise.intervals[x]
            single = promises.RoundingPromise(((a, b),))
            blocks.append(
                numerics.apply_function(spectrum, specfun.indicator_profile(single))
            )
        total = sum(blocks)
        P = numerics.apply_function(spectrum, specfun.indicator_profile(promise))
        assert numerics.spectral_norm(total - P) <= 1e-10
        assert np.linalg.eigvalsh(np.eye(10) - P).min() >= -1e-10
