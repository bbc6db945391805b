"""Davies generators: filters, fixed points, promised variants, perturbations."""

import numpy as np
import pytest
import scipy.linalg

from gibbslab import davies, models, numerics, promises, specfun
from gibbslab.errors import EnumerationMismatch

METRO = davies.FilterFunction("metropolis", 1.0)


def expm_gibbs(H, beta):
    rho = scipy.linalg.expm(-beta * H)
    return rho / np.trace(rho).real


class TestFilter:
    def test_infinite_temperature(self):
        grid = np.linspace(-1, 1, 11)
        for kind in ("metropolis", "glauber"):
            assert np.allclose(davies.filter_value(kind, 0.0, grid), 1.0)

    def test_metropolis_value(self):
        assert abs(davies.filter_value("metropolis", 2.0, 0.5) - np.exp(-1.0)) < 1e-15

    @pytest.mark.parametrize("kind", ["metropolis", "glauber"])
    @pytest.mark.parametrize("beta", [0.5, 1.0, 5.0])
    def test_detailed_balance(self, kind, beta):
        grid = np.linspace(-1, 1, 41)
        g_plus = davies.filter_value(kind, beta, grid)
        g_minus = davies.filter_value(kind, beta, -grid)
        assert np.max(np.abs(g_plus * np.exp(beta * grid) - g_minus)) < 1e-12

    def test_range(self):
        grid = np.linspace(-1, 1, 41)
        for kind in ("metropolis", "glauber"):
            vals = davies.filter_value(kind, 3.0, grid)
            assert np.all(vals > 0) and np.all(vals <= 1 + 1e-15)


class TestIdealDavies:
    def test_diagonal_model_has_only_zero_frequency(self):
        model = models.random_diag(6, seed=1)
        # replace the coupling by a diagonal one in the eigenbasis
        spectrum = model.spectrum()
        diag = sum(
            (i + 1) / 6 * proj for i, proj in enumerate(spectrum.projectors)
        )
        model.couplings = [("diag", diag)]
        L = davies.ideal_davies(model, METRO)
        assert set(np.round(L.frequencies(), 12)) == {0.0}

    def test_infinite_temperature_unital(self):
        model = models.tfim(1, 2, 1.0)
        L = davies.ideal_davies(model, davies.FilterFunction("metropolis", 0.0))
        mixed = numerics.DensityMatrix.maximally_mixed(4)
        assert davies.fixed_point_residual(L, mixed) <= 1e-12

    def test_tfim_fixed_point_vs_expm(self):
        model = models.tfim(1, 2, 1.0)
        L = davies.ideal_davies(model, METRO)
        rho = expm_gibbs(model.H, 1.0)
        assert davies.fixed_point_residual(L, rho) <= 1e-9
        assert numerics.kernel_dimension(L.superop) == 1
        stationary = numerics.stationary_state(L.superop)
        assert numerics.trace_distance(stationary, rho) <= 1e-9

    def test_adjoint_pairing(self):
        model = models.tfim(1, 2, 1.0)
        filt = davies.FilterFunction("metropolis", 2.0)
        L = davies.ideal_davies(model, filt)
        by_freq = {}
        for nu, op in L.jumps:
            by_freq.setdefault(round(nu, 12), []).append(op)
        for nu, ops in by_freq.items():
            partners = by_freq.get(round(-nu, 12))
            assert partners is not None
            ratio = np.sqrt(filt(nu) / filt(-nu))
            total = sum(ops)
            partner_total = sum(partners)
            assert numerics.spectral_norm(
                numerics.dagger(total) - ratio * partner_total
            ) <= 1e-10

    def test_maximally_mixed_not_thermal_at_finite_beta(self):
        model = models.tfim(1, 2, 1.0)
        L = davies.ideal_davies(model, METRO)
        mixed = numerics.DensityMatrix.maximally_mixed(4)
        assert davies.fixed_point_residual(L, mixed) > 1e-3

    @pytest.mark.parametrize("kind", ["metropolis", "glauber"])
    def test_random_model_fixed_points(self, kind):
        for seed, beta in [(21, 0.5), (22, 5.0)]:
            model = models.random_diag(8, seed=seed)
            filt = davies.FilterFunction(kind, beta)
            L = davies.ideal_davies(model, filt)
            rho = numerics.gibbs_state(model.spectrum(), beta)
            assert davies.fixed_point_residual(L, rho) <= 1e-9


class TestPromisedDavies:
    def setup_method(self):
        self.model = models.tfim(1, 2, 1.0)
        self.family = promises.PromiseFamily.build(2, 1, "L")

    def test_full_promise_single_frequency(self):
        L = davies.promised_davies(self.model, METRO, promises.FULL_PROMISE, 0.0)
        assert set(np.round(L.frequencies(), 12)) == {0.0}
        stationary = numerics.stationary_state(L.superop)
        mixed = numerics.DensityMatrix.maximally_mixed(4)
        assert numerics.trace_distance(stationary, mixed) <= 1e-9

    @pytest.mark.parametrize("gamma", [0.0, 0.05, 0.2])
    def test_promised_gibbs_is_fixed_point(self, gamma):
        from gibbslab import protocol

        spectrum = self.model.spectrum()
        for promise in self.family.coarse:
            L = davies.promised_davies(self.model, METRO, promise, gamma)
            rho = protocol.promised_gibbs(spectrum, promise, 1.0)
            assert davies.fixed_point_residual(L, rho) <= 1e-9

    def test_support_confinement(self):
        spectrum = self.model.spectrum()
        promise = self.family.coarse[1]
        L = davies.promised_davies(self.model, METRO, promise, 0.05)
        P = sum(davies.promised_eigenspace_projectors(spectrum, promise))
        rng = np.random.default_rng(0)
        raw = numerics.DensityMatrix.random(4, rng).matrix
        supported = P @ raw @ P
        supported /= np.trace(supported).real
        sigma = numerics.DensityMatrix(supported)
        for t in (0.1, 1.0, 10.0):
            out = numerics.evolve(L.superop, sigma, t)
            leak = np.trace(out.matrix @ (np.eye(4) - P)).real
            assert abs(leak) <= 1e-10

    def test_restricted_gap_positive(self):
        rep = davies.promised_gap_report(self.model, METRO, self.family.coarse[0], 0.05)
        assert rep.kernel_dim == 1
        assert rep.gap > 0
        assert rep.residual <= 1e-9

    def test_superop_consistent_with_jumps(self):
        L = davies.promised_davies(self.model, METRO, self.family.coarse[0], 0.05)
        rebuilt = numerics.lindbladian_from_jumps([op for _, op in L.jumps])
        assert np.max(np.abs(rebuilt.matrix - L.superop.matrix)) <= 1e-12


class TestMixingTime:
    def test_trivial_epsilon(self):
        L = davies.ideal_davies(models.tfim(1, 2, 1.0), METRO)
        target = numerics.stationary_state(L.superop)
        assert davies.mixing_time(L, target, 2.0) == 0.0

    def test_amplitude_damping_analytic(self):
        jump = np.array([[0, 1], [0, 0]], dtype=complex)
        L = davies.Lindbladian(
            jumps=((1.0, jump),), superop=numerics.lindbladian_from_jumps([jump])
        )
        target = numerics.DensityMatrix.basis_state(2, 0)
        probes = [numerics.DensityMatrix.basis_state(2, 1)]
        eps = 0.05
        t = davies.mixing_time(L, target, eps, probes=probes)
        # || e^{tL}(|1><1|) - |0><0| ||_1 = 2 e^{-t}
        assert abs(t - np.log(2.0 / eps)) < 0.01

    def test_band_against_gap(self):
        for n1, n2 in [(1, 2), (1, 3)]:
            model = models.tfim(n1, n2, 1.0)
            L = davies.ideal_davies(model, METRO)
            gap = numerics.spectral_gap(L.superop)
            target = numerics.stationary_state(L.superop)
            t = davies.mixing_time(L, target, 0.01)
            assert 0.1 <= t * gap <= 100.0


class TestPerturbations:
    def setup_method(self):
        self.model = models.tfim(1, 2, 1.0)
        fine = promises.fine_grained(2, 1, "L")
        self.promise = promises.coarse_grained(fine, 2, 1, "L", 0)

    def test_identical_generators(self):
        L = davies.ideal_davies(self.model, METRO)
        report = davies.jump_perturbation_check(L, L, samples=10, seed=0)
        assert report.delta_L == 0.0
        assert report.max_sampled == 0.0

    def test_scaled_jumps_within_bound(self):
        L = davies.ideal_davies(self.model, METRO)
        scaled = davies.Lindbladian(
            jumps=tuple((nu, (1 - 1e-3) * op) for nu, op in L.jumps),
            superop=numerics.lindbladian_from_jumps([
                (1 - 1e-3) * op for _, op in L.jumps
            ]),
        )
        report = davies.jump_perturbation_check(L, scaled, samples=25, seed=1)
        assert report.max_sampled <= report.bound

    def test_enumeration_mismatch(self):
        L = davies.ideal_davies(self.model, METRO)
        truncated = davies.Lindbladian(
            jumps=L.jumps[:-1],
            superop=numerics.lindbladian_from_jumps([op for _, op in L.jumps[:-1]]),
        )
        with pytest.raises(EnumerationMismatch):
            davies.jump_perturbation_check(L, truncated)

    def test_exact_vs_poly_jump_bound(self):
        delta = 1e-6
        gamma = 0.2
        exact_prof, poly_prof = specfun.paired_attenuation_profiles(
            self.promise, gamma, delta
        )
        L_exact = davies.promised_davies(
            self.model, METRO, self.promise, gamma, delta, "exact",
            attenuation=exact_prof,
        )
        L_poly = davies.promised_davies(
            self.model, METRO, self.promise, gamma, delta, "poly",
            delta_est=delta, attenuation=poly_prof,
        )
        report = davies.jump_perturbation_check(L_exact, L_poly, samples=20, seed=2)
        chain = self.promise.s**2 * (2 * delta + delta)
        assert report.delta_L <= chain
        assert report.max_sampled <= report.bound + 1e-12

    def test_coupling_perturbation_bound(self):
        delta_leak = 1e-4
        gamma = 0.2
        exact_prof, poly_prof = specfun.paired_attenuation_profiles(
            self.promise, gamma, delta_leak
        )
        spectrum = self.model.spectrum()
        A = numerics.apply_function(spectrum, exact_prof)
        A_tilde = numerics.apply_function(spectrum, poly_prof)
        for name, S in self.model.couplings:
            diff = davies.coupling_perturbation_check(
                A @ S @ A, A_tilde @ S @ A_tilde, delta_leak
            )
            assert diff <= 2 * delta_leak

    def test_coupling_perturbation_identity_case(self):
        delta_leak = 1e-5
        exact_prof, poly_prof = specfun.paired_attenuation_profiles(
            self.promise, 0.1, delta_leak
        )
        spectrum = self.model.spectrum()
        A = numerics.apply_function(spectrum, exact_prof)
        A_tilde = numerics.apply_function(spectrum, poly_prof)
        diff = davies.coupling_perturbation_check(A @ A, A_tilde @ A_tilde, delta_leak)
        assert diff <= 2 * delta_leak


class TestGapSweep:
    def test_small_sweep_rows(self):
        model = models.tfim(1, 2, 1.0)
        family = promises.PromiseFamily.build(2, 1, "L")
        rows = davies.gap_sweep(model, METRO, family, [0.0, 0.1])
        assert len(rows) == 4
        for row in rows:
            assert row["kernel_dim"] == 1
            assert row["gap"] > 0
            assert row["gap_ideal"] > 0
            assert row["branch"] == "L"

    def test_gap_continuity_at_small_gamma(self):
        model = models.tfim(1, 2, 1.0)
        family = promises.PromiseFamily.build(2, 1, "R")
        rows = davies.gap_sweep(model, METRO, family, [0.0, 1e-3])
        for j in (0, 1):
            sub = [row for row in rows if row["j"] == j]
            base = sub[0]["gap"]
            assert abs(sub[1]["gap"] - base) / base <= 0.1


class TestResourceEstimate:
    def test_linear_in_time(self):
        a = davies.resource_estimate(4, 3, 0.1, 1.0, 1e-3, 1.0, 0.5)
        b = davies.resource_estimate(4, 3, 0.1, 2.0, 1e-3, 1.0, 0.5)
        assert abs(b["h_queries_per_run"] - 2 * a["h_queries_per_run"]) < 1e-6
        assert abs(b["h_queries_total"] - 2 * a["h_queries_total"]) < 1e-6

    def test_suggested_parameters(self):
        est = davies.resource_estimate(4, 3, 0.1, 1.0, 1e-3, 1.0, 0.5)
        assert est["suggested_n"] == 4.0
        assert est["suggested_r"] == 3.0

    def test_inverse_gamma(self):
        a = davies.resource_estimate(4, 3, 0.1, 1.0, 1e-3, 1.0, 0.5)
        b = davies.resource_estimate(4, 3, 0.05, 1.0, 1e-3, 1.0, 0.5)
        assert abs(b["h_queries_per_run"] - 2 * a["h_queries_per_run"]) < 1e-6
