import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import hawkeslab as hl
from hawkeslab.core import exp_terms, params_from_config, params_to_config
from hawkeslab.errors import (
    ConfigError,
    CriticalityError,
    DataError,
    DomainError,
    KernelConstructionError,
    ProfileError,
)

from conftest import quad_kernel_mass, random_approx_kernel


class TestKernelEval:
    def test_exponential_at_zero(self):
        k = hl.ExponentialKernel(alpha=0.4, beta=1.0)
        assert hl.kernel_eval(k, 0.0) == pytest.approx(0.4, rel=1e-14)

    def test_approx_powerlaw_zero_at_origin(self):
        k = hl.ApproxPowerLaw(n=0.8, epsilon=0.3, tau0=0.02)
        assert hl.kernel_eval(k, 0.0) == 0.0

    def test_single_term_closed_form(self):
        # M=1 by hand: S = xi0^-(1+eps), Z = tau0^-eps * (1 - 1/m)
        tau0, eps = 0.01, 0.15
        k = hl.ApproxPowerLaw(n=1.0, epsilon=eps, tau0=tau0, m=5.0, M=1)
        assert k.Z == pytest.approx(tau0 ** -eps * (1 - 1 / 5), rel=1e-12)
        expected = (1.0 / k.Z) * (tau0 ** -(1 + eps) * np.exp(-1)
                                  - tau0 ** -(1 + eps) * np.exp(-5))
        assert hl.kernel_eval(k, tau0) == pytest.approx(expected, rel=1e-12)

    def test_ideal_powerlaw_cutoff(self):
        k = hl.IdealPowerLaw(phi0=0.075, epsilon=0.15, tau0=0.01)
        assert hl.kernel_eval(k, 0.005) == 0.0
        assert hl.kernel_eval(k, 0.02) > 0.0

    def test_negative_tau_rejected(self):
        k = hl.ExponentialKernel(0.4, 1.0)
        with pytest.raises(DomainError):
            hl.kernel_eval(k, -1.0)
        with pytest.raises(DomainError):
            hl.kernel_cumulative(k, -0.5)


class TestKernelCumulative:
    def test_zero_at_zero(self):
        for k in (hl.ExponentialKernel(0.4, 1.0),
                  hl.IdealPowerLaw(0.075, 0.15, 0.01),
                  hl.ApproxPowerLaw(0.9, 0.2, 0.01)):
            assert hl.kernel_cumulative(k, 0.0) == 0.0

    def test_exponential_total_mass(self):
        k = hl.ExponentialKernel(0.4, 1.0)
        assert hl.kernel_cumulative(k, 1e9) == pytest.approx(0.4, rel=1e-12)

    def test_approx_powerlaw_against_quadrature(self):
        k = hl.ApproxPowerLaw(n=0.9, epsilon=0.2, tau0=0.01, m=5.0, M=15)
        got = hl.kernel_cumulative(k, 1e6)
        want = quad_kernel_mass(k, 1e6)
        assert got == pytest.approx(want, rel=1e-6)
        assert got == pytest.approx(0.9, abs=0.02)

    def test_monotone_on_random_pairs(self, rng):
        k = random_approx_kernel(rng)
        taus = 10.0 ** rng.uniform(-5, 8, size=(50, 2))
        lo = taus.min(axis=1)
        hi = taus.max(axis=1)
        assert np.all(hl.kernel_cumulative(k, lo) <= hl.kernel_cumulative(k, hi) + 1e-15)

    def test_ideal_powerlaw_closed_form(self):
        k = hl.IdealPowerLaw(phi0=0.3, epsilon=0.5, tau0=0.1)
        want = quad_kernel_mass(k, 10.0)
        assert hl.kernel_cumulative(k, 10.0) == pytest.approx(want, rel=1e-7)


class TestBranchingRatio:
    def test_exponential(self):
        assert hl.branching_ratio(hl.ExponentialKernel(0.4, 1.0)) == pytest.approx(0.4)

    def test_ideal_powerlaw(self):
        k = hl.IdealPowerLaw(phi0=0.075, epsilon=0.15, tau0=0.01)
        assert hl.branching_ratio(k) == pytest.approx(0.5)

    def test_approx_powerlaw_stored(self):
        k = hl.ApproxPowerLaw(n=1.0, epsilon=0.15, tau0=0.01)
        assert hl.branching_ratio(k) == 1.0

    def test_quadrature_matches_branching(self, rng):
        for _ in range(10):
            k = random_approx_kernel(rng, M=10)
            mass = quad_kernel_mass(k, k.tau0 * 1e10)
            assert mass == pytest.approx(k.n, rel=1e-4)


class TestApproxPowerLaw:
    def test_tracks_ideal_powerlaw_slope(self):
        n, eps, tau0 = 0.9, 0.2, 0.01
        k = hl.ApproxPowerLaw(n=n, epsilon=eps, tau0=tau0, m=5.0, M=15)
        taus = np.geomspace(10 * tau0, k.xi[-2], 200)
        slope = np.polyfit(np.log(taus), np.log(hl.kernel_eval(k, taus)), 1)[0]
        assert slope == pytest.approx(-(1 + eps), abs=0.05)

    def test_scale_grid(self):
        k = hl.ApproxPowerLaw(n=0.5, epsilon=0.3, tau0=0.02, m=4.0, M=6)
        assert k.xi[0] == pytest.approx(0.02 / 4.0)
        assert k.xi[1] == pytest.approx(0.02)
        assert k.xi[-1] == pytest.approx(0.02 * 4.0 ** 5)

    def test_invalid_params(self):
        with pytest.raises(KernelConstructionError):
            hl.ApproxPowerLaw(n=-0.1, epsilon=0.2, tau0=0.01)
        with pytest.raises(KernelConstructionError):
            hl.ApproxPowerLaw(n=0.5, epsilon=0.0, tau0=0.01)
        with pytest.raises(KernelConstructionError):
            hl.ApproxPowerLaw(n=0.5, epsilon=0.2, tau0=0.01, m=1.0)

    @settings(max_examples=25, deadline=None)
    @given(n=st.floats(0.05, 1.8), eps=st.floats(0.02, 0.95),
           log_tau0=st.floats(-4, 0), m=st.floats(1.5, 10), M=st.integers(1, 20))
    def test_nonnegative_everywhere(self, n, eps, log_tau0, m, M):
        k = hl.ApproxPowerLaw(n=n, epsilon=eps, tau0=10.0 ** log_tau0, m=m, M=M)
        taus = np.geomspace(k.xi[0] * 1e-3, k.xi[-1] * 30, 400)
        assert np.min(hl.kernel_eval(k, taus)) >= -1e-12

    def test_exp_terms_total(self):
        k = hl.ApproxPowerLaw(n=0.7, epsilon=0.25, tau0=0.05)
        coeffs, scales = exp_terms(k)
        assert np.sum(coeffs * scales) == pytest.approx(0.7, rel=1e-12)
        assert np.sum(coeffs) == pytest.approx(0.0, abs=1e-9 * np.abs(coeffs).max())

    def test_ideal_has_no_exp_terms(self):
        with pytest.raises(DomainError):
            exp_terms(hl.IdealPowerLaw(0.075, 0.15, 0.01))


class TestMeanIntensity:
    def test_half_branching(self):
        p = hl.HawkesParams(0.02, hl.IdealPowerLaw(0.075, 0.15, 0.01))
        assert hl.mean_intensity(p) == pytest.approx(0.04)

    def test_poisson(self):
        p = hl.HawkesParams(0.1, hl.ExponentialKernel(0.0, 1.0))
        assert hl.mean_intensity(p) == pytest.approx(0.1)

    def test_critical_refused(self):
        p = hl.HawkesParams(0.02, hl.ApproxPowerLaw(1.0, 0.15, 0.01))
        with pytest.raises(CriticalityError):
            hl.mean_intensity(p)
        assert p.is_critical

    def test_divergence_identity(self):
        mu, n = 0.02, 1.0 - 1e-9
        p = hl.HawkesParams(mu, hl.ApproxPowerLaw(n, 0.15, 0.01))
        assert hl.mean_intensity(p) * (1 - n) / mu == pytest.approx(1.0, rel=1e-9)


class TestTheoryRelations:
    @pytest.mark.parametrize("eps,alpha_cov,hurst", [
        (0.15, 0.7, 0.65),
        (0.45, 0.1, 0.95),
        (0.25, 0.5, 0.75),
    ])
    def test_values(self, eps, alpha_cov, hurst):
        rel = hl.theory_relations(eps)
        assert rel["alpha_cov"] == pytest.approx(alpha_cov)
        assert rel["hurst"] == pytest.approx(hurst)

    @pytest.mark.parametrize("eps", [0.0, 0.5, -0.1, 0.9])
    def test_domain(self, eps):
        with pytest.raises(DomainError):
            hl.theory_relations(eps)


class TestEventSeries:
    def test_basic(self):
        s = hl.EventSeries([1.0, 2.0, 3.0], ((0.0, 10.0),), 1e-3)
        assert len(s) == 3
        assert s.span == 10.0
        assert s.mean_rate == pytest.approx(0.3)

    def test_ties_forbidden(self):
        with pytest.raises(DataError):
            hl.EventSeries([1.0, 1.0, 2.0], ((0.0, 10.0),))

    def test_outside_session_forbidden(self):
        with pytest.raises(DataError):
            hl.EventSeries([1.0, 11.0], ((0.0, 10.0),))
        with pytest.raises(DataError):
            hl.EventSeries([5.0], ((0.0, 4.0), (6.0, 10.0)))

    def test_resolution_positive(self):
        with pytest.raises(DataError):
            hl.EventSeries([1.0], ((0.0, 10.0),), 0.0)

    def test_immutable(self):
        s = hl.EventSeries([1.0, 2.0], ((0.0, 10.0),))
        with pytest.raises(ValueError):
            s.timestamps[0] = 5.0

    def test_slice(self):
        s = hl.EventSeries([1.0, 2.5, 7.0], ((0.0, 5.0), (5.0, 10.0)))
        sub = s.slice(2.0, 8.0)
        assert np.allclose(sub.timestamps, [0.5, 5.0])
        assert sub.session_bounds == ((0.0, 3.0), (3.0, 6.0))


class TestIntradayProfile:
    def test_mean_one_enforced(self):
        with pytest.raises(ProfileError):
            hl.IntradayProfile(300.0, np.array([1.0, 2.0]))

    def test_zero_rate_rejected(self):
        with pytest.raises(ProfileError):
            hl.IntradayProfile.from_rates(300.0, [1.0, 0.0, 2.0])

    def test_weight_lookup_periodic(self):
        w = np.array([2.0, 0.5, 0.5])
        prof = hl.IntradayProfile(100.0, w / w.mean())
        assert prof.day_length == 300.0
        assert prof.weight_at(50.0) == prof.weights[0]
        assert prof.weight_at(350.0) == prof.weights[0]
        assert prof.weight_at(150.0, phase=100.0) == prof.weights[2]

    def test_reciprocal_rates(self):
        prof = hl.IntradayProfile.from_rates(60.0, [1.0, 2.0, 4.0])
        assert np.allclose(prof.rates * prof.weights, 1.0)
        assert prof.weights.mean() == pytest.approx(1.0, abs=1e-12)


class TestConfigRoundTrip:
    @pytest.mark.parametrize("params", [
        hl.HawkesParams(0.05, hl.ExponentialKernel(0.8, 2.0)),
        hl.HawkesParams(0.02, hl.IdealPowerLaw(0.075, 0.15, 0.01)),
        hl.HawkesParams(0.02, hl.ApproxPowerLaw(1.0, 0.15, 0.01, 5.0, 15)),
        hl.HawkesParams(0.0, hl.SplicedPowerLaw(1.0, 0.15, 0.45, 1e3, 0.01)),
    ])
    def test_round_trip(self, params):
        cfg = params_to_config(params)
        back = params_from_config(cfg)
        assert back.mu == params.mu
        assert type(back.kernel) is type(params.kernel)
        assert params_to_config(back) == cfg

    def test_unknown_key_rejected(self):
        cfg = params_to_config(hl.HawkesParams(0.1, hl.ExponentialKernel(0.4, 1.0)))
        cfg["kernel.bogus"] = "1"
        with pytest.raises(ConfigError):
            params_from_config(cfg)

    def test_missing_key_rejected(self):
        cfg = params_to_config(hl.HawkesParams(0.1, hl.ExponentialKernel(0.4, 1.0)))
        del cfg["kernel.beta"]
        with pytest.raises(ConfigError):
            params_from_config(cfg)
