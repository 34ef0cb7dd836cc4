import math

import numpy as np
import pytest

from phasefield_smc import operators as ops
from phasefield_smc.dynamics import (
    SourceSpec,
    SourceTerm,
    State,
    Trajectory,
    rhs_A,
    run_a_config,
    run_b_config,
    simulate,
)
from phasefield_smc.sliding import (
    COLUMNS,
    certify,
    detect_reaching,
    diagnose,
    g_field,
    psi,
    reaching_time,
    rho_star_empirical,
    slope_tolerance,
)
from phasefield_smc.spectral import h_norm, laplacian, mode, zeros


@pytest.fixture(scope="module")
def run_a():
    return simulate(run_a_config(rho=20.0))


@pytest.fixture(scope="module")
def run_b():
    return simulate(run_b_config(rho=20.0))


def state0(c):
    return State(0.0, c.w0, c.theta0, c.phi0)


class TestPsi:
    def test_on_manifold(self):
        c = run_a_config()
        s = State(0.0, c.w0, c.target - c.alpha * c.phi0, c.phi0)
        assert psi(s, c) == 0.0
        cb = run_b_config()
        assert psi(State(0.0, cb.w0, cb.theta0, cb.target), cb) == 0.0

    def test_run_a_initial(self):
        c = run_a_config()
        assert psi(state0(c), c) == pytest.approx(math.sqrt(0.625), abs=1e-12)

    def test_homogeneous(self):
        c = run_a_config()
        c2 = c.replace(theta0=2 * c.theta0, phi0=2 * c.phi0, target=2 * c.target)
        assert psi(state0(c2), c2) == pytest.approx(2 * psi(state0(c), c), rel=1e-14)


class TestDisturbance:
    def test_zero_for_trivial_a(self):
        c = run_a_config(n_modes=8)
        z = zeros(c.basis)
        s = State(0.0, z, z, z)
        assert np.all(g_field(s, c.replace(theta0=z, phi0=z)).coeffs == 0)

    def test_zero_for_trivial_b(self):
        c = run_b_config(n_modes=8)
        z = zeros(c.basis)
        assert np.all(g_field(State(0.0, z, z, z), c).coeffs == 0)

    def test_pure_displacement_a(self):
        c = run_a_config(n_modes=8)
        z = zeros(c.basis)
        w = mode(c.basis, 1, 0.3 / math.sqrt(2))
        g = g_field(State(0.0, w, z, z), c)
        np.testing.assert_allclose(g.coeffs, laplacian(w).coeffs, atol=1e-14)
        amplitude = 0.3 / math.sqrt(2) * math.sqrt(2)
        assert h_norm(g) == pytest.approx(math.pi**2 * amplitude / math.sqrt(2), rel=1e-12)

    def test_reaching_identity_a(self):
        """u_t = kappa Lap(u) - rho sigma + g along the flow."""
        c = run_a_config(n_modes=16, kappa=0.7, tau=1.2, l=1.3, alpha=0.6, gamma=0.9, rho=15.0)
        term = SourceTerm(profile=mode(c.basis, 2, 0.4), shape="sinusoid", amplitude=1.5, frequency=2.0)
        c = c.replace(source=SourceSpec((term,)), target=mode(c.basis, 1, 0.2))
        s = State(0.13, mode(c.basis, 3, 0.1), c.theta0, c.phi0)
        _, dth, dphi = rhs_A(s, c)
        u = s.theta + c.alpha * s.phi - c.target
        du = dth + c.alpha * dphi
        sigma = ops.sign_eps_coeffs(u.coeffs, c.epsilon)
        expected = c.kappa * laplacian(u).coeffs - c.rho * sigma + g_field(s, c).coeffs
        np.testing.assert_allclose(du.coeffs, expected, atol=1e-10)

    def test_reaching_identity_b(self):
        """u_t = Lap(u) - (beta_eps(phi) - beta_eps(phi*)) - rho sigma + g."""
        c = run_b_config(n_modes=16, gamma=0.8, rho=12.0)
        c = c.replace(target=mode(c.basis, 1, 0.3))
        s = State(0.0, c.w0, c.theta0, c.phi0)
        _, _, dphi = rhs_A(s, c.replace(problem="A", rho=0.0))
        u = s.phi - c.target
        p = ops.PotentialSpec()
        be = lambda f: ops.beta_eps(p, c.epsilon, f.coeffs @ c.basis.synthesis) @ c.basis.analysis
        sigma = ops.sign_eps_coeffs(u.coeffs, c.epsilon)
        expected = laplacian(u).coeffs - (be(s.phi) - be(c.target)) - c.rho * sigma + g_field(s, c).coeffs
        np.testing.assert_allclose(dphi.coeffs - c.rho * sigma, expected, atol=1e-10)


class TestDiagnostics:
    def test_columns(self, run_a):
        d = run_a.diagnostics
        assert len(d) == len(run_a)
        for name in COLUMNS:
            assert d[name].shape == (len(run_a),)
        assert d.row(0).psi == d["psi"][0]

    def test_invariants(self, run_a, run_b):
        for tr in (run_a, run_b):
            d = tr.diagnostics
            assert np.all(d["psi"] >= 0)
            assert np.all(d["sigma_norm"] <= 1 + 1e-12)
            for acc in ("acc_phi_t_sq", "acc_kappa_grad_theta_sq", "acc_rho_my_eta"):
                assert d[acc][0] == 0.0
                assert np.all(np.diff(d[acc]) >= 0)

    def test_sigma_saturates_above_eps(self, run_a):
        d = run_a.diagnostics
        above = d["psi"] >= run_a.config.epsilon
        np.testing.assert_allclose(d["sigma_norm"][above], 1.0, atol=1e-12)

    def test_g_norm_matches_field(self, run_b):
        k = 500
        s = run_b.state(k)
        assert run_b.diagnostics["g_norm"][k] == pytest.approx(h_norm(g_field(s, run_b.config)), rel=1e-12)

    def test_diagnose_recomputes_identically(self, run_a):
        again = diagnose(Trajectory(run_a.config, run_a.times, run_a.w, run_a.theta, run_a.phi))
        for name in COLUMNS:
            assert np.array_equal(again[name], run_a.diagnostics[name])


class TestReaching:
    def test_identically_zero(self):
        assert reaching_time(np.zeros(5), np.arange(5) * 0.1, 1e-10) == 0.0

    def test_first_persistent_index(self):
        t = np.arange(4) * 0.1
        assert reaching_time(np.array([0.5, 0.2, 0.0, 0.0]), t, 1e-10) == pytest.approx(0.2)
        assert reaching_time(np.array([0.5, 0.0, 0.3, 0.0]), t, 1e-10) == pytest.approx(0.3)

    def test_never_reached(self):
        assert reaching_time(np.array([1.0, 0.0, 1.0]), np.arange(3.0), 1e-10) is None

    def test_delta_floor(self, run_a):
        with pytest.raises(ValueError):
            reaching_time(np.zeros(3), np.arange(3.0), 1e-12)
        with pytest.raises(ValueError):
            detect_reaching(run_a, delta=run_a.config.epsilon / 2)
        assert detect_reaching(run_a) == pytest.approx(0.0348, abs=1e-9)

    def test_rho_star(self):
        assert rho_star_empirical(0.0, 1.0, 0.0) == 0.0
        assert rho_star_empirical(0.7906, 1.0, 5.0) == pytest.approx(5.7906)
        assert rho_star_empirical(0.7906, 2.0, 5.0) < rho_star_empirical(0.7906, 1.0, 5.0)
        with pytest.raises(ValueError):
            rho_star_empirical(1.0, 0.0, 1.0)


def synthetic(psi_values, g_values, rho, dt=1e-3, eps=1e-2):
    """Trajectory whose diagnostics are replaced by prescribed sequences."""
    c = run_b_config(rho=rho, n_modes=4, t_final=dt * (len(psi_values) - 1), dt=dt, epsilon=eps)
    n = len(psi_values)
    z = np.zeros((n, 4))
    tr = Trajectory(c, np.arange(n) * dt, z, z, z)
    d = diagnose(Trajectory(c, tr.times, z, z, z))
    d.columns["psi"] = np.asarray(psi_values, dtype=float)
    d.columns["g_norm"] = np.asarray(g_values, dtype=float)
    tr.diagnostics = d
    return tr


class TestCertify:
    def test_synthetic_ramp_passes(self):
        dt, psi0, M, rho = 1e-3, 0.5, 4.0, 10.0
        t = np.arange(501) * dt
        ramp = np.maximum(0.0, psi0 - M * t)
        cert = certify(synthetic(ramp, np.full(t.size, rho - M), rho, dt=dt, eps=1e-9))
        assert cert.passed, cert.reasons
        assert cert.T_star_bound == pytest.approx(psi0 / M)
        assert cert.delta == 1e-8
        assert abs(cert.T_star_observed - psi0 / M) <= dt + 1e-12

    def test_run_a_certified(self, run_a):
        cert = certify(run_a)
        assert cert.psi0 == pytest.approx(math.sqrt(0.625), abs=1e-12)
        assert cert.passed, cert.reasons
        assert cert.T_star_observed <= cert.T_star_bound + run_a.config.dt
        assert cert.delta == run_a.config.epsilon

    def test_run_b_certified(self, run_b):
        cert = certify(run_b)
        assert cert.passed, cert.reasons

    def test_uncontrolled_reports_vacuous_hypothesis(self):
        cert = certify(simulate(run_a_config(rho=0.0, t_final=0.2)))
        assert cert.M <= 0
        assert not cert.bound_applies and not cert.passed
        assert cert.monotone_ok and cert.bound_ok
        assert any(r.startswith("M <= 0") for r in cert.reasons)

    def test_escape_detected(self):
        seq = [0.5, 0.3, 0.005, 0.02, 0.005, 0.0]
        cert = certify(synthetic(seq, [0.0] * 6, 400.0))
        assert not cert.stay_ok
        assert cert.T_star_observed == pytest.approx(4e-3)

    def test_slope_violation_detected(self):
        seq = [0.5, 0.49, 0.48, 0.0]
        cert = certify(synthetic(seq, [0.0] * 4, 100.0, eps=0.01))
        assert not cert.slope_ok
        assert any("slope" in r for r in cert.reasons)

    def test_refuses_unbounded_source(self):
        c = run_a_config(n_modes=8, t_final=0.01)
        term = SourceTerm(profile=mode(c.basis, 0, 1.0), shape="power", exponent=-0.25)
        tr = simulate(c.replace(rho=0.0), diagnostics=False)
        tr.config = c.replace(source=SourceSpec((term,)))
        with pytest.raises(ValueError, match="bounded"):
            certify(tr)

    def test_slope_tolerance(self):
        c = run_a_config(rho=20.0)
        assert slope_tolerance(c) == pytest.approx(5 * 1e-4 * 20 / 1e-2)

    def test_record_is_flat_text(self, run_a):
        cert = certify(run_a)
        rec = cert.as_record()
        assert rec["passed"] == "true"
        assert float(rec["psi0"]) == cert.psi0 and float(rec["G"]) == cert.G
        assert all(isinstance(v, str) and "\n" not in v for v in rec.values())
        assert rec["further_initial_data_ok"] == "true"


class TestRhoScaling:
    """Monitors of the a-priori estimates across the control gain."""

    @pytest.fixture(scope="class")
    @staticmethod
    def ladder():
        return {rho: simulate(run_a_config(rho=rho)) for rho in (10.0, 20.0, 40.0)}

    def test_rho_budget_bounded(self, ladder):
        budget = [tr.diagnostics["acc_rho_my_eta"][-1] for tr in ladder.values()]
        assert max(budget) / min(budget) < 2.0

    def test_theta_t_grows_at_most_like_sqrt_rho(self, ladder):
        def l2_theta_t(tr):
            d = np.diff(tr.theta, axis=0) / tr.config.dt
            return math.sqrt(np.sum(d**2) * tr.config.dt)

        assert l2_theta_t(ladder[40.0]) <= 2.5 * l2_theta_t(ladder[10.0])
