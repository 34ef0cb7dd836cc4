"""Sliding-manifold diagnostics and empirical reaching-time certificates.

Along a Galerkin trajectory the distance to the manifold ``u`` (``theta +
alpha phi - eta*`` for problem A, ``phi - phi*`` for problem B) obeys

    u_t - kappa_u Lap(u) + [monotone term] + rho Sign_eps(u) = g,

so ``psi = |u|_H`` satisfies ``psi' <= |g|_H - rho`` while ``psi >= eps``.
The certificate measures ``G = max_t |g(t)|_H`` instead of the a-priori
constants and checks the consequences of that inequality on the discrete
run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import operators as ops
from .dynamics import State, SystemConfig, Trajectory
from .spectral import Field

__all__ = [
    "COLUMNS",
    "StepDiagnostics",
    "Diagnostics",
    "Certificate",
    "diagnose",
    "manifold_residual",
    "psi",
    "g_field",
    "detect_reaching",
    "reaching_time",
    "certify",
    "rho_star_empirical",
    "slope_tolerance",
]

COLUMNS = (
    "t",
    "psi",
    "sigma_norm",
    "g_norm",
    "my_eta",
    "theta_h",
    "theta_grad",
    "w_grad",
    "phi_h",
    "phi_grad",
    "beta_hat_int",
    "acc_phi_t_sq",
    "acc_kappa_grad_theta_sq",
    "acc_rho_my_eta",
)


@dataclass(frozen=True)
class StepDiagnostics:
    t: float
    psi: float
    sigma_norm: float
    g_norm: float
    my_eta: float
    theta_h: float
    theta_grad: float
    w_grad: float
    phi_h: float
    phi_grad: float
    beta_hat_int: float
    acc_phi_t_sq: float
    acc_kappa_grad_theta_sq: float
    acc_rho_my_eta: float


@dataclass(eq=False)
class Diagnostics:
    """Per-step diagnostics as columns (one array per entry of ``COLUMNS``)."""

    columns: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    def row(self, k: int) -> StepDiagnostics:
        return StepDiagnostics(**{name: float(self.columns[name][k]) for name in COLUMNS})


def manifold_residual(w, th, ph, c: SystemConfig) -> np.ndarray:
    """Coefficients of ``u`` (works on single states and stacked rows)."""
    if c.problem == "A":
        return th + c.alpha * ph - c.target.coeffs
    return ph - c.target.coeffs


def psi(s: State, c: SystemConfig) -> float:
    """Distance of ``s`` to the sliding manifold in the H-norm."""
    u = manifold_residual(s.w.coeffs, s.theta.coeffs, s.phi.coeffs, c)
    return float(np.linalg.norm(u))


def _source_rows(c: SystemConfig, times: np.ndarray) -> np.ndarray:
    n = c.basis.n_modes
    if c.source.is_zero:
        return np.zeros((len(times), n))
    return np.stack([c.source.coeffs(float(t), n) for t in times])


def _g_arrays(times, w, th, ph, c: SystemConfig, f_rows: np.ndarray, beta_phi=None) -> np.ndarray:
    """Disturbance coefficients; ``beta_phi`` optionally supplies ``P beta_eps(phi)``."""
    lam = c.basis.eigenvalues
    target = c.target.coeffs
    basis = c.basis
    if c.problem == "A":
        g = -c.tau * lam * w + c.kappa * c.alpha * lam * ph - c.kappa * lam * target + f_rows
        if c.alpha != c.l:
            # phi_t from the phase equation (problem A has no control there)
            force = np.zeros_like(ph)
            if c.potential is not None:
                if beta_phi is None:
                    beta_phi = ops.beta_eps(c.potential, c.epsilon, ph @ basis.synthesis) @ basis.analysis
                force = beta_phi + ops.pi_eval(c.potential, ph @ basis.synthesis) @ basis.analysis
            dphi = -lam * ph - force + c.gamma * th
            g = g + (c.alpha - c.l) * dphi
        return g
    # problem B: gamma theta - P beta_eps(phi*) - P pi(phi) + Lap(phi*)
    g = c.gamma * th - lam * target
    if c.potential is not None:
        star_nodes = target @ basis.synthesis
        g = g - ops.beta_eps(c.potential, c.epsilon, star_nodes) @ basis.analysis
        g = g - ops.pi_eval(c.potential, ph @ basis.synthesis) @ basis.analysis
    return g


def g_field(s: State, c: SystemConfig) -> Field:
    """Disturbance driving the reaching inequality at state ``s``."""
    f = c.source.coeffs(s.t, c.basis.n_modes)
    g = _g_arrays(s.t, s.w.coeffs, s.theta.coeffs, s.phi.coeffs, c, f)
    return Field(g, c.basis)


def _cumulative(values: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros(len(values) + 1)
    np.cumsum(values * dt, out=out[1:])
    return out


def diagnose(traj: Trajectory) -> Diagnostics:
    """Compute every diagnostic column for ``traj`` in one vectorized pass."""
    c = traj.config
    lam = c.basis.eigenvalues
    W, TH, PH = traj.w, traj.theta, traj.phi
    u = manifold_residual(W, TH, PH, c)
    psi_col = np.linalg.norm(u, axis=1)
    sigma = ops.sign_eps_coeffs(u, c.epsilon)
    f_rows = _source_rows(c, traj.times)

    if c.potential is None:
        beta_int = np.zeros(len(traj))
        beta_phi = None
    else:
        nodes = PH @ c.basis.synthesis
        s = ops.beta_resolvent(c.potential, c.epsilon, nodes)
        beta_phi = ((nodes - s) / c.epsilon) @ c.basis.analysis
        envelope = ops.beta_hat(c.potential, s) + (nodes - s) ** 2 / (2 * c.epsilon)
        beta_int = envelope.sum(axis=1) * c.basis.domain.weight
    g = _g_arrays(traj.times, W, TH, PH, c, f_rows, beta_phi)

    my_eta = ops.my_norm_values(psi_col, c.epsilon)
    my_eta = np.atleast_1d(my_eta)
    grad_sq_theta = (TH**2) @ lam
    if len(traj) > 1:
        phi_t_sq = np.sum(((PH[1:] - PH[:-1]) / c.dt) ** 2, axis=1)
        acc_phi = _cumulative(phi_t_sq, c.dt)
        acc_grad = c.kappa * _cumulative(grad_sq_theta[:-1], c.dt)
        acc_rho = c.rho * _cumulative(my_eta[:-1], c.dt)
    else:
        acc_phi = acc_grad = acc_rho = np.zeros(1)

    cols = {
        "t": traj.times.copy(),
        "psi": psi_col,
        "sigma_norm": np.linalg.norm(sigma, axis=1),
        "g_norm": np.linalg.norm(g, axis=1),
        "my_eta": my_eta,
        "theta_h": np.linalg.norm(TH, axis=1),
        "theta_grad": np.sqrt(grad_sq_theta),
        "w_grad": np.sqrt((W**2) @ lam),
        "phi_h": np.linalg.norm(PH, axis=1),
        "phi_grad": np.sqrt((PH**2) @ lam),
        "beta_hat_int": beta_int,
        "acc_phi_t_sq": acc_phi,
        "acc_kappa_grad_theta_sq": acc_grad,
        "acc_rho_my_eta": acc_rho,
    }
    return Diagnostics(cols)


def reaching_time(psi_values, times, delta: float) -> float | None:
    """Smallest ``t_k`` with ``psi(t_j) <= delta`` for every ``j >= k``."""
    if not delta >= 1e-10:
        raise ValueError(f"delta must be >= 1e-10, got {delta}")
    psi_values = np.asarray(psi_values, dtype=float)
    above = np.flatnonzero(psi_values > delta)
    if above.size == 0:
        return float(times[0])
    k = above[-1] + 1
    if k >= len(psi_values):
        return None
    return float(times[k])


def detect_reaching(traj: Trajectory, delta: float | None = None) -> float | None:
    c = traj.config
    if delta is None:
        delta = max(c.epsilon, 1e-8)
    if delta < c.epsilon:
        raise ValueError(f"delta={delta} is below epsilon={c.epsilon}")
    diag = traj.diagnostics
    values = diag["psi"] if diag is not None else np.linalg.norm(
        manifold_residual(traj.w, traj.theta, traj.phi, c), axis=1
    )
    return reaching_time(values, traj.times, delta)


def rho_star_empirical(psi0: float, T: float, G: float) -> float:
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T}")
    return psi0 / T + G


def slope_tolerance(c: SystemConfig) -> float:
    """Allowance for the one-step lag of the explicit control."""
    return 5.0 * c.dt * c.rho / c.epsilon


@dataclass
class Certificate:
    problem: str
    rho: float
    epsilon: float
    dt: float
    T: float
    delta: float
    psi0: float
    G: float
    M: float
    rho_star_empirical: float
    T_star_observed: float | None
    T_star_bound: float
    monotone_ok: bool
    slope_ok: bool
    stay_ok: bool
    bound_ok: bool
    bound_applies: bool
    further_initial_data_ok: bool
    worst_slope_excess: float
    reasons: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.bound_applies
            and self.monotone_ok
            and self.slope_ok
            and self.stay_ok
            and self.bound_ok
        )

    def as_record(self) -> dict[str, str]:
        """Flat ``key -> text`` record; floats use their round-trip repr."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "reasons":
                v = "; ".join(v) if v else "none"
            elif v is None:
                v = "none"
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(float(v))
            out[f.name] = str(v)
        out["passed"] = "true" if self.passed else "false"
        return out


def certify(traj: Trajectory, delta: float | None = None) -> Certificate:
    """Check the finite-time reaching claims on a simulated trajectory."""
    from .dynamics import further_initial_data_ok

    c = traj.config
    if not c.source.bounded:
        raise ValueError(
            "certification needs a bounded source (f in L^inf(0,T;H)); "
            "the configured source is unbounded"
        )
    if c.t_final <= 0 or len(traj) < 2:
        raise ValueError("certification needs a trajectory with at least one step")
    diag = traj.diagnostics
    if diag is None:
        diag = diagnose(traj)
        traj.diagnostics = diag
    if delta is None:
        delta = max(c.epsilon, 1e-8)

    ps = diag["psi"]
    gn = diag["g_norm"]
    dt = c.dt
    T = c.t_final
    psi0 = float(ps[0])
    G = float(np.max(gn))
    M = c.rho - G
    rho_star = rho_star_empirical(psi0, T, G)
    t_star = reaching_time(ps, traj.times, delta)
    T_bound = psi0 / M if M > 0 else math.inf
    reasons = []

    active = ps[:-1] > c.epsilon
    slopes = (ps[1:] - ps[:-1]) / dt
    tol = slope_tolerance(c)
    excess = slopes - (gn[:-1] - c.rho) - tol
    worst = float(np.max(excess[active])) if np.any(active) else -math.inf
    slope_ok = not np.any(excess[active] > 0)
    if not slope_ok:
        k = int(np.flatnonzero(active & (excess > 0))[0])
        reasons.append(f"slope inequality violated at t={traj.times[k]:.6g}")

    if M > 0:
        monotone_ok = not np.any(active & (ps[1:] > ps[:-1] + tol * dt))
        if not monotone_ok:
            reasons.append("psi increased while above epsilon")
    else:
        monotone_ok = True
        reasons.append("M <= 0: control gain does not exceed measured disturbance G")

    first_in = np.flatnonzero(ps <= delta)
    if first_in.size == 0:
        stay_ok = True
    else:
        stay_ok = t_star is not None and math.isclose(traj.times[first_in[0]], t_star)
        if not stay_ok:
            reasons.append("psi left the delta-neighbourhood after entering it")

    bound_applies = c.rho > rho_star
    if bound_applies:
        bound_ok = t_star is not None and t_star <= T_bound + dt
        if not bound_ok:
            reasons.append(
                f"observed reaching time {t_star} exceeds bound psi0/(rho-G)={T_bound:.6g}"
            )
    else:
        bound_ok = True
        if M > 0:
            reasons.append(
                f"rho={c.rho:g} <= rho*_emp={rho_star:.6g}: time bound not applicable"
            )

    return Certificate(
        problem=c.problem,
        rho=float(c.rho),
        epsilon=float(c.epsilon),
        dt=float(dt),
        T=float(T),
        delta=float(delta),
        psi0=psi0,
        G=G,
        M=float(M),
        rho_star_empirical=float(rho_star),
        T_star_observed=t_star,
        T_star_bound=float(T_bound),
        monotone_ok=bool(monotone_ok),
        slope_ok=bool(slope_ok),
        stay_ok=bool(stay_ok),
        bound_ok=bool(bound_ok),
        bound_applies=bool(bound_applies),
        further_initial_data_ok=further_initial_data_ok(c),
        worst_slope_excess=worst,
        reasons=reasons,
    )
