"""Self-convergence studies and numerical checks of the supporting lemmas.

No exact solution of the nonlinear system is available, so convergence in
``n``, ``eps`` and ``dt`` is judged by a Cauchy criterion: the distance
between final states of consecutive ladder levels must shrink.  The linear
regime (no potential, no control) has a per-mode 3x3 closed form that serves
as an independent oracle for the integrators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import operators as ops
from .dynamics import (
    SystemConfig,
    Trajectory,
    simulate,
    stability_cap,
    with_modes,
)
from .sliding import diagnose, manifold_residual, reaching_time
from .spectral import Domain, Field, make_basis

__all__ = [
    "StudyReport",
    "final_distance",
    "mode_convergence",
    "eps_convergence",
    "dt_convergence",
    "linear_mode_config",
    "linear_mode_exact",
    "linear_oracle_order",
    "continuous_dependence",
    "energy_monitor",
    "energy_balance",
    "sign_derivative_check",
    "sign_derivative_series",
    "sign_derivative_samples",
    "decreasing_lemma_check",
]

ROUNDING_FLOOR = 1e-13


@dataclass
class StudyReport:
    kind: str
    parameter: str
    ladder: list[float]
    metrics: dict[str, list[float]] = field(default_factory=dict)
    diffs: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    orders: list[float] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def rows(self) -> tuple[list[str], list[list]]:
        """Tabular form: one row per ladder level."""
        header = [self.parameter] + list(self.metrics) + ["diff_to_next"]
        rows = []
        for i, value in enumerate(self.ladder):
            row = [value] + [self.metrics[m][i] for m in self.metrics]
            row.append(self.diffs[i] if i < len(self.diffs) else math.nan)
            rows.append(row)
        return header, rows

    def summary(self) -> dict[str, str]:
        out = {"kind": self.kind, "parameter": self.parameter, "passed": str(self.passed).lower()}
        out["ladder"] = ",".join(repr(float(v)) for v in self.ladder)
        out["diffs"] = ",".join(repr(float(v)) for v in self.diffs) or "none"
        out["ratios"] = ",".join(repr(float(v)) for v in self.ratios) or "none"
        out["orders"] = ",".join(repr(float(v)) for v in self.orders) or "none"
        for name, ok in self.checks.items():
            out[f"check.{name}"] = str(bool(ok)).lower()
        for name, tol in self.tolerances.items():
            out[f"tol.{name}"] = repr(float(tol))
        out["notes"] = "; ".join(self.notes) or "none"
        return out


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n)
    out[: len(a)] = a
    return out


def final_distance(a: Trajectory, b: Trajectory) -> float:
    """``|w_a - w_b| + |theta_a - theta_b| + |phi_a - phi_b|`` at the final time."""
    n = max(a.config.basis.n_modes, b.config.basis.n_modes)
    total = 0.0
    for name in ("w", "theta", "phi"):
        x = _pad(getattr(a, name)[-1], n)
        y = _pad(getattr(b, name)[-1], n)
        total += float(np.linalg.norm(x - y))
    return total


def _monotone(diffs: Sequence[float], floor: float = ROUNDING_FLOOR) -> bool:
    return all(d1 <= d0 or d1 <= floor for d0, d1 in zip(diffs, diffs[1:]))


def _ratios(diffs: Sequence[float]) -> list[float]:
    return [d1 / d0 if d0 > 0 else math.nan for d0, d1 in zip(diffs, diffs[1:])]


def _consecutive(trajs: Sequence[Trajectory]) -> list[float]:
    return [final_distance(a, b) for a, b in zip(trajs, trajs[1:])]


def _final_norms(report: StudyReport, trajs: Sequence[Trajectory]):
    for name in ("w", "theta", "phi"):
        report.metrics[f"final_{name}_h"] = [float(np.linalg.norm(getattr(t, name)[-1])) for t in trajs]
    report.metrics["final_psi"] = [
        float(np.linalg.norm(manifold_residual(t.w[-1], t.theta[-1], t.phi[-1], t.config))) for t in trajs
    ]


def mode_convergence(c: SystemConfig, ladder: Sequence[int] = (16, 32, 64)) -> StudyReport:
    """Final-state differences between consecutive Galerkin dimensions."""
    ladder = [int(n) for n in ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("mode ladder must be strictly increasing")
    trajs = [simulate(with_modes(c, n), diagnostics=False) for n in ladder]
    report = StudyReport("modes", "n_modes", ladder)
    _final_norms(report, trajs)
    report.diffs = _consecutive(trajs)
    report.ratios = _ratios(report.diffs)
    report.checks["monotone"] = _monotone(report.diffs)
    report.tolerances["rounding_floor"] = ROUNDING_FLOOR
    return report


def _dt_for(c: SystemConfig, eps: float) -> float:
    cap = stability_cap(c.replace(epsilon=eps))
    if c.dt <= cap:
        return c.dt
    steps = math.ceil(c.t_final / cap)
    return c.t_final / steps


def eps_convergence(
    c: SystemConfig,
    ladder: Sequence[float] = (1e-1, 3e-2, 1e-2),
    plateau_factor: float = 1.6,
) -> StudyReport:
    """Cauchy behaviour of the regularized problems as ``eps`` decreases.

    With ``rho > 0`` the terminal manifold distance ``psi(T)`` must also be
    at most ``eps`` and scale like ``eps``: ``psi(T)/eps`` may vary across
    the ladder by at most ``plateau_factor``.
    """
    ladder = [float(e) for e in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps ladder must be strictly decreasing")
    configs = [c.replace(epsilon=e, dt=_dt_for(c, e)) for e in ladder]
    trajs = [simulate(ce) for ce in configs]
    report = StudyReport("eps", "epsilon", ladder)
    _final_norms(report, trajs)
    report.metrics["dt"] = [ce.dt for ce in configs]
    report.diffs = _consecutive(trajs)
    report.ratios = _ratios(report.diffs)
    report.checks["monotone"] = _monotone(report.diffs)
    report.tolerances["rounding_floor"] = ROUNDING_FLOOR
    if c.rho > 0:
        t_star = [reaching_time(t.diagnostics["psi"], t.times, e) for t, e in zip(trajs, ladder)]
        report.metrics["T_star"] = [math.nan if v is None else v for v in t_star]
        plateau = []
        for t, ts in zip(trajs, t_star):
            after = t.diagnostics["psi"][t.times >= ts] if ts is not None else t.diagnostics["psi"][-1:]
            plateau.append(float(np.max(after)))
        report.metrics["plateau_max"] = plateau
        scaled = [p / e for p, e in zip(report.metrics["final_psi"], ladder)]
        report.metrics["final_psi_over_eps"] = scaled
        report.checks["reached"] = all(v is not None for v in t_star)
        report.checks["plateau_below_eps"] = all(p <= e for p, e in zip(plateau, ladder))
        spread = max(scaled) / min(scaled) if min(scaled) > 0 else math.inf
        report.checks["plateau_scales_with_eps"] = spread <= plateau_factor
        report.tolerances["plateau_factor"] = plateau_factor
        report.notes.append(f"psi(T)/eps spread {spread:.4g}")
    return report


def dt_convergence(
    c: SystemConfig, ladder: Sequence[float] = (4e-4, 2e-4, 1e-4), method: str = "imex"
) -> StudyReport:
    """Richardson ratios of final-state differences under step refinement."""
    ladder = [float(d) for d in ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("dt ladder must be strictly decreasing")
    trajs = [simulate(c.replace(dt=d), method=method, diagnostics=False) for d in ladder]
    report = StudyReport(f"dt-{method}", "dt", ladder)
    _final_norms(report, trajs)
    report.diffs = _consecutive(trajs)
    report.ratios = [1.0 / r if r > 0 else math.nan for r in _ratios(report.diffs)]
    refine = [a / b for a, b in zip(ladder[1:], ladder[2:])]
    report.orders = [math.log(r) / math.log(q) if r > 0 else math.nan for r, q in zip(report.ratios, refine)]
    report.checks["monotone"] = _monotone(report.diffs)
    report.tolerances["rounding_floor"] = ROUNDING_FLOOR
    return report


def linear_mode_config(
    k: int = 1,
    dt: float = 1e-2,
    t_final: float = 1.0,
    n_modes: int = 4,
    **params,
) -> SystemConfig:
    """Linear regime (no potential, no control) with data in mode ``k`` only."""
    basis = make_basis(Domain(1.0, 2 * n_modes), n_modes)

    def single(a):
        c = np.zeros(n_modes)
        c[k] = a
        return Field(c, basis)

    defaults = dict(kappa=1.0, tau=1.0, gamma=1.0, l=1.0, alpha=1.0)
    defaults.update(params)
    return SystemConfig(
        basis=basis,
        theta0=single(1.0),
        w0=single(0.2),
        phi0=single(0.5),
        target=single(0.0),
        problem="A",
        rho=0.0,
        potential=None,
        t_final=t_final,
        dt=dt,
        **defaults,
    )


def linear_mode_exact(c: SystemConfig, k: int, t: float) -> np.ndarray:
    """``(w_k, theta_k, phi_k)`` at time ``t`` via the 3x3 matrix exponential."""
    lam = c.basis.eigenvalues[k]
    A = np.array(
        [
            [0.0, 1.0, 0.0],
            [-c.tau * lam, -(c.l * c.gamma + c.kappa * lam), c.l * lam],
            [0.0, c.gamma, -lam],
        ]
    )
    y0 = np.array([c.w0.coeffs[k], c.theta0.coeffs[k], c.phi0.coeffs[k]])
    return expm(A * t) @ y0


def linear_oracle_order(method: str = "imex", dts: Sequence[float] | None = None, k: int = 1) -> StudyReport:
    """Errors against the matrix-exponential solution and observed orders."""
    if dts is None:
        dts = (2e-2, 1e-2, 5e-3) if method == "imex" else (1e-1, 5e-2, 2.5e-2)
    dts = [float(d) for d in dts]
    report = StudyReport(f"oracle-{method}", "dt", dts)
    errors = []
    for d in dts:
        c = linear_mode_config(k=k, dt=d)
        traj = simulate(c, method=method, diagnostics=False)
        exact = linear_mode_exact(c, k, traj.times[-1])
        got = np.array([traj.w[-1, k], traj.theta[-1, k], traj.phi[-1, k]])
        errors.append(float(np.linalg.norm(got - exact)))
    report.metrics["error"] = errors
    report.ratios = [e0 / e1 for e0, e1 in zip(errors, errors[1:])]
    report.orders = [
        math.log(e0 / e1) / math.log(d0 / d1) for e0, e1, d0, d1 in zip(errors, errors[1:], dts, dts[1:])
    ]
    expected, width = (1.0, 0.2) if method == "imex" else (4.0, 0.5)
    report.checks["order"] = all(abs(p - expected) <= width for p in report.orders)
    report.tolerances["order_expected"] = expected
    report.tolerances["order_width"] = width
    return report


def _dependence_metric(a: Trajectory, b: Trajectory) -> float:
    lam = a.config.basis.eigenvalues
    dt = a.config.dt
    dth = a.theta - b.theta
    dw = a.w - b.w
    dph = a.phi - b.phi
    sup_part = np.max(
        np.linalg.norm(dth, axis=1) + np.sqrt((dw**2) @ lam) + np.linalg.norm(dph, axis=1)
    )
    l2_theta = math.sqrt(float(np.sum(((dth[:-1] ** 2) @ lam) * dt)))
    l2_phi = math.sqrt(float(np.sum(((dph[:-1] ** 2) @ lam) * dt)))
    return float(sup_part) + l2_theta + l2_phi


def continuous_dependence(
    c: SystemConfig,
    deltas: Sequence[float] = (1e-2, 1e-3),
    rhos: Sequence[float] | None = None,
    factor: float = 2.0,
    direction: str = "mode",
    seed: int = 0,
) -> StudyReport:
    """Perturb ``theta0`` by ``delta`` along a unit direction and measure the response.

    ``direction="mode"`` uses the first non-constant basis function;
    ``"random"`` draws a unit vector from a generator seeded with ``seed``.
    The ratio ``K = D(delta)/delta`` must vary by less than ``factor`` across
    the ``delta`` ladder and across ``rhos``.
    """
    if c.l != c.alpha:
        raise ValueError(f"continuous dependence requires l == alpha (got l={c.l}, alpha={c.alpha})")
    n = c.basis.n_modes
    if direction == "mode":
        v = np.zeros(n)
        v[1 if n > 1 else 0] = 1.0
    elif direction == "random":
        v = np.random.default_rng(seed).standard_normal(n)
        v /= np.linalg.norm(v)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    rhos = [c.rho] if rhos is None else [float(r) for r in rhos]
    deltas = [float(d) for d in deltas]

    report = StudyReport("contdep", "delta", deltas)
    all_k = []
    for rho in rhos:
        base_cfg = c.replace(rho=rho)
        base = simulate(base_cfg, diagnostics=False)
        D, K = [], []
        for d in deltas:
            pert = base_cfg.replace(theta0=Field(c.theta0.coeffs + d * v, c.basis))
            other = simulate(pert, diagnostics=False)
            D.append(_dependence_metric(base, other))
            K.append(D[-1] / d if d > 0 else math.nan)
        report.metrics[f"D_rho={rho:g}"] = D
        report.metrics[f"K_rho={rho:g}"] = K
        ks = [k for k in K if not math.isnan(k)]
        if ks:
            report.checks[f"delta_stable_rho={rho:g}"] = max(ks) / min(ks) < factor
            all_k.append(ks)
        if 0.0 in deltas:
            report.checks[f"zero_perturbation_rho={rho:g}"] = D[deltas.index(0.0)] == 0.0
    if len(all_k) > 1:
        per_delta = list(zip(*all_k))
        spread = max(max(col) / min(col) for col in per_delta)
        report.checks["rho_stable"] = spread <= factor
        report.notes.append(f"K spread across rho {spread:.4g}")
    report.tolerances["factor"] = factor
    return report


def energy_balance(traj: Trajectory) -> dict[str, np.ndarray]:
    """Energy identity of the Galerkin system, integrated along the run.

    Testing the heat equation with ``gamma theta`` and the phase equation
    with ``l phi_t`` cancels the coupling terms, giving

        E' = gamma (f, theta) - gamma kappa |grad theta|^2 - l |phi_t|^2
             - gamma rho (sigma_A, theta) - l rho (sigma_B, phi_t)

    for ``E = gamma/2 |theta|^2 + gamma tau/2 |grad w|^2 + l/2 |grad phi|^2
    + l int(beta_hat_eps(phi) + pi_hat(phi))``.  Returns ``E``, the
    accumulated right-hand side and their mismatch.
    """
    c = traj.config
    lam = c.basis.eigenvalues
    dt = c.dt
    TH, W, PH = traj.theta, traj.w, traj.phi
    E = 0.5 * c.gamma * np.sum(TH**2, axis=1) + 0.5 * c.gamma * c.tau * ((W**2) @ lam)
    E = E + 0.5 * c.l * ((PH**2) @ lam)
    if c.potential is not None:
        nodes = PH @ c.basis.synthesis
        dens = ops.beta_hat_eps(c.potential, c.epsilon, nodes) + ops.pi_hat(c.potential, nodes)
        E = E + c.l * dens.sum(axis=1) * c.basis.domain.weight
    if len(traj) < 2:
        return {"E": E, "work": np.zeros(1), "residual": np.zeros(1)}
    phi_t = (PH[1:] - PH[:-1]) / dt
    th_mid = 0.5 * (TH[1:] + TH[:-1])
    power = -c.gamma * c.kappa * ((th_mid**2) @ lam) - c.l * np.sum(phi_t**2, axis=1)
    if not c.source.is_zero:
        f = np.stack([c.source.coeffs(float(t), c.basis.n_modes) for t in traj.times[:-1]])
        power = power + c.gamma * np.sum(f * th_mid, axis=1)
    if c.rho > 0:
        u = manifold_residual(W[:-1], TH[:-1], PH[:-1], c)
        sigma = ops.sign_eps_coeffs(u, c.epsilon)
        if c.problem == "A":
            power = power - c.gamma * c.rho * np.sum(sigma * th_mid, axis=1)
        else:
            power = power - c.l * c.rho * np.sum(sigma * phi_t, axis=1)
    work = np.concatenate([[0.0], np.cumsum(power * dt)])
    return {"E": E, "work": work, "residual": E - E[0] - work}


def energy_monitor(traj: Trajectory, bound_factor: float = 10.0, balance_tol: float = 1e-2) -> StudyReport:
    """Quantities of the first a-priori estimate along a run.

    Every monitor must stay finite; their sum must stay below
    ``bound_factor * (1 + initial terms + source work)``; accumulators must
    be nondecreasing; and the energy identity (:func:`energy_balance`) must
    close to ``balance_tol`` relative to the energy scale.
    """
    c = traj.config
    diag = traj.diagnostics if traj.diagnostics is not None else diagnose(traj)
    monitors = {
        "half_theta_sq": 0.5 * diag["theta_h"] ** 2,
        "kappa_int_grad_theta_sq": diag["acc_kappa_grad_theta_sq"],
        "half_tau_grad_w_sq": 0.5 * c.tau * diag["w_grad"] ** 2,
        "rho_int_my_eta": diag["acc_rho_my_eta"],
        "int_phi_t_sq": diag["acc_phi_t_sq"],
        "half_phi_V_sq": 0.5 * (diag["phi_h"] ** 2 + diag["phi_grad"] ** 2),
        "int_beta_hat_eps": diag["beta_hat_int"],
    }
    total = sum(monitors.values())
    if c.source.is_zero or len(traj) < 2:
        source_work = 0.0
    else:
        f = np.stack([c.source.coeffs(float(t), c.basis.n_modes) for t in traj.times[:-1]])
        source_work = float(np.sum(f**2) * c.dt)
    initial = float(total[0])
    bound = bound_factor * (1.0 + initial + source_work)

    report = StudyReport("energy", "monitor", list(range(len(monitors))))
    report.metrics["sup"] = [float(np.max(v)) for v in monitors.values()]
    report.notes.append("monitors: " + ",".join(monitors))
    report.metrics["sup_total"] = [float(np.max(total))] * len(monitors)
    report.checks["finite"] = all(np.all(np.isfinite(v)) for v in monitors.values())
    report.checks["bounded"] = bool(np.max(total) <= bound)
    report.checks["accumulators_nondecreasing"] = all(
        np.all(np.diff(monitors[k]) >= 0)
        for k in ("kappa_int_grad_theta_sq", "rho_int_my_eta", "int_phi_t_sq")
    )
    bal = energy_balance(traj)
    scale = 1.0 + float(np.max(np.abs(bal["E"]))) + float(np.max(np.abs(bal["work"])))
    rel = float(np.max(np.abs(bal["residual"]))) / scale
    report.checks["balance_closes"] = rel <= balance_tol
    report.tolerances.update(bound_factor=bound_factor, balance_tol=balance_tol, bound=bound)
    report.notes.append(f"initial {initial:.6g}; source work {source_work:.6g}; balance residual {rel:.3g}")
    report.metrics["initial"] = [initial] * len(monitors)
    report.metrics["balance_residual"] = [rel] * len(monitors)
    return report


def sign_derivative_series(u: np.ndarray, dt: float, eps: float) -> dict[str, np.ndarray]:
    """Central differences of ``Sign_eps(u(t))`` against the closed-form derivative.

    Returns per interior step the inner product ``(d/dt Sign_eps(u), u_t)``
    and the discrepancy with the two-branch formula (``nan`` where the
    branch changes inside the stencil).
    """
    u = np.asarray(u, dtype=float)
    S = ops.sign_eps_coeffs(u, eps)
    dS = (S[2:] - S[:-2]) / (2 * dt)
    du = (u[2:] - u[:-2]) / (2 * dt)
    ip = np.sum(dS * du, axis=1)

    norms = np.linalg.norm(u, axis=1)
    inner_set = norms <= eps
    mid = u[1:-1]
    nm = norms[1:-1][:, None]
    radial = np.sum(mid * du, axis=1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = du / nm - radial / nm**3 * mid
    formula = np.where(inner_set[1:-1][:, None], du / eps, outer)
    same = (inner_set[:-2] == inner_set[1:-1]) & (inner_set[1:-1] == inner_set[2:])
    disc = np.where(same, np.linalg.norm(dS - formula, axis=1), np.nan)
    # local truncation scale: rates of change of u relative to its size
    size = np.maximum(norms[1:-1], eps)
    d2u = (u[2:] - 2 * mid + u[:-2]) / dt**2
    rate = np.linalg.norm(du, axis=1) / size
    curvature = np.linalg.norm(d2u, axis=1) / size
    scale = dt * (1.0 + rate**2 + curvature)
    return {"inner": ip, "discrepancy": disc, "scale": scale}


def sign_derivative_check(
    traj: Trajectory, tol: float | None = None, fd_factor: float = 1.0
) -> StudyReport:
    """Nonnegativity of ``(d/dt Sign_eps(u), u_t)`` along a run.

    ``u`` is the manifold residual of the configured problem.  The default
    tolerance is ``1e-6 / dt``.  The closed-form derivative must match the
    difference quotient at every step to ``fd_factor * dt * (1 + r1**2 + r2)``
    where ``r1 = |u_t| / |u|`` and ``r2 = |u_tt| / |u|`` (``|u|`` floored at
    ``eps``), i.e. to first order in ``dt`` on the local time scale.
    """
    c = traj.config
    dt = c.dt
    tol = 1e-6 / dt if tol is None else tol
    u = manifold_residual(traj.w, traj.theta, traj.phi, c)
    report = StudyReport("signderiv", "t", [float(traj.times[0]), float(traj.times[-1])])
    if len(traj) < 3:
        report.notes.append("fewer than three states: nothing to check")
        report.checks["nonnegative"] = True
        return report
    return _sign_report(report, sign_derivative_series(u, dt, c.epsilon), traj.times, tol, fd_factor)


def _sign_report(report, series, times, tol, fd_factor):
    ip = series["inner"]
    excess = series["discrepancy"] / (fd_factor * series["scale"])
    worst = float(np.nanmax(excess)) if np.any(np.isfinite(excess)) else 0.0
    report.metrics["min_inner"] = [float(np.min(ip))] * 2
    report.metrics["max_discrepancy"] = [float(np.nanmax(series["discrepancy"]))] * 2
    report.metrics["max_discrepancy_over_scale"] = [worst] * 2
    report.checks["nonnegative"] = bool(np.min(ip) >= -tol)
    report.checks["closed_form"] = worst <= 1.0
    report.tolerances.update(nonnegative=tol, closed_form=fd_factor)
    bad = np.flatnonzero(ip < -tol)
    if bad.size:
        report.notes.append(f"negative inner product at t={times[bad[0] + 1]:.6g}")
    return report


def sign_derivative_samples(
    u, dt: float, eps: float, tol: float | None = None, fd_factor: float = 1.0
) -> StudyReport:
    """:func:`sign_derivative_check` for a sampled curve ``u[k]`` at ``t = k dt``."""
    u = np.asarray(u, dtype=float)
    tol = 1e-6 / dt if tol is None else tol
    times = np.arange(len(u)) * dt
    report = StudyReport("signderiv", "t", [0.0, float(times[-1])])
    if len(u) < 3:
        report.checks["nonnegative"] = True
        return report
    return _sign_report(report, sign_derivative_series(u, dt, eps), times, tol, fd_factor)


def decreasing_lemma_check(psi, M: float, dt: float, tol: float = 1e-9) -> StudyReport:
    """Discrete version of the finite-time decay lemma.

    Hypothesis: every forward slope between two positive samples is at most
    ``-M`` (relative tolerance ``tol``).  The step that lands on zero is
    exempt, since a clipped ramp reaches zero partway through it.  Conclusion: ``psi`` vanishes from
    some ``T* <= psi(0)/M`` (up to one step) on and stays zero; if
    ``psi(0) = 0`` it is identically zero.
    """
    if not M > 0:
        raise ValueError(f"M must be > 0, got {M}")
    psi = np.asarray(psi, dtype=float)
    times = np.arange(len(psi)) * dt
    report = StudyReport("lemma", "t", [float(times[0]), float(times[-1])])
    slopes = np.diff(psi) / dt
    positive = (psi[:-1] > 0) & (psi[1:] > 0)
    offending = np.flatnonzero(positive & (slopes > -M + tol * M))
    report.checks["hypothesis"] = offending.size == 0
    first_bad = int(offending[0]) if offending.size else -1
    report.metrics["first_violation"] = [first_bad, first_bad]
    if offending.size:
        report.notes.append(f"slope above -M at index {first_bad}")

    zero = np.flatnonzero(psi <= 0)
    t_star = None
    if zero.size:
        k = int(zero[0])
        t_star = float(times[k])
        report.checks["stays_zero"] = bool(np.all(psi[k:] <= 0))
    else:
        report.checks["stays_zero"] = False
    report.metrics["T_star"] = [math.nan if t_star is None else t_star] * 2
    report.metrics["bound"] = [psi[0] / M] * 2
    if psi[0] == 0:
        report.checks["zero_start_identically_zero"] = bool(np.all(psi == 0))
    else:
        report.checks["reaches_by_bound"] = t_star is not None and t_star <= psi[0] / M + dt
    return report
