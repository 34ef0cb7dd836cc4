"""Galerkin ODE systems for the controlled type-III phase-field problems.

The unknowns are the coefficient vectors of the thermal displacement ``w``,
its time derivative ``theta = w_t`` and the phase ``phi``.  Both problems
share

    phi_t   = Lap(phi) - P beta_eps(phi) - P pi(phi) + gamma theta  [- rho Sign_eps(phi - phi*)]
    theta_t = f - l phi_t + kappa Lap(theta) + tau Lap(w)            [- rho Sign_eps(theta + alpha phi - eta*)]
    w_t     = theta

where the bracketed control is present in the phase equation for problem B
and in the heat equation for problem A.  ``P`` is the quadrature projection
onto the basis.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import operators as ops
from .spectral import Domain, Field, SpectralBasis, evaluate, make_basis, project

__all__ = [
    "ConfigError",
    "SimulationError",
    "SourceTerm",
    "SourceSpec",
    "SystemConfig",
    "State",
    "Trajectory",
    "validate",
    "stability_cap",
    "nonlinear_apply",
    "rhs",
    "rhs_A",
    "rhs_B",
    "step",
    "step_rk4",
    "simulate",
    "run_a_config",
    "run_b_config",
    "resize_field",
    "with_modes",
]


class ConfigError(ValueError):
    """Raised with every violated hypothesis, not only the first."""

    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class SimulationError(RuntimeError):
    pass


SHAPES = ("constant", "sinusoid", "step", "power")


@dataclass(frozen=True)
class SourceTerm:
    """One separable source contribution ``g(t) * profile``.

    ``constant``: ``amplitude``; ``sinusoid``: ``amplitude * sin(2 pi
    frequency t + phase)``; ``step``: ``level`` on ``[t_on, t_off)``;
    ``power``: ``amplitude * t**exponent`` (square integrable for
    ``exponent > -1/2`` but unbounded near 0 when ``exponent < 0``).
    """

    profile: Field
    shape: str = "constant"
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    t_on: float = 0.0
    t_off: float = math.inf
    level: float = 1.0
    exponent: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown source shape {self.shape!r}; expected one of {SHAPES}")

    def g(self, t: float) -> float:
        if self.shape == "constant":
            return self.amplitude
        if self.shape == "sinusoid":
            return self.amplitude * math.sin(2 * math.pi * self.frequency * t + self.phase)
        if self.shape == "step":
            return self.level if self.t_on <= t < self.t_off else 0.0
        if t == 0 and self.exponent < 0:
            return math.inf
        return self.amplitude * t**self.exponent

    @property
    def bounded(self) -> bool:
        return self.shape != "power" or self.exponent >= 0 or self.amplitude == 0


@dataclass(frozen=True)
class SourceSpec:
    terms: tuple[SourceTerm, ...] = ()

    def coeffs(self, t: float, n: int) -> np.ndarray:
        out = np.zeros(n)
        for term in self.terms:
            gt = term.g(t)
            if gt != 0:
                out = out + gt * term.profile.coeffs
        return out

    @property
    def bounded(self) -> bool:
        return all(term.bounded for term in self.terms)

    @property
    def is_zero(self) -> bool:
        return all(not np.any(term.profile.coeffs) for term in self.terms)


@dataclass(frozen=True)
class SystemConfig:
    """Physical, control and discretization parameters of one run.

    ``potential=None`` drops both ``beta_eps`` and ``pi`` (linear regime).
    ``target`` is ``eta*`` for problem A and ``phi*`` for problem B.
    """

    basis: SpectralBasis
    theta0: Field
    w0: Field
    phi0: Field
    target: Field
    problem: str = "A"
    kappa: float = 1.0
    tau: float = 1.0
    gamma: float = 1.0
    l: float = 1.0
    alpha: float = 1.0
    rho: float = 0.0
    epsilon: float = 1e-2
    potential: ops.PotentialSpec | None = field(default_factory=ops.PotentialSpec)
    t_final: float = 1.0
    dt: float = 1e-4
    source: SourceSpec = field(default_factory=SourceSpec)
    allow_nonpositive_alpha: bool = False

    def replace(self, **changes) -> SystemConfig:
        return dataclasses.replace(self, **changes)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def stability_cap(c: SystemConfig) -> float:
    """Largest admissible ``dt`` for the explicit part of the IMEX step."""
    limits = []
    if c.potential is not None:
        limits.append(c.epsilon)
        limits.append(1.0 / ops.pi_lipschitz(c.potential))
    if c.rho > 0:
        limits.append(c.epsilon / c.rho)
    return 0.5 * min(limits) if limits else math.inf


def validate(c: SystemConfig) -> list[str]:
    """Names of every violated hypothesis; empty when the config is usable."""
    diags = []
    for name in ("kappa", "tau", "gamma", "l"):
        v = getattr(c, name)
        if not (np.isfinite(v) and v > 0):
            diags.append(f"datanum: {name} must be > 0 (got {v})")
    if not (np.isfinite(c.alpha) and (c.alpha > 0 or c.allow_nonpositive_alpha)):
        diags.append(f"sliding-manifold: alpha must be > 0 (got {c.alpha})")
    if not (np.isfinite(c.rho) and c.rho >= 0):
        diags.append(f"control: rho must be >= 0 (got {c.rho})")
    if not (np.isfinite(c.epsilon) and c.epsilon > 0):
        diags.append(f"control: epsilon must be > 0 (got {c.epsilon})")
    if c.problem not in ("A", "B"):
        diags.append(f"control: problem must be 'A' or 'B' (got {c.problem!r})")
    if not (np.isfinite(c.t_final) and c.t_final >= 0):
        diags.append(f"discretization: t_final must be >= 0 (got {c.t_final})")
    if not (np.isfinite(c.dt) and c.dt > 0):
        diags.append(f"discretization: dt must be > 0 (got {c.dt})")
    elif c.t_final > 0 and abs(c.n_steps * c.dt - c.t_final) > 1e-9 * c.t_final:
        diags.append(f"discretization: t_final={c.t_final} is not a multiple of dt={c.dt}")

    structural = []
    named = {"theta0": c.theta0, "w0": c.w0, "phi0": c.phi0, "target": c.target}
    named.update({f"source[{i}]": t.profile for i, t in enumerate(c.source.terms)})
    for name, f in named.items():
        if f.basis != c.basis:
            structural.append(f"basis: {name} does not live on the configured basis")
        elif not np.all(np.isfinite(f.coeffs)):
            tag = "dataf" if name.startswith("source") else "initial-data-hypothesis"
            structural.append(f"{tag}: {name} has nonfinite coefficients")
    diags += structural
    if structural:
        return diags

    if c.epsilon > 0 and c.rho >= 0 and c.dt > 0:
        cap = stability_cap(c)
        if c.dt > cap * (1 + 1e-12):
            diags.append(
                f"stability: dt={c.dt:g} exceeds cap 0.5*min(eps, 1/Lip(pi), eps/rho)={cap:g}"
            )
    if c.potential is not None:
        phi_nodes = evaluate(c.phi0)
        bad = np.flatnonzero(~np.isfinite(ops.beta_hat(c.potential, phi_nodes)))
        if bad.size:
            diags.append(
                f"initial-data-hypothesis: beta_hat(phi0) not finite at node {bad[0]} "
                f"({bad.size} nodes)"
            )
        if c.problem == "B":
            star = evaluate(c.target)
            bad = np.flatnonzero(~np.isfinite(ops.beta_circ(c.potential, star)))
            if bad.size:
                diags.append(
                    f"target-functionB: beta°(phi*) not finite at node {bad[0]} "
                    f"(value {star[bad[0]]:.6g}, {bad.size} nodes)"
                )
    return diags


def further_initial_data_ok(c: SystemConfig) -> bool:
    """Whether ``beta°(phi0)`` is finite at every node (extra regularity of phi0)."""
    if c.potential is None:
        return True
    return bool(np.all(np.isfinite(ops.beta_circ(c.potential, evaluate(c.phi0)))))


@dataclass(frozen=True)
class State:
    t: float
    w: Field
    theta: Field
    phi: Field


@dataclass(eq=False)
class Trajectory:
    """States at ``t_k = k dt`` stored as ``(K, n)`` coefficient arrays."""

    config: SystemConfig
    times: np.ndarray
    w: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    diagnostics: object = None

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> State:
        b = self.config.basis
        return State(
            float(self.times[k]), Field(self.w[k], b), Field(self.theta[k], b), Field(self.phi[k], b)
        )

    @property
    def final(self) -> State:
        return self.state(-1)


def nonlinear_apply(fun: Callable[[np.ndarray], np.ndarray], v: Field) -> Field:
    """Galerkin projection of ``fun`` applied pointwise to ``v``."""
    values = np.asarray(fun(evaluate(v)), dtype=float)
    values = np.broadcast_to(values, (v.basis.quad_points,))
    return project(values, v.basis)


def _project_nodes(values: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    return values @ basis.analysis


def _potential_force(phi: np.ndarray, c: SystemConfig) -> np.ndarray:
    """Coefficients of ``P beta_eps(phi) + P pi(phi)``; works on stacked rows."""
    if c.potential is None:
        return np.zeros_like(phi)
    nodes = phi @ c.basis.synthesis
    values = ops.beta_eps(c.potential, c.epsilon, nodes) + ops.pi_eval(c.potential, nodes)
    return _project_nodes(values, c.basis)


class _Data:
    """Per-run constants precomputed once."""

    def __init__(self, c: SystemConfig):
        self.lam = c.basis.eigenvalues
        self.target = c.target.coeffs
        self.source_zero = c.source.is_zero
        self.n = c.basis.n_modes

    def source(self, c: SystemConfig, t: float) -> np.ndarray:
        if self.source_zero:
            return np.zeros(self.n)
        return c.source.coeffs(t, self.n)


def _control(u: np.ndarray, c: SystemConfig) -> np.ndarray:
    if c.rho == 0:
        return np.zeros_like(u)
    return c.rho * ops.sign_eps_coeffs(u, c.epsilon)


def _rhs_arrays(t, w, th, ph, c: SystemConfig, data: _Data | None = None, f=None):
    data = _Data(c) if data is None else data
    lam = data.lam
    dphi = -lam * ph - _potential_force(ph, c) + c.gamma * th
    if c.problem == "B":
        dphi = dphi - _control(ph - data.target, c)
    if f is None:
        f = data.source(c, t)
    dth = f - c.l * dphi - c.kappa * lam * th - c.tau * lam * w
    if c.problem == "A":
        dth = dth - _control(th + c.alpha * ph - data.target, c)
    return th.copy(), dth, dphi


def rhs(s: State, c: SystemConfig) -> tuple[Field, Field, Field]:
    """Time derivatives ``(w_t, theta_t, phi_t)`` of the Galerkin system at ``s``."""
    b = c.basis
    dw, dth, dph = _rhs_arrays(s.t, s.w.coeffs, s.theta.coeffs, s.phi.coeffs, c)
    return Field(dw, b), Field(dth, b), Field(dph, b)


def rhs_A(s: State, c: SystemConfig):
    if c.problem != "A":
        raise ValueError("rhs_A requires problem 'A'")
    return rhs(s, c)


def rhs_B(s: State, c: SystemConfig):
    if c.problem != "B":
        raise ValueError("rhs_B requires problem 'B'")
    return rhs(s, c)


def _imex_arrays(t, w, th, ph, c: SystemConfig, data: _Data):
    dt = c.dt
    lam = data.lam
    explicit_phi = -_potential_force(ph, c) + c.gamma * th
    if c.problem == "B":
        explicit_phi = explicit_phi - _control(ph - data.target, c)
    ph_new = (ph + dt * explicit_phi) / (1.0 + dt * lam)
    dphi = (ph_new - ph) / dt

    explicit_th = data.source(c, t) - c.l * dphi
    if c.problem == "A":
        explicit_th = explicit_th - _control(th + c.alpha * ph - data.target, c)
    # theta_new solves the implicit diffusion with w_new = w + dt/2 (theta + theta_new)
    rhs_th = th + dt * explicit_th - dt * c.tau * lam * (w + 0.5 * dt * th)
    th_new = rhs_th / (1.0 + dt * c.kappa * lam + 0.5 * dt * dt * c.tau * lam)
    w_new = w + 0.5 * dt * (th + th_new)
    return w_new, th_new, ph_new


def _rk4_arrays(t, w, th, ph, c: SystemConfig, data: _Data):
    dt = c.dt
    k1 = _rhs_arrays(t, w, th, ph, c, data)
    k2 = _rhs_arrays(t + dt / 2, *(y + dt / 2 * k for y, k in zip((w, th, ph), k1)), c, data)
    k3 = _rhs_arrays(t + dt / 2, *(y + dt / 2 * k for y, k in zip((w, th, ph), k2)), c, data)
    k4 = _rhs_arrays(t + dt, *(y + dt * k for y, k in zip((w, th, ph), k3)), c, data)
    return tuple(
        y + dt / 6 * (a + 2 * b + 2 * cc + d) for y, a, b, cc, d in zip((w, th, ph), k1, k2, k3, k4)
    )


_STEPPERS = {"imex": _imex_arrays, "rk4": _rk4_arrays}


def _wrap_step(stepper, s: State, c: SystemConfig) -> State:
    b = c.basis
    w, th, ph = stepper(s.t, s.w.coeffs, s.theta.coeffs, s.phi.coeffs, c, _Data(c))
    return State(s.t + c.dt, Field(w, b), Field(th, b), Field(ph, b))


def step(s: State, c: SystemConfig) -> State:
    """One IMEX Euler step: diffusion implicit, everything else explicit."""
    return _wrap_step(_imex_arrays, s, c)


def step_rk4(s: State, c: SystemConfig) -> State:
    """One classical Runge-Kutta step on the full right-hand side (reference)."""
    return _wrap_step(_rk4_arrays, s, c)


def simulate(c: SystemConfig, method: str = "imex", diagnostics: bool = True) -> Trajectory:
    """Integrate from 0 to ``t_final``, storing every step.

    Raises :class:`ConfigError` listing every violated hypothesis, and
    :class:`SimulationError` if the coefficients stop being finite.
    """
    if method not in _STEPPERS:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_STEPPERS)}")
    diags = validate(c)
    if method == "rk4":
        # explicit diffusion: the IMEX cap does not apply, rk4 is for small bases
        diags = [d for d in diags if not d.startswith("stability:")]
    if diags:
        raise ConfigError(diags)

    stepper = _STEPPERS[method]
    data = _Data(c)
    K = c.n_steps + 1 if c.t_final > 0 else 1
    n = c.basis.n_modes
    times = np.arange(K) * c.dt
    W = np.empty((K, n))
    TH = np.empty((K, n))
    PH = np.empty((K, n))
    W[0], TH[0], PH[0] = c.w0.coeffs, c.theta0.coeffs, c.phi0.coeffs
    w, th, ph = W[0], TH[0], PH[0]
    # overflow is reported below as a SimulationError instead of warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, K):
            w, th, ph = stepper(times[k - 1], w, th, ph, c, data)
            if not (np.isfinite(w).all() and np.isfinite(th).all() and np.isfinite(ph).all()):
                raise SimulationError(
                    f"nonfinite coefficients at t={times[k]:.6g} with dt={c.dt:g} "
                    f"(stability cap {stability_cap(c):g}); reduce dt"
                )
            W[k], TH[k], PH[k] = w, th, ph

    traj = Trajectory(c, times, W, TH, PH)
    if diagnostics:
        from .sliding import diagnose

        traj.diagnostics = diagnose(traj)
    return traj


def resize_field(f: Field, basis: SpectralBasis) -> Field:
    """Truncate or zero-pad coefficients onto ``basis`` (same interval)."""
    if basis.length != f.basis.length:
        raise ValueError("cannot resize across different interval lengths")
    out = np.zeros(basis.n_modes)
    m = min(basis.n_modes, f.basis.n_modes)
    out[:m] = f.coeffs[:m]
    return Field(out, basis)


def with_modes(c: SystemConfig, n: int, quad_factor: int | None = None) -> SystemConfig:
    """Same problem on ``n`` modes; quadrature keeps the original points-per-mode ratio."""
    if quad_factor is None:
        quad_factor = max(2, c.basis.quad_points // c.basis.n_modes)
    basis = make_basis(Domain(c.basis.length, quad_factor * n), n)
    terms = tuple(dataclasses.replace(t, profile=resize_field(t.profile, basis)) for t in c.source.terms)
    return c.replace(
        basis=basis,
        theta0=resize_field(c.theta0, basis),
        w0=resize_field(c.w0, basis),
        phi0=resize_field(c.phi0, basis),
        target=resize_field(c.target, basis),
        source=SourceSpec(terms),
    )


def _cos_field(basis: SpectralBasis, k: int, amplitude: float) -> Field:
    """``amplitude * cos(k pi x / L)`` as a field."""
    c = np.zeros(basis.n_modes)
    c[k] = amplitude * (math.sqrt(basis.length) if k == 0 else math.sqrt(basis.length / 2))
    return Field(c, basis)


def run_a_config(rho: float = 20.0, n_modes: int = 64, **overrides) -> SystemConfig:
    """Desk-scale problem A: theta0 = cos(pi x), phi0 = cos(2 pi x)/2, eta* = 0."""
    basis = make_basis(Domain(1.0, 4 * n_modes), n_modes)
    zero = Field(np.zeros(n_modes), basis)
    base = SystemConfig(
        basis=basis,
        theta0=_cos_field(basis, 1, 1.0),
        w0=zero,
        phi0=_cos_field(basis, 2, 0.5),
        target=zero,
        problem="A",
        rho=rho,
        epsilon=1e-2,
        t_final=1.0,
        dt=1e-4,
    )
    return base.replace(**overrides)


def run_b_config(rho: float = 20.0, n_modes: int = 64, **overrides) -> SystemConfig:
    """Problem B with the same data and target ``phi* = 0``."""
    return run_a_config(rho=rho, n_modes=n_modes, problem="B", **overrides)
