"""Double-well potentials, Yosida approximations and the regularized sign.

Each potential ``F`` is split as ``F = beta_hat + pi_hat`` with ``beta_hat``
convex, ``beta_hat(0) = 0`` and ``pi = pi_hat'`` Lipschitz:

==============  ==============================  =====================
kind            beta(r)                         pi(r)
==============  ==============================  =====================
quartic         r**3                            -r
logarithmic     log((1 + r) / (1 - r))          -2 (c0 + 1) r
obstacle        subdifferential of I_[-1, 1]    -2 c0 r
==============  ==============================  =====================

Scalar functions accept floats or arrays and broadcast elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Field

__all__ = [
    "KINDS",
    "PotentialSpec",
    "YosidaParams",
    "ResolventError",
    "beta",
    "beta_circ",
    "beta_hat",
    "beta_resolvent",
    "beta_eps",
    "beta_hat_eps",
    "pi_eval",
    "pi_hat",
    "pi_lipschitz",
    "sign_eps",
    "my_norm",
    "sign_eps_coeffs",
    "my_norm_values",
]

KINDS = ("quartic", "logarithmic", "obstacle")

# iterates of the logarithmic resolvent stay inside (-1 + LOG_GUARD, 1 - LOG_GUARD)
LOG_GUARD = 1e-14


class ResolventError(RuntimeError):
    """Newton iteration for the resolvent did not converge."""


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "quartic"
    c0: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "quartic" and not self.c0 > 0:
            raise ValueError(f"c0 must be > 0 for the {self.kind} potential, got {self.c0}")


@dataclass(frozen=True)
class YosidaParams:
    epsilon: float
    newton_tol: float = 1e-13
    newton_max_iter: int = 100

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.newton_tol <= 1e-12:
            raise ValueError("newton_tol must lie in (0, 1e-12]")


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def beta(p: PotentialSpec, r):
    """Single-valued part of beta on the interior of its domain."""
    r = np.asarray(r, dtype=float)
    if p.kind == "quartic":
        out = r * r * r
    elif p.kind == "logarithmic":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(np.abs(r) < 1, np.log1p(r) - np.log1p(-r), np.nan)
    else:
        out = np.where(np.abs(r) <= 1, 0.0, np.nan)
    return _out(out, r)


def beta_circ(p: PotentialSpec, r):
    """Minimal-modulus section of beta; ``inf`` where beta(r) is empty."""
    r = np.asarray(r, dtype=float)
    if p.kind == "quartic":
        out = r**3
    elif p.kind == "logarithmic":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(np.abs(r) < 1, np.log1p(r) - np.log1p(-r), np.inf)
    else:
        out = np.where(np.abs(r) <= 1, 0.0, np.inf)
    return _out(out, r)


def beta_hat(p: PotentialSpec, r):
    """Convex part of the potential; ``inf`` outside its effective domain."""
    r = np.asarray(r, dtype=float)
    if p.kind == "quartic":
        out = 0.25 * r**4
    elif p.kind == "logarithmic":
        a = np.clip(1 + r, 0, None)
        b = np.clip(1 - r, 0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = _xlogx(a) + _xlogx(b)
        out = np.where(np.abs(r) <= 1, val, np.inf)
    else:
        out = np.where(np.abs(r) <= 1, 0.0, np.inf)
    return _out(out, r)


def _xlogx(a):
    return np.where(a > 0, a * np.log(np.where(a > 0, a, 1.0)), 0.0)


def _dbeta(p: PotentialSpec, s):
    if p.kind == "quartic":
        return 3.0 * s * s
    return 2.0 / ((1.0 - s) * (1.0 + s))


def beta_resolvent(p: PotentialSpec, eps: float, r, tol: float = 1e-13, max_iter: int = 100):
    """Solve ``s + eps * beta(s) = r`` for ``s``.

    The obstacle case is the projection onto ``[-1, 1]``.  The smooth cases
    use Newton's method safeguarded by bisection on the bracket between 0
    and ``r`` (clipped into ``(-1, 1)`` for the logarithmic kind), which
    always contains the root because ``s + eps * beta(s)`` is increasing and
    vanishes at 0.
    """
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0, got {eps}")
    r_in = r
    r = np.asarray(r, dtype=float)
    if p.kind == "obstacle":
        return _out(np.clip(r, -1.0, 1.0), r_in)

    if p.kind == "logarithmic":
        edge = 1.0 - LOG_GUARD
        end = np.clip(r, -edge, edge)
    else:
        end = r
    lo = np.minimum(0.0, end)
    hi = np.maximum(0.0, end)
    s = end.copy()
    scale = tol * np.maximum(1.0, np.abs(r))
    for _ in range(max_iter):
        g = s + eps * beta(p, s) - r
        done = (np.abs(g) <= scale) | (hi - lo <= scale)
        if np.all(done):
            return _out(s, r_in)
        pos = g > 0
        hi = np.where(pos, s, hi)
        lo = np.where(pos, lo, s)
        newton = s - g / (1.0 + eps * _dbeta(p, s))
        inside = (newton > lo) & (newton < hi)
        s = np.where(done, s, np.where(inside, newton, 0.5 * (lo + hi)))
    raise ResolventError(
        f"resolvent Newton iteration for {p.kind} potential did not converge "
        f"in {max_iter} iterations (eps={eps}, tol={tol})"
    )


def beta_eps(p: PotentialSpec, eps: float, r):
    """Yosida approximation ``(r - J_eps(r)) / eps``."""
    r_in = r
    r = np.asarray(r, dtype=float)
    s = beta_resolvent(p, eps, r)
    return _out((r - s) / eps, r_in)


def beta_hat_eps(p: PotentialSpec, eps: float, r):
    """Moreau-Yosida envelope of ``beta_hat``, evaluated at the resolvent."""
    r_in = r
    r = np.asarray(r, dtype=float)
    s = np.asarray(beta_resolvent(p, eps, r))
    return _out(beta_hat(p, s) + (r - s) ** 2 / (2.0 * eps), r_in)


def pi_eval(p: PotentialSpec, r):
    r_in = r
    r = np.asarray(r, dtype=float)
    return _out(-pi_lipschitz(p) * r, r_in)


def pi_hat(p: PotentialSpec, r):
    """Antiderivative of ``pi`` with the constants of the original potentials."""
    r_in = r
    r = np.asarray(r, dtype=float)
    out = -0.5 * pi_lipschitz(p) * r**2
    if p.kind == "quartic":
        out = out + 0.25
    return _out(out, r_in)


def pi_lipschitz(p: PotentialSpec) -> float:
    if p.kind == "quartic":
        return 1.0
    if p.kind == "logarithmic":
        return 2.0 * (p.c0 + 1.0)
    return 2.0 * p.c0


def sign_eps_coeffs(c: np.ndarray, eps: float) -> np.ndarray:
    """``c / max(eps, |c|)`` along the last axis."""
    norm = np.linalg.norm(c, axis=-1, keepdims=True)
    return c / np.maximum(eps, norm)


def my_norm_values(norm, eps: float):
    """Moreau-Yosida regularization of the norm, as a function of the norm."""
    norm = np.asarray(norm, dtype=float)
    out = np.where(norm >= eps, norm - 0.5 * eps, norm**2 / (2.0 * eps))
    return float(out) if out.ndim == 0 else out


def sign_eps(v: Field, eps: float) -> Field:
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0, got {eps}")
    return Field(sign_eps_coeffs(v.coeffs, eps), v.basis)


def my_norm(v: Field, eps: float) -> float:
    if not eps > 0:
        raise ValueError(f"epsilon must be > 0, got {eps}")
    return my_norm_values(np.linalg.norm(v.coeffs), eps)
