"""Neumann-Laplacian cosine eigenbasis on an interval.

Functions on ``(0, L)`` are stored as coefficient vectors against the
orthonormal basis

    e_0 = 1/sqrt(L),   e_k = sqrt(2/L) cos(k pi x / L),

so inner products are plain dot products of coefficients and the Laplacian
is diagonal with entries ``-(k pi / L)**2``.  Pointwise work (nonlinearities)
happens on a uniform midpoint grid.  With ``quad_points >= 2 * n_modes`` the
midpoint rule integrates every product of up to three basis functions against
a fourth one exactly, which makes the Galerkin projection of cubic terms free
of aliasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Domain",
    "SpectralBasis",
    "Field",
    "make_basis",
    "project",
    "evaluate",
    "laplacian",
    "inner",
    "h_norm",
    "grad_norm",
    "zeros",
    "mode",
]


@dataclass(frozen=True)
class Domain:
    """The interval ``(0, length)`` with a midpoint collocation grid."""

    length: float = 1.0
    quad_points: int = 256

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"domain length must be > 0, got {self.length}")
        if self.quad_points < 1:
            raise ValueError(f"quad_points must be >= 1, got {self.quad_points}")

    @property
    def nodes(self) -> np.ndarray:
        h = self.length / self.quad_points
        return (np.arange(self.quad_points) + 0.5) * h

    @property
    def weight(self) -> float:
        return self.length / self.quad_points


@dataclass(frozen=True)
class SpectralBasis:
    """First ``n_modes`` Neumann eigenfunctions on ``domain``.

    ``synthesis[k, j]`` is ``e_k(x_j)``; ``analysis`` is the weighted
    transpose used by :func:`project`.
    """

    domain: Domain
    n_modes: int
    eigenvalues: np.ndarray = field(compare=False, repr=False)
    synthesis: np.ndarray = field(compare=False, repr=False)
    analysis: np.ndarray = field(compare=False, repr=False)

    @property
    def length(self) -> float:
        return self.domain.length

    @property
    def quad_points(self) -> int:
        return self.domain.quad_points


def make_basis(domain: Domain, n: int) -> SpectralBasis:
    """Build the cosine basis with ``n`` modes on ``domain``."""
    if n <= 0:
        raise ValueError(f"number of modes must be >= 1, got {n}")
    if domain.quad_points < 2 * n:
        raise ValueError(
            f"quad_points={domain.quad_points} < 2*n_modes={2 * n}; "
            "projection of nonlinear terms would alias"
        )
    L = domain.length
    k = np.arange(n)
    eigenvalues = (k * np.pi / L) ** 2
    x = domain.nodes
    synthesis = np.sqrt(2.0 / L) * np.cos(np.outer(k, x) * (np.pi / L))
    synthesis[0, :] = 1.0 / np.sqrt(L)
    analysis = synthesis.T * domain.weight
    for arr in (eigenvalues, synthesis, analysis):
        arr.setflags(write=False)
    return SpectralBasis(domain, n, eigenvalues, synthesis, analysis)


@dataclass(frozen=True, eq=False)
class Field:
    """A function in the span of ``basis``, stored by its coefficients."""

    coeffs: np.ndarray
    basis: SpectralBasis

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.n_modes,):
            raise ValueError(
                f"expected {self.basis.n_modes} coefficients, got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: Field):
        if not isinstance(other, Field):
            return NotImplemented
        if other.basis != self.basis:
            raise ValueError("fields live on different bases")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.coeffs - other.coeffs, self.basis)

    def __neg__(self):
        return Field(-self.coeffs, self.basis)

    def __mul__(self, a):
        if isinstance(a, Field):
            return NotImplemented
        return Field(float(a) * self.coeffs, self.basis)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return Field(self.coeffs / float(a), self.basis)

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.basis == other.basis and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def zeros(basis: SpectralBasis) -> Field:
    return Field(np.zeros(basis.n_modes), basis)


def mode(basis: SpectralBasis, k: int, amplitude: float = 1.0) -> Field:
    """``amplitude * e_k`` (unit H-norm when amplitude is 1)."""
    c = np.zeros(basis.n_modes)
    c[k] = amplitude
    return Field(c, basis)


def project(samples, basis: SpectralBasis) -> Field:
    """Quadrature approximation of the orthogonal projection onto the span."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (basis.quad_points,):
        raise ValueError(
            f"expected {basis.quad_points} samples, got shape {samples.shape}"
        )
    return Field(samples @ basis.analysis, basis)


def evaluate(f: Field, basis: SpectralBasis | None = None) -> np.ndarray:
    """Point values of ``f`` at the quadrature nodes."""
    basis = f.basis if basis is None else basis
    if basis != f.basis:
        raise ValueError("field does not live on the requested basis")
    return f.coeffs @ basis.synthesis


def laplacian(f: Field) -> Field:
    return Field(-f.basis.eigenvalues * f.coeffs, f.basis)


def inner(f: Field, g: Field) -> float:
    if f.basis != g.basis:
        raise ValueError("fields live on different bases")
    return float(np.dot(f.coeffs, g.coeffs))


def h_norm(f: Field) -> float:
    return float(np.linalg.norm(f.coeffs))


def grad_norm(f: Field) -> float:
    """L2 norm of the gradient, from the eigen-expansion."""
    return float(np.sqrt(np.dot(f.basis.eigenvalues, f.coeffs**2)))
