import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasefield_smc.spectral import (
    Domain,
    Field,
    evaluate,
    grad_norm,
    h_norm,
    inner,
    laplacian,
    make_basis,
    mode,
    project,
    zeros,
)


@pytest.fixture
def basis():
    return make_basis(Domain(1.0, 64), 16)


def coeff_arrays(n):
    return st.lists(st.floats(-10, 10, allow_nan=False), min_size=n, max_size=n).map(np.array)


class TestMakeBasis:
    def test_single_mode_is_constant(self):
        b = make_basis(Domain(1.0, 4), 1)
        assert b.eigenvalues.tolist() == [0.0]

    def test_eigenvalue_examples(self):
        b = make_basis(Domain(1.0, 8), 3)
        assert b.eigenvalues[2] == pytest.approx(39.4784176, rel=1e-8)
        b2 = make_basis(Domain(2.0, 8), 2)
        assert b2.eigenvalues[1] == pytest.approx(2.4674011, rel=1e-8)

    def test_eigenvalues_strictly_increasing(self, basis):
        assert basis.eigenvalues[0] == 0
        assert np.all(np.diff(basis.eigenvalues) > 0)

    @pytest.mark.parametrize("n", [0, -3])
    def test_rejects_nonpositive_modes(self, n):
        with pytest.raises(ValueError):
            make_basis(Domain(1.0, 16), n)

    def test_rejects_aliasing_grid(self):
        with pytest.raises(ValueError, match="alias"):
            make_basis(Domain(1.0, 15), 8)

    def test_domain_rejects_bad_length(self):
        with pytest.raises(ValueError):
            Domain(0.0, 8)

    def test_orthonormal_under_quadrature(self, basis):
        gram = basis.synthesis @ basis.analysis
        np.testing.assert_allclose(gram, np.eye(basis.n_modes), atol=1e-13)

    def test_basis_arrays_are_read_only(self, basis):
        with pytest.raises(ValueError):
            basis.synthesis[0, 0] = 1.0


class TestProjectEvaluate:
    def test_cosine_projects_to_first_mode(self, basis):
        f = project(np.cos(np.pi * basis.domain.nodes), basis)
        expected = np.zeros(basis.n_modes)
        expected[1] = 1 / math.sqrt(2)
        np.testing.assert_allclose(f.coeffs, expected, atol=1e-13)

    def test_zero_samples(self, basis):
        assert np.all(project(np.zeros(basis.quad_points), basis).coeffs == 0)

    def test_length_mismatch(self, basis):
        with pytest.raises(ValueError):
            project(np.zeros(basis.quad_points + 1), basis)

    def test_constant_from_first_coefficient(self):
        b = make_basis(Domain(2.0, 32), 8)
        c = np.zeros(8)
        c[0] = math.sqrt(2.0)
        np.testing.assert_allclose(evaluate(Field(c, b)), 1.0, atol=1e-14)

    def test_evaluate_zero(self, basis):
        assert np.all(evaluate(zeros(basis)) == 0)

    @settings(max_examples=40, deadline=None)
    @given(coeff_arrays(16))
    def test_round_trip_identity(self, c):
        b = make_basis(Domain(1.0, 64), 16)
        f = Field(c, b)
        np.testing.assert_allclose(project(evaluate(f), b).coeffs, c, atol=1e-12 * (1 + np.abs(c).max()))

    def test_band_limited_exact(self, basis):
        x = basis.domain.nodes
        v = 0.3 + 2 * np.cos(3 * np.pi * x) - np.cos(7 * np.pi * x)
        f = project(v, basis)
        expected = np.zeros(basis.n_modes)
        expected[0], expected[3], expected[7] = 0.3, 2 / math.sqrt(2), -1 / math.sqrt(2)
        assert np.max(np.abs(f.coeffs - expected)) < 1e-12

    def test_projection_contractive(self, basis):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal(basis.quad_points)
        quad_norm = math.sqrt(np.sum(samples**2) * basis.domain.weight)
        assert h_norm(project(samples, basis)) <= quad_norm + 1e-10

    def test_evaluate_rejects_other_basis(self, basis):
        other = make_basis(Domain(1.0, 64), 8)
        with pytest.raises(ValueError):
            evaluate(zeros(other), basis)


class TestOperators:
    def test_laplacian_examples(self, basis):
        assert np.all(laplacian(mode(basis, 0)).coeffs == 0)
        lap = laplacian(mode(basis, 1)).coeffs
        assert lap[1] == pytest.approx(-math.pi**2)
        assert np.count_nonzero(lap) == 1

    @settings(max_examples=30, deadline=None)
    @given(coeff_arrays(16), coeff_arrays(16), st.floats(-5, 5), st.floats(-5, 5))
    def test_laplacian_linear(self, f, g, a, b_):
        b = make_basis(Domain(1.0, 64), 16)
        F, G = Field(f, b), Field(g, b)
        lhs = laplacian(a * F + b_ * G).coeffs
        rhs = (a * laplacian(F) + b_ * laplacian(G)).coeffs
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)

    def test_bilaplacian_exact_scaling(self, basis):
        f = Field(np.arange(16.0), basis)
        np.testing.assert_array_equal(
            laplacian(laplacian(2.0 * f)).coeffs, 2.0 * laplacian(laplacian(f)).coeffs
        )

    def test_norm_examples(self, basis):
        assert inner(mode(basis, 1), mode(basis, 1)) == 1.0
        cosine = project(np.cos(np.pi * basis.domain.nodes), basis)
        assert h_norm(cosine) == pytest.approx(math.sqrt(0.5), abs=1e-12)
        assert grad_norm(cosine) == pytest.approx(math.pi / math.sqrt(2), abs=1e-12)

    def test_grad_norm_matches_quadrature_of_derivative(self):
        b = make_basis(Domain(2.0, 256), 32)
        x = b.domain.nodes
        L = b.length
        v = np.cos(np.pi * x / L) + 0.5 * np.cos(5 * np.pi * x / L)
        dv = -(np.pi / L) * np.sin(np.pi * x / L) - 0.5 * (5 * np.pi / L) * np.sin(5 * np.pi * x / L)
        quad = np.sum(dv**2) * b.domain.weight
        assert grad_norm(project(v, b)) ** 2 == pytest.approx(quad, rel=1e-8)

    def test_inner_rejects_basis_mismatch(self, basis):
        other = make_basis(Domain(1.0, 64), 8)
        with pytest.raises(ValueError):
            inner(zeros(basis), zeros(other))


class TestField:
    def test_shape_checked(self, basis):
        with pytest.raises(ValueError):
            Field(np.zeros(3), basis)

    def test_arithmetic(self, basis):
        f = mode(basis, 2, 3.0)
        g = mode(basis, 2, 1.0)
        assert (f - g) == mode(basis, 2, 2.0)
        assert (f / 3.0) == g
        assert -g == mode(basis, 2, -1.0)

    def test_cross_basis_addition_fails(self, basis):
        other = make_basis(Domain(1.0, 64), 8)
        with pytest.raises(ValueError):
            zeros(basis) + zeros(other)
