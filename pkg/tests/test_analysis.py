"""Tests for the linear solver, error norms, rate fitting, and reports."""

import numpy as np
import pytest
import scipy.sparse as sparse

from pefem.analysis import (
    ConvergenceReport,
    LevelResult,
    error_norms,
    fit_rate,
    solve,
)
from pefem.errors import ConfigurationError, SingularSystemError
from pefem.fem import FeSpace
from pefem.forms import LinearSystem
from pefem.mesh import generate_square_mesh


def _system(A, F):
    return LinearSystem(sparse.csr_matrix(A), np.asarray(F, dtype=float), np.array([], dtype=int))


class TestSolve:
    def test_identity(self):
        F = np.array([3.0, -1.0, 2.0])
        x = solve(_system(np.eye(3), F))
        assert np.array_equal(x, F)

    def test_hand_solved_2x2(self):
        x = solve(_system([[2.0, 1.0], [1.0, 3.0]], [3.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-14)

    def test_random_spd_meets_residual_contract(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((50, 50))
        A = M.T @ M + np.eye(50)
        F = rng.standard_normal(50)
        x = solve(_system(A, F))
        residual = np.linalg.norm(A @ x - F) / np.linalg.norm(F)
        assert residual <= 1e-12

    @pytest.mark.filterwarnings("ignore::scipy.sparse.linalg.MatrixRankWarning")
    def test_singular_matrix(self):
        A = np.zeros((3, 3))
        A[0, 0] = 1.0
        with pytest.raises(SingularSystemError):
            solve(_system(A, [1.0, 1.0, 1.0]))


class TestErrorNorms:
    def test_zero_against_interpolated_polynomial(self):
        mesh = generate_square_mesh(3)
        space = FeSpace(mesh, 2)
        exact = lambda x, y: x**2 - x * y
        grad = lambda x, y: (2 * x - y, -x)
        coeffs = exact(space.dof_coords[:, 0], space.dof_coords[:, 1])
        l2, h1 = error_norms(space, coeffs, exact, grad)
        assert l2 <= 1e-14
        assert h1 <= 1e-13

    def test_constant_error_gives_sqrt_area(self):
        # u_h = 0 vs exact u = 2 on the unit square: L2 error = 2.
        mesh = generate_square_mesh(2)
        space = FeSpace(mesh, 1)
        zero = np.zeros(space.n_dofs)
        l2, h1 = error_norms(
            space,
            zero,
            lambda x, y: 2.0 * np.ones_like(x),
            lambda x, y: (np.zeros_like(x), np.zeros_like(y)),
        )
        assert l2 == pytest.approx(2.0, rel=1e-13)
        assert h1 == pytest.approx(2.0, rel=1e-13)

    def test_linear_error_norms(self):
        # u_h = 0 vs u = x on the centered unit square:
        # L2^2 = integral x^2 = 1/12, |u|_1^2 = 1.
        mesh = generate_square_mesh(2)
        space = FeSpace(mesh, 1)
        zero = np.zeros(space.n_dofs)
        l2, h1 = error_norms(
            space,
            zero,
            lambda x, y: x,
            lambda x, y: (np.ones_like(x), np.zeros_like(y)),
        )
        assert l2 == pytest.approx(np.sqrt(1.0 / 12.0), rel=1e-12)
        assert h1 == pytest.approx(np.sqrt(1.0 / 12.0 + 1.0), rel=1e-12)

    def test_h1_dominates_l2(self):
        mesh = generate_square_mesh(3)
        space = FeSpace(mesh, 2)
        rng = np.random.default_rng(2)
        coeffs = rng.standard_normal(space.n_dofs)
        l2, h1 = error_norms(
            space,
            coeffs,
            lambda x, y: np.cos(x) * y,
            lambda x, y: (-np.sin(x) * y, np.cos(x)),
        )
        assert h1 >= l2

    def test_requires_exact_solution(self):
        mesh = generate_square_mesh(1)
        space = FeSpace(mesh, 1)
        with pytest.raises(ConfigurationError):
            error_norms(space, np.zeros(space.n_dofs), None, None)


class TestFitRate:
    def test_exact_power_law(self):
        h = np.array([0.4, 0.2, 0.1, 0.05])
        slope, pairwise = fit_rate(list(zip(h, 2.0 * h**3)))
        assert slope == pytest.approx(3.0, abs=1e-12)
        assert np.allclose(pairwise, 3.0, atol=1e-12)

    def test_scale_invariance(self):
        h = np.array([0.4, 0.2, 0.1])
        e = np.array([3e-3, 4e-4, 6e-5])
        s1, _ = fit_rate(list(zip(h, e)))
        s2, _ = fit_rate(list(zip(h, 1e6 * e)))
        assert s1 == pytest.approx(s2, abs=1e-12)

    def test_published_quadratic_dirichlet_column(self):
        # Regression of log error on log h over a published convergence
        # history must reproduce its stated rate 3.2283.
        h = [0.583095, 0.315543, 0.165152, 0.080322, 0.045221]
        l2 = [6.83996e-04, 8.71107e-05, 1.07759e-05, 1.28123e-06, 1.59731e-07]
        slope, _ = fit_rate(list(zip(h, l2)))
        assert slope == pytest.approx(3.2283, abs=0.05)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            fit_rate([(0.1, 1e-3)])
        with pytest.raises(ValueError):
            fit_rate([(0.1, 1e-3), (0.1, 2e-3)])
        with pytest.raises(ValueError):
            fit_rate([(0.1, 1e-3), (-0.05, 1e-4)])
        with pytest.raises(ValueError):
            fit_rate([(0.1, 0.0), (0.05, 1e-4)])


class TestConvergenceReport:
    @staticmethod
    def _level(i, h, l2, h1):
        return LevelResult(level=i, h=h, delta_h=h**2 / 8, dofs=100 * (i + 1), l2_error=l2, h1_error=h1)

    def test_requires_decreasing_h(self):
        report = ConvergenceReport(method="pefem-dirichlet-weak", degree=2)
        report.add(self._level(0, 0.4, 1e-3, 1e-2))
        with pytest.raises(ValueError):
            report.add(self._level(1, 0.4, 1e-4, 1e-3))

    def test_slopes_and_pairwise(self):
        report = ConvergenceReport(method="pefem-neumann", degree=2)
        for i, h in enumerate([0.4, 0.2, 0.1, 0.05]):
            report.add(self._level(i, h, h**3, h**2))
        assert report.l2_slope() == pytest.approx(3.0, abs=1e-10)
        assert report.h1_slope() == pytest.approx(2.0, abs=1e-10)
        assert report.l2_slope(last=3) == pytest.approx(3.0, abs=1e-10)
        rates = report.pairwise_rates()
        assert rates[0] == (None, None)
        assert rates[1][0] == pytest.approx(3.0, abs=1e-10)
        assert rates[1][1] == pytest.approx(2.0, abs=1e-10)
