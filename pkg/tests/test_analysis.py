import numpy as np
import pytest
import sympy

from stokesrbf.analysis import (
    ErrorReport,
    ManufacturedSolution,
    condition_number,
    extreme_eigenvalues,
    gauss_legendre_grid,
    l2_error,
    linf_error,
    run_experiment,
    slope_check,
    trig_stokes_problem,
)
from stokesrbf.collocation import NotPositiveDefinite
from stokesrbf.multiscale import MultiscaleConfig, MultiscaleModel


def _sympy_oracle(nu=1.0):
    """Independent symbolic derivation of -nu lap u + grad p and div u."""
    x1, x2 = sympy.symbols("x1 x2")
    u = (2 * sympy.cos(5 * x1) * sympy.cos(2 * x2),
         5 * sympy.sin(5 * x1) * sympy.sin(2 * x2))
    p = sympy.sin(3 * x1) * sympy.sin(3 * x2)
    lap = lambda w: sympy.diff(w, x1, 2) + sympy.diff(w, x2, 2)
    momentum = (-nu * lap(u[0]) + sympy.diff(p, x1),
                -nu * lap(u[1]) + sympy.diff(p, x2))
    divergence = sympy.diff(u[0], x1) + sympy.diff(u[1], x2)
    f_fn = sympy.lambdify((x1, x2), momentum, "numpy")
    div_fn = sympy.lambdify((x1, x2), divergence, "numpy")
    return f_fn, div_fn


class TestManufacturedSolution:
    def test_momentum_identity(self, rng):
        problem = trig_stokes_problem()
        f_fn, _ = _sympy_oracle()
        pts = rng.uniform(0, 1, size=(1000, 2))
        expected = np.column_stack(f_fn(pts[:, 0], pts[:, 1]))
        assert np.abs(problem.f(pts) - expected).max() <= 1e-10

    def test_momentum_identity_with_viscosity(self, rng):
        problem = trig_stokes_problem(nu=2.5)
        f_fn, _ = _sympy_oracle(nu=2.5)
        pts = rng.uniform(0, 1, size=(200, 2))
        expected = np.column_stack(f_fn(pts[:, 0], pts[:, 1]))
        assert np.abs(problem.f(pts) - expected).max() <= 1e-10

    def test_divergence_free(self, rng):
        _, div_fn = _sympy_oracle()
        pts = rng.uniform(0, 1, size=(1000, 2))
        assert np.abs(div_fn(pts[:, 0], pts[:, 1])).max() <= 1e-12
        # discrete check of the implemented field
        problem = trig_stokes_problem()
        h = 1e-6
        dudx = (problem.u(pts + [h, 0])[:, 0] - problem.u(pts - [h, 0])[:, 0]) / (2 * h)
        dvdy = (problem.u(pts + [0, h])[:, 1] - problem.u(pts - [0, h])[:, 1]) / (2 * h)
        assert np.abs(dudx + dvdy).max() <= 1e-8

    def test_boundary_data_is_velocity_restriction(self, rng):
        problem = trig_stokes_problem()
        edge = np.column_stack([rng.uniform(0, 1, 50), np.zeros(50)])
        np.testing.assert_array_equal(problem.g(edge), problem.u(edge))

    def test_gradient_matches_pressure(self, rng):
        problem = trig_stokes_problem()
        x1, x2 = sympy.symbols("x1 x2")
        p = sympy.sin(3 * x1) * sympy.sin(3 * x2)
        grad = sympy.lambdify((x1, x2), (sympy.diff(p, x1), sympy.diff(p, x2)), "numpy")
        pts = rng.uniform(0, 1, size=(200, 2))
        expected = np.column_stack(grad(pts[:, 0], pts[:, 1]))
        assert np.abs(problem.grad_p(pts) - expected).max() <= 1e-12


class _ConstantField:
    """Stand-in reference whose u is a constant field."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)
        self.u = lambda pts: np.tile(self.value, (len(np.atleast_2d(pts)), 1))
        self.grad_p = self.u


def _empty_model():
    return MultiscaleModel(levels=[], config=MultiscaleConfig(n_levels=1))


class TestErrorNorms:
    def test_zero_error_field(self):
        reference = _ConstantField((0.0, 0.0))
        assert l2_error(_empty_model(), reference, "velocity", 30) == 0.0
        assert linf_error(_empty_model(), reference, "velocity", 30) == 0.0

    def test_constant_one_error_field(self):
        reference = _ConstantField((1.0, 0.0))
        for order in (2, 11, 40):
            assert l2_error(_empty_model(), reference, "velocity", order) == pytest.approx(
                1.0, rel=1e-13
            )
        assert linf_error(_empty_model(), reference, "velocity", 20) == pytest.approx(1.0)

    def test_quadrature_grid(self):
        pts, w = gauss_legendre_grid(25)
        assert pts.shape == (625, 2) and w.shape == (625,)
        assert w.sum() == pytest.approx(1.0, rel=1e-14)
        assert pts.min() > 0.0 and pts.max() < 1.0
        with pytest.raises(ValueError):
            gauss_legendre_grid(1)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            l2_error(_empty_model(), _ConstantField((0, 0)), "vorticity", 10)


class TestConditionNumber:
    def test_identity(self):
        assert condition_number(np.eye(6)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert condition_number(np.diag([2.0, 8.0])) == pytest.approx(4.0)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            condition_number(np.diag([1.0, -2.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            condition_number(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_iterative_path_matches_dense(self, rng, monkeypatch):
        import stokesrbf.analysis as analysis

        basis = rng.standard_normal((60, 60))
        spectrum = np.linspace(1.0, 300.0, 60)
        q, _ = np.linalg.qr(basis)
        matrix = (q * spectrum) @ q.T
        matrix = 0.5 * (matrix + matrix.T)
        dense_min, dense_max = extreme_eigenvalues(matrix)
        monkeypatch.setattr(analysis, "_EIG_DENSE_LIMIT", 10)
        it_min, it_max = extreme_eigenvalues(matrix)
        assert it_max == pytest.approx(dense_max, rel=1e-4)
        assert it_min == pytest.approx(dense_min, rel=1e-4)


class TestSlopeCheck:
    def test_exact_power_law(self):
        pairs = [(h, h**-9.0) for h in (1 / 4, 1 / 8, 1 / 16)]
        assert slope_check(pairs) == pytest.approx(9.0, abs=1e-6)

    def test_constant(self):
        pairs = [(h, 7.0) for h in (1 / 4, 1 / 8, 1 / 16)]
        assert slope_check(pairs) == pytest.approx(0.0, abs=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            slope_check([(0.25, 10.0)])


@pytest.fixture(scope="module")
def small_experiment():
    return run_experiment(MultiscaleConfig(n_levels=2), quad_points=60, eigen_levels=2)


class TestRunExperiment:
    def test_report_shape(self, small_experiment):
        model, report = small_experiment
        assert report.n_levels == 2
        assert len(report.velocity_l2) == 2
        assert set(report.condition_numbers) == {1, 2}
        assert all(v > 0 for v in report.velocity_l2)

    def test_error_decays(self, small_experiment):
        _, report = small_experiment
        assert report.velocity_l2[1] < report.velocity_l2[0]
        assert report.pressure_grad_l2[1] < report.pressure_grad_l2[0]

    def test_condition_numbers_increase_and_positive(self, small_experiment):
        _, report = small_experiment
        assert report.condition_numbers[2] > report.condition_numbers[1] > 0
        assert all(v > 0 for v in report.lambda_min.values())

    def test_report_against_norm_functions(self, small_experiment):
        model, report = small_experiment
        problem = trig_stokes_problem()
        direct = l2_error(model, problem, "velocity", report.quad_points)
        assert direct == pytest.approx(report.velocity_l2[-1], rel=1e-12)
        direct_inf = linf_error(model, problem, "velocity", report.quad_points)
        assert direct_inf == pytest.approx(report.velocity_linf[-1], rel=1e-12)

    def test_quadrature_self_consistency(self, small_experiment):
        # the error fields are entire; two quadrature orders must agree
        model, _ = small_experiment
        problem = trig_stokes_problem()
        a = l2_error(model, problem, "velocity", 100)
        b = l2_error(model, problem, "velocity", 150)
        assert abs(a - b) <= 1e-3 * max(a, b)

    def test_csv_layout(self, small_experiment, tmp_path):
        _, report = small_experiment
        path = tmp_path / "report.csv"
        report.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "level,1,2"
        names = [l.split(",")[0] for l in lines[1:]]
        assert names == [
            "delta", "velocity_l2", "velocity_linf",
            "pressure_grad_l2", "pressure_grad_linf",
        ]
        # scientific notation with 4 significant digits on error rows
        assert all("e" in cell for cell in lines[2].split(",")[1:])
