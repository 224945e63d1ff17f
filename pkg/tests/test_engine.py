import numpy as np
import pytest

from gradspace import engine
from gradspace.errors import NonConvergence

from oracles import thomas_solve


class TestJacobi:
    def test_diagonal_input(self):
        w, q = engine.jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
        assert np.allclose(sorted(w), [-1.0, 2.0, 3.0])
        assert np.allclose(np.abs(q[np.abs(q) > 0.5]), 1.0)

    def test_symmetric_two_by_two(self):
        w, _ = engine.jacobi_eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(w, [-1.0, 1.0])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            a = rng.standard_normal((n, n))
            a = a + a.T
            w, q = engine.jacobi_eigh(a)
            assert np.max(np.abs(q @ np.diag(w) @ q.T - a)) <= 1e-11
            assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-12

    def test_zero_matrix(self):
        w, q = engine.jacobi_eigh(np.zeros((4, 4)))
        assert np.all(w == 0.0)
        assert np.allclose(q, np.eye(4))


class TestCG:
    def test_identity_one_iteration(self):
        calls = [0]

        def apply_id(x):
            calls[0] += 1
            return x

        b = np.array([1.0, -2.0, 0.5])
        x = engine.cg_solve(apply_id, b)
        assert np.allclose(x, b, atol=1e-14)
        assert calls[0] <= 2

    def test_laplacian_vs_thomas(self):
        n = 40
        h = 1.0 / (n + 1)

        def apply_lap(x):
            y = 2.0 * x
            y[:-1] -= x[1:]
            y[1:] -= x[:-1]
            return y / h ** 2

        # boundary lift for u(x) = x: rhs nonzero at the last interior node
        b = np.zeros(n)
        b[-1] = 1.0 / h ** 2
        x = engine.cg_solve(apply_lap, b, tol=1e-14)
        lower = np.full(n, -1.0 / h ** 2)
        diag = np.full(n, 2.0 / h ** 2)
        upper = np.full(n, -1.0 / h ** 2)
        ref = thomas_solve(lower, diag, upper, b)
        assert np.max(np.abs(x - ref)) <= 1e-10

    def test_zero_rhs(self):
        x = engine.cg_solve(lambda v: 2.0 * v, np.zeros(5))
        assert np.all(x == 0.0)

    def test_indefinite_raises(self):
        with pytest.raises(ValueError):
            engine.cg_solve(lambda v: -v, np.ones(3))


class TestDykstra:
    def test_single_oracle_is_projection(self):
        proj = engine.project_halfspace(np.array([1.0, 0.0]), 2.0)
        x = engine.dykstra([proj], np.zeros(2))
        assert np.allclose(x, [2.0, 0.0])

    def test_two_halfplanes_closed_form(self):
        # {x >= 1} and {x + y >= 3}: nearest point to 0 solves a tiny QP
        projs = [engine.project_halfspace(np.array([1.0, 0.0]), 1.0),
                 engine.project_halfspace(np.array([1.0, 1.0]), 3.0)]
        x = engine.dykstra(projs, np.zeros(2), tol=1e-14)
        # closed form: both constraints active -> x = (1, 2)? check against
        # the unconstrained-per-face candidates
        candidates = [np.array([1.5, 1.5]), np.array([1.0, 2.0])]
        feasible = [c for c in candidates if c[0] >= 1 - 1e-12 and c.sum() >= 3 - 1e-12]
        ref = min(feasible, key=lambda c: c @ c)
        assert np.max(np.abs(x - ref)) <= 1e-8

    def test_box_intersection(self):
        projs = [engine.project_box(lower=np.array([1.0, -np.inf])),
                 engine.project_box(upper=np.array([np.inf, -1.0]))]
        x = engine.dykstra(projs, np.array([0.0, 0.0]), tol=1e-14)
        assert np.allclose(x, [1.0, -1.0])

    def test_disjoint_sets_leave_residual(self):
        # {x >= 1} and {x <= -1} never intersect: dykstra settles on one of
        # the nearest points, and the violated constraint shows in the
        # residual the solvers check afterwards
        projs = [engine.project_halfspace(np.array([1.0]), 1.0),
                 engine.project_halfspace(np.array([-1.0]), 1.0)]
        x = engine.dykstra(projs, np.zeros(1), tol=1e-12, max_cycles=5000)
        assert min(x[0] - 1.0, -1.0 - x[0]) < -0.5


class TestProjectedDescent:
    def test_quadratic_matches_cg(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((6, 6))
        A = m.T @ m + np.eye(6)
        b = rng.standard_normal(6)

        x_cg = engine.cg_solve(lambda v: A @ v, b, tol=1e-14)
        x, fx, _, converged = engine.projected_descent(
            lambda v: float(v @ (A @ v)) - 2 * float(b @ v),
            lambda v: 2.0 * (A @ v - b),
            lambda v: v,
            np.zeros(6), tol_objective=1e-14)
        assert converged
        assert np.max(np.abs(x - x_cg)) <= 1e-6

    def test_optimal_start_stays(self):
        x, _, _, converged = engine.projected_descent(
            lambda v: float(v @ v), lambda v: 2.0 * v, lambda v: v, np.zeros(4))
        assert converged
        assert np.all(x == 0.0)

    def test_box_constrained_vs_active_set_enumeration(self):
        # min (x-2)^2 + (y+3)^2 on [0,1]^2: enumerate the four corners/faces
        lo, hi = np.zeros(2), np.ones(2)

        def proj(v):
            return np.clip(v, lo, hi)

        x, _, _, converged = engine.projected_descent(
            lambda v: float((v[0] - 2.0) ** 2 + (v[1] + 3.0) ** 2),
            lambda v: np.array([2.0 * (v[0] - 2.0), 2.0 * (v[1] + 3.0)]),
            proj, np.array([0.5, 0.5]), tol_objective=1e-14)
        assert converged
        assert np.max(np.abs(x - np.array([1.0, 0.0]))) <= 1e-9

    def test_trace_monotone(self):
        trace = []
        engine.projected_descent(
            lambda v: float(v @ v) + abs(v[0]),
            lambda v: 2.0 * v + np.array([np.sign(v[0]), 0.0]),
            lambda v: v, np.array([3.0, -2.0]), trace=trace)
        diffs = np.diff(np.asarray(trace))
        assert np.all(diffs <= 1e-15 * (1.0 + np.abs(trace[:-1])))

    def test_deterministic_given_seed(self):
        def run():
            return engine.projected_descent(
                lambda v: float(v @ v), lambda v: 2.0 * v,
                lambda v: np.maximum(v, -1.0), np.array([4.0, 4.0, 4.0]), seed=11)[0]

        assert np.array_equal(run(), run())


class TestRayleigh:
    def test_inverse_power_identity(self):
        lam, x = engine.inverse_power_smallest(lambda v: v, 5, seed=1)
        assert abs(lam - 1.0) <= 1e-10
        assert abs(np.linalg.norm(x) - 1.0) <= 1e-12

    def test_inverse_power_diagonal(self):
        d = np.array([4.0, 0.25, 9.0])
        lam, x = engine.inverse_power_smallest(lambda v: d * v, 3, seed=2)
        assert abs(lam - 0.25) <= 1e-10
        assert abs(abs(x[1]) - 1.0) <= 1e-8
