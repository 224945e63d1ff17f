import numpy as np
import pytest

import gradspace as gs
from gradspace import matrices
from gradspace.core import matrix_space, norm_value
from gradspace.engine import jacobi_eigh


def random_sym(rng, n=3, scale=1.0):
    m = rng.standard_normal((n, n)) * scale
    return matrices.sym(m + m.T)


def random_psd(rng, n=3, scale=1.0):
    m = rng.standard_normal((n, n)) * scale
    return matrices.sym(m @ m.T)


class TestSymmetricMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            matrices.sym([[0.0, 1.0], [0.5, 0.0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            matrices.sym([[np.inf, 0.0], [0.0, 0.0]])


class TestSchattenNorm:
    def test_diag_three_four(self):
        assert matrices.schatten_norm(matrices.sym(np.diag([3.0, 4.0])), 2.0) == pytest.approx(5.0)

    def test_identity_any_p(self):
        for n in (2, 4):
            for p in (1.5, 2.0, 3.0):
                got = matrices.schatten_norm(matrices.sym(np.eye(n)), p)
                assert got == pytest.approx(n ** (1.0 / p))

    def test_operator_norm_below_schatten(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = random_sym(rng, 3)
            for p in (1.5, 2.0, 3.0):
                assert matrices.operator_norm(a) <= matrices.schatten_norm(a, p) * (1 + 1e-12)

    def test_general_matrix_uses_singular_values(self):
        a = np.array([[0.0, 2.0], [0.0, 0.0]])  # singular values (2, 0)
        assert matrices.schatten_norm(a, 2.0) == pytest.approx(2.0)

    def test_submultiplicative_with_operator_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            a = random_sym(rng, 3)
            b = random_sym(rng, 3)
            prod = b.entries @ a.entries
            for p in (1.5, 2.0, 3.0):
                lhs = matrices.schatten_norm(prod, p)
                rhs = matrices.operator_norm(b) * matrices.schatten_norm(a, p)
                assert lhs <= rhs * (1.0 + 1e-10)


class TestPsdProject:
    def test_already_above_floor(self):
        rng = np.random.default_rng(2)
        floor = random_sym(rng, 3, 0.5)
        a = matrices.sym(floor.entries + random_psd(rng, 3).entries)
        out = matrices.psd_project(a, floor)
        assert np.max(np.abs(out.entries - a.entries)) <= 1e-10

    def test_diagonal_clip(self):
        out = matrices.psd_project(matrices.sym(np.diag([-1.0, 2.0])))
        assert np.allclose(out.entries, np.diag([0.0, 2.0]))

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        a = random_sym(rng, 4)
        once = matrices.psd_project(a)
        twice = matrices.psd_project(once)
        assert np.max(np.abs(once.entries - twice.entries)) <= 1e-12

    def test_frobenius_nearest(self):
        rng = np.random.default_rng(4)
        a = random_sym(rng, 3)
        out = matrices.psd_project(a)
        d0 = np.linalg.norm(out.entries - a.entries)
        for _ in range(50):
            cand = matrices.sym(out.entries + random_psd(rng, 3, 0.3).entries)
            assert np.linalg.norm(cand.entries - a.entries) >= d0 - 1e-10


class TestMatrixMax:
    def test_paper_pair(self):
        out = matrices.matrix_max(matrices.sym(np.diag([1.0, 0.0])), matrices.sym(np.diag([0.0, 1.0])))
        assert np.linalg.norm(out.entries - np.eye(2)) <= 1e-6

    def test_dominated_input(self):
        rng = np.random.default_rng(5)
        psi1 = random_psd(rng, 3)
        psi2 = matrices.sym(psi1.entries - random_psd(rng, 3, 0.4).entries)
        out = matrices.matrix_max(psi1, psi2)
        assert np.max(np.abs(out.entries - psi1.entries)) <= 1e-6

    def test_random_pair_dominates_and_minimizes(self):
        rng = np.random.default_rng(6)
        psi1 = random_psd(rng, 3)
        psi2 = random_psd(rng, 3)
        out = matrices.matrix_max(psi1, psi2)
        for psi in (psi1, psi2):
            w, _ = jacobi_eigh(out.entries - psi.entries)
            assert w[0] >= -1e-8
        nmax = np.linalg.norm(out.entries, "fro")
        for _ in range(50):
            cand = matrices.sym(out.entries + random_psd(rng, 3, 0.5).entries)
            assert np.linalg.norm(cand.entries, "fro") >= nmax - 1e-8

    def test_variational_inequality_certificate(self):
        rng = np.random.default_rng(7)
        psi1 = random_psd(rng, 2)
        psi2 = random_psd(rng, 2)
        x = matrices.matrix_max(psi1, psi2)
        xv = x.entries.reshape(-1)
        for _ in range(100):
            z = matrices.sym(x.entries + random_psd(rng, 2, 0.5).entries).entries.reshape(-1)
            assert float(xv @ (xv - z)) <= 1e-6 * (1.0 + float(xv @ xv))

    def test_orthogonal_conjugation_covariance(self):
        rng = np.random.default_rng(8)
        psi1 = random_psd(rng, 3)
        psi2 = random_psd(rng, 3)
        theta = 0.7
        q = np.eye(3)
        q[:2, :2] = [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        m = matrices.matrix_max(psi1, psi2)
        m_conj = matrices.matrix_max(matrices.sym(q.T @ psi1.entries @ q),
                                     matrices.sym(q.T @ psi2.entries @ q))
        assert np.max(np.abs(m_conj.entries - q.T @ m.entries @ q)) <= 1e-6

    def test_schatten_p3_diagonal_symmetry(self):
        # for the paper pair the p=3 minimizer is the identity as well
        out = matrices.matrix_max(matrices.sym(np.diag([1.0, 0.0])), matrices.sym(np.diag([0.0, 1.0])),
                                  gs.SolverConfig(tol_objective=1e-12), p=3.0)
        assert np.linalg.norm(out.entries - np.eye(2)) <= 1e-4


class TestMatrixMin:
    def test_equal_inputs(self):
        rng = np.random.default_rng(9)
        psi = random_psd(rng, 2)
        out = matrices.matrix_min(psi, psi)
        assert np.max(np.abs(out.entries - psi.entries)) <= 1e-6

    def test_paper_pair_zero(self):
        out = matrices.matrix_min(matrices.sym(np.diag([1.0, 0.0])), matrices.sym(np.diag([0.0, 1.0])))
        assert np.linalg.norm(out.entries) <= 1e-6

    def test_result_satisfies_all_bounds(self):
        rng = np.random.default_rng(10)
        psi1 = random_psd(rng, 3)
        psi2 = random_psd(rng, 3)
        out = matrices.matrix_min(psi1, psi2)
        for diff in (out.entries, psi1.entries - out.entries, psi2.entries - out.entries):
            w, _ = jacobi_eigh(diff)
            assert w[0] >= -1e-6

    def test_requires_psd_inputs(self):
        with pytest.raises(gs.PreconditionViolation):
            matrices.matrix_min(matrices.sym(np.diag([-1.0, 1.0])), matrices.sym(np.eye(2)))


class TestCommutator:
    def test_self_commutator_vanishes(self):
        delta = matrices.sym([[1.0, 0.3], [0.3, -2.0]])
        rel = matrices.commutator_relation(delta)
        out = rel.map.apply(delta.entries.reshape(-1))
        assert np.max(np.abs(out)) <= 1e-14

    def test_explicit_two_by_two(self):
        delta = matrices.sym(np.diag([1.0, 2.0]))
        a = matrices.sym([[0.0, 1.0], [1.0, 0.0]])
        rel = matrices.commutator_relation(delta)
        out = rel.map.apply(a.entries.reshape(-1)).reshape(2, 2)
        assert np.allclose(out, [[0.0, 1.0], [-1.0, 0.0]])

    def test_kernel_gives_unbounded_constant(self):
        delta = matrices.sym(np.diag([1.0, 2.0]))
        rel = matrices.commutator_relation(delta)
        # diagonal matrices commute with a diagonal delta
        kernel_el = gs.element(rel.domain_space, np.diag([3.0, -1.0]).reshape(-1))
        assert np.isinf(gs.estimate_poincare_constant(rel, [kernel_el]))

    def test_adjoint_consistency(self):
        rng = np.random.default_rng(11)
        delta = random_sym(rng, 3)
        rel = matrices.commutator_relation(delta)
        x = rng.standard_normal(9)
        y = rng.standard_normal(9)
        assert float(rel.map.apply(x) @ y) == pytest.approx(float(x @ rel.map.adjoint(y)), rel=1e-12)


class TestBoundedBelow:
    def test_identity_scaling(self):
        rel = matrices.bounded_below_relation(matrices.sym(np.eye(3)))
        rng = np.random.default_rng(12)
        a = rng.standard_normal(9)
        assert np.allclose(rel.map.apply(a), 0.5 * a)
        el = gs.element(rel.domain_space, random_sym(rng, 3).entries.reshape(-1))
        assert gs.estimate_poincare_constant(rel, [el]) == pytest.approx(2.0)

    def test_lower_bound_one_half(self):
        rng = np.random.default_rng(13)
        M = random_sym(rng, 3)
        rel = matrices.bounded_below_relation(M)
        for p in (1.5, 2.0, 3.0):
            for _ in range(34):
                a = random_sym(rng, 3)
                ta = rel.map.apply(a.entries.reshape(-1)).reshape(3, 3)
                assert matrices.schatten_norm(ta, p) >= 0.5 * matrices.schatten_norm(a, p) * (1 - 1e-10)

    def test_zero_maps_to_zero(self):
        rel = matrices.bounded_below_relation(matrices.sym(np.diag([2.0, 1.0])))
        assert np.all(rel.map.apply(np.zeros(4)) == 0.0)

    def test_zero_m_rejected(self):
        with pytest.raises(gs.PreconditionViolation):
            matrices.bounded_below_relation(matrices.sym(np.zeros((2, 2))))


class TestFredholm:
    def test_diag_two_zero(self):
        c, kernel = matrices.fredholm_poincare_constant(np.diag([2.0, 0.0]))
        assert c == pytest.approx(0.5)
        assert kernel.shape == (2, 1)
        assert abs(abs(kernel[1, 0]) - 1.0) <= 1e-12

    def test_orthogonal_map(self):
        theta = 0.3
        q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        c, kernel = matrices.fredholm_poincare_constant(q)
        assert c == pytest.approx(1.0)
        assert kernel.shape[1] == 0

    def test_zero_map_rejected(self):
        with pytest.raises(gs.PreconditionViolation):
            matrices.fredholm_poincare_constant(np.zeros((3, 3)))

    def test_rank_deficient_bound_on_complement(self):
        rng = np.random.default_rng(14)
        f = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 5))
        c, kernel = matrices.fredholm_poincare_constant(f)
        assert kernel.shape[1] == 2
        for _ in range(100):
            v = rng.standard_normal(5)
            v = v - kernel @ (kernel.T @ v)
            assert np.linalg.norm(v) <= c * np.linalg.norm(f @ v) * (1.0 + 1e-9)
        # kernel directions violate any such bound
        kv = kernel[:, 0]
        assert np.linalg.norm(f @ kv) <= 1e-10 * np.linalg.norm(kv)

    def test_constant_vs_numpy_svd(self):
        rng = np.random.default_rng(15)
        f = rng.standard_normal((6, 4))
        c, _ = matrices.fredholm_poincare_constant(f)
        sv = np.linalg.svd(f, compute_uv=False)
        assert c == pytest.approx(1.0 / sv[sv > 1e-10].min(), rel=1e-10)


class TestOrderLimit:
    def test_constant_sequence(self):
        b = matrices.sym(np.diag([1.0, 2.0]))
        assert matrices.order_limit_check([b, b, b], b, b)

    def test_shrinking_perturbation(self):
        b = matrices.sym(np.diag([1.0, -1.0]))
        seq = [matrices.sym(b.entries + np.eye(2) / i) for i in range(1, 40)]
        assert matrices.order_limit_check(seq, b, b, tail_tol=0.1)

    def test_random_psd_sequences(self):
        rng = np.random.default_rng(16)
        for _ in range(100):
            b = random_sym(rng, 2)
            bump = random_psd(rng, 2)
            seq = [matrices.sym(b.entries + bump.entries / i) for i in range(1, 30)]
            limit = matrices.sym(b.entries + bump.entries / 40.0)
            assert matrices.order_limit_check(seq, b, limit, tail_tol=1.0)

    def test_precondition_violations(self):
        b = matrices.sym(np.eye(2))
        below = matrices.sym(np.zeros((2, 2)))
        with pytest.raises(gs.PreconditionViolation):
            matrices.order_limit_check([below], b, b)
        with pytest.raises(gs.PreconditionViolation):
            matrices.order_limit_check([b], b, matrices.sym(10.0 * np.eye(2)), tail_tol=1e-9)


class TestMcCarthy:
    def test_trace_power_inequality(self):
        rng = np.random.default_rng(17)
        for p in (1.5, 2.0, 3.0):
            for _ in range(334):
                a = random_psd(rng, 3)
                b = random_psd(rng, 3)
                tra = np.sum(np.maximum(a.eigenvalues(), 0.0) ** p)
                trb = np.sum(np.maximum(b.eigenvalues(), 0.0) ** p)
                trab = np.sum(np.maximum(matrices.sym(a.entries + b.entries).eigenvalues(), 0.0) ** p)
                assert tra + trb <= trab * (1.0 + 1e-9) + 1e-12

    def test_order_monotone_schatten(self):
        rng = np.random.default_rng(18)
        for _ in range(200):
            a = random_psd(rng, 3)
            b = matrices.sym(a.entries + random_psd(rng, 3).entries)
            for p in (1.5, 2.0, 3.0):
                assert matrices.schatten_norm(a, p) <= matrices.schatten_norm(b, p) * (1 + 1e-10)
