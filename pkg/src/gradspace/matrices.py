"""Symmetric-matrix instantiation: Schatten norms, PSD order, lattice ops.

Real symmetric matrices stand in for hermitian ones; the 2x2 reference
example is real and a real Jacobi eigensolver covers all functional
calculus needed here.  Commutator and multiplication relations map into
the full n x n matrix space, where Schatten norms are evaluated through
singular values.
"""

from dataclasses import dataclass

import numpy as np

from . import engine
from .core import (
    Element,
    LinearGraphRelation,
    LinearMap,
    SolverConfig,
    energy_gradient,
    energy_value,
    matrix_space,
    schatten_spec,
    SpaceDescriptor,
)
from .errors import NonConvergence, PreconditionViolation

PSD_EIG_TOL = 1e-9  # lambda_min >= -PSD_EIG_TOL * (1 + ||A||) counts as PSD


@dataclass(frozen=True)
class SymmetricMatrix:
    """An n x n real symmetric matrix (symmetry checked at construction)."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("entries must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("entries must be finite")
        scale = 1.0 + float(np.abs(a).max(initial=0.0))
        if np.abs(a - a.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        w, _ = engine.jacobi_eigh(self.entries)
        return w


def sym(entries):
    return SymmetricMatrix(np.asarray(entries, dtype=float))


def is_psd(A, tol=PSD_EIG_TOL):
    """PSD test with eigenvalue slack scaled to the matrix magnitude."""
    a = np.asarray(A.entries if isinstance(A, SymmetricMatrix) else A, dtype=float)
    a = 0.5 * (a + a.T)
    w, _ = engine.jacobi_eigh(a)
    return float(w[0]) >= -tol * (1.0 + np.linalg.norm(a, "fro"))


def operator_norm(A):
    """Largest singular value."""
    a = np.asarray(A.entries if isinstance(A, SymmetricMatrix) else A, dtype=float)
    if np.allclose(a, a.T, rtol=0.0, atol=1e-13 * (1.0 + np.abs(a).max(initial=0.0))):
        w, _ = engine.jacobi_eigh(0.5 * (a + a.T))
        return float(np.max(np.abs(w)))
    w, _ = engine.jacobi_eigh(a.T @ a)
    return float(np.sqrt(max(w[-1], 0.0)))


def schatten_norm(A, p):
    """(sum of |eigenvalues|^p)^(1/p); singular values for general input."""
    if p <= 1.0:
        raise PreconditionViolation("schatten exponent must exceed 1")
    a = np.asarray(A.entries if isinstance(A, SymmetricMatrix) else A, dtype=float)
    if np.allclose(a, a.T, rtol=0.0, atol=1e-13 * (1.0 + np.abs(a).max(initial=0.0))):
        w, _ = engine.jacobi_eigh(0.5 * (a + a.T))
        return float(np.sum(np.abs(w) ** p) ** (1.0 / p))
    w, _ = engine.jacobi_eigh(a.T @ a)
    return float(np.sum(np.maximum(w, 0.0) ** (p / 2.0)) ** (1.0 / p))


def psd_project(A, floor=None):
    """Frobenius-nearest matrix X with X >= floor (PSD order).

    Shifts by the floor, zeroes the negative eigenvalues, and shifts back;
    with ``floor=None`` this is the projection onto the PSD cone.
    """
    a = np.asarray(A.entries if isinstance(A, SymmetricMatrix) else A, dtype=float)
    f = np.zeros_like(a) if floor is None else np.asarray(
        floor.entries if isinstance(floor, SymmetricMatrix) else floor, dtype=float)
    d = 0.5 * ((a - f) + (a - f).T)
    w, q = engine.jacobi_eigh(d)
    return SymmetricMatrix(f + (q * np.maximum(w, 0.0)) @ q.T)


def _dominate_projections(bounds):
    """Frobenius projections onto {X >= psi} for each bound, on flat coords."""
    projs = []
    for psi in bounds:
        flat = psi.entries.reshape(-1)

        def proj(x, flat=flat, n=psi.n):
            m = psd_project(x.reshape(n, n), flat.reshape(n, n))
            return m.entries.reshape(-1)

        projs.append(proj)
    return projs


def _below_projection(cap):
    """Frobenius projection onto {X <= cap} on flat coordinates."""
    flat = cap.entries.reshape(-1)

    def proj(x, flat=flat, n=cap.n):
        m = psd_project(-x.reshape(n, n), -flat.reshape(n, n))
        return (-m.entries).reshape(-1)

    return proj


def _feasible_upper_seed(psi1, psi2):
    """A common upper bound to start descent from (the sum shifted up)."""
    n = psi1.n
    seed = psi1.entries + psi2.entries + np.linalg.norm(psi1.entries, "fro") * np.eye(n)
    lift = 0.0
    for psi in (psi1, psi2):
        w, _ = engine.jacobi_eigh(seed - psi.entries)
        lift = max(lift, -float(w[0]))
    if lift > 0.0:
        seed = seed + (lift + 1e-12) * np.eye(n)
    return seed


def _dykstra_accepting_slow_tail(projs, start):
    """Dykstra with the standard cap; a cap hit with an essentially feasible
    iterate is accepted (slow tail, not spin), anything else re-raised."""
    try:
        return engine.dykstra(projs, start, tol=1e-10, max_cycles=10000)
    except NonConvergence as exc:
        x = np.asarray(exc.best, dtype=float)
        resid = max(float(np.linalg.norm(proj(x) - x)) for proj in projs)
        if resid <= 1e-6 * (1.0 + float(np.linalg.norm(x))):
            return x
        raise


def matrix_max(psi1, psi2, cfg=SolverConfig(), p=2.0):
    """The Schatten-p-norm-minimal common upper bound of two matrices.

    For the Frobenius case (p = 2) this is the projection of 0 onto the
    intersection of the two shifted PSD cones, computed with Dykstra's
    alternating projections; for other exponents projected descent on the
    smooth trace energy runs over the same intersection.  Uniqueness comes
    from strict convexity of the norm.
    """
    if psi1.n != psi2.n:
        raise PreconditionViolation("matrices must share a dimension")
    n = psi1.n
    projs = _dominate_projections([psi1, psi2])
    if p == 2.0:
        x = _dykstra_accepting_slow_tail(projs, np.zeros(n * n))
        return SymmetricMatrix(0.5 * (x.reshape(n, n) + x.reshape(n, n).T))

    norm = schatten_spec(p)

    def project(x):
        return engine.dykstra(projs, x, tol=1e-11, max_cycles=10000)

    start = _feasible_upper_seed(psi1, psi2).reshape(-1)
    x, _, _, converged = engine.projected_descent(
        lambda z: energy_value(norm, z),
        lambda z: energy_gradient(norm, z),
        project, start,
        tol_objective=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed)
    if not converged:
        raise NonConvergence("matrix_max descent did not converge", best=x)
    return SymmetricMatrix(0.5 * (x.reshape(n, n) + x.reshape(n, n).T))


def matrix_min(psi1, psi2, cfg=SolverConfig(), p=2.0):
    """Nearest point to matrix_max(psi1, psi2) among common lower bounds.

    Minimizes the Schatten-p distance over {v : 0 <= v <= psi1, v <= psi2}
    in the PSD order; requires both inputs PSD.
    """
    for psi in (psi1, psi2):
        if not is_psd(psi):
            raise PreconditionViolation("matrix_min requires PSD inputs")
    n = psi1.n
    m = matrix_max(psi1, psi2, cfg, p=p)
    projs = _dominate_projections([SymmetricMatrix(np.zeros((n, n)))])
    projs.append(_below_projection(psi1))
    projs.append(_below_projection(psi2))
    if p == 2.0:
        x = _dykstra_accepting_slow_tail(projs, m.entries.reshape(-1))
        return SymmetricMatrix(0.5 * (x.reshape(n, n) + x.reshape(n, n).T))

    norm = schatten_spec(p)
    target = m.entries.reshape(-1)

    def project(x):
        return engine.dykstra(projs, x, tol=1e-11, max_cycles=10000)

    x, _, _, converged = engine.projected_descent(
        lambda z: energy_value(norm, z - target),
        lambda z: energy_gradient(norm, z - target),
        project, np.zeros(n * n),
        tol_objective=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed)
    if not converged:
        raise NonConvergence("matrix_min descent did not converge", best=x)
    return SymmetricMatrix(0.5 * (x.reshape(n, n) + x.reshape(n, n).T))


# ---------------------------------------------------------------------------
# gradient relations on matrix spaces


def commutator_relation(delta, p=2.0):
    """Linear-graph relation A -> A delta - delta A on the matrix space.

    Inputs are symmetric; outputs land among antisymmetric matrices, so
    the target is the full n x n space with Schatten norms via singular
    values.  Everything commuting with delta is in the kernel.
    """
    d = delta.entries
    n = delta.n
    v_space = matrix_space(n, p)
    w_space = matrix_space(n, p)

    def apply(x):
        a = x.reshape(n, n)
        return (a @ d - d @ a).reshape(-1)

    def adjoint(y):
        b = y.reshape(n, n)
        # adjoint of A -> [A, d] under the Frobenius pairing is B -> [B, d^T]
        return (b @ d.T - d.T @ b).reshape(-1)

    return LinearGraphRelation(v_space, w_space, LinearMap(n * n, n * n, apply, adjoint))


def bounded_below_relation(M, p=2.0):
    """The relation A -> A - M A / (2 ||M||_op).

    The map is bounded below by one half in every Schatten norm, so every
    subset of the space is a Poincare set with constant 2 for it.
    """
    m = M.entries
    if np.all(m == 0.0):
        raise PreconditionViolation("M must be nonzero")
    n = M.n
    scale = 1.0 / (2.0 * operator_norm(M))
    v_space = matrix_space(n, p)
    w_space = matrix_space(n, p)

    def apply(x):
        a = x.reshape(n, n)
        return (a - scale * (m @ a)).reshape(-1)

    def adjoint(y):
        b = y.reshape(n, n)
        return (b - scale * (m.T @ b)).reshape(-1)

    return LinearGraphRelation(v_space, w_space, LinearMap(n * n, n * n, apply, adjoint))


def matrix_element(space, A):
    a = A.entries if isinstance(A, SymmetricMatrix) else np.asarray(A, dtype=float)
    return Element(space, a.reshape(-1))


# ---------------------------------------------------------------------------
# Fredholm constants and order limits


def fredholm_poincare_constant(F, kernel_rtol=1e-6):
    """Best constant C with ||v|| <= C ||F v|| off the kernel of F.

    Returns ``(C, kernel_basis)`` where the columns of ``kernel_basis``
    span ker F and C is the reciprocal of the smallest nonzero singular
    value (eigendecomposition of F^T F).  The bound holds on the
    orthogonal complement of the kernel and on nothing larger.  The rank
    cutoff sits above the sqrt(eps) accuracy floor of Gram-matrix singular
    values.
    """
    f = np.asarray(F, dtype=float)
    w, q = engine.jacobi_eigh(f.T @ f)
    w = np.maximum(w, 0.0)
    smax = float(np.sqrt(w[-1]))
    if smax == 0.0:
        raise PreconditionViolation("zero map has no complement bound")
    cutoff = kernel_rtol * smax
    sv = np.sqrt(w)
    kernel = q[:, sv <= cutoff]
    positive = sv[sv > cutoff]
    constant = 1.0 / float(np.min(positive))
    return constant, kernel


def order_limit_check(A_seq, B, limit, p=2.0, tail_tol=1e-6, tol=PSD_EIG_TOL):
    """Order passes to Schatten-norm limits: A_i >= B and A_i -> limit imply limit >= B.

    Preconditions (each A_i >= B, the last iterate close to the limit in
    Schatten-p norm) are enforced; returns True iff limit - B is PSD
    within the eigenvalue tolerance.
    """
    if not A_seq:
        raise PreconditionViolation("empty sequence")
    for a in A_seq:
        if not is_psd(SymmetricMatrix(a.entries - B.entries), tol):
            raise PreconditionViolation("sequence member is not above the lower bound")
    gap = schatten_norm(SymmetricMatrix(limit.entries - A_seq[-1].entries), p)
    if gap > tail_tol:
        raise PreconditionViolation("last iterate is not close to the claimed limit")
    return is_psd(SymmetricMatrix(limit.entries - B.entries), tol)
