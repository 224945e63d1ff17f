"""Dirichlet, obstacle, multi-obstacle, and Rayleigh-quotient problems.

All problems minimize the norm of the minimal gradient over a closed
convex set.  Obstacle problems are reduced literally to Dirichlet
problems by folding the obstacle into the base set, so their objectives
agree bit-for-bit with the equivalent Dirichlet solve.

Solver routes: a linear-graph relation with a quadratic target norm and
purely affine constraints goes through conjugate gradients on the normal
equations; every other combination runs projected accelerated descent,
with inequality-type relations handled in a joint (element, gradient)
variable whose coupling constraints are half-spaces.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import engine
from .core import (
    Element,
    LinearGraphRelation,
    EnvelopeRelation,
    SolveReport,
    SolverConfig,
    energy_gradient,
    energy_value,
    norm_value,
)
from .errors import (
    DimensionMismatch,
    InfeasibleProblem,
    NonConvergence,
    PreconditionViolation,
    RegularityViolation,
    UnsupportedProblem,
)


# ---------------------------------------------------------------------------
# constraints


def _psd_floor_project(x, floor):
    """Frobenius projection of a flattened matrix onto {X >= floor} (PSD order)."""
    side = int(round(np.sqrt(x.size)))
    d = x.reshape(side, side) - floor.reshape(side, side)
    d = 0.5 * (d + d.T)
    w, q = engine.jacobi_eigh(d)
    clipped = (q * np.maximum(w, 0.0)) @ q.T
    return (floor.reshape(side, side) + clipped).reshape(-1)


def _psd_min_eig(x):
    side = int(round(np.sqrt(x.size)))
    m = x.reshape(side, side)
    m = 0.5 * (m + m.T)
    w, _ = engine.jacobi_eigh(m)
    return float(w[0])


class Constraint:
    """One convex closed constraint on element coordinates."""

    homogeneous = False
    separable = False

    def residual(self, v):
        raise NotImplementedError

    def project(self, v):
        raise NotImplementedError


class ZeroOnMask(Constraint):
    """Linear subspace {v : v[mask] = 0} (zero boundary values)."""

    homogeneous = True
    separable = True

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool)

    def residual(self, v):
        if not np.any(self.mask):
            return 0.0
        return float(np.max(np.abs(v[self.mask]), initial=0.0))

    def project(self, v):
        out = v.copy()
        out[self.mask] = 0.0
        return out


class LowerBound(Constraint):
    """Componentwise bound {v : v >= psi}."""

    separable = True

    def __init__(self, psi):
        self.psi = np.asarray(psi, dtype=float)
        self.homogeneous = bool(np.all(self.psi == 0.0))

    def residual(self, v):
        return float(np.max(self.psi - v, initial=0.0))

    def project(self, v):
        return np.maximum(v, self.psi)


class UpperBound(Constraint):
    """Componentwise bound {v : v <= phi}."""

    separable = True

    def __init__(self, phi):
        self.phi = np.asarray(phi, dtype=float)
        self.homogeneous = bool(np.all(self.phi == 0.0))

    def residual(self, v):
        return float(np.max(v - self.phi, initial=0.0))

    def project(self, v):
        return np.minimum(v, self.phi)


class HalfSpace(Constraint):
    """{v : a . v >= b}."""

    separable = False

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        self.homogeneous = self.b == 0.0
        self._proj = engine.project_halfspace(self.a, self.b)

    def residual(self, v):
        return max(self.b - float(self.a @ v), 0.0)

    def project(self, v):
        return self._proj(v)


class PsdLower(Constraint):
    """Matrix-order bound {v : mat(v) >= floor} in the PSD order."""

    separable = False

    def __init__(self, floor):
        self.floor = np.asarray(floor, dtype=float).reshape(-1)
        self.homogeneous = bool(np.all(self.floor == 0.0))

    def residual(self, v):
        return max(-_psd_min_eig(v - self.floor), 0.0)

    def project(self, v):
        return _psd_floor_project(v, self.floor)


class PsdUpper(Constraint):
    """Matrix-order bound {v : mat(v) <= cap} in the PSD order."""

    separable = False

    def __init__(self, cap):
        self.cap = np.asarray(cap, dtype=float).reshape(-1)
        self.homogeneous = bool(np.all(self.cap == 0.0))

    def residual(self, v):
        return max(-_psd_min_eig(self.cap - v), 0.0)

    def project(self, v):
        return self.cap - _psd_floor_project(-v, -self.cap)


@dataclass(frozen=True)
class FeasibleSet:
    """A closed convex set {v : v - f in K0} given by constraints and a shift.

    With ``shift=None`` this is the base set K0 itself.  Membership and
    projection are exact for separable constraint lists (masks and
    componentwise bounds); mixed geometries go through Dykstra.
    """

    constraints: tuple
    shift: Optional[Element] = None

    def shifted(self, f):
        if self.shift is not None:
            raise PreconditionViolation("feasible set already carries a shift")
        return FeasibleSet(self.constraints, f)

    def with_constraints(self, extra):
        return FeasibleSet(tuple(self.constraints) + tuple(extra), self.shift)

    def _shift_coords(self, dim):
        return np.zeros(dim) if self.shift is None else self.shift.coords

    def residual(self, v):
        v = np.asarray(v, dtype=float)
        w = v - self._shift_coords(v.size)
        return max((c.residual(w) for c in self.constraints), default=0.0)

    def membership(self, v, tol):
        return self.residual(v) <= tol

    def is_homogeneous(self):
        return self.shift is None and all(c.homogeneous for c in self.constraints)

    def all_separable(self):
        return all(c.separable for c in self.constraints)

    def projection_list(self, dim):
        f = self._shift_coords(dim)

        def lift(c):
            return lambda v: f + c.project(v - f)

        return [lift(c) for c in self.constraints]

    def project(self, v, cfg=SolverConfig()):
        """Euclidean projection onto the set (exact for separable lists)."""
        v = np.asarray(v, dtype=float)
        f = self._shift_coords(v.size)
        if self.all_separable():
            w = v - f
            fixed = np.zeros(v.size, dtype=bool)
            lo = np.full(v.size, -np.inf)
            hi = np.full(v.size, np.inf)
            for c in self.constraints:
                if isinstance(c, ZeroOnMask):
                    fixed |= c.mask
                elif isinstance(c, LowerBound):
                    lo = np.maximum(lo, c.psi)
                else:
                    hi = np.minimum(hi, c.phi)
            if np.any(lo > hi + 1e-15):
                raise InfeasibleProblem("componentwise bounds cross")
            if np.any(fixed & ((lo > 1e-15) | (hi < -1e-15))):
                raise InfeasibleProblem("mask-fixed coordinates violate componentwise bounds")
            w = np.clip(w, lo, hi)
            w[fixed] = 0.0
            return f + w
        projections = self.projection_list(v.size)
        return engine.dykstra(projections, v, tol=min(cfg.tol_feasibility * 1e-3, 1e-12), max_cycles=cfg.max_iterations)


@dataclass(frozen=True)
class ConeSpec:
    """A positively homogeneous feasible set with zero shift."""

    feasible: FeasibleSet

    def __post_init__(self):
        if not self.feasible.is_homogeneous():
            raise PreconditionViolation("cone constraints must be positively homogeneous with no shift")


# ---------------------------------------------------------------------------
# the Dirichlet problem


def _quadratic_weights(norm, dim):
    """Diagonal of the quadratic energy when the norm is an l2 type, else None."""
    if norm.variant == "euclidean":
        return np.ones(dim)
    if norm.variant == "weighted-lp" and norm.p == 2.0:
        return np.asarray(norm.weights, dtype=float)
    if norm.variant == "block-lp" and norm.p == 2.0:
        return np.repeat(np.asarray(norm.weights, dtype=float), norm.block_sizes)
    if norm.variant == "schatten" and norm.p == 2.0:
        return np.ones(dim)
    return None


def _solve_linear_quadratic(rel, kf, f_coords, cfg):
    """CG on the normal equations for quadratic norms over an affine set."""
    fixed = np.zeros(rel.domain_space.dimension, dtype=bool)
    for c in kf.constraints:
        fixed |= c.mask
    free = ~fixed
    d = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
    v_fix = np.where(fixed, f_coords, 0.0)

    def embed(t):
        v = v_fix.copy()
        v[free] = t
        return v

    calls = [0]

    def apply_normal(t):
        calls[0] += 1
        v = np.zeros_like(v_fix)
        v[free] = t
        return (rel.map.adjoint(d * rel.map.apply(v)))[free]

    rhs = -(rel.map.adjoint(d * rel.map.apply(v_fix)))[free]
    cg_tol = max(min(cfg.tol_objective, 1e-12), 1e-15)
    t = engine.cg_solve(apply_normal, rhs, tol=cg_tol, max_iter=cfg.max_iterations)
    v = embed(t)
    g = rel.map.apply(v)
    return v, g, calls[0]


def _separable_bounds(kf, dim):
    """(fixed mask, fixed values, lower, upper) when all constraints are separable."""
    f = kf._shift_coords(dim)
    fixed = np.zeros(dim, dtype=bool)
    lo = np.full(dim, -np.inf)
    hi = np.full(dim, np.inf)
    for c in kf.constraints:
        if isinstance(c, ZeroOnMask):
            fixed |= c.mask
        elif isinstance(c, LowerBound):
            lo = np.maximum(lo, c.psi)
        else:
            hi = np.minimum(hi, c.phi)
    return fixed, f, lo + f, hi + f


def _polish_box_qp(rel, kf, v, cfg):
    """Active-set refinement for quadratic energies over componentwise bounds.

    Starting from a (near) solution, repeatedly solves the equality QP on
    the inactive set by conjugate gradients and re-clips; accepts the
    result only if feasible and not worse.  Exact once the active set
    settles, which it does in a round or two when the start is good.
    """
    d = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
    fixed, fvals, lo, hi = _separable_bounds(kf, v.size)

    def energy(u):
        g = rel.map.apply(u)
        return float(g @ (d * g))

    best = v
    fbest = energy(v)
    eps = 1e-10 * (1.0 + float(np.max(np.abs(v))))
    for _ in range(40):
        active_lo = (~fixed) & (best <= lo + eps)
        active_hi = (~fixed) & (best >= hi - eps)
        pinned = fixed | active_lo | active_hi
        free = ~pinned
        if not np.any(free):
            break
        v_pin = np.where(fixed, fvals, 0.0)
        v_pin[active_lo] = lo[active_lo]
        v_pin[active_hi] = hi[active_hi]

        def apply_normal(t):
            u = np.zeros_like(best)
            u[free] = t
            return (rel.map.adjoint(d * rel.map.apply(u)))[free]

        rhs = -(rel.map.adjoint(d * rel.map.apply(v_pin)))[free]
        try:
            t = engine.cg_solve(apply_normal, rhs, tol=1e-13, max_iter=cfg.max_iterations)
        except (NonConvergence, ValueError):
            break
        cand = v_pin.copy()
        cand[free] = t
        cand = np.clip(cand, lo, hi)
        cand[fixed] = fvals[fixed]
        fcand = energy(cand)
        if fcand <= fbest * (1.0 + 1e-14) + 1e-300:
            moved = float(np.max(np.abs(cand - best)))
            best, fbest = cand, min(fcand, fbest)
            if moved <= 1e-14 * (1.0 + float(np.max(np.abs(best)))):
                break
        else:
            break
    return best


def _solve_linear_descent(rel, kf, f_coords, cfg, norm_cap):
    wnorm = rel.target_space.norm

    def value(v):
        nv = float(np.linalg.norm(v))
        if nv > norm_cap:
            raise NonConvergence("iterate norm %.3e exceeded the boundedness cap %.3e "
                                 "(is the constraint set a Poincare set?)" % (nv, norm_cap))
        return energy_value(wnorm, rel.map.apply(v))

    def gradient(v):
        return rel.map.adjoint(energy_gradient(wnorm, rel.map.apply(v)))

    def project(v):
        return kf.project(v, cfg)

    start = kf.project(f_coords, cfg)
    v, _, iters, converged = engine.projected_descent(
        value, gradient, project, start,
        tol_objective=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed,
    )
    if not converged:
        raise NonConvergence("dirichlet descent did not meet the objective tolerance", best=v)
    quad = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
    if quad is not None and kf.all_separable():
        v = _polish_box_qp(rel, kf, v, cfg)
    return v, rel.map.apply(v), iters


def _solve_joint(rel, kf, f_coords, cfg, norm_cap):
    """Joint (element, gradient, aux) solve for inequality-type relations."""
    coupling = rel.coupling_halfspaces()
    if coupling is None:
        raise UnsupportedProblem("this relation variant has no joint Dirichlet formulation")
    n_aux, halfspaces, g_nonneg = coupling
    nv = rel.domain_space.dimension
    ng = rel.target_space.dimension
    ntot = nv + ng + n_aux
    wnorm = rel.target_space.norm

    projections = []
    kf_projs = kf.projection_list(nv)

    def lift_v(proj):
        def inner(z):
            out = z.copy()
            out[:nv] = proj(z[:nv])
            return out
        return inner

    projections.extend(lift_v(p) for p in kf_projs)
    for a, b in halfspaces:
        a_full = np.zeros(ntot)
        a_full[: a.size] = a
        projections.append(engine.project_halfspace(a_full, b))
    if g_nonneg:
        def orthant(z):
            out = z.copy()
            out[nv:nv + ng] = np.maximum(out[nv:nv + ng], 0.0)
            return out
        projections.append(orthant)

    def project(z):
        return engine.dykstra(projections, z, tol=min(cfg.tol_feasibility * 1e-3, 1e-12),
                              max_cycles=max(cfg.max_iterations, 20000))

    def value(z):
        nvz = float(np.linalg.norm(z[:nv]))
        if nvz > norm_cap:
            raise NonConvergence("iterate norm %.3e exceeded the boundedness cap %.3e "
                                 "(is the constraint set a Poincare set?)" % (nvz, norm_cap))
        return energy_value(wnorm, z[nv:nv + ng])

    def gradient(z):
        out = np.zeros_like(z)
        out[nv:nv + ng] = energy_gradient(wnorm, z[nv:nv + ng])
        return out

    v0 = kf.project(f_coords, cfg)
    g0 = rel.minimal_gradient_coords(v0, cfg)
    z0 = np.zeros(ntot)
    z0[:nv] = v0
    z0[nv:nv + ng] = g0
    if n_aux:
        z0[nv + ng:] = _initial_aux(rel, v0, n_aux)
    z, _, iters, converged = engine.projected_descent(
        value, gradient, project, z0,
        tol_objective=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed,
    )
    if not converged:
        raise NonConvergence("joint dirichlet descent did not meet the objective tolerance", best=z)
    return z[:nv], z[nv:nv + ng], iters


def _initial_aux(rel, v, n_aux):
    filler = getattr(rel, "initial_aux", None)
    if filler is None:
        return np.zeros(n_aux)
    return filler(v)


def _relation_residual(rel, v, g, kf):
    resid = kf.residual(v)
    coupling = rel.coupling_halfspaces()
    if coupling is not None:
        n_aux, halfspaces, g_nonneg = coupling
        z = np.concatenate([v, g, _initial_aux(rel, v, n_aux)]) if n_aux else np.concatenate([v, g])
        for a, b in halfspaces:
            resid = max(resid, b - float(a @ z[: a.size]))
        if g_nonneg:
            resid = max(resid, float(np.max(-g, initial=0.0)))
    return resid


def solve_dirichlet(rel, k0, f, cfg=SolverConfig(), norm_cap=None):
    """Minimize the minimal-gradient norm over K_f = K0 + f.

    ``k0`` must be nonempty, closed, and convex; it should be a Poincare
    set for the relation, or the caller asserts boundedness of minimizing
    sequences (iterate norms are monitored against ``norm_cap`` either
    way).  Returns a SolveReport; the minimizer itself is not contractual
    when the problem has several solutions, but the minimal gradient and
    the objective are.

    Raises
    ------
    InfeasibleProblem
        If K_f is empty (detected by a feasibility projection).
    NonConvergence
        If the iteration cap is reached, carrying the best iterate.
    """
    if f.space.dimension != rel.domain_space.dimension:
        raise DimensionMismatch("boundary element does not match the relation domain")
    kf = k0.shifted(f)
    if norm_cap is None:
        norm_cap = 1e9 * (1.0 + norm_value(rel.domain_space.norm, f.coords))

    try:
        start = kf.project(f.coords, cfg)
    except NonConvergence as exc:
        raise InfeasibleProblem("feasibility projection did not converge; K_f is likely empty") from exc
    feas0 = kf.residual(start)
    if feas0 > max(cfg.tol_feasibility, 1e-9) * 10.0:
        raise InfeasibleProblem("K_f appears empty (projection residual %.3e)" % feas0)

    if isinstance(rel, LinearGraphRelation):
        quad = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
        affine = all(isinstance(c, ZeroOnMask) for c in kf.constraints)
        if quad is not None and affine:
            v, g, iters = _solve_linear_quadratic(rel, kf, f.coords, cfg)
        else:
            v, g, iters = _solve_linear_descent(rel, kf, f.coords, cfg, norm_cap)
    else:
        v, g, iters = _solve_joint(rel, kf, f.coords, cfg, norm_cap)

    resid = _relation_residual(rel, v, g, kf)
    converged = resid <= cfg.tol_feasibility
    report = SolveReport(
        minimizer=Element(rel.domain_space, v),
        minimal_gradient=Element(rel.target_space, g),
        objective=norm_value(rel.target_space.norm, g),
        iterations=iters,
        converged=converged,
        feasibility_residual=resid,
    )
    if not converged:
        raise NonConvergence("solution residual %.3e above feasibility tolerance" % resid,
                             best=report, residual=resid)
    return report


def _obstacle_constraint(space, bound, upper=False):
    if space.kind == "symmetric-matrix":
        return PsdUpper(bound) if upper else PsdLower(bound)
    return UpperBound(bound) if upper else LowerBound(bound)


def check_feasible_obstacle(k0, f, psi, cfg=SolverConfig()):
    """True iff some v in K0 satisfies v >= psi - f."""
    target = psi.coords - f.coords
    k = k0.with_constraints([_obstacle_constraint(f.space, target)])
    try:
        v = k.project(target, cfg)
    except (NonConvergence, InfeasibleProblem):
        return False
    return k.residual(v) <= max(cfg.tol_feasibility, 1e-9) * 10.0


def solve_obstacle(rel, k0, f, psi, cfg=SolverConfig(), norm_cap=None):
    """Dirichlet problem constrained below by the obstacle psi.

    Implemented literally as a Dirichlet solve over the base set
    ``{v in K0 : v + f >= psi}``, so objectives agree bit-for-bit with the
    reduced problem.
    """
    if not check_feasible_obstacle(k0, f, psi, cfg):
        raise InfeasibleProblem(
            "obstacle problem infeasible: no v in K0 with v >= psi - f (check_feasible_obstacle)")
    k = k0.with_constraints([_obstacle_constraint(f.space, psi.coords - f.coords)])
    return solve_dirichlet(rel, k, f, cfg, norm_cap=norm_cap)


def solve_multi_obstacle(rel, k0, f, lower=(), upper=(), cfg=SolverConfig(), norm_cap=None):
    """Dirichlet problem with finitely many lower and upper obstacles."""
    extra = [_obstacle_constraint(f.space, psi.coords - f.coords) for psi in lower]
    extra += [_obstacle_constraint(f.space, phi.coords - f.coords, upper=True) for phi in upper]
    k = k0.with_constraints(extra)
    try:
        return solve_dirichlet(rel, k, f, cfg, norm_cap=norm_cap)
    except InfeasibleProblem:
        raise InfeasibleProblem("multi-obstacle constraint set is empty")


# ---------------------------------------------------------------------------
# the Rayleigh quotient


def rayleigh_quotient(rel, u, cfg=SolverConfig()):
    """||g_u||_W / ||u||_V, evaluated on the unit-normalized representative.

    Normalizing first makes the evaluation invariant under exact rescaling
    of the argument.
    """
    nv = norm_value(rel.domain_space.norm, u.coords)
    if nv == 0.0:
        raise PreconditionViolation("rayleigh quotient undefined at zero")
    w = u.coords / nv
    g = rel.minimal_gradient_coords(w, cfg)
    return norm_value(rel.target_space.norm, g) / norm_value(rel.domain_space.norm, w)


def _rayleigh_linear_quadratic(rel, cone, cfg):
    fixed = np.zeros(rel.domain_space.dimension, dtype=bool)
    for c in cone.feasible.constraints:
        fixed |= c.mask
    free = ~fixed
    n_free = int(np.sum(free))
    dv = _quadratic_weights(rel.domain_space.norm, rel.domain_space.dimension)
    dw = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
    scale = np.sqrt(dv[free])

    def apply_B(s):
        v = np.zeros(rel.domain_space.dimension)
        v[free] = s / scale
        fv = rel.map.apply(v)
        return (rel.map.adjoint(dw * fv))[free] / scale

    try:
        lam, s = engine.inverse_power_smallest(
            apply_B, n_free, tol=max(cfg.tol_objective, 1e-14), seed=cfg.seed)
    except ValueError as exc:
        # a singular numerator operator means some nonzero cone element has
        # zero minimal gradient
        raise RegularityViolation("quotient vanishes on a nonzero cone element") from exc
    if lam <= (10.0 * cfg.tol_feasibility) ** 2:
        raise RegularityViolation("quotient vanishes on a nonzero cone element", witness=s)
    u = np.zeros(rel.domain_space.dimension)
    u[free] = s / scale
    u = u / norm_value(rel.domain_space.norm, u)
    return u, float(np.sqrt(lam))


def minimize_rayleigh(rel, cone, cfg=SolverConfig()):
    """Minimize ||g_u||_W / ||u||_V over a regular Rellich-Kondrachov cone.

    Returns ``(u, value)`` with ``||u||_V = 1`` up to rounding.  Raises
    RegularityViolation when a nonzero iterate with vanishing minimal
    gradient appears (the cone is then not regular, so no positive infimum
    exists).
    """
    vq = _quadratic_weights(rel.domain_space.norm, rel.domain_space.dimension)
    wq = _quadratic_weights(rel.target_space.norm, rel.target_space.dimension)
    subspace = all(isinstance(c, ZeroOnMask) for c in cone.feasible.constraints)
    if isinstance(rel, LinearGraphRelation) and vq is not None and wq is not None and subspace:
        u, value = _rayleigh_linear_quadratic(rel, cone, cfg)
        return Element(rel.domain_space, u), value

    if isinstance(rel, LinearGraphRelation):
        def numerator(u):
            return norm_value(rel.target_space.norm, rel.map.apply(u))

        def num_gradient(u):
            g = rel.map.apply(u)
            e = energy_value(rel.target_space.norm, g)
            p = rel.target_space.norm.p
            if e <= 0.0:
                return np.zeros_like(u)
            return rel.map.adjoint(energy_gradient(rel.target_space.norm, g)) * (e ** (1.0 / p - 1.0) / p)
    elif isinstance(rel, EnvelopeRelation) and rel.abs_linear_rows is not None:
        rows_per_output = rel.abs_linear_rows

        def numerator(u):
            return norm_value(rel.target_space.norm, rel.minimal_gradient_coords(u, cfg))

        def num_gradient(u):
            g = rel.minimal_gradient_coords(u, cfg)
            e = energy_value(rel.target_space.norm, g)
            p = rel.target_space.norm.p
            if e <= 0.0:
                return np.zeros_like(u)
            outer = energy_gradient(rel.target_space.norm, g) * (e ** (1.0 / p - 1.0) / p)
            grad = np.zeros_like(u)
            for j, rows in enumerate(rows_per_output):
                vals = [float(r @ u) for r in rows]
                k = int(np.argmax([abs(x) for x in vals]))
                grad += outer[j] * np.sign(vals[k]) * rows[k]
            return grad
    else:
        raise UnsupportedProblem("rayleigh minimization needs a linear-graph or structured envelope relation")

    def norm_v(u):
        return norm_value(rel.domain_space.norm, u)

    def project_cone(u):
        return cone.feasible.project(u, cfg)

    u, value, _ = engine.rayleigh_iterate(
        numerator, num_gradient, norm_v, project_cone, rel.domain_space.dimension,
        tol=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed)
    if value <= 10.0 * cfg.tol_feasibility:
        raise RegularityViolation("quotient vanishes on a nonzero cone element", witness=u)
    u = u / norm_value(rel.domain_space.norm, u)
    return Element(rel.domain_space, u), float(value)


@dataclass(frozen=True)
class RKConeReport:
    scaling_closed: bool
    regular: bool
    kernel_witnesses: tuple
    poincare_constant: float


def verify_rk_cone(rel, cone, samples, cfg=SolverConfig()):
    """Empirical report on a claimed regular Rellich-Kondrachov cone.

    Checks positive-scaling closure on the samples, searches them for
    regularity violations (nonzero elements with vanishing minimal
    gradient), and reports the induced empirical Poincare constant.
    """
    scaling_ok = True
    witnesses = []
    constant = 0.0
    tol = max(cfg.tol_feasibility, 1e-12)
    for u in samples:
        for alpha in (0.5, 2.0):
            if not cone.feasible.membership(alpha * u.coords, tol * (1.0 + alpha * u.norm())):
                scaling_ok = False
        nu = u.norm()
        g = rel.minimal_gradient_coords(u.coords, cfg)
        ng = norm_value(rel.target_space.norm, g)
        if nu == 0.0:
            continue
        if ng <= tol * max(1.0, nu):
            witnesses.append(u)
        else:
            constant = max(constant, nu / ng)
    regular = not witnesses
    return RKConeReport(
        scaling_closed=scaling_ok,
        regular=regular,
        kernel_witnesses=tuple(witnesses),
        poincare_constant=float("inf") if witnesses else constant,
    )
