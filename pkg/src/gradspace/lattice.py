"""Norm-minimizing max and min of ordered elements.

Supports the componentwise order on coordinate vectors and the PSD order
on symmetric-matrix spaces.  The maximum of two elements is the
norm-minimal common upper bound and the minimum the nearest common lower
bound to it; both are unique by strict convexity.  Componentwise with a
monotone lp norm these reduce to pointwise max and min on nonnegative
inputs, while the PSD case runs Dykstra-based variational programs and is
not a lattice (comparability of upper bounds genuinely fails there).
"""

from dataclasses import dataclass

import numpy as np

from .core import Element, SolverConfig, norm_value
from .errors import DimensionMismatch, GradspaceError, PreconditionViolation
from . import matrices


@dataclass(frozen=True)
class OrderSpec:
    """Linear preorder choice: 'componentwise' or 'psd'."""

    variant: str

    def __post_init__(self):
        if self.variant not in ("componentwise", "psd"):
            raise ValueError("unknown order variant %r" % (self.variant,))


COMPONENTWISE = OrderSpec("componentwise")
PSD = OrderSpec("psd")


def _as_matrix(e):
    side = e.space.matrix_side
    return matrices.SymmetricMatrix(0.5 * (e.coords.reshape(side, side) + e.coords.reshape(side, side).T))


def order_leq(order, a, b, tol=1e-9):
    """a <= b under the chosen order, with numerical slack.

    Componentwise: every coordinate of b - a at least -tol.  PSD: smallest
    eigenvalue of the difference at least -tol * (1 + ||b - a||_F).
    """
    if a.space.dimension != b.space.dimension:
        raise DimensionMismatch("elements live in different spaces")
    if order.variant == "componentwise":
        return bool(np.all(b.coords - a.coords >= -tol))
    side = a.space.matrix_side
    d = (b.coords - a.coords).reshape(side, side)
    return matrices.is_psd(d, tol)


def lattice_max(order, psi1, psi2, cfg=SolverConfig(), norm=None):
    """The norm-minimal element of {u : u >= psi1, u >= psi2}.

    Componentwise this is the pointwise maximum whenever the inputs are
    nonnegative somewhere-dominant (in particular on the nonnegative
    cone); for inputs with strictly negative coordinates the variational
    definition clips at zero, which is non-standard lattice behavior but
    the honest norm minimizer.  The PSD case runs alternating projections
    onto the two shifted cones.
    """
    if psi1.space.dimension != psi2.space.dimension:
        raise DimensionMismatch("elements live in different spaces")
    if norm is None:
        norm = psi1.space.norm
    if order.variant == "componentwise":
        m = np.maximum(psi1.coords, psi2.coords)
        return Element(psi1.space, np.maximum(m, 0.0))
    out = matrices.matrix_max(_as_matrix(psi1), _as_matrix(psi2), cfg, p=norm.p)
    return Element(psi1.space, out.entries.reshape(-1))


def lattice_min(order, psi1, psi2, cfg=SolverConfig(), norm=None):
    """The nearest point to lattice_max among common lower bounds.

    Defined for nonnegative inputs only: minimizes the norm distance to
    the maximum over {v : 0 <= v <= psi1, v <= psi2}.  Componentwise the
    minimizer is exactly the pointwise minimum; the PSD case always runs
    the variational program.
    """
    if psi1.space.dimension != psi2.space.dimension:
        raise DimensionMismatch("elements live in different spaces")
    if norm is None:
        norm = psi1.space.norm
    if order.variant == "componentwise":
        if np.min(psi1.coords) < -1e-12 or np.min(psi2.coords) < -1e-12:
            raise PreconditionViolation("lattice_min requires nonnegative inputs")
        return Element(psi1.space, np.minimum(psi1.coords, psi2.coords))
    out = matrices.matrix_min(_as_matrix(psi1), _as_matrix(psi2), cfg, p=norm.p)
    return Element(psi1.space, out.entries.reshape(-1))


@dataclass(frozen=True)
class BoundReport:
    comparable: bool
    dominates: bool
    norm_strictly_greater: bool


@dataclass(frozen=True)
class LubReport:
    maximum: Element
    candidates: tuple


def check_lub_property(order, psi1, psi2, candidate_bounds, cfg=SolverConfig(), norm=None, tol=1e-9):
    """Classify candidate upper bounds against the norm-minimal maximum.

    Each candidate must be an upper bound of both inputs (error
    otherwise).  Per candidate the report records whether it is comparable
    to the maximum, whether it dominates it, and whether its norm is
    strictly greater.  A comparable candidate that fails to dominate would
    contradict minimality, so that combination raises.
    """
    if norm is None:
        norm = psi1.space.norm
    m = lattice_max(order, psi1, psi2, cfg, norm=norm)
    nmax = norm_value(norm, m.coords)
    rows = []
    for v in candidate_bounds:
        if not (order_leq(order, psi1, v, tol) and order_leq(order, psi2, v, tol)):
            raise PreconditionViolation("candidate is not an upper bound of both inputs")
        dominates = order_leq(order, m, v, tol)
        below = order_leq(order, v, m, tol)
        comparable = dominates or below
        if comparable and not dominates and not order_leq(order, m, v, 10.0 * tol):
            raise GradspaceError("comparable upper bound fails to dominate the maximum")
        nv = norm_value(norm, v.coords)
        rows.append(BoundReport(
            comparable=comparable,
            dominates=dominates,
            norm_strictly_greater=nv > nmax + 1e-12 * (1.0 + nmax),
        ))
    return LubReport(maximum=m, candidates=tuple(rows))


def strict_norm_monotonicity_check(order, u, v, norm=None, tol=1e-9):
    """Strict monotonicity of the norm on the order interval 0 <= u < v."""
    if norm is None:
        norm = u.space.norm
    zero = Element(u.space, np.zeros(u.space.dimension))
    if not (order_leq(order, zero, u, tol) and order_leq(order, u, v, tol)):
        raise PreconditionViolation("need 0 <= u <= v")
    if np.allclose(u.coords, v.coords, rtol=0.0, atol=1e-14 * (1.0 + np.abs(v.coords).max(initial=0.0))):
        raise PreconditionViolation("u and v must differ")
    nu = norm_value(norm, u.coords)
    nv = norm_value(norm, v.coords)
    return nu < nv - 1e-12 * (1.0 + nv)
