"""Euclidean grid instantiation: p-Dirichlet energies and related solves.

Fields live on rectangular grids with spacing h.  Gradients are forward
differences; the energy sums per-cell gradient magnitudes over all nodes
whose full forward stencil lies in the grid (so affine data reproduces
its continuum energy exactly).  Dirichlet data enters through a boundary
mask: masked nodes are fixed, the rest are free unknowns.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import variational
from .core import (
    Element,
    EnvelopeRelation,
    LinearGraphRelation,
    LinearMap,
    SolverConfig,
    SpaceDescriptor,
    block_lp_norm,
    energy_gradient,
    energy_value,
    lp_norm,
)
from .errors import PreconditionViolation


@dataclass(frozen=True)
class GridDomain:
    """A rectangular grid with an interior mask and optional boundary data.

    ``interior`` marks the free nodes; everything else is fixed to
    ``boundary_values`` during solves.  Interior nodes must have all their
    axis neighbors inside the grid.
    """

    dims: tuple
    h: float
    interior: np.ndarray
    boundary_values: Optional[np.ndarray] = None
    origin: tuple = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        interior = np.array(self.interior, dtype=bool).reshape(dims)
        interior.setflags(write=False)
        object.__setattr__(self, "interior", interior)
        for k, d in enumerate(dims):
            idx = np.nonzero(interior)
            if idx[0].size and (np.any(idx[k] == 0) or np.any(idx[k] == d - 1)):
                raise ValueError("interior nodes must have all axis neighbors inside the grid")
        if self.boundary_values is not None:
            bv = np.array(self.boundary_values, dtype=float).reshape(dims)
            bv.setflags(write=False)
            object.__setattr__(self, "boundary_values", bv)
        origin = self.origin if self.origin is not None else tuple(0.0 for _ in dims)
        object.__setattr__(self, "origin", tuple(float(x) for x in origin))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def n_nodes(self):
        return int(np.prod(self.dims))

    def node_positions(self):
        axes = [self.origin[k] + self.h * np.arange(d) for k, d in enumerate(self.dims)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def cell_mask(self):
        """Nodes whose full forward stencil lies in the grid."""
        m = np.ones(self.dims, dtype=bool)
        for k, d in enumerate(self.dims):
            idx = [slice(None)] * self.ndim
            idx[k] = slice(d - 1, d)
            m[tuple(idx)] = False
        return m


def interval_domain(n_nodes, h, left=0.0, right=0.0, origin=0.0):
    """1-D grid with the two end nodes fixed to the given values."""
    interior = np.zeros(n_nodes, dtype=bool)
    interior[1:-1] = True
    bv = np.zeros(n_nodes)
    bv[0], bv[-1] = left, right
    return GridDomain((n_nodes,), h, interior, bv, (origin,))


def annulus_domain(h, half_width=2.5, inner=1.0, outer=2.0):
    """Square grid covering the annulus inner < |x| < outer in the plane.

    Nodes with |x| <= inner are fixed to 1, nodes with |x| >= outer to 0,
    and the open annulus nodes are free.
    """
    n = int(round(2 * half_width / h)) + 1
    dims = (n, n)
    axes = np.arange(n) * h - half_width
    xx, yy = np.meshgrid(axes, axes, indexing="ij")
    r = np.sqrt(xx ** 2 + yy ** 2)
    interior = (r > inner) & (r < outer)
    interior[0, :] = interior[-1, :] = False
    interior[:, 0] = interior[:, -1] = False
    bv = np.where(r <= inner, 1.0, 0.0)
    return GridDomain(dims, h, interior, bv, (-half_width, -half_width))


@dataclass(frozen=True)
class CoefficientField:
    """Scalar weight w(x) > 0 per node, or an elliptic matrix A(x) per node."""

    variant: str
    values: np.ndarray

    def __post_init__(self):
        if self.variant not in ("scalar", "matrix"):
            raise ValueError("variant must be scalar or matrix")
        v = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        if self.variant == "scalar":
            if np.any(v <= 0.0):
                raise ValueError("scalar weight must be strictly positive")
        else:
            if v.ndim < 2 or v.shape[-1] != v.shape[-2]:
                raise ValueError("matrix field needs trailing square matrices")
            flat = v.reshape(-1, v.shape[-1], v.shape[-1])
            for a in flat:
                sv = np.sqrt(np.maximum(np.linalg.eigvalsh(a.T @ a), 0.0))
                if sv.min() <= 0.0:
                    raise ValueError("matrix field must be uniformly elliptic")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def scalar_weight(values):
    return CoefficientField("scalar", np.asarray(values, dtype=float))


def matrix_coefficients(values):
    return CoefficientField("matrix", np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# differences and energies


def grid_gradient(u, dom):
    """Forward-difference gradient at every node, one-sided at the far face.

    Returns an (n_nodes, ndim) array.
    """
    U = np.asarray(u, dtype=float).reshape(dom.dims)
    out = np.empty(dom.dims + (dom.ndim,))
    for k, d in enumerate(dom.dims):
        g = np.empty(dom.dims)
        fwd_hi = [slice(None)] * dom.ndim
        fwd_lo = [slice(None)] * dom.ndim
        fwd_hi[k] = slice(1, d)
        fwd_lo[k] = slice(0, d - 1)
        diff = (U[tuple(fwd_hi)] - U[tuple(fwd_lo)]) / dom.h
        g[tuple(fwd_lo)] = diff
        last = [slice(None)] * dom.ndim
        last[k] = slice(d - 1, d)
        prev = [slice(None)] * dom.ndim
        prev[k] = slice(d - 2, d - 1)
        g[tuple(last)] = (U[tuple(last)] - U[tuple(prev)]) / dom.h
        out[..., k] = g
    return out.reshape(dom.n_nodes, dom.ndim)


def _cell_core(dom):
    return tuple(slice(0, d - 1) for d in dom.dims)


def cell_gradient_map(dom, coeff=None):
    """Linear operator: node field -> per-cell (transformed) gradient stack."""
    core = _cell_core(dom)
    n_cells = int(np.prod([d - 1 for d in dom.dims]))
    ndim = dom.ndim
    h = dom.h
    amat = None
    if coeff is not None and coeff.variant == "matrix":
        amat = coeff.values.reshape(dom.dims + (ndim, ndim))[core].reshape(n_cells, ndim, ndim)

    def apply(x):
        U = np.asarray(x, dtype=float).reshape(dom.dims)
        grads = np.empty((n_cells, ndim))
        for k in range(ndim):
            plus = list(core)
            plus[k] = slice(1, dom.dims[k])
            grads[:, k] = ((U[tuple(plus)] - U[core]) / h).reshape(-1)
        if amat is not None:
            grads = np.einsum("nij,nj->ni", amat, grads)
        return grads.reshape(-1)

    def adjoint(y):
        grads = np.asarray(y, dtype=float).reshape(n_cells, ndim)
        if amat is not None:
            grads = np.einsum("nji,nj->ni", amat, grads)
        out = np.zeros(dom.dims)
        cell_shape = tuple(d - 1 for d in dom.dims)
        for k in range(ndim):
            gk = grads[:, k].reshape(cell_shape) / h
            plus = list(core)
            plus[k] = slice(1, dom.dims[k])
            np.add.at(out, tuple(plus), gk)
            np.add.at(out, core, -gk)
        return out.reshape(-1)

    return LinearMap(dom.n_nodes, n_cells * ndim, apply, adjoint)


def _cell_weights(dom, coeff):
    """Per-cell measure factor: w(x) h^n for scalar weights, h^n otherwise."""
    scale = dom.h ** dom.ndim
    n_cells = int(np.prod([d - 1 for d in dom.dims]))
    if coeff is not None and coeff.variant == "scalar":
        w = coeff.values.reshape(dom.dims)[_cell_core(dom)].reshape(-1)
        return w * scale
    return np.full(n_cells, scale)


def _node_weights(dom, coeff):
    scale = dom.h ** dom.ndim
    if coeff is not None and coeff.variant == "scalar":
        return coeff.values.reshape(-1) * scale
    return np.full(dom.n_nodes, scale)


def v_space(dom, p, coeff=None):
    return SpaceDescriptor("euclidean-grid", dom.n_nodes, lp_norm(p, _node_weights(dom, coeff)))


def gradient_w_space(dom, p, coeff=None):
    w = _cell_weights(dom, coeff)
    return SpaceDescriptor(
        "euclidean-grid", w.size * dom.ndim,
        block_lp_norm(p, w, np.full(w.size, dom.ndim)))


def dirichlet_relation(dom, p, coeff=None):
    """Linear-graph relation u -> (coeff-transformed) forward gradient field."""
    return LinearGraphRelation(v_space(dom, p, coeff), gradient_w_space(dom, p, coeff),
                               cell_gradient_map(dom, coeff))


def scalar_envelope_relation(dom, p, coeff=None):
    """Envelope relation g >= |grad u| with a scalar per-cell gradient modulus."""
    fmap = cell_gradient_map(dom, coeff)
    n_cells = int(np.prod([d - 1 for d in dom.dims]))
    w = SpaceDescriptor("euclidean-grid", n_cells, lp_norm(p, _cell_weights(dom, coeff)))

    def floor(u):
        g = fmap.apply(u).reshape(n_cells, dom.ndim)
        return np.sqrt(np.sum(g * g, axis=1))

    return EnvelopeRelation(v_space(dom, p, coeff), w, floor)


def p_energy(u, dom, p, coeff=None):
    """Sum over cells of the (transformed) gradient magnitude to the p, times h^n."""
    if p <= 1.0:
        raise PreconditionViolation("exponent must exceed 1")
    rel = dirichlet_relation(dom, p, coeff)
    return energy_value(rel.target_space.norm, rel.map.apply(np.asarray(u, dtype=float).reshape(-1)))


def _boundary_lift(dom):
    if dom.boundary_values is None:
        raise PreconditionViolation("domain carries no boundary values")
    mask = ~dom.interior.reshape(-1)
    f = np.where(mask, dom.boundary_values.reshape(-1), 0.0)
    return mask, f


def solve_p_laplace(dom, p, coeff=None, cfg=SolverConfig()):
    """Minimize the p-Dirichlet energy over fields matching the boundary data.

    Realizes the Dirichlet problem for the grid gradient relation with the
    zero-boundary subspace as base set; p = 2 goes through conjugate
    gradients, other exponents through projected descent.
    """
    mask, f = _boundary_lift(dom)
    rel = dirichlet_relation(dom, p, coeff)
    k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
    return variational.solve_dirichlet(rel, k0, Element(rel.domain_space, f), cfg)


def p_laplace_residual(u, dom, p, coeff=None):
    """Max norm of the discrete Euler-Lagrange residual at the free nodes."""
    rel = dirichlet_relation(dom, p, coeff)
    grad = rel.map.adjoint(energy_gradient(rel.target_space.norm, rel.map.apply(np.asarray(u).reshape(-1))))
    return float(np.max(np.abs(grad[dom.interior.reshape(-1)]), initial=0.0))


# ---------------------------------------------------------------------------
# maximal functions


def maximal_function(v, dom, weights=None):
    """Discrete Hardy-Littlewood maximal function over closed Euclidean balls.

    At each node the maximum of the weighted ball averages of ``v`` over
    radii 0, h, 2h, ... up to the domain diameter; the singleton ball
    guarantees M(v) >= v pointwise.
    """
    x = np.asarray(v, dtype=float).reshape(-1)
    if np.any(x < 0.0):
        raise PreconditionViolation("maximal function expects a nonnegative field")
    pos = dom.node_positions()
    mu = np.ones(dom.n_nodes) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
    d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=-1)
    diam = float(np.sqrt(d2.max(initial=0.0)))
    radii = dom.h * np.arange(0, int(np.ceil(diam / dom.h)) + 1)
    out = np.zeros(dom.n_nodes)
    for r in radii:
        inside = d2 <= r * r + 1e-12 * (1.0 + r * r)
        mass = inside @ mu
        avg = (inside @ (mu * x)) / mass
        out = np.maximum(out, avg)
    return out


def maximal_gradient_relation(dom, p, coeff=None):
    """Envelope relation g >= M(|grad u|) on the cell sub-grid."""
    fmap = cell_gradient_map(dom, coeff)
    cell_dims = tuple(d - 1 for d in dom.dims)
    n_cells = int(np.prod(cell_dims))
    sub = GridDomain(cell_dims, dom.h, np.zeros(cell_dims, dtype=bool), None, dom.origin)
    w = SpaceDescriptor("euclidean-grid", n_cells, lp_norm(p, _cell_weights(dom, coeff)))

    def floor(u):
        g = fmap.apply(u).reshape(n_cells, dom.ndim)
        return maximal_function(np.sqrt(np.sum(g * g, axis=1)), sub)

    return EnvelopeRelation(v_space(dom, p, coeff), w, floor)


# ---------------------------------------------------------------------------
# mixed zero/first-order functionals


def mixed_relation(dom, p, lam="identity"):
    """Relation u -> (Lambda u on its support, gradient on cells).

    ``lam`` is "identity" for the full zero-order term or a boolean node
    mask for a characteristic-function multiplier; an empty mask recovers
    the plain gradient relation.
    """
    if isinstance(lam, str):
        if lam != "identity":
            raise PreconditionViolation("lam must be 'identity' or a node mask")
        support = dom.interior.reshape(-1)
    else:
        support = np.asarray(lam, dtype=bool).reshape(-1) & dom.interior.reshape(-1)
    idx = np.nonzero(support)[0]
    gmap = cell_gradient_map(dom)
    n0 = idx.size
    scale = dom.h ** dom.ndim

    def apply(x):
        return np.concatenate([np.asarray(x, dtype=float)[idx], gmap.apply(x)])

    def adjoint(y):
        out = gmap.adjoint(y[n0:])
        out[idx] += y[:n0]
        return out

    wts = np.concatenate([np.full(n0, scale), _cell_weights(dom, None)])
    sizes = np.concatenate([np.ones(n0, dtype=int), np.full(_cell_weights(dom, None).size, dom.ndim)])
    w_space = SpaceDescriptor("euclidean-grid", n0 + gmap.out_dim, block_lp_norm(p, wts, sizes))
    return LinearGraphRelation(v_space(dom, p), w_space, LinearMap(dom.n_nodes, n0 + gmap.out_dim, apply, adjoint))


def solve_mixed_functional(dom, p, lam="identity", cfg=SolverConfig()):
    """Minimize the mixed functional |Lambda u|^p + |grad u|^p with boundary data."""
    mask, f = _boundary_lift(dom)
    rel = mixed_relation(dom, p, lam)
    k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
    return variational.solve_dirichlet(rel, k0, Element(rel.domain_space, f), cfg)


# ---------------------------------------------------------------------------
# the Laplacian as a gradient (fourth-order problem)


def laplacian_map(dom):
    """Standard 3/5-point discrete Laplacian at all full-stencil nodes."""
    stencil = np.ones(dom.dims, dtype=bool)
    for k, d in enumerate(dom.dims):
        if d < 3:
            raise PreconditionViolation("need at least 3 nodes per axis")
        lo = [slice(None)] * dom.ndim
        hi = [slice(None)] * dom.ndim
        lo[k] = slice(0, 1)
        hi[k] = slice(d - 1, d)
        stencil[tuple(lo)] = False
        stencil[tuple(hi)] = False
    core = tuple(slice(1, d - 1) for d in dom.dims)
    n_out = int(np.sum(stencil))
    h2 = dom.h ** 2

    def apply(x):
        U = np.asarray(x, dtype=float).reshape(dom.dims)
        lap = np.zeros(tuple(d - 2 for d in dom.dims))
        for k, d in enumerate(dom.dims):
            plus = list(core)
            minus = list(core)
            plus[k] = slice(2, d)
            minus[k] = slice(0, d - 2)
            lap += (U[tuple(plus)] - 2.0 * U[core] + U[tuple(minus)]) / h2
        return lap.reshape(-1)

    def adjoint(y):
        lap = np.asarray(y, dtype=float).reshape(tuple(d - 2 for d in dom.dims)) / h2
        out = np.zeros(dom.dims)
        for k, d in enumerate(dom.dims):
            plus = list(core)
            minus = list(core)
            plus[k] = slice(2, d)
            minus[k] = slice(0, d - 2)
            np.add.at(out, tuple(plus), lap)
            np.add.at(out, tuple(minus), lap)
            np.add.at(out, core, -2.0 * lap)
        return out.reshape(-1)

    return LinearMap(dom.n_nodes, n_out, apply, adjoint), stencil


def biharmonic_relation(dom):
    fmap, stencil = laplacian_map(dom)
    w = SpaceDescriptor("euclidean-grid", fmap.out_dim,
                        lp_norm(2.0, np.full(fmap.out_dim, dom.h ** dom.ndim)))
    return LinearGraphRelation(v_space(dom, 2.0), w, fmap)


def biharmonic_domain(dims, h, boundary_field, origin=None):
    """Grid whose two outermost layers are fixed (values and normal slope)."""
    dims = tuple(int(d) for d in dims)
    interior = np.ones(dims, dtype=bool)
    for k, d in enumerate(dims):
        if d < 5:
            raise PreconditionViolation("need at least 5 nodes per axis for two fixed layers")
        for layer in (0, 1, d - 2, d - 1):
            idx = [slice(None)] * len(dims)
            idx[k] = slice(layer, layer + 1)
            interior[tuple(idx)] = False
    return GridDomain(dims, h, interior, np.asarray(boundary_field, dtype=float).reshape(dims),
                      origin if origin is not None else tuple(0.0 for _ in dims))


def solve_biharmonic(dom, cfg=SolverConfig()):
    """Minimize the squared discrete Laplacian with two boundary layers fixed."""
    depth = np.full(dom.dims, np.iinfo(np.int64).max, dtype=np.int64)
    for k, d in enumerate(dom.dims):
        idx = np.arange(d)
        dist = np.minimum(idx, d - 1 - idx)
        shape = [1] * dom.ndim
        shape[k] = d
        depth = np.minimum(depth, dist.reshape(shape))
    if np.any(dom.interior & (depth < 2)):
        raise PreconditionViolation("biharmonic solves need the two outermost layers fixed")
    mask, f = _boundary_lift(dom)
    rel = biharmonic_relation(dom)
    k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
    return variational.solve_dirichlet(rel, k0, Element(rel.domain_space, f), cfg)
