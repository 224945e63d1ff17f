"""Gradient-space core: spaces, norms, elements, relations, minimal gradients.

A gradient relation pairs elements ``u`` of a finite-dimensional normed
space V with admissible gradients ``g`` in a second space W; the relation
is closed under pair addition and positive scaling.  Every ``u`` with at
least one gradient has a unique norm-minimal one (the norms here all have
exponent 1 < p < oo, hence are strictly convex), and the operations in
this module compute it, the induced Sobolev-style norm
``||u||_V + ||g_u||_W``, and empirical Poincare constants.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import engine
from .errors import DimensionMismatch, PreconditionViolation

SPACE_KINDS = ("euclidean-grid", "metric-points", "graph-edges", "symmetric-matrix", "toy-complex")


def _frozen(arr):
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class NormSpec:
    """Norm choice for a space.

    Variants: ``weighted-lp`` (componentwise), ``block-lp`` (lp norm of
    per-block Euclidean lengths, for vector fields sampled per node),
    ``schatten`` (matrix spaces), and plain ``euclidean``.  The exponent
    must satisfy p > 1 so the space is reflexive and strictly convex; p = 1
    and p = inf are rejected at construction.
    """

    variant: str
    p: float = 2.0
    weights: Optional[np.ndarray] = None
    block_sizes: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant not in ("weighted-lp", "block-lp", "schatten", "euclidean"):
            raise ValueError("unknown norm variant %r" % (self.variant,))
        if not (1.0 < float(self.p) < np.inf):
            raise ValueError("norm exponent must satisfy 1 < p < inf, got %r" % (self.p,))
        if self.variant in ("weighted-lp", "block-lp"):
            if self.weights is None:
                raise ValueError("%s requires weights" % self.variant)
            w = _frozen(self.weights)
            if w.ndim != 1 or not np.all(w > 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be strictly positive finite")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ValueError("weights only apply to weighted-lp/block-lp")
        if self.variant == "block-lp":
            if self.block_sizes is None:
                raise ValueError("block-lp requires block sizes")
            bs = np.array(self.block_sizes, dtype=int)
            bs.setflags(write=False)
            if bs.size != self.weights.size or not np.all(bs >= 1):
                raise ValueError("one positive block size per weight required")
            object.__setattr__(self, "block_sizes", bs)
        elif self.block_sizes is not None:
            raise ValueError("block sizes only apply to block-lp")


def euclidean_norm():
    return NormSpec("euclidean", 2.0)


def lp_norm(p, weights):
    return NormSpec("weighted-lp", float(p), np.asarray(weights, dtype=float))


def block_lp_norm(p, weights, block_sizes):
    return NormSpec("block-lp", float(p), np.asarray(weights, dtype=float), np.asarray(block_sizes, dtype=int))


def schatten_spec(p):
    return NormSpec("schatten", float(p))


@dataclass(frozen=True)
class SpaceDescriptor:
    """A finite-dimensional carrier: kind, coordinate count, and norm.

    ``symmetric-matrix`` spaces hold n x n matrices in row-major coordinates
    (dimension is a perfect square); the schatten norm is only valid there.
    """

    kind: str
    dimension: int
    norm: NormSpec

    def __post_init__(self):
        if self.kind not in SPACE_KINDS:
            raise ValueError("unknown space kind %r" % (self.kind,))
        if int(self.dimension) < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.norm.variant == "schatten":
            if self.kind != "symmetric-matrix":
                raise ValueError("schatten norm is only valid for symmetric-matrix spaces")
        if self.kind == "symmetric-matrix":
            side = int(round(np.sqrt(self.dimension)))
            if side * side != self.dimension:
                raise ValueError("symmetric-matrix dimension must be a perfect square")
        if self.norm.variant == "weighted-lp" and self.norm.weights.size != self.dimension:
            raise ValueError("weight vector length must equal dimension")
        if self.norm.variant == "block-lp" and int(np.sum(self.norm.block_sizes)) != self.dimension:
            raise ValueError("block sizes must sum to the dimension")

    @property
    def matrix_side(self):
        return int(round(np.sqrt(self.dimension)))


def euclidean_space(n, kind="euclidean-grid"):
    return SpaceDescriptor(kind, n, euclidean_norm())


def lp_space(n, p, weights, kind="euclidean-grid"):
    return SpaceDescriptor(kind, n, lp_norm(p, weights))


def matrix_space(side, p=2.0):
    return SpaceDescriptor("symmetric-matrix", side * side, schatten_spec(p))


@dataclass(frozen=True)
class Element:
    """A coordinate vector tagged with its space.

    Obstacles living only in the ambient space use the same carrier with
    ``ambient=True``; nothing beyond finiteness is required of them.
    """

    space: SpaceDescriptor
    coords: np.ndarray
    ambient: bool = False

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.ndim != 1 or c.size != self.space.dimension:
            raise DimensionMismatch(
                "coords length %d does not match space dimension %d" % (c.size, self.space.dimension)
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coords must be finite")
        object.__setattr__(self, "coords", c)

    def norm(self):
        return norm_value(self.space.norm, self.coords)


def element(space, coords, ambient=False):
    return Element(space, np.asarray(coords, dtype=float), ambient=ambient)


# ---------------------------------------------------------------------------
# norm evaluation and smooth p-th-power energies


def _singular_values(flat, side):
    a = np.asarray(flat, dtype=float).reshape(side, side)
    if np.allclose(a, a.T, rtol=0.0, atol=1e-13 * (1.0 + np.abs(a).max())):
        w, _ = engine.jacobi_eigh(a)
        return np.abs(w)
    w, _ = engine.jacobi_eigh(a.T @ a)
    return np.sqrt(np.maximum(w, 0.0))


def _block_lengths(norm, x):
    if np.all(norm.block_sizes == norm.block_sizes[0]):
        k = int(norm.block_sizes[0])
        return np.sqrt(np.sum(x.reshape(-1, k) ** 2, axis=1))
    ends = np.cumsum(norm.block_sizes)
    starts = ends - norm.block_sizes
    return np.array([np.linalg.norm(x[s:e]) for s, e in zip(starts, ends)])


def norm_value(norm, coords):
    """Evaluate a NormSpec at a coordinate vector."""
    x = np.asarray(coords, dtype=float)
    if norm.variant == "euclidean":
        return float(np.linalg.norm(x))
    if norm.variant == "weighted-lp":
        return float(np.sum(norm.weights * np.abs(x) ** norm.p) ** (1.0 / norm.p))
    if norm.variant == "block-lp":
        return float(np.sum(norm.weights * _block_lengths(norm, x) ** norm.p) ** (1.0 / norm.p))
    side = int(round(np.sqrt(x.size)))
    sv = _singular_values(x, side)
    return float(np.sum(sv ** norm.p) ** (1.0 / norm.p))


def energy_value(norm, coords):
    """The p-th power of the norm; the smooth objective used by solvers."""
    x = np.asarray(coords, dtype=float)
    if norm.variant == "euclidean":
        return float(x @ x)
    if norm.variant == "weighted-lp":
        return float(np.sum(norm.weights * np.abs(x) ** norm.p))
    if norm.variant == "block-lp":
        return float(np.sum(norm.weights * _block_lengths(norm, x) ** norm.p))
    side = int(round(np.sqrt(x.size)))
    sv = _singular_values(x, side)
    return float(np.sum(sv ** norm.p))


def energy_gradient(norm, coords):
    """Gradient of ``energy_value`` (continuous for every p > 1)."""
    x = np.asarray(coords, dtype=float)
    p = norm.p
    if norm.variant == "euclidean":
        return 2.0 * x
    if norm.variant == "weighted-lp":
        return p * norm.weights * np.abs(x) ** (p - 1.0) * np.sign(x)
    if norm.variant == "block-lp":
        lengths = _block_lengths(norm, x)
        factor = np.zeros_like(lengths)
        pos = lengths > 0.0
        factor[pos] = p * norm.weights[pos] * lengths[pos] ** (p - 2.0)
        return np.repeat(factor, norm.block_sizes) * x
    side = int(round(np.sqrt(x.size)))
    a = x.reshape(side, side)
    w, q = engine.jacobi_eigh(a.T @ a)
    w = np.maximum(w, 0.0)
    # d/dA tr (A^T A)^{p/2} = p A (A^T A)^{(p-2)/2}, via functional calculus
    half = np.where(w > 1e-300, w ** ((p - 2.0) / 2.0), 0.0)
    grad = p * a @ (q * half) @ q.T
    return grad.reshape(-1)


# ---------------------------------------------------------------------------
# gradient relations


@dataclass(frozen=True)
class LinearMap:
    """Matrix-free linear operator with an adjoint, between coordinate spaces."""

    in_dim: int
    out_dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    matrix: Optional[np.ndarray] = None

    @staticmethod
    def from_matrix(mat):
        m = _frozen(mat)
        return LinearMap(m.shape[1], m.shape[0], lambda x: m @ x, lambda y: m.T @ y, matrix=m)


class GradientRelation:
    """Base class: a relation closed under pair addition and positive scaling.

    Subclasses implement membership, the minimal gradient, and (where a
    Dirichlet solve is supported) the half-space description coupling an
    element block with an explicit gradient block.
    """

    domain_space: SpaceDescriptor
    target_space: SpaceDescriptor

    def contains(self, u, g, tol):
        raise NotImplementedError

    def minimal_gradient_coords(self, u, cfg):
        raise NotImplementedError

    def negation_gradient(self, g):
        """A gradient of -u given a gradient g of u."""
        return np.asarray(g, dtype=float)

    def coupling_halfspaces(self):
        """Half-spaces {a.z >= b} tying z = (v, g, aux) to the relation.

        Returns ``(n_aux, [(a, b), ...], g_nonneg)`` or None when the joint
        Dirichlet formulation is not available for this variant.
        """
        return None


class LinearGraphRelation(GradientRelation):
    """Graph of a linear map: (u, g) belongs iff g = F(u)."""

    def __init__(self, domain_space, target_space, linear_map):
        self.domain_space = domain_space
        self.target_space = target_space
        self.map = linear_map
        if linear_map.in_dim != domain_space.dimension or linear_map.out_dim != target_space.dimension:
            raise DimensionMismatch("linear map shape does not match the spaces")

    def contains(self, u, g, tol):
        resid = norm_value(self.target_space.norm, self.map.apply(np.asarray(u, dtype=float)) - g)
        return resid <= tol

    def minimal_gradient_coords(self, u, cfg):
        return self.map.apply(np.asarray(u, dtype=float))

    def negation_gradient(self, g):
        return -np.asarray(g, dtype=float)


class EnvelopeRelation(GradientRelation):
    """Pointwise-inequality relation: (u, g) belongs iff g >= floor(u).

    ``floor`` must be sublinear for closure under sums and positive
    scaling; all built-in floors (componentwise absolute values, maxima of
    absolute linear functionals, maximal functions of gradient moduli) are.
    When the floor is a componentwise maximum of absolute linear
    functionals, pass ``abs_linear_rows`` (one list of row vectors per
    output coordinate) to enable Dirichlet solves over this relation.
    """

    def __init__(self, domain_space, target_space, floor, abs_linear_rows=None):
        self.domain_space = domain_space
        self.target_space = target_space
        self.floor = floor
        self.abs_linear_rows = abs_linear_rows

    def contains(self, u, g, tol):
        lo = np.asarray(self.floor(np.asarray(u, dtype=float)), dtype=float)
        return bool(np.all(np.asarray(g, dtype=float) >= lo - tol))

    def minimal_gradient_coords(self, u, cfg):
        # the norm is separable and strictly increasing in each |g_i|, so
        # the minimizer sits at the floor, clipped at zero from below
        return np.maximum(np.asarray(self.floor(np.asarray(u, dtype=float)), dtype=float), 0.0)

    def coupling_halfspaces(self):
        if self.abs_linear_rows is None:
            return None
        nv = self.domain_space.dimension
        ng = self.target_space.dimension
        halfspaces = []
        for j, rows in enumerate(self.abs_linear_rows):
            for row in rows:
                for sign in (1.0, -1.0):
                    a = np.zeros(nv + ng)
                    a[:nv] = -sign * np.asarray(row, dtype=float)
                    a[nv + j] = 1.0
                    halfspaces.append((a, 0.0))  # g_j >= sign * row . v
        return 0, halfspaces, False


def max_abs_envelope(domain_space, target_space, rows_per_output):
    """Envelope relation with floor_j(u) = max over rows of |row . u|."""
    rows_per_output = [[np.asarray(r, dtype=float) for r in rows] for rows in rows_per_output]

    def floor(u):
        return np.array([max(abs(float(r @ u)) for r in rows) for rows in rows_per_output])

    return EnvelopeRelation(domain_space, target_space, floor, abs_linear_rows=rows_per_output)


def toy_complex_relation():
    """The plane (Re, Im) with scalar gradients g >= max(|Re u|, |Im u|)."""
    v = SpaceDescriptor("toy-complex", 2, euclidean_norm())
    w = SpaceDescriptor("toy-complex", 1, euclidean_norm())
    return max_abs_envelope(v, w, [[np.array([1.0, 0.0]), np.array([0.0, 1.0])]])


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass(frozen=True)
class SolverConfig:
    tol_objective: float = 1e-10
    tol_feasibility: float = 1e-9
    max_iterations: int = 50000
    seed: int = 0

    def __post_init__(self):
        if not (self.tol_objective > 0 and self.tol_feasibility > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class SolveReport:
    minimizer: Element
    minimal_gradient: Element
    objective: float
    iterations: int
    converged: bool
    feasibility_residual: float


# ---------------------------------------------------------------------------
# operations


def _check_dims(rel, u, g=None):
    if u.space.dimension != rel.domain_space.dimension:
        raise DimensionMismatch("element dimension %d, relation domain %d" % (u.space.dimension, rel.domain_space.dimension))
    if g is not None and g.space.dimension != rel.target_space.dimension:
        raise DimensionMismatch("gradient dimension %d, relation target %d" % (g.space.dimension, rel.target_space.dimension))


def check_gradient_pair(rel, u, g, tol=1e-12):
    """True iff g is a gradient of u under the relation, within tol."""
    _check_dims(rel, u, g)
    return rel.contains(u.coords, g.coords, tol)


def minimal_gradient(rel, u, cfg=SolverConfig()):
    """The unique norm-minimal gradient of u."""
    _check_dims(rel, u)
    g = rel.minimal_gradient_coords(u.coords, cfg)
    return Element(rel.target_space, g)


def sobolev_norm(rel, u, cfg=SolverConfig()):
    """||u||_V plus the norm of the minimal gradient."""
    g = minimal_gradient(rel, u, cfg)
    return u.norm() + g.norm()


def scale_gradient_check(rel, u, alpha, cfg=SolverConfig()):
    """Verify positive homogeneity of the minimal gradient at one scale."""
    if alpha < 0:
        raise PreconditionViolation("alpha must be nonnegative")
    g = minimal_gradient(rel, u, cfg)
    g_scaled = minimal_gradient(rel, Element(u.space, alpha * u.coords), cfg)
    diff = norm_value(rel.target_space.norm, g_scaled.coords - alpha * g.coords)
    return diff <= cfg.tol_objective * max(1.0, alpha * g.norm())


def estimate_poincare_constant(rel, samples, cfg=SolverConfig()):
    """Empirical best constant max ||u||_V / ||g_u||_W over the samples.

    Returns ``inf`` when some sample has a vanishing minimal gradient but
    nonzero norm (no Poincare inequality can hold on a set containing it).
    """
    if not samples:
        raise PreconditionViolation("sample list must be nonempty")
    best = 0.0
    for u in samples:
        nu = u.norm()
        g = minimal_gradient(rel, u, cfg)
        ng = g.norm()
        if nu == 0.0:
            continue
        if ng <= max(cfg.tol_feasibility, 1e-12) * max(1.0, nu):
            return float("inf")
        best = max(best, nu / ng)
    return best
