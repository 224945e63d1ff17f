"""Finite metric measure spaces: Hajlasz, ball-Poincare, and graph gradients.

The Hajlasz relation couples a function with a nonnegative field through
the pairwise constraints |u(x) - u(y)| <= d(x,y) (h(x) + h(y)); the
ball-Poincare relation through one averaged inequality per closed ball
(radii run over the finitely many pairwise distances); graphs carry the
per-edge difference quotient as their pointwise minimal upper gradient.
Minimal gradients for the first two are convex programs solved by
projected descent over half-space constraints.
"""

from dataclasses import dataclass

import numpy as np

from . import engine
from .core import (
    Element,
    GradientRelation,
    SolverConfig,
    SpaceDescriptor,
    energy_gradient,
    energy_value,
    lp_norm,
    norm_value,
)
from .errors import NonConvergence, PreconditionViolation


@dataclass(frozen=True)
class FiniteMetricMeasureSpace:
    """n points with a metric matrix and a strictly positive measure."""

    d: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        mu = np.array(self.mu, dtype=float)
        n = d.shape[0]
        if d.shape != (n, n):
            raise ValueError("distance matrix must be square")
        if mu.shape != (n,) or np.any(mu <= 0.0):
            raise ValueError("measure must be strictly positive per point")
        if np.any(d < 0.0) or np.any(np.abs(np.diag(d)) > 0.0):
            raise ValueError("distances must be nonnegative with zero diagonal")
        if np.abs(d - d.T).max(initial=0.0) > 1e-12 * (1.0 + d.max(initial=0.0)):
            raise ValueError("distance matrix must be symmetric")
        off = d + np.diag(np.full(n, np.inf))
        if n > 1 and off.min() <= 0.0:
            raise ValueError("distinct points must have positive distance")
        for j in range(n):
            if np.any(d > d[:, [j]] + d[[j], :] + 1e-12 * (1.0 + d.max())):
                raise ValueError("triangle inequality fails")
        d.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self):
        return self.mu.size


def metric_space(d, mu=None):
    d = np.asarray(d, dtype=float)
    if mu is None:
        mu = np.ones(d.shape[0])
    return FiniteMetricMeasureSpace(d, mu)


def two_point_space(distance=1.0, mu=None):
    return metric_space([[0.0, distance], [distance, 0.0]], mu)


@dataclass(frozen=True)
class WeightedGraph:
    """Connected graph with positive edge lengths; edges as (i, j, length)."""

    n_vertices: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(i), int(j), float(l)) for i, j, l in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j, l in edges:
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices) or i == j:
                raise ValueError("edge endpoints out of range or equal")
            if l <= 0.0:
                raise ValueError("edge lengths must be positive")
        seen = np.zeros(self.n_vertices, dtype=bool)
        stack = [0]
        seen[0] = True
        adj = [[] for _ in range(self.n_vertices)]
        for i, j, _ in edges:
            adj[i].append(j)
            adj[j].append(i)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if not seen.all():
            raise ValueError("graph must be connected")

    def shortest_path_distances(self):
        n = self.n_vertices
        d = np.full((n, n), np.inf)
        np.fill_diagonal(d, 0.0)
        for i, j, l in self.edges:
            d[i, j] = min(d[i, j], l)
            d[j, i] = min(d[j, i], l)
        for k in range(n):
            d = np.minimum(d, d[:, [k]] + d[[k], :])
        return d


def points_space(n, p, mu):
    return SpaceDescriptor("metric-points", n, lp_norm(p, mu))


# ---------------------------------------------------------------------------
# shared convex-program backend


def _minimal_field(halfspaces, norm, n, start, cfg):
    """Minimize the lp energy over an intersection of half-spaces and the orthant."""
    projections = [engine.project_halfspace(a, b) for a, b in halfspaces]
    projections.append(lambda x: np.maximum(x, 0.0))

    def project(x):
        return engine.dykstra(projections, x, tol=min(cfg.tol_feasibility * 1e-3, 1e-12),
                              max_cycles=max(cfg.max_iterations, 20000))

    x, _, _, converged = engine.projected_descent(
        lambda z: energy_value(norm, z),
        lambda z: energy_gradient(norm, z),
        project, start,
        tol_objective=cfg.tol_objective, max_iter=cfg.max_iterations, seed=cfg.seed)
    if not converged:
        raise NonConvergence("minimal-gradient program did not converge", best=x)
    return project(x)


class HajlaszRelation(GradientRelation):
    """(u, h) related iff h >= 0 and |u_x - u_y| <= d(x,y) (h_x + h_y) for all pairs."""

    def __init__(self, X, p):
        self.X = X
        self.p = float(p)
        self.domain_space = points_space(X.n, p, X.mu)
        self.target_space = points_space(X.n, p, X.mu)
        self._pairs = [(i, j) for i in range(X.n) for j in range(i + 1, X.n)]

    def _constants(self, u):
        return np.array([abs(u[i] - u[j]) / self.X.d[i, j] for i, j in self._pairs])

    def contains(self, u, g, tol):
        g = np.asarray(g, dtype=float)
        if np.min(g, initial=0.0) < -tol:
            return False
        c = self._constants(np.asarray(u, dtype=float))
        sums = np.array([g[i] + g[j] for i, j in self._pairs])
        return bool(np.all(sums >= c - tol))

    def minimal_gradient_coords(self, u, cfg):
        u = np.asarray(u, dtype=float)
        c = self._constants(u)
        n = self.X.n
        if not self._pairs or np.max(c, initial=0.0) == 0.0:
            return np.zeros(n)
        halfspaces = []
        for (i, j), cij in zip(self._pairs, c):
            a = np.zeros(n)
            a[i] = 1.0
            a[j] = 1.0
            halfspaces.append((a, float(cij)))
        start = np.zeros(n)
        for (i, j), cij in zip(self._pairs, c):
            start[i] = max(start[i], cij / 2.0)
            start[j] = max(start[j], cij / 2.0)
        return _minimal_field(halfspaces, self.target_space.norm, n, start, cfg)

    def coupling_halfspaces(self):
        n = self.X.n
        halfspaces = []
        for i, j in self._pairs:
            for sign in (1.0, -1.0):
                a = np.zeros(2 * n)
                a[i] -= sign / self.X.d[i, j]
                a[j] += sign / self.X.d[i, j]
                a[n + i] = 1.0
                a[n + j] = 1.0
                halfspaces.append((a, 0.0))
        return 0, halfspaces, True


class BallPoincareRelation(GradientRelation):
    """(u, k) related iff every closed ball satisfies the averaged inequality.

    For each center x and radius r among the pairwise distances, the mean
    oscillation of u over B(x, r) is at most r times the mean of k over
    the dilated ball B(x, lambda r).
    """

    def __init__(self, X, p, lam=1.0):
        if lam < 1.0:
            raise PreconditionViolation("dilation must be at least 1")
        self.X = X
        self.p = float(p)
        self.lam = float(lam)
        self.domain_space = points_space(X.n, p, X.mu)
        self.target_space = points_space(X.n, p, X.mu)
        radii = np.unique(X.d[X.d > 0.0])
        balls = []
        slack = 1e-12 * (1.0 + X.d.max(initial=0.0))
        for x in range(X.n):
            for r in radii:
                inner = X.d[x] <= r + slack
                outer = X.d[x] <= self.lam * r + slack
                balls.append((float(r), inner, outer))
        self._balls = balls

    def _lhs(self, u, inner):
        mu = self.X.mu
        ub = float(np.sum(mu[inner] * u[inner]) / np.sum(mu[inner]))
        return float(np.sum(mu[inner] * np.abs(u[inner] - ub)) / np.sum(mu[inner]))

    def _rhs_coeff(self, r, outer):
        mu = self.X.mu
        coef = np.zeros(self.X.n)
        coef[outer] = r * mu[outer] / float(np.sum(mu[outer]))
        return coef

    def contains(self, u, k, tol):
        u = np.asarray(u, dtype=float)
        k = np.asarray(k, dtype=float)
        for r, inner, outer in self._balls:
            if self._lhs(u, inner) > float(self._rhs_coeff(r, outer) @ k) + tol:
                return False
        return True

    def minimal_gradient_coords(self, u, cfg):
        u = np.asarray(u, dtype=float)
        n = self.X.n
        halfspaces = []
        level = 0.0
        for r, inner, outer in self._balls:
            lhs = self._lhs(u, inner)
            if lhs > 0.0:
                halfspaces.append((self._rhs_coeff(r, outer), lhs))
                level = max(level, lhs / r)  # constant field at this level satisfies the ball
        if not halfspaces:
            return np.zeros(n)
        start = np.full(n, level)
        return _minimal_field(halfspaces, self.target_space.norm, n, start, cfg)

    def coupling_halfspaces(self):
        n = self.X.n
        mu = self.X.mu
        aux_index = 0
        members = []
        for _, inner, _ in self._balls:
            members.append(np.nonzero(inner)[0])
            aux_index += members[-1].size
        n_aux = aux_index
        total = 2 * n + n_aux
        halfspaces = []
        offset = 0
        for (r, inner, outer), mem in zip(self._balls, members):
            mass = float(np.sum(mu[inner]))
            wrow = np.zeros(n)
            wrow[inner] = mu[inner] / mass
            for t, y in enumerate(mem):
                for sign in (1.0, -1.0):
                    a = np.zeros(total)
                    a[:n] = -sign * (np.eye(n)[y] - wrow)
                    a[2 * n + offset + t] = 1.0
                    halfspaces.append((a, 0.0))
            a = np.zeros(total)
            a[n:2 * n] = self._rhs_coeff(r, outer)
            a[2 * n + offset:2 * n + offset + mem.size] = -mu[mem] / mass
            halfspaces.append((a, 0.0))
            offset += mem.size
        return n_aux, halfspaces, True

    def initial_aux(self, v):
        v = np.asarray(v, dtype=float)
        mu = self.X.mu
        vals = []
        for _, inner, _ in self._balls:
            vb = float(np.sum(mu[inner] * v[inner]) / np.sum(mu[inner]))
            vals.extend(np.abs(v[np.nonzero(inner)[0]] - vb))
        return np.asarray(vals, dtype=float)


class GraphEdgeRelation(GradientRelation):
    """(u, g) related iff g >= 0 and |u_i - u_j| <= g_e l_e per edge."""

    def __init__(self, G, p=2.0):
        self.G = G
        self.p = float(p)
        lengths = np.array([l for _, _, l in G.edges])
        self.domain_space = points_space(G.n_vertices, p, np.ones(G.n_vertices))
        self.target_space = SpaceDescriptor("graph-edges", len(G.edges), lp_norm(p, lengths))

    def contains(self, u, g, tol):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        if np.min(g, initial=0.0) < -tol:
            return False
        for e, (i, j, l) in enumerate(self.G.edges):
            if abs(u[i] - u[j]) > g[e] * l + tol:
                return False
        return True

    def minimal_gradient_coords(self, u, cfg):
        u = np.asarray(u, dtype=float)
        return np.array([abs(u[i] - u[j]) / l for i, j, l in self.G.edges])

    def coupling_halfspaces(self):
        n = self.G.n_vertices
        m = len(self.G.edges)
        halfspaces = []
        for e, (i, j, l) in enumerate(self.G.edges):
            for sign in (1.0, -1.0):
                a = np.zeros(n + m)
                a[i] -= sign
                a[j] += sign
                a[n + e] = l
                halfspaces.append((a, 0.0))
        return 0, halfspaces, True


# ---------------------------------------------------------------------------
# operations


def hajlasz_minimal_gradient(X, u, p, cfg=SolverConfig()):
    """Minimal Hajlasz gradient of a node field as a node field."""
    rel = HajlaszRelation(X, p)
    return rel.minimal_gradient_coords(np.asarray(u, dtype=float), cfg)


def graph_minimal_upper_gradient(G, u):
    """Per-edge difference quotients |u_i - u_j| / l_e.

    Summing the per-edge inequalities along any path dominates the endpoint
    difference, so this edge field is the pointwise (hence norm) minimal
    upper gradient.
    """
    u = np.asarray(u, dtype=float)
    return np.array([abs(u[i] - u[j]) / l for i, j, l in G.edges])


def poincare_minimal_gradient(X, u, p, lam=1.0, cfg=SolverConfig()):
    """Minimal gradient for the averaged ball inequality, as a node field."""
    rel = BallPoincareRelation(X, p, lam)
    return rel.minimal_gradient_coords(np.asarray(u, dtype=float), cfg)


@dataclass(frozen=True)
class FriedrichsReport:
    constant: float
    unbounded: bool
    per_sample: tuple


def friedrichs_check(X, relation, E, samples, cfg=SolverConfig()):
    """Empirical Friedrichs constant over samples vanishing outside E.

    ``relation`` is a HajlaszRelation or BallPoincareRelation on X; ``E``
    is a strict subset mask (some measure must remain outside).  Samples
    violating the vanishing condition raise; a sample with zero minimal
    gradient and nonzero norm flags the report unbounded.
    """
    E = np.asarray(E, dtype=bool)
    if E.all():
        raise PreconditionViolation("E must be a strict subset of the space")
    rows = []
    constant = 0.0
    unbounded = False
    for u in samples:
        coords = u.coords if isinstance(u, Element) else np.asarray(u, dtype=float)
        if np.max(np.abs(coords[~E]), initial=0.0) > 1e-12:
            raise PreconditionViolation("sample does not vanish outside E")
        nu = norm_value(relation.domain_space.norm, coords)
        g = relation.minimal_gradient_coords(coords, cfg)
        ng = norm_value(relation.target_space.norm, g)
        if nu == 0.0:
            rows.append((0.0, 0.0))
            continue
        if ng <= max(cfg.tol_feasibility, 1e-12) * max(1.0, nu):
            unbounded = True
            rows.append((nu, 0.0))
            continue
        constant = max(constant, nu / ng)
        rows.append((nu, ng))
    return FriedrichsReport(
        constant=float("inf") if unbounded else constant,
        unbounded=unbounded,
        per_sample=tuple(rows),
    )


@dataclass(frozen=True)
class UpperGradientComparison:
    hajlasz: np.ndarray
    edge_gradient: np.ndarray
    ratio: float
    within_factor_four: bool


def hajlasz_upper_gradient_report(G, u, p=2.0, cfg=SolverConfig()):
    """Observed ratio between the edge upper gradient and Hajlasz sums.

    Realizes the graph as a metric space via shortest-path distances,
    computes the minimal Hajlasz gradient there, and reports the largest
    per-edge ratio g_e / (h_x + h_y).  The continuum comparison factor of
    four is reported, not asserted.
    """
    d = G.shortest_path_distances()
    X = metric_space(d)
    u = np.asarray(u, dtype=float)
    h = hajlasz_minimal_gradient(X, u, p, cfg)
    g = graph_minimal_upper_gradient(G, u)
    ratio = 0.0
    for e, (i, j, _) in enumerate(G.edges):
        denom = h[i] + h[j]
        if g[e] > 0.0 and denom > 0.0:
            ratio = max(ratio, g[e] / denom)
    return UpperGradientComparison(
        hajlasz=h, edge_gradient=g, ratio=ratio,
        within_factor_four=ratio <= 4.0 + 1e-9)
