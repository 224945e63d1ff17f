"""Shared numerical kernels.

Everything here is deterministic given the solver configuration: symmetric
eigendecomposition (cyclic Jacobi), conjugate gradients, Dykstra's
alternating projections, FISTA-style projected descent with monotone
restart, and inverse-power iteration for quadratic Rayleigh quotients.

Projection oracles are plain callables ``x -> nearest point of a fixed
closed convex set`` (in the Euclidean/Frobenius inner product); energy
oracles are pairs ``value(x) -> float`` and ``gradient(x) -> array``.
"""

import numpy as np

from .errors import NonConvergence


# ---------------------------------------------------------------------------
# projection oracles for the common constraint geometries


def project_halfspace(a, b):
    """Projection onto the half-space {x : a.x >= b}.

    Parameters
    ----------
    a : array
        Normal vector (need not be unit).
    b : float
        Offset.
    """
    a = np.asarray(a, dtype=float)
    aa = float(a @ a)
    if aa == 0.0:
        raise ValueError("half-space normal must be nonzero")

    def proj(x):
        r = float(a @ x) - b
        if r >= 0.0:
            return x
        return x - (r / aa) * a

    return proj


def project_box(lower=None, upper=None):
    """Projection onto componentwise bounds {x : lower <= x <= upper}."""

    def proj(x):
        y = x
        if lower is not None:
            y = np.maximum(y, lower)
        if upper is not None:
            y = np.minimum(y, upper)
        return y

    return proj


def project_fixed(mask, values):
    """Projection onto the affine set {x : x[mask] = values[mask]}."""
    mask = np.asarray(mask, dtype=bool)

    def proj(x):
        y = x.copy()
        y[mask] = values[mask]
        return y

    return proj


# ---------------------------------------------------------------------------
# eigendecomposition


def jacobi_eigh(A, tol=1e-14, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, Q)`` with eigenvalues ``w`` ascending and orthogonal ``Q``
    such that ``A = Q diag(w) Q.T``.  Off-diagonal residual is driven below
    ``tol * ||A||_F``; for desk-scale matrices this reaches machine
    precision within a handful of sweeps.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    a = 0.5 * (A + A.T)
    q = np.eye(n)
    norm = np.linalg.norm(a, "fro")
    if norm == 0.0:
        return np.zeros(n), q

    for _ in range(max_sweeps):
        strict = a - np.diag(np.diag(a))
        off = np.linalg.norm(strict, "fro")
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if abs(apr) <= 1e-3 * tol * norm / max(n * n, 1):
                    continue
                theta = 0.5 * (a[r, r] - a[p, p]) / apr
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_r = a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p = a[p, :].copy()
                row_r = a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
                qp = q[:, p].copy()
                qr = q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], q[:, order]


# ---------------------------------------------------------------------------
# conjugate gradients


def cg_solve(apply_A, b, tol=1e-10, max_iter=None):
    """Conjugate gradients for a symmetric positive-definite operator.

    Parameters
    ----------
    apply_A : callable
        Matrix-free operator ``x -> A x``.
    b : array
        Right-hand side.
    tol : float
        Relative residual target ``||A x - b|| <= tol * ||b||``.
    max_iter : int, optional
        Iteration cap; defaults to ``10 * len(b)``.

    Raises
    ------
    NonConvergence
        If the cap is reached, carrying the best iterate.
    ValueError
        On detected indefiniteness (``p.A p <= 0``).
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    if max_iter is None:
        max_iter = max(10 * n, 50)
    x = np.zeros_like(b)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return x
    r = b.copy()
    p = r.copy()
    rr = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol * nb:
            return x
        Ap = apply_A(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise ValueError("operator is not positive definite on this subspace")
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    if np.sqrt(rr) <= tol * nb:
        return x
    raise NonConvergence(
        "cg_solve: residual %.3e above target after %d iterations" % (np.sqrt(rr) / nb, max_iter),
        best=x,
        residual=np.sqrt(rr) / nb,
    )


# ---------------------------------------------------------------------------
# Dykstra's alternating projections


def dykstra(projections, start, tol=1e-12, max_cycles=10000):
    """Nearest point of an intersection of closed convex sets.

    Runs Dykstra's correction-carrying scheme over the given projection
    oracles.  With ``start = 0`` this computes the minimal-norm element of
    the intersection.  Stops when a full cycle moves the iterate by at most
    ``tol`` (Euclidean increment).

    Raises
    ------
    NonConvergence
        If the cycle cap is hit, carrying the last iterate and increment.
    """
    x = np.asarray(start, dtype=float).copy()
    m = len(projections)
    if m == 0:
        return x
    if m == 1:
        return np.asarray(projections[0](x), dtype=float)
    corrections = [np.zeros_like(x) for _ in range(m)]
    increment = np.inf
    for _ in range(max_cycles):
        x_prev = x.copy()
        for i, proj in enumerate(projections):
            y = x + corrections[i]
            x_new = np.asarray(proj(y), dtype=float)
            corrections[i] = y - x_new
            x = x_new
        increment = float(np.linalg.norm(x - x_prev))
        if increment <= tol:
            return x
    raise NonConvergence(
        "dykstra: cycle increment %.3e above %.1e after %d cycles" % (increment, tol, max_cycles),
        best=x,
        residual=increment,
    )


# ---------------------------------------------------------------------------
# projected accelerated descent


def _estimate_lipschitz(gradient, x0, rng, n_probe=8):
    """Crude Lipschitz estimate for the gradient via random secants."""
    g0 = gradient(x0)
    scale = max(1.0, float(np.linalg.norm(x0)))
    best = 0.0
    for _ in range(n_probe):
        d = rng.standard_normal(x0.shape)
        nd = float(np.linalg.norm(d))
        if nd == 0.0:
            continue
        d *= 1e-4 * scale / nd
        g1 = gradient(x0 + d)
        best = max(best, float(np.linalg.norm(g1 - g0)) / float(np.linalg.norm(d)))
    return max(best, 1e-12)


def projected_descent(
    value,
    gradient,
    project,
    start,
    tol_objective=1e-10,
    max_iter=20000,
    seed=0,
    window=10,
    trace=None,
):
    """FISTA-style projected descent with backtracking and monotone restart.

    Minimizes a convex objective over a closed convex set given its exact
    projection.  Acceptance is monotone: an accelerated step that fails to
    decrease the objective restarts the momentum from the best point, so
    the accepted objective sequence is nonincreasing.

    Stopping rule: relative objective decrease over the trailing ``window``
    accepted iterations at most ``tol_objective``.  When ``trace`` is a
    list, accepted objective values are appended to it.

    Returns ``(x, value(x), iterations, converged)``.
    """
    rng = np.random.default_rng(seed)
    x = np.asarray(project(np.asarray(start, dtype=float)), dtype=float)
    fx = float(value(x))
    lip = _estimate_lipschitz(gradient, x, rng)
    step = 1.0 / lip
    y = x.copy()
    fy = fx
    t_mom = 1.0
    history = [fx]
    iterations = 0
    for k in range(max_iter):
        iterations = k + 1
        g = gradient(y)
        # backtracking against the quadratic majorization at y
        cand = None
        fc = fy
        for _ in range(80):
            cand = np.asarray(project(y - step * g), dtype=float)
            d = cand - y
            dd = float(d @ d)
            fc = float(value(cand))
            bound = fy + float(g @ d) + 0.5 * dd / step
            if fc <= bound + 1e-14 * (1.0 + abs(fy)) or dd == 0.0:
                break
            step *= 0.5
        if fc > fx + 1e-15 * (1.0 + abs(fx)):
            # accelerated step overshot: restart momentum from the best point
            if np.array_equal(y, x):
                history.append(fx)
            else:
                y = x.copy()
                fy = fx
                t_mom = 1.0
                continue
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = cand + ((t_mom - 1.0) / t_next) * (cand - x)
            fy = float(value(y))
            t_mom = t_next
            x, fx = cand, fc
            history.append(fx)
            if trace is not None:
                trace.append(fx)
            step *= 1.05
        if len(history) > window:
            old = history[-window - 1]
            if abs(old - fx) <= tol_objective * max(abs(fx), 1.0):
                return x, fx, iterations, True
    converged = False
    if len(history) > window:
        converged = abs(history[-window - 1] - history[-1]) <= tol_objective * max(abs(history[-1]), 1.0)
    return x, fx, iterations, converged


# ---------------------------------------------------------------------------
# Rayleigh quotients


def inverse_power_smallest(apply_A, n, tol=1e-12, max_iter=500, seed=0, cg_tol=1e-12):
    """Smallest eigenpair of a symmetric positive-definite operator.

    Plain inverse-power iteration; each inner solve uses conjugate
    gradients.  Returns ``(eigenvalue, unit eigenvector)``.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = float(x @ apply_A(x))
    delta = np.inf
    for _ in range(max_iter):
        y = cg_solve(apply_A, x, tol=cg_tol)
        ny = float(np.linalg.norm(y))
        x_new = y / ny
        lam_new = float(x_new @ apply_A(x_new))
        delta = abs(lam_new - lam)
        x, lam = x_new, lam_new
        if delta <= tol * max(abs(lam), 1e-30):
            return lam, x
    raise NonConvergence("inverse_power_smallest: eigenvalue not settled", best=x, residual=delta)


def rayleigh_iterate(
    value,
    gradient,
    norm_v,
    project_cone,
    n,
    quadratic_apply=None,
    tol=1e-10,
    max_iter=20000,
    seed=0,
):
    """Minimize ``value(u) / norm_v(u)`` over a cone, returning a unit point.

    For quadratic instances pass ``quadratic_apply`` (the operator of the
    numerator quadratic form in coordinates where ``norm_v`` is Euclidean);
    the kernel then runs inverse-power iteration.  Otherwise it performs
    normalized projected descent: a descent step on the numerator followed
    by cone projection and renormalization to unit ``norm_v``.

    Returns ``(u, quotient_value, iterations)`` with ``norm_v(u) = 1`` up to
    rounding.
    """
    if quadratic_apply is not None:
        _, u = inverse_power_smallest(quadratic_apply, n, tol=tol, seed=seed)
        u = np.asarray(project_cone(u), dtype=float)
        nv = norm_v(u)
        if nv == 0.0:
            u = np.asarray(project_cone(-u), dtype=float)
            nv = norm_v(u)
        u = u / nv
        return u, value(u) / norm_v(u), 0

    rng = np.random.default_rng(seed)
    u = np.asarray(project_cone(rng.standard_normal(n)), dtype=float)
    nv = norm_v(u)
    if nv == 0.0:
        u = np.asarray(project_cone(np.abs(rng.standard_normal(n))), dtype=float)
        nv = norm_v(u)
    u = u / nv
    q = value(u)
    step = 1.0
    stall = 0
    iterations = 0
    for k in range(max_iter):
        iterations = k + 1
        g = gradient(u)
        g = g - (float(g @ u) / max(float(u @ u), 1e-300)) * u
        cand = np.asarray(project_cone(u - step * g), dtype=float)
        ncand = norm_v(cand)
        if ncand == 0.0:
            step *= 0.5
            continue
        cand = cand / ncand
        qc = value(cand)
        if qc < q - 1e-16:
            u, q = cand, qc
            stall = 0
            step *= 1.2
        else:
            step *= 0.5
            stall += 1
            if stall > 60:
                break
    return u, q, iterations
