"""Command-line front end: parse problem files, solve, emit reports.

Problem documents are YAML (validated against a schema before anything
runs); solves write a JSON report, CSV fields with 17 significant digits,
and rendered PNG figures into the output directory.  Exit codes: 0 on a
converged solve, 2 infeasible, 3 non-convergence, 4 schema/document
error.  The ``certify`` subcommand re-checks a stored report without
re-solving; ``selftest`` runs the built-in reference examples.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
import jsonschema

from . import grid, lattice, matrices, metric, variational
from .core import (
    Element,
    SolverConfig,
    element,
    lp_space,
    matrix_space,
    norm_value,
    toy_complex_relation,
)
from .errors import (
    GradspaceError,
    InfeasibleProblem,
    NonConvergence,
    SchemaError,
    UnsupportedProblem,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_NONCONVERGENCE = 3
EXIT_SCHEMA = 4

PROBLEMS = ("dirichlet", "obstacle", "multi-obstacle", "rayleigh", "lattice-max",
            "lattice-min", "hajlasz", "poincare-gradient", "biharmonic", "fredholm")
INSTANCES = ("grid", "metric", "graph", "matrix", "toy-complex")

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["problem", "instance", "payload"],
    "additionalProperties": False,
    "properties": {
        "problem": {"enum": list(PROBLEMS)},
        "instance": {"enum": list(INSTANCES)},
        "payload": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "spacing": _NUM,
                "origin": _VEC,
                "interior": {"type": "array", "items": {"type": "boolean"}},
                "preset": {"enum": ["annulus"]},
                "inner": _NUM,
                "outer": _NUM,
                "half_width": _NUM,
                "distances": _MAT,
                "measure": _VEC,
                "vertices": {"type": "integer", "minimum": 1},
                "edges": {"type": "array", "items": _VEC},
                "psi1": {},
                "psi2": {},
                "map": _MAT,
            },
        },
        "norms": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p": {"type": "number", "exclusiveMinimum": 1},
                "p_V": {"type": "number", "exclusiveMinimum": 1},
                "p_W": {"type": "number", "exclusiveMinimum": 1},
                "weights": _VEC,
            },
        },
        "relation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "variant": {"enum": ["gradient", "scalar-envelope", "maximal-envelope",
                                      "hajlasz", "ball-poincare", "graph-edge",
                                      "commutator", "bounded-below", "toy-complex"]},
                "lambda": {"type": "number", "minimum": 1},
                "delta": _MAT,
                "M": _MAT,
            },
        },
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "boundary_values": _VEC,
                "f": _VEC,
                "u": _VEC,
                "fixed_mask": {"type": "array", "items": {"type": "boolean"}},
                "obstacle": _VEC,
                "lower": _MAT,
                "upper": _MAT,
                "k0_halfspace": {
                    "type": "object",
                    "required": ["normal", "offset"],
                    "additionalProperties": False,
                    "properties": {"normal": _VEC, "offset": _NUM},
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol_objective": {"type": "number", "exclusiveMinimum": 0},
                "tol_feasibility": {"type": "number", "exclusiveMinimum": 0},
                "max_iterations": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
    },
}


def _assert_finite(node, where="document"):
    if isinstance(node, dict):
        for k, v in node.items():
            _assert_finite(v, "%s.%s" % (where, k))
    elif isinstance(node, (list, tuple)):
        for i, v in enumerate(node):
            _assert_finite(v, "%s[%d]" % (where, i))
    elif isinstance(node, float) and not np.isfinite(node):
        raise SchemaError("non-finite number at %s" % where)


def load_problem(path):
    """Parse and validate a problem document; SchemaError on any defect."""
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise SchemaError("cannot parse %s: %s" % (path, exc)) from exc
    if not isinstance(doc, dict):
        raise SchemaError("problem document must be a mapping")
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError("schema violation: %s" % exc.message) from exc
    _assert_finite(doc)
    return doc


def serialize_problem(doc, path):
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def _solver_config(doc, overrides=None):
    s = dict(doc.get("solver", {}))
    s.setdefault("tol_objective", 1e-10)
    s.setdefault("tol_feasibility", 1e-9)
    s.setdefault("max_iterations", 50000)
    s.setdefault("seed", 0)
    if overrides:
        for key in ("tol_objective", "tol_feasibility", "max_iterations", "seed"):
            if overrides.get(key) is not None:
                s[key] = overrides[key]
    return SolverConfig(**s)


def _norm_p(doc, side="W"):
    norms = doc.get("norms", {})
    if "p_" + side in norms:
        return float(norms["p_" + side])
    return float(norms.get("p", 2.0))


# ---------------------------------------------------------------------------
# instance builders


def _grid_domain(doc, need_boundary=True):
    payload = doc["payload"]
    if payload.get("preset") == "annulus":
        dom = grid.annulus_domain(float(payload["spacing"]),
                                  half_width=float(payload.get("half_width", 2.5)),
                                  inner=float(payload.get("inner", 1.0)),
                                  outer=float(payload.get("outer", 2.0)))
        return dom
    dims = tuple(payload["dims"])
    h = float(payload["spacing"])
    origin = tuple(payload.get("origin", [0.0] * len(dims)))
    interior = payload.get("interior")
    if interior is None:
        mask = np.ones(dims, dtype=bool)
        for k, d in enumerate(dims):
            idx = [slice(None)] * len(dims)
            idx[k] = slice(0, 1)
            mask[tuple(idx)] = False
            idx[k] = slice(d - 1, d)
            mask[tuple(idx)] = False
        interior = mask
    bv = doc.get("data", {}).get("boundary_values")
    if need_boundary and bv is None:
        raise SchemaError("grid problem needs data.boundary_values")
    return grid.GridDomain(dims, h, np.asarray(interior, dtype=bool).reshape(dims),
                           None if bv is None else np.asarray(bv, dtype=float).reshape(dims),
                           origin)


def _grid_coeff(doc, dom):
    weights = doc.get("norms", {}).get("weights")
    if weights is None:
        return None
    return grid.scalar_weight(np.asarray(weights, dtype=float).reshape(dom.dims))


def _metric_space(doc):
    payload = doc["payload"]
    return metric.metric_space(payload["distances"], payload.get("measure"))


def _graph(doc):
    payload = doc["payload"]
    return metric.WeightedGraph(int(payload["vertices"]),
                                tuple(tuple(e) for e in payload["edges"]))


def _metric_relation(doc, X, p):
    variant = doc.get("relation", {}).get("variant", "hajlasz")
    if variant == "hajlasz":
        return metric.HajlaszRelation(X, p)
    if variant == "ball-poincare":
        return metric.BallPoincareRelation(X, p, float(doc.get("relation", {}).get("lambda", 1.0)))
    raise SchemaError("metric instances support hajlasz or ball-poincare relations")


def _matrix_relation(doc, p):
    rel_doc = doc.get("relation", {})
    variant = rel_doc.get("variant", "commutator")
    if variant == "commutator":
        if "delta" not in rel_doc:
            raise SchemaError("commutator relation needs relation.delta")
        return matrices.commutator_relation(matrices.sym(rel_doc["delta"]), p)
    if variant == "bounded-below":
        if "M" not in rel_doc:
            raise SchemaError("bounded-below relation needs relation.M")
        return matrices.bounded_below_relation(matrices.sym(rel_doc["M"]), p)
    raise SchemaError("matrix instances support commutator or bounded-below relations")


def _fixed_mask(doc, dim):
    mask = doc.get("data", {}).get("fixed_mask")
    if mask is None:
        raise SchemaError("problem needs data.fixed_mask")
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != dim:
        raise SchemaError("fixed_mask length does not match the instance")
    return mask


# ---------------------------------------------------------------------------
# dispatch


@dataclass
class Outcome:
    family: str
    instance: str
    objective: float
    iterations: int
    residual: float
    minimizer: np.ndarray
    gradient: np.ndarray = None
    certificate: dict = field(default_factory=dict)


def _dirichlet_pieces(doc, cfg):
    """(relation, K0, f, optional obstacles) for dirichlet-family problems."""
    instance = doc["instance"]
    data = doc.get("data", {})
    p = _norm_p(doc)
    if instance == "grid":
        dom = _grid_domain(doc)
        coeff = _grid_coeff(doc, dom)
        rel = grid.dirichlet_relation(dom, p, coeff)
        mask = ~dom.interior.reshape(-1)
        f = np.where(mask, dom.boundary_values.reshape(-1), 0.0)
        k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
        return rel, k0, element(rel.domain_space, f), dom
    if instance == "toy-complex":
        rel = toy_complex_relation()
        hs = data.get("k0_halfspace", {"normal": [1.0, 0.0], "offset": 0.0})
        k0 = variational.FeasibleSet((variational.HalfSpace(np.asarray(hs["normal"], dtype=float),
                                                            float(hs["offset"])),))
        f = element(rel.domain_space, data.get("f", [0.0, 0.0]))
        return rel, k0, f, None
    if instance == "metric":
        X = _metric_space(doc)
        rel = _metric_relation(doc, X, p)
        mask = _fixed_mask(doc, X.n)
        k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
        f = element(rel.domain_space, data.get("f", np.zeros(X.n)))
        return rel, k0, f, None
    if instance == "graph":
        G = _graph(doc)
        rel = metric.GraphEdgeRelation(G, p)
        mask = _fixed_mask(doc, G.n_vertices)
        k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
        f = element(rel.domain_space, data.get("f", np.zeros(G.n_vertices)))
        return rel, k0, f, None
    if instance == "matrix":
        rel = _matrix_relation(doc, p)
        mask = _fixed_mask(doc, rel.domain_space.dimension)
        k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
        f = element(rel.domain_space, data.get("f", np.zeros(rel.domain_space.dimension)))
        return rel, k0, f, None
    raise SchemaError("unsupported instance for a dirichlet-family problem")


def _run_dirichlet_family(doc, cfg):
    family = doc["problem"]
    data = doc.get("data", {})
    rel, k0, f, _ = _dirichlet_pieces(doc, cfg)
    if family == "dirichlet":
        rep = variational.solve_dirichlet(rel, k0, f, cfg)
    elif family == "obstacle":
        if "obstacle" not in data:
            raise SchemaError("obstacle problem needs data.obstacle")
        psi = element(rel.domain_space, data["obstacle"], ambient=True)
        rep = variational.solve_obstacle(rel, k0, f, psi, cfg)
    else:
        lower = [element(rel.domain_space, v, ambient=True) for v in data.get("lower", [])]
        upper = [element(rel.domain_space, v, ambient=True) for v in data.get("upper", [])]
        rep = variational.solve_multi_obstacle(rel, k0, f, lower, upper, cfg)
    return Outcome(
        family=family, instance=doc["instance"],
        objective=rep.objective, iterations=rep.iterations, residual=rep.feasibility_residual,
        minimizer=rep.minimizer.coords, gradient=rep.minimal_gradient.coords,
        certificate={"converged": rep.converged})


def _run_biharmonic(doc, cfg):
    if doc["instance"] != "grid":
        raise SchemaError("biharmonic problems are grid problems")
    payload = doc["payload"]
    bv = doc.get("data", {}).get("boundary_values")
    if bv is None:
        raise SchemaError("biharmonic problem needs data.boundary_values")
    dom = grid.biharmonic_domain(tuple(payload["dims"]), float(payload["spacing"]), bv,
                                 tuple(payload.get("origin", [0.0] * len(payload["dims"]))))
    rep = grid.solve_biharmonic(dom, cfg)
    return Outcome(
        family="biharmonic", instance="grid",
        objective=rep.objective, iterations=rep.iterations, residual=rep.feasibility_residual,
        minimizer=rep.minimizer.coords, gradient=rep.minimal_gradient.coords,
        certificate={"converged": rep.converged})


def _run_rayleigh(doc, cfg):
    p = _norm_p(doc)
    if doc["instance"] == "grid":
        dom = _grid_domain(doc, need_boundary=False)
        rel = grid.dirichlet_relation(dom, p, _grid_coeff(doc, dom))
        mask = ~dom.interior.reshape(-1)
    elif doc["instance"] == "matrix":
        rel = _matrix_relation(doc, p)
        mask = _fixed_mask(doc, rel.domain_space.dimension)
    else:
        raise SchemaError("rayleigh problems run on grid or matrix instances")
    cone = variational.ConeSpec(variational.FeasibleSet((variational.ZeroOnMask(mask),)))
    u, value = variational.minimize_rayleigh(rel, cone, cfg)
    g = rel.minimal_gradient_coords(u.coords, cfg)
    return Outcome(
        family="rayleigh", instance=doc["instance"],
        objective=value, iterations=0, residual=abs(u.norm() - 1.0),
        minimizer=u.coords, gradient=g,
        certificate={"unit_norm": u.norm()})


def _lattice_inputs(doc):
    payload = doc["payload"]
    if "psi1" not in payload or "psi2" not in payload:
        raise SchemaError("lattice problems need payload.psi1 and payload.psi2")
    p = _norm_p(doc)
    if doc["instance"] == "matrix":
        m1 = matrices.sym(payload["psi1"])
        m2 = matrices.sym(payload["psi2"])
        space = matrix_space(m1.n, p)
        return (lattice.PSD, element(space, m1.entries.reshape(-1)),
                element(space, m2.entries.reshape(-1)))
    v1 = np.asarray(payload["psi1"], dtype=float).reshape(-1)
    v2 = np.asarray(payload["psi2"], dtype=float).reshape(-1)
    weights = doc.get("norms", {}).get("weights", np.ones(v1.size))
    space = lp_space(v1.size, p, np.asarray(weights, dtype=float))
    return lattice.COMPONENTWISE, element(space, v1), element(space, v2)


def _run_lattice(doc, cfg):
    order, e1, e2 = _lattice_inputs(doc)
    if doc["problem"] == "lattice-max":
        out = lattice.lattice_max(order, e1, e2, cfg)
        resid = 0.0
        for psi in (e1, e2):
            if not lattice.order_leq(order, psi, out, cfg.tol_feasibility * 10):
                resid = max(resid, 1.0)
    else:
        out = lattice.lattice_min(order, e1, e2, cfg)
        zero = element(out.space, np.zeros(out.space.dimension))
        resid = 0.0
        ok = (lattice.order_leq(order, zero, out, cfg.tol_feasibility * 10)
              and lattice.order_leq(order, out, e1, cfg.tol_feasibility * 10)
              and lattice.order_leq(order, out, e2, cfg.tol_feasibility * 10))
        if not ok:
            resid = 1.0
    return Outcome(
        family=doc["problem"], instance=doc["instance"],
        objective=norm_value(out.space.norm, out.coords), iterations=0, residual=resid,
        minimizer=out.coords, gradient=None,
        certificate={"order": order.variant})


def _run_gradient(doc, cfg):
    if doc["instance"] != "metric":
        raise SchemaError("gradient problems run on metric instances")
    X = _metric_space(doc)
    u = doc.get("data", {}).get("u")
    if u is None:
        raise SchemaError("gradient problem needs data.u")
    p = _norm_p(doc)
    if doc["problem"] == "hajlasz":
        rel = metric.HajlaszRelation(X, p)
    else:
        rel = metric.BallPoincareRelation(X, p, float(doc.get("relation", {}).get("lambda", 1.0)))
    u = np.asarray(u, dtype=float)
    g = rel.minimal_gradient_coords(u, cfg)
    feasible = rel.contains(u, g, cfg.tol_feasibility * 10)
    return Outcome(
        family=doc["problem"], instance="metric",
        objective=norm_value(rel.target_space.norm, g), iterations=0,
        residual=0.0 if feasible else 1.0,
        minimizer=u, gradient=g,
        certificate={"feasible": bool(feasible)})


def _run_fredholm(doc, cfg):
    if doc["instance"] != "matrix":
        raise SchemaError("fredholm problems run on matrix instances")
    fmat = np.asarray(doc["payload"]["map"], dtype=float)
    constant, kernel = matrices.fredholm_poincare_constant(fmat)
    return Outcome(
        family="fredholm", instance="matrix",
        objective=constant, iterations=0, residual=0.0,
        minimizer=kernel.reshape(-1) if kernel.size else np.zeros(0),
        gradient=None,
        certificate={"kernel_dimension": int(kernel.shape[1])})


def dispatch(doc, cfg):
    family = doc["problem"]
    if family in ("dirichlet", "obstacle", "multi-obstacle"):
        return _run_dirichlet_family(doc, cfg)
    if family == "biharmonic":
        return _run_biharmonic(doc, cfg)
    if family == "rayleigh":
        return _run_rayleigh(doc, cfg)
    if family in ("lattice-max", "lattice-min"):
        return _run_lattice(doc, cfg)
    if family in ("hajlasz", "poincare-gradient"):
        return _run_gradient(doc, cfg)
    return _run_fredholm(doc, cfg)


# ---------------------------------------------------------------------------
# outputs


def write_csv(path, values):
    values = np.asarray(values, dtype=float).reshape(-1)
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(values):
            fh.write("%d,%.17g\n" % (i, v))
    return str(path)


def read_csv(path):
    rows = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "index,value":
            raise SchemaError("unexpected CSV header in %s" % path)
        for line in fh:
            _, v = line.strip().split(",")
            rows.append(float(v))
    return np.asarray(rows, dtype=float)


def write_outputs(doc, cfg, outcome, out_dir, render=True):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(out_dir / "minimizer.csv", outcome.minimizer)
    csv_paths = {"minimizer": "minimizer.csv"}
    if outcome.gradient is not None:
        write_csv(out_dir / "minimal_gradient.csv", outcome.gradient)
        csv_paths["minimal_gradient"] = "minimal_gradient.csv"
    figures = []
    if render:
        from . import report as report_mod
        try:
            figures = [Path(p).name for p in report_mod.render_solution_figures(
                outcome.family, outcome.instance, doc, outcome.minimizer, outcome.gradient, out_dir)]
        except Exception as exc:  # figures are best-effort
            print("figure rendering failed: %s" % exc, file=sys.stderr)
    report = {
        "status": "ok",
        "problem": outcome.family,
        "instance": outcome.instance,
        "objective": float(outcome.objective),
        "iterations": int(outcome.iterations),
        "feasibility_residual": float(outcome.residual),
        "tolerances": {"objective": cfg.tol_objective, "feasibility": cfg.tol_feasibility},
        "seed": cfg.seed,
        "certificate": outcome.certificate,
        "csv": csv_paths,
        "figures": figures,
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


# ---------------------------------------------------------------------------
# certification


def _perturbation_probe(rel, kf, u, objective, cfg, rng):
    """Sampled first-order optimality: feasible perturbations cannot beat u."""
    slack = max(1e-7 * (1.0 + objective), 10.0 * cfg.tol_objective)
    scale = 1e-3 * (1.0 + float(np.max(np.abs(u), initial=0.0)))
    for _ in range(8):
        cand = kf.project(u + scale * rng.standard_normal(u.size), cfg)
        g = rel.minimal_gradient_coords(cand, cfg)
        if norm_value(rel.target_space.norm, g) < objective - slack:
            return False
    return True


def certify(report, doc, out_dir, cfg=None):
    """Re-check feasibility and first-order optimality of a stored report."""
    out_dir = Path(out_dir)
    if cfg is None:
        cfg = _solver_config(doc)
    family = report["problem"]
    u = read_csv(out_dir / "minimizer.csv")
    g = read_csv(out_dir / "minimal_gradient.csv") if "minimal_gradient" in report["csv"] else None
    objective = float(report["objective"])
    rng = np.random.default_rng(cfg.seed + 1)
    tol_feas = 10.0 * cfg.tol_feasibility
    obj_slack = max(1e-8 * (1.0 + abs(objective)), 10.0 * cfg.tol_objective)

    if family in ("dirichlet", "obstacle", "multi-obstacle", "biharmonic"):
        data = doc.get("data", {})
        if family == "biharmonic":
            payload = doc["payload"]
            dom = grid.biharmonic_domain(tuple(payload["dims"]), float(payload["spacing"]),
                                         data["boundary_values"])
            rel = grid.biharmonic_relation(dom)
            mask = ~dom.interior.reshape(-1)
            k0 = variational.FeasibleSet((variational.ZeroOnMask(mask),))
            f = element(rel.domain_space, np.where(mask, dom.boundary_values.reshape(-1), 0.0))
        else:
            rel, k0, f, _ = _dirichlet_pieces(doc, cfg)
            if family == "obstacle":
                k0 = k0.with_constraints(
                    [variational._obstacle_constraint(f.space, np.asarray(data["obstacle"]) - f.coords)])
            elif family == "multi-obstacle":
                extra = [variational._obstacle_constraint(f.space, np.asarray(v) - f.coords)
                         for v in data.get("lower", [])]
                extra += [variational._obstacle_constraint(f.space, np.asarray(v) - f.coords, upper=True)
                          for v in data.get("upper", [])]
                k0 = k0.with_constraints(extra)
        kf = k0.shifted(f)
        if kf.residual(u) > tol_feas:
            return False
        if g is None or not rel.contains(u, g, tol_feas):
            return False
        if abs(norm_value(rel.target_space.norm, g) - objective) > obj_slack:
            return False
        return _perturbation_probe(rel, kf, u, objective, cfg, rng)

    if family == "rayleigh":
        p = _norm_p(doc)
        if doc["instance"] == "grid":
            dom = _grid_domain(doc, need_boundary=False)
            rel = grid.dirichlet_relation(dom, p, _grid_coeff(doc, dom))
            mask = ~dom.interior.reshape(-1)
        else:
            rel = _matrix_relation(doc, p)
            mask = _fixed_mask(doc, rel.domain_space.dimension)
        if np.max(np.abs(u[mask]), initial=0.0) > tol_feas:
            return False
        nv = norm_value(rel.domain_space.norm, u)
        if abs(nv - 1.0) > 1e-9:
            return False
        quotient = variational.rayleigh_quotient(rel, element(rel.domain_space, u), cfg)
        if abs(quotient - objective) > obj_slack:
            return False
        cone = variational.FeasibleSet((variational.ZeroOnMask(mask),))
        scale = 1e-3
        for _ in range(8):
            cand = cone.project(u + scale * rng.standard_normal(u.size), cfg)
            if norm_value(rel.domain_space.norm, cand) == 0.0:
                continue
            q = variational.rayleigh_quotient(rel, element(rel.domain_space, cand), cfg)
            if q < objective - max(1e-6 * (1 + objective), 10 * cfg.tol_objective):
                return False
        return True

    if family in ("lattice-max", "lattice-min"):
        order, e1, e2 = _lattice_inputs(doc)
        out = Element(e1.space, u)
        if family == "lattice-max":
            if not (lattice.order_leq(order, e1, out, tol_feas)
                    and lattice.order_leq(order, e2, out, tol_feas)):
                return False
            # variational inequality for the projection of 0 onto the bound set
            for _ in range(16):
                z = u + np.abs(rng.standard_normal(u.size)) * 0.1
                if order.variant == "psd":
                    side = e1.space.matrix_side
                    bump = rng.standard_normal((side, side))
                    z = u + 0.1 * (bump @ bump.T).reshape(-1)
                if float(u @ (u - z)) > 1e-6 * (1.0 + float(u @ u)):
                    return False
            return True
        zero = element(out.space, np.zeros(out.space.dimension))
        return (lattice.order_leq(order, zero, out, tol_feas)
                and lattice.order_leq(order, out, e1, tol_feas)
                and lattice.order_leq(order, out, e2, tol_feas))

    if family in ("hajlasz", "poincare-gradient"):
        X = _metric_space(doc)
        p = _norm_p(doc)
        rel = (metric.HajlaszRelation(X, p) if family == "hajlasz"
               else metric.BallPoincareRelation(X, p, float(doc.get("relation", {}).get("lambda", 1.0))))
        if g is None or not rel.contains(u, g, tol_feas):
            return False
        return abs(norm_value(rel.target_space.norm, g) - objective) <= obj_slack

    if family == "fredholm":
        fmat = np.asarray(doc["payload"]["map"], dtype=float)
        constant, kernel = matrices.fredholm_poincare_constant(fmat)
        if abs(constant - objective) > 1e-9 * (1.0 + abs(objective)):
            return False
        for _ in range(32):
            v = rng.standard_normal(fmat.shape[1])
            if kernel.size:
                v = v - kernel @ (kernel.T @ v)
            nv = float(np.linalg.norm(v))
            if nv < 1e-12:
                continue
            if nv > constant * float(np.linalg.norm(fmat @ v)) * (1.0 + 1e-9):
                return False
        return True

    raise SchemaError("unknown report family %r" % family)


# ---------------------------------------------------------------------------
# selftest


def _selftest_cases():
    yield "toy-complex dirichlet", {
        "problem": "dirichlet", "instance": "toy-complex", "payload": {},
        "data": {"f": [1.0, 0.0], "k0_halfspace": {"normal": [1.0, 0.0], "offset": 0.0}},
    }, lambda out: abs(out.objective - 1.0) <= 1e-8 and abs(out.minimizer[0] - 1.0) <= 1e-6 \
        and abs(out.minimizer[1]) <= 1.0 + 1e-6
    yield "psd 2x2 maximum", {
        "problem": "lattice-max", "instance": "matrix",
        "payload": {"psi1": [[1.0, 0.0], [0.0, 0.0]], "psi2": [[0.0, 0.0], [0.0, 1.0]]},
    }, lambda out: float(np.linalg.norm(out.minimizer - np.eye(2).reshape(-1))) <= 1e-6
    yield "hajlasz two points", {
        "problem": "hajlasz", "instance": "metric",
        "payload": {"distances": [[0.0, 1.0], [1.0, 0.0]], "measure": [1.0, 1.0]},
        "data": {"u": [0.0, 1.0]},
    }, lambda out: float(np.max(np.abs(out.gradient - 0.5))) <= 1e-6
    yield "graph path gradient", {
        "problem": "dirichlet", "instance": "graph",
        "payload": {"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]},
        "data": {"f": [0.0, 0.0, 1.0], "fixed_mask": [True, False, True]},
    }, lambda out: abs(out.minimizer[1] - 0.5) <= 1e-6
    yield "coarse annulus", {
        "problem": "dirichlet", "instance": "grid",
        "payload": {"preset": "annulus", "spacing": 1.0 / 16.0},
        "norms": {"p": 2.0},
    }, _check_annulus


def _check_annulus(out):
    n = int(round(np.sqrt(out.minimizer.size)))
    h = 1.0 / 16.0
    axes = np.arange(n) * h - 2.5
    xx, yy = np.meshgrid(axes, axes, indexing="ij")
    r = np.sqrt(xx ** 2 + yy ** 2).reshape(-1)
    inside = (r > 1.0) & (r < 2.0)
    exact = 1.0 - np.log2(np.maximum(r, 1e-9))
    return float(np.max(np.abs(out.minimizer - exact)[inside])) <= 0.1


def selftest():
    cfg = SolverConfig()
    failures = 0
    for name, doc, check in _selftest_cases():
        try:
            jsonschema.validate(doc, PROBLEM_SCHEMA)
            out = dispatch(doc, cfg)
            ok = bool(check(out))
        except GradspaceError as exc:
            ok = False
            print("selftest %-24s ERROR %s" % (name, exc))
        print("selftest %-24s %s" % (name, "pass" if ok else "FAIL"))
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# entry point


def _build_parser():
    parser = argparse.ArgumentParser(prog="gradspace",
                                     description="variational solves over gradient relations")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "rayleigh", "lattice", "gradient"):
        p = sub.add_parser(name, help="run a %s problem file" % name)
        p.add_argument("problem_file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--tol", type=float, default=None, help="override both tolerances")
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", default="csv", choices=["csv"])
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    c = sub.add_parser("certify", help="re-check a stored report without solving")
    c.add_argument("problem_file")
    c.add_argument("--out", default="out", help="directory holding report.json and CSVs")
    s = sub.add_parser("selftest", help="run the built-in reference examples")
    return parser


_COMMAND_FAMILIES = {
    "solve": ("dirichlet", "obstacle", "multi-obstacle", "biharmonic", "fredholm"),
    "rayleigh": ("rayleigh",),
    "lattice": ("lattice-max", "lattice-min"),
    "gradient": ("hajlasz", "poincare-gradient"),
}


def run(argv):
    """Parse argv, run the requested command, and return the exit code."""
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        return selftest()
    try:
        doc = load_problem(args.problem_file)
    except SchemaError as exc:
        print("schema error: %s" % exc, file=sys.stderr)
        return EXIT_SCHEMA

    if args.command == "certify":
        out_dir = Path(args.out)
        try:
            with open(out_dir / "report.json") as fh:
                report = json.load(fh)
            ok = certify(report, doc, out_dir)
        except (OSError, SchemaError, KeyError, ValueError) as exc:
            print("certify error: %s" % exc, file=sys.stderr)
            return EXIT_SCHEMA
        print("certificate: %s" % ("pass" if ok else "FAIL"))
        return EXIT_OK if ok else 1

    if doc["problem"] not in _COMMAND_FAMILIES[args.command]:
        print("schema error: problem %r does not belong to the %r command"
              % (doc["problem"], args.command), file=sys.stderr)
        return EXIT_SCHEMA
    overrides = {
        "tol_objective": args.tol, "tol_feasibility": args.tol,
        "max_iterations": args.max_iter, "seed": args.seed,
    }
    cfg = _solver_config(doc, overrides)
    try:
        outcome = dispatch(doc, cfg)
    except SchemaError as exc:
        print("schema error: %s" % exc, file=sys.stderr)
        return EXIT_SCHEMA
    except UnsupportedProblem as exc:
        print("unsupported problem: %s" % exc, file=sys.stderr)
        return EXIT_SCHEMA
    except InfeasibleProblem as exc:
        print("infeasible: %s" % exc, file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergence as exc:
        print("no convergence: %s" % exc, file=sys.stderr)
        return EXIT_NONCONVERGENCE
    report = write_outputs(doc, cfg, outcome, args.out, render=not args.no_figures)
    print("%s: objective %.12g, residual %.3e -> %s"
          % (outcome.family, outcome.objective, outcome.residual, args.out))
    return EXIT_OK


def main(argv=None):
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
