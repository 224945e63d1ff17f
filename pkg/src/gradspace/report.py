"""Figure rendering for solve reports.

Each CLI solve drops a PNG next to the CSV output so a run can be eyed
without loading the data: line plots for 1-D grids, heatmaps for 2-D
grids and matrices, stem plots for point and edge fields.
"""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

plt.rcParams["figure.figsize"] = (6.0, 3.8)
plt.rcParams["font.size"] = 9
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def render_grid_field(values, dims, h, origin, path, title):
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots()
    if len(dims) == 1:
        x = origin[0] + h * np.arange(dims[0])
        ax.plot(x, values, lw=1.2)
        ax.set_xlabel("x")
        ax.set_ylabel("value")
    else:
        img = values.reshape(dims)
        extent = [origin[1], origin[1] + h * (dims[1] - 1),
                  origin[0], origin[0] + h * (dims[0] - 1)]
        im = ax.imshow(img, origin="lower", extent=extent, aspect="equal", cmap="viridis")
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.grid(False)
    ax.set_title(title)
    return _save(fig, path)


def render_point_field(values, path, title, xlabel="index"):
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots()
    markerline, stemlines, baseline = ax.stem(np.arange(values.size), values)
    plt.setp(markerline, markersize=3.5)
    plt.setp(stemlines, linewidth=1.0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("value")
    ax.set_title(title)
    return _save(fig, path)


def render_matrix(values, path, title):
    a = np.asarray(values, dtype=float)
    n = int(round(np.sqrt(a.size)))
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    im = ax.imshow(a.reshape(n, n), cmap="RdBu_r")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.grid(False)
    return _save(fig, path)


def render_plane_point(point, path, title):
    fig, ax = plt.subplots(figsize=(4.0, 4.0))
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.axvline(0.0, color="0.6", lw=0.8)
    ax.plot([point[0]], [point[1]], "o", ms=7)
    ax.annotate("(%.4g, %.4g)" % (point[0], point[1]), (point[0], point[1]),
                textcoords="offset points", xytext=(6, 6))
    span = max(1.5, 1.3 * max(abs(point[0]), abs(point[1])))
    ax.set_xlim(-span, span)
    ax.set_ylim(-span, span)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    return _save(fig, path)


def render_solution_figures(family, instance, doc, minimizer, gradient, out_dir):
    """Render the minimizer (and gradient when it is a plottable field).

    Returns the list of written paths; rendering failures are not fatal to
    the solve, the caller records whatever was produced.
    """
    paths = []
    base = out_dir / "minimizer.png"
    if instance == "grid":
        payload = doc["payload"]
        dims = tuple(payload["dims"])
        origin = tuple(payload.get("origin", [0.0] * len(dims)))
        paths.append(render_grid_field(minimizer, dims, float(payload["spacing"]), origin,
                                       base, "minimizer (%s)" % family))
    elif instance == "matrix":
        paths.append(render_matrix(minimizer, base, "result matrix (%s)" % family))
    elif instance == "toy-complex":
        paths.append(render_plane_point(minimizer, base, "minimizer (%s)" % family))
    else:
        paths.append(render_point_field(minimizer, base, "minimizer (%s)" % family,
                                        xlabel="vertex" if instance == "graph" else "point"))
    if gradient is not None and np.asarray(gradient).size:
        gpath = out_dir / "minimal_gradient.png"
        g = np.asarray(gradient, dtype=float)
        if instance == "matrix" and int(round(np.sqrt(g.size))) ** 2 == g.size:
            paths.append(render_matrix(g, gpath, "minimal gradient"))
        else:
            paths.append(render_point_field(g, gpath, "minimal gradient", xlabel="entry"))
    return paths
