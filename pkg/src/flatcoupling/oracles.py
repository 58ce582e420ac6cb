"""Independent reference values for the test suite.

Everything here is computed without the closed forms or solvers it is meant to
check.  Drag values come from adaptive quadrature of the density and Riccati
solutions from scipy's Schur solver.  Graph sets use brute-force reachability;
erf values use mpmath.  ``flatcoupling oracle`` writes the results to a JSON fixture file.
"""

from __future__ import annotations

import json
import math
import warnings

import numpy as np

from .records import atomic_write

__all__ = [
    "bfs_hops",
    "build_fixtures",
    "drag_density_plain",
    "quad_force",
    "quad_torque",
    "reachability",
    "write_fixtures",
]


def drag_density_plain(s, dy, thrust, p):
    """Drag per unit span at horizontal offset ``s``, written out independently."""
    c3 = 0.5 * p.rho * p.CD * p.C1**2
    return c3 * thrust * p.L**2 / dy**2 * math.exp(-2.0 * p.C2 * (s / dy) ** 2)


def _quad(fn, a, b):
    from scipy import integrate

    with warnings.catch_warnings():
        # asking for 1e-13 sometimes trips the roundoff detector near machine precision
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(fn, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
    return value


def quad_force(dx, dy, thrust, p):
    """``-integral D(dx + l) dl`` over the lower airframe."""
    half = 0.5 * p.L
    return -_quad(lambda l: drag_density_plain(dx + l, dy, thrust, p), -half, half)


def quad_torque(dx, dy, thrust, p):
    """``-integral l D(dx + l) dl`` over the lower airframe."""
    half = 0.5 * p.L
    return -_quad(lambda l: l * drag_density_plain(dx + l, dy, thrust, p), -half, half)


def bfs_hops(n, edges, i, k):
    """Nodes reached from ``i`` by exactly ``k`` reversed edges (layered BFS)."""
    preds = {v: [] for v in range(n)}
    for j, v in edges:
        preds[v].append(j)
    layer = {i}
    for _ in range(k):
        layer = {j for v in layer for j in preds[v]}
    return layer


def reachability(n, edges):
    """Floyd-Warshall transitive closure; ``reach[j][i]`` iff a path j -> i exists."""
    reach = [[a == b for b in range(n)] for a in range(n)]
    for j, i in edges:
        reach[j][i] = True
    for w in range(n):
        for a in range(n):
            if reach[a][w]:
                for b in range(n):
                    if reach[w][b]:
                        reach[a][b] = True
    return reach


def _random_dag(rng, n, density):
    return sorted(
        (j, i) for i in range(n) for j in range(i) if rng.random() < density
    )


def build_fixtures(seed=2024):
    """All reference values as a JSON-serializable dict."""
    import mpmath
    from scipy import linalg

    from .control import brunovsky_pair
    from .downwash import DownwashParams

    rng = np.random.default_rng(seed)
    p = DownwashParams()
    out = {"seed": seed}

    out["drag"] = {
        "force_dx0_dy1_T9.81": quad_force(0.0, 1.0, 9.81, p),
        "torque_dx0.2_dy1_T9.81": quad_torque(0.2, 1.0, 9.81, p),
    }

    mpmath.mp.dps = 40
    xs = np.linspace(-6.0, 6.0, 241)
    out["erf"] = {"x": xs.tolist(), "value": [float(mpmath.erf(mpmath.mpf(float(x)))) for x in xs]}

    care = {}
    for label, (A, B, Q, R) in {
        "formation": (*brunovsky_pair(4, 2), 100.0 * np.eye(8), np.eye(2)),
        "double_integrator": (np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]),
                              np.eye(2), np.eye(1)),
    }.items():
        P = linalg.solve_continuous_are(A, B, Q, R)
        K = np.linalg.solve(R, B.T @ P)
        care[label] = {"P": P.tolist(), "K": K.tolist()}
    out["care"] = care

    graphs = []
    for _ in range(20):
        n = int(rng.integers(3, 9))
        edges = _random_dag(rng, n, 0.35)
        reach = reachability(n, edges)
        graphs.append({
            "n": n,
            "edges": edges,
            "hops": {
                str(i): [sorted(bfs_hops(n, edges, i, k)) for k in range(n + 1)]
                for i in range(n)
            },
            "ancestors": {str(i): [j for j in range(n) if reach[j][i]] for i in range(n)},
        })
    out["graphs"] = graphs
    return out


def write_fixtures(path, seed=2024):
    data = build_fixtures(seed)
    atomic_write(path, json.dumps(data, indent=1, sort_keys=True) + "\n")
    return data
