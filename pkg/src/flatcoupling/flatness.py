"""Joint flatness diffeomorphism of coupled pure-feedback subsystems.

The flat output of subsystem ``i`` is its level-0 state.  Given jets of all
flat outputs, :func:`build_joint_diffeo` walks the (level, subsystem) pairs in
lexicographic order and recovers every level by inverting the uncoupled level
dynamics after subtracting the coupling term::

    Phi[i][0] = y[i]
    Phi[i][k] = h_{k-1}(Phi[i][:k], d/dt Phi[i][k-1] - Delta_{k-1}(Phi))

Time derivatives are exact jet shifts, so ``Phi[i][k]`` loses one order per
level.  ``Phi[i][r]`` is the input map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInverseError, SingularJetError
from .graph import CouplingGraph
from .jets import Jet, value_of
from .plant import joint_derivative, unwrap_angle

__all__ = [
    "DiffeoOutput",
    "build_joint_diffeo",
    "flat_jets_from_points",
    "forward_flat_state",
]


@dataclass
class DiffeoOutput:
    phi: dict  # subsystem -> list of r+1 levels, each a list of m jets
    states: np.ndarray  # (N, r, m); rows of subsystems not evaluated are NaN
    inputs: np.ndarray  # (N, m)

    def jets(self, i, k):
        return self.phi[i][k]


def build_joint_diffeo(y, subsystem, coupling, graph, nodes=None, previous=None):
    """Recover states and inputs from flat-output jets.

    ``y`` maps subsystem index to a list of ``m`` jets of common order ``>= r``
    (a list indexed by subsystem also works).  When ``nodes`` is given, only
    those subsystems are evaluated and the coupling only sees edges among them;
    this is how a controller evaluates its own row of the map from local data.
    ``previous`` is an optional joint state used to unwrap angles continuously.
    """
    n = graph.n
    r = subsystem.r
    if nodes is None:
        nodes = range(n)
    nodes = set(nodes)
    g = graph if len(nodes) == n else graph.restricted(nodes)
    sequence = [i for i in g.order if i in nodes]

    order = None
    for i in sequence:
        for comp in y[i]:
            if not isinstance(comp, Jet):
                raise TypeError("flat outputs must be jets")
            if order is None:
                order = comp.order
            elif comp.order != order:
                raise ValueError("all flat-output jets must share one order")
    if order is not None and order < r:
        raise ValueError(f"flat-output jets need order >= {r}, got {order}")

    # Unevaluated entries stay None so reading them fails loudly.
    x = [[None] * (r + 1) for _ in range(n)]
    for i in sequence:
        x[i][0] = list(y[i])
    angles = getattr(subsystem, "angles", ())

    for k in range(1, r + 1):
        for i in sequence:
            levels = x[i]
            rate = [c.shift() for c in levels[k - 1]]
            coupling_term = coupling.delta(i, k - 1, x, g)
            if coupling_term is not None:
                rate = [a - b for a, b in zip(rate, coupling_term)]
            try:
                nxt = subsystem.inverse_level_map(k - 1, levels[:k], rate)
            except (SingularInverseError, SingularJetError) as exc:
                raise SingularInverseError(str(exc), subsystem=i, level=k) from exc
            nxt = [c if isinstance(c, Jet) else Jet.constant(c, order - k) for c in nxt]
            if previous is not None:
                for level, comp in angles:
                    if level == k:
                        c = nxt[comp]
                        shifted = unwrap_angle(c.coeffs[0], previous[i][level][comp])
                        coeffs = c.coeffs.copy()
                        coeffs[0] = shifted
                        nxt[comp] = Jet(coeffs)
            levels[k] = nxt

    m = subsystem.m
    states = np.full((n, r, m), np.nan)
    inputs = np.full((n, m), np.nan)
    for i in sequence:
        for k in range(r):
            states[i, k] = [value_of(c) for c in x[i][k]]
        inputs[i] = [value_of(c) for c in x[i][r]]
    return DiffeoOutput({i: x[i] for i in sequence}, states, inputs)


def flat_jets_from_points(z, v, r, m):
    """Flat-output jets ``[y, y', ..., y^(r-1), v]`` from a flat state and virtual input.

    ``z`` is the stacked flat state of length ``r*m`` (block ``k`` holds the
    ``k``-th derivative); the result is a list of ``m`` jets of order ``r``.
    """
    z = np.asarray(z, dtype=float).reshape(r, m)
    v = np.asarray(v, dtype=float)
    derivs = np.vstack([z, v[None, :]])
    return [Jet.from_derivatives(derivs[:, c]) for c in range(m)]


def forward_flat_state(state, subsystem, coupling, graph, u=None, depth=None, nodes=None):
    """Flat states ``[y, y', ..., y^(depth-1)]`` of every subsystem at ``state``.

    Runs the Taylor-series method on the joint dynamics under ``coupling``: the
    level jets are grown one order at a time from ``x' = f(x, u)``.  Derivatives
    of the flat output up to order ``r-1`` never touch the input, so ``u``
    defaults to zero.  With ``nodes`` only those subsystems' states are read and
    the coupling sees only edges among them; other rows come back as NaN.
    Returns an array of shape ``(N, depth * m)`` in derivative-block layout.
    """
    r, m = subsystem.r, subsystem.m
    depth = r if depth is None else depth
    n = len(state)
    if nodes is not None:
        nodes = sorted(set(nodes))
        sub = [state[i] for i in nodes]
        local = {j: a for a, j in enumerate(nodes)}
        edges = {(local[j], local[i]) for j, i in graph.edges if j in local and i in local}
        order = tuple(local[i] for i in graph.order if i in local)
        sub_u = None if u is None else [u[i] for i in nodes]
        z = forward_flat_state(
            np.asarray(sub, dtype=float), subsystem, coupling,
            CouplingGraph(len(nodes), frozenset(edges), order), sub_u, depth,
        )
        out = np.full((n, depth * m), np.nan)
        out[nodes] = z
        return out
    coeffs = np.zeros((n, r, m, depth))
    coeffs[..., 0] = state
    if u is None:
        u = np.zeros((n, m))
    for d in range(depth - 1):
        xj = [
            [[Jet(coeffs[i, k, c, : d + 1]) for c in range(m)] for k in range(r)]
            for i in range(n)
        ]
        uj = [[Jet.constant(u[i][c], d) for c in range(m)] for i in range(n)]
        f = joint_derivative(xj, uj, subsystem, coupling, graph)
        for i in range(n):
            for k in range(r):
                for c in range(m):
                    fc = f[i][k][c]
                    coeffs[i, k, c, d + 1] = (
                        fc.coeffs[d] if isinstance(fc, Jet) else (fc if d == 0 else 0.0)
                    ) / (d + 1)
    factorial = np.ones(depth)
    for k in range(2, depth):
        factorial[k] = factorial[k - 1] * k
    derivs = coeffs[:, 0] * factorial  # (n, m, depth)
    return derivs.transpose(0, 2, 1).reshape(n, depth * m)
