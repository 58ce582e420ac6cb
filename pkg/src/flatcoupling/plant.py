"""Pure-feedback subsystems and the coupled dynamics of planar quadrotors.

Joint states are arrays of shape ``(N, r, m)``: ``x[i, k]`` is level ``k`` of
subsystem ``i`` with level 0 the flat output.  For the quadrotor the levels are
position, velocity, ``(T, theta)`` and ``(Tdot, omega)``; the input is
``(Tddot, tau)``.

The dynamics and inverse level maps (couplings included) are written against plain
indexing (``x[j][k][c]``) and the :mod:`flatcoupling.jets` functions, so the
same code runs on float arrays and on nested lists of jets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .downwash import DownwashParams, drag_force, drag_torque
from .errors import OrderingError, SingularInverseError
from .graph import build_graph

__all__ = [
    "ApproximateDownwashCoupling",
    "DownwashCoupling",
    "NominalCoupling",
    "PlanarQuadrotor",
    "PureFeedbackSubsystem",
    "QuadParams",
    "RegularityReport",
    "hover_state",
    "joint_dynamics",
    "make_coupling",
    "regularity_check",
]


@dataclass(frozen=True)
class QuadParams:
    mass: float = 1.0
    inertia: float = 0.1
    gravity: float = 9.81


class PureFeedbackSubsystem:
    """Interface of a subsystem in pure-feedback form with relative degree ``r``.

    ``level_dynamics(k, levels, nxt)`` returns the uncoupled derivative of level
    ``k`` given levels ``0..k`` and ``nxt`` (level ``k+1``, or the input when
    ``k = r-1``).  ``inverse_level_map(k, levels, rate)`` solves that relation
    for ``nxt``.
    """

    r: int
    m: int

    def level_dynamics(self, k, levels, nxt):
        raise NotImplementedError

    def inverse_level_map(self, k, levels, rate):
        raise NotImplementedError

    def level_determinant(self, k, levels, nxt):
        """``|det d(level_dynamics)/d(nxt)|``."""
        raise NotImplementedError


class PlanarQuadrotor(PureFeedbackSubsystem):
    r = 4
    m = 2
    angles = ((2, 1),)  # (level, component) of theta

    def __init__(self, params=None):
        self.params = params or QuadParams()

    def level_dynamics(self, k, levels, nxt):
        p = self.params
        if k == 0 or k == 2:
            return [nxt[0], nxt[1]]
        if k == 1:
            thrust, theta = nxt[0], nxt[1]
            return [
                -thrust * jets.sin(theta) / p.mass,
                thrust * jets.cos(theta) / p.mass - p.gravity,
            ]
        if k == 3:
            return [nxt[0], nxt[1] / p.inertia]
        raise IndexError(f"quadrotor has levels 0..3, got {k}")

    def inverse_level_map(self, k, levels, rate):
        p = self.params
        if k == 0 or k == 2:
            return [rate[0], rate[1]]
        if k == 1:
            ax = rate[0]
            lift = rate[1] + p.gravity
            if abs(jets.value_of(ax)) < 1e-12 and abs(jets.value_of(lift)) < 1e-12:
                raise SingularInverseError("free fall: commanded acceleration equals -g")
            thrust = p.mass * jets.sqrt(ax * ax + lift * lift)
            theta = jets.atan2(-ax, lift)
            return [thrust, theta]
        if k == 3:
            return [rate[0], p.inertia * rate[1]]
        raise IndexError(f"quadrotor has levels 0..3, got {k}")

    def level_determinant(self, k, levels, nxt):
        p = self.params
        if k == 0 or k == 2:
            return 1.0
        if k == 1:
            return abs(float(nxt[0])) / p.mass**2
        if k == 3:
            return 1.0 / p.inertia if p.inertia > 0 else float("inf")
        raise IndexError(k)


def unwrap_angle(theta, previous):
    """Shift ``theta`` by a multiple of 2*pi to land closest to ``previous``."""
    return theta + 2.0 * np.pi * np.round((previous - theta) / (2.0 * np.pi))


# couplings -------------------------------------------------------------------


class NominalCoupling:
    """No interaction between subsystems."""

    kind = "none"
    name = "nominal"

    def active_edges(self, state):
        return set()

    def delta(self, i, k, x, graph):
        return None


class DownwashCoupling:
    """Exact downwash: every vehicle above ``i`` pushes it down.

    The force on ``i`` reads positions and the thrust (level 2) of the vehicles
    above, so it is lower-triangular but not strongly so.
    """

    kind = "lower"
    name = "exact"

    def __init__(self, quad=None, dw=None, torque=False):
        self.quad = quad or QuadParams()
        self.dw = dw or DownwashParams()
        self.torque = torque

    def above(self, pj, pi):
        hj = float(jets.value_of(pj[1]))
        hi = float(jets.value_of(pi[1]))
        if hj == hi:
            raise OrderingError(f"altitude tie at {hj!r}: vertical ordering is ambiguous")
        return hj > hi

    def active_edges(self, state):
        n = len(state)
        edges = set()
        for i in range(n):
            for j in range(n):
                if j != i and self.above(state[j][0], state[i][0]):
                    edges.add((j, i))
        return edges

    def _thrust(self, x, j):
        return x[j][2][0]

    def _force(self, dx, dy, x, j):
        return drag_force(dx, dy, self._thrust(x, j), self.dw)

    def _torque(self, dx, dy, x, j):
        return drag_torque(dx, dy, self._thrust(x, j), self.dw)

    def delta(self, i, k, x, graph):
        if k == 1:
            parents = graph.parents(i)
            if not parents:
                return None
            pi = x[i][0]
            total = 0.0
            for j in parents:
                pj = x[j][0]
                total = total + self._force(pj[0] - pi[0], pj[1] - pi[1], x, j)
            return [0.0, total / self.quad.mass]
        if k == 3 and self.torque:
            parents = graph.parents(i)
            if not parents:
                return None
            pi = x[i][0]
            total = 0.0
            for j in parents:
                pj = x[j][0]
                total = total + self._torque(pj[0] - pi[0], pj[1] - pi[1], x, j)
            return [0.0, total / self.quad.inertia]
        return None


class ApproximateDownwashCoupling(DownwashCoupling):
    """Downwash from vehicles inside a threshold box, upper thrust taken as weight.

    Only positions are read, which makes the coupling strongly lower-triangular.
    """

    kind = "strong"
    name = "approximate"

    def __init__(self, threshold=(0.5, 2.5), quad=None, dw=None, torque=False):
        super().__init__(quad, dw, torque)
        self.threshold = (float(threshold[0]), float(threshold[1]))

    def active_edges(self, state):
        bx, by = self.threshold
        edges = set()
        for j, i in super().active_edges(state):
            dx = float(jets.value_of(state[j][0][0])) - float(jets.value_of(state[i][0][0]))
            dy = float(jets.value_of(state[j][0][1])) - float(jets.value_of(state[i][0][1]))
            if -bx < dx < bx and -by < dy < by:
                edges.add((j, i))
        return edges

    def _thrust(self, x, j):
        return self.quad.mass * self.quad.gravity


def make_coupling(name, quad=None, dw=None, threshold=(0.5, 2.5), torque=False):
    """Coupling model from its id: ``nominal``, ``exact`` or ``approximate``."""
    if name == "nominal":
        return NominalCoupling()
    if name == "exact":
        return DownwashCoupling(quad, dw, torque)
    if name == "approximate":
        return ApproximateDownwashCoupling(threshold, quad, dw, torque)
    raise ValueError(f"unknown coupling model {name!r}")


# joint dynamics -----------------------------------------------------------------


def joint_derivative(x, u, subsystem, coupling, graph):
    """Generic joint derivative as nested lists ``[i][k][c]``."""
    out = []
    r = subsystem.r
    for i in range(len(x)):
        levels = x[i]
        rows = []
        for k in range(r):
            nxt = levels[k + 1] if k + 1 < r else u[i]
            d = subsystem.level_dynamics(k, levels, nxt)
            extra = coupling.delta(i, k, x, graph)
            if extra is not None:
                d = [a + b for a, b in zip(d, extra)]
            rows.append(d)
        out.append(rows)
    return out


def joint_dynamics(state, u, coupling, subsystem, graph=None):
    """``f(x, u) = fbar(x, u) + Delta(x)`` for a float joint state.

    ``graph`` defaults to the coupling's active graph at ``state``.
    """
    if graph is None:
        graph = build_graph(state, coupling)
    d = joint_derivative(state, u, subsystem, coupling, graph)
    return np.array(d, dtype=float)


def hover_state(positions, velocities, quad):
    """Joint state at the given positions/velocities with hover thrust, level attitude."""
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    x = np.zeros((n, 4, 2))
    x[:, 0] = positions
    x[:, 1] = np.asarray(velocities, dtype=float)
    x[:, 2, 0] = quad.mass * quad.gravity
    return x


@dataclass
class RegularityReport:
    per_subsystem: np.ndarray  # (N, r) |det| of each diagonal block
    joint: np.ndarray  # (r,) product over subsystems
    threshold: float
    flagged: list  # (subsystem, level) pairs below threshold or non-finite

    @property
    def ok(self):
        return not self.flagged


def regularity_check(state, u, subsystem, threshold=1e-8):
    """Per-level Jacobian determinants of the uncoupled dynamics.

    With a lower-triangular coupling the joint block ``D_{x_{k+1}} f_k`` is block
    lower-triangular, so its determinant is the product of the per-subsystem
    diagonal determinants reported here.
    """
    n = len(state)
    r = subsystem.r
    dets = np.empty((n, r))
    flagged = []
    for i in range(n):
        for k in range(r):
            nxt = state[i][k + 1] if k + 1 < r else u[i]
            d = subsystem.level_determinant(k, state[i], nxt)
            dets[i, k] = d
            if not np.isfinite(d) or d < threshold:
                flagged.append((i, k))
    return RegularityReport(dets, np.prod(dets, axis=0), threshold, flagged)
