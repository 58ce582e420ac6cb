"""Closed-loop simulation of the crossing-formation scenario.

Vehicles are split into two interleaved groups that fly past each other at
constant speed while holding evenly stacked altitudes.  At every control tick
each vehicle computes its flat state and picks a virtual input with the LQR
tracking law.  Its row of the flatness diffeomorphism, fed with the flat data
of its information set, turns that into the physical input.  The plant always
evolves under the exact downwash coupling, integrated with RK4 under a
zero-order hold.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .control import FlatPoint, distributed_control_step, make_gains, tracking_virtual_input
from .downwash import DownwashParams
from .errors import ConfigError, DomainError, FlatCouplingError
from .flatness import build_joint_diffeo, flat_jets_from_points, forward_flat_state
from .graph import build_graph, format_edges, info_set
from .plant import DownwashCoupling, PlanarQuadrotor, QuadParams, joint_dynamics, make_coupling

__all__ = [
    "RunLog",
    "ScenarioConfig",
    "initial_state",
    "reference",
    "rk4_step",
    "run",
    "sweep_threshold",
]

VARIANTS = ("exact", "approximate", "nominal")


@dataclass(frozen=True)
class ScenarioConfig:
    N: int = 4
    duration: float = 5.0
    speed: float = 1.0
    dt: float = 0.01
    control_rate: float = 100.0
    variant: str = "exact"
    threshold: tuple = (0.5, 2.5)
    torque_coupling: bool = False
    altitude_spacing: float = 1.0
    mass: float = 1.0
    inertia: float = 0.1
    gravity: float = 9.81
    C1: float = 1.0
    C2: float = 0.7
    CD: float = 1.18
    L: float = 0.3
    rho: float = 1.225
    q_scale: float = 100.0
    r_scale: float = 1.0
    initial: str = "flat"
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if not self.dt > 0 or not self.duration > 0 or not self.control_rate > 0:
            raise ConfigError("dt, duration and control_rate must all be positive")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.initial not in ("flat", "hover"):
            raise ConfigError(f"initial must be 'flat' or 'hover', got {self.initial!r}")
        if len(self.threshold) != 2 or min(self.threshold) < 0:
            raise ConfigError("threshold must be two non-negative numbers")
        steps = self.control_period / self.dt
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ConfigError("control period must be an integer multiple of dt")

    @property
    def control_period(self):
        return 1.0 / self.control_rate

    @property
    def steps_per_tick(self):
        return int(round(self.control_period / self.dt))

    @property
    def steps(self):
        return int(math.floor(self.duration / self.dt + 1e-9))

    @property
    def quad(self):
        return QuadParams(self.mass, self.inertia, self.gravity)

    @property
    def dw(self):
        return DownwashParams(self.C1, self.C2, self.CD, self.L, self.rho)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def reference(i, t, cfg):
    """Flat reference ``(z_ref, v_ref)`` of vehicle ``i`` (0-based) at time ``t``.

    Odd-numbered vehicles (1-based) start on the left, even-numbered on the
    right; vehicle 1 flies highest.
    """
    sign = -1.0 if (i + 1) % 2 else 1.0  # (-1)^(i+1) for 1-based i+1
    half = 0.5 * cfg.speed * cfg.duration
    z = np.zeros(8)
    z[0] = sign * (half - cfg.speed * t)
    z[1] = (cfg.N - i) * cfg.altitude_spacing
    z[2] = -sign * cfg.speed
    return z, np.zeros(2)


def initial_state(cfg):
    """Starting joint state on the reference.

    ``initial = "flat"`` maps the reference flat outputs through the exact
    coupled diffeomorphism, so lower vehicles already carry the extra thrust
    that balances the downwash.  ``"hover"`` gives every vehicle hover thrust
    and level attitude regardless of the coupling.
    """
    x = np.zeros((cfg.N, 4, 2))
    for i in range(cfg.N):
        z, _ = reference(i, 0.0, cfg)
        x[i, 0] = z[0:2]
        x[i, 1] = z[2:4]
        x[i, 2, 0] = cfg.mass * cfg.gravity
    if cfg.initial == "hover":
        return x
    subsystem = PlanarQuadrotor(cfg.quad)
    physics = DownwashCoupling(cfg.quad, cfg.dw, cfg.torque_coupling)
    y = {}
    for i in range(cfg.N):
        z, v = reference(i, 0.0, cfg)
        y[i] = flat_jets_from_points(z, v, subsystem.r, subsystem.m)
    return build_joint_diffeo(y, subsystem, physics, build_graph(x, physics)).states


def rk4_step(f, x, u, dt):
    """Classical RK4 step of ``x' = f(x, u)`` with ``u`` held constant."""
    k1 = f(x, u)
    k2 = f(x + 0.5 * dt * k1, u)
    k3 = f(x + 0.5 * dt * k2, u)
    k4 = f(x + dt * k3, u)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise DomainError("non-finite state in RK4 step")
    return x_next


@dataclass
class RunLog:
    cfg: ScenarioConfig
    times: np.ndarray  # (S,) sample times k*dt, k = 1..S
    states: np.ndarray  # (S, N, 4, 2)
    inputs: np.ndarray  # (S, N, 2) input held over (t - dt, t]
    ref_positions: np.ndarray  # (S, N, 2)
    errors: np.ndarray  # (S, N) Euclidean position error
    set_sizes: np.ndarray  # (S, N) size of the information set used for the held input
    edges: list  # (S,) model-graph edges at the tick that produced the held input
    wall_time: float = 0.0
    summary: dict = field(default_factory=dict)

    @property
    def e_pos(self):
        return self.summary["e_pos"]


def _summarize(log):
    cfg = log.cfg
    scale = cfg.dt / cfg.duration
    per_vehicle = scale * log.errors.sum(axis=0)
    return {
        "variant": cfg.variant,
        "N": cfg.N,
        "steps": len(log.times),
        "e_pos": float(scale * log.errors.sum() / cfg.N),
        "e_pos_per_vehicle": [float(e) for e in per_vehicle],
        "max_thrust_deviation": float(
            np.max(np.abs(log.states[:, :, 2, 0] - cfg.mass * cfg.gravity))
        ),
        "min_thrust": float(np.min(log.states[:, :, 2, 0])),
        "mean_set_size": float(np.mean(log.set_sizes)),
        "wall_time": log.wall_time,
    }


class _Controller:
    def __init__(self, cfg, subsystem):
        self.cfg = cfg
        self.subsystem = subsystem
        self.gains = make_gains(subsystem.r, subsystem.m, cfg.q_scale, cfg.r_scale)
        self.model = make_coupling(
            cfg.variant, cfg.quad, cfg.dw, cfg.threshold, cfg.torque_coupling
        )

    def __call__(self, t, x):
        cfg = self.cfg
        n = cfg.N
        r = self.subsystem.r
        graph = build_graph(x, self.model)
        sets = {i: info_set(graph, i, r + 1, self.model) for i in range(n)}
        points = {}
        for i in range(n):
            # Each vehicle sees its flat state through its own coupling model,
            # reading physical states of its information set only.
            z = forward_flat_state(x, self.subsystem, self.model, graph, nodes=sets[i])[i]
            z_ref, v_ref = reference(i, t, cfg)
            points[i] = FlatPoint(z, tracking_virtual_input(z, z_ref, v_ref, self.gains.K))
        u = np.zeros((n, self.subsystem.m))
        sizes = np.zeros(n, dtype=int)
        for i in graph.order:
            needed = sets[i]
            gathered = {j: points[j] for j in needed}
            try:
                u[i] = distributed_control_step(
                    i, gathered, self.subsystem, self.model, graph, previous=x
                )
            except FlatCouplingError as exc:
                raise DomainError(f"t={t:.4f}s vehicle {i + 1}: {exc}") from exc
            sizes[i] = len(needed)
        return u, sizes, format_edges(graph)


def run(cfg):
    """Simulate ``cfg`` and return the full :class:`RunLog`."""
    start = time.perf_counter()
    quad = cfg.quad
    subsystem = PlanarQuadrotor(quad)
    physics = DownwashCoupling(quad, cfg.dw, cfg.torque_coupling)
    controller = _Controller(cfg, subsystem)

    def f(x, u):
        return joint_dynamics(x, u, physics, subsystem)

    n, steps = cfg.N, cfg.steps
    times = np.empty(steps)
    states = np.empty((steps, n, 4, 2))
    inputs = np.empty((steps, n, 2))
    refs = np.empty((steps, n, 2))
    errors = np.empty((steps, n))
    sizes = np.empty((steps, n), dtype=int)
    edges = []

    x = initial_state(cfg)
    u = np.zeros((n, 2))
    tick_sizes = np.zeros(n, dtype=int)
    tick_edges = ""
    for s in range(steps):
        t = s * cfg.dt
        if s % cfg.steps_per_tick == 0:
            u, tick_sizes, tick_edges = controller(t, x)
        try:
            x = rk4_step(f, x, u, cfg.dt)
        except FlatCouplingError as exc:
            raise DomainError(f"t={t:.4f}s: {exc}") from exc
        low = np.flatnonzero(x[:, 2, 0] <= 0.0)
        if low.size:
            raise DomainError(
                f"t={t + cfg.dt:.4f}s vehicle {low[0] + 1}: thrust left the regular domain"
            )
        t_next = (s + 1) * cfg.dt
        times[s] = t_next
        states[s] = x
        inputs[s] = u
        for i in range(n):
            refs[s, i] = reference(i, t_next, cfg)[0][0:2]
        errors[s] = np.linalg.norm(x[:, 0] - refs[s], axis=1)
        sizes[s] = tick_sizes
        edges.append(tick_edges)

    log = RunLog(cfg, times, states, inputs, refs, errors, sizes, edges)
    log.wall_time = time.perf_counter() - start
    log.summary = _summarize(log)
    return log


def _sweep_row(args):
    base, delta = args
    cfg = base.replace(variant="approximate", threshold=(delta, delta))
    log = run(cfg)
    per_vehicle = np.asarray(log.summary["e_pos_per_vehicle"])
    q25, q75 = np.percentile(per_vehicle, [25, 75])
    return {
        "threshold": float(delta),
        "e_pos": log.summary["e_pos"],
        "iqr_low": float(q25),
        "iqr_high": float(q75),
        "mean_set_size": log.summary["mean_set_size"],
    }


def sweep_threshold(base, thresholds, jobs=1):
    """Approximate-controller runs over square thresholds, rows in input order."""
    thresholds = list(thresholds)
    if not thresholds:
        raise ConfigError("threshold list is empty")
    if any(d < 0 for d in thresholds):
        raise ConfigError("thresholds must be non-negative")
    tasks = [(base, float(d)) for d in thresholds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]
