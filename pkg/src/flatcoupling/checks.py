"""Executable property checks shared by ``flatcoupling verify`` and the tests.

Each check returns a :class:`CheckResult` carrying the measured quantity and
the tolerance it was held to.  Checks only use the library itself and numpy;
reference values that need scipy quadrature or mpmath live in
:mod:`flatcoupling.oracles`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .control import brunovsky_pair, care_residual, lqr_gain
from .downwash import drag_force, drag_torque
from .errors import FlatCouplingError
from .flatness import build_joint_diffeo
from .graph import CouplingGraph, build_graph, info_set
from .jets import Jet
from .plant import (
    ApproximateDownwashCoupling,
    DownwashCoupling,
    PlanarQuadrotor,
    hover_state,
    joint_dynamics,
    regularity_check,
)
from .sim import reference, rk4_step

__all__ = [
    "CheckResult",
    "PolyBundle",
    "check_care",
    "check_chain_rule",
    "check_drag_symmetry",
    "check_ordering",
    "check_quadrature",
    "check_regularity",
    "check_regularity_product",
    "check_rk4_order",
    "check_round_trip",
    "check_sparsity",
    "random_bundle",
    "round_trip_deviation",
    "run_all",
]


@dataclass
class CheckResult:
    name: str
    ok: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        text = f"{status} {self.name}: measured {self.measured:.3e} (tolerance {self.tolerance:.1e})"
        return text + (f" {self.detail}" if self.detail else "")


# random flat-output bundles -----------------------------------------------------


class PolyBundle:
    """Polynomial flat outputs ``y^i(t) = sum_k a[i, k] t^k / k!`` per component."""

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)  # (N, m, degree+1) raw derivatives at 0

    @property
    def n(self):
        return self.coeffs.shape[0]

    def derivatives(self, t, count):
        """Raw derivatives ``y, y', ..., y^(count-1)`` at ``t``, shape (N, m, count)."""
        a = self.coeffs
        deg = a.shape[2]
        out = np.zeros(a.shape[:2] + (count,))
        for d in range(count):
            for k in range(d, deg):
                out[..., d] += a[..., k] * t ** (k - d) / math.factorial(k - d)
        return out

    def jets(self, t, order):
        d = self.derivatives(t, order + 1)
        return {i: [Jet.from_derivatives(d[i, c]) for c in range(d.shape[1])] for i in range(self.n)}

    def position(self, t):
        return self.derivatives(t, 1)[..., 0]


def random_bundle(rng, n=3, degree=6, spacing=1.0, spread=0.3, scale=0.4, horizon=1.0):
    """Stacked vehicles (vehicle 0 on top) with gentle random polynomial motion.

    Draws are rejected until the vertical order holds with a margin of
    ``spacing / 4`` over ``[0, horizon]``, so the fixed ordering stays valid.
    """
    ts = np.linspace(0.0, horizon, 21)
    while True:
        a = scale * rng.standard_normal((n, 2, degree + 1))
        for d in range(1, degree + 1):
            a[:, :, d] /= math.factorial(d)  # keep higher derivatives small
        a[:, 0, 0] = spread * rng.uniform(-1.0, 1.0, n)
        a[:, 1, 0] = spacing * (n - np.arange(n)) + 0.1 * rng.uniform(-1.0, 1.0, n)
        bundle = PolyBundle(a)
        heights = np.array([bundle.position(t)[:, 1] for t in ts])
        if n == 1 or np.min(-np.diff(heights, axis=1)) > 0.25 * spacing:
            return bundle


def round_trip_deviation(bundle, subsystem, coupling, horizon=1.0, dt=1e-2):
    """Integrate the recovered input open loop; return max ``|x_1 - y|``.

    The input is re-evaluated from the bundle at every RK4 stage time, so the
    only error left is the integrator's truncation error.
    """
    r = subsystem.r

    def recover(t):
        y = bundle.jets(t, r)
        x0 = np.zeros((bundle.n, r, subsystem.m))
        x0[:, 0] = bundle.position(t)
        graph = build_graph(x0, coupling)
        return build_joint_diffeo(y, subsystem, coupling, graph)

    x = recover(0.0).states
    worst = 0.0
    steps = int(round(horizon / dt))
    for s in range(steps):
        t = s * dt
        u0 = recover(t).inputs
        um = recover(t + 0.5 * dt).inputs
        u1 = recover(t + dt).inputs

        def f(state, u):
            return joint_dynamics(state, u, coupling, subsystem)

        k1 = f(x, u0)
        k2 = f(x + 0.5 * dt * k1, um)
        k3 = f(x + 0.5 * dt * k2, um)
        k4 = f(x + dt * k3, u1)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        dev = float(np.max(np.abs(x[:, 0] - bundle.position(t + dt))))
        if not math.isfinite(dev):
            return math.inf
        worst = max(worst, dev)
    return worst


# individual checks --------------------------------------------------------------


def check_regularity(cfg):
    """Level determinants along the reference start are finite and above threshold."""
    subsystem = PlanarQuadrotor(cfg.quad)
    pos = np.array([reference(i, 0.0, cfg)[0][0:2] for i in range(cfg.N)])
    x = hover_state(pos, np.zeros_like(pos), cfg.quad)
    report = regularity_check(x, np.zeros((cfg.N, 2)), subsystem)
    finite = report.per_subsystem[np.isfinite(report.per_subsystem)]
    low = float(finite.min()) if finite.size else math.nan
    detail = ""
    if report.flagged:
        i, k = report.flagged[0]
        detail = f"(vehicle {i + 1} level {k + 1} determinant {report.per_subsystem[i, k]!r})"
    return CheckResult("regularity", report.ok, low, report.threshold, detail)


def check_ordering(cfg):
    """The exact model's graph at the start respects the fixed ordering."""
    coupling = DownwashCoupling(cfg.quad, cfg.dw, cfg.torque_coupling)
    pos = np.array([reference(i, 0.0, cfg)[0][0:2] for i in range(cfg.N)])
    x = hover_state(pos, np.zeros_like(pos), cfg.quad)
    try:
        g = build_graph(x, coupling)
    except FlatCouplingError as exc:
        return CheckResult("ordering", False, math.nan, 0.0, f"({type(exc).__name__}: {exc})")
    return CheckResult("ordering", True, float(len(g.edges)), 0.0, "(edge count)")


def check_round_trip(cfg, samples=3, seed=0, tol=1e-6):
    rng = np.random.default_rng(seed)
    subsystem = PlanarQuadrotor(cfg.quad)
    coupling = DownwashCoupling(cfg.quad, cfg.dw, cfg.torque_coupling)
    worst = 0.0
    for _ in range(samples):
        bundle = random_bundle(rng, n=3)
        worst = max(worst, round_trip_deviation(bundle, subsystem, coupling))
    return CheckResult("round_trip", worst < tol, worst, tol)


def _phi_equal(a, b):
    return all(np.array_equal(p.coeffs, q.coeffs) for p, q in zip(a, b))


def sparsity_violations(rng, coupling, subsystem, n=5):
    """Count ``Phi^i_k`` entries that change when out-of-set flat outputs move."""
    r = subsystem.r
    bundle = random_bundle(rng, n=n, spacing=0.6, spread=0.8)
    y = bundle.jets(0.0, r)
    x0 = np.zeros((n, r, subsystem.m))
    x0[:, 0] = bundle.position(0.0)
    graph = build_graph(x0, coupling)
    base = build_joint_diffeo(y, subsystem, coupling, graph).phi
    violations = 0
    for i in range(n):
        for k in range(1, r + 2):
            keep = info_set(graph, i, k, coupling)
            y2 = {
                j: comps if j in keep else
                [Jet(c.coeffs + rng.standard_normal(c.coeffs.size) * 0.05) for c in comps]
                for j, comps in y.items()
            }
            phi = build_joint_diffeo(y2, subsystem, coupling, graph).phi
            if not _phi_equal(base[i][k - 1], phi[i][k - 1]):
                violations += 1
    return violations


def check_sparsity(cfg, samples=5, seed=1):
    rng = np.random.default_rng(seed)
    subsystem = PlanarQuadrotor(cfg.quad)
    models = (
        DownwashCoupling(cfg.quad, cfg.dw, cfg.torque_coupling),
        ApproximateDownwashCoupling((1.0, 1.0), cfg.quad, cfg.dw, cfg.torque_coupling),
    )
    bad = 0
    for _ in range(samples):
        for model in models:
            bad += sparsity_violations(rng, model, subsystem)
    return CheckResult("sparsity", bad == 0, float(bad), 0.0, "(changed entries)")


def quadrature_grid(nx=20, ny=20, thrusts=(2.0, 9.81, 20.0)):
    return np.linspace(-1.5, 1.5, nx), np.linspace(0.3, 3.0, ny), tuple(thrusts)


def check_quadrature(cfg, grid=None, tol=1e-10):
    """Closed-form drag force and torque against adaptive quadrature."""
    from .oracles import quad_force, quad_torque

    dxs, dys, thrusts = grid or quadrature_grid(8, 8)
    p = cfg.dw
    worst = 0.0
    for dx in dxs:
        for dy in dys:
            for T in thrusts:
                qf = quad_force(dx, dy, T, p)
                qt = quad_torque(dx, dy, T, p)
                worst = max(worst, abs(drag_force(dx, dy, T, p) - qf) / abs(qf))
                if qt != 0.0:
                    worst = max(worst, abs(drag_torque(dx, dy, T, p) - qt) / abs(qt))
    return CheckResult("quadrature", worst <= tol, worst, tol)


def check_drag_symmetry(cfg, grid=None, tol=1e-12):
    """``F_D`` even and ``tau_D`` odd in the horizontal offset."""
    dxs, dys, thrusts = grid or quadrature_grid()
    p = cfg.dw
    worst = 0.0
    for dx in dxs:
        for dy in dys:
            for T in thrusts:
                f = drag_force(dx, dy, T, p)
                tq = drag_torque(dx, dy, T, p)
                worst = max(worst, abs(f - drag_force(-dx, dy, T, p)) / abs(f))
                if tq != 0.0:
                    worst = max(worst, abs(tq + drag_torque(-dx, dy, T, p)) / abs(tq))
    return CheckResult("drag_symmetry", worst <= tol, worst, tol)


_CHAIN_FUNCS = {
    "exp": (jets.exp, lambda a: jets.exp(a)),
    "sin": (jets.sin, lambda a: jets.cos(a)),
    "cos": (jets.cos, lambda a: -jets.sin(a)),
    "sqrt": (jets.sqrt, lambda a: 0.5 / jets.sqrt(a)),
    "reciprocal": (jets.reciprocal, lambda a: -1.0 / (a * a)),
    "erf": (jets.erf, lambda a: (2.0 / math.sqrt(math.pi)) * jets.exp(-(a * a))),
}


def chain_rule_error(rng, order=5, samples=20):
    """Worst relative gap between ``shift(f(a))`` and ``f'(a) shift(a)``."""
    worst = 0.0
    for _ in range(samples):
        c = rng.standard_normal(order + 1)
        c[0] = rng.uniform(0.5, 2.0)
        a = Jet(c)
        for f, df in _CHAIN_FUNCS.values():
            lhs = f(a).shift()
            rhs = df(a.truncate(order - 1)) * a.shift()
            scale = max(np.max(np.abs(rhs.coeffs)), 1e-300)
            worst = max(worst, float(np.max(np.abs(lhs.coeffs - rhs.coeffs)) / scale))
        b = Jet(rng.standard_normal(order + 1))
        lhs = jets.atan2(a, b).shift()
        rhs = (b.truncate(order - 1) * a.shift() - a.truncate(order - 1) * b.shift()) / (
            a.truncate(order - 1) ** 2 + b.truncate(order - 1) ** 2
        )
        scale = max(np.max(np.abs(rhs.coeffs)), 1e-300)
        worst = max(worst, float(np.max(np.abs(lhs.coeffs - rhs.coeffs)) / scale))
    return worst


def check_chain_rule(cfg=None, seed=2, tol=1e-12):
    err = chain_rule_error(np.random.default_rng(seed))
    return CheckResult("jet_chain_rule", err <= tol, err, tol)


def care_check_values(cfg):
    r, m = 4, 2
    A, B = brunovsky_pair(r, m)
    Q = cfg.q_scale * np.eye(r * m)
    R = cfg.r_scale * np.eye(m)
    K, P = lqr_gain(A, B, Q, R)
    res = float(np.linalg.norm(care_residual(A, B, Q, R, P)))
    abscissa = float(np.max(np.linalg.eigvals(A - B @ K).real))
    return res, abscissa


def check_care(cfg, tol=1e-9):
    res, abscissa = care_check_values(cfg)
    ok = res <= tol and abscissa < 0.0
    return CheckResult("care", ok, res, tol, f"(spectral abscissa {abscissa:.4f})")


def rk4_observed_order(lam=-1.3, steps=(0.2, 0.1, 0.05, 0.025)):
    """Observed order of the one-step RK4 error on ``x' = lam x`` under dt halving."""
    def f(x, u):
        return lam * x

    errs = []
    for dt in steps:
        x = rk4_step(f, np.array([1.0]), None, dt)
        errs.append(abs(x[0] - math.exp(lam * dt)))
    return min(math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1))


def check_rk4_order(cfg=None, tol=4.9):
    order = rk4_observed_order()
    return CheckResult("rk4_order", order >= tol, order, tol, "(one-step error order)")


def joint_level_jacobian(state, u, coupling, subsystem, k, h=1e-5):
    """Central-difference Jacobian of joint level ``k`` w.r.t. joint level ``k+1``."""
    n, r, m = state.shape
    graph = build_graph(state, coupling)

    def level(xv, uv):
        return joint_dynamics(xv, uv, coupling, subsystem, graph)[:, k].reshape(-1)

    J = np.empty((n * m, n * m))
    for col in range(n * m):
        j, c = divmod(col, m)
        xp, xm = state.copy(), state.copy()
        up, um = u.copy(), u.copy()
        if k + 1 < r:
            xp[j, k + 1, c] += h
            xm[j, k + 1, c] -= h
        else:
            up[j, c] += h
            um[j, c] -= h
        J[:, col] = (level(xp, up) - level(xm, um)) / (2.0 * h)
    return J


def regularity_product_error(rng, cfg, n=3):
    """Worst relative gap between joint block determinants and per-vehicle products."""
    subsystem = PlanarQuadrotor(cfg.quad)
    coupling = DownwashCoupling(cfg.quad, cfg.dw, torque=True)
    x = np.zeros((n, 4, 2))
    x[:, 0, 0] = rng.uniform(-0.4, 0.4, n)
    x[:, 0, 1] = np.arange(n, 0, -1) * 0.8 + rng.uniform(-0.1, 0.1, n)
    x[:, 1] = rng.standard_normal((n, 2))
    x[:, 2, 0] = rng.uniform(5.0, 15.0, n)
    x[:, 2, 1] = rng.uniform(-0.5, 0.5, n)
    x[:, 3] = rng.standard_normal((n, 2))
    u = rng.standard_normal((n, 2))
    report = regularity_check(x, u, subsystem)
    worst = 0.0
    for k in range(subsystem.r):
        det = np.linalg.det(joint_level_jacobian(x, u, coupling, subsystem, k))
        gap = abs(det - report.joint[k]) / abs(report.joint[k])
        if not math.isfinite(gap):
            return math.inf
        worst = max(worst, gap)
    return worst


def check_regularity_product(cfg, samples=5, seed=3, tol=1e-8):
    rng = np.random.default_rng(seed)
    worst = max(regularity_product_error(rng, cfg) for _ in range(samples))
    return CheckResult("regularity_product", worst <= tol, worst, tol)


CHECKS = (
    check_regularity,
    check_ordering,
    check_round_trip,
    check_sparsity,
    check_quadrature,
    check_drag_symmetry,
    check_chain_rule,
    check_care,
    check_rk4_order,
    check_regularity_product,
)


def run_all(cfg):
    """Run every check; an exception inside a check counts as its failure."""
    results = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            with np.errstate(all="ignore"):
                results.append(check(cfg))
        except Exception as exc:  # report, never crash the report
            results.append(
                CheckResult(name, False, math.nan, math.nan, f"({type(exc).__name__}: {exc})")
            )
    return results
