"""Planar downwash model: drag force and torque from a vehicle above.

``delta = p_top - p_bottom = (dx, dy)`` with ``dy > 0``.  The wind speed under
the upper vehicle decays like a Gaussian in ``dx/dy``; integrating the
resulting drag density ``0.5 rho C_D V^2`` over the span of the lower airframe
gives closed forms in terms of ``erf`` and ``exp``.

All functions accept floats or :class:`~flatcoupling.jets.Jet` arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import jets
from .errors import DomainError

__all__ = [
    "DownwashParams",
    "approx_drag_force",
    "approx_drag_torque",
    "drag_density",
    "drag_force",
    "drag_torque",
    "wind_velocity",
]


@dataclass(frozen=True)
class DownwashParams:
    C1: float = 1.0
    C2: float = 0.7
    CD: float = 1.18
    L: float = 0.3
    rho: float = 1.225  # standard sea-level air

    def __post_init__(self):
        for name in ("C1", "C2", "CD", "L", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"downwash parameter {name} must be positive")

    @property
    def C3(self):
        return 0.5 * self.rho * self.CD * self.C1**2


def _check(dy, thrust):
    if not jets.value_of(dy) > 0.0:
        raise DomainError(f"vertical separation must be positive, got {jets.value_of(dy)!r}")
    if jets.value_of(thrust) < 0.0:
        raise DomainError(f"thrust must be non-negative, got {jets.value_of(thrust)!r}")


def wind_velocity(dx, dy, thrust, p):
    _check(dy, thrust)
    if not isinstance(thrust, jets.Jet) and thrust == 0.0:
        return 0.0
    ratio = dx / dy
    return p.C1 * jets.sqrt(thrust) * p.L / dy * jets.exp(-p.C2 * ratio * ratio)


def drag_density(dx, dy, thrust, p):
    """Drag per unit span at horizontal offset ``dx`` from the upper hub."""
    _check(dy, thrust)
    ratio = dx / dy
    return p.C3 * thrust * p.L**2 / (dy * dy) * jets.exp(-2.0 * p.C2 * ratio * ratio)


def drag_force(dx, dy, thrust, p):
    """Vertical drag force on the lower vehicle (non-positive, i.e. downward)."""
    _check(dy, thrust)
    root = math.sqrt(2.0 * p.C2)
    s = root / dy
    half = 0.5 * p.L
    bracket = jets.erf_diff(s * (dx + half), s * (dx - half))
    scale = -p.C3 * math.sqrt(math.pi) * p.L**2 / (2.0 * root)
    return scale * thrust / dy * bracket


def drag_torque(dx, dy, thrust, p):
    """Drag torque about the lower hub, ``-integral(l * D(dx + l) dl)``; odd in ``dx``."""
    _check(dy, thrust)
    root = math.sqrt(2.0 * p.C2)
    s = root / dy
    half = 0.5 * p.L
    up = dx + half
    lo = dx - half
    k_up = s * up
    k_lo = s * lo
    gauss = jets.exp(-(k_up * k_up)) - jets.exp(-(k_lo * k_lo))
    bracket = jets.erf_diff(k_up, k_lo)
    inner = gauss / (4.0 * p.C2) + (math.sqrt(math.pi) / (2.0 * root)) * dx / dy * bracket
    return p.C3 * p.L**2 * thrust * inner


def approx_drag_force(dx, dy, p, mass, gravity):
    """Drag force with the upper vehicle's thrust replaced by its weight."""
    return drag_force(dx, dy, mass * gravity, p)


def approx_drag_torque(dx, dy, p, mass, gravity):
    return drag_torque(dx, dy, mass * gravity, p)
