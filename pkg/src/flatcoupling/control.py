"""Linear control in flat coordinates and the distributed flatness controller.

Each subsystem's flat state ``z = [y, y', ..., y^(r-1)]`` (derivative blocks of
size ``m``) obeys a chain of integrators ``z' = A z + B v`` with ``v = y^(r)``.
A linear tracking law picks ``v``; the joint flatness diffeomorphism, evaluated
on the subsystems in the local information set only, turns it into the
physical input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .errors import InformationContractError, SynthesisError
from .flatness import build_joint_diffeo, flat_jets_from_points
from .graph import info_set

__all__ = [
    "FlatPoint",
    "GainSet",
    "brunovsky_initial_gain",
    "brunovsky_pair",
    "care_residual",
    "distributed_control_step",
    "lqr_gain",
    "make_gains",
    "tracking_virtual_input",
]


@dataclass(frozen=True)
class FlatPoint:
    z: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class GainSet:
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray
    P: np.ndarray


def brunovsky_pair(r, m):
    """Block chain of ``r`` integrators with ``m`` channels."""
    if r < 1 or m < 1:
        raise ValueError("r and m must be positive")
    n = r * m
    A = np.zeros((n, n))
    for k in range(r - 1):
        A[k * m:(k + 1) * m, (k + 1) * m:(k + 2) * m] = np.eye(m)
    B = np.zeros((n, m))
    B[(r - 1) * m:, :] = np.eye(m)
    return A, B


def brunovsky_initial_gain(r, m):
    """Gain placing every channel's poles at ``-1, -2, ..., -r``."""
    coeffs = np.poly(-np.arange(1.0, r + 1.0))  # s^r + a_{r-1} s^{r-1} + ... + a_0
    a = coeffs[::-1][:r]  # a_0 .. a_{r-1}
    K = np.zeros((m, r * m))
    for k in range(r):
        K[:, k * m:(k + 1) * m] = a[k] * np.eye(m)
    return K


def care_residual(A, B, Q, R, P):
    BRB = B @ np.linalg.solve(R, B.T)
    return A.T @ P + P @ A - P @ BRB @ P + Q


def _is_hurwitz(M):
    return bool(np.max(np.linalg.eigvals(M).real) < 0.0) if M.size else True


def _initial_gain(A, B):
    n, m = B.shape
    if n % m == 0:
        A_b, B_b = brunovsky_pair(n // m, m)
        if np.array_equal(A, A_b) and np.array_equal(B, B_b):
            return brunovsky_initial_gain(n // m, m)
    if _is_hurwitz(A):
        return np.zeros((m, n))
    try:
        return signal.place_poles(A, B, -np.arange(1.0, n + 1.0)).gain_matrix
    except ValueError as exc:
        raise SynthesisError(f"no stabilizing initial gain: {exc}") from exc


def lqr_gain(A, B, Q, R, K0=None, tol=1e-12, max_iter=100):
    """Continuous-time LQR gain by Newton-Kleinman iteration.

    Returns ``(K, P)`` with ``P`` the stabilizing solution of
    ``A'P + PA - P B R^-1 B' P + Q = 0`` and ``K = R^-1 B' P``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    K = _initial_gain(A, B) if K0 is None else np.atleast_2d(np.asarray(K0, dtype=float))
    if not _is_hurwitz(A - B @ K):
        raise SynthesisError("initial gain does not stabilize the pair")
    for _ in range(max_iter):
        Acl = A - B @ K
        P = linalg.solve_continuous_lyapunov(Acl.T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
        K_next = np.linalg.solve(R, B.T @ P)
        if not np.all(np.isfinite(K_next)):
            raise SynthesisError("Newton-Kleinman iteration diverged")
        step = np.linalg.norm(K_next - K)
        K = K_next
        if step <= tol * (1.0 + np.linalg.norm(K)):
            break
    else:
        raise SynthesisError(f"Newton-Kleinman did not converge in {max_iter} iterations")
    if not _is_hurwitz(A - B @ K):
        raise SynthesisError("closed loop is not Hurwitz")
    return K, P


def make_gains(r, m, q_scale=100.0, r_scale=1.0):
    A, B = brunovsky_pair(r, m)
    K, P = lqr_gain(A, B, q_scale * np.eye(r * m), r_scale * np.eye(m))
    return GainSet(A, B, K, P)


def tracking_virtual_input(z, z_ref, v_ref, K):
    """``v = v_ref - K (z - z_ref)``."""
    return np.asarray(v_ref, dtype=float) - K @ (np.asarray(z, dtype=float) - z_ref)


def distributed_control_step(i, gathered, subsystem, coupling, graph, previous=None):
    """Physical input of subsystem ``i`` from local flat data only.

    ``gathered`` maps subsystem index to :class:`FlatPoint` and must cover the
    information set of ``i`` for ``coupling`` under ``graph``; anything not in
    it is invisible to the evaluation.
    """
    r, m = subsystem.r, subsystem.m
    needed = info_set(graph, i, r + 1, coupling)
    missing = needed - set(gathered)
    if missing:
        raise InformationContractError(
            f"subsystem {i} lacks flat data from {sorted(missing)}"
        )
    y = {}
    for j in needed:
        point = gathered[j]
        y[j] = flat_jets_from_points(point.z, point.v, r, m)
    out = build_joint_diffeo(y, subsystem, coupling, graph, nodes=needed, previous=previous)
    return out.inputs[i]
