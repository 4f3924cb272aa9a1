"""Finite-difference geometry of the soliton families.

Each family is viewed through a local chart ``c -> F(c)`` around a sample
point.  Tangent vectors come from central differences of order 2 or 4; the
mean curvature is ``H = J grad(theta)`` with the gradient taken in the
induced metric, where ``theta`` is the closed-form Lagrangian angle.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .families import SolitonParams, soliton_phase, soliton_point

__all__ = [
    "chart",
    "tangent_frame",
    "frame_phase",
    "numeric_mean_curvature",
    "laplace_beltrami",
    "perp",
    "soliton_residual",
    "asymptotic_decay",
    "default_grid",
]

_STENCILS = {
    2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
}


def _sphere_basis(x0):
    """Orthonormal basis ``E`` of the complement of ``x0`` with ``det[x0|E] = -1``.

    The sign makes ``(d/dy, E)`` agree with the orientation for which the
    closed-form angle tends to 0 on the ``y -> -inf`` end.
    """
    m = x0.size
    q, _ = np.linalg.qr(np.column_stack([x0, np.eye(m)]))
    e = q[:, 1:m]
    if np.sign(np.linalg.det(np.column_stack([x0, e]))) != -1:
        e[:, 0] = -e[:, 0]
    return e


def chart(params: SolitonParams, y, x=()):
    """Local chart around the sample with parameters ``(y, x)``.

    Returns
    -------
    F : callable
        ``F(c)`` for chart coordinates ``c`` (length m) gives a point of C^m.
    theta : callable
        Closed-form Lagrangian angle at chart coordinates (None for the
        Harvey-Lawson examples).
    c0 : ndarray
        Chart coordinates of the sample.
    """
    k = params.kind
    if k == "grim_reaper":
        return (lambda c: soliton_point(params, c[0], ())), (lambda c: soliton_phase(params, c[0])), np.array([float(y)])
    if k in ("hl_cone", "hl_L1"):
        b = np.asarray(x, float)
        return (lambda c: soliton_point(params, c[0], c[1:])), None, np.array([float(y), b[0], b[1]])
    if k == "translator":
        x = np.asarray(x, float)
        return (lambda c: soliton_point(params, c[0], c[1:])), (lambda c: soliton_phase(params, c[0])), np.concatenate([[float(y)], x])
    x0 = np.asarray(x, float)
    x0 = x0 / np.linalg.norm(x0)
    e = _sphere_basis(x0)

    def F(c):
        v = x0 + e @ c[1:]
        return soliton_point(params, c[0], v / np.linalg.norm(v))

    return F, (lambda c: soliton_phase(params, c[0])), np.concatenate([[float(y)], np.zeros(params.m - 1)])


def _partials(f, c0, h, order):
    """Central-difference partial derivatives of ``f`` at ``c0`` (list over coordinates)."""
    offs, w = _STENCILS[order]
    out = []
    for i in range(c0.size):
        e = np.zeros(c0.size)
        e[i] = h
        acc = sum(wj * np.asarray(f(c0 + oj * e)) for oj, wj in zip(offs, w))
        out.append(acc / h)
    return out


def tangent_frame(params, y, x=(), h=1e-3, order=4) -> np.ndarray:
    """Columns are ``dF/dc_i`` at the sample; shape ``(m, m)`` complex."""
    F, _, c0 = chart(params, y, x)
    return np.column_stack(_partials(F, c0, h, order))


def frame_phase(params, y, x=(), h=1e-3, order=4) -> float:
    """Lagrangian angle read off the finite-difference tangent frame.

    For a Lagrangian frame ``arg det`` of the frame is unchanged by real
    Gram-Schmidt, so no orthonormalization is needed.
    """
    d = np.linalg.det(tangent_frame(params, y, x, h, order))
    return math.atan2(d.imag, d.real)


def _metric(T):
    return (T.conj().T @ T).real


def perp(T, v):
    """Component of ``v`` normal to the real span of the columns of ``T``."""
    g = _metric(T)
    coef = np.linalg.solve(g, (T.conj().T @ v).real)
    return v - T @ coef


def numeric_mean_curvature(params: SolitonParams, y, x=(), h=1e-3, order=4) -> np.ndarray:
    """Mean curvature vector ``J grad(theta)`` at a sample, by finite differences.

    Raises
    ------
    ValueError
        If the induced metric is degenerate at the sample.
    """
    F, theta, c0 = chart(params, y, x)
    if theta is None:
        raise ValueError(f"{params.kind} has no closed-form phase; use laplace_beltrami")
    T = np.column_stack(_partials(F, c0, h, order))
    g = _metric(T)
    if np.linalg.cond(g) > 1e12:
        raise ValueError("degenerate induced metric at sample")
    dtheta = np.array(_partials(theta, c0, h, order), float)
    grad = T @ np.linalg.solve(g, dtheta)
    return 1j * grad


def laplace_beltrami(params: SolitonParams, y, x=(), h=1e-3) -> np.ndarray:
    """Mean curvature as the Laplace-Beltrami operator applied to the position.

    Independent of any phase formula; second order accurate in ``h``.
    """
    F, _, c0 = chart(params, y, x)
    n = c0.size

    def flux(c):
        T = np.column_stack(_partials(F, c, h, 2))
        g = _metric(T)
        ginv = np.linalg.inv(g)
        return math.sqrt(np.linalg.det(g)), ginv, T

    sg0, _, _ = flux(c0)
    total = np.zeros(len(F(c0)), complex)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        vals = []
        for s in (1.0, -1.0):
            sg, ginv, T = flux(c0 + s * e)
            vals.append(sg * (T @ ginv[:, i]))
        total += (vals[0] - vals[1]) / (2 * h)
    return total / sg0


def _target(params, F_point, T):
    if params.kind in ("lawlor", "expander"):
        return params.alpha * perp(T, F_point)
    if params.kind == "translator":
        v = np.zeros(params.m, complex)
        v[-1] = params.alpha
        return perp(T, v)
    if params.kind == "grim_reaper":
        return perp(T, np.array([1.0 + 0j]))
    return np.zeros_like(F_point)


def default_grid(params: SolitonParams, n_y: int = 9, n_x: int = 3, seed: int = 0, y_max: float = 2.0):
    """Deterministic sample grid ``[(y, x), ...]`` for residual studies."""
    rng = np.random.default_rng(seed)
    ys = np.linspace(-y_max, y_max, n_y)
    if params.kind == "grim_reaper":
        return [(float(v), ()) for v in np.linspace(-1.2, 1.2, n_y)]
    pts = []
    for _ in range(n_x):
        if params.kind == "translator":
            xv = rng.uniform(-1, 1, params.m - 1)
        elif params.kind in ("hl_cone", "hl_L1"):
            xv = rng.uniform(-math.pi, math.pi, 2)
        else:
            xv = rng.standard_normal(params.m)
            xv /= np.linalg.norm(xv)
        pts.extend((float(v), xv) for v in ys)
    return pts


def soliton_residual(params: SolitonParams, grid=None, h=1e-3, order=2) -> float:
    """Max over the grid of ``|H - alpha F_perp|`` (or ``|H - v_perp|`` for translators)."""
    if grid is None:
        grid = default_grid(params)
    worst = 0.0
    for y, x in grid:
        F, _, c0 = chart(params, y, x)
        T = np.column_stack(_partials(F, c0, h, order))
        H = numeric_mean_curvature(params, y, x, h, order)
        worst = max(worst, float(np.linalg.norm(H - _target(params, F(c0), T))))
    return worst


def _directions(m, n_random=16, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((n_random, m))
    r /= np.linalg.norm(r, axis=1, keepdims=True)
    return np.vstack([np.eye(m), r])


def asymptotic_decay(params: SolitonParams, radii: Sequence[float], directions=None):
    """Fitted asymptotic rate ``rho`` of the end towards the cone.

    The distance from the surface to the cone at radius ``r`` behaves like
    ``r**(rho - 1)``; we fit the slope of ``log(dist)`` against ``log(r)`` by
    least squares and return ``slope + 1``.  Distances use the profile tails
    directly so they keep relative accuracy far out.

    Returns
    -------
    rho : float
        ``-inf`` when fewer than two radii have a representable distance.
    radii, dist : ndarray
        The data the fit used.
    """
    if params.kind not in ("lawlor", "expander"):
        raise ValueError("asymptotic_decay applies to lawlor and expander")
    r = np.asarray(radii, float)
    if r.size < 2 or np.any(np.diff(r) <= 0):
        raise ValueError("radii must be strictly increasing")
    a = np.asarray(params.a)
    pr = params.profile
    dirs = _directions(params.m) if directions is None else np.asarray(directions, float)
    dist = np.zeros(r.size)
    for x in dirs:
        q = float(np.sum(x * x / a))
        y = np.sqrt(np.maximum(r * r - q, 0.0))
        scale = np.abs(x)[:, None] * np.sqrt(1.0 / a[:, None] + y[None, :] ** 2)
        # y > 0 end is near Pi_phi, y < 0 end near Pi_0; both offsets are tails
        d_plus = np.sqrt(np.sum((scale * np.sin(pr.tail(y))) ** 2, axis=0))
        dist = np.maximum(dist, d_plus)
    keep = np.isfinite(dist) & (dist > 0)
    if keep.sum() < 2:
        return -math.inf, r, dist
    slope = np.polyfit(np.log(r[keep]), np.log(dist[keep]), 1)[0]
    return float(slope) + 1.0, r, dist
