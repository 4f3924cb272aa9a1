"""Dirichlet problem for the potential of U(1)-invariant special Lagrangians.

Solves

    ((f_x)^2 + y^2 + a^2)^(-1/2) f_xx + 2 f_yy = 0

on a rectangular grid (optionally restricted by a mask) with the standard
five-point discretization and a damped Newton iteration with the exact
sparse Jacobian of the discrete operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = ["U1Solution", "u1_solve", "u1_residual", "polygon_mask", "NonConvergenceError"]


class NonConvergenceError(RuntimeError):
    pass


def polygon_mask(X, Y, vertices):
    """Grid points inside a convex polygon (counter-clockwise vertices)."""
    v = np.asarray(vertices, float)
    inside = np.ones(X.shape, bool)
    for p, q in zip(v, np.roll(v, -1, axis=0)):
        inside &= (q[0] - p[0]) * (Y - p[1]) - (q[1] - p[1]) * (X - p[0]) > 0
    return inside


def _interior(mask):
    inner = mask.copy()
    inner[0, :] = inner[-1, :] = inner[:, 0] = inner[:, -1] = False
    inner[1:-1, 1:-1] &= mask[2:, 1:-1] & mask[:-2, 1:-1] & mask[1:-1, 2:] & mask[1:-1, :-2]
    return inner


def u1_residual(f, x, y, a, interior=None):
    """Discrete operator on interior nodes (zeros elsewhere); ``f[i, j]`` at ``(x[i], y[j])``."""
    hx, hy = x[1] - x[0], y[1] - y[0]
    r = np.zeros_like(f)
    fx = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * hx)
    fxx = (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / hx**2
    fyy = (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / hy**2
    c = 1.0 / np.sqrt(fx**2 + y[None, 1:-1] ** 2 + a * a)
    r[1:-1, 1:-1] = c * fxx + 2 * fyy
    if interior is not None:
        r[~interior] = 0.0
    return r


def _jacobian(f, x, y, a, interior, index):
    hx, hy = x[1] - x[0], y[1] - y[0]
    I, J = np.nonzero(interior)
    fx = (f[I + 1, J] - f[I - 1, J]) / (2 * hx)
    fxx = (f[I + 1, J] - 2 * f[I, J] + f[I - 1, J]) / hx**2
    c = 1.0 / np.sqrt(fx**2 + y[J] ** 2 + a * a)
    dc = -fx * c**3  # d c / d f_x
    rows, cols, vals = [], [], []
    row = index[I, J]

    def add(ii, jj, v):
        col = index[ii, jj]
        ok = col >= 0
        rows.append(row[ok])
        cols.append(col[ok])
        vals.append(v[ok])

    add(I, J, -2 * c / hx**2 - 4 / hy**2)
    add(I + 1, J, c / hx**2 + dc * fxx / (2 * hx))
    add(I - 1, J, c / hx**2 - dc * fxx / (2 * hx))
    add(I, J + 1, np.full(I.size, 2 / hy**2))
    add(I, J - 1, np.full(I.size, 2 / hy**2))
    n = I.size
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


@dataclass
class U1Solution:
    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    a: float
    residual: float
    iterations: int
    interior: np.ndarray

    @property
    def v(self):
        """``v = df/dx`` by centred differences."""
        return np.gradient(self.f, self.x, axis=0, edge_order=2)

    @property
    def u(self):
        """``u = df/dy`` by centred differences."""
        return np.gradient(self.f, self.y, axis=1, edge_order=2)

    def surface(self, beta: float = 0.0) -> np.ndarray:
        """Points ``(z1, z2, z3)`` on the grid for the U(1) angle ``beta``."""
        return u1_point(self.x[:, None], self.y[None, :], self.u, self.v, self.a, beta)


def u1_point(x, y, u, v, a, beta=0.0):
    """Point with ``z1 z2 = v + i y``, ``z3 = x + i u``, ``|z1|^2 - |z2|^2 = 2a``."""
    w = v + 1j * y
    p = a + np.sqrt(a * a + np.abs(w) ** 2)
    z1 = np.sqrt(p) * np.exp(1j * beta)
    z2 = w / z1
    z3 = x + 1j * u
    return np.stack(np.broadcast_arrays(z1, z2, z3), axis=-1)


def u1_solve(x, y, boundary, a: float, mask=None, tol: float = 1e-10, max_iter: int = 50,
             initial=None) -> U1Solution:
    """Solve the potential equation with Dirichlet data.

    Parameters
    ----------
    x, y : 1-d arrays
        Uniform grid coordinates.
    boundary : callable or 2-d array
        Dirichlet data; a callable is evaluated as ``boundary(X, Y)`` on the
        full grid and only non-interior nodes are used.
    a : float
        Nonzero parameter of the equation.
    mask : 2-d bool array, optional
        Domain nodes (defaults to the whole rectangle).

    Raises
    ------
    ValueError
        If ``a == 0``.
    NonConvergenceError
        If the residual does not drop below ``tol`` within ``max_iter``.
    """
    if a == 0:
        raise ValueError("a = 0 is the singular case and is not supported")
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    X, Y = np.meshgrid(x, y, indexing="ij")
    g = boundary(X, Y) if callable(boundary) else np.asarray(boundary, float)
    mask = np.ones(X.shape, bool) if mask is None else np.asarray(mask, bool)
    interior = _interior(mask)
    index = -np.ones(X.shape, int)
    index[interior] = np.arange(interior.sum())
    f = np.array(g, float)
    if initial is not None:
        f[interior] = np.asarray(initial, float)[interior]
    res = np.max(np.abs(u1_residual(f, x, y, a, interior)), initial=0.0)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"residual {res:.3e} after {max_iter} Newton steps")
        it += 1
        r = u1_residual(f, x, y, a, interior)[interior]
        jac = _jacobian(f, x, y, a, interior, index)
        step = spla.spsolve(jac.tocsc(), -r)
        lam = 1.0
        while True:
            trial = f.copy()
            trial[interior] += lam * step
            new = np.max(np.abs(u1_residual(trial, x, y, a, interior)))
            if new < res or lam < 1e-4:
                break
            lam *= 0.5
        f, res = trial, new
    return U1Solution(x, y, f, a, float(res), it, interior)
