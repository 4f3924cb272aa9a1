"""The one-dimensional integrals behind the explicit soliton families.

All families share the function

    P(x) = (exp(alpha x^2) * prod_k (1 + a_k x^2) - 1) / x^2,    P(0) = alpha + sum a_k

and the angle profiles

    psi_k(y) = a_k * int_{-inf}^{y} dx / ((1 + a_k x^2) sqrt(P(x))).

The integrands are even, so ``psi_k(-y) = phi_k - psi_k(y)`` and it is enough
to tabulate the right tail ``T_k(s) = a_k int_s^inf`` for ``s >= 0``.  Tails
are tabulated in the variable ``u = arctan x`` and refined locally with a
fixed Gauss-Legendre rule from the nearest node to the right, so evaluated
profiles are smooth to rounding level and small tails keep full relative
accuracy.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..quadrature import QuadratureError, fixed_gauss, gauss_kronrod

__all__ = [
    "log_P",
    "inv_sqrt_P",
    "Profile",
    "profile",
    "angle_integrals",
    "neck_area",
]

HALF_PI = 0.5 * math.pi


def _log1p_over(t):
    """log1p(t) / t with the removable singularity at 0 filled in."""
    t = np.asarray(t, float)
    small = t < 1e-8
    safe = np.where(small, 1.0, t)
    return np.where(small, 1.0 - 0.5 * t, np.log1p(safe) / safe)


def log_P(x, a, alpha: float = 0.0):
    """``log P(x)`` evaluated without overflow or cancellation."""
    x2 = np.square(np.asarray(x, float))
    a = np.asarray(a, float).reshape((-1,) + (1,) * x2.ndim)
    g = alpha + np.sum(a * _log1p_over(a * x2), axis=0)  # log(P x^2 + 1) / x^2
    u = x2 * g
    big = u > 1.0
    ub = np.where(big, u, 1.0)
    us = np.where(big, 1.0, u)
    # log(expm1(u) / u), two branches
    log_e_big = ub + np.log1p(-np.exp(-ub)) - np.log(ub)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_e_small = np.where(us < 1e-12, 0.5 * us, np.log(np.expm1(us) / np.where(us == 0, 1, us)))
    return np.log(g) + np.where(big, log_e_big, log_e_small)


def inv_sqrt_P(x, a, alpha: float = 0.0):
    return np.exp(-0.5 * log_P(x, a, alpha))


def _psi_integrand_u(t, a, alpha):
    """Integrands of ``psi_k`` after ``x = tan t``; shape ``(len(a),) + t.shape``."""
    x = np.tan(t)
    x2 = x * x
    ak = a.reshape((-1,) + (1,) * np.ndim(t))
    # a (1 + x^2) / (1 + a x^2), written to stay finite as x -> inf
    w = ak * (1.0 + x2) / (1.0 + ak * x2)
    return w * inv_sqrt_P(x, a, alpha)


def _area_integrand_u(t, a, alpha):
    x = np.tan(t)
    return (1.0 + x * x) * inv_sqrt_P(x, a, alpha)


def angle_integrals(a, alpha: float = 0.0, tol: float = 1e-14):
    """Total angles ``phi_k`` by adaptive Gauss-Kronrod on ``[0, pi/2]``.

    Returns
    -------
    phi, err : ndarray
        Angles and the quadrature error estimate per component.
    """
    a = np.asarray(a, float)
    val, err = gauss_kronrod(lambda t: _psi_integrand_u(t, a, alpha), 0.0, HALF_PI,
                             atol=tol, rtol=tol)
    return 2.0 * val, 2.0 * err


def neck_area(a, tol: float = 1e-14) -> float:
    """The size parameter ``A = int dx / (2 sqrt P)`` of a Lawlor neck."""
    a = np.asarray(a, float)
    if a.size <= 2:
        raise ValueError("the neck area integral diverges for m <= 2")
    val, _ = gauss_kronrod(lambda t: _area_integrand_u(t, a, 0.0), 0.0, HALF_PI,
                           atol=tol, rtol=tol)
    return float(val[0])


class Profile:
    """Tabulated angle profiles ``psi_k`` for one parameter set.

    Parameters
    ----------
    a : sequence of float
        Positive parameters (one per angle).
    alpha : float
        Nonnegative Gaussian weight.
    panels, order : int
        Number of equal panels in ``u = arctan x`` and Gauss points per panel.
    """

    def __init__(self, a, alpha: float = 0.0, panels: int = 256, order: int = 24):
        self.a = np.asarray(a, float)
        if np.any(self.a <= 0) or alpha < 0:
            raise ValueError("profile needs a_k > 0 and alpha >= 0")
        self.alpha = float(alpha)
        self.order = order
        self.du = HALF_PI / panels
        self.nodes = np.arange(panels + 1) * self.du
        lo, hi = self.nodes[:-1], self.nodes[1:]
        pieces = fixed_gauss(self._g, lo, hi, order)  # (n, panels)
        tail = np.zeros((self.a.size, panels + 1))
        tail[:, :-1] = np.cumsum(pieces[:, ::-1], axis=1)[:, ::-1]
        self.table = tail
        self.table.setflags(write=False)
        self.phi = 2.0 * tail[:, 0]

    def _g(self, t):
        return _psi_integrand_u(t, self.a, self.alpha)

    def tail(self, s):
        """``T_k(s) = a_k int_s^inf``, for ``s >= 0``; shape ``(n,) + s.shape``."""
        s = np.asarray(s, float)
        if np.any(s < 0):
            raise ValueError("tail is tabulated for s >= 0")
        u = np.arctan(s)
        j = np.minimum(np.floor(u / self.du).astype(int) + 1, self.nodes.size - 1)
        right = self.nodes[j]
        local = fixed_gauss(self._g, u, right, self.order)
        return self.table[:, j] + local

    def psi(self, y):
        """Profiles ``psi_k(y)``; shape ``(n,) + y.shape``."""
        y = np.asarray(y, float)
        t = self.tail(np.abs(y))
        return np.where(y <= 0, t, self.phi.reshape((-1,) + (1,) * y.ndim) - t)

    def psi_complement(self, y):
        """``phi_k - psi_k(y)`` without cancellation."""
        y = np.asarray(y, float)
        return self.psi(-y)

    def inv_sqrt_P(self, y):
        return inv_sqrt_P(y, self.a, self.alpha)


@lru_cache(maxsize=64)
def _cached(a: tuple, alpha: float) -> Profile:
    return Profile(a, alpha)


def profile(a, alpha: float = 0.0) -> Profile:
    """Shared immutable profile for ``(a, alpha)``."""
    return _cached(tuple(float(v) for v in np.asarray(a, float)), float(alpha))


__all__ += ["QuadratureError"]
