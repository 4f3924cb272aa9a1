"""Explicit special Lagrangian and soliton families in C^m.

Families
--------
lawlor       neck asymptotic to two special Lagrangian planes, ``m > 2``
expander     ``H = alpha F_perp`` with ``alpha > 0``, same cone picture
translator   ``H = v_perp`` with ``v = (0, ..., 0, alpha)``, ``m >= 2``
grim_reaper  the planar translator ``x = -log cos y``
hl_cone      the T^2 cone in C^3
hl_L1        the smoothing of that cone with ``|z_1|^2 - A = |z_2|^2 = |z_3|^2``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..quadrature import QuadratureError
from .profiles import Profile, angle_integrals, neck_area, profile

__all__ = [
    "KINDS",
    "SolitonParams",
    "AngleData",
    "SurfaceSample",
    "AdmissibilityError",
    "ConvergenceError",
    "lawlor_angles",
    "expander_angles",
    "translator_angles",
    "family_angles",
    "family_invert",
    "soliton_sample",
    "soliton_phase",
    "soliton_point",
]

KINDS = ("lawlor", "expander", "translator", "grim_reaper", "hl_cone", "hl_L1")
SUM_TOL = 1e-8


class AdmissibilityError(ValueError):
    """Target angles outside the image of the family's parameter map."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolitonParams:
    """Parameters of one member of a family.

    ``a`` has length ``m`` for lawlor/expander and ``m - 1`` for translator;
    ``A`` is only used by ``hl_L1``.
    """

    kind: str
    m: int
    a: tuple = ()
    alpha: float = 0.0
    A: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        k, m = self.kind, self.m
        if k not in KINDS:
            raise ValueError(f"unknown soliton kind {k!r}")
        if any(v <= 0 for v in self.a):
            raise ValueError("a_k must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if k == "lawlor":
            if m <= 2 or len(self.a) != m:
                raise ValueError("lawlor needs m > 2 and m parameters a_k")
            if self.alpha != 0:
                raise ValueError("lawlor has alpha = 0; use kind 'expander'")
        elif k == "expander":
            if m <= 2 or len(self.a) != m:
                raise ValueError("expander needs m > 2 and m parameters a_k")
        elif k == "translator":
            if m < 2 or len(self.a) != m - 1 or self.alpha <= 0:
                raise ValueError("translator needs m >= 2, m - 1 parameters and alpha > 0")
        elif k == "grim_reaper":
            if m != 1:
                raise ValueError("grim reaper lives in C (m = 1)")
        else:
            if m != 3:
                raise ValueError("Harvey-Lawson examples live in C^3")
            if k == "hl_L1" and self.A <= 0:
                raise ValueError("hl_L1 needs A > 0")

    @property
    def profile(self) -> Profile:
        return profile(self.a, self.alpha)

    def P(self, x):
        """The function ``P`` of the family."""
        return 1.0 / np.square(self.profile.inv_sqrt_P(x))

    def to_json(self) -> dict:
        return {"kind": self.kind, "m": self.m, "a": list(self.a), "alpha": self.alpha, "A": self.A}


@dataclass
class AngleData:
    phi: np.ndarray
    A: Optional[float] = None
    profile: Optional[Profile] = field(default=None, repr=False)
    error: float = 0.0

    def psi(self, y):
        return self.profile.psi(y)

    def to_json(self) -> dict:
        out = {"phi": self.phi.tolist(), "sum_phi": float(self.phi.sum()), "error": self.error}
        if self.A is not None:
            out["A"] = self.A
        return out


@dataclass(frozen=True)
class SurfaceSample:
    point: np.ndarray
    y: float
    x: tuple
    theta: Optional[float]


# ----------------------------------------------------------------------
# forward maps

def _angles(a, alpha, check_tol=1e-11):
    try:
        phi, err = angle_integrals(a, alpha)
    except QuadratureError as exc:
        raise QuadratureError(f"angle quadrature failed for a={tuple(a)}, alpha={alpha}: {exc}")
    if err.max() > check_tol:
        raise QuadratureError(f"angle quadrature error {err.max():.2e} above {check_tol:.0e}")
    return phi, float(err.max())


def lawlor_angles(a) -> AngleData:
    """Angles ``phi_k`` and size ``A`` of the Lawlor neck with parameters ``a``."""
    a = np.asarray(a, float)
    if a.size <= 2 or np.any(a <= 0):
        raise ValueError("lawlor_angles needs m > 2 and a_k > 0")
    phi, err = _angles(a, 0.0)
    if abs(phi.sum() - math.pi) > SUM_TOL:
        raise QuadratureError(f"angle sum off pi by {phi.sum() - math.pi:.2e}")
    return AngleData(phi, neck_area(a), profile(a, 0.0), err)


def expander_angles(alpha: float, a) -> AngleData:
    """Asymptotic angles of the expander with Gaussian weight ``alpha``."""
    a = np.asarray(a, float)
    if a.size <= 2 or np.any(a <= 0) or alpha < 0:
        raise ValueError("expander_angles needs m > 2, a_k > 0, alpha >= 0")
    phi, err = _angles(a, alpha)
    return AngleData(phi, None, profile(a, alpha), err)


def translator_angles(alpha: float, a) -> AngleData:
    """Limit angles ``phi_j`` (j < m) of the translator with parameters ``a``."""
    a = np.asarray(a, float)
    if a.size < 1 or np.any(a <= 0) or alpha <= 0:
        raise ValueError("translator_angles needs a_j > 0 and alpha > 0")
    phi, err = _angles(a, alpha)
    return AngleData(phi, None, profile(a, alpha), err)


def family_angles(params: SolitonParams) -> AngleData:
    if params.kind == "lawlor":
        return lawlor_angles(params.a)
    if params.kind == "expander":
        return expander_angles(params.alpha, params.a)
    if params.kind == "translator":
        return translator_angles(params.alpha, params.a)
    raise ValueError(f"{params.kind} has no angle data")


# ----------------------------------------------------------------------
# inversion

def _check_target(kind, alpha, phi, A):
    if np.any(phi <= 0) or np.any(phi >= math.pi):
        raise AdmissibilityError("every target angle must lie in (0, pi)")
    s = float(phi.sum())
    if kind == "lawlor":
        if phi.size <= 2:
            raise AdmissibilityError("lawlor needs m > 2")
        if abs(s - math.pi) > SUM_TOL:
            raise AdmissibilityError(f"lawlor targets must sum to pi (got {s!r})")
        if A is None or A <= 0:
            raise AdmissibilityError("lawlor inversion needs a target A > 0")
    elif kind in ("expander", "translator"):
        if alpha <= 0:
            raise AdmissibilityError(f"{kind} inversion needs alpha > 0")
        if s >= math.pi:
            raise AdmissibilityError(f"{kind} targets must sum to less than pi (got {s!r})")
        if kind == "expander" and phi.size <= 2:
            raise AdmissibilityError("expander needs m > 2")
    else:
        raise AdmissibilityError(f"no inversion for kind {kind!r}")


def _newton(forward, target, z0, tol, max_iter=60, fd=1e-6):
    """Damped Newton on ``forward(z) = target`` with a central-difference Jacobian."""
    z = np.array(z0, float)
    r = forward(z) - target
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return z
        n = z.size
        jac = np.empty((r.size, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd
            jac[:, j] = (forward(z + e) - forward(z - e)) / (2 * fd)
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        norm0 = np.linalg.norm(r)
        lam = 1.0
        while True:
            trial = z + lam * step
            rt = forward(trial) - target
            if np.linalg.norm(rt) < (1 - 1e-4 * lam) * norm0 or lam < 1e-6:
                break
            lam *= 0.5
        z, r = trial, rt
    if np.max(np.abs(r)) < tol:
        return z
    raise ConvergenceError(f"Newton did not converge (residual {np.max(np.abs(r)):.2e})")


def _initial_shape(phi):
    # symmetric heuristic: equal angles come from equal a_k and a_k grows with phi_k
    return 2.0 * np.log(phi / (math.pi - phi))


def family_invert(kind: str, alpha: float, phi, A: Optional[float] = None,
                  tol: float = 1e-12) -> np.ndarray:
    """Parameters ``a`` whose forward map reproduces the target angles (and ``A``).

    Parameters
    ----------
    kind : {"lawlor", "expander", "translator"}
    alpha : float
        Gaussian weight; must be 0 for lawlor and positive otherwise.
    phi : sequence of float
        Target angles.
    A : float, optional
        Target neck size (lawlor only).

    Raises
    ------
    AdmissibilityError
        Target outside the family's image.
    ConvergenceError
        Newton iteration failed.
    """
    phi = np.asarray(phi, float)
    _check_target(kind, alpha, phi, A)
    z0 = _initial_shape(phi)

    if kind == "lawlor":
        # angles are scale invariant and A scales like 1/t under a -> t a, so
        # solve for the shape with sum(log a) = 0 and rescale afterwards
        def fwd(w):
            z = np.append(w, -w.sum())
            return angle_integrals(np.exp(z), 0.0)[0][:-1]

        w0 = (z0 - z0.mean())[:-1]
        w = _newton(fwd, phi[:-1], w0, tol)
        a = np.exp(np.append(w, -w.sum()))
        return a * (neck_area(a) / A)

    def fwd(z):
        return angle_integrals(np.exp(z), alpha)[0]

    # pick an overall scale so the angle sum is right before Newton starts
    lo, hi = -30.0, 30.0
    target_sum = phi.sum()
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if fwd(z0 + mid).sum() < target_sum:
            lo = mid
        else:
            hi = mid
    z = _newton(fwd, phi, z0 + 0.5 * (lo + hi), tol)
    return np.exp(z)


# ----------------------------------------------------------------------
# points and phases

def _arg(z):
    return np.arctan2(np.imag(z), np.real(z))


def soliton_point(params: SolitonParams, y, x) -> np.ndarray:
    """Point of the family at parameters ``(y, x)`` (no phase)."""
    k = params.kind
    y = float(y)
    if k == "grim_reaper":
        if not abs(y) < 0.5 * math.pi:
            raise ValueError("grim reaper parameter must lie in (-pi/2, pi/2)")
        return np.array([-math.log(math.cos(y)) + 1j * y])
    if k in ("hl_cone", "hl_L1"):
        # y = common modulus of z_2, z_3; x = (beta_1, beta_2), beta_3 = -beta_1 - beta_2
        b1, b2 = (float(v) for v in x)
        extra = params.A if k == "hl_L1" else 0.0
        mods = np.array([math.sqrt(y * y + extra), abs(y), abs(y)])
        return mods * np.exp(1j * np.array([b1, b2, -b1 - b2]))
    x = np.asarray(x, float)
    pr = params.profile
    psi = pr.psi(y)
    a = np.asarray(params.a)
    if k == "translator":
        if x.size != params.m - 1:
            raise ValueError("translator takes m - 1 real coordinates x")
        head = x * np.sqrt(1.0 / a + y * y) * np.exp(1j * psi)
        g = float(psi.sum()) + math.atan2(float(pr.inv_sqrt_P(y)), y)
        last = 0.5 * y * y - 0.5 * float(x @ x) - 1j * g / params.alpha
        return np.append(head, last)
    if x.size != params.m or abs(float(x @ x) - 1.0) > 1e-9:
        raise ValueError("x must be a unit vector in R^m")
    return x * np.sqrt(1.0 / a + y * y) * np.exp(1j * psi)


def soliton_phase(params: SolitonParams, y, x=None) -> float:
    """Closed-form Lagrangian angle at the point with parameters ``(y, x)``.

    It depends on ``y`` only for all supported families.
    """
    k = params.kind
    y = float(y)
    if k == "grim_reaper":
        return 0.5 * math.pi - y
    if k in ("hl_cone", "hl_L1"):
        raise ValueError("Harvey-Lawson examples are special Lagrangian; phase is not tabulated")
    pr = params.profile
    s = float(pr.psi(y).sum())
    q = float(pr.inv_sqrt_P(y))
    if k == "translator":
        return s + math.atan2(q, y)
    return s + math.atan2(-q, -y)


def soliton_sample(params: SolitonParams, y, x=()) -> SurfaceSample:
    p = soliton_point(params, y, x)
    theta = None
    if params.kind in ("lawlor", "expander", "translator", "grim_reaper"):
        theta = soliton_phase(params, y, x)
    return SurfaceSample(p, float(y), tuple(np.atleast_1d(np.asarray(x, float)).tolist()), theta)
