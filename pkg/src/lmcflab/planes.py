"""Graded Lagrangian planes in C^m.

A plane is stored as an oriented orthonormal frame, i.e. a unitary matrix
``U`` whose columns span the real plane ``U R^m``.  The holomorphic volume
form evaluates on that frame to ``det U``, so the phase of the plane is
``arg det U`` and a grading is any real lift of it.

Characteristic angles of a transverse pair come from the symmetric unitary
``W W^T`` with ``W = U_A^{-1} U_B``: its eigenvalues are ``exp(2i phi_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "GradedPlane",
    "CrossingData",
    "NonTransverseError",
    "GradingMismatchError",
    "plane_from_angles",
    "plane_from_frame",
    "characteristic_angles",
    "plane_phase",
    "maslov_degree",
    "crossing_data",
    "random_graded_plane",
    "random_unitary",
]

LAGRANGIAN_TOL = 1e-12
PHASE_TOL = 1e-10
TRANSVERSE_TOL = 1e-9
GRADING_TOL = 1e-9
TWO_PI = 2.0 * math.pi


class NonTransverseError(ValueError):
    """Two planes meet in more than the origin.

    Attributes
    ----------
    directions : ndarray
        Unit vectors (columns) spanning the approximate common directions.
    """

    def __init__(self, message, directions):
        super().__init__(message)
        self.directions = directions


class GradingMismatchError(ValueError):
    pass


def _wrap(x):
    """Map an angle to (-pi, pi]."""
    y = math.remainder(x, TWO_PI)
    return math.pi if y == -math.pi else y


def _orthonormalize(frame: np.ndarray) -> np.ndarray:
    """Real Gram-Schmidt of complex columns, orientation preserving."""
    m = frame.shape[1]
    real = np.vstack([frame.real, frame.imag])
    q, r = np.linalg.qr(real)
    d = np.sign(np.diag(r))
    if np.any(d == 0):
        raise ValueError("degenerate frame: columns are linearly dependent over R")
    q = q * d
    return q[:m] + 1j * q[m:]


@dataclass(frozen=True, eq=False)
class GradedPlane:
    """An oriented Lagrangian plane with a grading.

    Parameters
    ----------
    frame : (m, m) complex ndarray
        Unitary matrix, columns form an oriented orthonormal basis.
    theta : float
        Grading, a real lift of the phase ``arg det frame``.
    orientation : int
        +1 or -1; recorded relative to the frame the plane was built from.
    """

    frame: np.ndarray
    theta: float
    orientation: int = 1

    @property
    def m(self) -> int:
        return self.frame.shape[0]

    def lagrangian_defect(self) -> float:
        g = self.frame.conj().T @ self.frame
        return float(np.max(np.abs(g.imag)))

    def phase_defect(self) -> float:
        d = np.linalg.det(self.frame)
        return abs(_wrap(math.atan2(d.imag, d.real) - self.theta))

    def validate(self) -> "GradedPlane":
        if self.lagrangian_defect() > LAGRANGIAN_TOL * max(1, self.m):
            raise ValueError(f"frame is not Lagrangian (defect {self.lagrangian_defect():.2e})")
        if self.phase_defect() > PHASE_TOL:
            raise GradingMismatchError(
                f"grading {self.theta} inconsistent with frame phase (defect {self.phase_defect():.2e})"
            )
        return self

    def reversed(self) -> "GradedPlane":
        """Opposite orientation with grading raised by pi (the shift functor)."""
        f = self.frame.copy()
        f[:, 0] = -f[:, 0]
        return GradedPlane(f, self.theta + math.pi, -self.orientation)

    def shifted(self, k: int) -> "GradedPlane":
        """Same plane with grading ``theta + k pi`` (orientation flips for odd k)."""
        out = self
        step = 1 if k >= 0 else -1
        for _ in range(abs(k)):
            out = out.reversed()
            if step < 0:
                out = GradedPlane(out.frame, out.theta - TWO_PI, out.orientation)
        return out

    def transform(self, unitary: np.ndarray) -> "GradedPlane":
        """Image under a unitary map; the grading moves by ``arg det``."""
        d = np.linalg.det(unitary)
        return GradedPlane(unitary @ self.frame, self.theta + math.atan2(d.imag, d.real),
                           self.orientation)

    def same_plane(self, other: "GradedPlane", tol: float = 1e-9) -> bool:
        """Equality of the underlying oriented planes and gradings."""
        w = self.frame.conj().T @ other.frame
        if np.max(np.abs(w.imag)) > tol:
            return False
        return np.linalg.det(w.real) > 0 and abs(self.theta - other.theta) < tol

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "frame_re": self.frame.real.tolist(),
            "frame_im": self.frame.imag.tolist(),
            "orientation": self.orientation,
            "theta": self.theta,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GradedPlane":
        frame = np.asarray(doc["frame_re"], float) + 1j * np.asarray(doc["frame_im"], float)
        return plane_from_frame(frame, doc["theta"], orientation=doc.get("orientation", 1))


def plane_from_frame(frame, theta: Optional[float] = None, orientation: int = 1) -> GradedPlane:
    """Graded plane spanned by the columns of ``frame``.

    If ``theta`` is omitted the principal phase is used.  A supplied grading
    must agree with the frame phase modulo 2 pi.
    """
    f = np.asarray(frame, dtype=complex)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError("frame must be a square complex matrix")
    u = _orthonormalize(f)
    if orientation < 0:
        u[:, 0] = -u[:, 0]
    d = np.linalg.det(u)
    principal = math.atan2(d.imag, d.real)
    if theta is None:
        theta = principal
    return GradedPlane(u, float(theta), 1 if orientation >= 0 else -1).validate()


def plane_from_angles(m: int, phi, theta: Optional[float] = None) -> GradedPlane:
    """The plane ``{(e^{i phi_1} x_1, ..., e^{i phi_m} x_m)}`` with grading ``theta``.

    The natural orientation has phase ``sum(phi)``.  A grading differing from
    that by an odd multiple of pi selects the opposite orientation; any other
    value raises :class:`GradingMismatchError`.
    """
    phi = np.broadcast_to(np.asarray(phi, float), (m,))
    s = float(np.sum(phi))
    if theta is None:
        theta = s
    k = (theta - s) / math.pi
    n = round(k)
    if abs(k - n) > GRADING_TOL:
        raise GradingMismatchError(f"grading {theta} is not sum(phi) mod pi")
    frame = np.diag(np.exp(1j * phi))
    orientation = 1 if n % 2 == 0 else -1
    if orientation < 0:
        frame[:, 0] = -frame[:, 0]
    return GradedPlane(frame, float(theta), orientation).validate()


def plane_phase(plane: GradedPlane) -> float:
    """Principal phase in [0, 2 pi) of the holomorphic volume form on the frame."""
    g = plane.frame.conj().T @ plane.frame
    if abs(np.linalg.det(g)) < 1e-14:
        raise ValueError("degenerate frame")
    d = np.linalg.det(plane.frame)
    return math.atan2(d.imag, d.real) % TWO_PI


def characteristic_angles(a: GradedPlane, b: GradedPlane, tol: float = TRANSVERSE_TOL) -> np.ndarray:
    """Angles ``phi_k`` in (0, pi) carrying ``(a, b)`` to ``(Pi_0, Pi_phi)``, ascending.

    Raises
    ------
    NonTransverseError
        If some ``|sin phi_k| <= tol``; the offending directions in ``a`` are
        attached to the exception.
    """
    w = a.frame.conj().T @ b.frame
    s = w @ w.T
    vals, vecs = np.linalg.eig(s)
    ang = 0.5 * np.angle(vals)
    ang = np.where(ang <= 0, ang + math.pi, ang)
    bad = np.abs(np.sin(ang)) <= tol
    if np.any(bad):
        dirs = a.frame @ vecs[:, bad]
        raise NonTransverseError(
            f"planes are not transverse ({int(bad.sum())} degenerate direction(s))", dirs
        )
    return np.sort(ang)


def maslov_degree(phi, theta_l: float, theta_lp: float) -> int:
    """Degree ``(sum(phi) + theta_l - theta_lp) / pi`` of a transverse intersection.

    Raises
    ------
    GradingMismatchError
        If the quotient is not within ``1e-9`` of an integer.
    """
    phi = np.asarray(phi, float)
    if np.any((phi <= 0) | (phi >= math.pi)):
        raise ValueError("characteristic angles must lie in (0, pi)")
    q = (float(np.sum(phi)) + theta_l - theta_lp) / math.pi
    n = round(q)
    if abs(q - n) > GRADING_TOL:
        raise GradingMismatchError(f"degree {q} is not an integer")
    return int(n)


@dataclass(frozen=True)
class CrossingData:
    angles: tuple
    theta_plus: float
    theta_minus: float
    mu_pm: int
    mu_mp: int

    def check(self) -> None:
        m = len(self.angles)
        assert self.mu_pm + self.mu_mp == m
        d = (self.theta_plus - self.theta_minus) / math.pi
        assert d < self.mu_pm < d + m
        assert -d < self.mu_mp < -d + m


def crossing_data(plus: GradedPlane, minus: GradedPlane) -> CrossingData:
    """Angles and both degrees for the ordered pair of sheets ``(plus, minus)``."""
    phi = characteristic_angles(plus, minus)
    back = characteristic_angles(minus, plus)
    return CrossingData(
        tuple(phi.tolist()),
        plus.theta,
        minus.theta,
        maslov_degree(phi, plus.theta, minus.theta),
        maslov_degree(back, minus.theta, plus.theta),
    )


def random_unitary(rng: np.random.Generator, m: int) -> np.ndarray:
    """Haar-distributed unitary matrix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_graded_plane(rng: np.random.Generator, m: int, max_shift: int = 3) -> GradedPlane:
    """Random Lagrangian plane with a random grading lift."""
    u = random_unitary(rng, m)
    d = np.linalg.det(u)
    k = int(rng.integers(-max_shift, max_shift + 1))
    return GradedPlane(u, math.atan2(d.imag, d.real) + TWO_PI * k).validate()
