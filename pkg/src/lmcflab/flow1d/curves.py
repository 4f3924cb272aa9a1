"""Immersed closed polygonal curves in C and in flat tori C/(Z + tau Z).

A component is a loop of vertices.  On a torus the loop lives in the
universal cover and closes up to a lattice vector, its *period*, so the
closing edge runs from the last vertex to ``v[0] + period``.

Each edge carries a lifted tangent angle.  Consecutive edges may turn by
less than pi/2 (the resolution constraint), which makes the lift unique
once the angle of edge 0 is fixed.  The Maslov number of a component is
its total turning divided by 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline

__all__ = [
    "AmbientSurface",
    "PLANE",
    "torus",
    "ImmersedCurve",
    "CurveError",
    "MaslovError",
    "ResolutionError",
    "NotExactError",
    "build_curve",
    "circle_loop",
    "infinity_loop",
    "wall_chain_loop",
    "torus_line_loop",
    "resample_loop",
    "preset",
    "PRESETS",
]

TWO_PI = 2.0 * math.pi
MIN_VERTICES = 32


class CurveError(ValueError):
    """Invalid vertex data."""


class MaslovError(CurveError):
    """Graded mode requested for a component with nonzero Maslov number."""


class ResolutionError(CurveError):
    """Consecutive edges turn by pi/2 or more, so the phase lift is ambiguous."""


class NotExactError(CurveError):
    """Exact mode requested but the Liouville form does not integrate to zero."""


@dataclass(frozen=True)
class AmbientSurface:
    """The plane, or the flat torus ``C / (Z + tau Z)`` with ``Im tau > 0``.

    The holomorphic form is ``dz`` and the Liouville form is
    ``(x dy - y dx) / 2`` in both cases; the latter is only meaningful on
    the plane.
    """

    kind: str = "plane"
    tau: Optional[complex] = None

    def __post_init__(self):
        if self.kind not in ("plane", "torus"):
            raise ValueError(f"unknown ambient kind {self.kind!r}")
        if self.kind == "torus":
            if self.tau is None or complex(self.tau).imag <= 0:
                raise ValueError("torus needs tau with Im tau > 0")
            object.__setattr__(self, "tau", complex(self.tau))
        elif self.tau is not None:
            raise ValueError("the plane takes no tau")

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    def lattice(self, n) -> np.ndarray:
        """The lattice vector ``n[0] + n[1] tau`` as a real 2-vector."""
        if not self.is_torus:
            if tuple(n) != (0, 0):
                raise ValueError("the plane has no nonzero lattice vectors")
            return np.zeros(2)
        return np.array([n[0] + n[1] * self.tau.real, n[1] * self.tau.imag])

    def separation(self, a, b) -> float:
        """Distance from ``a`` to the nearest lattice translate of ``b``."""
        d = np.asarray(a, float) - np.asarray(b, float)
        if not self.is_torus:
            return float(np.hypot(*d))
        n1 = round(d[1] / self.tau.imag)
        d = d - self.lattice((0, n1))
        best = math.inf
        for k in (-1, 0, 1):
            for j in (-1, 0, 1):
                e = d - self.lattice((round(d[0]) + k, j))
                best = min(best, float(np.hypot(*e)))
        return best

    def shifts_between(self, box_a, box_b, margin=0.0):
        """Lattice integer pairs ``n`` with ``box_b + lattice(n)`` meeting ``box_a``.

        Boxes are ``(xmin, ymin, xmax, ymax)``.
        """
        if not self.is_torus:
            return [(0, 0)]
        t = self.tau
        out = []
        lo2 = math.ceil((box_a[1] - box_b[3] - margin) / t.imag)
        hi2 = math.floor((box_a[3] - box_b[1] + margin) / t.imag)
        for n2 in range(lo2, hi2 + 1):
            dx = n2 * t.real
            lo1 = math.ceil(box_a[0] - box_b[2] - dx - margin)
            hi1 = math.floor(box_a[2] - box_b[0] - dx + margin)
            out.extend((n1, n2) for n1 in range(lo1, hi1 + 1))
        return out

    def to_json(self) -> dict:
        if self.is_torus:
            return {"kind": "torus", "tau": [self.tau.real, self.tau.imag]}
        return {"kind": "plane"}

    @classmethod
    def from_json(cls, doc) -> "AmbientSurface":
        if isinstance(doc, str):
            doc = {"kind": doc}
        kind = doc.get("kind", "plane")
        if kind == "torus":
            tau = doc.get("tau", [0.0, 1.0])
            return cls("torus", complex(tau[0], tau[1]))
        return cls(kind)


PLANE = AmbientSurface()


def torus(tau=1j) -> AmbientSurface:
    return AmbientSurface("torus", complex(tau))


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _wrap(x):
    return (x + math.pi) % TWO_PI - math.pi


class ImmersedCurve:
    """A finite union of closed polygonal components with phase data.

    Use :func:`build_curve` for validated construction.  Attributes computed
    per component ``c``:

    ``edges[c]``, ``lengths[c]``
        Edge vectors (closing edge included) and their lengths.
    ``turning[c]``
        Turning angle at each vertex, from edge ``k-1`` into edge ``k``.
    ``edge_theta[c]``
        Lifted tangent angle of each edge.
    ``theta[c]``
        Lifted phase at each vertex (bisector of the adjacent edges).
    ``kappa[c]``
        Signed curvature at each vertex, turning over dual length.
    ``maslov[c]``
        Total turning over 2 pi.
    ``potential[c]``
        Primitive of the Liouville form along the loop (plane only), or None.
    """

    def __init__(
        self,
        ambient: AmbientSurface,
        components: Sequence[np.ndarray],
        periods=None,
        holonomies=None,
        graded: bool = False,
        exact: bool = False,
        theta_refs=None,
        potential_refs=None,
    ):
        self.ambient = ambient
        self.components = [np.ascontiguousarray(c, float) for c in components]
        n = len(self.components)
        self.periods = [tuple(int(v) for v in p) for p in (periods or [(0, 0)] * n)]
        self.holonomies = list(holonomies) if holonomies is not None else [1] * n
        self.graded = bool(graded)
        self.exact = bool(exact)
        if len(self.periods) != n or len(self.holonomies) != n:
            raise CurveError("periods and holonomies must match the component count")
        theta_refs = list(theta_refs) if theta_refs is not None else [None] * n
        potential_refs = list(potential_refs) if potential_refs is not None else [0.0] * n
        self.edges, self.lengths, self.turning = [], [], []
        self.edge_theta, self.theta, self.kappa, self.maslov = [], [], [], []
        self.potential, self.closure_defect = [], []
        for c in range(n):
            self._derive(c, theta_refs[c], potential_refs[c])

    # ------------------------------------------------------------------
    def _derive(self, c, theta_ref, f_ref):
        v = self.components[c]
        if v.ndim != 2 or v.shape[1] != 2:
            raise CurveError("vertex loops must have shape (N, 2)")
        shift = self.ambient.lattice(self.periods[c])
        nxt = np.roll(v, -1, axis=0)
        nxt[-1] = nxt[-1] + shift
        e = nxt - v
        ln = np.hypot(e[:, 0], e[:, 1])
        if np.any(ln <= 1e-14 * max(1.0, float(np.max(np.abs(v))))):
            raise CurveError(f"component {c} has repeated consecutive vertices")
        a = np.arctan2(e[:, 1], e[:, 0])
        turn = _wrap(a - np.roll(a, 1))
        if np.any(np.abs(turn) >= math.pi / 2):
            k = int(np.argmax(np.abs(turn)))
            raise ResolutionError(f"component {c} turns by {turn[k]:.3f} rad at vertex {k}")
        a0 = a[0]
        if theta_ref is not None:
            a0 += TWO_PI * round((theta_ref - a0) / TWO_PI)
        th = a0 + np.concatenate([[0.0], np.cumsum(turn[1:])])
        mas = int(round(float(np.sum(turn)) / TWO_PI))
        vth = np.empty_like(th)
        vth[1:] = th[:-1] + 0.5 * turn[1:]
        vth[0] = th[0] - 0.5 * turn[0]
        dual = 0.5 * (ln + np.roll(ln, 1))
        self.edges.append(e)
        self.lengths.append(ln)
        self.turning.append(turn)
        self.edge_theta.append(th)
        self.theta.append(vth)
        self.kappa.append(turn / dual)
        self.maslov.append(mas)
        if self.ambient.is_torus:
            self.potential.append(None)
            self.closure_defect.append(None)
        else:
            inc = 0.5 * _cross(v, nxt)
            self.potential.append(f_ref + np.concatenate([[0.0], np.cumsum(inc[:-1])]))
            self.closure_defect.append(float(np.sum(inc)))

    # ------------------------------------------------------------------
    @property
    def n_components(self) -> int:
        return len(self.components)

    def period_vector(self, c) -> np.ndarray:
        return self.ambient.lattice(self.periods[c])

    def signed_area(self, c) -> float:
        """Shoelace area of a plane component (counterclockwise positive)."""
        if self.ambient.is_torus:
            raise ValueError("signed area is defined for plane curves only")
        return self.closure_defect[c]

    def length(self) -> float:
        return float(sum(np.sum(l) for l in self.lengths))

    def diameter(self, c) -> float:
        v = self.components[c]
        lo, hi = v.min(axis=0), v.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def bbox(self, c):
        v = self.components[c]
        w = np.vstack([v, v[:1] + self.period_vector(c)])
        lo, hi = w.min(axis=0), w.max(axis=0)
        return (lo[0], lo[1], hi[0], hi[1])

    def theta_range(self):
        """``(min, max)`` of the vertex phase over all components."""
        if not self.components:
            return (math.nan, math.nan)
        lo = min(float(t.min()) for t in self.theta)
        hi = max(float(t.max()) for t in self.theta)
        return lo, hi

    def max_curvature(self) -> float:
        if not self.components:
            return 0.0
        return max(float(np.max(np.abs(k))) for k in self.kappa)

    def min_edge(self) -> float:
        return min(float(l.min()) for l in self.lengths)

    def theta_refs(self):
        return [float(t[0]) for t in self.edge_theta]

    def potential_refs(self):
        return [0.0 if f is None else float(f[0]) for f in self.potential]

    def with_components(self, components, periods=None, holonomies=None, theta_refs=None, potential_refs=None):
        """Same flags and ambient, new geometry (no validation beyond the lift)."""
        return ImmersedCurve(
            self.ambient,
            components,
            periods if periods is not None else self.periods,
            holonomies if holonomies is not None else self.holonomies,
            self.graded,
            self.exact,
            theta_refs,
            potential_refs,
        )

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient.to_json(),
            "components": [c.tolist() for c in self.components],
            "periods": [list(p) for p in self.periods],
            "holonomies": [str(h) for h in self.holonomies],
            "graded": self.graded,
            "exact": self.exact,
        }


def build_curve(
    ambient: AmbientSurface,
    loops,
    graded: bool = False,
    exact: bool = False,
    holonomies=None,
    periods=None,
    exact_tol: float = 1e-6,
    check_crossings: bool = True,
) -> ImmersedCurve:
    """Validated curve from vertex loops.

    Parameters
    ----------
    loops : sequence of (N, 2) arrays
        Closed loops without the repeated end point, at least 32 vertices.
    graded : bool
        Require every component to have Maslov number 0.
    exact : bool
        Plane only: require the Liouville form to integrate to zero around
        each component (relative to its enclosed absolute area) and compute
        the potential.
    periods : sequence of integer pairs, optional
        Torus only: lattice class of each loop.

    Raises
    ------
    CurveError, MaslovError, ResolutionError, NotExactError
    DegenerateCrossingError
        If ``check_crossings`` and two sheets meet nearly tangentially.
    """
    loops = [np.asarray(l, float) for l in loops]
    if not loops:
        raise CurveError("at least one component is required")
    for i, l in enumerate(loops):
        if l.ndim != 2 or l.shape[1] != 2:
            raise CurveError(f"loop {i} must have shape (N, 2)")
        if len(l) < MIN_VERTICES:
            raise CurveError(f"loop {i} has {len(l)} vertices; at least {MIN_VERTICES} are needed")
        if not np.all(np.isfinite(l)):
            raise CurveError(f"loop {i} has non-finite coordinates")
    if periods is not None and not ambient.is_torus and any(tuple(p) != (0, 0) for p in periods):
        raise CurveError("plane loops cannot have nonzero periods")
    if exact and ambient.is_torus:
        raise CurveError("exact mode needs the plane ambient")
    curve = ImmersedCurve(ambient, loops, periods, holonomies, graded, exact)
    if any(h == 0 for h in curve.holonomies):
        raise CurveError("holonomies must be nonzero")
    if graded and any(m != 0 for m in curve.maslov):
        raise MaslovError(f"graded mode needs Maslov number 0, got {curve.maslov}")
    if exact:
        for c in range(curve.n_components):
            ref = abs(float(np.sum(np.abs(0.5 * _cross(loops[c], np.roll(loops[c], -1, axis=0))))))
            if abs(curve.closure_defect[c]) > exact_tol * max(ref, 1e-300):
                raise NotExactError(
                    f"component {c}: Liouville form integrates to {curve.closure_defect[c]:.3e}"
                )
    if check_crossings:
        from .arrangement import self_intersections

        self_intersections(curve)
    return curve


# ----------------------------------------------------------------------
# resampling and presets

def resample_loop(points, n: int, period=(0.0, 0.0), start_at_first: bool = True) -> np.ndarray:
    """Resample a closed polyline to ``n`` points equally spaced in arclength.

    Uses a periodic cubic spline through the given points (after removing
    the linear drift of a torus loop), so smooth shapes are preserved to
    fourth order.
    """
    p = np.asarray(points, float)
    shift = np.asarray(period, float)
    closed = np.vstack([p, p[:1] + shift])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    drift = np.outer(s / total, shift)
    spl = CubicSpline(s, closed - drift, bc_type="periodic")
    t = np.linspace(0.0, total, n, endpoint=False)
    return spl(t) + np.outer(t / total, shift)


def circle_loop(r=1.0, center=(0.0, 0.0), n=128, orientation=1) -> np.ndarray:
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    pts = np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)])
    return pts if orientation > 0 else pts[::-1].copy()


def infinity_loop(a1=0.5, a2=0.2, n=256) -> np.ndarray:
    """Lemniscate of Gerono with the right lobe of area ``a1`` and the left of ``a2``.

    The unit curve ``(cos t, sin t cos t)`` has lobes of area 2/3; each lobe
    is scaled about the crossing at the origin.  The right lobe runs
    counterclockwise.
    """
    if a1 <= 0 or a2 <= 0:
        raise ValueError("lobe areas must be positive")
    t = np.linspace(-math.pi / 2, 3 * math.pi / 2, 8 * n, endpoint=False)
    base = np.column_stack([np.cos(t), np.sin(t) * np.cos(t)])
    scale = np.where(np.cos(t) >= 0, math.sqrt(a1 * 1.5), math.sqrt(a2 * 1.5))
    return resample_loop(base * scale[:, None], n)


def _chain_areas(c, width):
    f = lambda x: math.sqrt(max(1.0 - x * x, 0.0)) * abs(x * (x * x - c * c))
    inner = 2 * width * integrate.quad(f, 0.0, c)[0]
    outer = 2 * width * integrate.quad(f, c, 1.0)[0]
    return inner, outer


def wall_chain_loop(outer=0.25, inner=0.2, n=384, width=1.5) -> np.ndarray:
    """Closed curve with four lobes in a row and three crossings.

    The curve ``(width cos t, k sin t q(cos t))`` with ``q(x) = x (x^2 - c^2)``
    crosses itself at ``x = -c, 0, c``.  The two end lobes are teardrops of
    area ``outer``; the two middle lobes are bigons of area ``inner``.  The
    curve is symmetric under ``(x, y) -> (-x, -y)`` with reversed
    orientation, so it has Maslov number 0 and is exact.
    """
    if not (outer > 0 and inner > 0):
        raise ValueError("areas must be positive")
    ratio = outer / inner

    def gap(c):
        i, o = _chain_areas(c, width)
        return o / i - ratio

    c = optimize.brentq(gap, 0.05, 0.98, xtol=1e-14)
    i0, _ = _chain_areas(c, width)
    k = inner / i0
    t = np.linspace(0.0, TWO_PI, 16 * n, endpoint=False)
    x = np.cos(t)
    pts = np.column_stack([width * x, k * np.sin(t) * x * (x * x - c * c)])
    return resample_loop(pts, n)


def torus_line_loop(klass=(1, 0), tau=1j, amplitude=0.05, n=64, modes=(1,), offset=(0.0, 0.0)) -> np.ndarray:
    """Straight closed geodesic of lattice class ``klass`` plus a normal ripple."""
    tau = complex(tau)
    period = np.array([klass[0] + klass[1] * tau.real, klass[1] * tau.imag])
    L = float(np.hypot(*period))
    if L == 0:
        raise ValueError("class must be nonzero")
    u = period / L
    nrm = np.array([-u[1], u[0]])
    s = np.linspace(0.0, 1.0, n, endpoint=False)
    ripple = sum(amplitude * np.sin(TWO_PI * m * s) for m in modes)
    return np.asarray(offset, float) + np.outer(s, period) + np.outer(ripple, nrm)


def preset(name: str, **kw):
    """Named configurations as ``(ambient, loops, options)``.

    ``options`` holds the ``graded``/``exact``/``periods`` flags for
    :func:`build_curve`.
    """
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](**kw)


def _p_circle(r=1.0, n=128, center=(0.0, 0.0)):
    return PLANE, [circle_loop(r, center, n)], {"graded": False, "exact": False}


def _p_two_circles(r=1.0, gap=3.0, n=128):
    loops = [circle_loop(r, (-gap / 2, 0.0), n, 1), circle_loop(r, (gap / 2, 0.0), n, -1)]
    return PLANE, loops, {"graded": False, "exact": False}


def _p_infinity(a1=0.5, a2=0.2, n=256):
    exact = math.isclose(a1, a2, rel_tol=0, abs_tol=0)
    return PLANE, [infinity_loop(a1, a2, n)], {"graded": True, "exact": exact}


def _p_wall_chain(outer=0.25, inner=0.2, n=384):
    return PLANE, [wall_chain_loop(outer, inner, n)], {"graded": True, "exact": True}


def _p_torus_line(klass=(1, 0), tau=(0.0, 1.0), amplitude=0.05, n=64):
    t = complex(*tau)
    return torus(t), [torus_line_loop(tuple(klass), t, amplitude, n)], {
        "graded": True, "exact": False, "periods": [tuple(klass)]}


def _p_torus_cross(classes=((1, 0), (0, 1)), tau=(0.0, 1.0), n=64):
    t = complex(*tau)
    loops = [torus_line_loop(tuple(k), t, 0.0, n, offset=(0.1 + 0.37 * i, 0.23 + 0.29 * i))
             for i, k in enumerate(classes)]
    return torus(t), loops, {"graded": True, "exact": False, "periods": [tuple(k) for k in classes]}


PRESETS = {
    "circle": _p_circle,
    "two_circles": _p_two_circles,
    "infinity": _p_infinity,
    "wall_chain": _p_wall_chain,
    "torus_line": _p_torus_line,
    "torus_cross": _p_torus_cross,
}
