"""Self-intersections, planar faces and their area rates.

Crossings are found segment against segment, with a k-d tree on edge
midpoints to prune candidates.  Faces of a plane curve come from the
half-edge structure whose nodes are the crossings: walking with the face
on the left and turning as far left as possible at every node traces each
face boundary once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ..novikov import Membership, NovikovSeries
from ..planes import maslov_degree
from .curves import ImmersedCurve

__all__ = [
    "Sheet",
    "Crossing",
    "Face",
    "DegenerateCrossingError",
    "ArrangementError",
    "self_intersections",
    "faces",
    "area_rates",
    "ObstructionReport",
    "obstruction_status",
    "winding_number",
    "shoelace",
]

ANGLE_TOL = 1e-3


class DegenerateCrossingError(ValueError):
    """Two sheets meet at an angle below the tolerance."""


class ArrangementError(ValueError):
    """The face structure could not be built."""


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def shoelace(poly) -> float:
    p = np.asarray(poly, float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(_cross(p, q)))


def winding_number(poly, point) -> int:
    """Winding number of the closed polyline ``poly`` around ``point``."""
    d = np.asarray(poly, float) - np.asarray(point, float)
    a = np.arctan2(d[:, 1], d[:, 0])
    turn = np.diff(np.concatenate([a, a[:1]]))
    turn = (turn + math.pi) % (2 * math.pi) - math.pi
    return int(round(float(np.sum(turn)) / (2 * math.pi)))


@dataclass(frozen=True)
class Sheet:
    """Position of a crossing on one sheet: component, edge, fraction along the edge.

    ``shift`` is the lattice class added to the component (torus only) so
    that the sheet passes through ``Crossing.location``.
    """

    component: int
    edge: int
    s: float
    shift: Tuple[int, int] = (0, 0)

    @property
    def param(self) -> float:
        return self.edge + self.s


@dataclass
class Crossing:
    """Transverse self-intersection with grading data for both sheet orders.

    ``plus``/``minus`` are labelled so that ``mu_pm >= mu_mp``.  As the two
    degrees sum to 1 this is unambiguous, and a crossing with a degree-1
    order always has ``mu_pm == 1``.  ``angle`` is the angle in (0, pi) from the plus
    tangent line to the minus tangent line.
    """

    location: np.ndarray
    plus: Sheet
    minus: Sheet
    tangent_plus: np.ndarray
    tangent_minus: np.ndarray
    theta_plus: float
    theta_minus: float
    angle: float
    mu_pm: int
    mu_mp: int
    potential_gap: Optional[float] = None
    cochain: Optional[NovikovSeries] = None
    key: int = -1

    @property
    def degrees(self) -> Tuple[int, int]:
        return (self.mu_pm, self.mu_mp)

    @property
    def rate(self) -> float:
        """Exponent rate ``theta_minus - theta_plus`` of a cochain at this crossing."""
        return self.theta_minus - self.theta_plus

    def describe(self) -> dict:
        d = {
            "key": self.key,
            "location": [float(x) for x in self.location],
            "theta_plus": self.theta_plus,
            "theta_minus": self.theta_minus,
            "degrees": list(self.degrees),
            "angle": self.angle,
        }
        if self.potential_gap is not None:
            d["potential_gap"] = self.potential_gap
        if self.cochain is not None:
            d["cochain"] = str(self.cochain)
        return d


def _segments(curve: ImmersedCurve, c: int, shift=(0, 0)):
    v = curve.components[c] + curve.ambient.lattice(shift)
    return v, v + curve.edges[c]


def _pair_hits(a0, a1, b0, b1, same: bool, radius: float):
    """Candidate segment pairs via midpoint k-d trees, then exact tests."""
    ma, mb = 0.5 * (a0 + a1), 0.5 * (b0 + b1)
    ta = cKDTree(ma)
    if same:
        pairs = ta.query_pairs(radius, output_type="ndarray")
        if len(pairs) == 0:
            return np.empty((0, 2), int), np.empty(0), np.empty(0)
        I, J = pairs[:, 0], pairs[:, 1]
    else:
        lists = ta.query_ball_tree(cKDTree(mb), radius)
        I = np.array([i for i, js in enumerate(lists) for _ in js], int)
        J = np.array([j for js in lists for j in js], int)
        if I.size == 0:
            return np.empty((0, 2), int), np.empty(0), np.empty(0)
    r = a1[I] - a0[I]
    s = b1[J] - b0[J]
    qp = b0[J] - a0[I]
    den = _cross(r, s)
    ok = np.abs(den) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ok, _cross(qp, s) / den, -1.0)
        u = np.where(ok, _cross(qp, r) / den, -1.0)
    # half-open windows shifted off the vertices: symmetric curves put
    # crossings exactly on vertices, never at a parameter of -1e-10
    d = 1e-10
    hit = ok & (t >= -d) & (t < 1 - d) & (u >= -d) & (u < 1 - d)
    return np.column_stack([I[hit], J[hit]]), t[hit], u[hit]


def _positive(n):
    return n[1] > 0 or (n[1] == 0 and n[0] > 0)


def _raw_intersections(curve: ImmersedCurve):
    out = []
    boxes = [curve.bbox(c) for c in range(curve.n_components)]
    for ca in range(curve.n_components):
        A0, A1 = _segments(curve, ca)
        la = float(curve.lengths[ca].max())
        N = len(A0)
        for cb in range(ca, curve.n_components):
            lb = float(curve.lengths[cb].max())
            radius = 0.5 * (la + lb) * (1 + 1e-9)
            for n in curve.ambient.shifts_between(boxes[ca], boxes[cb], margin=radius):
                if ca == cb and n != (0, 0) and not _positive(n):
                    continue
                B0, B1 = _segments(curve, cb, n)
                same = ca == cb and n == (0, 0)
                idx, t, u = _pair_hits(A0, A1, B0, B1, same, radius)
                for (i, j), ti, uj in zip(idx, t, u):
                    if ca == cb:
                        if same and (j - i == 1 or (i == 0 and j == N - 1 and curve.periods[ca] == (0, 0))):
                            continue
                        if n == curve.periods[ca] and i == N - 1 and j == 0:
                            continue
                        if tuple(-x for x in n) == curve.periods[ca] and i == 0 and j == N - 1:
                            continue
                    out.append((ca, int(i), float(ti), cb, int(j), float(uj), n))
    return out


def _sheet_potential(curve, sheet: Sheet, point):
    f = curve.potential[sheet.component]
    if f is None:
        return None
    v = curve.components[sheet.component][sheet.edge]
    return float(f[sheet.edge] + 0.5 * _cross(v, np.asarray(point)))


def self_intersections(curve: ImmersedCurve, angle_tol: float = ANGLE_TOL) -> List[Crossing]:
    """All transverse self-intersections with sheet data and degrees.

    Raises
    ------
    DegenerateCrossingError
        If two sheets meet with ``|sin angle| < angle_tol``.
    """
    out = []
    for ca, i, t, cb, j, u, n in _raw_intersections(curve):
        ea, eb = curve.edges[ca][i], curve.edges[cb][j]
        ta = ea / np.linalg.norm(ea)
        tb = eb / np.linalg.norm(eb)
        sin = float(_cross(ta, tb))
        if abs(sin) < angle_tol:
            raise DegenerateCrossingError(
                f"near-tangent crossing between component {ca} edge {i} and component {cb} edge {j}"
            )
        p = curve.components[ca][i] + t * ea
        sa, sb = Sheet(ca, i, t), Sheet(cb, j, u, n)
        tha, thb = float(curve.edge_theta[ca][i]), float(curve.edge_theta[cb][j])
        # for lines the characteristic angle is the turn from one to the other, mod pi
        phi = (thb - tha) % math.pi
        mu_ab = maslov_degree([phi], tha, thb)
        mu_ba = maslov_degree([math.pi - phi], thb, tha)
        if mu_ab < mu_ba:
            sa, sb, ta, tb, tha, thb = sb, sa, tb, ta, thb, tha
            mu_ab, mu_ba, phi = mu_ba, mu_ab, math.pi - phi
        gap = None
        if curve.exact:
            fa, fb = _sheet_potential(curve, sa, p), _sheet_potential(curve, sb, p)
            if fa is not None and fb is not None:
                gap = fa - fb
        out.append(Crossing(p, sa, sb, ta, tb, tha, thb, float(phi), mu_ab, mu_ba, gap))
    for k, x in enumerate(out):
        x.key = k
    return out


# ----------------------------------------------------------------------
# faces

@dataclass
class Face:
    """Bounded face of a plane arrangement.

    ``boundary`` is the outer boundary polyline traversed with the face on
    the left; ``holes`` are inner boundaries.  ``corners`` lists crossing
    keys in boundary order and ``corner_angles`` the interior angles there.
    ``turning`` is the total tangent turning along the boundary arcs,
    corners excluded.
    """

    boundary: np.ndarray
    holes: List[np.ndarray]
    area: float
    corners: Tuple[int, ...]
    corner_angles: Tuple[float, ...]
    turning: float
    winding: int
    centroid: np.ndarray
    arcs: Tuple[Tuple[int, bool], ...] = ()
    components: Tuple[int, ...] = ()

    @property
    def corner_count(self) -> int:
        return len(self.corners)

    @property
    def kind(self) -> str:
        if self.corner_count == 1:
            return "teardrop"
        if self.corner_count == 2:
            return "bigon"
        return "other"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "area": self.area,
            "corners": list(self.corners),
            "corner_angles": list(self.corner_angles),
            "winding": self.winding,
            "centroid": [float(x) for x in self.centroid],
        }


@dataclass
class _Arc:
    component: int
    start: Optional[int]  # crossing key at the start (None for a bare loop)
    end: Optional[int]
    points: np.ndarray
    turning: float  # tangent turning along the curve direction, corners excluded
    t_start: np.ndarray
    t_end: np.ndarray


def _arcs(curve: ImmersedCurve, crossings: Sequence[Crossing]):
    events: Dict[int, list] = {c: [] for c in range(curve.n_components)}
    for x in crossings:
        for sh in (x.plus, x.minus):
            events[sh.component].append((sh.param, x.key, sh.edge))
    arcs = []
    for c in range(curve.n_components):
        v = curve.components[c]
        N = len(v)
        th = curve.edge_theta[c]
        wrap = 2 * math.pi * curve.maslov[c]
        ev = sorted(events[c])
        tang = curve.edges[c] / curve.lengths[c][:, None]
        if not ev:
            arcs.append(_Arc(c, None, None, v.copy(), wrap, tang[0], tang[0]))
            continue
        locs = {x.key: x.location for x in crossings}
        for k, (p0, key0, e0) in enumerate(ev):
            p1, key1, e1 = ev[(k + 1) % len(ev)]
            end = p1 if (k + 1 < len(ev)) else p1 + N
            if len(ev) == 1:
                end = p0 + N
            j = np.arange(math.floor(p0) + 1, math.ceil(end))
            j = j[(j > p0) & (j < end)]
            pts = np.vstack([locs[key0][None, :], v[j % N], locs[key1][None, :]])
            wraps = 1 if end >= N else 0
            turn = float(th[e1] - th[e0] + wraps * wrap)
            arcs.append(_Arc(c, key0, key1, pts, turn, tang[e0], tang[e1]))
    return arcs


def _angle(v):
    return math.atan2(v[1], v[0])


def faces(curve: ImmersedCurve, crossings: Optional[Sequence[Crossing]] = None) -> List[Face]:
    """Bounded faces of a plane curve with areas, corners and turning.

    Raises
    ------
    ArrangementError
        On a torus ambient or if a boundary walk fails to close.
    """
    if curve.ambient.is_torus:
        raise ArrangementError("faces are computed for plane curves only")
    if crossings is None:
        crossings = self_intersections(curve)
    arcs = _arcs(curve, crossings)
    # half-edge h = 2*a (forward) or 2*a+1 (backward)
    out_at: Dict[int, list] = {}
    for a, arc in enumerate(arcs):
        if arc.start is None:
            continue
        out_at.setdefault(arc.start, []).append((_angle(arc.t_start), 2 * a))
        out_at.setdefault(arc.end, []).append((_angle(-arc.t_end), 2 * a + 1))

    def head(h):
        arc = arcs[h // 2]
        return (arc.end, arc.t_end) if h % 2 == 0 else (arc.start, -arc.t_start)

    used = set()
    cycles = []
    for h0 in range(2 * len(arcs)):
        if h0 in used:
            continue
        cyc, corners, angles = [], [], []
        h = h0
        for _ in range(4 * len(arcs) + 4):
            used.add(h)
            cyc.append(h)
            arc = arcs[h // 2]
            if arc.start is None:
                break
            node, d = head(h)
            back = _angle(-d)
            best, best_delta = None, None
            for ang, cand in out_at[node]:
                delta = (back - ang) % (2 * math.pi)
                if delta <= 1e-12:
                    delta = 2 * math.pi
                if best_delta is None or delta < best_delta:
                    best, best_delta = cand, delta
            out_dir = arcs[best // 2].t_start if best % 2 == 0 else -arcs[best // 2].t_end
            turn = (_angle(out_dir) - _angle(d) + math.pi) % (2 * math.pi) - math.pi
            corners.append(node)
            angles.append(math.pi - turn)
            h = best
            if h == h0:
                break
        else:
            raise ArrangementError("face walk did not close")
        pts, turning = [], 0.0
        for h in cyc:
            arc = arcs[h // 2]
            seg = arc.points if h % 2 == 0 else arc.points[::-1]
            pts.append(seg[:-1] if arc.start is not None else seg)
            turning += arc.turning if h % 2 == 0 else -arc.turning
        poly = np.vstack(pts)
        comps = tuple(sorted({arcs[h // 2].component for h in cyc}))
        cycles.append((poly, tuple(corners), tuple(angles), turning, tuple((h // 2, h % 2 == 0) for h in cyc), comps))

    # clusters of components linked by crossings
    parent = list(range(curve.n_components))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for x in crossings:
        parent[find(x.plus.component)] = find(x.minus.component)

    outer = [c for c in cycles if shoelace(c[0]) > 0]
    holes = [c for c in cycles if shoelace(c[0]) <= 0]
    hole_of = {i: [] for i in range(len(outer))}
    for hc in holes:
        cl = find(hc[5][0])
        probe = hc[0][0]
        best, best_area = None, math.inf
        for i, oc in enumerate(outer):
            if find(oc[5][0]) == cl:
                continue
            area = shoelace(oc[0])
            if area < best_area and winding_number(oc[0], probe) != 0:
                best, best_area = i, area
        if best is not None:
            hole_of[best].append(hc)

    result = []
    for i, (poly, corners, angles, turning, arcref, comps) in enumerate(outer):
        hs = hole_of[i]
        area = shoelace(poly) + sum(shoelace(h[0]) for h in hs)
        turning_total = turning + sum(h[3] for h in hs)
        cx = _centroid(poly)
        probe = _interior_point(poly)
        w = sum(winding_number(curve.components[c], probe) for c in range(curve.n_components))
        result.append(
            Face(poly, [h[0] for h in hs], area, corners, angles, turning_total, w, cx, arcref, comps)
        )
    return result


def _centroid(poly):
    p = np.asarray(poly)
    q = np.roll(p, -1, axis=0)
    cr = _cross(p, q)
    a = 0.5 * cr.sum()
    return np.array([np.sum((p[:, 0] + q[:, 0]) * cr), np.sum((p[:, 1] + q[:, 1]) * cr)]) / (6 * a)


def _interior_point(poly):
    """A point just left of the longest boundary segment."""
    p = np.asarray(poly)
    d = np.roll(p, -1, axis=0) - p
    ln = np.hypot(d[:, 0], d[:, 1])
    k = int(np.argmax(ln))
    mid = p[k] + 0.5 * d[k]
    nrm = np.array([-d[k, 1], d[k, 0]]) / ln[k]
    return mid + 1e-3 * ln[k] * nrm


def area_rates(curve: ImmersedCurve, face_list: Optional[Sequence[Face]] = None) -> List[float]:
    """Predicted ``dA/dt`` per face: minus the boundary turning, corners excluded.

    For a graded curve the turning along an arc is the difference of the
    phase lift at its ends, so a teardrop with corner phases
    ``theta_plus - theta_minus = d`` gets rate ``-d``, and a bigon the
    four-term pattern.  For non-graded curves the full turning counts, so an
    embedded counterclockwise circle gets ``-2 pi``.
    """
    if face_list is None:
        face_list = faces(curve)
    return [-f.turning for f in face_list]


# ----------------------------------------------------------------------
# obstruction

@dataclass
class ObstructionReport:
    status: str  # "unobstructed" | "obstructed"
    witnesses: List[Face] = field(default_factory=list)
    holonomy_constraint: Optional[int] = None
    groups: Dict[int, List[Face]] = field(default_factory=dict)
    cancelled: List[Tuple[Face, int]] = field(default_factory=list)

    @property
    def obstructed(self) -> bool:
        return self.status == "obstructed"

    def describe(self) -> dict:
        return {
            "status": self.status,
            "witnesses": [f.describe() for f in self.witnesses],
            "holonomy_constraint": self.holonomy_constraint,
            "cancelled_by": [k for _, k in self.cancelled],
        }


def obstruction_status(
    curve: ImmersedCurve,
    face_list: Optional[Sequence[Face]] = None,
    crossings: Optional[Sequence[Crossing]] = None,
    rtol: float = 1e-2,
    holonomy_sign: int = 1,
    components: Optional[Sequence[int]] = None,
) -> ObstructionReport:
    """Teardrop bookkeeping for a graded plane curve.

    Teardrops are grouped by their corner.  In a group of two or more, the
    smallest areas must agree to relative tolerance ``rtol``; equality
    leaves the curve unobstructed with the holonomy constraint
    ``holonomy_sign`` (the sign is a convention, see the notes), otherwise
    the smallest teardrop is the witness.  A lone teardrop is cancelled when
    it shares its corner with a bigon whose other corner carries a cochain
    in the nonnegative Novikov ring; otherwise it is a witness.
    """
    if crossings is None:
        crossings = self_intersections(curve)
    if face_list is None:
        face_list = faces(curve, crossings)
    if components is not None:
        keep = set(components)
        face_list = [f for f in face_list if set(f.components) <= keep]
    by_key = {x.key: x for x in crossings}
    groups: Dict[int, List[Face]] = {}
    for f in face_list:
        if f.kind == "teardrop":
            groups.setdefault(f.corners[0], []).append(f)
    report = ObstructionReport("unobstructed", groups=groups)
    for key, tds in sorted(groups.items()):
        tds = sorted(tds, key=lambda f: f.area)
        if len(tds) >= 2:
            a, b = tds[0].area, tds[1].area
            if abs(a - b) <= rtol * max(a, b):
                report.holonomy_constraint = holonomy_sign
            else:
                report.witnesses.append(tds[0])
            continue
        td = tds[0]
        partner = None
        for f in face_list:
            if f.kind == "bigon" and key in f.corners:
                other = [k for k in f.corners if k != key][0]
                x = by_key.get(other)
                if x is not None and x.cochain is not None and x.cochain.classify() in (
                    Membership.POSITIVE, Membership.NONNEGATIVE_ONLY
                ):
                    partner = other
        if partner is None:
            report.witnesses.append(td)
        else:
            report.cancelled.append((td, partner))
    if report.witnesses:
        report.status = "obstructed"
    return report
