"""Curve shortening flow with cochain transport, walls and surgeries.

Vertices move with the discrete curvature vector

    V_k = (phi_k / sin phi_k) (T_k - T_{k-1}) / d_k,

where ``phi_k`` is the turning at vertex ``k``, ``T`` the unit edge
tangents and ``d_k`` the dual length.  The factor makes the instantaneous
rate of change of the enclosed area equal to minus the total turning, a
discrete Gauss-Bonnet identity, so measured face areas follow the
predicted rates up to time-stepping and remeshing error.

Time stepping is explicit Euler with ``dt <= c * min_edge**2``.  Remeshing
keeps vertex 0 fixed and places vertices so that the turning per vertex
stays below ``max_turn``.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from ..novikov import Membership, monomial, nv_classify, nv_shift, rationalize
from .arrangement import (
    Crossing,
    Face,
    faces,
    area_rates,
    obstruction_status,
    self_intersections,
)
from .curves import PLANE, ImmersedCurve, resample_loop

__all__ = [
    "FlowPolicy",
    "FlowEvent",
    "FlowState",
    "Trajectory",
    "ProbeResult",
    "StepSizeError",
    "SingularityError",
    "SurgeryError",
    "InsufficientWindowError",
    "init_state",
    "curvature_velocity",
    "stable_dt",
    "csf_step",
    "transport_cochain",
    "wall_limited_dt",
    "surgery_open_neck",
    "surgery_collapse",
    "singularity_probe",
    "run_with_surgeries",
    "teardrop_extinction",
]

log = logging.getLogger("lmcflab.flow")


class StepSizeError(ValueError):
    """Requested time step exceeds the stability bound."""


class SingularityError(RuntimeError):
    """Curvature exceeded the policy limit; the flow cannot step further."""


class SurgeryError(ValueError):
    """Surgery preconditions unmet or the local model collided with other geometry."""


class InsufficientWindowError(ValueError):
    """Too few samples to classify a singularity."""


@dataclass
class FlowPolicy:
    """Numerical and surgery settings for a run.

    ``h_target`` defaults to the mean initial edge length.  The collapse
    threshold is ``collapse_mesh_lengths * h_target``; ``terminal_area``
    defaults to ``1e-6`` times the largest initial face area.  With
    ``remesh`` off, steps are pure Euler moves of the vertices.
    """

    dt_factor: float = 0.25
    dt_safety: float = 0.8
    max_turn: float = 0.1
    h_target: Optional[float] = None
    min_vertices: int = 32
    max_vertices: int = 4000
    remesh: bool = True
    collapse_mesh_lengths: float = 5.0
    terminal_area: Optional[float] = None
    smoothing_radius: Optional[float] = None
    surgeries: bool = True
    record_every: int = 10
    snapshot_every: Optional[float] = None
    holonomy_sign: int = 1
    area_rtol: float = 1e-2
    max_steps: int = 500000
    kappa_limit: float = 1e9

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class FlowEvent:
    t: float
    kind: str
    data: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"t": self.t, "kind": self.kind, **self.data}


@dataclass
class FlowState:
    curve: ImmersedCurve
    t: float = 0.0
    events: List[FlowEvent] = field(default_factory=list)
    crossings: List[Crossing] = field(default_factory=list)
    h_ref: float = 0.0
    step: int = 0
    next_key: int = 0

    def crossing(self, key) -> Crossing:
        for x in self.crossings:
            if x.key == key:
                return x
        raise KeyError(f"no crossing with key {key}")

    def log(self, kind, **data):
        self.events.append(FlowEvent(self.t, kind, data))


def _admissible(x: Crossing, tol: float = 1e-9) -> bool:
    return x.mu_pm == 1 and x.potential_gap is not None and x.potential_gap >= -tol


def init_state(curve: ImmersedCurve, h_ref: Optional[float] = None, cochains: bool = True) -> FlowState:
    """Initial flow state: crossings keyed 0..n-1 and monomial cochains.

    A crossing gets the cochain ``1 * P^gap`` (gap rationalized) when its
    degree is 1 and the curve is exact with ``f_plus >= f_minus`` there.
    """
    xs = self_intersections(curve)
    if cochains:
        for x in xs:
            if _admissible(x):
                x.cochain = monomial(rationalize(max(x.potential_gap, 0.0)))
    if h_ref is None:
        h_ref = float(np.mean(np.concatenate(curve.lengths))) if curve.components else 0.0
    return FlowState(curve, 0.0, [], xs, h_ref, 0, len(xs))


# ----------------------------------------------------------------------
# the flow

def curvature_velocity(curve: ImmersedCurve, c: int) -> np.ndarray:
    """Discrete curvature vector at each vertex of component ``c``."""
    T = curve.edges[c] / curve.lengths[c][:, None]
    turn = curve.turning[c]
    dual = 0.5 * (curve.lengths[c] + np.roll(curve.lengths[c], 1))
    small = np.abs(turn) < 1e-8
    fac = np.where(small, 1.0, turn / np.where(small, 1.0, np.sin(turn)))
    return fac[:, None] * (T - np.roll(T, 1, axis=0)) / dual[:, None]


def stable_dt(curve: ImmersedCurve, policy: FlowPolicy) -> float:
    return policy.dt_safety * policy.dt_factor * curve.min_edge() ** 2


def _grade(h, growth):
    """Largest ``g <= h`` with ``g[i] <= growth * g[i +- 1]`` on a periodic array."""
    n = h.size
    c = math.log(growth)
    x = np.log(np.concatenate([h, h, h]))
    i = np.arange(3 * n) * c
    fwd = i + np.minimum.accumulate(x - i)
    bwd = (-i + np.minimum.accumulate((x + i)[::-1])[::-1])
    return np.exp(np.minimum(fwd, bwd)[n:2 * n])


def _liouville(loop, period_vec):
    nxt = np.vstack([loop[1:], loop[:1] + period_vec])
    return 0.5 * float(np.sum(loop[:, 0] * nxt[:, 1] - loop[:, 1] * nxt[:, 0]))


def _remesh(points, period_vec, h_target, max_turn, min_vertices, max_vertices, force=False):
    p = np.asarray(points, float)
    closed = np.vstack([p, p[:1] + period_vec])
    d = np.diff(closed, axis=0)
    ln = np.hypot(d[:, 0], d[:, 1])
    a = np.arctan2(d[:, 1], d[:, 0])
    turn = np.empty_like(a)
    turn[1:] = a[1:] - a[:-1]
    turn[0] = a[0] - a[-1]
    turn = np.abs((turn + math.pi) % (2 * math.pi) - math.pi)
    dual = np.empty_like(ln)
    dual[1:] = 0.5 * (ln[1:] + ln[:-1])
    dual[0] = 0.5 * (ln[0] + ln[-1])
    kap = turn / dual
    kap = np.maximum(kap, np.maximum(np.roll(kap, 1), np.roll(kap, -1)))
    L = float(ln.sum())
    hv = np.minimum(min(h_target, L / min_vertices), max_turn / np.maximum(kap, 1e-300))
    hv = _grade(hv, 1.3)
    he = np.minimum(hv, np.roll(hv, -1))
    ratio = ln / he
    if not force and ratio.max() < 1.5 and ratio.min() > 0.4:
        return None
    s = np.concatenate([[0.0], np.cumsum(ln)])
    rho = 1.0 / np.concatenate([hv, hv[:1]])
    M = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * ln)])
    n = int(min(max(math.ceil(M[-1]), min_vertices), max_vertices))
    targets = np.linspace(0.0, M[-1], n, endpoint=False)
    snew = np.interp(targets, M, s)
    drift = np.outer(s / L, period_vec)
    spl = CubicSpline(s, closed - drift, bc_type="periodic")
    out = spl(snew) + np.outer(snew / L, period_vec)
    out[0] = p[0]
    return _restore_liouville(out, period_vec, _liouville(p, period_vec))


def _vertex_normals(p, period_vec):
    closed = np.vstack([p[-1:] - period_vec, p, p[:1] + period_vec])
    t = closed[2:] - closed[:-2]
    t /= np.hypot(t[:, 0], t[:, 1])[:, None]
    return np.column_stack([-t[:, 1], t[:, 0]])


def _restore_liouville(p, period_vec, target, weight=None, pin_first=True):
    """Offset ``p`` along its normals so the Liouville integral equals ``target``.

    Resampling moves the enclosed signed area by O(h^4) per pass; the flow
    itself changes it only through the turning, so the remesher puts it back.
    ``weight`` localises the offset; ``pin_first`` keeps vertex 0 fixed.
    """
    disp = _vertex_normals(p, period_vec)
    if weight is not None:
        disp = disp * np.asarray(weight, float)[:, None]
    if pin_first:
        disp[0] = 0.0
    a0 = _liouville(p, period_vec)
    eps = 1e-6
    slope = (_liouville(p + eps * disp, period_vec) - a0) / eps
    if slope == 0:
        return p
    c_prev, r_prev = 0.0, a0 - target
    c = -r_prev / slope
    for _ in range(20):
        r = _liouville(p + c * disp, period_vec) - target
        if abs(r) <= 1e-15 * max(1.0, abs(target)) or r == r_prev:
            break
        c_prev, c, r_prev = c, c - r * (c - c_prev) / (r - r_prev), r
    return p + c * disp


def _match_crossings(old: Sequence[Crossing], new: Sequence[Crossing], radius: float, comp_map=None,
                     ambient=PLANE):
    """Pair new crossings with old ones by proximity and sheet consistency."""
    pairs = {}
    used = set()
    cand = []
    for i, x in enumerate(new):
        for y in old:
            cp, cm = y.plus.component, y.minus.component
            if comp_map is not None:
                cp, cm = comp_map.get(cp), comp_map.get(cm)
            if {cp, cm} != {x.plus.component, x.minus.component}:
                continue
            dist = ambient.separation(x.location, y.location)
            if dist > radius:
                continue
            if float(np.dot(x.tangent_plus, y.tangent_plus)) < 0.5 or float(np.dot(x.tangent_minus, y.tangent_minus)) < 0.5:
                continue
            cand.append((dist, i, y.key))
    for dist, i, key in sorted(cand):
        if i in pairs or key in used:
            continue
        pairs[i] = key
        used.add(key)
    return pairs


def _retrack(previous, state: FlowState, curve: ImmersedCurve, radius: float, comp_map=None, quiet=False):
    """Fresh crossings for ``curve`` carrying keys and cochains from ``previous``.

    Births, losses and degree changes are logged on ``state``.
    """
    new = self_intersections(curve)
    pairs = _match_crossings(previous, new, radius, comp_map, curve.ambient)
    old = {x.key: x for x in previous}
    for i, x in enumerate(new):
        if i in pairs:
            y = old[pairs[i]]
            x.key = y.key
            x.cochain = y.cochain
            if x.degrees != y.degrees:
                state.log("degree-change", key=y.key, before=list(y.degrees), after=list(x.degrees))
        else:
            x.key = state.next_key
            state.next_key += 1
            if not quiet:
                state.log("crossing-born", key=x.key, location=[float(v) for v in x.location])
    lost = set(old) - set(pairs.values())
    if not quiet:
        for k in sorted(lost):
            state.log("crossing-lost", key=k, location=[float(v) for v in old[k].location])
    return new, lost


def csf_step(state: FlowState, dt: float, policy: Optional[FlowPolicy] = None) -> FlowState:
    """One explicit curve-shortening step with remeshing and crossing tracking.

    Raises
    ------
    StepSizeError
        If ``dt`` exceeds ``dt_factor * min_edge**2``.
    SingularityError
        If the curvature exceeds ``policy.kappa_limit``.
    """
    policy = policy or FlowPolicy()
    curve = state.curve
    if not curve.components:
        out = copy.copy(state)
        out.t = state.t + dt
        return out
    bound = policy.dt_factor * curve.min_edge() ** 2
    if dt > bound * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3e} exceeds the bound {bound:.3e}")
    if curve.max_curvature() > policy.kappa_limit:
        raise SingularityError(f"curvature {curve.max_curvature():.3e} above the limit")
    h_target = policy.h_target or state.h_ref
    comps, frefs = [], []
    vmax = 0.0
    for c in range(curve.n_components):
        V = curvature_velocity(curve, c)
        vmax = max(vmax, float(np.max(np.hypot(V[:, 0], V[:, 1]))))
        v = curve.components[c]
        moved = v + dt * V
        if curve.periods[c] == (0, 0):
            # semi-discrete area law dA/dt = -(total turning), without the O(dt^2) Euler error
            target = _liouville(v, np.zeros(2)) - dt * float(np.sum(curve.turning[c]))
            moved = _restore_liouville(moved, np.zeros(2), target)
        f = curve.potential[c]
        f0 = 0.0
        if f is not None:
            lam = 0.5 * (v[0, 0] * V[0, 1] - v[0, 1] * V[0, 0])
            f0 = float(f[0]) + dt * (-float(curve.theta[c][0]) + lam)
        frefs.append(f0)
        rem = None
        if policy.remesh:
            rem = _remesh(moved, curve.period_vector(c), h_target, policy.max_turn,
                          policy.min_vertices, policy.max_vertices)
        comps.append(moved if rem is None else rem)
    new_curve = curve.with_components(comps, theta_refs=curve.theta_refs(), potential_refs=frefs)
    out = FlowState(new_curve, state.t + dt, list(state.events), [], state.h_ref, state.step + 1, state.next_key)
    radius = 4.0 * vmax * dt + 4.0 * max(float(l.max()) for l in new_curve.lengths)
    out.crossings, _ = _retrack(state.crossings, out, new_curve, radius)
    # crossings keep their cochains, so the earlier classification is preserved
    return out


def transport_cochain(state: FlowState, dt: float, land=()) -> FlowState:
    """Shift every cochain exponent by ``(theta_minus - theta_plus) * dt``.

    The shift is rounded onto the exact rational grid.  Keys listed in
    ``land`` are moved exactly to valuation 0; :func:`wall_limited_dt`
    shortens the step so that this is the true arithmetic outcome up to
    that rounding.  Classification changes are logged as events.
    """
    out = copy.copy(state)
    out.events = list(state.events)
    out.crossings = []
    for x in state.crossings:
        y = copy.copy(x)
        if x.cochain is not None:
            before = nv_classify(x.cochain)
            v = x.cochain.valuation()
            if x.key in land:
                shift = -v
            else:
                shift = rationalize(x.rate * dt)
            y.cochain = nv_shift(x.cochain, shift)
            after = nv_classify(y.cochain)
            if after != before:
                kind = "wall" if after == Membership.NONNEGATIVE_ONLY else "cochain-class"
                out.events.append(FlowEvent(state.t + dt, kind, {
                    "key": x.key, "from": before.name, "to": after.name,
                    "valuation": str(y.cochain.valuation()),
                }))
        out.crossings.append(y)
    return out


def wall_limited_dt(state: FlowState, dt: float):
    """Shorten ``dt`` so that no positive valuation overshoots 0.

    Returns ``(dt, keys)`` with the keys that land on the wall.
    """
    best, keys = dt, []
    for x in state.crossings:
        if x.cochain is None:
            continue
        v = x.cochain.valuation()
        r = x.rate
        if v > 0 and r < 0:
            tau = float(v) / (-r)
            if tau < best - 1e-15:
                best, keys = tau, [x.key]
            elif abs(tau - best) <= 1e-15:
                keys.append(x.key)
    return best, keys


# ----------------------------------------------------------------------
# surgeries

def _walk(curve: ImmersedCurve, c: int, param: float, dist: float):
    """Point at signed arclength ``dist`` from ``param`` on component ``c``.

    Returns ``(param, point, edge_index, laps)`` where the point is in the
    cover copy reached after ``laps`` full turns.
    """
    v = curve.components[c]
    N = len(v)
    e = curve.edges[c]
    ln = curve.lengths[c]
    P = curve.period_vector(c)
    k = int(math.floor(param)) % N
    s = param - math.floor(param)
    laps = int(math.floor(param)) // N
    remaining = dist
    if dist >= 0:
        avail = (1 - s) * ln[k]
        while remaining > avail:
            remaining -= avail
            k += 1
            if k == N:
                k, laps = 0, laps + 1
            s, avail = 0.0, ln[k]
        s = s + remaining / ln[k]
    else:
        remaining = -dist
        avail = s * ln[k]
        while remaining > avail:
            remaining -= avail
            k -= 1
            if k < 0:
                k, laps = N - 1, laps - 1
            s, avail = 1.0, ln[k]
        s = s - remaining / ln[k]
    pt = v[k] + s * e[k] + laps * P
    return laps * N + k + s, pt, k, laps


def _piece(curve, c, p_from, p_to):
    """Cover points of component ``c`` from param ``p_from`` to ``p_to`` (p_to > p_from)."""
    v = curve.components[c]
    N = len(v)
    P = curve.period_vector(c)
    j = np.arange(math.floor(p_from) + 1, math.ceil(p_to))
    j = j[(j > p_from) & (j < p_to)]
    pts = v[j % N] + np.outer(np.floor_divide(j, N), P)
    return pts


def _bridge(a, ta, b, tb, h):
    m = float(np.hypot(*(b - a)))
    n = max(4, int(math.ceil(1.5 * m / h)))
    s = np.linspace(0.0, 1.0, n + 1)[1:-1, None]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * a + h10 * m * ta + h01 * b + h11 * m * tb


def _balance(loop, centre, period_vec, radius):
    """Make a new component exact by reshaping its neck.

    The smoothing template cuts slightly different areas off the two sides
    of the neck.  For an exact curve the neck is fixed by asking each new
    component to stay exact, so the loop is pushed along its normals with a
    bump supported within ``radius`` of the surgery point.
    """
    d = np.hypot(*(loop - centre).T) / radius
    w = np.where(d < 1, (1 - d**2) ** 2, 0.0)
    out = _restore_liouville(loop, period_vec, 0.0, w, pin_first=False)
    return out, float(np.max(np.hypot(*(out - loop).T)))


def _edge_theta_at(curve, c, param):
    N = len(curve.components[c])
    k = int(math.floor(param))
    return float(curve.edge_theta[c][k % N] + 2 * math.pi * curve.maslov[c] * (k // N))


def _potential_at(curve, c, param, point):
    f = curve.potential[c]
    if f is None:
        return 0.0
    N = len(curve.components[c])
    k = int(math.floor(param)) % N
    v = curve.components[c][k]
    return float(f[k] + 0.5 * (v[0] * point[1] - v[1] * point[0]))


def surgery_open_neck(state: FlowState, key: int, policy: Optional[FlowPolicy] = None) -> FlowState:
    """Lagrangian connected sum at a degree-1 crossing on the wall.

    The crossing is replaced by the oriented smoothing: the incoming plus
    sheet is joined to the outgoing minus sheet and vice versa, each by a
    cubic Hermite arc matching the sheet tangents at distance
    ``smoothing_radius`` from the crossing.  This is the resolution in which
    the corner of the bigon at the crossing is rounded off.  Within one
    component it splits the loop in two; across two components it merges
    them.

    Raises
    ------
    SurgeryError
        If the crossing has the wrong degree, no cochain on the wall,
        ``theta_plus <= theta_minus``, or the smoothing disturbs any other
        crossing.
    """
    policy = policy or FlowPolicy()
    x = state.crossing(key)
    if x.mu_pm != 1:
        raise SurgeryError(f"crossing {key} has degree {x.mu_pm}, not 1")
    if x.cochain is None or x.cochain.is_zero():
        raise SurgeryError(f"crossing {key} carries no cochain")
    if x.cochain.valuation() != 0:
        raise SurgeryError(f"crossing {key} is not on the wall (valuation {x.cochain.valuation()})")
    a0 = x.cochain.leading_coefficient()
    if a0 == 0:
        raise SurgeryError("leading coefficient is not invertible")
    if not x.theta_plus > x.theta_minus:
        raise SurgeryError("need theta_plus > theta_minus at the crossing")
    curve = state.curve
    h = policy.h_target or state.h_ref
    r = policy.smoothing_radius or 3.0 * h
    for y in state.crossings:
        if y.key != key and np.hypot(*(y.location - x.location)) < 4 * r:
            raise SurgeryError(f"crossing {y.key} lies within the smoothing region")
    cp, cm = x.plus.component, x.minus.component
    shift_p = curve.ambient.lattice(x.plus.shift)
    shift_m = curve.ambient.lattice(x.minus.shift)
    pin, ain, _, _ = _walk(curve, cp, x.plus.param, -r)
    pout, aout, _, _ = _walk(curve, cp, x.plus.param, r)
    ain, aout = ain + shift_p, aout + shift_p
    min_, bin_, _, _ = _walk(curve, cm, x.minus.param, -r)
    mout, bout, _, _ = _walk(curve, cm, x.minus.param, r)
    bin_, bout = bin_ + shift_m, bout + shift_m

    def unit(c, param):
        th = _edge_theta_at(curve, c, param)
        return np.array([math.cos(th), math.sin(th)])

    t_pin, t_pout = unit(cp, pin), unit(cp, pout)
    t_min, t_mout = unit(cm, min_), unit(cm, mout)
    hol = list(curve.holonomies)
    field_ = x.cochain.field
    keep = [c for c in range(curve.n_components) if c not in (cp, cm)]
    new_loops, new_periods, new_hol, new_refs, new_f = [], [], [], [], []
    if cp == cm:
        if x.minus.shift != x.plus.shift:
            raise SurgeryError("splitting along a lattice-shifted self-crossing is not supported")
        N = len(curve.components[cp])
        a, b = x.plus.param, x.minus.param
        # piece X: out+ -> in-, piece Y: out- -> in+ (params unrolled forward)
        bx_from, bx_to = pout, min_ if min_ > pout else min_ + N
        by_from, by_to = mout, pin if pin > mout else pin + N
        P = curve.period_vector(cp)
        lapx = math.floor(bx_to / N) - math.floor(bx_from / N)
        lapy = math.floor(by_to / N) - math.floor(by_from / N)
        bx = _bridge(bin_ + lapx * P, t_min, aout + lapx * P, t_pout, h)
        by = _bridge(ain + lapy * P, t_pin, bout + lapy * P, t_mout, h)
        X = np.vstack([aout[None], _piece(curve, cp, bx_from, bx_to) + shift_p, (bin_ + lapx * P)[None], bx])
        Y = np.vstack([bout[None], _piece(curve, cp, by_from, by_to) + shift_p, (ain + lapy * P)[None], by])
        base_in_x = bx_from < N <= bx_to or (bx_from <= 0 < bx_to)
        h0 = hol[cp]
        inv = field_.inverse(field_.coerce(a0))
        hx = field_.mul(inv, h0) if base_in_x else inv
        hy = field_.coerce(a0) if base_in_x else field_.mul(field_.coerce(a0), h0)
        per = curve.periods[cp]
        new_loops += [X, Y]
        new_periods += [(0, 0) if lapx == 0 else per, (0, 0) if lapy == 0 else per]
        new_hol += [hx, hy]
        new_refs += [_edge_theta_at(curve, cp, pout), _edge_theta_at(curve, cm, mout)]
        new_f += [_potential_at(curve, cp, pout, aout), _potential_at(curve, cm, mout, bout)]
    else:
        Np, Nm = len(curve.components[cp]), len(curve.components[cm])
        Pp, Pm = curve.period_vector(cp), curve.period_vector(cm)
        p_to = pin if pin > pout else pin + Np
        m_to = min_ if min_ > mout else min_ + Nm
        lp = math.floor(p_to / Np) - math.floor(pout / Np)
        lm = math.floor(m_to / Nm) - math.floor(mout / Nm)
        A = np.vstack([aout[None], _piece(curve, cp, pout, p_to) + shift_p])
        end_p = ain + lp * Pp
        off = lp * Pp
        B = np.vstack([(bout + off)[None], _piece(curve, cm, mout, m_to) + shift_m + off])
        end_m = bin_ + off + lm * Pm
        b1 = _bridge(end_p, t_pin, bout + off, t_mout, h)
        b2 = _bridge(end_m, t_min, aout + off + lm * Pm, t_pout, h)
        loop = np.vstack([A, end_p[None], b1, B, end_m[None], b2])
        new_loops.append(loop)
        per = (curve.periods[cp][0] * lp + curve.periods[cm][0] * lm,
               curve.periods[cp][1] * lp + curve.periods[cm][1] * lm)
        new_periods.append(per)
        new_hol.append(field_.mul(field_.coerce(hol[cp]), field_.coerce(hol[cm])))
        new_refs.append(_edge_theta_at(curve, cp, pout))
        new_f.append(_potential_at(curve, cp, pout, aout))
    loops, periods, hols, refs, fr = [], [], [], [], []
    for c in keep:
        loops.append(curve.components[c])
        periods.append(curve.periods[c])
        hols.append(curve.holonomies[c])
        refs.append(float(curve.edge_theta[c][0]))
        fr.append(curve.potential_refs()[c])
    comp_map = {c: i for i, c in enumerate(keep)}
    offsets = []
    for loop, per, hh, rf, ff in zip(new_loops, new_periods, new_hol, new_refs, new_f):
        L = float(np.sum(np.hypot(*np.diff(np.vstack([loop, loop[:1] + curve.ambient.lattice(per)]), axis=0).T)))
        n = max(policy.min_vertices, int(round(L / h)))
        res = resample_loop(loop, n, curve.ambient.lattice(per))
        rem = _remesh(res, curve.ambient.lattice(per), h, policy.max_turn, policy.min_vertices,
                      policy.max_vertices, force=True)
        if curve.exact and per == (0, 0):
            rem, moved = _balance(rem, x.location, np.zeros(2), 2 * r)
            offsets.append(moved)
        loops.append(rem)
        periods.append(per)
        hols.append(hh)
        refs.append(rf)
        fr.append(ff)
    new_curve = curve.with_components(loops, periods, hols, refs, fr)
    out = FlowState(new_curve, state.t, list(state.events), [], state.h_ref, state.step, state.next_key)
    old_rest = [y for y in state.crossings if y.key != key]
    tmp = copy.copy(state)
    tmp.crossings = old_rest
    out.crossings, lost = _retrack_with(out, tmp, new_curve, 4 * r)
    if lost or len(out.crossings) != len(state.crossings) - 1:
        raise SurgeryError(
            f"smoothing changed other crossings ({len(state.crossings)} -> {len(out.crossings)})"
        )
    out.log("open-neck", key=key, location=[float(v) for v in x.location], radius=r,
            components=new_curve.n_components, neck_offsets=offsets)
    return out


def _retrack_with(out: FlowState, source: FlowState, curve, radius):
    new = self_intersections(curve)
    old = {x.key: x for x in source.crossings}
    cand = []
    for i, x in enumerate(new):
        for y in source.crossings:
            dist = curve.ambient.separation(x.location, y.location)
            if dist <= radius and float(np.dot(x.tangent_plus, y.tangent_plus)) > 0.5:
                cand.append((dist, i, y.key))
    pairs, used = {}, set()
    for dist, i, k in sorted(cand):
        if i in pairs or k in used:
            continue
        pairs[i] = k
        used.add(k)
    for i, x in enumerate(new):
        if i in pairs:
            x.key = pairs[i]
            x.cochain = old[pairs[i]].cochain
        else:
            x.key = out.next_key
            out.next_key += 1
    return new, set(old) - used


def surgery_collapse(state: FlowState, component: int, policy: Optional[FlowPolicy] = None) -> FlowState:
    """Remove a small unobstructed graded component (a zero object).

    Raises
    ------
    SurgeryError
        If the component is larger than the collapse threshold, is not
        graded, meets another component, or is obstructed.
    """
    policy = policy or FlowPolicy()
    curve = state.curve
    eps = policy.collapse_mesh_lengths * (policy.h_target or state.h_ref)
    diam = curve.diameter(component)
    if diam >= eps:
        raise SurgeryError(f"component diameter {diam:.3g} is not below {eps:.3g}")
    if not curve.graded or curve.maslov[component] != 0:
        raise SurgeryError("only graded components are zero-object candidates")
    mine = [x for x in state.crossings if component in (x.plus.component, x.minus.component)]
    if any(x.plus.component != x.minus.component for x in mine):
        raise SurgeryError("component meets another component")
    if not curve.ambient.is_torus:
        rep = obstruction_status(curve, crossings=state.crossings, rtol=policy.area_rtol,
                                 holonomy_sign=policy.holonomy_sign, components=[component])
        if rep.obstructed:
            raise SurgeryError("component is obstructed; it is not a zero object")
    keep = [c for c in range(curve.n_components) if c != component]
    limit = curve.components[component].mean(axis=0)
    new_curve = curve.with_components(
        [curve.components[c] for c in keep],
        [curve.periods[c] for c in keep],
        [curve.holonomies[c] for c in keep],
        [float(curve.edge_theta[c][0]) for c in keep],
        [curve.potential_refs()[c] for c in keep],
    )
    out = FlowState(new_curve, state.t, list(state.events), [], state.h_ref, state.step, state.next_key)
    comp_map = {c: i for i, c in enumerate(keep)}
    rest = []
    gone = {x.key for x in mine}
    for x in state.crossings:
        if x.key in gone:
            continue
        y = copy.copy(x)
        y.plus = type(x.plus)(comp_map[x.plus.component], x.plus.edge, x.plus.s, x.plus.shift)
        y.minus = type(x.minus)(comp_map[x.minus.component], x.minus.edge, x.minus.s, x.minus.shift)
        rest.append(y)
    out.crossings = rest
    out.log("collapse", component=component, limit_point=[float(v) for v in limit], diameter=diam,
            removed_crossings=[x.key for x in mine])
    return out


# ----------------------------------------------------------------------
# singularity classification

@dataclass
class ProbeResult:
    kind: str  # "I" | "II" | "none"
    T: Optional[float]
    slope: Optional[float]
    decade_growth: Optional[float]
    tau: np.ndarray
    q: np.ndarray
    growth: Optional[float] = None


def singularity_probe(times, kappa_max, T: Optional[float] = None, fit_fraction: float = 0.3,
                      min_points: int = 8, growth_threshold: float = 1.5) -> ProbeResult:
    """Classify a blow-up from samples of ``sup |kappa|``.

    ``T`` is estimated, when not given, by extrapolating ``1 / kappa**2``
    linearly over the last ``fit_fraction`` of the window.  The quantity
    ``q = kappa**2 (T - t)`` stays bounded at a type I singularity.  We
    compare the median of ``q`` over the fifth of the window closest to
    ``T`` with the median over the fifth farthest from it; a ratio above
    ``growth_threshold`` means type II.  A window in which ``1 / kappa**2``
    does not decrease has no blow-up.

    ``slope`` is the least-squares slope of ``q`` against ``log10(T - t)``
    (negative when q grows towards T) and ``decade_growth`` is ``q`` at the
    last sample over ``q`` one decade of ``T - t`` earlier, or None if the
    window spans less than a decade.

    Raises
    ------
    InsufficientWindowError
        With fewer than ``min_points`` samples.
    """
    t = np.asarray(times, float)
    k = np.asarray(kappa_max, float)
    if t.size < min_points:
        raise InsufficientWindowError(f"need at least {min_points} samples, got {t.size}")
    w = 1.0 / k**2
    m = max(min_points // 2, int(fit_fraction * t.size))
    slope_w, icpt = np.polyfit(t[-m:], w[-m:], 1)
    span = max(float(t[-1] - t[-m]), 1e-300)
    if slope_w * span >= -1e-9 * float(np.max(np.abs(w[-m:]))):
        return ProbeResult("none", T, None, None, np.empty(0), np.empty(0))
    if T is None:
        T = -icpt / slope_w
    tau = T - t
    ok = tau > 0
    tau, q = tau[ok], k[ok] ** 2 * tau[ok]
    if tau.size < min_points:
        raise InsufficientWindowError("too few samples before the blow-up time")
    order = np.argsort(tau)
    tau, q = tau[order], q[order]
    fifth = max(2, tau.size // 5)
    growth = float(np.median(q[:fifth]) / np.median(q[-fifth:]))
    slope = float(np.polyfit(np.log10(tau), q, 1)[0])
    dec = None
    if tau[-1] >= 10 * tau[0]:
        q_dec = float(np.interp(math.log(10 * tau[0]), np.log(tau), q))
        dec = float(q[0] / q_dec)
    kind = "II" if growth > growth_threshold else "I"
    return ProbeResult(kind, float(T), slope, dec, tau, q, growth)


# ----------------------------------------------------------------------
# the programme

@dataclass
class Trajectory:
    """Samples, snapshots and events of a run.

    ``samples`` are dicts with keys ``t``, ``step``, ``length``,
    ``theta_min``, ``theta_max``, ``kappa_max``, ``n_components``,
    ``n_crossings``, ``faces`` (label -> dict with kind, area, rate) and
    ``valuations`` (crossing key -> exact valuation or None).
    """

    samples: List[dict] = field(default_factory=list)
    snapshots: List[dict] = field(default_factory=list)
    events: List[FlowEvent] = field(default_factory=list)
    status: str = "running"
    final: Optional[FlowState] = None
    info: dict = field(default_factory=dict)

    def series(self, key):
        return np.array([s[key] for s in self.samples], float)

    def face_series(self, label, what="area"):
        t, v = [], []
        for s in self.samples:
            if label in s["faces"]:
                t.append(s["t"])
                v.append(s["faces"][label][what])
        return np.array(t), np.array(v)

    def events_of(self, kind):
        return [e for e in self.events if e.kind == kind]


class _FaceLabeler:
    def __init__(self):
        self.prev = {}
        self.count = 0

    def label(self, face_list):
        out = {}
        taken = set()
        for f in face_list:
            best, bd = None, math.inf
            for lab, (cx, kind, area) in self.prev.items():
                if lab in taken or kind != f.kind:
                    continue
                d = float(np.hypot(*(cx - f.centroid)))
                if d < bd and d < 0.5 * math.sqrt(max(area, f.area)) + 1e-12:
                    best, bd = lab, d
            if best is None:
                best = f"F{self.count}"
                self.count += 1
            taken.add(best)
            out[best] = f
        self.prev = {lab: (f.centroid, f.kind, f.area) for lab, f in out.items()}
        return out


def teardrop_extinction(t: float, area: float, rate: float) -> float:
    """Linear extrapolation of a shrinking face to zero area."""
    return t + area / (-rate) if rate < 0 else math.inf


def _snapshot(state, row=None):
    faces_ = {} if row is None else {k: (v["kind"], tuple(v["centroid"])) for k, v in row["faces"].items()}
    return {
        "t": state.t,
        "components": [c.copy() for c in state.curve.components],
        "periods": [state.curve.period_vector(c) for c in range(state.curve.n_components)],
        "crossings": [(x.key, x.location.copy()) for x in state.crossings],
        "faces": faces_,
    }


def run_with_surgeries(initial, policy: Optional[FlowPolicy] = None, horizon: float = 1.0,
                       callback=None) -> Trajectory:
    """Flow with walls, surgeries and terminal detection.

    Each step transports cochains (shortening the step to land on a wall),
    moves the curve, and then handles events:

    * a wall at a degree-1 crossing opens a neck there (graded curves with
      surgeries enabled);
    * a graded component below the collapse diameter is removed if
      unobstructed;
    * an obstructed witness teardrop whose area falls below
      ``terminal_area`` (or that disappears) ends the run with status
      ``"obstructed-terminal"``;
    * a non-graded component below the collapse diameter ends the run with
      status ``"singular-terminal"``.

    Other statuses: ``"empty"`` when every component collapsed and
    ``"horizon"`` when time ran out.
    """
    policy = policy or FlowPolicy()
    state = initial if isinstance(initial, FlowState) else init_state(initial)
    traj = Trajectory()
    labeler = _FaceLabeler()
    plane = not state.curve.ambient.is_torus
    eps = policy.collapse_mesh_lengths * (policy.h_target or state.h_ref)
    terminal_area = policy.terminal_area
    if terminal_area is None and plane and state.curve.components:
        fl = faces(state.curve, state.crossings)
        terminal_area = 1e-6 * max([f.area for f in fl] or [1.0])
    traj.info.update(eps_collapse=eps, terminal_area=terminal_area, h_ref=state.h_ref)
    last_snap = -math.inf
    witnesses_prev = []

    def record(state, force=False):
        nonlocal last_snap, witnesses_prev
        curve = state.curve
        lo, hi = curve.theta_range()
        row = {
            "t": state.t, "step": state.step, "length": curve.length() if curve.components else 0.0,
            "theta_min": lo, "theta_max": hi, "kappa_max": curve.max_curvature(),
            "n_components": curve.n_components, "n_crossings": len(state.crossings),
            "faces": {}, "valuations": {},
        }
        for x in state.crossings:
            row["valuations"][x.key] = None if x.cochain is None else x.cochain.valuation()
        report = None
        if plane and curve.components:
            fl = faces(curve, state.crossings)
            rates = area_rates(curve, fl)
            labelled = labeler.label(fl)
            rate_of = {id(f): r for f, r in zip(fl, rates)}
            for lab, f in labelled.items():
                row["faces"][lab] = {"kind": f.kind, "area": f.area, "rate": rate_of[id(f)],
                                     "corners": list(f.corners), "centroid": [float(v) for v in f.centroid]}
            if curve.graded:
                report = obstruction_status(curve, fl, state.crossings, policy.area_rtol, policy.holonomy_sign)
                row["obstruction"] = report.status
                inv = {id(f): lab for lab, f in labelled.items()}
                row["witnesses"] = [inv[id(w)] for w in report.witnesses]
        traj.samples.append(row)
        if policy.snapshot_every is not None and (state.t - last_snap >= policy.snapshot_every or force):
            traj.snapshots.append(_snapshot(state, row))
            last_snap = state.t
        if callback is not None:
            callback(state, row)
        return row, report

    row, report = record(state, force=True)
    status = "running"
    while True:
        curve = state.curve
        if not curve.components:
            status = "empty"
            break
        # terminal and collapse checks
        if report is not None and report.obstructed:
            labs = row.get("witnesses", [])
            small = [l for l in labs if row["faces"][l]["area"] < terminal_area]
            if small:
                lab = min(small, key=lambda l: row["faces"][l]["area"])
                v = row["faces"][lab]
                T = teardrop_extinction(state.t, v["area"], v["rate"])
                state.log("obstructed-terminal", witness=lab, area=v["area"], T_estimate=T)
                traj.info["T_estimate"] = T
                status = "obstructed-terminal"
                break
        if report is not None:
            gone = [lab for lab in witnesses_prev if lab not in row["faces"]]
            if gone:
                state.log("obstructed-terminal", witness=gone[0], area=0.0, T_estimate=state.t)
                traj.info["T_estimate"] = state.t
                status = "obstructed-terminal"
                break
            witnesses_prev = list(row.get("witnesses", []))
        handled = False
        for c in range(curve.n_components):
            if curve.diameter(c) < eps:
                if curve.graded and policy.surgeries:
                    areas = {lab: (v["area"], v["rate"]) for lab, v in row["faces"].items()}
                    try:
                        state = surgery_collapse(state, c, policy)
                    except SurgeryError as err:
                        state.log("singular-terminal", component=c, reason=str(err))
                        status = "singular-terminal"
                        break
                    traj.info.setdefault("collapse_faces", []).append(
                        {"t": state.t, "faces": {k: list(v) for k, v in areas.items()}})
                    handled = True
                    break
                state.log("singular-terminal", component=c, diameter=curve.diameter(c))
                A = row["faces"]
                traj.info["T_estimate"] = max(
                    [teardrop_extinction(state.t, v["area"], v["rate"]) for v in A.values()] or [state.t])
                status = "singular-terminal"
                break
        if status != "running":
            break
        if handled:
            row, report = record(state, force=True)
            continue
        if state.t >= horizon - 1e-15:
            status = "horizon"
            break
        if state.step >= policy.max_steps:
            status = "max-steps"
            break
        dt = min(stable_dt(curve, policy), horizon - state.t)
        dt, land = wall_limited_dt(state, dt)
        n_ev = len(state.events)
        state = transport_cochain(state, dt, land)
        state = csf_step(state, dt, policy)
        walls = [e for e in state.events[n_ev:] if e.kind == "wall"]
        force = bool(walls)
        if walls and policy.surgeries and state.curve.graded:
            for e in walls:
                try:
                    state = surgery_open_neck(state, e.data["key"], policy)
                    traj.info.setdefault("surgery_steps", []).append(state.step)
                except SurgeryError as err:
                    state.log("surgery-failed", key=e.data["key"], reason=str(err))
        if force or state.step % policy.record_every == 0 or any(
            e.kind in ("crossing-lost", "crossing-born") for e in state.events[n_ev:]
        ):
            row, report = record(state, force=force)
    traj.status = status
    traj.final = state
    traj.events = list(state.events)
    if traj.samples[-1]["t"] != state.t or traj.samples[-1]["n_components"] != state.curve.n_components:
        record(state, force=True)
    elif policy.snapshot_every is not None and (not traj.snapshots or traj.snapshots[-1]["t"] != state.t):
        traj.snapshots.append(_snapshot(state, row))
    return traj
