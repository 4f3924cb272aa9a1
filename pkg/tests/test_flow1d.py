import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from lmcflab.flow1d import (
    PLANE,
    DegenerateCrossingError,
    FlowPolicy,
    InsufficientWindowError,
    MaslovError,
    NotExactError,
    ResolutionError,
    StepSizeError,
    SingularityError,
    SurgeryError,
    Trajectory,
    area_rates,
    build_curve,
    circle_loop,
    csf_step,
    emit_frames,
    events_json,
    faces,
    init_state,
    obstruction_status,
    preset,
    run_with_surgeries,
    self_intersections,
    singularity_probe,
    stable_dt,
    surgery_collapse,
    surgery_open_neck,
    torus,
    torus_line_loop,
    trajectory_csv,
    transport_cochain,
    wall_limited_dt,
)
from lmcflab.novikov import monomial

PI = math.pi


def _curve(name, **kw):
    amb, loops, opt = preset(name, **kw)
    return build_curve(amb, loops, **opt)


def _state(name, **kw):
    return init_state(_curve(name, **kw))


# ---------------------------------------------------------------- oracles

def shoelace_oracle(p):
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def winding_oracle(p, q):
    """Winding number of the closed polygon ``p`` around ``q`` by summed angles."""
    d = p - q
    a = np.arctan2(d[:, 1], d[:, 0])
    da = np.diff(np.concatenate([a, a[:1]]))
    da = (da + PI) % (2 * PI) - PI
    return int(round(da.sum() / (2 * PI)))


def lemniscate(coeffs, n=160, scale=1.0):
    t = np.linspace(0, 2 * PI, n, endpoint=False)
    x, y = np.cos(t), np.sin(2 * t) / 2
    for k, (a, b, c, d) in enumerate(coeffs, start=1):
        x = x + a * np.cos(k * t) + b * np.sin(k * t)
        y = y + c * np.cos(k * t) + d * np.sin(k * t)
    return scale * np.column_stack([x, y])


coeff_lists = st.lists(
    st.tuples(*[st.floats(-0.03, 0.03, allow_nan=False)] * 4), min_size=1, max_size=4
)


def graded_from(coeffs):
    try:
        return build_curve(PLANE, [lemniscate(coeffs)], graded=True, exact=False)
    except (ResolutionError, MaslovError, DegenerateCrossingError):
        assume(False)


# ---------------------------------------------------------------- build_curve

def test_circle_maslov_one():
    c = _curve("circle")
    assert c.maslov == [1]
    with pytest.raises(MaslovError):
        build_curve(PLANE, [circle_loop(1.0, (0, 0), 128)], graded=True, exact=False)


def test_circle_maslov_oracle():
    # direct tangent winding
    p = circle_loop(1.0, (0, 0), 128)
    e = np.diff(np.vstack([p, p[:1]]), axis=0)
    a = np.arctan2(e[:, 1], e[:, 0])
    turn = (np.diff(np.concatenate([a, a[:1]])) + PI) % (2 * PI) - PI
    assert round(turn.sum() / (2 * PI)) == _curve("circle").maslov[0]


def test_infinity_graded():
    c = _curve("infinity")
    assert c.maslov == [0] and c.graded


def test_two_circles_opposite():
    assert _curve("two_circles").maslov == [1, -1]


def test_too_few_vertices():
    with pytest.raises(ValueError):
        build_curve(PLANE, [circle_loop(1.0, (0, 0), 16)], graded=False, exact=False)


def test_resolution_constraint():
    p = circle_loop(1.0, (0, 0), 32)
    p = np.vstack([p[:16], p[16:][::-1]])  # fold back on itself
    with pytest.raises(ResolutionError):
        build_curve(PLANE, [p], graded=False, exact=False)


def test_unequal_infinity_not_exact():
    amb, loops, _ = preset("infinity", a1=0.5, a2=0.2)
    with pytest.raises(NotExactError):
        build_curve(amb, loops, graded=True, exact=True)


def test_potential_differential():
    c = _curve("infinity", a1=0.3, a2=0.3)
    v, f = c.components[0], c.potential[0]
    nxt = np.roll(v, -1, axis=0)
    lam = 0.5 * (v[:, 0] * nxt[:, 1] - v[:, 1] * nxt[:, 0])
    assert np.allclose(np.diff(f), lam[:-1], atol=1e-14)
    assert abs(c.closure_defect[0]) < 1e-12


def test_curve_json_roundtrip_fields():
    doc = _curve("torus_line").to_json()
    assert doc["ambient"]["kind"] == "torus"
    assert doc["periods"] == [[1, 0]]


# ---------------------------------------------------------------- crossings

def test_embedded_circle_no_crossings():
    assert self_intersections(_curve("circle")) == []


def test_infinity_one_crossing():
    xs = self_intersections(_curve("infinity"))
    assert len(xs) == 1
    k, j = xs[0].degrees
    assert k + j == 1


def test_wall_chain_crossings():
    xs = self_intersections(_curve("wall_chain"))
    degs = sorted(x.degrees for x in xs)
    # a graded closed curve has an odd crossing count; one degree-1 crossing
    assert degs == [(1, 0), (2, -1), (2, -1)]


def stadium(n=20, half=0.05):
    top = np.column_stack([np.linspace(1, -1, n, endpoint=False), np.full(n, half)])
    th = np.linspace(PI / 2, 3 * PI / 2, 12, endpoint=False)
    cap = np.column_stack([-1 + half * np.cos(th), half * np.sin(th)])
    return np.vstack([top, cap, -top, -cap])


def test_near_tangency_rejected():
    # straight sides crossing at 3e-4 rad, below the angle tolerance
    e = 3e-4
    rot = np.array([[math.cos(e), -math.sin(e)], [math.sin(e), math.cos(e)]])
    a = stadium()
    b = a @ rot.T
    c = build_curve(PLANE, [a, b], graded=False, exact=False, check_crossings=False)
    with pytest.raises(DegenerateCrossingError):
        self_intersections(c)


def test_torus_cross_single_crossing():
    xs = self_intersections(_curve("torus_cross"))
    assert len(xs) == 1 and xs[0].degrees == (1, 0)


# ---------------------------------------------------------------- faces

def test_infinity_teardrops():
    fl = faces(_curve("infinity", a1=0.5, a2=0.2))
    assert sorted(f.kind for f in fl) == ["teardrop", "teardrop"]
    areas = sorted(f.area for f in fl)
    assert areas == pytest.approx([0.2, 0.5], rel=1e-3)


def test_circle_face():
    fl = faces(_curve("circle"))
    assert len(fl) == 1
    assert fl[0].area == pytest.approx(PI, rel=1e-3)


@pytest.mark.parametrize("name,kw", [("infinity", {"a1": 0.5, "a2": 0.2}), ("wall_chain", {}),
                                     ("two_circles", {})])
def test_face_areas_against_shoelace(name, kw):
    c = _curve(name, **kw)
    fl = faces(c)
    total = sum(shoelace_oracle(v) for v in c.components)
    # each face weighted by the winding number around an interior point
    weighted = 0.0
    for f in fl:
        q = _interior_point(f)
        w = sum(winding_oracle(v, q) for v in c.components)
        assert w == f.winding
        weighted += w * f.area
    assert weighted == pytest.approx(total, rel=1e-9)


def _interior_point(f):
    # a point just inside the boundary, to the left of its longest edge
    b = f.boundary
    e = np.roll(b, -1, axis=0) - b
    k = int(np.argmax(np.hypot(*e.T)))
    mid = b[k] + 0.5 * e[k]
    n = np.array([-e[k, 1], e[k, 0]]) / np.hypot(*e[k])
    return mid + 1e-4 * n


# ---------------------------------------------------------------- area rates

def test_circle_rate():
    c = _curve("circle")
    assert area_rates(c, faces(c)) == pytest.approx([-2 * PI])


def test_teardrop_rate_is_crossing_rate():
    c = _curve("infinity", a1=0.5, a2=0.2)
    x = self_intersections(c)[0]
    for r in area_rates(c, faces(c)):
        assert r == pytest.approx(x.rate, abs=1e-12)


def test_teardrop_rate_arithmetic():
    x = self_intersections(_curve("infinity"))[0]
    y = dataclasses.replace(x, theta_plus=1.3, theta_minus=1.0)
    assert y.rate == pytest.approx(-0.3)


def test_bigon_rate_pattern():
    c = _curve("wall_chain")
    xs = {x.key: x for x in self_intersections(c)}
    fl = faces(c, list(xs.values()))
    for f, r in zip(fl, area_rates(c, fl)):
        if f.kind != "bigon":
            continue
        p = [xs[k] for k in f.corners if xs[k].mu_pm == 1][0]
        q = [xs[k] for k in f.corners if xs[k].mu_pm == 2][0]
        assert r == pytest.approx(q.rate - p.rate, abs=1e-9)


# ---------------------------------------------------------------- csf_step

def test_circle_radius(circle_run):
    traj, _ = circle_run
    checked = 0
    for s in traj.snapshots:
        if s["t"] > 0.45 or not s["components"]:
            continue
        r = float(np.mean(np.hypot(*s["components"][0].T)))
        assert r == pytest.approx(math.sqrt(1 - 2 * s["t"]), rel=1e-2)
        checked += 1
    assert checked >= 8


def test_circle_area_law(circle_run):
    traj, _ = circle_run
    t, A = traj.face_series("F0")
    assert np.allclose(A, A[0] - 2 * PI * t, atol=1e-9)


def test_torus_geodesic_fixed():
    amb = torus(1j)
    c = build_curve(amb, [torus_line_loop((1, 0), 1j, 0.0, 64)], graded=True, exact=False,
                    periods=[(1, 0)])
    s0 = init_state(c)
    s1 = csf_step(s0, stable_dt(c, FlowPolicy()))
    assert np.allclose(s1.curve.components[0], c.components[0], atol=1e-14)


def test_step_size_violation():
    s = _state("circle")
    with pytest.raises(StepSizeError):
        csf_step(s, 10 * stable_dt(s.curve, FlowPolicy()))


def test_curvature_overflow():
    s = _state("circle", r=0.01)
    with pytest.raises(SingularityError):
        csf_step(s, 1e-9, FlowPolicy(kappa_limit=10.0))


def test_infinity_area_difference(infinity_unequal_run):
    traj, _ = infinity_unequal_run
    t0, A0 = traj.face_series("F0")
    t1, A1 = traj.face_series("F1")
    d = A0 - A1
    assert np.max(np.abs(d - d[0])) < 1e-2 * abs(d[0])


def test_measured_rates_match_predictions(infinity_unequal_run):
    # windows of 20 samples (200 steps); a single sample interval can
    # straddle a remesh, where the discrete corner angle jumps
    traj, _ = infinity_unequal_run
    for lab in ("F0", "F1"):
        t, A = traj.face_series(lab)
        _, R = traj.face_series(lab, "rate")
        keep = t < 0.9 * t[-1]
        t, A, R = t[keep], A[keep], R[keep]
        integral = np.concatenate([[0.0], np.cumsum(0.5 * (R[1:] + R[:-1]) * np.diff(t))])
        w = 20
        measured = A[w:] - A[:-w]
        predicted = integral[w:] - integral[:-w]
        assert np.allclose(measured, predicted, rtol=2e-2, atol=0)


# ---------------------------------------------------------------- cochains

def _synthetic(rate, lam0):
    s = _state("infinity")
    x = s.crossings[0]
    y = dataclasses.replace(x, theta_plus=0.0, theta_minus=rate, cochain=monomial(lam0))
    s.crossings = [y]
    return s


def test_transport_reaches_wall_at_two():
    s = _synthetic(-0.1, Fraction(1, 5))
    t = 0.0
    while True:
        dt, land = wall_limited_dt(s, 0.1)
        s = transport_cochain(s, dt, land)
        t += dt
        if any(e.kind == "wall" for e in s.events):
            break
        s.t = t
    assert t == pytest.approx(2.0, abs=1e-12)
    assert s.crossings[0].cochain.valuation() == 0


def test_transport_rate_zero():
    s = _synthetic(0.0, Fraction(1, 5))
    out = transport_cochain(s, 0.37)
    assert out.crossings[0].cochain == s.crossings[0].cochain


def test_initial_cochain_from_gap():
    s = _state("wall_chain")
    p = [x for x in s.crossings if x.mu_pm == 1][0]
    assert float(p.cochain.valuation()) == pytest.approx(p.potential_gap, abs=1e-9)
    assert all(x.cochain is None for x in s.crossings if x.mu_pm != 1)


# ---------------------------------------------------------------- obstruction

def test_unequal_obstructed():
    c = _curve("infinity", a1=0.5, a2=0.2)
    rep = obstruction_status(c)
    assert rep.status == "obstructed"
    assert [round(w.area, 3) for w in rep.witnesses] == [0.2]


def test_equal_unobstructed():
    c = _curve("infinity", a1=0.3, a2=0.3)
    rep = obstruction_status(c)
    assert rep.status == "unobstructed"
    assert rep.holonomy_constraint in (1, -1)


def test_holonomy_sign_is_configuration():
    c = _curve("infinity", a1=0.3, a2=0.3)
    assert obstruction_status(c, holonomy_sign=-1).holonomy_constraint == -1


def test_no_teardrops_unobstructed():
    c = _curve("torus_line")
    rep = obstruction_status(c, face_list=[], crossings=[])
    assert rep.status == "unobstructed" and rep.holonomy_constraint is None


def test_wall_chain_cancelled_by_cochain():
    s = _state("wall_chain")
    rep = obstruction_status(s.curve, crossings=s.crossings)
    assert rep.status == "unobstructed" and len(rep.cancelled) == 2
    # without the cochain at the degree-1 crossing the teardrops are witnesses
    assert obstruction_status(s.curve).status == "obstructed"


# ---------------------------------------------------------------- surgeries

def _on_wall(s, key=None):
    x = s.crossings[0] if key is None else s.crossing(key)
    x.cochain = monomial(0)
    return x.key


def test_open_neck_x_crossing():
    s = _state("torus_cross", n=128)
    out = surgery_open_neck(s, _on_wall(s))
    assert out.curve.n_components == 1 and out.crossings == []
    assert out.curve.periods == [(1, 1)] and out.curve.maslov == [0]
    assert out.events[-1].kind == "open-neck"


def test_open_neck_count_bookkeeping():
    s = _state("torus_cross", classes=((1, 0), (1, 2)), n=128)
    assert s.curve.n_components == 2 and len(s.crossings) == 2
    out = surgery_open_neck(s, _on_wall(s))
    # two components become one and one crossing is used up
    assert out.curve.n_components == 1 and len(out.crossings) == 1
    assert out.curve.periods == [(2, 2)]


def test_flow_continues_after_open_neck():
    s = _state("torus_cross", n=128)
    out = surgery_open_neck(s, _on_wall(s))
    pol = FlowPolicy()
    for _ in range(100):
        out = csf_step(out, stable_dt(out.curve, pol), pol)
    assert out.crossings == []


def test_open_neck_preconditions():
    s = _state("wall_chain")
    q = [x for x in s.crossings if x.mu_pm == 2][0]
    with pytest.raises(SurgeryError, match="degree"):
        surgery_open_neck(s, q.key)
    p = [x for x in s.crossings if x.mu_pm == 1][0]
    with pytest.raises(SurgeryError, match="wall"):
        surgery_open_neck(s, p.key)


def test_merged_holonomy():
    s = _state("torus_cross", n=128)
    s.curve.holonomies[:] = [Fraction(2), Fraction(3)]
    out = surgery_open_neck(s, _on_wall(s))
    assert out.curve.holonomies == [Fraction(6)]


def test_collapse_large_component():
    s = _state("infinity", a1=0.3, a2=0.3)
    with pytest.raises(SurgeryError, match="diameter"):
        surgery_collapse(s, 0)


def test_collapse_non_graded():
    s = _state("circle", r=0.01)
    with pytest.raises(SurgeryError, match="graded"):
        surgery_collapse(s, 0, FlowPolicy(h_target=1.0))


def test_equal_infinity_collapses(infinity_equal_run):
    traj, _ = infinity_equal_run
    assert traj.status == "empty"
    assert [e.kind for e in traj.events] == ["collapse"]
    assert all(s.get("obstruction") == "unobstructed" for s in traj.samples if s["n_components"])


# ---------------------------------------------------------------- probe

def test_circle_type_one(circle_run):
    traj, _ = circle_run
    res = singularity_probe(traj.series("t"), traj.series("kappa_max"))
    assert res.kind == "I"
    assert np.median(res.q) == pytest.approx(0.5, rel=0.05)


def test_infinity_type_two(infinity_unequal_run):
    traj, _ = infinity_unequal_run
    res = singularity_probe(traj.series("t"), traj.series("kappa_max"))
    assert res.kind == "II"
    assert res.slope < 0


def test_probe_no_blowup():
    t = np.linspace(0, 1, 20)
    assert singularity_probe(t, np.ones_like(t)).kind == "none"


def test_probe_window_too_short():
    with pytest.raises(InsufficientWindowError):
        singularity_probe([0.0, 0.1], [1.0, 2.0])


# ---------------------------------------------------------------- runs

def test_torus_geodesic_convergence(torus_line_run):
    traj, _ = torus_line_run
    osc = traj.series("theta_max") - traj.series("theta_min")
    assert osc[0] > 0.1 and osc[-1] < 1e-3


def test_unequal_terminal_time(infinity_unequal_run):
    traj, _ = infinity_unequal_run
    assert traj.status == "obstructed-terminal"
    lab = traj.events_of("obstructed-terminal")[0].data["witness"]
    t, R = traj.face_series(lab, "rate")
    _, A = traj.face_series(lab)
    # integrate the predicted rate from the initial area to extinction
    cum = A[0] + np.concatenate([[0.0], np.cumsum(0.5 * (R[1:] + R[:-1]) * np.diff(t))])
    T_pred = t[-1] + cum[-1] / -R[-1]
    assert traj.info["T_estimate"] == pytest.approx(T_pred, rel=5e-2)


def test_wall_chain_programme(wall_chain_run):
    traj, _ = wall_chain_run
    kinds = [e.kind for e in traj.events]
    assert kinds == ["wall", "open-neck", "collapse", "collapse"]
    assert traj.status == "empty"
    wall = traj.events_of("wall")[0]
    assert wall.data["valuation"] == "0"


def test_wall_chain_valuation_tracks_areas(wall_chain_run):
    traj, extra = wall_chain_run
    rows = [w for w in extra["watch"] if w is not None]
    diffs, vals, gaps = [], [], []
    for w in rows:
        A = w["faces"]
        td = np.mean([f["area"] for f in A.values() if f["kind"] == "teardrop"])
        bg = np.mean([f["area"] for f in A.values() if f["kind"] == "bigon"])
        diffs.append(td - bg)
        vals.append(float(w["valuation"]))
        gaps.append(w["gap"])
    diffs, vals, gaps = map(np.array, (diffs, vals, gaps))
    scale = np.max(np.abs(diffs))
    assert len(rows) > 50
    assert np.max(np.abs(vals - diffs)) < 1e-2 * scale
    # the potential gap is an independent route to the same number
    assert np.max(np.abs(gaps - vals)) < 1e-2 * scale


def test_classification_changes_only_at_walls(wall_chain_run):
    traj, _ = wall_chain_run
    walls = {round(e.t, 12) for e in traj.events_of("wall")}
    prev = None
    for s in traj.samples:
        for key, v in s["valuations"].items():
            if v is None:
                continue
            cls = "pos" if v > 0 else ("zero" if v == 0 else "neg")
            if prev is not None and prev[0] == key and prev[1] != cls:
                assert round(s["t"], 12) in walls
            prev = (key, cls)
    assert not traj.events_of("cochain-class")


def test_post_surgery_faces(wall_chain_run):
    traj, _ = wall_chain_run
    T = traj.events_of("open-neck")[0].t
    s = [s for s in traj.samples if s["t"] == T][-1]
    assert s["n_crossings"] == 2
    left = sorted(f["area"] for f in s["faces"].values() if f["centroid"][0] < 0)
    right = sorted(f["area"] for f in s["faces"].values() if f["centroid"][0] > 0)
    for pair in (left, right):
        assert len(pair) == 2
        assert pair[0] == pytest.approx(pair[1], rel=2e-2)
    assert traj.final.step - traj.info["surgery_steps"][0] >= 100


def test_degrees_constant_in_runs(infinity_unequal_run, wall_chain_run):
    for traj, _ in (infinity_unequal_run, wall_chain_run):
        assert not traj.events_of("degree-change")


# ---------------------------------------------------------------- invariants

@settings(max_examples=30, deadline=None)
@given(coeff_lists)
def test_phase_variation_exceeds_pi(coeffs):
    c = graded_from(coeffs)
    lo, hi = c.theta_range()
    assert hi - lo > PI


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 0.6), st.floats(0.1, 0.6))
def test_phase_variation_presets(a1, a2):
    c = _curve("infinity", a1=a1, a2=a2)
    lo, hi = c.theta_range()
    assert hi - lo > PI


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(coeff_lists)
def test_phase_envelope_euler(coeffs):
    s = init_state(graded_from(coeffs))
    pol = FlowPolicy(remesh=False)
    e = np.concatenate(s.curve.edge_theta)
    lo, hi = e.min(), e.max()
    for _ in range(60):
        s = csf_step(s, stable_dt(s.curve, pol), pol)
        e = np.concatenate(s.curve.edge_theta)
        assert e.min() >= lo - 1e-12 and e.max() <= hi + 1e-12
        lo, hi = e.min(), e.max()


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(coeff_lists)
def test_phase_envelope_with_remeshing(coeffs):
    s = init_state(graded_from(coeffs))
    pol = FlowPolicy()
    lo, hi = s.curve.theta_range()
    for _ in range(60):
        s = csf_step(s, stable_dt(s.curve, pol), pol)
    lo2, hi2 = s.curve.theta_range()
    # remeshing resamples the lift; allow a fraction of the turning bound
    assert lo2 >= lo - 1e-2 * pol.max_turn and hi2 <= hi + 1e-2 * pol.max_turn


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(coeff_lists)
def test_degrees_constant(coeffs):
    s = init_state(graded_from(coeffs))
    before = {x.key: x.degrees for x in s.crossings}
    pol = FlowPolicy()
    for _ in range(40):
        s = csf_step(s, stable_dt(s.curve, pol), pol)
    assert {x.key: x.degrees for x in s.crossings} == before


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.floats(0.15, 0.4))
def test_exactness_preserved(a):
    # closure of df = lambda is kept by the flow, so the gap stays the area
    s = _state("infinity", a1=a, a2=a)
    pol = FlowPolicy()
    for _ in range(50):
        s = csf_step(s, stable_dt(s.curve, pol), pol)
    assert abs(s.curve.closure_defect[0]) < 1e-10
    fl = faces(s.curve, s.crossings)
    x = s.crossings[0]
    assert x.potential_gap == pytest.approx(min(f.area for f in fl), rel=1e-6)


# ---------------------------------------------------------------- records

def _short():
    return run_with_surgeries(_curve("infinity"), FlowPolicy(snapshot_every=1e-3), horizon=3e-3)


def test_records_deterministic():
    a, b = _short(), _short()
    assert trajectory_csv(a) == trajectory_csv(b)
    assert events_json(a) == events_json(b)


def test_csv_header():
    text = trajectory_csv(_short())
    lines = text.splitlines()
    assert lines[0].startswith("# lmcflab flow time series, csv-version 1")
    assert lines[2].split(",")[:3] == ["t", "step", "length"]
    assert "area:F0" in lines[2] and "rate:F1" in lines[2]


def test_frames(tmp_path):
    traj = _short()
    paths = emit_frames(traj, 1e-3, tmp_path)
    assert len(paths) >= 3
    svg = paths[0].read_text()
    assert svg.startswith("<svg") and "crossing" in svg and ">F0<" in svg


def test_frames_empty(tmp_path):
    assert emit_frames(Trajectory(), 0.1, tmp_path) == []


def test_frames_reject_torus(tmp_path):
    traj = run_with_surgeries(_curve("torus_line"), FlowPolicy(snapshot_every=1e-3), horizon=2e-3)
    with pytest.raises(ValueError):
        emit_frames(traj, 1e-3, tmp_path)
