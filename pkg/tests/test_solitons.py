import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from lmcflab.solitons import (
    AdmissibilityError,
    SolitonParams,
    angle_integrals,
    asymptotic_decay,
    expander_angles,
    family_invert,
    frame_phase,
    hl_membership,
    laplace_beltrami,
    lawlor_angles,
    neck_area,
    numeric_mean_curvature,
    profile,
    soliton_phase,
    soliton_point,
    soliton_residual,
    soliton_sample,
    translator_angles,
    u1_point,
    u1_solve,
    polygon_mask,
)
from lmcflab.solitons.profiles import inv_sqrt_P

PI = math.pi

# 30-digit mpmath quadrature, computed once offline
MP_LAWLOR_123 = [0.64811610307097707, 1.0726858967468448, 1.4207906537719714]
MP_EXPANDER_123 = [0.48986161111193616, 0.8501417590579506, 1.1532853205033809]
MP_TRANSLATOR_12 = [0.76034475180735075, 1.2843495768589249]
MP_AREA_123 = 0.64811610307097707


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def scipy_angles(a, alpha):
    a = np.asarray(a, float)
    out = []
    for ak in a:
        f = lambda x: ak / (1 + ak * x * x) * inv_sqrt_P(x, a, alpha)
        out.append(2 * quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0])
    return np.array(out)


# -- angles ------------------------------------------------------------------

@pytest.mark.parametrize("m", [3, 4])
def test_symmetric_lawlor(m):
    ad = lawlor_angles((1.0,) * m)
    assert np.allclose(ad.phi, PI / m, atol=1e-12)


def test_lawlor_123_against_references():
    ad = lawlor_angles((1, 2, 3))
    assert np.allclose(ad.phi, MP_LAWLOR_123, atol=1e-13)
    assert abs(ad.phi.sum() - PI) < 1e-12
    assert ad.A == pytest.approx(MP_AREA_123, abs=1e-13)
    # second route: scipy's QUADPACK on the untransformed integral
    assert np.allclose(scipy_angles((1, 2, 3), 0.0), ad.phi, atol=1e-11)


def test_expander_references():
    ad = expander_angles(1.0, (1, 2, 3))
    assert np.allclose(ad.phi, MP_EXPANDER_123, atol=1e-13)
    assert 0 < ad.phi.sum() < PI
    assert np.allclose(scipy_angles((1, 2, 3), 1.0), ad.phi, atol=1e-11)
    assert expander_angles(1.0, (1, 1, 1)).phi.sum() < PI


def test_translator_references():
    ad = translator_angles(1.0, (1, 2))
    assert np.allclose(ad.phi, MP_TRANSLATOR_12, atol=1e-13)
    assert ad.phi.sum() < PI


def test_alpha_zero_agrees_with_lawlor():
    a = (0.7, 1.9, 4.2)
    assert np.allclose(expander_angles(0.0, a).phi, lawlor_angles(a).phi, atol=1e-13)


def test_scaling_law():
    a = np.array([0.4, 1.3, 2.2, 5.0])
    base = lawlor_angles(a)
    scaled = lawlor_angles(3.0 * a)
    assert np.allclose(scaled.phi, base.phi, atol=1e-12)
    assert scaled.A == pytest.approx(base.A / 3.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.05, 20.0), min_size=3, max_size=5))
def test_lawlor_sum_is_pi(a):
    ad = lawlor_angles(a)
    assert abs(ad.phi.sum() - PI) < 1e-8
    assert np.all((ad.phi > 0) & (ad.phi < PI))


# -- profiles ------------------------------------------------------------------

def test_profile_limits_and_symmetry():
    pr = profile((1, 2, 3), 0.5)
    assert np.allclose(pr.psi(-1e8), 0, atol=1e-12)
    assert np.allclose(pr.psi(1e8), pr.phi, atol=1e-12)
    y = np.linspace(-4, 4, 17)
    assert np.allclose(pr.psi(-y), pr.phi[:, None] - pr.psi(y), atol=1e-14)
    assert np.allclose(pr.phi, angle_integrals((1, 2, 3), 0.5)[0], atol=1e-14)


def test_profile_against_direct_quadrature():
    a = np.array([1.0, 2.0, 3.0])
    pr = profile(a, 1.0)
    for y in (-2.5, -0.3, 0.0, 0.8, 3.0):
        f = lambda x: a[1] / (1 + a[1] * x * x) * inv_sqrt_P(x, a, 1.0)
        ref = quad(f, -np.inf, y, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        assert pr.psi(y)[1] == pytest.approx(ref, abs=1e-13)


# -- inversion ---------------------------------------------------------------

def test_invert_round_trip_lawlor():
    a = np.array([1.0, 2.0, 3.0])
    ad = lawlor_angles(a)
    assert np.allclose(family_invert("lawlor", 0.0, ad.phi, ad.A), a, atol=1e-6)


def test_invert_symmetric_target():
    a = family_invert("lawlor", 0.0, [PI / 3] * 3, 0.5)
    assert np.allclose(a, a[0], rtol=1e-9)
    assert neck_area(a) == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_invert_round_trip_expander(alpha):
    a = np.array([0.3, 1.5, 6.0])
    phi = expander_angles(alpha, a).phi
    back = family_invert("expander", alpha, phi)
    assert np.allclose(expander_angles(alpha, back).phi, phi, atol=1e-10)
    assert np.allclose(back, a, rtol=1e-6)


def test_invert_round_trip_translator():
    a = np.array([0.8, 2.5])
    phi = translator_angles(1.5, a).phi
    assert np.allclose(family_invert("translator", 1.5, phi), a, rtol=1e-6)


def test_invert_rejects_inadmissible():
    with pytest.raises(AdmissibilityError):
        family_invert("expander", 1.0, [1.2, 1.0, 1.0])
    with pytest.raises(AdmissibilityError):
        family_invert("lawlor", 0.0, [1.0, 1.0, 1.0], 1.0)
    with pytest.raises(AdmissibilityError):
        family_invert("lawlor", 0.0, [PI / 3] * 3, None)


# -- samples and phases ---------------------------------------------------------

def test_grim_reaper_origin():
    g = SolitonParams("grim_reaper", 1)
    s = soliton_sample(g, 0.0)
    assert s.point[0] == 0
    assert s.theta == pytest.approx(PI / 2)


def test_lawlor_ends_approach_planes():
    p = SolitonParams("lawlor", 3, (1, 2, 3))
    phi = lawlor_angles(p.a).phi
    x = unit([0.2, 0.5, 0.8])
    lo = soliton_point(p, -1e4, x)
    hi = soliton_point(p, 1e4, x)
    assert np.allclose(np.angle(lo), 0, atol=1e-8)
    assert np.allclose(np.angle(hi), phi, atol=1e-8)


def test_translator_last_coordinate():
    p = SolitonParams("translator", 3, (1, 2), alpha=1.0)
    pr = p.profile
    for y in (-1.0, 0.5, 2.0):
        z = soliton_point(p, y, np.zeros(2))
        expect = 0.5 * y * y - 1j * (pr.psi(y).sum() + np.angle(y + 1j * pr.inv_sqrt_P(y)))
        assert z[-1] == pytest.approx(complex(expect), abs=1e-14)
        assert np.allclose(z[:2], 0)


def test_lawlor_phase_is_constant():
    p = SolitonParams("lawlor", 3, (1, 1, 1))
    th = [soliton_phase(p, y) for y in np.linspace(-30, 30, 200)]
    assert np.ptp(th) < 1e-6


@pytest.mark.parametrize("params,x", [
    (SolitonParams("expander", 3, (1, 2, 3), 1.0), unit([0.3, -0.5, 0.8])),
    (SolitonParams("translator", 3, (1, 2), 1.0), np.array([0.4, -0.7])),
    (SolitonParams("lawlor", 4, (1, 2, 3, 0.5)), unit([1, 2, -1, 0.5])),
])
def test_phase_matches_tangent_frame(params, x):
    for y in (-2.0, -0.4, 0.0, 0.6, 3.0):
        th = soliton_phase(params, y, x)
        fp = frame_phase(params, y, x)
        assert abs(math.remainder(th - fp, 2 * PI)) < 1e-6


def test_translator_phase_monotone_with_limits():
    p = SolitonParams("translator", 3, (1, 2), 1.0)
    ys = np.linspace(-50, 50, 401)
    th = np.array([soliton_phase(p, y) for y in ys])
    assert np.all(np.diff(th) < 1e-14)  # flat to rounding far out
    core = np.abs(ys) < 5
    assert np.all(np.diff(th[core]) < 0)
    assert abs(th[0] - PI) < 1e-4
    assert abs(th[-1] - translator_angles(1.0, (1, 2)).phi.sum()) < 1e-4


# -- mean curvature ----------------------------------------------------------------

def test_lawlor_is_minimal():
    p = SolitonParams("lawlor", 3, (1, 2, 3))
    assert soliton_residual(p) < 1e-5
    H = laplace_beltrami(p, 0.3, unit([1, 1, 1]), h=1e-3)
    assert np.linalg.norm(H) < 1e-5


def test_grim_reaper_curvature():
    g = SolitonParams("grim_reaper", 1)
    H = numeric_mean_curvature(g, 0.0)
    assert H[0] == pytest.approx(1.0, abs=1e-8)
    # exact: H = cos^2 y - i sin y cos y
    y = 0.7
    assert numeric_mean_curvature(g, y)[0] == pytest.approx(
        math.cos(y) ** 2 - 1j * math.sin(y) * math.cos(y), abs=1e-8)


@pytest.mark.parametrize("params,x", [
    (SolitonParams("expander", 3, (1, 2, 3), 1.0), unit([0.3, -0.5, 0.8])),
    (SolitonParams("translator", 3, (1, 2), 1.0), np.array([0.4, -0.7])),
])
def test_phase_route_agrees_with_laplace_beltrami(params, x):
    # two independent routes to H: J grad(theta) and Delta_g F
    for y in (-1.0, 0.2, 1.5):
        H4 = numeric_mean_curvature(params, y, x, h=1e-3, order=4)
        H2 = numeric_mean_curvature(params, y, x, h=1e-3, order=2)
        lb = laplace_beltrami(params, y, x, h=1e-3)
        assert np.linalg.norm(H4 - lb) < 1e-5
        assert np.linalg.norm(H4 - H2) < 1e-5


@pytest.mark.parametrize("params", [
    SolitonParams("expander", 3, (1, 2, 3), 1.0),
    SolitonParams("translator", 3, (1, 2), 1.0),
])
def test_residual_refinement_order(params):
    r = [soliton_residual(params, h=h) for h in (4e-2, 2e-2, 1e-2)]
    orders = np.log2(np.array(r[:-1]) / np.array(r[1:]))
    assert np.all(orders >= 1.5), (r, orders)


def test_grim_reaper_residual_is_rounding_level():
    # theta is linear in the parameter, so the difference quotients are exact
    assert soliton_residual(SolitonParams("grim_reaper", 1), h=1e-3) < 1e-10


# -- asymptotics ------------------------------------------------------------------

def test_decay_rates():
    radii = np.geomspace(5, 50, 8)
    rho3 = asymptotic_decay(SolitonParams("lawlor", 3, (1, 2, 3)), radii)[0]
    rho4 = asymptotic_decay(SolitonParams("lawlor", 4, (1, 2, 3, 4)), radii)[0]
    assert abs(rho3 + 1) < 0.2
    assert abs(rho4 + 2) < 0.3
    assert asymptotic_decay(SolitonParams("expander", 3, (1, 2, 3), 1.0), radii)[0] < 2
    with pytest.raises(ValueError):
        asymptotic_decay(SolitonParams("lawlor", 3, (1, 2, 3)), [5, 4])


# -- Harvey-Lawson -------------------------------------------------------------------

def test_hl_membership_examples():
    assert hl_membership("hl_cone", (1, 1, 1))[0]
    b = np.exp(1j * np.array([0.4, -1.1, 0.7]))
    assert hl_membership("hl_L1", np.array([math.sqrt(2), 1, 1]) * b, A=1.0)[0]
    ok, defect = hl_membership("hl_cone", (1, 1, np.exp(1j * PI / 4)))
    assert not ok and defect == pytest.approx(math.sin(PI / 4))
    # cyclic variants
    assert hl_membership("hl_L1", np.array([1, math.sqrt(2), 1]) * b, A=1.0, variant=2)[0]
    assert not hl_membership("hl_L1", np.array([1, math.sqrt(2), 1]) * b, A=1.0)[0]


def test_hl_L1_is_special_lagrangian():
    p = SolitonParams("hl_L1", 3, A=0.7)
    for s, b1, b2 in [(0.5, 0.3, -1.0), (1.3, 2.0, 0.4), (0.9, -0.2, -2.2)]:
        z = soliton_point(p, s, (b1, b2))
        assert hl_membership("hl_L1", z, A=0.7)[0]
    phases = [frame_phase(p, s, (b1, b2)) for s, b1, b2 in [(0.5, 0.3, -1.0), (1.3, 2.0, 0.4), (0.9, -0.2, -2.2)]]
    assert np.ptp(np.mod(np.array(phases) - phases[0] + PI, 2 * PI)) < 1e-6


# -- U(1) potential ------------------------------------------------------------------

def test_u1_linear_and_zero_data():
    x = y = np.linspace(-1, 1, 33)
    s = u1_solve(x, y, lambda X, Y: 2 * X - 3 * Y, 0.5)
    assert np.max(np.abs(s.f - (2 * x[:, None] - 3 * y[None, :]))) < 1e-8
    assert s.residual < 1e-8
    z = u1_solve(x, y, lambda X, Y: 0 * X, 1.0)
    assert np.all(z.f == 0)
    with pytest.raises(ValueError):
        u1_solve(x, y, lambda X, Y: X, 0.0)


def test_u1_nonlinear_residual_and_refinement():
    data = lambda X, Y: np.sin(2 * X) * np.cosh(Y) + X * Y**2
    vals = []
    for n in (17, 33, 65):
        x = y = np.linspace(-1, 1, n)
        s = u1_solve(x, y, data, 1.0)
        assert s.residual < 1e-6
        vals.append(s.f[n // 4, n // 4])
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 < d1 / 3


def test_u1_polygon_domain():
    x = y = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(x, y, indexing="ij")
    mask = polygon_mask(X, Y, [(-0.9, -0.8), (0.9, -0.9), (0.8, 0.9), (-0.9, 0.7)])
    s = u1_solve(x, y, lambda X, Y: X * Y + 0.3 * X**2, 1.0, mask=mask)
    assert s.residual < 1e-8
    assert s.interior.sum() < mask.sum()


def test_u1_linear_potential_surface_is_special_lagrangian():
    # f = c x + d y: v = c, u = d, surface phase should be constant
    a, c, d = 0.6, 0.4, -0.3
    def F(q):
        xx, yy, beta = q
        return u1_point(xx, yy, d, c, a, beta)[0] if np.ndim(u1_point(xx, yy, d, c, a, beta)) > 1 else u1_point(xx, yy, d, c, a, beta)
    phases = []
    for q0 in ([0.1, 0.2, 0.0], [-0.5, 0.7, 1.0], [0.3, -0.4, 2.5]):
        q0 = np.array(q0)
        h = 1e-5
        T = np.column_stack([(F(q0 + h * e) - F(q0 - h * e)) / (2 * h) for e in np.eye(3)])
        assert np.max(np.abs((T.conj().T @ T).imag)) < 1e-8  # Lagrangian
        phases.append(np.angle(np.linalg.det(T)))
    assert np.ptp(np.mod(np.array(phases) - phases[0] + PI, 2 * PI)) < 1e-8
