import json
import math

import numpy as np
import pytest

from _frames import random_connection, random_frame
from isoframe import jets as J
from isoframe.ansatz import (Profile, ProfileSet, build_spherical, plane_wave_connection,
                             spherical_connection, spherical_wave_connection)
from isoframe.bundle import (DegenerateFrameError, FrameEvaluation, GaugeError,
                             GaugeRotationField, IsoFrame, IsoTripletForm, bianchi_residual,
                             check_rotation, connection_field, curvature, field_equation_residual,
                             gauge_transform, make_report, pure_gauge_connection, solve_connection,
                             solve_least_squares, structure_residual, yang_mills_residual)
from isoframe.charts import builtin_chart
from isoframe.forms import FormValue

SPH_PTS = np.array([[0.0, 0.4, -1.0], [0.7, 1.5, 4.0], [0.4, 1.2, 2.6], [0.1, 2.0, 5.0]])


def flat_spherical():
    return build_spherical(ProfileSet.from_expressions(
        {"P": "1", "Q": "1", "p": "r", "q": "r"}, "r", (0.1, 10)), 1.0)


def test_flat_frame_connection_and_zero_curvature():
    fr = flat_spherical()
    for x in SPH_PTS.T:
        A = solve_connection(fr, x)
        th = x[2]
        expected = np.zeros((3, 4))
        expected[0, 3] = math.cos(th)
        expected[1, 3] = -math.sin(th)
        expected[2, 2] = 1.0
        np.testing.assert_allclose(A, expected, atol=1e-13)
    ev = FrameEvaluation(fr, SPH_PTS)
    assert np.max(np.abs(ev.orthonormal(ev.curvature))) < 1e-12


def test_flat_frame_is_not_a_field_solution():
    fr = flat_spherical()
    rep = field_equation_residual(fr, SPH_PTS)
    # K = 0, so the residual is m^2 |pi|, here 1 in orthonormal components
    assert rep.max_residual == pytest.approx(1.0, rel=1e-12)


def test_closed_form_connection_matches_solved_profiles():
    # profiles built so that the solved connection is the (Phi, A) family
    Phi = Profile.expression("0.3/r", "r")
    A = Profile.expression("1 + 0.2*sin(r)", "r")
    ps = ProfileSet.from_expressions({
        "P": "-0.3/(r^2)", "Q": "((1+0.2*sin(r))^2 - 1)/(r^2)",
        "p": "(1+0.2*sin(r))*0.3/r", "q": "0.2*cos(r)"}, "r", (0.5, 10))
    fr = build_spherical(ps, 1.0)
    ev = FrameEvaluation(fr, SPH_PTS)
    closed = spherical_connection(Phi, A).value(J.Jet.variables(SPH_PTS, 0))
    for a in range(3):
        np.testing.assert_allclose(ev.A.value[4 * a:4 * a + 4], closed[a].values, atol=1e-12)


def test_field_equation_does_not_force_yang_mills():
    """Profiles generated from Phi = 0.3/r + 0.1 r, A = 1 + 0.2 sin r satisfy K = m^2 pi
    identically, yet D*pi does not vanish."""
    m = 1.3
    sub = {"m2": m * m}
    ps = ProfileSet.from_expressions({
        "P": "(-0.3/(r^2) + 0.1)/m2", "Q": "((1+0.2*sin(r))^2 - 1)/(m2*r^2)",
        "p": "(1+0.2*sin(r))*(0.3/r + 0.1*r)/m2", "q": "0.2*cos(r)/m2"}, "r", (0.5, 10), sub)
    fr = build_spherical(ps, m)
    assert field_equation_residual(fr, SPH_PTS).max_residual < 1e-12
    assert yang_mills_residual(fr, SPH_PTS).max_residual > 1e-2


def test_structure_round_trip_and_two_paths():
    rng = np.random.default_rng(7)
    for _ in range(5):
        fr = random_frame(rng)
        pts = rng.normal(size=(4, 20))
        ev = FrameEvaluation(fr, pts, order=1)
        assert np.all(ev.valid)
        res = ev.orthonormal(ev.structure_residual())
        assert np.max(np.abs(res)) < 1e-11
        lsq = solve_least_squares(tuple(FormValue(2, p.values) for p in ev.pi),
                                  tuple(FormValue(3, d.values) for d in ev.dpi))
        np.testing.assert_allclose(ev.A.value, lsq, atol=1e-9)


def test_solve_connection_raises_on_degenerate_frame():
    ch = builtin_chart("cartesian")

    def rule(X):
        z, o = J.zeros_like(X[0]), J.ones_like(X[0])
        # all three members proportional: rank far below 12
        w = FormValue.from_list(2, [o, z, z, z, z, o])
        return (w, w.scale(2.0), w.scale(3.0))

    fr = IsoFrame(IsoTripletForm(ch, 2, rule))
    with pytest.raises(DegenerateFrameError) as info:
        solve_connection(fr, np.zeros(4))
    assert info.value.condition >= 1e8
    rep = structure_residual(fr, np.zeros((4, 3)))
    assert rep.skipped_points == 3 and math.isnan(rep.max_residual)


def test_connection_field_matches_pointwise_solve():
    rng = np.random.default_rng(3)
    fr = random_frame(rng)
    x = rng.normal(size=4)
    field = connection_field(fr).value(J.Jet.variables(x, 0))
    np.testing.assert_allclose(np.stack([a.values for a in field]), solve_connection(fr, x),
                               atol=1e-13)


def test_mass_must_be_positive():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        random_frame(rng, mass=0.0)


@pytest.mark.parametrize("seed", range(4))
def test_bianchi_random_connection(seed):
    rng = np.random.default_rng(seed)
    alpha = random_connection(rng)
    rep = bianchi_residual(alpha, rng.normal(size=(4, 16)))
    assert rep.skipped_points == 0
    assert rep.max_residual < 1e-12


def test_bianchi_on_solved_random_frame():
    rng = np.random.default_rng(11)
    rep = bianchi_residual(random_frame(rng), rng.normal(size=(4, 8)))
    assert rep.max_residual < 1e-9


def test_bianchi_closed_families():
    A = Profile.expression("1 + 0.4*cos(2*u)", "u")
    Phi = Profile.expression("0.5*sin(u)", "u")
    fam = [(spherical_connection(Phi, A), SPH_PTS),
           (plane_wave_connection(Phi, A, 0.8), SPH_PTS),
           (spherical_wave_connection(A), SPH_PTS + np.array([[1.5], [0], [0], [0]]))]
    for alpha, pts in fam:
        rep = bianchi_residual(alpha, pts)
        assert rep.skipped_points == 0
        assert rep.max_residual < 1e-12


def test_pure_gauge_is_flat_and_matches_rotated_constant_frame():
    ch = builtin_chart("cartesian")
    rng = np.random.default_rng(1)
    C = rng.normal(size=(3, 6))

    def rule(X):
        o = J.ones_like(X[0])
        return tuple(FormValue.from_list(2, [o * C[a, k] for k in range(6)]) for a in range(3))

    R = GaugeRotationField.euler_zyz(lambda X: 0.3 * X[1] + X[0] * X[2],
                                     lambda X: 0.5 + 0.2 * J.sin(X[3]),
                                     lambda X: X[1] * X[2])
    rotated = gauge_transform(IsoFrame(IsoTripletForm(ch, 2, rule)), R)
    pts = rng.normal(size=(4, 6))
    ev = FrameEvaluation(rotated, pts)
    pg = pure_gauge_connection(ch, R).value(J.Jet.variables(pts, 2))
    for a in range(3):
        np.testing.assert_allclose(np.asarray(J.value(pg[a].comps)), ev.A.value[4 * a:4 * a + 4],
                                   atol=1e-12)
    K = curvature(pure_gauge_connection(ch, R)).value(J.Jet.variables(pts, 2))
    assert max(np.max(np.abs(J.value(k.comps))) for k in K) < 1e-12


def test_gauge_covariance_of_residuals():
    rng = np.random.default_rng(5)
    fr = random_frame(rng)
    R = GaugeRotationField.euler_zyz(lambda X: J.sin(X[0]), lambda X: 0.4 + 0.1 * X[1],
                                     lambda X: X[2] * X[3])
    fr2 = gauge_transform(fr, R)
    pts = rng.normal(size=(4, 6))
    e1, e2 = FrameEvaluation(fr, pts), FrameEvaluation(fr2, pts)
    # K - m^2 pi rotates as an iso-vector, so its pointwise norm is invariant
    n1 = np.linalg.norm(e1.orthonormal(e1.field_residual()).reshape(-1, 6), axis=0)
    n2 = np.linalg.norm(e2.orthonormal(e2.field_residual()).reshape(-1, 6), axis=0)
    np.testing.assert_allclose(n1, n2, rtol=1e-9)
    np.testing.assert_allclose(e1.lagrangian(), e2.lagrangian(), rtol=1e-9, atol=1e-9)


def test_rotation_validation():
    with pytest.raises(GaugeError):
        check_rotation(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(GaugeError):
        GaugeRotationField.constant(np.eye(3) * 1.01)


def test_prescribed_connection_blocks_gauge_transform():
    fr = flat_spherical()
    fr.connection = spherical_connection(Profile.constant(0.0), Profile.constant(1.0))
    with pytest.raises(GaugeError):
        gauge_transform(fr, GaugeRotationField.identity())
    assert structure_residual(fr, SPH_PTS).max_residual < 1e-13


def test_report_is_json_serializable():
    rep = structure_residual(flat_spherical(), SPH_PTS, grid={"kind": "test"})
    data = json.loads(rep.to_json())
    assert set(data) >= {"equation", "grid", "max_residual", "worst_point", "skipped_points"}
    assert data["max_residual"] >= 0 and data["grid"] == {"kind": "test"}
    assert set(data["worst_point"]) == {"t", "r", "theta", "phi"}


def test_make_report_nonnegative_and_worst_point():
    ch = builtin_chart("cartesian")
    pts = np.arange(12.0).reshape(4, 3)
    rep = make_report("x", ch, pts, np.array([[0.1, -0.5, 0.2]]), np.ones(3, bool))
    assert rep.max_residual == 0.5
    assert rep.worst_point == {"t": 1.0, "x": 4.0, "y": 7.0, "z": 10.0}
