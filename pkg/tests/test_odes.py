import math

import numpy as np
import pytest

from isoframe.ansatz import build_plane_wave, build_spherical
from isoframe.bundle import FrameEvaluation, field_equation_residual, yang_mills_residual
from isoframe.elliptic import complete_K, sd
from isoframe.odes import (ShootingConfig, ShootingError, calibrate_plane_wave, dispersion_check,
                           integrate, plane_wave_closed_form,
                           plane_wave_state_from_profiles, plane_wave_system,
                           point_charge_system, halved_potential_energy,
                           unit_amplitude_spherical_wave, shoot_point_charge, solve_plane_wave,
                           solve_spherical_wave, spherical_wave_closed_form,
                           spherical_wave_energy, spherical_wave_system, spin_total,
                           table_profiles, taylor_state)


def orbit(u, a=0.2, b=0.9, c=0.4, index=0):
    cols = [np.full_like(u, a), np.full_like(u, b), np.full_like(u, c)]
    cols.insert(index, u)
    return np.stack(cols)


def test_systems_reject_nonpositive_mass():
    for make in (point_charge_system, plane_wave_system, spherical_wave_system):
        with pytest.raises(ValueError):
            make(0.0)


def test_taylor_state_matches_integration():
    sys = point_charge_system()
    y0 = np.array([[1.2], [-0.3], [0.4], [0.5]])
    T, Y = taylor_state(sys, np.array([1.0]), y0[:, 0:1], 6)
    h = 1e-2
    tab = integrate(sys, y0[:, 0], (1.0, 1.0 + h))
    series = sum(Y.coef[k][:, 0] * h ** k for k in range(7))
    np.testing.assert_allclose(series, tab.y[-1], atol=1e-12)


def test_plane_wave_energy_conserved_halved_potential_not():
    tab = solve_plane_wave(g0=0.0, dg0=0.8, h0=0.3, dh0=0.1, T_range=(0, 20))
    assert tab.drift()["H"] < 1e-9
    alt = halved_potential_energy(tab.y.T)
    assert np.max(np.abs(alt - alt[0])) / abs(alt[0]) > 1e-3


def test_plane_wave_h_zero_periodic_and_calibrated():
    tab = solve_plane_wave()
    assert tab.drift()["H"] < 1e-9
    cal = tab.extras["calibration"]
    period = 4 * complete_K(0.5) / cal["b"]
    assert abs(tab.t[-1] - 10 * period) < 1e-12
    np.testing.assert_allclose(tab.y[-1, :2], tab.y[0, :2], atol=1e-8)
    assert np.max(np.abs(plane_wave_closed_form(tab.t, cal) - tab.y[:, 0])) < 1e-6
    np.testing.assert_array_equal(tab.y[:, 2:], 0.0)


def test_plane_wave_cubic_coefficient():
    """The calibrated g = a sd(b T | 1/2) solves g'' = -lam g^3 with lam = 1."""
    cal = calibrate_plane_wave(0.0, 1 / math.sqrt(2))
    T = np.linspace(0.1, 5, 50)
    h = 1e-3
    g = lambda t: plane_wave_closed_form(t, cal)  # noqa: E731
    d2 = (g(T + h) - 2 * g(T) + g(T - h)) / h ** 2
    lam = -np.median(d2 / g(T) ** 3)
    assert lam == pytest.approx(1.0, rel=1e-5)
    # the naive normalization m sd(m T | 1/2) with m = 1 has lam = 1/2
    gp = lambda t: sd(t, 0.5)  # noqa: E731
    lam_p = -np.median((gp(T + h) - 2 * gp(T) + gp(T - h)) / h ** 2 / gp(T) ** 3)
    assert lam_p == pytest.approx(cal["lambda_unit_mass"], rel=1e-5)


@pytest.mark.parametrize("psi", np.linspace(-5, 5, 11))
def test_dispersion(psi):
    for m in (0.5, 1.0, 2.3):
        w, k, d = dispersion_check(psi, m)
        assert abs(d - m * m) < 1e-12 * max(1.0, w * w)


def test_plane_wave_profiles_solve_field_equation(plane_wave_h):
    fr = build_plane_wave(plane_wave_h.profiles(), 0.0)
    pts = orbit(np.linspace(0.3, 11.7, 40))
    assert field_equation_residual(fr, pts).max_residual < 1e-6
    assert yang_mills_residual(fr, pts).max_residual < 1e-6


def test_plane_wave_algebraic_inverse(plane_wave_h):
    pr = plane_wave_h.profiles()
    T = np.linspace(0.5, 11.5, 9)
    ok = pr["Q"](T) > 1e-3
    g, h = plane_wave_state_from_profiles(pr["Q"](T[ok]), pr["p"](T[ok]))
    np.testing.assert_allclose(np.abs(g), np.abs(pr["g"](T[ok])), rtol=1e-10)
    np.testing.assert_allclose(g * h, pr["g"](T[ok]) * pr["h"](T[ok]), atol=1e-10)


def test_plane_wave_mass_rescaling():
    a = solve_plane_wave(m=1.0, T_range=(0, 10), n=101)
    b = solve_plane_wave(m=2.0, T_range=(0, 5), n=101)
    # g-equation is mass-free; the default initial slope scales as m^2
    np.testing.assert_allclose(b.y[:, 0], 2 * a.y[:, 0], atol=1e-8)


def test_spherical_wave_first_integral_and_closed_form():
    tab = solve_spherical_wave(2.0, 0.0, (0.0, 10.0))
    assert tab.drift()["E"] < 1e-9
    cal = tab.extras["calibration"]
    assert cal["c1"] == pytest.approx(2.0, rel=1e-14)
    assert math.sqrt(spherical_wave_energy(tab.y[0])) == pytest.approx(2.0, rel=1e-14)
    assert np.max(np.abs(spherical_wave_closed_form(tab.t, cal) - tab.y[:, 0])) < 1e-6


def test_unit_amplitude_spherical_wave_amplitude_differs():
    tab = solve_spherical_wave(3.0, 0.0, (0.0, 3.0))
    alt = unit_amplitude_spherical_wave(tab.t, 3.0, 0.0)
    assert np.max(np.abs(alt - tab.y[:, 0])) > 1e-2


def test_spherical_wave_translation_invariance():
    c2 = 0.7
    a = solve_spherical_wave(2.0, 0.0, (0.0, 8.0))
    b = solve_spherical_wave(2.0, c2, (-c2, 8.0 - c2))
    np.testing.assert_allclose(b.y[:, 0], a.y[:, 0], atol=1e-9)
    s = np.linspace(1.0, 5.0, 9)
    np.testing.assert_allclose(b.dense(s - c2)[0], a.dense(s)[0], atol=1e-9)


def test_spherical_wave_requires_c1_at_least_one():
    with pytest.raises(ValueError):
        solve_spherical_wave(0.5)
    tab = solve_spherical_wave(1.0, 0.0, (0.0, 1.0))
    np.testing.assert_array_equal(tab.y[:, 0], 0.0)


def test_shooting_zero_seed_is_trivial():
    res = shoot_point_charge(ShootingConfig(r_max=50.0, A0=1.0, dPhi0=0.0))
    assert res.C1 == 0.0 and res.C2 == 0.0
    assert res.fit_residual == {"C1": 0.0, "C2": 0.0}


def test_shooting_converges_with_decaying_tail(point_charge):
    res = point_charge
    assert np.linalg.norm(res.table.extras["shooting"]["mismatch"]) < 1e-5
    assert res.fit_residual["C1"] < 0.01 and res.fit_residual["C2"] < 0.01
    r = res.table.t
    assert abs(res.table.y[-1, 0] - 1) < 2 * abs(res.C2) / r[-1]


def test_shooting_rebuilt_frame_passes_residuals(point_charge):
    fr = build_spherical(point_charge.table.profiles())
    pts = orbit(np.geomspace(1.01, 99, 40), 0.3, 1.1, 0.4, index=1)
    assert field_equation_residual(fr, pts).max_residual < 1e-6
    assert yang_mills_residual(fr, pts).max_residual < 1e-6


def test_shooting_failure_is_reported():
    with pytest.raises(ShootingError) as info:
        shoot_point_charge(ShootingConfig(r_max=50.0, max_iter=0))
    assert info.value.history


def test_shooting_config_validation():
    with pytest.raises(ValueError):
        ShootingConfig(r_min=2.0, r_max=1.0)
    with pytest.raises(ValueError):
        ShootingConfig(ladder=1.0)


def test_table_profiles_round_trip(point_charge):
    tab = point_charge.table
    names, cols = tab.columns()
    data = {n: cols[:, i] for i, n in enumerate(names)}
    sel = slice(0, None, 4)
    pr = table_profiles(data["r"][sel], {n: data[n][sel] for n in ("P", "Q", "p", "q")},
                        variable="r")
    exact = tab.profiles()
    r = np.geomspace(1.1, 90, 25)
    for n in ("P", "Q", "p", "q"):
        np.testing.assert_allclose(pr[n](r), exact[n](r), atol=1e-7)


def test_solution_table_manifest(plane_wave_h):
    man = plane_wave_h.manifest()
    assert man["system"] == "plane-wave"
    assert man["tolerances"]["rtol"] > 0 and man["integrator"]["steps"] > 0
    names, cols = plane_wave_h.columns()
    assert names[:5] == ["T", "g", "dg", "h", "dh"] and names[-1] == "H"
    assert cols.shape == (len(plane_wave_h.t), len(names))


def test_integration_is_reproducible():
    a = solve_plane_wave(g0=0.1, dg0=0.5, h0=0.2, dh0=0.0, T_range=(0, 5))
    b = solve_plane_wave(g0=0.1, dg0=0.5, h0=0.2, dh0=0.0, T_range=(0, 5))
    assert np.array_equal(a.y, b.y)


# ---- observables on solutions ------------------------------------------------

def test_trace_identity_on_shell(plane_wave_h, point_charge):
    cases = [(build_plane_wave(plane_wave_h.profiles(), 0.4), orbit(np.linspace(0.5, 11.5, 20))),
             (build_spherical(point_charge.table.profiles()),
              orbit(np.geomspace(1.1, 90, 20), 0.3, 1.1, 0.4, index=1))]
    for fr, pts in cases:
        ev = FrameEvaluation(fr, pts, order=2)
        _, trace = ev.stress_energy()
        target = -ev.m2 * ev.pi_dot_pi()
        assert np.max(np.abs(trace - target)) < 1e-8 * np.max(np.abs(target))
        np.testing.assert_allclose(ev.lagrangian(), 0.5 * ev.m2 * ev.pi_dot_pi(),
                                   atol=1e-8 * np.max(np.abs(target)))


def test_zero_field_observables_vanish():
    from isoframe.ansatz import ProfileSet
    ps = ProfileSet.from_expressions({k: "0" for k in ("P", "Q", "p", "q", "f", "g")}, "T", (0, 1))
    fr = build_plane_wave(ps, 0.0, closed_connection=True)
    ev = FrameEvaluation(fr, orbit(np.linspace(0.1, 0.9, 5)), order=2)
    T, trace = ev.stress_energy()
    assert np.max(np.abs(T)) == 0 and np.max(np.abs(ev.lagrangian())) == 0
    assert np.max(np.abs(ev.spin_density())) == 0


def test_plane_wave_spin_density(plane_wave_h):
    pr = plane_wave_h.profiles()
    fr = build_plane_wave(pr, 0.0)
    T = np.linspace(0.5, 11.5, 20)
    ev = FrameEvaluation(fr, orbit(T), order=1)
    S = ev.spin_density()
    df = pr["f"].derivatives(T, 1)[1]
    np.testing.assert_allclose(S[1, 3], -df / ev.m2, atol=1e-8)
    mask = np.ones((4, 4), bool)
    mask[1, 3] = mask[3, 1] = False
    assert np.max(np.abs(S[mask])) < 1e-10


def test_plane_wave_spin_total_vanishes(plane_wave_h):
    out = spin_total(plane_wave_h, rho_max=2.0, T=3.3)
    assert out["density"] > 1e-2
    assert out["magnitude"] < 1e-8 * out["scale"]


def test_spin_total_rejects_other_systems(point_charge):
    with pytest.raises(ValueError):
        spin_total(point_charge.table)
