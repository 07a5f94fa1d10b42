"""Reduced ODE systems of the three ansaetze, integration, shooting and fits.

The equations are the ones the pipeline certifies: vanishing of the
field-equation and source-free Yang-Mills residuals of the ansatz frames.

* point charge, in r, state (A, A', Phi, Phi'):
      A'' = A (A^2 - 1) / r^2 - A Phi^2,    (r^2 Phi')' = 2 A^2 Phi
  profiles  P = Phi'/m^2, Q = (A^2-1)/(m^2 r^2), p = A Phi/m^2, q = A'/m^2.
* plane wave, in T, state (g, g', h, h') with h = f/sqrt(2):
      h'' = -2 g^2 h,    g'' = -g^3 - 2 g h^2
  profiles  P = sqrt2 h'/m^2, Q = g^2/m^2, p = -sqrt2 g h/m^2, q = g'/m^2.
* spherical wave, in s = ln(zeta), state (y, y') with y = A:
      y'' = -2 y (1 + y^2)
  profiles  p = y'/(m^2 zeta^2), q = -(1 + y^2)/(m^2 zeta^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import jets as J
from .ansatz import Profile, ProfileSet, build_plane_wave
from .bundle import FrameEvaluation
from .elliptic import complete_K, sd, sd_derivative
from .integrator import IntegrationError, IntegratorConfig, hermite, integrate_raw

SQRT2 = math.sqrt(2.0)


class ShootingError(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class ODESystem:
    name: str
    dim: int
    rhs: Callable
    state_names: tuple
    variable: str
    chart_variable: str
    to_ode: Callable
    from_ode: Callable
    profile_map: Callable
    first_integrals: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    csv_profiles: tuple = ()


def _check_mass(m):
    if not m > 0:
        raise ValueError("the mass parameter m must be positive")
    return float(m)


def point_charge_system(m: float = 1.0) -> ODESystem:
    m2 = _check_mass(m) ** 2

    def rhs(r, y):
        A, dA, Phi, dPhi = y[0], y[1], y[2], y[3]
        return J.stack([dA, A * (A * A - 1.0) / (r * r) - A * Phi * Phi,
                        dPhi, 2.0 * A * A * Phi / (r * r) - 2.0 * dPhi / r])

    def profiles(r, y):
        A, dA, Phi, dPhi = y[0], y[1], y[2], y[3]
        return {"P": dPhi / m2, "Q": (A * A - 1.0) / (m2 * r * r), "p": A * Phi / m2,
                "q": dA / m2, "A": A, "Phi": Phi}

    ident = lambda x: x  # noqa: E731
    return ODESystem("point-charge", 4, rhs, ("A", "dA", "Phi", "dPhi"), "r", "r",
                     ident, ident, profiles, {}, {"m": m}, ("P", "Q", "p", "q"))


def plane_wave_energy(y):
    g, dg, h, dh = y[0], y[1], y[2], y[3]
    return 0.5 * (dg * dg + dh * dh) + 0.25 * g ** 4 + g * g * h * h


def halved_potential_energy(y):
    """Potential g^4/4 + g^2 h^2 / 2: not conserved by the plane-wave system."""
    g, dg, h, dh = y[0], y[1], y[2], y[3]
    return 0.5 * (dg * dg + dh * dh) + 0.25 * g ** 4 + 0.5 * g * g * h * h


def plane_wave_system(m: float = 1.0) -> ODESystem:
    m2 = _check_mass(m) ** 2

    def rhs(T, y):
        g, dg, h, dh = y[0], y[1], y[2], y[3]
        return J.stack([dg, -g * g * g - 2.0 * g * h * h, dh, -2.0 * g * g * h])

    def profiles(T, y):
        g, dg, h, dh = y[0], y[1], y[2], y[3]
        return {"P": SQRT2 * dh / m2, "Q": g * g / m2, "p": -SQRT2 * g * h / m2, "q": dg / m2,
                "f": SQRT2 * h, "g": g, "h": h}

    ident = lambda x: x  # noqa: E731
    return ODESystem("plane-wave", 4, rhs, ("g", "dg", "h", "dh"), "T", "T", ident, ident,
                     profiles, {"H": lambda t, y: plane_wave_energy(y)}, {"m": m},
                     ("f", "P", "Q", "p", "q"))


def plane_wave_state_from_profiles(Q, p, m: float = 1.0):
    """Algebraic inverse of the profile map: g = m sqrt(Q), h = -m p / (sqrt2 sqrt(Q))."""
    m = _check_mass(m)
    Q = np.asarray(Q, dtype=float)
    if np.any(Q <= 0):
        raise ValueError("the algebraic map needs Q > 0")
    root = np.sqrt(Q)
    return m * root, -m * np.asarray(p, dtype=float) / (SQRT2 * root)


def spherical_wave_energy(y):
    return y[1] * y[1] + (1.0 + y[0] * y[0]) ** 2


def spherical_wave_system(m: float = 1.0) -> ODESystem:
    m2 = _check_mass(m) ** 2

    def rhs(s, y):
        return J.stack([y[1], -2.0 * y[0] * (1.0 + y[0] * y[0])])

    def profiles(s, y):
        w = J.exp(-2.0 * s) / m2
        return {"p": y[1] * w, "q": -(1.0 + y[0] * y[0]) * w, "A": y[0]}

    return ODESystem("spherical-wave", 2, rhs, ("y", "dy"), "s", "zeta", J.log, np.exp, profiles,
                     {"E": lambda s, y: spherical_wave_energy(y)}, {"m": m}, ("A", "p", "q"))


SYSTEMS = {"point-charge": point_charge_system, "plane-wave": plane_wave_system,
           "spherical-wave": spherical_wave_system}


# ---- solution tables ---------------------------------------------------------

@dataclass
class SolutionTable:
    system: ODESystem
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    conserved: dict
    stats: dict
    extras: dict = field(default_factory=dict)

    def dense(self, t) -> np.ndarray:
        """State at ``t`` by cubic Hermite interpolation, shape (dim, len(t))."""
        return hermite(self.t, self.y, self.dy, t).T

    def drift(self) -> dict:
        out = {}
        for k, v in self.conserved.items():
            ref = max(abs(v[0]), 1e-300)
            out[k] = float(np.max(np.abs(v - v[0])) / ref)
        return out

    def chart_range(self):
        a, b = self.system.from_ode(self.t[0]), self.system.from_ode(self.t[-1])
        return (min(a, b), max(a, b))

    def profiles(self) -> ProfileSet:
        return solution_profiles(self)

    def columns(self):
        """CSV columns: variable, state, chart variable, profiles, conserved."""
        sys = self.system
        names = [sys.variable] + list(sys.state_names)
        cols = [self.t] + [self.y[:, i] for i in range(sys.dim)]
        if sys.chart_variable != sys.variable:
            names.append(sys.chart_variable)
            cols.append(sys.from_ode(self.t))
        prof = sys.profile_map(self.t, self.y.T)
        for n in sys.csv_profiles:
            names.append(n)
            cols.append(np.asarray(prof[n], dtype=float))
        for k, v in self.conserved.items():
            names.append(k)
            cols.append(v)
        return names, np.column_stack(cols)

    def manifest(self) -> dict:
        return {"system": self.system.name, "parameters": dict(self.system.params),
                "tolerances": {"rtol": self.stats.get("rtol"), "atol": self.stats.get("atol")},
                "integrator": {k: self.stats[k] for k in ("method", "steps", "rejected", "evaluations")
                               if k in self.stats},
                "drift": self.drift(), "samples": int(len(self.t)), **self.extras}


def integrate(system: ODESystem, initial, span, config: IntegratorConfig = IntegratorConfig(),
              t_eval=None) -> SolutionTable:
    """Adaptive embedded Runge-Kutta integration with first-integral columns."""
    y0 = np.asarray(initial, dtype=float)
    if y0.shape != (system.dim,):
        raise ValueError(f"{system.name} needs a state of length {system.dim}")
    raw = integrate_raw(lambda t, y: np.asarray(system.rhs(t, y), dtype=float), span, y0, config, t_eval)
    conserved = {k: np.asarray(fn(raw.t, raw.y.T), dtype=float)
                 for k, fn in system.first_integrals.items()}
    stats = dict(raw.stats, steps=raw.steps, rejected=raw.rejected, evaluations=raw.evaluations)
    return SolutionTable(system, raw.t, raw.y, raw.f, conserved, stats)


def taylor_state(system: ODESystem, t0, y0, order: int):
    """Taylor expansion of the trajectory through (t0, y0) from the ODE itself.

    Returns univariate jets (T, Y) of the given order; Picard iteration on
    truncated series gains one correct order per sweep.
    """
    t0 = np.asarray(t0, dtype=float)
    T = J.Jet.variables(t0[None], order)[0]
    base = J.Jet.constant(np.asarray(y0, dtype=float), 1, order)
    Y = base
    for _ in range(order):
        Y = base + J.antiderivative(J.stack(list(system.rhs(T, Y))))
    return T, Y


def solution_profiles(table: SolutionTable) -> ProfileSet:
    """Profiles of the chart variable whose derivatives follow the ODE exactly.

    The state at a base point comes from the dense output; derivatives come
    from the Taylor expansion of the ODE about that state.
    """
    sys = table.system
    lo, hi = table.t.min(), table.t.max()

    def make(name):
        def fn(x):
            s = sys.to_ode(x)
            s0 = np.asarray(J.value(s), dtype=float)
            flat = s0.ravel()
            if np.any(flat < lo - 1e-9 * max(1, abs(lo))) or np.any(flat > hi + 1e-9 * max(1, abs(hi))):
                raise ValueError(f"{sys.chart_variable} outside the solved range")
            y0 = table.dense(np.clip(flat, lo, hi))
            order = x.order if J.is_jet(x) else 0
            T, Y = taylor_state(sys, flat, y0, order)
            val = sys.profile_map(T, Y)[name]
            coeffs = val.coef.reshape((order + 1,) + s0.shape)
            if not J.is_jet(x):
                return coeffs[0]
            return J.compose_series(coeffs, s - s0)
        return Profile(name, fn, table.chart_range())

    names = sys.profile_map(np.ones(1), np.ones((sys.dim, 1))).keys()
    profiles = {n: make(n) for n in names}
    if sys.name == "spherical-wave":
        profiles["P"], profiles["Q"] = profiles["p"], profiles["q"]
    return ProfileSet(profiles, sys.chart_variable, table.chart_range())


def table_profiles(variable_values, columns: dict, names=("P", "Q", "p", "q"), kind="quintic",
                   variable="x", to_ode=None, from_ode=None) -> ProfileSet:
    """Profiles interpolated from sampled columns (file round trips).

    With ``to_ode``/``from_ode`` the samples are given at ODE-variable values
    and interpolated there; the profiles are functions of the chart variable
    ``from_ode(s)`` evaluated through ``to_ode``.
    """
    x = np.asarray(variable_values, dtype=float)
    order = np.argsort(x)
    x = x[order]
    profs = {}
    for n in names:
        if n not in columns:
            continue
        base = Profile.from_samples(x, np.asarray(columns[n], dtype=float)[order], n, kind)
        if to_ode is None:
            profs[n] = base
        else:
            profs[n] = Profile(n, lambda u, b=base: b(to_ode(u)))
    if to_ode is None:
        domain = (x[0], x[-1])
    else:
        ends = sorted((float(from_ode(x[0])), float(from_ode(x[-1]))))
        domain = tuple(ends)
    for prof in profs.values():
        prof.domain = domain
    return ProfileSet(profs, variable, domain)


# ---- closed forms and calibration -------------------------------------------

def sd_phase(value, slope, amplitude, m):
    """Argument u with amplitude*sd(u|m) = value on the branch where sd' has the sign of slope."""
    K = complete_K(m)
    w = value / amplitude
    peak = 1.0 / math.sqrt(1.0 - m)
    w = min(max(w, -peak), peak)
    fn = lambda u: sd(u, m) - w  # noqa: E731
    if slope >= 0:
        lo, hi = -K, K
    else:
        lo, hi = K, 3 * K
    if abs(fn(lo)) < 1e-15:
        return lo
    if abs(fn(hi)) < 1e-15:
        return hi
    return brentq(fn, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def calibrate_plane_wave(g0: float, dg0: float, T0: float = 0.0) -> dict:
    """Constants of the h=0 closed form g = (b/sqrt2) sd(b (T - T0) + u0 | 1/2).

    The naive normalization g = m sd(mT|1/2) solves g'' = -g^3/2 instead
    of g'' = -g^3; it corresponds to lambda = 1/2.
    """
    H = 0.5 * dg0 ** 2 + 0.25 * g0 ** 4
    if H <= 0:
        return {"b": 0.0, "amplitude": 0.0, "u0": 0.0, "T0": T0, "lambda_unit_mass": 0.5}
    v = math.sqrt(2.0 * H)          # slope at a zero crossing
    b = math.sqrt(SQRT2 * v)
    a = b / SQRT2
    u0 = sd_phase(g0, dg0, a, 0.5)
    return {"b": b, "amplitude": a, "u0": u0, "T0": T0, "lambda_unit_mass": 0.5}


def plane_wave_closed_form(T, cal: dict):
    T = np.asarray(T, dtype=float)
    if cal["b"] == 0:
        return np.zeros_like(T)
    return cal["amplitude"] * sd(cal["b"] * (T - cal["T0"]) + cal["u0"], 0.5)


def calibrate_spherical_wave(y0: float, dy0: float, s0: float = 0.0) -> dict:
    """Constants of y = a sd(b (s + c2) | m) with c1^2 = y'^2 + (1+y^2)^2.

    a = sqrt((c1^2-1)/(2 c1)), b = sqrt(2 c1), m = (c1-1)/(2 c1).
    """
    c1 = math.sqrt(dy0 ** 2 + (1 + y0 ** 2) ** 2)
    if c1 <= 1.0 + 1e-15:
        return {"c1": 1.0, "c2": 0.0, "amplitude": 0.0, "b": math.sqrt(2.0), "m": 0.0}
    a = math.sqrt((c1 * c1 - 1) / (2 * c1))
    b = math.sqrt(2 * c1)
    m = (c1 - 1) / (2 * c1)
    u0 = sd_phase(y0, dy0, a, m)
    return {"c1": c1, "c2": u0 / b - s0, "amplitude": a, "b": b, "m": m}


def spherical_wave_closed_form(s, cal: dict):
    s = np.asarray(s, dtype=float)
    if cal["amplitude"] == 0:
        return np.zeros_like(s)
    return cal["amplitude"] * sd(cal["b"] * (s + cal["c2"]), cal["m"])


def unit_amplitude_spherical_wave(s, c1, c2):
    """Closed form sd((s+c2) sqrt(2c1/(c1^2-1)) | (c1-1)/(2c1)), unit amplitude."""
    return sd((np.asarray(s) + c2) * math.sqrt(2 * c1 / (c1 * c1 - 1)), (c1 - 1) / (2 * c1))


def dispersion_check(psi: float, m: float):
    """omega = m cosh(psi), k = m sinh(psi), omega^2 - k^2."""
    m = _check_mass(m)
    w, k = m * math.cosh(psi), m * math.sinh(psi)
    return w, k, (w - k) * (w + k)


# ---- solvers -------------------------------------------------------------------

def solve_plane_wave(m=1.0, g0=0.0, dg0=None, h0=0.0, dh0=0.0, T_range=(0.0, None), n=None,
                     config=IntegratorConfig()) -> SolutionTable:
    """Integrate the plane-wave system; by default over ten periods of the h=0 branch."""
    m = _check_mass(m)
    if dg0 is None:
        dg0 = m * m / SQRT2
    sys = plane_wave_system(m)
    y0 = np.array([g0, dg0, h0, dh0], dtype=float)
    T0, T1 = T_range
    cal = calibrate_plane_wave(g0, dg0, T0) if h0 == 0 and dh0 == 0 else None
    if T1 is None:
        b = cal["b"] if cal and cal["b"] > 0 else m
        T1 = T0 + 10 * 4 * complete_K(0.5) / b
    n = n or max(2, int(math.ceil((T1 - T0) / 0.01)) + 1)
    table = integrate(sys, y0, (T0, T1), config, np.linspace(T0, T1, n))
    if cal is not None:
        table.extras["calibration"] = cal
    return table


def solve_spherical_wave(c1=2.0, c2=0.0, s_range=(0.0, 10.0), m=1.0, n=None, y0=None, dy0=None,
                         config=IntegratorConfig()) -> SolutionTable:
    """Trajectory with first integral c1^2; by default y(s0)=0 with y' > 0 shifted by c2."""
    s0, s1 = s_range
    if y0 is None:
        if c1 < 1:
            raise ValueError("the first integral needs c1 >= 1")
        cal = {"c1": c1, "c2": c2, "amplitude": math.sqrt(max(c1 * c1 - 1, 0) / (2 * c1)),
               "b": math.sqrt(2 * c1), "m": (c1 - 1) / (2 * c1)}
        u = cal["b"] * (s0 + c2)
        if cal["amplitude"]:
            y0 = cal["amplitude"] * sd(u, cal["m"])
            dy0 = cal["amplitude"] * cal["b"] * sd_derivative(u, cal["m"])
        else:
            y0, dy0 = 0.0, 0.0
    cal = calibrate_spherical_wave(y0, dy0, s0)
    n = n or max(2, int(math.ceil((s1 - s0) / 0.005)) + 1)
    table = integrate(spherical_wave_system(m), [y0, dy0], (s0, s1), config, np.linspace(s0, s1, n))
    table.extras["calibration"] = cal
    return table


@dataclass(frozen=True)
class ShootingConfig:
    r_min: float = 1.0
    r_max: float = 1000.0
    A0: float = 1.2
    dPhi0: float = 0.5
    m: float = 1.0
    guess: tuple | None = None
    max_iter: int = 40
    tol: float = 1e-5              # growing-mode amplitude, in units of the decay constants
    fd_step: float = 1e-6
    samples: int = 4001
    ladder: float = 4.0
    integrator: IntegratorConfig = IntegratorConfig(rtol=1e-12, atol=1e-14)

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not self.ladder > 1:
            raise ValueError("the r_max ladder factor must exceed 1")


@dataclass
class ShootingResult:
    table: SolutionTable
    C1: float
    C2: float
    fit_residual: dict
    unknowns: tuple
    iterations: int
    history: list


def _mismatch(cfg: ShootingConfig, x):
    """Growing-mode content at r_max in units of the decay constants.

    With a = A - 1 = C2/r + D r^2 and Phi = C1/r^2 + E r the components are
    R (R a' + a) = 3 D R^3 and R^2 (R Phi' + 2 Phi) = 3 E R^3, which vanish on
    the decaying modes and are directly comparable with C2 and C1.
    """
    sys = point_charge_system(cfg.m)
    y0 = [cfg.A0, x[0], x[1], cfg.dPhi0]
    raw = integrate_raw(lambda t, y: np.asarray(sys.rhs(t, y)), (cfg.r_min, cfg.r_max), y0,
                        cfg.integrator)
    A, dA, Phi, dPhi = raw.y[-1]
    R = cfg.r_max
    return np.array([R * (R * dA + (A - 1.0)), R * R * (R * dPhi + 2.0 * Phi)])


def fit_asymptotics(table: SolutionTable, decades: float = 1.0):
    r = table.t
    sel = r >= r[-1] / 10 ** decades
    A, Phi = table.y[sel, 0], table.y[sel, 2]
    out = {}
    for name, series in (("C1", Phi * r[sel] ** 2), ("C2", (A - 1.0) * r[sel])):
        C = float(np.mean(series))
        rms = float(np.sqrt(np.mean((series - C) ** 2)))
        out[name] = (C, rms / abs(C) if abs(C) > 1e-14 else (0.0 if rms < 1e-14 else np.inf))
    return out


def _newton(cfg: ShootingConfig, x, history):
    """Newton iteration with central-difference Jacobian and backtracking."""

    def F(v):
        try:
            return _mismatch(cfg, v)
        except IntegrationError:
            return np.full(2, np.inf)

    fx = F(x)
    it = 0
    while True:
        norm = float(np.linalg.norm(fx))
        history.append({"r_max": cfg.r_max, "unknowns": x.tolist(), "mismatch": fx.tolist(),
                        "norm": norm})
        if norm < cfg.tol:
            return x, fx, it
        if it >= cfg.max_iter:
            raise ShootingError(f"shooting did not converge in {cfg.max_iter} iterations "
                                f"at r_max={cfg.r_max:g} (mismatch {norm:.3e})", history)
        Jm = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = cfg.fd_step
            Jm[:, j] = (F(x + e) - F(x - e)) / (2 * cfg.fd_step)
        if not np.all(np.isfinite(Jm)):
            raise ShootingError("mismatch Jacobian is not finite", history)
        step = np.linalg.solve(Jm, -fx)
        lam = 1.0
        while lam > 1e-4:
            trial = x + lam * step
            ft = F(trial)
            if np.all(np.isfinite(ft)) and np.linalg.norm(ft) < norm:
                break
            lam *= 0.5
        else:
            history.append({"note": "line search failed: mismatch is not monotone along the Newton step"})
            raise ShootingError("line search failed", history)
        x, fx = trial, ft
        it += 1


def shoot_point_charge(cfg: ShootingConfig = ShootingConfig()) -> ShootingResult:
    """Newton shooting on (A'(r_min), Phi(r_min)) for decaying behaviour at r_max.

    The outer radius is raised along a geometric ladder, each stage starting
    from the previous solution: the growing modes amplify errors in the
    unknowns by about (r_max/r_min)^2, so a direct start at a large r_max
    leaves the linear regime long before the boundary.
    """
    if cfg.guess is not None:
        x = np.array(cfg.guess, dtype=float)
    else:
        # decaying modes of the linearization: A-1 ~ 1/r, Phi ~ 1/r^2
        x = np.array([-(cfg.A0 - 1.0) / cfg.r_min, -0.5 * cfg.dPhi0 * cfg.r_min])
    history = []
    ladder = [cfg.r_max]
    while ladder[-1] > cfg.ladder * cfg.r_min:
        ladder.append(ladder[-1] / cfg.ladder)
    it = 0
    for r_out in reversed(ladder):
        x, fx, n = _newton(replace(cfg, r_max=r_out), x, history)
        it += n

    sys = point_charge_system(cfg.m)
    r_eval = np.geomspace(cfg.r_min, cfg.r_max, cfg.samples)
    r_eval[0], r_eval[-1] = cfg.r_min, cfg.r_max
    table = integrate(sys, [cfg.A0, x[0], x[1], cfg.dPhi0], (cfg.r_min, cfg.r_max),
                      cfg.integrator, r_eval)
    fits = fit_asymptotics(table)
    table.extras.update({"C1": fits["C1"][0], "C2": fits["C2"][0],
                         "fit_residual": {k: v[1] for k, v in fits.items()},
                         "shooting": {"unknowns": x.tolist(), "iterations": it,
                                      "mismatch": fx.tolist(), "r_min": cfg.r_min,
                                      "r_max": cfg.r_max, "A0": cfg.A0, "dPhi0": cfg.dPhi0}})
    return ShootingResult(table, fits["C1"][0], fits["C2"][0],
                          {k: v[1] for k, v in fits.items()}, tuple(x), it, history)


# ---- observables on solutions --------------------------------------------------

def spin_total(solution, rho_max: float = 2.0, T=None, Z: float = 0.0,
               n_rho: int = 24, n_phi: int = 64, m: float | None = None) -> dict:
    """Transverse-disk integral of the spin density of a plane-wave solution.

    The density S_{Z phi} is converted to Cartesian transverse components
    S_{Zx} = -S_{Z phi} y/rho^2, S_{Zy} = S_{Z phi} x/rho^2 and integrated
    with Gauss-Legendre in rho and the trapezoid rule in phi.
    """
    if isinstance(solution, SolutionTable):
        if solution.system.name != "plane-wave":
            raise ValueError("spin totals are defined for plane-wave solutions")
        profiles = solution.profiles()
        m = solution.system.params["m"]
    else:
        profiles = solution
        if m is None:
            raise ValueError("a profile set needs the mass parameter")
    frame = build_plane_wave(profiles, 0.0, m, closed_connection="f" in profiles and "g" in profiles)
    if T is None:
        T = 0.5 * (profiles.domain[0] + profiles.domain[1])
    xg, wg = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * rho_max * (xg + 1.0)
    w_rho = 0.5 * rho_max * wg
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    R, PH = np.meshgrid(rho, phi, indexing="ij")
    pts = np.stack([np.full(R.size, T), np.full(R.size, Z), R.ravel(), PH.ravel()])
    ev = FrameEvaluation(frame, pts, order=1)
    S = ev.spin_density()[1, 3].reshape(R.shape)
    Sx = -S * np.sin(PH) / R
    Sy = S * np.cos(PH) / R
    W = (w_rho[:, None] * R) * (2 * np.pi / n_phi)
    total = np.array([np.sum(W * Sx), np.sum(W * Sy)])
    scale = float(np.max(np.abs(S) / R)) * np.pi * rho_max ** 2
    return {"total": total.tolist(), "magnitude": float(np.linalg.norm(total)), "scale": scale,
            "density": float(np.max(np.abs(S))), "T": float(T)}

