"""Symmetric frame ansaetze built from one-variable profiles.

Three families are provided: static spherically symmetric frames in
(t, r, theta, phi), plane waves in boosted cylindrical coordinates
(T, Z, rho, phi), and Lorentz-invariant spherical waves in cone coordinates
(zeta, eta, theta, phi).  The connection is never transcribed: it is always
obtained from the structure-equation solve.  Closed-form connection families
are provided separately for identities that hold for any connection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .bundle import (DegenerateFrameError, FrameEvaluation, IsoFrame, IsoTripletForm,
                     covariant_d, cross_wedge, curvature_values, d_triplet, orthonormal_factors)
from .charts import builtin_chart
from .expressions import compile_expression
from .forms import FormValue, hodge_values, wedge_values

SQRT2 = math.sqrt(2.0)


# ---- profiles --------------------------------------------------------------

class Profile:
    """Scalar function of one variable that accepts arrays or jets."""

    def __init__(self, name, fn, domain=(-math.inf, math.inf)):
        self.name = name
        self._fn = fn
        self.domain = tuple(domain)

    def __call__(self, x):
        return self._fn(x)

    @classmethod
    def constant(cls, c, name="const"):
        c = float(c)
        return cls(name, lambda x: J.full_like(x, c))

    @classmethod
    def expression(cls, text, variable, constants=None, name=None):
        expr = compile_expression(text, [variable], constants)
        return cls(name or text, expr)

    @classmethod
    def from_taylor(cls, taylor, name="series", domain=(-math.inf, math.inf)):
        """``taylor(x0, N)`` returns ``[f(x0), f'(x0), f''(x0)/2, ...]`` (N+1 arrays)."""
        def fn(x):
            if J.is_jet(x):
                x0 = x.value
                coeffs = np.stack([np.broadcast_to(c, x0.shape) for c in taylor(x0, x.order)])
                return J.compose_series(coeffs, x - x0)
            return np.asarray(taylor(np.asarray(x, dtype=float), 0)[0], dtype=float)
        return cls(name, fn, domain)

    @classmethod
    def from_samples(cls, x, y, name="table", kind="quintic"):
        """Interpolate sampled values; derivatives are those of the interpolant.

        ``quintic`` uses a degree-5 interpolating B-spline (smooth through the
        second derivatives the curvature needs); ``pchip`` uses the monotone
        cubic Hermite interpolant.
        """
        from scipy.interpolate import PchipInterpolator, make_interp_spline

        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        if kind == "quintic":
            spl = make_interp_spline(x, y, k=5)
            derivs = [spl] + [spl.derivative(n) for n in range(1, 6)]
        elif kind == "pchip":
            spl = PchipInterpolator(x, y)
            derivs = [spl] + [spl.derivative(n) for n in range(1, 4)]
        else:
            raise ValueError(f"unknown interpolation kind {kind!r}")
        fact = [math.factorial(n) for n in range(len(derivs))]

        def taylor(x0, N):
            out = []
            for n in range(N + 1):
                out.append(derivs[n](x0) / fact[n] if n < len(derivs) else np.zeros_like(x0))
            return out

        return cls.from_taylor(taylor, name, (x[0], x[-1]))

    def derivatives(self, x, n=2) -> np.ndarray:
        """Values and first ``n`` derivatives at ``x``, shape (n+1, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        jet = self(J.Jet.variables(x[None, :], n)[0])
        return np.stack([jet.coef[k] * math.factorial(k) for k in range(n + 1)])


@dataclass
class ProfileSet:
    """Named profiles of one variable on a declared interval."""

    profiles: dict
    variable: str
    domain: tuple

    def __getitem__(self, name) -> Profile:
        return self.profiles[name]

    def __contains__(self, name):
        return name in self.profiles

    def require(self, *names):
        missing = [n for n in names if n not in self.profiles]
        if missing:
            raise KeyError(f"profile set lacks {missing}")

    @classmethod
    def from_expressions(cls, exprs, variable, domain, constants=None):
        return cls({k: Profile.expression(v, variable, constants, k) for k, v in exprs.items()},
                   variable, tuple(domain))

    def check_derivatives(self, n=16, seed=0, tol=1e-5) -> float:
        """Spot check jet derivatives against central differences; returns the worst error."""
        rng = np.random.default_rng(seed)
        lo, hi = self.domain
        span = hi - lo
        x = lo + span * (0.1 + 0.8 * rng.random(n))
        worst = 0.0
        for prof in self.profiles.values():
            d = prof.derivatives(x, 2)
            h = 1e-4 * max(1.0, span)
            fp, fm, f0 = prof(x + h), prof(x - h), prof(x)
            fd1 = (fp - fm) / (2 * h)
            fd2 = (fp - 2 * f0 + fm) / h ** 2
            for exact, approx, hh in ((d[1], fd1, h ** 2), (d[2], fd2, h ** 2)):
                scale = np.maximum(1.0, np.abs(exact)) * (1 + np.max(np.abs(d)))
                worst = max(worst, float(np.max(np.abs(exact - approx) / scale)))
        if worst > tol:
            raise ValueError(f"profile derivatives inconsistent with values (error {worst:.2e})")
        return worst

    def check_plane_wave_relation(self, tol=1e-12):
        """h = f / sqrt(2) when both are present."""
        if "f" in self and "h" in self:
            x = np.linspace(*self.domain, 17)[1:-1]
            err = np.max(np.abs(self["h"](x) - self["f"](x) / SQRT2))
            if err > tol:
                raise ValueError(f"h differs from f/sqrt(2) by {err:.2e}")


# ---- ansatz frames ---------------------------------------------------------

@dataclass
class AnsatzFrame(IsoFrame):
    kind: str = ""
    profiles: ProfileSet | None = None
    params: dict = field(default_factory=dict)
    reduced_index: int = 0


def _slots(*items):
    return FormValue.from_list(2, list(items))


def build_spherical(profiles: ProfileSet, m: float = 1.0, variant: str = "standard") -> AnsatzFrame:
    """Static spherically symmetric frame in (t, r, theta, phi).

    pi1 = -P dt^dr + Q r^2 sin(th) dth^dph
    pi2 = -p dt^dth + q sin(th) dph^dr
    pi3 = -p sin(th) dt^dph + q dr^dth

    ``variant="flipped"`` flips the sign of the p-terms in pi2, pi3; that form
    is kept only to document that its Hodge dual does not close on the ansatz.
    """
    profiles.require("P", "Q", "p", "q")
    if profiles.domain[0] <= 0:
        raise ValueError("spherical profiles must live on r > 0")
    chart = builtin_chart("spherical")
    sp = -1.0 if variant == "standard" else 1.0
    P, Q, p, q = (profiles[k] for k in ("P", "Q", "p", "q"))

    def rule(X):
        _, r, th, _ = X
        s = J.sin(th)
        z = J.zeros_like(r)
        Pv, Qv, pv, qv = P(r), Q(r), p(r), q(r)
        # slots: 01 02 03 12 13 23 = dt^dr dt^dth dt^dph dr^dth dr^dph dth^dph
        return (_slots(-Pv, z, z, z, z, Qv * r * r * s),
                _slots(z, sp * pv, z, z, -qv * s, z),
                _slots(z, z, sp * pv * s, qv, z, z))

    return AnsatzFrame(IsoTripletForm(chart, 2, rule), m, kind="spherical",
                       profiles=profiles, params={"m": m, "variant": variant}, reduced_index=1)


def _one_form(comps):
    return FormValue.from_list(1, list(comps))


def build_plane_wave(profiles: ProfileSet, psi: float = 0.0, m: float = 1.0,
                     lab: bool = False, closed_connection: bool = False) -> AnsatzFrame:
    """Plane wave in boosted cylindrical coordinates.

    pi1 = P dT^dZ - Q rho drho^dph
    pi2 = p dZ^drho + q rho dT^dph
    pi3 = p rho dph^dZ + q dT^drho

    With ``lab=True`` the frame lives on the lab cylindrical chart (t, z, rho, phi)
    and T = t cosh(psi) - z sinh(psi), Z = -z cosh(psi) + t sinh(psi) are
    computed from the lab coordinates.

    ``closed_connection`` attaches the connection family built from the f and
    g profiles instead of solving the structure equation.  The h = 0 branch
    (p = P = 0) needs it: there the structure matrix has rank 6.
    """
    profiles.require("P", "Q", "p", "q")
    if closed_connection:
        if lab:
            raise ValueError("the closed-form connection lives on the boosted chart")
        profiles.require("f", "g")
    P, Q, p, q = (profiles[k] for k in ("P", "Q", "p", "q"))
    ch, sh = math.cosh(psi), math.sinh(psi)
    chart = builtin_chart("cylindrical") if lab else builtin_chart("boosted_cylindrical", psi)

    def rule(X):
        x0, x1, rho, _ = X
        z = J.zeros_like(rho)
        o = J.ones_like(rho)
        if lab:
            T = x0 * ch - x1 * sh
            eT = _one_form([o * ch, o * -sh, z, z])
            eZ = _one_form([o * sh, o * -ch, z, z])
        else:
            T = x0
            eT = _one_form([o, z, z, z])
            eZ = _one_form([z, o, z, z])
        er = _one_form([z, z, o, z])
        ep = _one_form([z, z, z, o])
        Pv, Qv, pv, qv = P(T), Q(T), p(T), q(T)
        pi1 = wedge_values(eT, eZ).scale(Pv) - wedge_values(er, ep).scale(Qv * rho)
        pi2 = wedge_values(eZ, er).scale(pv) + wedge_values(eT, ep).scale(qv * rho)
        pi3 = wedge_values(ep, eZ).scale(pv * rho) + wedge_values(eT, er).scale(qv)
        return (pi1, pi2, pi3)

    frame = AnsatzFrame(IsoTripletForm(chart, 2, rule), m, kind="plane_wave", profiles=profiles,
                        params={"m": m, "psi": psi, "lab": lab,
                                "closed_connection": closed_connection},
                        reduced_index=0)
    if closed_connection:
        frame.connection = plane_wave_connection(profiles["f"], profiles["g"], psi)
    return frame


def build_spherical_wave(profiles: ProfileSet, m: float = 1.0, variant: str = "standard") -> AnsatzFrame:
    """Lorentz-invariant spherical wave in cone coordinates (zeta, eta, theta, phi).

    pi1 = p zeta dzeta^deta - q zeta^2 sinh^2(eta) sin(th) dth^dph
    pi2 = -p zeta sinh(eta) dzeta^dth + q zeta^2 sinh(eta) sin(th) dph^deta
    pi3 = -p zeta sinh(eta) sin(th) dzeta^dph + q zeta^2 sinh(eta) deta^dth

    ``variant="flipped"`` flips the sign of the p-terms in pi2, pi3.
    """
    profiles.require("p", "q")
    if profiles.domain[0] <= 0:
        raise ValueError("spherical-wave profiles must live inside the light cone, zeta > 0")
    chart = builtin_chart("cone")
    sp = -1.0 if variant == "standard" else 1.0
    p, q = profiles["p"], profiles["q"]

    def rule(X):
        zeta, eta, th, _ = X
        sh = J.sinh(eta)
        s = J.sin(th)
        z = J.zeros_like(zeta)
        pv, qv = p(zeta) * zeta, q(zeta) * zeta * zeta
        # slots: 01 02 03 12 13 23 = dze^det dze^dth dze^dph det^dth det^dph dth^dph
        return (_slots(pv, z, z, z, z, -qv * sh * sh * s),
                _slots(z, sp * pv * sh, z, z, -qv * sh * s, z),
                _slots(z, z, sp * pv * sh * s, qv * sh, z, z))

    return AnsatzFrame(IsoTripletForm(chart, 2, rule), m, kind="spherical_wave",
                       profiles=profiles, params={"m": m, "variant": variant}, reduced_index=0)


# ---- closed-form connection families ----------------------------------------

def spherical_connection(Phi, A) -> IsoTripletForm:
    """alpha1 = Phi dt + cos(th) dph, alpha2 = -A sin(th) dph, alpha3 = A dth."""
    chart = builtin_chart("spherical")

    def rule(X):
        _, r, th, _ = X
        z = J.zeros_like(r)
        a = A(r)
        return (_one_form([Phi(r), z, z, J.cos(th)]),
                _one_form([z, z, z, -a * J.sin(th)]),
                _one_form([z, z, a, z]))

    return IsoTripletForm(chart, 1, rule)


def plane_wave_connection(f, g, psi=0.0) -> IsoTripletForm:
    """alpha1 = f dZ - dph, alpha2 = g rho dph, alpha3 = g drho."""
    chart = builtin_chart("boosted_cylindrical", psi)

    def rule(X):
        T, _, rho, _ = X
        z = J.zeros_like(rho)
        gv = g(T)
        return (_one_form([z, f(T), z, z - 1.0]),
                _one_form([z, z, z, gv * rho]),
                _one_form([z, z, gv, z]))

    return IsoTripletForm(chart, 1, rule)


def spherical_wave_connection(A) -> IsoTripletForm:
    """alpha1 = A deta + cos(th) dph,
    alpha2 = -A sinh(eta) dth + cosh(eta) sin(th) dph,
    alpha3 = -cosh(eta) dth - A sinh(eta) sin(th) dph."""
    chart = builtin_chart("cone")

    def rule(X):
        zeta, eta, th, _ = X
        z = J.zeros_like(zeta)
        a = A(zeta)
        sh, chh = J.sinh(eta), J.cosh(eta)
        s, c = J.sin(th), J.cos(th)
        return (_one_form([z, a, z, c]),
                _one_form([z, z, -a * sh, chh * s]),
                _one_form([z, z, -chh, -a * sh * s]))

    return IsoTripletForm(chart, 1, rule)


# ---- reduction to one variable -----------------------------------------------

ORBIT_SAMPLES = {
    "spherical": [(0.0, 0.7, 0.3), (1.3, 1.9, 2.2), (-0.4, 1.2, 4.0)],
    "plane_wave": [(0.0, 0.8, 0.3), (1.1, 1.7, 2.0), (-2.0, 0.5, 5.0)],
    "spherical_wave": [(0.4, 0.7, 0.3), (1.1, 1.9, 2.2), (2.0, 1.2, 4.0)],
}


def orbit_points(ansatz: AnsatzFrame, u, orbit):
    """Chart points with reduced variable ``u`` and the remaining coordinates from ``orbit``."""
    u = np.asarray(u, dtype=float)
    a, b, c = orbit
    if ansatz.kind == "plane_wave" and ansatz.params.get("lab"):
        psi = ansatz.params["psi"]
        ch, sh = math.cosh(psi), math.sinh(psi)
        # invert T = t ch - z sh, Z = t sh - z ch
        t = u * ch - a * sh
        z = u * sh - a * ch
        return np.stack([t, z, np.full_like(u, b), np.full_like(u, c)])
    full = [np.full_like(u, a), np.full_like(u, b), np.full_like(u, c)]
    full.insert(ansatz.reduced_index, u)
    return np.stack(full)


def reduced_residuals(ansatz: AnsatzFrame, orbit=None, tol=1e-10):
    """Residuals of the full pipeline as functions of the reduced variable.

    Returns a callable ``u -> {"structure", "field", "yang_mills"}`` whose
    values are orthonormal components of shape (3 x slots, len(u)).  The
    residuals are evaluated on several orbit points and must agree there.
    """
    orbits = orbit or ORBIT_SAMPLES[ansatz.kind]

    def evaluate(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        results = []
        for o in orbits:
            ev = FrameEvaluation(ansatz, orbit_points(ansatz, u, o), order=3)
            if not np.all(ev.valid):
                bad = u[~ev.valid]
                raise DegenerateFrameError(
                    f"degenerate frame on the orbit at {ansatz.profiles.variable} = {bad[:3]}",
                    float(np.max(ev.cond)))
            results.append({
                "structure": ev.orthonormal(ev.structure_residual()).reshape(-1, len(u)),
                "field": ev.orthonormal(ev.field_residual()).reshape(-1, len(u)),
                "yang_mills": ev.orthonormal(ev.yang_mills()).reshape(-1, len(u)),
            })
        ref = results[0]
        for other in results[1:]:
            for key in ref:
                scale = 1.0 + np.max(np.abs(ref[key]))
                if np.max(np.abs(other[key] - ref[key])) > tol * scale:
                    raise ValueError(f"{key} residual depends on the orbit coordinates")
        return ref

    return evaluate


# ---- Hodge transmutation -------------------------------------------------------

def rebuild(ansatz: AnsatzFrame, profiles: ProfileSet) -> AnsatzFrame:
    """Same ansatz family and parameters with different profiles."""
    if ansatz.kind == "spherical":
        return build_spherical(profiles, ansatz.mass, ansatz.params.get("variant", "standard"))
    if ansatz.kind == "plane_wave":
        return build_plane_wave(profiles, ansatz.params["psi"], ansatz.mass, ansatz.params["lab"],
                                ansatz.params.get("closed_connection", False)
                                and "f" in profiles and "g" in profiles)
    return build_spherical_wave(profiles, ansatz.mass, ansatz.params.get("variant", "standard"))


def transmuted_profiles(ansatz: AnsatzFrame) -> ProfileSet:
    """(P, Q, p, q) -> (-Q, P, -q, p); for spherical waves P=p, Q=q."""
    ps = ansatz.profiles
    if ansatz.kind == "spherical_wave":
        src = {"P": ps["p"], "Q": ps["q"], "p": ps["p"], "q": ps["q"]}
    else:
        src = {k: ps[k] for k in ("P", "Q", "p", "q")}

    def neg(f):
        return Profile("-" + f.name, lambda x: -f(x), f.domain)

    mapped = {"P": neg(src["Q"]), "Q": src["P"], "p": neg(src["q"]), "q": src["p"]}
    return ProfileSet(mapped, ps.variable, ps.domain)


def hodge_dual_frame_values(ansatz: AnsatzFrame, points):
    points = np.asarray(points, dtype=float)
    chart = ansatz.chart
    g = chart.metric(points)
    vol = chart.volume(points)
    return tuple(hodge_values(x, g, vol) for x in ansatz.pi.value(points))


def transmutation_error(ansatz: AnsatzFrame, points) -> float:
    """Max orthonormal-component gap between *pi and the frame of the mapped profiles."""
    points = np.asarray(points, dtype=float)
    ansatz.chart.check_points(points)
    star = hodge_dual_frame_values(ansatz, points)
    mapped = rebuild(ansatz, transmuted_profiles(ansatz)).pi.value(points)
    fac = orthonormal_factors(2, ansatz.chart.metric_values(points))
    return float(max(np.max(np.abs((np.asarray(s.values) - np.asarray(t.values)) * fac))
                     for s, t in zip(star, mapped)))


# ---- redundancy of the structure relations ---------------------------------------

def quartet_redundancy(taylor: dict, r0: float, m: float = 1.0, h: float = 1e-6,
                       rtol: float = 1e-7) -> dict:
    """Rank analysis of the spherical structure relations at radius ``r0``.

    ``taylor`` maps each of P, Q, p, q, Phi, A to (value, first, second
    derivative) at ``r0``.  The profiles are replaced by their quadratic
    Taylor polynomials, the connection is the explicit (Phi, A) family, and
    the Jacobian of the residual rows with respect to the 18 coefficients is
    taken by central differences.  Returns the ranks and the number of
    quartet relations (from D pi = 0 and D *pi = 0) that are already implied
    by the field equation and its radial derivative.
    """
    names = ["P", "Q", "p", "q", "Phi", "A"]
    base = np.array([c for n in names for c in taylor[n]], dtype=float)
    point = np.array([[0.0], [r0], [1.1], [0.3]])

    def rows(vec):
        coeffs = {n: vec[3 * i:3 * i + 3] for i, n in enumerate(names)}

        def prof(n):
            c = coeffs[n]
            return lambda r: c[0] + c[1] * (r - r0) + 0.5 * c[2] * (r - r0) * (r - r0)

        ps = ProfileSet({n: Profile(n, prof(n)) for n in ("P", "Q", "p", "q")}, "r", (r0 / 2, 2 * r0))
        frame = build_spherical(ps, m)
        X = J.Jet.variables(point, 3)
        pi = frame.pi.value(X)
        alpha = spherical_connection(prof("Phi"), prof("A")).value(X)
        chart = frame.chart
        g = chart.metric(X)
        gv = J.value(g)
        K = curvature_values(alpha)
        F = tuple(k - x.truncate(k.order).scale(m * m) for k, x in zip(K, pi))
        S = tuple(a + b for a, b in zip(d_triplet(pi), cross_wedge(alpha, pi)))
        star = tuple(hodge_values(x, g, chart.volume(X)) for x in pi)
        Sd = covariant_d(alpha, star)

        def ortho(trip, deriv=None):
            fac = orthonormal_factors(trip[0].degree, gv)
            vals = []
            for t in trip:
                c = t.comps if deriv is None else t.comps.partial(deriv)
                vals.append(np.asarray(J.value(c)) * fac)
            return np.concatenate(vals).ravel()

        return ortho(F), ortho(F, deriv=1), ortho(S), ortho(Sd)

    blocks = [np.zeros((len(b), base.size)) for b in rows(base)]
    for j in range(base.size):
        step = h * max(1.0, abs(base[j]))
        up, dn = base.copy(), base.copy()
        up[j] += step
        dn[j] -= step
        for blk, a, b in zip(blocks, rows(up), rows(dn)):
            blk[:, j] = (a - b) / (2 * step)

    def rank(*mats):
        M = np.vstack(mats)
        sv = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0

    # the quartet is D pi = 0 (two relations) together with D *pi = 0 (two more)
    F, dF, S, Sd = blocks
    r_field = rank(F, dF)
    r_all = rank(F, dF, S, Sd)
    r_quartet = rank(S, Sd)
    return {"rank_field": r_field, "rank_all": r_all, "rank_quartet": r_quartet,
            "implied": r_quartet - (r_all - r_field)}
