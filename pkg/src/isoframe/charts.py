"""Coordinate charts with diagonal Lorentzian metrics and the Hodge star."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jets as J
from .expressions import compile_expression
from .forms import DIM, DifferentialForm, FormValue, hodge_values

DEFAULT_MARGIN = 1e-6
DEGENERACY_TOL = 1e-14


class SingularChartError(ValueError):
    pass


class UnknownChartError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Chart:
    """A named coordinate system with a diagonal metric of signature (+,-,-,-).

    ``metric_rule`` maps a coordinate array (or coordinate jets) of shape
    ``(4, *batch)`` to the four diagonal metric components.
    """

    name: str
    coords: tuple
    metric_rule: Callable
    domain: tuple
    params: dict = field(default_factory=dict)

    def metric(self, X):
        g = self.metric_rule(X)
        return J.stack([J.full_like(X[0], 0.0) + gi for gi in g])

    def metric_values(self, points) -> np.ndarray:
        return J.value(self.metric(np.asarray(points, dtype=float)))

    def check_points(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape[0] != DIM:
            raise ValueError(f"points must have leading dimension {DIM}")
        for v, (lo, hi) in enumerate(self.domain):
            x = points[v]
            if np.any(~np.isfinite(x)) or np.any(x <= lo) or np.any(x >= hi):
                raise ValueError(f"coordinate {self.coords[v]} outside ({lo}, {hi}) in chart {self.name}")

    def contains(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        ok = np.ones(points.shape[1:], dtype=bool)
        for v, (lo, hi) in enumerate(self.domain):
            ok &= (points[v] > lo) & (points[v] < hi)
        return ok

    def volume(self, X):
        """sqrt(-det g) on coordinate arrays or jets."""
        g = self.metric(X)
        gv = J.value(g)
        if np.any(np.abs(gv) <= DEGENERACY_TOL):
            raise SingularChartError(f"metric of chart {self.name} degenerates at a sampled point")
        det = g[0] * g[1] * g[2] * g[3]
        return J.sqrt(-det)

    def signature_ok(self, points) -> np.ndarray:
        g = self.metric_values(points)
        return (g[0] > 0) & np.all(g[1:] < 0, axis=0)

    def __repr__(self):
        return f"Chart({self.name!r}, coords={self.coords})"


@dataclass(frozen=True)
class CoordinatePoint:
    chart: Chart
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != DIM:
            raise ValueError("a coordinate point has four values")
        object.__setattr__(self, "values", vals)
        self.chart.check_points(np.array(vals))

    def array(self) -> np.ndarray:
        return np.array(self.values)


def _points(x):
    if isinstance(x, CoordinatePoint):
        return x.array()
    return np.asarray(x, dtype=float)


def _flat_rule(X):
    one = J.ones_like(X[0])
    return (one, -one, -one, -one)


def _spherical_rule(X):
    _, r, th, _ = X
    one = J.ones_like(r)
    return (one, -one, -r * r, -(r * J.sin(th)) ** 2)


def _cylindrical_rule(X):
    _, _, rho, _ = X
    one = J.ones_like(rho)
    return (one, -one, -one, -rho * rho)


def _cone_rule(X):
    zeta, eta, th, _ = X
    one = J.ones_like(zeta)
    sh = J.sinh(eta)
    return (one, -zeta * zeta, -(zeta * sh) ** 2, -(zeta * sh * J.sin(th)) ** 2)


def builtin_chart(kind: str, psi: float = 0.0, margin: float = DEFAULT_MARGIN) -> Chart:
    """Return one of the built-in charts.

    kinds: ``cartesian`` (t,x,y,z), ``spherical`` (t,r,theta,phi),
    ``cylindrical`` (t,z,rho,phi), ``boosted_cylindrical`` (T,Z,rho,phi) with
    boost rapidity ``psi``, and ``cone`` (zeta,eta,theta,phi).
    """
    inf = math.inf
    free = (-inf, inf)
    if kind == "cartesian":
        return Chart("cartesian", ("t", "x", "y", "z"), _flat_rule, (free,) * 4)
    if kind == "spherical":
        return Chart("spherical", ("t", "r", "theta", "phi"), _spherical_rule,
                     (free, (margin, inf), (margin, math.pi - margin), free))
    if kind == "cylindrical":
        return Chart("cylindrical", ("t", "z", "rho", "phi"), _cylindrical_rule,
                     (free, free, (margin, inf), free))
    if kind == "boosted_cylindrical":
        if not math.isfinite(psi):
            raise ValueError("boost rapidity must be finite")
        return Chart("boosted_cylindrical", ("T", "Z", "rho", "phi"), _cylindrical_rule,
                     (free, free, (margin, inf), free), {"psi": float(psi)})
    if kind == "cone":
        return Chart("cone", ("zeta", "eta", "theta", "phi"), _cone_rule,
                     ((margin, inf), (margin, inf), (margin, math.pi - margin), free))
    raise UnknownChartError(f"unknown chart kind {kind!r}")


def boost_coordinates(t, z, psi):
    """Rest-frame time T and longitudinal coordinate S of a wave boosted by ``psi``."""
    T = t * math.cosh(psi) - z * math.sinh(psi)
    S = -z * math.cosh(psi) + t * math.sinh(psi)
    return T, S


def chart_from_description(desc) -> Chart:
    """Load a chart from a dict or JSON text with coords, metric_diag and domain."""
    if isinstance(desc, str):
        desc = json.loads(desc)
    coords = tuple(desc["coords"])
    if len(coords) != DIM:
        raise ValueError("a chart needs four coordinates")
    constants = desc.get("constants", {})
    exprs = [compile_expression(e, coords, constants) for e in desc["metric_diag"]]
    if len(exprs) != DIM:
        raise ValueError("metric_diag needs four expressions")
    domain = []
    for lo, hi in desc.get("domain", [[None, None]] * DIM):
        domain.append((-math.inf if lo is None else float(lo), math.inf if hi is None else float(hi)))

    def rule(X):
        return tuple(e(*X) for e in exprs)

    return Chart(desc.get("name", "custom"), coords, rule, tuple(domain))


def levi_civita_density(chart: Chart, x) -> np.ndarray:
    """sqrt(-det g) at a point or batch of points."""
    pts = _points(x)
    chart.check_points(pts)
    return np.asarray(chart.volume(pts), dtype=float)


def hodge_star(chart: Chart, x, w) -> FormValue:
    """Hodge dual of ``w`` at ``x``.

    ``w`` is a :class:`DifferentialForm` on ``chart`` or a :class:`FormValue`
    already evaluated at ``x``.
    """
    pts = _points(x)
    chart.check_points(pts)
    if isinstance(w, DifferentialForm):
        w = w.value(pts)
    g = chart.metric(pts)
    return hodge_values(w, g, chart.volume(pts))


def star_form(w: DifferentialForm) -> DifferentialForm:
    """Field-level Hodge star; derivatives propagate through the jets."""
    chart = w.chart

    def rule(X):
        return hodge_values(w.value(X), chart.metric(X), chart.volume(X))

    return DifferentialForm(chart, DIM - w.degree, rule, w.depth)
