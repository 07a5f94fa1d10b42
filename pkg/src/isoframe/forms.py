"""Differential forms on a four-dimensional chart.

Two layers live here.  :class:`FormValue` holds the components of a p-form at
a batch of points, either as plain arrays or as :class:`~isoframe.jets.Jet`
objects carrying derivatives.  :class:`DifferentialForm` is a field: a chart
plus a rule producing a ``FormValue`` from coordinate jets.

A p-form is stored as ``sum_{I ascending} w_I dx^I``; component ``k`` of a
``FormValue`` refers to ``COMBOS[p][k]``.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from . import jets as J
from .expressions import compile_expression

DIM = 4
COMBOS = {p: list(itertools.combinations(range(DIM), p)) for p in range(DIM + 1)}
INDEX = {p: {I: k for k, I in enumerate(COMBOS[p])} for p in range(DIM + 1)}


class DegreeOverflow(ValueError):
    pass


def permutation_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] == seq[j]:
                return 0
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _ncomp(p):
    return len(COMBOS[p])


def _gather(x, idx):
    """Select entries along the component axis of a jet or array."""
    if J.is_jet(x):
        return J.Jet(x.coef[:, idx], x.nvars, x.order)
    return np.asarray(x)[idx]


def _contract(S, x):
    """Apply the matrix ``S`` (nout, npair) along the component axis."""
    if J.is_jet(x):
        out = np.tensordot(S, x.coef, axes=([1], [1]))
        return J.Jet(np.moveaxis(out, 0, 1), x.nvars, x.order)
    return np.tensordot(S, np.asarray(x), axes=([1], [0]))


@lru_cache(maxsize=None)
def _wedge_table(p, q):
    rows, ia, ib = [], [], []
    for i, I in enumerate(COMBOS[p]):
        for j, K in enumerate(COMBOS[q]):
            if set(I) & set(K):
                continue
            out = tuple(sorted(I + K))
            rows.append((INDEX[p + q][out], permutation_sign(I + K)))
            ia.append(i)
            ib.append(j)
    S = np.zeros((_ncomp(p + q), len(rows)))
    for col, (k, s) in enumerate(rows):
        S[k, col] = s
    return np.array(ia, dtype=np.intp), np.array(ib, dtype=np.intp), S


@lru_cache(maxsize=None)
def _d_table(p):
    vs, src, rows = [], [], []
    for k, K in enumerate(COMBOS[p + 1]):
        for pos, v in enumerate(K):
            rest = K[:pos] + K[pos + 1:]
            vs.append(v)
            src.append(INDEX[p][rest])
            rows.append((k, (-1) ** pos))
    S = np.zeros((_ncomp(p + 1), len(rows)))
    for col, (k, s) in enumerate(rows):
        S[k, col] = s
    return np.array(vs, dtype=np.intp), np.array(src, dtype=np.intp), S


@lru_cache(maxsize=None)
def hodge_table(p):
    """For each input slot I: (output slot J, sign of the permutation I+J)."""
    out = []
    for I in COMBOS[p]:
        comp = tuple(i for i in range(DIM) if i not in I)
        out.append((INDEX[DIM - p][comp], permutation_sign(I + comp)))
    return out


class FormValue:
    """Components of a p-form at a batch of points."""

    __slots__ = ("degree", "comps")

    def __init__(self, degree: int, comps):
        if not 0 <= degree <= DIM:
            raise DegreeOverflow(f"degree {degree} outside 0..{DIM}")
        if not J.is_jet(comps):
            comps = np.asarray(comps, dtype=float)
        if len(comps) != _ncomp(degree):
            raise ValueError(f"a {degree}-form has {_ncomp(degree)} components, got {len(comps)}")
        self.degree = degree
        self.comps = comps

    @classmethod
    def from_list(cls, degree, items):
        return cls(degree, J.stack(items))

    @classmethod
    def zero(cls, degree, like):
        z = J.zeros_like(like)
        return cls.from_list(degree, [z] * _ncomp(degree))

    @property
    def values(self) -> np.ndarray:
        return J.value(self.comps)

    @property
    def order(self):
        return self.comps.order if J.is_jet(self.comps) else 0

    def component(self, index) -> object:
        return self.comps[INDEX[self.degree][tuple(index)]]

    def __getitem__(self, index):
        return self.component(index)

    def dense(self) -> np.ndarray:
        """Fully antisymmetric array of shape (4,)*p + batch (values only)."""
        vals = self.values
        out = np.zeros((DIM,) * self.degree + vals.shape[1:])
        for k, I in enumerate(COMBOS[self.degree]):
            for perm in itertools.permutations(range(self.degree)):
                idx = tuple(I[i] for i in perm)
                out[idx] = permutation_sign(perm) * vals[k]
        return out

    def _check(self, other):
        if not isinstance(other, FormValue) or other.degree != self.degree:
            raise ValueError("forms of equal degree required")

    def __add__(self, other):
        self._check(other)
        return FormValue(self.degree, self.comps + other.comps)

    def __sub__(self, other):
        self._check(other)
        return FormValue(self.degree, self.comps - other.comps)

    def __neg__(self):
        return FormValue(self.degree, -self.comps)

    def scale(self, factor):
        """Multiply by a scalar (number, array over the batch, or jet)."""
        if J.is_jet(factor) and not J.is_jet(self.comps):
            return FormValue(self.degree, factor * self.comps)
        return FormValue(self.degree, self.comps * factor)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def truncate(self, order):
        if not J.is_jet(self.comps):
            return self
        return FormValue(self.degree, self.comps.truncate(order))

    def __repr__(self):
        return f"FormValue(degree={self.degree}, batch={self.values.shape[1:]})"


def wedge_values(a: FormValue, b: FormValue) -> FormValue:
    p, q = a.degree, b.degree
    if p + q > DIM:
        raise DegreeOverflow(f"wedge of degrees {p} and {q} exceeds {DIM}")
    ia, ib, S = _wedge_table(p, q)
    if J.is_jet(a.comps) or J.is_jet(b.comps):
        prod = _as_jet(_gather(a.comps, ia), b.comps) * _gather(b.comps, ib)
    else:
        prod = _gather(a.comps, ia) * _gather(b.comps, ib)
    return FormValue(p + q, _contract(S, prod))


def _as_jet(x, ref):
    if J.is_jet(x) or not J.is_jet(ref):
        return x
    return J.Jet.constant(x, ref.nvars, ref.order)


def d_values(w: FormValue) -> FormValue:
    """Exterior derivative of a form whose components are coordinate jets."""
    p = w.degree
    if p + 1 > DIM:
        raise DegreeOverflow("exterior derivative of a top form")
    if not J.is_jet(w.comps):
        raise J.DerivativeUnavailable("components carry no derivative information")
    vs, src, S = _d_table(p)
    partials = J.stack([w.comps.partial(v) for v in range(DIM)])
    gathered = J.Jet(partials.coef[:, vs, src], partials.nvars, partials.order)
    return FormValue(p + 1, _contract(S, gathered))


def hodge_values(w: FormValue, metric, volume) -> FormValue:
    """(*w)_J = sign(I,J) vol prod_{i in I} g^{ii} w_I for a diagonal metric."""
    p = w.degree
    ginv = [1.0 / metric[i] for i in range(DIM)]
    out = [None] * _ncomp(DIM - p)
    for k, (slot, sign) in enumerate(hodge_table(p)):
        fac = volume * sign
        for i in COMBOS[p][k]:
            fac = fac * ginv[i]
        out[slot] = w.comps[k] * fac
    return FormValue.from_list(DIM - p, out)


# ---- fields --------------------------------------------------------------

def finite_difference_field(fn, domain=None):
    """Wrap an opaque scalar function of four coordinate arrays.

    The result accepts coordinate jets and returns an order-1 jet whose first
    partials come from central differences with step cbrt(eps)*max(1,|x|).
    """
    h0 = np.cbrt(np.finfo(float).eps)

    def field(X):
        if not J.is_jet(X):
            return np.asarray(fn(*X), dtype=float)
        x = X.value
        f0 = np.asarray(fn(*x), dtype=float)
        f0 = np.broadcast_to(f0, x.shape[1:])
        order = min(1, X.order)
        b = J.basis(X.nvars, order)
        coef = np.zeros((b.ncoef,) + f0.shape)
        coef[0] = f0
        if order:
            for v in range(DIM):
                h = h0 * np.maximum(1.0, np.abs(x[v]))
                if domain is not None:
                    lo, hi = domain[v]
                    if np.any(x[v] - h <= lo) or np.any(x[v] + h >= hi):
                        raise J.DerivativeUnavailable(
                            f"finite-difference stencil leaves the domain along coordinate {v}")
                xp, xm = x.copy(), x.copy()
                xp[v] += h
                xm[v] -= h
                coef[b.unit(v)] = (np.asarray(fn(*xp)) - np.asarray(fn(*xm))) / (2 * h)
        return J.Jet(coef, X.nvars, order)

    return field


def scalar_field(spec, coords, constants=None, domain=None):
    """Normalize a component description to a callable on coordinate jets.

    ``spec`` may be a number, an expression string over ``coords``, or a
    callable taking the four coordinates.  Callables that cannot digest jets
    are differentiated by central differences.
    """
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda X: J.full_like(X[0], c)
    if isinstance(spec, str):
        expr = compile_expression(spec, coords, constants)
        return lambda X: expr(*X)
    if callable(spec):
        fd = finite_difference_field(spec, domain)

        def field(X):
            if J.is_jet(X):
                try:
                    out = spec(*X)
                except (TypeError, AttributeError):
                    return fd(X)
                if J.is_jet(out):
                    return out
                return fd(X)
            return np.asarray(spec(*X), dtype=float)

        return field
    raise TypeError(f"cannot interpret {spec!r} as a scalar field")


class DifferentialForm:
    """A p-form field on a chart, evaluated through coordinate jets."""

    def __init__(self, chart, degree: int, rule, depth: int = 0):
        if not 0 <= degree <= DIM:
            raise DegreeOverflow(f"degree {degree} outside 0..{DIM}")
        self.chart = chart
        self.degree = degree
        self._rule = rule
        # number of exterior derivatives applied; sets the jet order for plain values
        self.depth = depth

    @classmethod
    def from_components(cls, chart, degree, components, constants=None):
        """Build from ``{ascending index tuple: scalar spec}``; missing slots are zero."""
        fields = {}
        for key, spec in components.items():
            key = tuple(key)
            if key not in INDEX[degree]:
                raise ValueError(f"{key} is not an ascending index tuple of length {degree}")
            fields[key] = scalar_field(spec, chart.coords, constants, chart.domain)

        def rule(X):
            zero = J.zeros_like(X[0])
            return FormValue.from_list(degree, [fields[I](X) if I in fields else zero
                                                for I in COMBOS[degree]])

        return cls(chart, degree, rule)

    @classmethod
    def basis_form(cls, chart, index):
        index = tuple(index)
        return cls.from_components(chart, len(index), {index: 1.0})

    def value(self, X) -> FormValue:
        return self._rule(X)

    def at(self, points, order: int = 1) -> FormValue:
        points = np.asarray(points, dtype=float)
        self.chart.check_points(points)
        return self.value(J.Jet.variables(points, order))

    def components(self, points) -> np.ndarray:
        return self.at(points, order=self.depth).values

    def _same_chart(self, other):
        if other.chart is not self.chart and other.chart != self.chart:
            raise ValueError("forms live on different charts")

    def __add__(self, other):
        self._same_chart(other)
        return DifferentialForm(self.chart, self.degree, lambda X: self.value(X) + other.value(X),
                                 max(self.depth, other.depth))

    def __sub__(self, other):
        self._same_chart(other)
        return DifferentialForm(self.chart, self.degree, lambda X: self.value(X) - other.value(X),
                                 max(self.depth, other.depth))

    def __neg__(self):
        return DifferentialForm(self.chart, self.degree, lambda X: -self.value(X), self.depth)

    def scale(self, factor):
        """Multiply by a number or by a scalar field spec."""
        if isinstance(factor, (int, float)):
            return DifferentialForm(self.chart, self.degree, lambda X: self.value(X).scale(factor),
                                     self.depth)
        f = scalar_field(factor, self.chart.coords, domain=self.chart.domain)
        return DifferentialForm(self.chart, self.degree, lambda X: self.value(X).scale(f(X)),
                                 self.depth)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    if a.degree + b.degree > DIM:
        raise DegreeOverflow(f"wedge of degrees {a.degree} and {b.degree} exceeds {DIM}")
    a._same_chart(b)
    return DifferentialForm(a.chart, a.degree + b.degree,
                            lambda X: wedge_values(a.value(X), b.value(X)),
                            max(a.depth, b.depth))


def exterior_derivative(w: DifferentialForm) -> DifferentialForm:
    if w.degree == DIM:
        raise DegreeOverflow("exterior derivative of a top form")
    return DifferentialForm(w.chart, w.degree + 1, lambda X: d_values(w.value(X)),
                            w.depth + 1)
