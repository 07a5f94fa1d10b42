"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` stores the Taylor coefficients of an array-valued function
around a batch of base points, truncated at a total order ``N``.  Arithmetic
and elementary functions propagate the coefficients exactly, so partial
derivatives of composite expressions are available to rounding accuracy.

Coefficients live in an array of shape ``(ncoef, *shape)`` where the first
axis enumerates monomials ``x^e`` graded by total degree.  The coefficient of
``x^e`` equals ``(d^e f) / e!``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


class DerivativeUnavailable(ValueError):
    """Raised when a derivative is requested beyond the order a jet carries."""


class _Basis:
    """Monomial bookkeeping for ``nvars`` variables up to total order ``order``."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        # combinations_with_replacement yields each exponent exactly once per degree
        self.exps = exps
        self.index = {e: k for k, e in enumerate(exps)}
        self.ncoef = len(exps)
        self.degree = np.array([sum(e) for e in exps])
        self.sizes = [sum(1 for e in exps if sum(e) <= d) for d in range(order + 1)]

        # product table: pairs (i, j) with deg_i + deg_j <= order, grouped by target k
        triples = []
        for i, ei in enumerate(exps):
            for j, ej in enumerate(exps):
                if self.degree[i] + self.degree[j] <= order:
                    k = self.index[tuple(a + b for a, b in zip(ei, ej))]
                    triples.append((k, i, j))
        triples.sort()
        t = np.array(triples, dtype=np.intp)
        self.mul_k, self.mul_i, self.mul_j = t[:, 0], t[:, 1], t[:, 2]
        self.mul_starts = np.searchsorted(self.mul_k, np.arange(self.ncoef))
        nz = self.degree[self.mul_i] > 0
        self.tail_k, self.tail_i, self.tail_j = self.mul_k[nz], self.mul_i[nz], self.mul_j[nz]

        # partial derivatives: source monomial k -> target in the order-1 basis
        self.partials = []
        for v in range(nvars):
            src, dst, fac = [], [], []
            for k, e in enumerate(exps):
                if e[v] > 0 and sum(e) <= order:
                    lower = list(e)
                    lower[v] -= 1
                    src.append(k)
                    dst.append(self.index[tuple(lower)])
                    fac.append(e[v])
            self.partials.append((np.array(src, dtype=np.intp), np.array(dst, dtype=np.intp),
                                  np.array(fac, dtype=float)))

    def unit(self, v: int) -> int:
        e = [0] * self.nvars
        e[v] = 1
        return self.index[tuple(e)]


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


def _expand(coef: np.ndarray, ndim: int) -> np.ndarray:
    """Insert singleton axes after the coefficient axis so trailing dims align."""
    extra = ndim - (coef.ndim - 1)
    if extra <= 0:
        return coef
    return coef.reshape(coef.shape[:1] + (1,) * extra + coef.shape[1:])


class Jet:
    """Array of truncated Taylor expansions sharing variables and order."""

    __array_priority__ = 1000
    __slots__ = ("coef", "nvars", "order")

    def __init__(self, coef, nvars: int, order: int):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[0] != basis(nvars, order).ncoef:
            raise ValueError("coefficient count does not match basis")
        self.coef = coef
        self.nvars = nvars
        self.order = order

    # ---- construction -------------------------------------------------
    @classmethod
    def variables(cls, point, order: int) -> "Jet":
        """Coordinate jets: component ``v`` is ``x_v`` expanded about ``point[v]``."""
        point = np.asarray(point, dtype=float)
        nv = point.shape[0]
        b = basis(nv, order)
        coef = np.zeros((b.ncoef,) + point.shape)
        coef[0] = point
        if order >= 1:
            for v in range(nv):
                coef[b.unit(v), v] = 1.0
        return cls(coef, nv, order)

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        coef = np.zeros((basis(nvars, order).ncoef,) + value.shape)
        coef[0] = value
        return cls(coef, nvars, order)

    def like(self, value) -> "Jet":
        return Jet.constant(value, self.nvars, self.order)

    # ---- array protocol -------------------------------------------------
    @property
    def shape(self):
        return self.coef.shape[1:]

    @property
    def ndim(self):
        return self.coef.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coef[0]

    def __len__(self):
        return self.coef.shape[1]

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.coef[(slice(None),) + idx], self.nvars, self.order)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.coef.reshape((self.coef.shape[0],) + tuple(shape)), self.nvars, self.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise DerivativeUnavailable(f"jet carries order {self.order}, {order} requested")
        if order == self.order:
            return self
        n = basis(self.nvars, self.order).sizes[order]
        return Jet(self.coef[:n], self.nvars, order)

    def derivative(self, multi_index) -> np.ndarray:
        """Partial derivative ``d^e`` evaluated at the base points."""
        e = tuple(multi_index)
        if sum(e) > self.order:
            raise DerivativeUnavailable(f"order {sum(e)} derivative from order {self.order} jet")
        k = basis(self.nvars, self.order).index[e]
        return self.coef[k] * math.prod(math.factorial(n) for n in e)

    def gradient(self) -> np.ndarray:
        """First partials, shape ``(nvars, *shape)``."""
        if self.order < 1:
            raise DerivativeUnavailable("gradient of an order-0 jet")
        b = basis(self.nvars, self.order)
        return np.stack([self.coef[b.unit(v)] for v in range(self.nvars)])

    def partial(self, v: int) -> "Jet":
        """Partial derivative along variable ``v``; the result has one order less."""
        if self.order < 1:
            raise DerivativeUnavailable("derivative of an order-0 jet")
        src, dst, fac = basis(self.nvars, self.order).partials[v]
        out = np.zeros((basis(self.nvars, self.order - 1).ncoef,) + self.shape)
        out[dst] = self.coef[src] * fac.reshape((-1,) + (1,) * self.ndim)
        return Jet(out, self.nvars, self.order - 1)

    # ---- arithmetic -------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, None

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is None:
            other = np.asarray(other, dtype=float)
            shape = np.broadcast_shapes(a.shape, other.shape)
            coef = np.zeros(a.coef.shape[:1] + shape)
            coef[:] = _expand(a.coef, len(shape))
            coef[0] += other
            return Jet(coef, a.nvars, a.order)
        nd = max(a.ndim, b.ndim)
        return Jet(_expand(a.coef, nd) + _expand(b.coef, nd), a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coef, self.nvars, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            other = np.asarray(other, dtype=float)
            nd = max(a.ndim, other.ndim)
            return Jet(_expand(a.coef, nd) * other, a.nvars, a.order)
        bs = basis(a.nvars, a.order)
        nd = max(a.ndim, b.ndim)
        ca, cb = _expand(a.coef, nd), _expand(b.coef, nd)
        prod = ca[bs.mul_i] * cb[bs.mul_j]
        return Jet(np.add.reduceat(prod, bs.mul_starts, axis=0), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            result = self.like(np.ones(self.shape))
            base = self
            k = int(n)
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        if isinstance(n, (int, np.integer)):
            return reciprocal(self ** (-int(n)))
        if isinstance(n, Jet):
            return exp(n * log(self))
        return power(self, float(n))

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"


# ---- elementary functions --------------------------------------------

def _compose(x: Jet, taylor) -> Jet:
    """Evaluate ``f(x)`` given ``taylor(x0, N)`` returning ``f^(n)(x0)/n!`` for n<=N."""
    x0 = x.coef[0]
    c = taylor(x0, x.order)
    delta = Jet(x.coef.copy(), x.nvars, x.order)
    delta.coef[0] = 0.0
    result = delta.like(c[x.order])
    for n in range(x.order - 1, -1, -1):
        result = result * delta + c[n]
    return result


def _factorials(n):
    return np.array([math.factorial(k) for k in range(n + 1)], dtype=float)


def _cyclic(vals, x0, N):
    fact = _factorials(N)
    return [vals[n % 4] / fact[n] for n in range(N + 1)]


def _sin_t(x0, N):
    s, c = np.sin(x0), np.cos(x0)
    return _cyclic([s, c, -s, -c], x0, N)


def _cos_t(x0, N):
    s, c = np.sin(x0), np.cos(x0)
    return _cyclic([c, -s, -c, s], x0, N)


def _sinh_t(x0, N):
    s, c = np.sinh(x0), np.cosh(x0)
    return _cyclic([s, c, s, c], x0, N)


def _cosh_t(x0, N):
    s, c = np.sinh(x0), np.cosh(x0)
    return _cyclic([c, s, c, s], x0, N)


def _exp_t(x0, N):
    e = np.exp(x0)
    fact = _factorials(N)
    return [e / fact[n] for n in range(N + 1)]


def _log_t(x0, N):
    out = [np.log(x0)]
    for n in range(1, N + 1):
        out.append((-1.0) ** (n + 1) / (n * x0 ** n))
    return out


def _power_t(a):
    def taylor(x0, N):
        out = []
        binom = 1.0
        for n in range(N + 1):
            out.append(binom * x0 ** (a - n))
            binom *= (a - n) / (n + 1)
        return out
    return taylor


def _dispatch(np_func, taylor):
    def f(x):
        if isinstance(x, Jet):
            return _compose(x, taylor)
        return np_func(x)
    f.__name__ = np_func.__name__
    return f


sin = _dispatch(np.sin, _sin_t)
cos = _dispatch(np.cos, _cos_t)
sinh = _dispatch(np.sinh, _sinh_t)
cosh = _dispatch(np.cosh, _cosh_t)
exp = _dispatch(np.exp, _exp_t)
log = _dispatch(np.log, _log_t)


def power(x, a: float):
    if isinstance(x, Jet):
        return _compose(x, _power_t(float(a)))
    return np.power(x, a)


def sqrt(x):
    return power(x, 0.5)


def reciprocal(x):
    return power(x, -1.0)


def tan(x):
    return sin(x) / cos(x)


def tanh(x):
    return sinh(x) / cosh(x)


# ---- structural helpers ------------------------------------------------

def is_jet(x) -> bool:
    return isinstance(x, Jet)


def value(x):
    """Base-point values of a jet or the array itself."""
    return x.coef[0] if isinstance(x, Jet) else np.asarray(x, dtype=float)


def stack(items, axis: int = 0):
    """Stack jets (or plain arrays) along a new axis of the value shape."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack([np.asarray(it, dtype=float) for it in items], axis=axis)
    order = min(j.order for j in jets)
    nvars = jets[0].nvars
    shape = np.broadcast_shapes(*[np.shape(value(it)) for it in items])
    coefs = []
    for it in items:
        if not isinstance(it, Jet):
            it = Jet.constant(it, nvars, order)
        c = it.truncate(order).coef
        coefs.append(np.broadcast_to(_expand(c, len(shape)), c.shape[:1] + shape))
    ax = axis + 1 if axis >= 0 else axis
    return Jet(np.stack(coefs, axis=ax), nvars, order)


def zeros_like(x):
    if isinstance(x, Jet):
        return Jet(np.zeros_like(x.coef), x.nvars, x.order)
    return np.zeros_like(np.asarray(x, dtype=float))


def ones_like(x):
    if isinstance(x, Jet):
        return x.like(np.ones(x.shape))
    return np.ones_like(np.asarray(x, dtype=float))


def full_like(x, c):
    if isinstance(x, Jet):
        return x.like(np.full(x.shape, float(c)))
    return np.full(np.shape(x), float(c))


def antiderivative(x: Jet) -> Jet:
    """Univariate integral with zero constant term, truncated to the same order."""
    if x.nvars != 1:
        raise ValueError("antiderivative is defined for univariate jets")
    out = np.zeros_like(x.coef)
    n = np.arange(1, x.order + 1, dtype=float).reshape((-1,) + (1,) * x.ndim)
    out[1:] = x.coef[:-1] / n
    return Jet(out, 1, x.order)


def taylor_coefficients(x: Jet) -> np.ndarray:
    """Coefficients of a univariate jet, shape ``(order+1, *shape)``."""
    if x.nvars != 1:
        raise ValueError("univariate jet expected")
    return x.coef


def compose_series(coeffs: np.ndarray, delta: Jet) -> Jet:
    """Evaluate ``sum_n coeffs[n] * delta**n`` with Horner's rule."""
    N = min(coeffs.shape[0] - 1, delta.order)
    result = delta.like(coeffs[N])
    for n in range(N - 1, -1, -1):
        result = result * delta + coeffs[n]
    return result
