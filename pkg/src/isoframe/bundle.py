"""Isotopic frames: connection solve, curvature, residuals and observables.

A frame is an iso-triplet of 2-forms ``pi^a``.  The connection ``alpha^a`` is
the unique solution of the linear system

    d pi^a + eps_abc alpha^b ^ pi^c = 0,

twelve equations (four 3-form slots times three iso labels) for the twelve
components ``alpha^b_i``.  The solve is carried out on jets, coefficient by
coefficient, so the connection comes with exact derivatives.
"""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .forms import (COMBOS, DIM, INDEX, DifferentialForm, FormValue, d_values,
                    hodge_values, wedge_values)

DEFAULT_MAX_CONDITION = 1e8


class DegenerateFrameError(ValueError):
    """The structure matrix is singular or too ill-conditioned to solve."""

    def __init__(self, message, condition=np.inf, point=None):
        super().__init__(message)
        self.condition = float(condition)
        self.point = point


class GaugeError(ValueError):
    pass


def levi_civita3():
    eps = np.zeros((3, 3, 3))
    for a, b, c in itertools.permutations(range(3)):
        eps[a, b, c] = np.linalg.det(np.eye(3)[[a, b, c]])
    return eps


EPS3 = levi_civita3()


# ---- iso-triplets --------------------------------------------------------

class IsoTripletForm:
    """Three forms of one degree on one chart, labelled a = 1, 2, 3."""

    def __init__(self, chart, degree, rule):
        self.chart = chart
        self.degree = degree
        self._rule = rule

    @classmethod
    def from_forms(cls, forms):
        forms = tuple(forms)
        if len(forms) != 3:
            raise ValueError("an iso-triplet has three members")
        if len({f.degree for f in forms}) != 1:
            raise ValueError("iso-triplet members must share a degree")
        chart = forms[0].chart
        if any(f.chart is not chart for f in forms):
            raise ValueError("iso-triplet members must share a chart")
        return cls(chart, forms[0].degree, lambda X: tuple(f.value(X) for f in forms))

    def value(self, X):
        return self._rule(X)

    def at(self, points, order=1):
        points = np.asarray(points, dtype=float)
        return self.value(J.Jet.variables(points, order))

    def member(self, a) -> DifferentialForm:
        """Form with iso label ``a`` (1-based)."""
        return DifferentialForm(self.chart, self.degree, lambda X: self.value(X)[a - 1])


def cross_wedge(a, b):
    """eps_abc a^b ^ b^c for value triplets."""
    w = [[None] * 3 for _ in range(3)]

    def wv(i, j):
        if w[i][j] is None:
            w[i][j] = wedge_values(a[i], b[j])
        return w[i][j]

    return tuple(wv((k + 1) % 3, (k + 2) % 3) - wv((k + 2) % 3, (k + 1) % 3) for k in range(3))


def d_triplet(w):
    return tuple(d_values(x) for x in w)


def covariant_d(alpha, w):
    """D w^a = d w^a + eps_abc alpha^b ^ w^c on value triplets."""
    dw = d_triplet(w)
    cw = cross_wedge(alpha, w)
    return tuple(x.truncate(min(x.order, y.order)) + y.truncate(min(x.order, y.order))
                 for x, y in zip(dw, cw))


def curvature_values(alpha):
    """K^a = d alpha^a + 1/2 eps_abc alpha^b ^ alpha^c."""
    da = d_triplet(alpha)
    aa = cross_wedge(alpha, alpha)
    return tuple(x + y.truncate(x.order).scale(0.5) for x, y in zip(da, aa))


def curvature(alpha: IsoTripletForm) -> IsoTripletForm:
    return IsoTripletForm(alpha.chart, 2, lambda X: curvature_values(alpha.value(X)))


def covariant_derivative(alpha: IsoTripletForm, w: IsoTripletForm) -> IsoTripletForm:
    return IsoTripletForm(alpha.chart, w.degree + 1,
                          lambda X: covariant_d(alpha.value(X), w.value(X)))


# ---- structure matrix ------------------------------------------------------

def _structure_tensor():
    """T[row, unknown, c, slot] with row = 4a + k (3-form slot k), unknown = 4b + i."""
    T = np.zeros((12, 12, 3, 6))
    for k, K in enumerate(COMBOS[3]):
        for pos, i in enumerate(K):
            rest = K[:pos] + K[pos + 1:]
            slot = INDEX[2][rest]
            sign = (-1) ** pos
            for a, b, c in itertools.permutations(range(3)):
                T[4 * a + k, 4 * b + i, c, slot] += EPS3[a, b, c] * sign
    return T


STRUCTURE_TENSOR = _structure_tensor()


def _stack_triplet(w):
    return J.stack([x.comps for x in w])


def structure_matrix(pi):
    """12x12 matrix M with (M alpha)_row = (eps alpha ^ pi)_row; jets or arrays."""
    P = _stack_triplet(pi)
    if J.is_jet(P):
        out = np.tensordot(STRUCTURE_TENSOR, P.coef, axes=([2, 3], [1, 2]))
        return J.Jet(np.moveaxis(out, 2, 0), P.nvars, P.order)
    return np.tensordot(STRUCTURE_TENSOR, np.asarray(P), axes=([2, 3], [0, 1]))


def _batched(mat):
    """(12, 12, *b) -> (B, 12, 12)."""
    return np.moveaxis(mat.reshape(12, 12, -1), -1, 0)


def _solve_scaled(M0, rhs, valid):
    """Column-equilibrated batched solve; degenerate entries return zeros."""
    out = np.zeros_like(rhs)
    if np.any(valid):
        Ms = M0[valid]
        out[valid] = np.linalg.solve(Ms, rhs[valid][..., None])[..., 0]
    return out


def solve_structure(pi, dpi, max_condition=DEFAULT_MAX_CONDITION):
    """Solve for the connection at jet level.

    Returns ``(alpha_jet, cond, valid)`` with ``alpha_jet`` of shape (12, *batch)
    (unknown 4b+i is alpha^b_i), the condition number of the column-scaled
    structure matrix and a mask of the non-degenerate points.
    """
    order = min(x.order for x in dpi)
    M = structure_matrix(tuple(x.truncate(order) for x in pi))
    b = -_stack_triplet(dpi).reshape(12, *dpi[0].comps.shape[1:])
    if not J.is_jet(M):
        M = J.Jet.constant(M, b.nvars, 0)
    M = M.truncate(order)
    b = b.truncate(order)
    batch = M.shape[2:]
    nb = int(np.prod(batch)) if batch else 1
    Mc = M.coef.reshape(M.coef.shape[0], 12, 12, nb)
    bc = b.coef.reshape(b.coef.shape[0], 12, nb)

    M0 = np.moveaxis(Mc[0], -1, 0)
    scale = np.max(np.abs(M0), axis=1, keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    M0s = M0 / scale
    finite = np.all(np.isfinite(M0s), axis=(1, 2))
    cond = np.full(nb, np.inf)
    if np.any(finite):
        cond[finite] = np.linalg.cond(M0s[finite])
    valid = finite & (cond < max_condition)

    bs = J.basis(b.nvars, order)
    A = np.zeros((bs.ncoef, nb, 12))
    for k in range(bs.ncoef):
        rhs = np.moveaxis(bc[k], -1, 0).copy()
        if k:
            sel = bs.tail_k == k
            for i, j in zip(bs.tail_i[sel], bs.tail_j[sel]):
                rhs -= np.einsum("bij,bj->bi", np.moveaxis(Mc[i], -1, 0), A[j])
        A[k] = _solve_scaled(M0s, rhs, valid) / scale[:, 0, :]
    A = np.moveaxis(A, 1, -1).reshape((bs.ncoef, 12) + batch)
    return J.Jet(A, b.nvars, order), cond.reshape(batch), valid.reshape(batch)


def solve_least_squares(pi_values, dpi_values):
    """Independent value-only path: pseudo-inverse of the raw structure matrix."""
    M = _batched(structure_matrix(pi_values))
    b = -np.asarray(_stack_triplet(dpi_values)).reshape(12, -1).T
    return np.einsum("bij,bj->bi", np.linalg.pinv(M), b).T


def alpha_triplet(A):
    """Split the 12 stacked unknowns into three 1-forms."""
    return tuple(FormValue(1, A[4 * b:4 * b + 4]) for b in range(3))


# ---- frames ----------------------------------------------------------------

@dataclass
class IsoFrame:
    """Frame pi^a (degree 2) with mass m on a chart.

    ``connection`` prescribes alpha instead of solving for it.  This is for
    rank-deficient frames, where the structure equation leaves part of alpha
    free; the structure residual then checks that the prescribed connection
    is compatible with pi.
    """

    pi: IsoTripletForm
    mass: float = 1.0
    max_condition: float = DEFAULT_MAX_CONDITION
    current_scale: float = 1.0
    connection: IsoTripletForm | None = None

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("the mass parameter m must be positive")
        if self.pi.degree != 2:
            raise ValueError("a frame consists of 2-forms")
        if self.connection is not None and self.connection.degree != 1:
            raise ValueError("a connection consists of 1-forms")

    @property
    def chart(self):
        return self.pi.chart

    @classmethod
    def from_forms(cls, forms, mass=1.0, **kw):
        return cls(IsoTripletForm.from_forms(forms), mass, **kw)


def _prescribed(frame, X):
    comps = J.stack([a.comps for a in frame.connection.value(X)])
    return comps.reshape(12, *comps.shape[2:])


def connection_field(frame: IsoFrame) -> IsoTripletForm:
    """The connection as a field; degenerate points evaluate to NaN."""
    if frame.connection is not None:
        return frame.connection

    def rule(X):
        # alpha needs one derivative order of pi more than X carries
        order = X[0].order if J.is_jet(X[0]) else 0
        Y = J.Jet.variables(np.stack([np.asarray(J.value(x)) for x in X]), order + 1)
        pi = frame.pi.value(Y)
        A, _, valid = solve_structure(pi, d_triplet(pi), frame.max_condition)
        A = J.Jet(np.where(valid, A.coef, np.nan), A.nvars, A.order)
        return alpha_triplet(A)

    return IsoTripletForm(frame.chart, 1, rule)


def solve_connection(frame: IsoFrame, x) -> np.ndarray:
    """Connection components alpha^a_i at one point, shape (3, 4)."""
    pts = np.asarray(getattr(x, "values", x), dtype=float).reshape(DIM)
    frame.chart.check_points(pts)
    if frame.connection is not None:
        return np.stack([np.asarray(J.value(a.comps)).reshape(DIM)
                         for a in frame.connection.value(pts)])
    pi = frame.pi.value(J.Jet.variables(pts, 1))
    A, cond, valid = solve_structure(pi, d_triplet(pi), frame.max_condition)
    if not bool(valid):
        raise DegenerateFrameError(
            f"structure matrix is degenerate (condition {float(cond):.3g})", cond, pts)
    return A.value.reshape(3, 4)


def orthonormal_factors(degree, g_values):
    """Per-slot factors converting coordinate components to orthonormal ones."""
    s = 1.0 / np.sqrt(np.abs(g_values))
    return np.stack([np.prod([s[i] for i in I], axis=0) if I else np.ones(g_values.shape[1:])
                     for I in COMBOS[degree]])


def _threads():
    try:
        return max(1, int(os.environ.get("ISOFRAME_THREADS", "1")))
    except ValueError:
        return 1


def map_chunks(fn, points, chunk=512):
    """Apply ``fn`` to column chunks of ``points`` (4, N), concatenating results.

    Chunks run on up to ISOFRAME_THREADS workers; order of results is kept.
    """
    n = points.shape[1]
    pieces = [points[:, i:i + chunk] for i in range(0, n, chunk)]
    workers = min(_threads(), len(pieces))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, pieces))
    else:
        results = [fn(p) for p in pieces]
    if isinstance(results[0], dict):
        return {k: np.concatenate([r[k] for r in results], axis=-1) for k in results[0]}
    return np.concatenate(results, axis=-1)


class FrameEvaluation:
    """Everything the pipeline knows about a frame at a batch of points.

    ``points`` has shape (4, N).  With the default jet order 3 the frame is
    known through third derivatives, which is what the Bianchi and
    Yang-Mills checks require.
    """

    def __init__(self, frame: IsoFrame, points, order: int = 3, current=None):
        self.frame = frame
        self.points = np.asarray(points, dtype=float)
        frame.chart.check_points(self.points)
        self.X = J.Jet.variables(self.points, order)
        self.m2 = frame.mass ** 2
        self.pi = frame.pi.value(self.X)
        self.dpi = d_triplet(self.pi)
        self.A, self.cond, self.valid = solve_structure(self.pi, self.dpi, frame.max_condition)
        if frame.connection is not None:
            self.A = _prescribed(frame, self.X).truncate(self.A.order)
            self.valid = np.all(np.isfinite(self.A.value.reshape(12, -1)), axis=0)
        self.alpha = alpha_triplet(self.A)
        self.metric = frame.chart.metric(self.X)
        self.volume = frame.chart.volume(self.X)
        self.current = current
        self._cache = {}

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def g(self) -> np.ndarray:
        return J.value(self.metric)

    @property
    def curvature(self):
        return self._memo("K", lambda: curvature_values(self.alpha))

    @property
    def star_pi(self):
        return self._memo("star_pi", lambda: tuple(hodge_values(x, self.metric, self.volume)
                                                    for x in self.pi))

    def structure_residual(self):
        return self._memo("structure", lambda: tuple(
            x.truncate(y.order) + y for x, y in zip(self.dpi, cross_wedge(self.alpha, self.pi))))

    def dual_structure_residual(self):
        """d(*pi) + eps alpha ^ *pi: the Yang-Mills operator without source."""
        return self._memo("ym", lambda: covariant_d(self.alpha, self.star_pi))

    def field_residual(self):
        return self._memo("field", lambda: tuple(
            k - p.truncate(k.order).scale(self.m2) for k, p in zip(self.curvature, self.pi)))

    def bianchi(self):
        return self._memo("bianchi", lambda: covariant_d(self.alpha, self.curvature))

    def yang_mills(self):
        res = self.dual_structure_residual()
        if self.current is None:
            return res
        cur = self.current.value(self.X)
        return tuple(r - c.truncate(r.order).scale(self.frame.current_scale)
                     for r, c in zip(res, cur))

    def orthonormal(self, triplet) -> np.ndarray:
        """Orthonormal-frame component values, shape (3, ncomp, N)."""
        deg = triplet[0].degree
        fac = orthonormal_factors(deg, self.g)
        return np.stack([np.asarray(J.value(t.comps)) * fac for t in triplet])

    # ---- observables (values only) -------------------------------------
    def _dense(self, triplet):
        return np.stack([t.truncate(0).dense() for t in triplet])

    def _raise2(self, F):
        ginv = 1.0 / self.g
        return F * ginv[None, :, None] * ginv[None, None, :]

    def pi_dot_pi(self) -> np.ndarray:
        """sum_a pi^a_ij pi_a^ij over all index pairs."""
        F = self._dense(self.pi)
        return np.einsum("aij...,aij...->...", F, self._raise2(F))

    def lagrangian(self) -> np.ndarray:
        F = self._dense(self.pi)
        Fu = self._raise2(F)
        K = self._dense(self.curvature)
        L = np.einsum("aij...,aij...->...", K, Fu) - 0.5 * self.m2 * np.einsum(
            "aij...,aij...->...", F, Fu)
        if self.current is not None:
            L = L + self.frame.current_scale * self._current_dot_alpha()
        return L

    def _current_dot_alpha(self):
        cur = self.current.value(self.X)
        jvec = [hodge_values(c.truncate(0), J.value(self.metric), J.value(self.volume)) for c in cur]
        ginv = 1.0 / self.g
        A = np.stack([a.values for a in self.alpha])
        Jv = np.stack([j.values for j in jvec])
        return np.einsum("ai...,i...,ai...->...", Jv, ginv, A)

    def stress_energy(self):
        """T^m_n = pi_a^{mi} K^a_{ni} - delta^m_n L, shape (4, 4, N), and its trace."""
        Fu = self._raise2(self._dense(self.pi))
        K = self._dense(self.curvature)
        L = self.lagrangian()
        T = np.einsum("ami...,ani...->mn...", Fu, K)
        T = T - np.eye(DIM)[:, :, None] * L
        return T, np.einsum("mm...->...", T)

    def spin_density(self) -> np.ndarray:
        """S_ij = sum_a [pi_a^{t}_i A^a_j - pi_a^{t}_j A^a_i] with t the chart time.

        The kinetic term enters the canonical momentum as 2 pi^{tl}, which
        absorbs the 1/2 of the antisymmetrizer.
        """
        F = self._dense(self.pi)
        Pt = F[:, 0] / self.g[0]
        A = np.stack([a.values for a in self.alpha])
        return np.einsum("ai...,aj...->ij...", Pt, A) - np.einsum("aj...,ai...->ij...", Pt, A)


# ---- residual reports ------------------------------------------------------

@dataclass
class ResidualReport:
    equation: str
    grid: dict
    max_residual: float
    worst_point: dict | None
    skipped_points: int
    scale: float = 1.0
    n_points: int = 0
    per_component: list = field(default_factory=list)

    @property
    def relative(self) -> float:
        return self.max_residual / self.scale if self.scale > 0 else self.max_residual

    def passed(self, tol: float) -> bool:
        return bool(np.isfinite(self.max_residual) and self.max_residual < tol)

    def to_dict(self):
        return {
            "equation": self.equation,
            "grid": self.grid,
            "max_residual": self.max_residual,
            "worst_point": self.worst_point,
            "skipped_points": self.skipped_points,
            "scale": self.scale,
            "n_points": self.n_points,
            "per_component": self.per_component,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def make_report(equation, chart, points, values, valid, grid=None, scale=None):
    """Max-norm report from residual values of shape (..., N)."""
    vals = np.abs(np.asarray(values, dtype=float)).reshape(-1, points.shape[1])
    valid = np.asarray(valid, dtype=bool).reshape(-1)
    skipped = int(np.sum(~valid))
    grid = grid or {"points": int(points.shape[1])}
    if not np.any(valid):
        return ResidualReport(equation, grid, float("nan"), None, skipped, 1.0, points.shape[1], [])
    v = vals[:, valid]
    per_point = np.max(v, axis=0)
    worst = int(np.argmax(per_point))
    pts = points[:, valid][:, worst]
    per_comp = np.max(v, axis=1).tolist()
    sc = float(scale) if scale is not None else 1.0
    return ResidualReport(equation, grid, float(per_point[worst]),
                          {c: float(x) for c, x in zip(chart.coords, pts)},
                          skipped, sc, int(points.shape[1]), per_comp)


def _sweep(frame, points, fn, order=3, current=None):
    def work(chunk):
        ev = FrameEvaluation(frame, chunk, order=order, current=current)
        return fn(ev)
    return map_chunks(work, points)


def _scale_of(ev, triplet):
    vals = ev.orthonormal(triplet)
    return np.max(np.abs(vals).reshape(-1, vals.shape[-1]), axis=0)


def structure_residual(frame, points, grid=None) -> ResidualReport:
    def fn(ev):
        return {"res": ev.orthonormal(ev.structure_residual()).reshape(-1, ev.points.shape[1]),
                "scale": np.maximum(_scale_of(ev, ev.dpi), _scale_of(ev, ev.pi)),
                "valid": ev.valid.astype(float)}
    out = _sweep(frame, points, fn, order=1)
    valid = out["valid"] > 0
    return make_report("structure", frame.chart, points, out["res"], valid, grid,
                       np.max(out["scale"][valid]) if np.any(valid) else 1.0)


def field_equation_residual(frame, points, grid=None) -> ResidualReport:
    def fn(ev):
        return {"res": ev.orthonormal(ev.field_residual()).reshape(-1, ev.points.shape[1]),
                "scale": _scale_of(ev, ev.pi) * ev.m2,
                "valid": ev.valid.astype(float)}
    out = _sweep(frame, points, fn, order=2)
    valid = out["valid"] > 0
    return make_report("field", frame.chart, points, out["res"], valid, grid,
                       np.max(out["scale"][valid]) if np.any(valid) else 1.0)


def yang_mills_residual(frame, points, current=None, grid=None) -> ResidualReport:
    def fn(ev):
        return {"res": ev.orthonormal(ev.yang_mills()).reshape(-1, ev.points.shape[1]),
                "valid": ev.valid.astype(float)}
    out = _sweep(frame, points, fn, order=1, current=current)
    return make_report("yang_mills", frame.chart, points, out["res"], out["valid"] > 0, grid)


def bianchi_residual(connection, points, grid=None) -> ResidualReport:
    """DK for a frame (solved connection) or an explicit connection triplet."""
    if isinstance(connection, IsoFrame):
        def fn(ev):
            return {"res": ev.orthonormal(ev.bianchi()).reshape(-1, ev.points.shape[1]),
                    "valid": ev.valid.astype(float)}
        out = _sweep(connection, points, fn, order=3)
        return make_report("bianchi", connection.chart, points, out["res"], out["valid"] > 0, grid)

    chart = connection.chart
    chart.check_points(points)

    def work(chunk):
        X = J.Jet.variables(chunk, 2)
        alpha = connection.value(X)
        res = covariant_d(alpha, curvature_values(alpha))
        fac = orthonormal_factors(3, chart.metric_values(chunk))
        vals = np.stack([np.asarray(r.values) * fac for r in res])
        return vals.reshape(-1, chunk.shape[1])

    res = map_chunks(work, points)
    return make_report("bianchi", chart, points, res, np.isfinite(res).all(axis=0), grid)


def implication_constant(frame, points) -> dict:
    """Measured ratio of the Yang-Mills residual to the field-equation residual."""
    field_rep = field_equation_residual(frame, points)
    ym_rep = yang_mills_residual(frame, points)
    ratio = ym_rep.max_residual / field_rep.max_residual if field_rep.max_residual > 0 else np.inf
    return {"field": field_rep.max_residual, "yang_mills": ym_rep.max_residual, "C": float(ratio)}


# ---- gauge rotations -------------------------------------------------------

def _rot_z(a):
    c, s = J.cos(a), J.sin(a)
    z, o = J.zeros_like(a), J.ones_like(a)
    return [[c, -s, z], [s, c, z], [z, z, o]]


def _rot_y(a):
    c, s = J.cos(a), J.sin(a)
    z, o = J.zeros_like(a), J.ones_like(a)
    return [[c, z, s], [z, o, z], [-s, z, c]]


def _matmul3(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


class GaugeRotationField:
    """Point-dependent SO(3) rotation acting on iso labels."""

    def __init__(self, rule, tol=1e-12):
        self._rule = rule
        self.tol = tol

    @classmethod
    def constant(cls, R):
        R = np.asarray(R, dtype=float)
        check_rotation(R)
        return cls(lambda X: [[J.full_like(X[0], R[i, j]) for j in range(3)] for i in range(3)])

    @classmethod
    def identity(cls):
        return cls.constant(np.eye(3))

    @classmethod
    def euler_zyz(cls, a, b, c):
        """R = Rz(a) Ry(b) Rz(c) with angle fields ``a, b, c`` taking coordinate jets."""
        def rule(X):
            return _matmul3(_matmul3(_rot_z(a(X)), _rot_y(b(X))), _rot_z(c(X)))
        return cls(rule)

    def matrix(self, X):
        R = self._rule(X)
        check_rotation(np.array([[J.value(R[i][j]) for j in range(3)] for i in range(3)]), self.tol)
        return R


def check_rotation(R, tol=1e-12):
    R = np.asarray(R, dtype=float)
    Rb = np.moveaxis(R.reshape(3, 3, -1), -1, 0)
    gram = np.einsum("bki,bkj->bij", Rb, Rb)
    if np.max(np.abs(gram - np.eye(3))) > tol:
        raise GaugeError("rotation field is not orthogonal")
    if np.any(np.linalg.det(Rb) < 0):
        raise GaugeError("rotation field has determinant -1")


def rotate_triplet(R, w):
    return tuple(sum((w[b].scale(R[a][b]) for b in range(1, 3)), w[0].scale(R[a][0]))
                 for a in range(3))


def gauge_transform(frame: IsoFrame, R: GaugeRotationField) -> IsoFrame:
    """pi'^a = R^a_b pi^b."""
    if frame.connection is not None:
        raise GaugeError("gauge transform of a frame with a prescribed connection")

    def rule(X):
        return rotate_triplet(R.matrix(X), frame.pi.value(X))
    return IsoFrame(IsoTripletForm(frame.chart, 2, rule), frame.mass,
                    frame.max_condition, frame.current_scale)


def pure_gauge_connection(chart, R: GaugeRotationField) -> IsoTripletForm:
    """alpha^d = 1/2 eps_dac (dR R^T)_ac: the connection of a rotated flat frame."""
    def rule(X):
        M = R.matrix(X)
        dM = [[d_values(FormValue(0, J.stack([M[i][j]]))) for j in range(3)] for i in range(3)]
        Mt = [[M[i][j].truncate(M[i][j].order - 1) for j in range(3)] for i in range(3)]
        omega = [[sum((dM[a][b].scale(Mt[c][b]) for b in range(1, 3)), dM[a][0].scale(Mt[c][0]))
                  for c in range(3)] for a in range(3)]
        out = []
        for d in range(3):
            acc = None
            for a, c in itertools.permutations(range(3), 2):
                e = EPS3[d, a, c]
                if e:
                    term = omega[a][c].scale(0.5 * e)
                    acc = term if acc is None else acc + term
            out.append(acc)
        return tuple(out)
    return IsoTripletForm(chart, 1, rule)
