"""Adaptive embedded Runge-Kutta integration with Hermite dense output."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class IntegrationError(RuntimeError):
    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


@dataclass(frozen=True)
class Tableau:
    name: str
    order: int
    c: np.ndarray
    a: tuple
    b: np.ndarray
    e: np.ndarray          # b - b_hat
    fsal: bool


def _tab(name, order, c, a, b, bhat, fsal):
    b = np.array(b, dtype=float)
    return Tableau(name, order, np.array(c, dtype=float), tuple(np.array(r, dtype=float) for r in a),
                   b, b - np.array(bhat, dtype=float), fsal)


DOPRI5 = _tab(
    "dopri5", 5,
    [0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1],
    [[], [1 / 5], [3 / 40, 9 / 40], [44 / 45, -56 / 15, 32 / 9],
     [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
     [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
     [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
    [5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40],
    True)

VERNER65 = _tab(
    "verner65", 6,
    [0, 9 / 50, 1 / 6, 1 / 4, 53 / 100, 3 / 5, 4 / 5, 1, 1],
    [[], [9 / 50], [29 / 324, 25 / 324], [1 / 16, 0, 3 / 16],
     [79129 / 250000, 0, -261237 / 250000, 19663 / 15625],
     [1336883 / 4909125, 0, -25476 / 30875, 194159 / 185250, 8225 / 78546],
     [-2459386 / 14727375, 0, 19504 / 30875, 2377474 / 13615875, -6157250 / 5773131, 902 / 735],
     [2699 / 7410, 0, -252 / 1235, -1393253 / 3993990, 236875 / 72618, -135 / 49, 15 / 22],
     [11 / 144, 0, 0, 256 / 693, 0, 125 / 504, 125 / 528, 5 / 72]],
    [11 / 144, 0, 0, 256 / 693, 0, 125 / 504, 125 / 528, 5 / 72, 0],
    [28 / 477, 0, 0, 212 / 441, -312500 / 366177, 2125 / 1764, 0, -2105 / 35532, 2995 / 17766],
    True)

TABLEAUS = {"dopri5": DOPRI5, "verner65": VERNER65}


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    method: str = "dopri5"
    h0: float | None = None
    max_steps: int = 2_000_000
    h_min_factor: float = 1e-14
    safety: float = 0.9

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.method not in TABLEAUS:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class RawTrajectory:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    steps: int
    rejected: int
    evaluations: int
    stats: dict = field(default_factory=dict)


def _norm(err, y0, y1, cfg):
    scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, direction, cfg, order):
    scale = cfg.atol + cfg.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(rhs(t0 + direction * h0, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def integrate_raw(rhs, t_span, y0, cfg: IntegratorConfig = IntegratorConfig(), t_eval=None):
    """Integrate ``y' = rhs(t, y)`` over ``t_span``.

    With ``t_eval`` the step sequence is clipped to land exactly on every
    output point and only those points are returned; otherwise all accepted
    steps are returned.
    """
    tab = TABLEAUS[cfg.method]
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 == t0:
        raise ValueError("empty integration range")
    direction = 1.0 if t1 > t0 else -1.0
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise IntegrationError("initial state is not finite", t0, y)
    f = np.asarray(rhs(t0, y), dtype=float)
    nfev = 1
    if not np.all(np.isfinite(f)):
        raise IntegrationError("right-hand side is not finite at the initial point", t0, y)

    targets = None
    if t_eval is not None:
        targets = np.asarray(t_eval, dtype=float)
        if np.any(direction * np.diff(targets) <= 0):
            raise ValueError("t_eval must be strictly monotone in the direction of integration")
        if direction * (targets[0] - t0) < 0 or direction * (targets[-1] - t1) > 0:
            raise ValueError("t_eval outside the integration range")

    h = cfg.h0 if cfg.h0 else _initial_step(rhs, t0, y, f, direction, cfg, tab.order)
    h = min(abs(h), abs(t1 - t0))
    err_exp = 1.0 / tab.order
    prev_err = 1.0

    ts, ys, fs = [], [], []
    k_target = 0
    if targets is None or targets[0] == t0:
        ts.append(t0), ys.append(y.copy()), fs.append(f.copy())
        k_target = 1 if targets is not None else 0
    t = t0
    steps = rejected = 0
    nstage = len(tab.c)
    K = np.empty((nstage, y.size))
    while direction * (t1 - t) > 0:
        if steps + rejected > cfg.max_steps:
            raise IntegrationError(f"step budget exhausted at t={t:.17g}", t, y)
        h_min = cfg.h_min_factor * max(1.0, abs(t))
        if h < h_min:
            raise IntegrationError(f"step size underflow at t={t:.17g}", t, y)
        # land exactly on the next output point or the end of the range
        stop = t1 if targets is None or k_target >= len(targets) else targets[k_target]
        h_try = h
        # stretch slightly rather than leave a sliver before the stop point
        clipped = direction * (t + direction * 1.01 * h - stop) >= 0
        if clipped:
            h_try = abs(stop - t)
        K[0] = f
        for s in range(1, nstage):
            a = tab.a[s]
            ys_ = y + direction * h_try * (a @ K[:s])
            K[s] = rhs(t + direction * tab.c[s] * h_try, ys_)
        nfev += nstage - 1
        y_new = y + direction * h_try * (tab.b @ K)
        err_vec = direction * h_try * (tab.e @ K)
        if tab.fsal:
            f_new = K[-1] if np.array_equal(tab.a[-1], tab.b[:-1]) else None
        else:
            f_new = None
        finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(K))
        err = _norm(err_vec, y, y_new, cfg) if finite else np.inf
        if err <= 1.0:
            t = stop if clipped else t + direction * h_try
            if f_new is None:
                f_new = np.asarray(rhs(t, y_new), dtype=float)
                nfev += 1
            y, f = y_new, f_new.copy()
            steps += 1
            if targets is None:
                ts.append(t), ys.append(y.copy()), fs.append(f.copy())
            elif clipped and k_target < len(targets):
                ts.append(t), ys.append(y.copy()), fs.append(f.copy())
                k_target += 1
            # PI controller; a clipped step does not shrink the proposal
            fac = cfg.safety * max(err, 1e-10) ** (-0.7 * err_exp) * prev_err ** (0.4 * err_exp)
            fac = min(5.0, max(0.2, fac))
            new_h = h_try * fac
            if not clipped:
                h = new_h
            elif new_h < h_try:
                h = min(h, new_h)
            prev_err = max(err, 1e-4)
        else:
            rejected += 1
            if not np.isfinite(err):
                h = h_try * 0.25
            else:
                h = h_try * max(0.2, cfg.safety * err ** (-err_exp))
    if targets is not None and k_target < len(targets):
        # remaining target equals t1 within rounding
        ts.append(t), ys.append(y.copy()), fs.append(f.copy())
    return RawTrajectory(np.array(ts), np.array(ys), np.array(fs), steps, rejected, nfev,
                         {"method": tab.name, "rtol": cfg.rtol, "atol": cfg.atol})


def hermite(t_nodes, y_nodes, f_nodes, t):
    """Cubic Hermite interpolation on accepted steps; returns shape (len(t), dim)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    asc = t_nodes[-1] > t_nodes[0]
    tn = t_nodes if asc else t_nodes[::-1]
    yn = y_nodes if asc else y_nodes[::-1]
    fn = f_nodes if asc else f_nodes[::-1]
    if np.any(t < tn[0] - 1e-12 * max(1, abs(tn[0]))) or np.any(t > tn[-1] + 1e-12 * max(1, abs(tn[-1]))):
        raise ValueError("dense output requested outside the integrated range")
    i = np.clip(np.searchsorted(tn, t) - 1, 0, len(tn) - 2)
    h = tn[i + 1] - tn[i]
    s = ((t - tn[i]) / h)[:, None]
    h = h[:, None]
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * yn[i] + h10 * h * fn[i] + h01 * yn[i + 1] + h11 * h * fn[i + 1]
