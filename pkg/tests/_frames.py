"""Shared generators for random smooth frames and connections."""

import numpy as np

from isoframe import jets as J
from isoframe.bundle import IsoFrame, IsoTripletForm
from isoframe.charts import builtin_chart
from isoframe.forms import FormValue


def trig_field(rng, n, modes=2, amp=0.3):
    """n smooth scalar fields: c + sum amp * sin(k.x + phase)."""
    c = rng.normal(size=n)
    k = rng.normal(size=(n, modes, 4))
    ph = rng.uniform(0, 2 * np.pi, size=(n, modes))
    a = amp * rng.normal(size=(n, modes))

    def fields(X):
        out = []
        for s in range(n):
            acc = J.full_like(X[0], c[s])
            for j in range(modes):
                arg = sum((X[v] * k[s, j, v] for v in range(4)), J.full_like(X[0], ph[s, j]))
                acc = acc + a[s, j] * J.sin(arg)
            out.append(acc)
        return out

    return fields


def random_frame(rng, mass=1.0, chart=None):
    chart = chart or builtin_chart("cartesian")
    fields = trig_field(rng, 18)

    def rule(X):
        f = fields(X)
        return tuple(FormValue.from_list(2, f[6 * a:6 * a + 6]) for a in range(3))

    return IsoFrame(IsoTripletForm(chart, 2, rule), mass)


def random_connection(rng, chart=None):
    chart = chart or builtin_chart("cartesian")
    fields = trig_field(rng, 12, amp=0.5)

    def rule(X):
        f = fields(X)
        return tuple(FormValue.from_list(1, f[4 * a:4 * a + 4]) for a in range(3))

    return IsoTripletForm(chart, 1, rule)
