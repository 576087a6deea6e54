"""Marginal correlation operators as a series in the initial data.

Two routes give the same marginals: evolving the full correlation sequence and
tracing, or summing cumulants of the nonlinear groups on the marginal data.
Their truncations differ at order n_max+1 in the data size.

Run: python demos/02_marginal_series.py
"""

import math

import numpy as np

from corrdyn import SeriesConfig, default_model, trace_norm
from corrdyn.cumulants import CorrelationSequence
from corrdyn.hierarchy import (
    bbgky_residual,
    correlation_sequence_from_marginals,
    marginal_series_cumulant,
    marginal_series_from_vn,
)
from corrdyn.operators import random_hermitian

model = default_model(seed=1)


def data(delta, top, seed=5):
    rng = np.random.default_rng(seed)
    return CorrelationSequence({n: random_hermitian(tuple(range(1, n + 1)), 2, rng, delta ** n)
                                for n in range(1, top + 1)})


print("route difference, relative, at t = 0.5")
for n_max in (1, 2, 3):
    cfg = SeriesConfig(n_max=n_max)
    diffs = []
    for delta in (0.05, 0.025):
        G0 = data(delta, n_max + 1)
        a = marginal_series_from_vn(model, 0.5, 1, correlation_sequence_from_marginals(G0, cfg=cfg),
                                    cfg).value
        b = marginal_series_cumulant(model, 0.5, 1, G0, cfg).value
        diffs.append(trace_norm(a - b) / trace_norm(b))
    print(f"  n_max={n_max}: {diffs[0]:.2e} -> {diffs[1]:.2e}, "
          f"exponent {math.log2(diffs[0] / diffs[1]):.2f}")

# The truncated series solves the marginal hierarchy up to the next order.
weak = model.with_epsilon(0.1)
G0 = data(0.05, 6)
print("hierarchy residual for s=1, t=0.2")
for n_max in (1, 2, 3):
    res = bbgky_residual(weak, 0.2, 1, G0, SeriesConfig(n_max=n_max))
    print(f"  n_max={n_max}: {res:.2e}")

res = marginal_series_cumulant(model, 0.7, 1, data(0.02, 4), SeriesConfig(n_max=3))
print("term norms:", ["%.1e" % x for x in res.term_norms])
print("Cauchy ratios:", ["%.2f" % x for x in res.cauchy_ratios])
