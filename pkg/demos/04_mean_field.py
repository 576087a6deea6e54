"""Mean-field scaling: interaction eps, one-particle data 1/eps.

Without initial correlations the rescaled pair correlation vanishes like eps
and the one-particle operator approaches the Vlasov solution.  With a pair
correlation the rescaled one-particle operator converges to the iterated
series with correlations; the correlated kinetic equation stays a finite
distance away, and the rescaled pair correlation is not the freely
transported g2 acting on g1(t) g1(t).

Run: python demos/04_mean_field.py
"""

import numpy as np

from corrdyn import InitialCorrelations, SeriesConfig, default_model
from corrdyn.meanfield import chaos_decay_check, meanfield_sweep, term_scaling_check
from corrdyn.operators import random_density, random_hermitian

model = default_model(seed=1)
rng = np.random.default_rng(4)
g1 = random_density((1,), rng=rng)
g2 = random_hermitian((1, 2), rng=rng, trace_norm_value=0.5)
f = random_density((1, 2, 3), rng=rng)
corr = InitialCorrelations({2: g2})


def show(title, table):
    vals = ", ".join(f"{v:.2e}" for v in table.values)
    print(f"{title:44s} {vals}   slope {table.slope:+.2f}")


show("eps^-1 ||A_3 f|| for s=2", term_scaling_check(model, 0.5, 2, 1, f, [1e-1, 1e-2, 1e-3]))
show("chaos: ||eps^2 G_2||", chaos_decay_check(model, 0.5, 2, g1))
show("chaos: eps G_1 vs Vlasov series", chaos_decay_check(model, 0.1, 1, g1))
cfg = SeriesConfig(n_max=3)
show("correlated: eps G_1 vs series", meanfield_sweep(model, 0.1, 1, g1, corr, cfg=cfg,
                                                      limit_source="series"))
show("correlated: eps G_1 vs kinetic equation", meanfield_sweep(model, 0.1, 1, g1, corr, cfg=cfg))
show("correlated: eps^2 G_2 vs transported g2", meanfield_sweep(model, 0.1, 2, g1, corr, cfg=cfg))
