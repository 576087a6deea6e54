"""Cluster expansion of the many-particle group and the nonlinear correlation group.

Run: python demos/01_cluster_expansion.py
"""

import numpy as np

from corrdyn import (
    CorrelationSequence,
    cumulant_plain,
    default_model,
    group_apply,
    nonlinear_group_apply,
    trace_norm,
    von_neumann_solve,
)
from corrdyn.operators import random_hermitian, reorder, tensor
from corrdyn.partitions import enumerate_partitions, mobius_weight

model = default_model(seed=1)
rng = np.random.default_rng(0)
t = 0.5

# 1. The three-particle group is the sum over partitions of products of cumulants.
f = random_hermitian((1, 2, 3), 2, rng, symmetric=False)
acc = 0 * f
for p in enumerate_partitions(f.labels):
    x = f
    for block in p:
        x = cumulant_plain(model, t, block, x)
    acc = acc + x
print("group vs cluster sum:", trace_norm(group_apply(model, t, f.labels, f) - acc))

# 2. Cumulants of order >= 2 vanish at t = 0 and without interaction.
print("A_2 at t=0:", trace_norm(cumulant_plain(model, 0.0, (1, 2), f)))
print("A_3 free:", trace_norm(cumulant_plain(model.with_epsilon(0.0), t, (1, 2, 3), f)))

# 3. The nonlinear group evolves correlations directly.  Compare with evolving
# the density operators of 1, 2, 3 particles and cluster-inverting them.
dens = {n: random_hermitian(tuple(range(1, n + 1)), 2, rng, 0.6 ** n).mat for n in (1, 2, 3)}


def invert(states, s):
    labels = tuple(range(1, s + 1))
    out = 0
    for p in enumerate_partitions(labels):
        ops = [type(f)(b, states[len(b)], 2) for b in p]
        out = out + mobius_weight(len(p)) * reorder(tensor(*ops), labels).mat
    return out


g0 = CorrelationSequence({n: invert(dens, n) for n in (1, 2, 3)}, tol=1e-9)
evolved = {n: model.unitary(t, n) @ dens[n] @ model.unitary(t, n).conj().T for n in (1, 2, 3)}
g3 = von_neumann_solve(model, t, (1, 2, 3), g0)
print("nonlinear group vs exact 3-body evolution:", np.abs(g3.mat - invert(evolved, 3)).max())
print("partition vs cluster evaluation:",
      trace_norm(g3 - nonlinear_group_apply(model, t, (1, 2, 3), g0, method="cluster")))
