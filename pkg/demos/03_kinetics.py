"""Kinetic equations for the one-particle operator.

Run: python demos/03_kinetics.py
"""

import warnings

import numpy as np

from corrdyn import InitialCorrelations, default_model, trace_norm
from corrdyn.kinetics import (
    generalized_kinetic_integrate,
    hartree_evolve,
    iterated_series_g1,
    t0_radius,
    vlasov_correlated_integrate,
    vlasov_integrate,
)
from corrdyn.operators import LabeledOperator, random_density, random_hermitian

model = default_model(seed=1)
rng = np.random.default_rng(8)
g1 = random_density((1,), 2, rng)
g2 = random_hermitian((1, 2), 2, rng, 0.5)
grid = np.linspace(0, 1, 11)

v = vlasov_integrate(model, g1, grid)
print(f"Vlasov: trace drift {v.trace_drift():.1e}, hermiticity {v.hermiticity():.1e}, "
      f"Richardson error {v.richardson_error:.1e}")

# pure states stay pure and match Hartree
psi = np.array([0.6, 0.8j])
h = hartree_evolve(model, psi, grid)
vp = vlasov_integrate(model, LabeledOperator((1,), np.outer(psi, psi.conj())), grid)
print("Hartree vs Vlasov:", max(np.abs(np.outer(a, a.conj()) - b.mat).max()
                                for a, b in zip(h.states, vp.states)))

# the iterated series converges below t0
print(f"t0 = {t0_radius(model, g1):.3f}")
ref = vlasov_integrate(model, g1, [0, 0.1]).final
for n in range(4):
    val, _ = iterated_series_g1(model, g1, 0.1, n)
    print(f"  series n_max={n}: distance {trace_norm(val - ref):.1e}")

# with initial correlations
vc = vlasov_correlated_integrate(model, g1, g2, grid)
print(f"correlated vs uncorrelated g1(1): {trace_norm(vc.final - v.final):.2e}")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    gk = generalized_kinetic_integrate(model.with_epsilon(0.1), g1 * 0.05,
                                       InitialCorrelations({2: g2}), grid)
print(f"generalized: status {gk.status}, trace drift {gk.trace_drift():.1e}")
