"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  Criteria 8 and 9 contain sub-checks that fail; the README
explains why.
"""

import math
import time
import warnings

import numpy as np
import pytest

from conftest import max_entry, random_sequence
from corrdyn.cumulants import (
    CorrelationSequence,
    cumulant_clustered,
    cumulant_plain,
    nonlinear_cumulant,
    nonlinear_group_apply,
    reduced_cumulant,
)
from corrdyn.dynamics import default_model, group_apply, partition_group_apply
from corrdyn.functionals import (
    InitialCorrelations,
    functional_generating_operator,
    scattering_cumulant,
)
from corrdyn.hierarchy import (
    SeriesConfig,
    bbgky_residual,
    correlation_sequence_from_marginals,
    evolved_sequence,
    g_estimate_bound,
    marginal_series_cumulant,
    marginal_series_from_vn,
    marginal_term_bound,
    theorem1_premise,
    vn_hierarchy_residual,
    von_neumann_solve,
)
from corrdyn.kinetics import (
    generalized_kinetic_integrate,
    hartree_evolve,
    iterated_series_g1,
    limit_sequence_builder,
    rk4_solve,
    vlasov_correlated_integrate,
    vlasov_hierarchy_residual,
    vlasov_integrate,
    vlasov_rhs,
)
from corrdyn.meanfield import chaos_decay_check, meanfield_sweep, term_scaling_check
from corrdyn.operators import (
    LabeledOperator,
    hermiticity_defect,
    random_density,
    random_hermitian,
    reorder,
    tensor,
    trace_norm,
)
from corrdyn.partitions import enumerate_partitions, mobius_weight

RESULTS = {}


def record(k, checks):
    """``checks`` maps a name to ``(value, passed)``; returns overall status."""
    ok = all(p for _, p in checks.values())
    parts = [f"{name}={v:.2e}{'' if p else ' (fail)'}" for name, (v, p) in checks.items()]
    RESULTS[k] = (ok, ", ".join(parts))
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {RESULTS[k][1]}")
    return ok


def below(value, tol):
    return float(value), bool(value <= tol)


@pytest.fixture(scope="module")
def model():
    return default_model(seed=1)


def test_criterion_1_mobius_inversion(model):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for s in (2, 3, 4):
        for t in (0.1, 0.5):
            f = random_hermitian(tuple(range(1, s + 1)), 2, rng, symmetric=False)
            acc = 0 * f
            for p in enumerate_partitions(f.labels):
                x = f
                for block in p:
                    x = cumulant_plain(model, t, block, x)
                acc = acc + x
            worst = max(worst, trace_norm(group_apply(model, t, f.labels, f) - acc))
    elapsed = time.perf_counter() - start
    assert record(1, {"max_diff": below(worst, 1e-10), "seconds": below(elapsed, 5)})


def test_criterion_2_von_neumann_residual(model):
    start = time.perf_counter()
    g0 = random_sequence(np.random.default_rng(2), 3)
    cfg = SeriesConfig(fd_step=1e-3)
    checks = {}
    for s in (1, 2, 3):
        checks[f"s{s}"] = below(vn_hierarchy_residual(model, 0.4, tuple(range(1, s + 1)), g0, cfg),
                                1e-4)
    checks["eps0"] = below(vn_hierarchy_residual(model.with_epsilon(0.0), 0.4, (1, 2, 3), g0,
                                                 cfg), 1e-6)
    ordered = vn_hierarchy_residual(model, 0.4, (1, 2), g0, cfg, convention="ordered")
    checks["double_counting_s2"] = (ordered, ordered > 1e-4)
    checks["seconds"] = below(time.perf_counter() - start, 10)
    assert record(2, checks)


def test_criterion_3_group_property(model):
    g0 = random_sequence(np.random.default_rng(3), 3)
    mid = evolved_sequence(model, 0.25, g0)
    worst = max(trace_norm(von_neumann_solve(model, 0.35, Y, mid)
                           - von_neumann_solve(model, 0.6, Y, g0))
                for Y in ((1,), (1, 2), (1, 2, 3)))
    assert record(3, {"max_diff": below(worst, 1e-9)})


def _printed_nonlinear_group(model, t, f):
    A = lambda cl, op: cumulant_clustered(model, t, cl, op)
    g = {1: A([(1,)], f.at((1,)))}
    g[2] = A([(1, 2)], f[2]) + A([1, 2], tensor(f.at((1,)), f.at((2,))))
    g[3] = (A([(1, 2, 3)], f[3])
            + A([1, (2, 3)], tensor(f.at((1,)), f.at((2, 3))))
            + A([2, (1, 3)], tensor(f.at((2,)), f.at((1, 3))))
            + A([3, (1, 2)], tensor(f.at((3,)), f.at((1, 2))))
            + A([1, 2, 3], tensor(f.at((1,)), f.at((2,)), f.at((3,)))))
    return g


def _printed_cc(model, t, f):
    A = lambda op: cumulant_clustered(model, t, [(1, 2), 3], op)
    x1 = tensor(f.at((1,)), f.at((2, 3)))
    x2 = tensor(f.at((2,)), f.at((1, 3)))
    return (A(f[3])
            + A(x1) - partition_group_apply(model, t, [(1,)], cumulant_plain(model, t, (2, 3), x1))
            + A(x2) - partition_group_apply(model, t, [(2,)], cumulant_plain(model, t, (1, 3), x2))
            + A(tensor(f.at((3,)), f.at((1, 2))))
            + cumulant_plain(model, t, (1, 2, 3), tensor(f.at((1,)), f.at((2,)), f.at((3,)))))


def _printed_u(model, t, G):
    """``U_1`` and ``U_{1+1}`` for s = 2, written out partition by partition."""
    A = lambda cl, op: cumulant_clustered(model, t, cl, op)
    u1 = A([(1, 2)], G[2]) + A([1, 2], tensor(G.at((1,)), G.at((2,))))
    labels = (1, 2, 3)
    first = 0 * G[3]
    for p in enumerate_partitions(labels):
        first = first + A(list(p), reorder(tensor(*(G.at(b) for b in p)), labels))
    second = (A([(1, 2)], G[3])
              + A([1, 2], reorder(tensor(G.at((1, 3)), G.at((2,))), labels))
              + A([1, 2], reorder(tensor(G.at((1,)), G.at((2, 3))), labels)))
    return u1, first - second


def test_criterion_4_printed_formulas(model):
    rng = np.random.default_rng(4)
    t = 0.6
    f = random_sequence(rng, 3)
    checks = {}
    printed = _printed_nonlinear_group(model, t, f)
    for s in (1, 2, 3):
        got = nonlinear_group_apply(model, t, tuple(range(1, s + 1)), f)
        checks[f"nonlinear_group_s{s}"] = below(max_entry(got, printed[s]), 1e-10)
    cc = nonlinear_cumulant(model, t, (1, 2), (3,), f)
    checks["cc_{1,2},3"] = below(max_entry(cc, _printed_cc(model, t, f)), 1e-10)
    G = random_sequence(rng, 3, max_order=3)
    u1, u11 = _printed_u(model, t, G)
    checks["U_1"] = below(max_entry(reduced_cumulant(model, t, 2, 0, G), u1), 1e-10)
    checks["U_1+1"] = below(max_entry(reduced_cumulant(model, t, 2, 1, G), u11), 1e-10)
    corr = InitialCorrelations({2: random_hermitian((1, 2), 2, rng, 1.0),
                                3: random_hermitian((1, 2, 3), 2, rng, 0.5)})
    op2 = random_hermitian((1, 2), 2, rng)
    op3 = random_hermitian((1, 2, 3), 2, rng)
    g_s = functional_generating_operator(model, t, 2, 0, corr, op2)
    checks["G_s"] = below(max_entry(g_s, scattering_cumulant(model, t, (1, 2), (), corr, op2)),
                          1e-10)
    inner = sum((scattering_cumulant(model, t, j, (3,), corr, op3) for j in (1, 2)),
                start=0 * op3)
    want = (scattering_cumulant(model, t, (1, 2), (3,), corr, op3)
            - scattering_cumulant(model, t, (1, 2), (), corr, inner))
    g_s1 = functional_generating_operator(model, t, 2, 1, corr, op3)
    checks["G_s+1"] = below(max_entry(g_s1, want), 1e-10)
    assert record(4, checks)


def test_criterion_5_cross_representation(model):
    start = time.perf_counter()
    checks = {}
    for N in (1, 2, 3):
        diffs = []
        for delta in (0.05, 0.025):
            comps = {n: random_hermitian(tuple(range(1, n + 1)), 2, rng, delta ** n)
                     for rng in [np.random.default_rng(5)] for n in range(1, N + 2)}
            G0 = CorrelationSequence(comps)
            cfg = SeriesConfig(n_max=N)
            g0 = correlation_sequence_from_marginals(G0, cfg=cfg)
            a = marginal_series_from_vn(model, 0.5, 1, g0, cfg).value
            b = marginal_series_cumulant(model, 0.5, 1, G0, cfg).value
            diffs.append(trace_norm(a - b) / trace_norm(b))
        slope = math.log2(diffs[0] / diffs[1])
        checks[f"exponent_n{N}"] = (slope, abs(slope - (N + 1)) <= 0.15 * (N + 1))
    checks["seconds"] = below(time.perf_counter() - start, 60)
    assert record(5, checks)


def test_criterion_6_bbgky_residual():
    m = default_model(seed=1, epsilon=0.1)
    rng = np.random.default_rng(6)
    checks = {}
    for s in (1, 2):
        G0 = random_sequence(rng, s + 4, delta=0.05)
        res = [bbgky_residual(m, 0.2, s, G0, SeriesConfig(n_max=n)) for n in (1, 2, 3)]
        checks[f"s{s}_n3"] = below(res[2], 1e-3)
        checks[f"s{s}_decreasing"] = (res[0], res[0] > res[1] > res[2])
    assert record(6, checks)


def test_criterion_7_norm_bounds(model):
    rng = np.random.default_rng(7)
    est_ok = term_ok = True
    worst_est = worst_term = 0.0
    for _ in range(100):
        f = random_sequence(rng, 3, delta=float(rng.uniform(0.02, 2.0)), max_order=3)
        t = float(rng.uniform(-2, 2))
        s = int(rng.integers(1, 4))
        ratio = trace_norm(von_neumann_solve(model, t, tuple(range(1, s + 1)), f)) \
            / g_estimate_bound(f, s)
        worst_est = max(worst_est, ratio)
        est_ok &= ratio <= 1
        sn = int(rng.integers(1, 3))
        res = marginal_series_cumulant(model, t, 1, f, SeriesConfig(n_max=min(sn, 2)))
        for n, norm in enumerate(res.term_norms):
            r = norm / marginal_term_bound(f, 1, n)
            worst_term = max(worst_term, r)
            term_ok &= r <= 1
    G0 = random_sequence(rng, 4, delta=0.02)
    premise = theorem1_premise(G0)
    ratios = marginal_series_cumulant(model, 0.7, 1, G0, SeriesConfig(n_max=3)).cauchy_ratios
    checks = {"group_bound_worst_ratio": (worst_est, est_ok),
              "term_bound_worst_ratio": (worst_term, term_ok),
              "cauchy_ratio_max": (max(ratios), premise and max(ratios) < 1)}
    assert record(7, checks)


def test_criterion_8_kinetics(model):
    rng = np.random.default_rng(8)
    g1 = random_density((1,), 2, rng)
    g2 = random_hermitian((1, 2), 2, rng, 0.5)
    grid = np.linspace(0, 1, 11)
    checks = {}
    trajs = {
        "vlasov": vlasov_integrate(model, g1, grid),
        "vlasov_corr": vlasov_correlated_integrate(model, g1, g2, grid),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        trajs["generalized"] = generalized_kinetic_integrate(
            model.with_epsilon(0.1), g1 * 0.05, InitialCorrelations({2: g2}), grid)
    for name, tr in trajs.items():
        checks[f"{name}_trace"] = below(tr.trace_drift(), 1e-9)
        checks[f"{name}_herm"] = below(tr.hermiticity(), 1e-10)
    psi = np.array([0.6, 0.8j])
    h = hartree_evolve(model, psi, grid)
    checks["hartree_norm"] = below(max(abs(np.linalg.norm(p) - 1) for p in h.states), 1e-9)
    rhos = [np.outer(p, p.conj()) for p in h.states]
    checks["hartree_herm"] = below(max(hermiticity_defect(LabeledOperator((1,), r)) for r in rhos),
                                   1e-10)
    v = vlasov_integrate(model, LabeledOperator((1,), rhos[0]), grid)
    checks["purity_drift"] = below(max(abs(np.trace(s.mat @ s.mat).real - 1) for s in v.states),
                                   1e-8)
    rhs = lambda t, y: vlasov_rhs(model, y)
    ref = rk4_solve(rhs, g1.mat, [0, 1], 1e-3)[-1]
    errs = [np.abs(rk4_solve(rhs, g1.mat, [0, 1], dt)[-1] - ref).max() for dt in (0.1, 0.05)]
    order = math.log2(errs[0] / errs[1])
    checks["rk4_order"] = (order, 3.7 <= order <= 4.3)
    chaos_series, info = iterated_series_g1(model, g1, 0.1, 3)
    checks["below_t0"] = (0.1, info["below_t0"])
    checks["series_vs_vlasov"] = below(
        trace_norm(chaos_series - vlasov_integrate(model, g1, [0, 0.1]).final), 1e-4)
    corr_series, _ = iterated_series_g1(model, g1, 0.1, 3, corr=InitialCorrelations({2: g2}))
    checks["series_vs_vlasov_corr"] = below(
        trace_norm(corr_series - vlasov_correlated_integrate(model, g1, g2, [0, 0.1]).final), 1e-4)
    assert record(8, checks)


def test_criterion_9_mean_field(model):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    g1 = random_density((1,), rng=rng)
    g2 = random_hermitian((1, 2), rng=rng, trace_norm_value=0.5)
    f = random_density((1, 2, 3), rng=rng)
    corr = InitialCorrelations({2: g2})
    eps = [1e-1, 1e-2, 1e-3]
    checks = {}
    term_slope = term_scaling_check(model, 0.5, 2, 1, f, eps).slope
    checks["term_scaling_slope"] = (term_slope, abs(term_slope - 1) <= 0.1)
    decay = chaos_decay_check(model, 0.5, 2, g1).slope
    checks["chaos_decay_slope"] = (decay, decay >= 0.9)
    chaos = limit_sequence_builder(model, g1, InitialCorrelations.none(), 4)
    builder = limit_sequence_builder(model, g1, corr, 4)
    for s in (1, 2, 3):
        checks[f"limit_residual_chaos_s{s}"] = below(vlasov_hierarchy_residual(model, 0.1, s, chaos),
                                                     1e-4)
        checks[f"limit_residual_corr_s{s}"] = below(vlasov_hierarchy_residual(model, 0.1, s, builder),
                                                    1e-4)
    cfg = SeriesConfig(n_max=3)
    chaos_rate = meanfield_sweep(model, 0.1, 2, g1, None, eps, cfg).slope
    checks["sweep_rate_chaos_s2"] = (chaos_rate, chaos_rate >= 0.9)
    for s in (1, 2):
        rate = meanfield_sweep(model, 0.1, s, g1, corr, eps, cfg).slope
        checks[f"sweep_rate_corr_s{s}"] = (rate, rate >= 0.9)
    checks["seconds"] = below(time.perf_counter() - start, 300)
    assert record(9, checks)


def _eigh_evolve(model, t, mat, n):
    w, v = np.linalg.eigh(model.hamiltonian_matrix(n))
    u = (v * np.exp(-1j * t * w)) @ v.conj().T
    return u @ mat @ u.conj().T


def _mobius_invert(states, s):
    labels = tuple(range(1, s + 1))
    acc = 0
    for p in enumerate_partitions(labels):
        ops = [LabeledOperator(b, states[len(b)], 2) for b in p]
        acc = acc + mobius_weight(len(p)) * reorder(tensor(*ops), labels).mat
    return acc


def test_criterion_10_closed_system_oracle(model):
    D = random_sequence(np.random.default_rng(10), 3, delta=0.6)
    states0 = {n: D[n].mat for n in (1, 2, 3)}
    g0 = CorrelationSequence({n: _mobius_invert(states0, n) for n in (1, 2, 3)}, tol=1e-9)
    worst = 0.0
    for t in (0.3, 0.8):
        states = {n: _eigh_evolve(model, t, states0[n], n) for n in (1, 2, 3)}
        for s in (1, 2, 3):
            got = von_neumann_solve(model, t, tuple(range(1, s + 1)), g0)
            worst = max(worst, float(np.abs(got.mat - _mobius_invert(states, s)).max()))
    assert record(10, {"max_entry_diff": below(worst, 1e-10)})
