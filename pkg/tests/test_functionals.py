import math
import warnings

import numpy as np
import pytest

from conftest import max_entry
from corrdyn.cumulants import cumulant_plain
from corrdyn.dynamics import default_model, free_all, group_apply
from corrdyn.functionals import (
    InitialCorrelations,
    correlation_functional,
    functional_generating_operator,
    functional_guard,
    scattering_cumulant,
)
from corrdyn.hierarchy import SeriesConfig, marginal_series_cumulant
from corrdyn.operators import (
    DomainError,
    jordan,
    random_density,
    random_hermitian,
    relabel,
    reorder,
    tensor,
    trace_norm,
)


@pytest.fixture
def corr(rng):
    return InitialCorrelations({n: random_hermitian(tuple(range(1, n + 1)), 2, rng, 1.0)
                                for n in (2, 3)})


def test_validation(rng):
    with pytest.raises(DomainError):
        InitialCorrelations({1: np.eye(2)})
    with pytest.raises(DomainError):
        InitialCorrelations({2: random_hermitian((1, 2), 2, rng, symmetric=False)})
    with pytest.raises(DomainError):
        InitialCorrelations(mode="other")


def test_blockwise_action_is_multiplicative(corr, rng):
    a = random_hermitian((1, 2), 2, rng)
    b = random_hermitian((3, 4), 2, rng)
    got = corr.act([(1, 2), (3, 4)], tensor(a, b))
    want = tensor(jordan(corr.at((1, 2)), a), jordan(corr.at((3, 4)), b))
    assert max_entry(got, want) < 1e-14


def test_factor_partition_sum(corr):
    f = corr.factor((1, 2))
    assert max_entry(f, corr.at((1, 2)) + tensor(corr.at((1,)), corr.at((2,)))) < 1e-14


def test_marginals_components(corr, rng):
    g1 = random_density((1,), 2, rng)
    G = corr.marginals(g1, 3)
    want = jordan(corr.at((1, 2)), tensor(g1, relabel(g1, (2,))))
    assert max_entry(G[2], want) < 1e-14
    assert G.scalar == 1.0


def test_scattering_at_time_zero(model, corr, rng):
    op = random_hermitian((1, 2, 3), 2, rng)
    head = scattering_cumulant(model, 0.0, (1, 2, 3), (), corr, op)
    assert max_entry(head, jordan(corr.at((1, 2, 3)), op)) < 1e-13
    extra = scattering_cumulant(model, 0.0, (1, 2), (3,), corr, op)
    assert trace_norm(extra) < 1e-13


def test_chaos_pair_scattering(model, rng):
    # no correlations: A2(t) applied after inverse free motions = G2 G1(-t) G1(-t) - I
    op = random_hermitian((1, 2), 2, rng)
    got = scattering_cumulant(model, 0.5, 1, (2,), InitialCorrelations.none(), op)
    want = group_apply(model, 0.5, (1, 2), free_all(model, -0.5, op)) - op
    assert max_entry(got, want) < 1e-13


def test_single_head_is_cumulant_on_partition_factor(model, corr, rng):
    op = random_hermitian((1, 2), 2, rng)
    got = scattering_cumulant(model, 0.4, 1, (2,), corr, op)
    x = free_all(model, -0.4, op)
    want = cumulant_plain(model, 0.4, (1, 2), x + jordan(corr.at((1, 2)), x))
    assert max_entry(got, want) < 1e-13


def test_literal_mode(model, rng):
    g2 = random_hermitian((1, 2), 2, rng, 1.0)
    corr = InitialCorrelations({2: g2}, mode="literal")
    op = random_hermitian((1, 2), 2, rng)
    got = scattering_cumulant(model, 0.3, 1, (2,), corr, op)
    want = cumulant_plain(model, 0.3, (1, 2), jordan(g2, free_all(model, -0.3, op)))
    assert max_entry(got, want) < 1e-13


@pytest.mark.parametrize("mode", ["partition", "literal"])
def test_generating_operator_printed_examples(model, rng, mode):
    g2 = random_hermitian((1, 2), 2, rng, 1.0)
    g3 = random_hermitian((1, 2, 3), 2, rng, 0.5)
    corr = InitialCorrelations({2: g2, 3: g3}, mode=mode)
    t = 0.35
    op = random_hermitian((1, 2, 3), 2, rng)
    # G_s = A_s(Y)
    op2 = random_hermitian((1, 2), 2, rng)
    g0 = functional_generating_operator(model, t, 2, 0, corr, reorder(op2, (2, 1)))
    assert max_entry(g0, scattering_cumulant(model, t, (1, 2), (), corr, op2)) < 1e-12
    # G_{s+1} = A_{s+1}(Y, s+1) - A_s(Y) sum_j A_2(j, s+1)
    g1 = functional_generating_operator(model, t, 2, 1, corr, op)
    inner = sum((scattering_cumulant(model, t, j, (3,), corr, op) for j in (1, 2)),
                start=0 * op)
    want = (scattering_cumulant(model, t, (1, 2), (3,), corr, op)
            - scattering_cumulant(model, t, (1, 2), (), corr, inner))
    assert max_entry(g1, want) < 1e-12


def test_guard_radius_and_status(model, rng):
    assert functional_guard(2) == pytest.approx(math.exp(-8))
    G1 = random_density((1,), 2, rng) * 0.1
    corr = InitialCorrelations.none()
    with pytest.warns(RuntimeWarning):
        res = correlation_functional(model, 0.2, 2, G1, corr, SeriesConfig(n_max=0))
    assert res.status == "guard-exceeded"
    small = correlation_functional(model, 0.2, 2, G1 * 1e-3, corr, SeriesConfig(n_max=0))
    assert small.status == "ok"


def test_chaos_functional_at_time_zero(model, rng):
    G1 = random_density((1,), 2, rng) * 1e-4
    res = correlation_functional(model, 0.0, 2, G1, InitialCorrelations.none(),
                                 SeriesConfig(n_max=1))
    assert trace_norm(res.value) < 1e-16


def test_functional_reproduces_hierarchy(rng):
    # relative error of the functional against the hierarchy route falls like delta^(N+1)
    m = default_model(seed=1)
    corr = InitialCorrelations({n: random_hermitian(tuple(range(1, n + 1)), 2, rng, 1.0)
                                for n in (2, 3)})
    rho = random_density((1,), 2, rng)
    t = 0.6

    def err(delta, N):
        G0 = corr.marginals(rho * delta, 2 + N + 2)
        cfg = SeriesConfig(n_max=N + 2)
        G1t = marginal_series_cumulant(m, t, 1, G0, cfg).value
        G2 = marginal_series_cumulant(m, t, 2, G0, cfg).value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            F = correlation_functional(m, t, 2, G1t, corr, SeriesConfig(n_max=N), guard=False)
        return trace_norm(F.value - G2) / trace_norm(G2)

    for N in (0, 1):
        slope = math.log(err(0.04, N) / err(0.02, N), 2)
        assert slope == pytest.approx(N + 1, abs=0.15)
