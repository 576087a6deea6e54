"""Mean-field scaling experiments.

The interaction is scaled by ``eps`` in the Hamiltonian and the one-particle
data by ``1/eps``.  Series terms are rescaled one at a time: a cumulant term
of order ``s+n`` acting on ``s+n`` one-particle factors of size ``1/eps`` and
multiplied by ``eps^s`` equals ``eps^-n`` times the same term on the unscaled
factors, so every term stays finite as ``eps -> 0``.

Cumulants of order ``s+n`` cancel down to ``O(eps^(s+n-1))`` from O(1)
pieces, hence the rescaled terms carry a roundoff of about ``1e-16 / eps^n``.
Keep ``eps >= 1e-3`` for ``n <= 3``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cumulants import cumulant_plain, nonlinear_cumulant
from .functionals import InitialCorrelations
from .hierarchy import SeriesConfig
from .kinetics import iterated_series_g1, limit_correlations, vlasov_correlated_integrate
from .operators import (
    DomainError,
    partial_trace,
    relabel,
    tensor,
    trace_norm,
    zeros,
)


@dataclass
class ScalingTable:
    """Measured values per ``eps`` and the least-squares log-log slope."""

    eps: list
    values: list
    slope: float
    meta: dict = field(default_factory=dict)

    def rows(self):
        return [{"eps": e, "value": v, "slope": self.slope} for e, v in zip(self.eps, self.values)]


def fit_loglog(xs, ys):
    """Slope of ``log y`` against ``log x``; nan with fewer than two positive points."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return float("nan")
    x, y = np.log(np.array(pts)).T
    return float(np.polyfit(x, y, 1)[0])


def _check_eps(eps_list, minimum=3):
    eps = [float(e) for e in eps_list]
    if len(eps) < minimum:
        raise DomainError(f"need at least {minimum} eps values")
    if any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise DomainError("eps_list must be positive and decreasing")
    return eps


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _product(g1, labels):
    g1 = relabel(g1, (1,))
    return tensor(*(relabel(g1, (l,)) for l in labels))


def term_scaling_check(model_template, t, s, n, f, eps_list, workers=1):
    """``eps^-n ||A_{s+n}(t) f||_1`` for each ``eps`` and its log-log slope.

    ``f`` lives on the labels ``1..s+n``.  For ``s = 1`` the slope is about 0
    and ``meta["terms"]`` keeps the rescaled traced terms ``eps^-n Tr A f``.
    """
    eps = _check_eps(eps_list, 2)
    labels = tuple(range(1, s + n + 1))
    if tuple(sorted(f.labels)) != labels:
        raise DomainError(f"f must live on {labels}")

    def one(e):
        a = cumulant_plain(model_template.with_epsilon(e), t, labels, f) / e ** n
        return trace_norm(a), partial_trace(a, labels[s:])

    out = _map(one, eps, workers)
    values = [v for v, _ in out]
    return ScalingTable(eps, values, fit_loglog(eps, values),
                        {"s": s, "n": n, "t": t, "terms": [x for _, x in out]})


def scaled_chaos_term(model, t, s, n, g1_0):
    """``eps^-n / n! Tr_{s+1..s+n} A_{s+n}(t) prod g_1^0`` with ``eps = model.epsilon``."""
    labels = tuple(range(1, s + n + 1))
    a = cumulant_plain(model, t, labels, _product(g1_0, labels))
    return partial_trace(a, labels[s:]) / (math.factorial(n) * model.epsilon ** n)


def chaos_decay_check(model_template, t, s, g1_0, cfg=SeriesConfig(n_max=2),
                      eps_list=(1e-1, 1e-2, 1e-3), workers=1):
    """Truncated ``eps^s G_s(t)`` for chaos data ``G_1^0 = g_1^0 / eps``.

    For ``s >= 2`` the table holds ``||eps^s G_s(t)||_1``.  For ``s = 1`` it holds
    the distance to the limit series truncated at the same order.
    """
    eps = _check_eps(eps_list)
    g1_0 = relabel(g1_0, (1,))
    Y = tuple(range(1, s + 1))
    if s == 1:
        limit, _ = iterated_series_g1(model_template, g1_0, t, cfg.n_max)

    def one(e):
        m = model_template.with_epsilon(e)
        acc = zeros(Y, g1_0.dim)
        for n in range(cfg.n_max + 1):
            acc = acc + scaled_chaos_term(m, t, s, n, g1_0)
        return trace_norm(acc - limit) if s == 1 else trace_norm(acc)

    values = _map(one, eps, workers)
    return ScalingTable(eps, values, fit_loglog(eps, values),
                        {"s": s, "t": t, "n_max": cfg.n_max,
                         "quantity": "distance to limit" if s == 1 else "norm"})


def _perturbed(corr, perturbation, e):
    if perturbation is None:
        return corr
    comps = {}
    for n in set(corr._g) | set(perturbation._g):
        labels = tuple(range(1, n + 1))
        a = corr.at(labels) if corr.has(n) else zeros(labels, corr.dim)
        b = perturbation.at(labels) if perturbation.has(n) else zeros(labels, corr.dim)
        comps[n] = a + b * e
    return InitialCorrelations(comps, corr.dim, corr.mode)


def scaled_correlation(model, t, s, g1_0, corr, n_max):
    """Term-wise ``eps^s G_s(t)`` for ``G_1^0 = g_1^0 / eps`` and ``g_n^eps`` from ``corr``."""
    e = model.epsilon
    G0 = corr.marginals(g1_0, s + n_max)
    Y = tuple(range(1, s + 1))
    acc = zeros(Y, G0.dim)
    for n in range(n_max + 1):
        extra = tuple(range(s + 1, s + n + 1))
        term = nonlinear_cumulant(model, t, Y, extra, G0)
        acc = acc + partial_trace(term, extra) / (math.factorial(n) * e ** n)
    return acc


def limit_one_particle(model, t, g1_0, corr, n_max, source="series", dt=1e-3):
    """Limit one-particle operator from the iterated series or the kinetic integrator."""
    if source == "series":
        return iterated_series_g1(model, g1_0, t, n_max, corr=corr)[0]
    if source == "integrator":
        g2 = corr.at((1, 2)) if corr is not None and corr.has(2) else None
        return vlasov_correlated_integrate(model, g1_0, g2, [0.0, t], dt, check_step=False).final
    raise DomainError(f"unknown limit source {source!r}")


def meanfield_sweep(model_template, t, s, g1_0, corr_limit=None, eps_list=(1e-1, 1e-2, 1e-3),
                    cfg=SeriesConfig(n_max=3), limit_source="integrator", perturbation=None,
                    workers=1):
    """Distance between the rescaled correlation and its mean-field limit object.

    The limit object is the one-particle limit operator for ``s = 1`` and the
    freely transported ``g_s`` acting on ``prod g_1(t)`` for ``s >= 2`` (zero
    when ``g_s`` is absent).  ``limit_source`` selects how ``g_1(t)`` is
    obtained.  ``perturbation`` adds ``eps * dg_n`` to the initial correlations.
    """
    if s < 1:
        raise DomainError("need s >= 1")
    eps = _check_eps(eps_list)
    corr = corr_limit if corr_limit is not None else InitialCorrelations.none(model_template.d)
    g1_0 = relabel(g1_0, (1,))
    target = target_operator(model_template, t, s, g1_0, corr, cfg.n_max, limit_source)

    def one(e):
        m = model_template.with_epsilon(e)
        got = scaled_correlation(m, t, s, g1_0, _perturbed(corr, perturbation, e), cfg.n_max)
        return trace_norm(got - target)

    values = _map(one, eps, workers)
    return ScalingTable(eps, values, fit_loglog(eps, values),
                        {"s": s, "t": t, "n_max": cfg.n_max, "limit_source": limit_source,
                         "target_norm": trace_norm(target)})


def target_operator(model, t, s, g1_0, corr, n_max, limit_source="integrator"):
    """The limit object used by ``meanfield_sweep``."""
    g1_t = limit_one_particle(model, t, relabel(g1_0, (1,)), corr, n_max, limit_source)
    Y = tuple(range(1, s + 1))
    if s == 1:
        return g1_t
    if corr is not None and corr.has(s):
        return limit_correlations(model, t, Y, corr.at(Y), g1_t)
    return zeros(Y, g1_t.dim)
