"""von Neumann and nonlinear BBGKY hierarchies: solutions, series and residuals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cumulants import (
    CorrelationSequence,
    cumulant_clustered,
    nonlinear_cumulant,
    nonlinear_group_apply,
    reduced_cumulant,
)
from .dynamics import embed_pair, generator_apply, positions
from .operators import (
    DomainError,
    LabeledOperator,
    partial_trace,
    relabel,
    reorder,
    tensor,
    trace_norm,
)
from .partitions import enumerate_bipartitions, enumerate_partitions, mobius_weight


@dataclass(frozen=True)
class SeriesConfig:
    n_max: int = 2
    fd_step: float = 1e-3
    tol_algebraic: float = 1e-10
    tol_fd: float = 1e-4
    guard_radius: float | None = None
    stencil: int = 5

    def __post_init__(self):
        if self.n_max < 0:
            raise DomainError("n_max must be nonnegative")
        if self.fd_step <= 0:
            raise DomainError("fd_step must be positive")
        if self.stencil not in (3, 5):
            raise DomainError("stencil must be 3 or 5")


@dataclass
class SeriesResult:
    """Truncated series with per-term diagnostics."""

    value: LabeledOperator
    terms: list = field(default_factory=list)
    status: str = "ok"

    @property
    def term_norms(self):
        return [r["trace_norm"] for r in self.terms]

    @property
    def cauchy_ratios(self):
        norms = self.term_norms
        return [b / a if a > 0 else math.inf for a, b in zip(norms, norms[1:]) if a or b]

    def records(self):
        return [dict(r) for r in self.terms]


def time_derivative(fn, t, cfg):
    """Central finite difference of an operator-valued function of time."""
    h = cfg.fd_step
    if cfg.stencil == 3:
        return (fn(t + h) - fn(t - h)) / (2 * h)
    return (fn(t - 2 * h) - 8 * fn(t - h) + 8 * fn(t + h) - fn(t + 2 * h)) / (12 * h)


def _sum_series(terms_iter, labels, dim):
    acc = None
    records = []
    for n, term in terms_iter:
        acc = term if acc is None else acc + term
        records.append({"n": n, "trace_norm": trace_norm(term), "cumulative_norm": trace_norm(acc)})
    return SeriesResult(reorder(acc, labels), records)


# --- von Neumann hierarchy --------------------------------------------------

def von_neumann_solve(model, t, Y, g0, method="partition"):
    """``g(t, Y) = G(t; Y | g(0))``."""
    return nonlinear_group_apply(model, t, tuple(Y), g0, method=method)


def evolved_sequence(model, t, g0, max_order=None, method="cluster"):
    """The whole sequence ``(G(t; 1..n | g0))_n`` as a CorrelationSequence."""
    top = g0.max_order if max_order is None else max_order
    comps = {n: von_neumann_solve(model, t, tuple(range(1, n + 1)), g0, method)
             for n in range(1, top + 1)}
    return CorrelationSequence(comps, g0.dim, g0.scalar, top, tol=1e-8)


def _interaction(model, op, i1, i2):
    p = positions(op.labels, (i1, i2))
    if p[0] > p[1]:
        p = p[::-1]
    H = embed_pair(model.Phi, model.d, op.n, *p)
    return LabeledOperator(op.labels, -1j * (H @ op.mat - op.mat @ H), op.dim)


def collision_pairs(model, Y, g, pinned_first=(), pinned_second=(), convention="unordered"):
    """``sum_{X1, X2} sum_{i1 in X1, i2 in X2} N_int(i1, i2) g(X1) g(X2)`` (no epsilon)."""
    Y = tuple(Y)
    side = g.dim ** len(Y)
    acc = np.zeros((side, side), dtype=complex)
    if len(Y) < 2:
        return LabeledOperator(Y, acc, g.dim)
    for x1, x2 in enumerate_bipartitions(Y, pinned_first, pinned_second):
        if g.is_zero(len(x1)) or g.is_zero(len(x2)):
            continue
        prod = reorder(tensor(g.at(x1), g.at(x2)), Y)
        for i1 in x1:
            if pinned_first and i1 not in pinned_first:
                continue
            for i2 in x2:
                if pinned_second and i2 not in pinned_second:
                    continue
                acc += _interaction(model, prod, i1, i2).mat
    if convention == "ordered":
        acc *= 2
    elif convention != "unordered":
        raise DomainError(f"unknown convention {convention!r}")
    return LabeledOperator(Y, acc, g.dim)


def von_neumann_generator_apply(model, Y, g, convention="unordered"):
    """``N(Y | g) = N*_s g_s + eps sum_{X1,X2} sum N_int(i1,i2) g g``.

    ``convention="ordered"`` counts every bipartition twice (negative control).
    """
    Y = tuple(Y)
    out = generator_apply(model, Y, g.at(Y))
    if len(Y) >= 2 and model.epsilon != 0.0:
        out = out + model.epsilon * collision_pairs(model, Y, g, convention=convention)
    return out


def vn_hierarchy_residual(model, t, Y, g0, cfg=SeriesConfig(), convention="unordered"):
    """Trace norm of ``d/dt g(t, Y) - N(Y | g(t))`` by central differences."""
    Y = tuple(Y)
    d = time_derivative(lambda u: von_neumann_solve(model, u, Y, g0, "cluster"), t, cfg)
    canon = tuple(range(1, len(Y) + 1))
    gt = evolved_sequence(model, t, g0, len(Y))
    rhs = relabel(von_neumann_generator_apply(model, canon, gt, convention), Y)
    return trace_norm(d - rhs)


# --- marginal correlation operators -----------------------------------------

def _traced(op, s):
    return partial_trace(op, [l for l in op.labels if l > s])


def marginal_series_from_vn(model, t, s, g0, cfg=SeriesConfig(), method="cluster"):
    """``G_s(t) = sum_n 1/n! Tr_{s+1..s+n} G(t; 1..s+n | g(0))`` truncated at n_max."""
    Y = tuple(range(1, s + 1))

    def terms():
        for n in range(cfg.n_max + 1):
            full = nonlinear_group_apply(model, t, tuple(range(1, s + n + 1)), g0, method=method)
            yield n, _traced(full, s) / math.factorial(n)

    return _sum_series(terms(), Y, g0.dim)


def marginal_series_cumulant(model, t, s, G0, cfg=SeriesConfig(), method="cc"):
    """``G_s(t) = sum_n 1/n! Tr A_{1+n}(t; {Y}, s+1, ..., s+n | G(0))`` truncated at n_max.

    ``method="reduced"`` uses the reduced cumulants instead.
    """
    Y = tuple(range(1, s + 1))

    def terms():
        for n in range(cfg.n_max + 1):
            extra = tuple(range(s + 1, s + n + 1))
            if method == "cc":
                full = nonlinear_cumulant(model, t, Y, extra, G0)
            elif method == "reduced":
                full = reduced_cumulant(model, t, s, n, G0)
            else:
                raise DomainError(f"unknown method {method!r}")
            yield n, _traced(full, s) / math.factorial(n)

    return _sum_series(terms(), Y, G0.dim)


def marginal_sequence(model, t, G0, max_order, cfg=SeriesConfig(), method="cc"):
    comps = {s: marginal_series_cumulant(model, t, s, G0, cfg, method).value
             for s in range(1, max_order + 1)}
    return CorrelationSequence(comps, G0.dim, G0.scalar, max_order, tol=1e-8)


def correlations_from_marginals(G0, s, cfg=SeriesConfig()):
    """``g_s = sum_n (-1)^n / n! Tr_{s+1..s+n} G_{s+n}`` truncated at n_max and at G0's top order."""
    acc = G0[s]
    for n in range(1, cfg.n_max + 1):
        if s + n > G0.max_order:
            break
        if G0.is_zero(s + n):
            continue
        acc = acc + ((-1) ** n / math.factorial(n)) * _traced(G0[s + n], s)
    return acc


def correlation_sequence_from_marginals(G0, max_order=None, cfg=SeriesConfig()):
    top = G0.max_order if max_order is None else max_order
    comps = {s: correlations_from_marginals(G0, s, cfg) for s in range(1, top + 1)}
    return CorrelationSequence(comps, G0.dim, G0.scalar, top, tol=1e-8)


def density_correlation_transform(seq, direction="forward", max_order=None):
    """Cluster expansion ``F_s = sum_P prod G`` (forward) or its Moebius inverse."""
    top = seq.max_order if max_order is None else max_order
    comps = {}
    for s in range(1, top + 1):
        Y = tuple(range(1, s + 1))
        acc = np.zeros((seq.dim ** s,) * 2, dtype=complex)
        for p in enumerate_partitions(Y):
            if any(seq.is_zero(len(b)) for b in p):
                continue
            w = 1 if direction == "forward" else mobius_weight(len(p))
            if direction not in ("forward", "inverse"):
                raise DomainError(f"unknown direction {direction!r}")
            acc += w * reorder(tensor(*(seq.at(b) for b in p)), Y).mat
        comps[s] = LabeledOperator(Y, acc, seq.dim)
    return CorrelationSequence(comps, seq.dim, 1.0, top, tol=1e-8)


def marginal_density_series(model, t, s, F1_0, cfg=SeriesConfig()):
    """``F_s(t) = sum_n 1/n! Tr A_{1+n}(t; {Y}, s+1, ...) prod F_1^0`` truncated at n_max."""
    Y = tuple(range(1, s + 1))
    F1 = F1_0 if isinstance(F1_0, LabeledOperator) else LabeledOperator((1,), F1_0)

    def terms():
        for n in range(cfg.n_max + 1):
            labels = tuple(range(1, s + n + 1))
            prod = tensor(*(relabel(F1, (l,)) for l in labels))
            full = cumulant_clustered(model, t, [Y] + [(l,) for l in labels[s:]], prod)
            yield n, _traced(full, s) / math.factorial(n)

    return _sum_series(terms(), Y, F1.dim)


def bbgky_rhs(model, s, G, form="corrected"):
    """Right-hand side of the nonlinear BBGKY hierarchy for ``G_s`` given ``G_1..G_{s+1}``.

    ``form="literal"`` places epsilon only on the quadratic collision term.
    """
    Y = tuple(range(1, s + 1))
    out = von_neumann_generator_apply(model, Y, G)
    Ys = Y + (s + 1,)
    acc = np.zeros((G.dim ** (s + 1),) * 2, dtype=complex)
    for i in Y:
        acc += _interaction(model, G.at(Ys), i, s + 1).mat
        pairs = collision_pairs(model, Ys, G, pinned_first=(i,), pinned_second=(s + 1,))
        w = 1.0 if form == "corrected" else model.epsilon
        if form not in ("corrected", "literal"):
            raise DomainError(f"unknown form {form!r}")
        acc += w * pairs.mat
    scale = model.epsilon if form == "corrected" else 1.0
    coll = partial_trace(LabeledOperator(Ys, acc, G.dim), (s + 1,))
    return out + scale * coll


def bbgky_residual(model, t, s, G0, cfg=SeriesConfig(), form="corrected", method="cc"):
    """Trace norm of ``d/dt G_s(t)`` minus the BBGKY right-hand side, both from the series."""
    d = time_derivative(lambda u: marginal_series_cumulant(model, u, s, G0, cfg, method).value,
                        t, cfg)
    Gt = marginal_sequence(model, t, G0, s + 1, cfg, method)
    return trace_norm(d - bbgky_rhs(model, s, Gt, form))


# --- bounds ------------------------------------------------------------------

def g_estimate_constant(f, s):
    """``c = e^3 max(1, max ||f_k||)`` over the orders that occur for ``s`` particles."""
    top = max([trace_norm(f[k]) for k in range(1, s + 1)] + [1.0])
    return math.e ** 3 * top


def g_estimate_bound(f, s):
    return math.factorial(s) * math.e ** (2 * s) * g_estimate_constant(f, s) ** s


def marginal_term_bound(f, s, n):
    """``s! (2e^2)^s c^s (2e^2 c)^n`` for the n-th term of the marginal series."""
    c = g_estimate_constant(f, s + n)
    return math.factorial(s) * (2 * math.e ** 2 * c) ** s * (2 * math.e ** 2 * c) ** n


THEOREM1_RADIUS = 1.0 / (2 * math.e ** 3)


def theorem1_premise(G0):
    """True when every initial marginal correlation operator is below ``(2e^3)^-1``."""
    return max(G0.norms().values(), default=0.0) < THEOREM1_RADIUS
