"""Marginal correlation functionals of the one-particle correlation operator.

Initial correlations ``g_n`` act on operators through the symmetrized product
``X -> (g X + X g) / 2``.  For a partition of the particles into blocks the
actions of the block correlations are composed; they commute because the
blocks are disjoint, and on product operators the composite equals the
tensor product of the blockwise actions.
"""

from __future__ import annotations

import itertools
import math
import warnings

import numpy as np

from .cumulants import CorrelationSequence, cumulant_clustered
from .dynamics import free_all, partition_group_apply
from .hierarchy import SeriesConfig, SeriesResult, _sum_series
from .operators import (
    DomainError,
    LabeledOperator,
    check_symmetry,
    identity,
    is_hermitian,
    jordan,
    partial_trace,
    relabel,
    reorder,
    tensor,
    trace_norm,
)
from .partitions import (
    bounded_compositions,
    enumerate_dissections,
    enumerate_partitions,
    meet,
    mobius_weight,
)


class InitialCorrelations:
    """Correlation operators ``g_n``, ``n >= 2``, stored on ``(1..n)``.

    Absent orders are zero.  With ``mode="partition"`` (default) a scattering
    cumulant weights its input by the correlation factor of every partition of
    its particles and propagates each weighted input with the cumulant kernel
    of that partition relative to the head cluster.  ``mode="literal"`` keeps
    only the top-order cumulant and the top-order factor ``g_{s+n}``, with the
    identity standing in for an absent order (a control).
    """

    def __init__(self, components=None, dim=2, mode="partition", tol=1e-10):
        if mode not in ("partition", "literal"):
            raise DomainError(f"unknown mode {mode!r}")
        self.dim = int(dim)
        self.mode = mode
        self._g = {}
        for n, op in dict(components or {}).items():
            n = int(n)
            if n < 2:
                raise DomainError("initial correlations start at n = 2")
            mat = op.mat if isinstance(op, LabeledOperator) else np.asarray(op, dtype=complex)
            value = LabeledOperator(tuple(range(1, n + 1)), mat, self.dim)
            if tol is not None and not (check_symmetry(value, tol) and is_hermitian(value, tol)):
                raise DomainError(f"g_{n} must be Hermitian and permutation symmetric")
            self._g[n] = value

    @classmethod
    def none(cls, dim=2, mode="partition"):
        return cls({}, dim, mode)

    def __repr__(self):
        return f"InitialCorrelations(orders={sorted(self._g)}, mode={self.mode!r})"

    def has(self, n):
        return n in self._g

    def at(self, labels):
        labels = tuple(labels)
        n = len(labels)
        if n in self._g:
            return relabel(self._g[n], labels)
        if self.mode == "literal" or n == 1:
            return identity(labels, self.dim)
        raise DomainError(f"no correlation of order {n}")

    def act(self, blocks, op):
        """Composite symmetrized action of ``g`` over the blocks of size >= 2."""
        for b in blocks:
            if len(b) >= 2:
                op = reorder(jordan(self.at(b), op), op.labels)
        return op

    def factor(self, labels):
        """Partition sum ``sum_P prod g_{|X|}(X)`` with ``g_1 = I``."""
        labels = tuple(labels)
        acc = np.zeros((self.dim ** len(labels),) * 2, dtype=complex)
        for p in enumerate_partitions(labels):
            if any(len(b) >= 2 and not self.has(len(b)) for b in p):
                continue
            acc += reorder(tensor(*(self.at(b) for b in p)), labels).mat
        return LabeledOperator(labels, acc, self.dim)

    def marginals(self, G1, max_order):
        """Initial marginal correlations ``(G1, g_2 * G1 G1, ..., g_n * prod G1)``."""
        G1 = relabel(G1, (1,))
        comps = {1: G1}
        for n in range(2, max_order + 1):
            if self.has(n):
                labels = tuple(range(1, n + 1))
                prod = tensor(*(relabel(G1, (l,)) for l in labels))
                comps[n] = self.act([labels], prod)
        return CorrelationSequence(comps, self.dim, 1.0, max_order, tol=1e-8)


def scattering_cumulant(model, t, clusters, extra, corr, op=None):
    """Scattering cumulant of ``({Y}, s+1, ..., s+n)`` applied to ``op``.

    ``clusters`` is the head cluster ``Y`` (a label or a tuple of labels) and
    ``extra`` the added particles.  ``op`` defaults to the identity; labels of
    ``op`` outside the particle set are spectators.
    """
    head = tuple(clusters) if isinstance(clusters, (tuple, list)) else (clusters,)
    head = tuple(l for c in head for l in (c if isinstance(c, (tuple, list)) else (c,)))
    extra = tuple(extra)
    labels = head + extra
    if len(set(labels)) != len(labels):
        raise DomainError("particle labels must be distinct")
    if op is None:
        op = identity(labels, corr.dim)
    return _scatter(model, t, head, extra, corr, op)


def _scatter(model, t, head, extra, corr, op):
    labels = tuple(head) + tuple(extra)
    if len(labels) == 1:
        return op
    x = free_all(model, -t, op, labels)
    if corr.mode == "literal":
        x = corr.act([labels], x)
        return cumulant_clustered(model, t, [(l,) for l in labels], x)
    # correlation-weighted inputs, one per partition P of the particles
    weighted = {}
    for p in enumerate_partitions(labels):
        if any(len(b) >= 2 and not corr.has(len(b)) for b in p):
            continue
        weighted[p] = corr.act(p, x).mat
    cuts = [(mobius_weight(len(r)), [tuple(l for e in z for l in elements[e]) for z in r])
            for elements in [[tuple(head)] + [(l,) for l in extra]]
            for r in enumerate_partitions(tuple(range(1 + len(extra))))]
    acc = np.zeros_like(x.mat)
    for q in enumerate_partitions(labels):
        finer = [w for p, w in weighted.items() if _refines(p, q)]
        if not finer:
            continue
        yq = LabeledOperator(op.labels, sum(finer), op.dim)
        for w, decouple in cuts:
            acc += w * mobius_weight(len(q)) * partition_group_apply(
                model, t, meet(q, tuple(decouple)), yq).mat
    return LabeledOperator(op.labels, acc, op.dim)


def _refines(p, q):
    owner = {l: k for k, b in enumerate(q) for l in b}
    return all(len({owner[l] for l in b}) == 1 for b in p)


def _attachments(model, t, corr, Z, N, op, weight):
    """``sum_D w(D) sum_{i injective} prod 1/|X|! A(i_l, X_l)`` applied to ``op``."""
    acc = np.zeros_like(op.mat)
    for d in enumerate_dissections(Z, N):
        w = 1.0 / math.factorial(len(d)) if weight == "dissection" else 1.0
        for idx in itertools.permutations(range(1, N + 1), len(d)):
            x = op
            for i, block in zip(idx, d):
                x = _scatter(model, t, (i,), block, corr, x) / math.factorial(len(block))
            acc += w * x.mat
    return LabeledOperator(op.labels, acc, op.dim)


def functional_generating_operator(model, t, s, n, corr, op, order="inner_first",
                                   weight="dissection"):
    """Generating operator of order ``s+n`` applied to ``op`` on labels ``1..s+n``.

    The attachment stages ``j = 1..k`` are applied with the deepest stage
    (highest labels) first when ``order="inner_first"``.
    """
    if s < 1 or n < 0:
        raise DomainError("need s >= 1 and n >= 0")
    labels = tuple(range(1, s + n + 1))
    op = reorder(op, labels)
    acc = np.zeros_like(op.mat)
    for comp in bounded_compositions(n):
        k = len(comp)
        coef = math.factorial(n) * (-1) ** k / math.factorial(n - sum(comp))
        stages, top = [], s + n
        for nj in comp:
            stages.append((tuple(range(top - nj + 1, top + 1)), top - nj))
            top -= nj
        if order == "outer_first":
            stages = stages[::-1]
        elif order != "inner_first":
            raise DomainError(f"unknown order {order!r}")
        x = op
        for Z, N in stages:
            x = _attachments(model, t, corr, Z, N, x, weight)
        x = _scatter(model, t, labels[:s], labels[s:top], corr, x)
        acc += coef * x.mat
    return LabeledOperator(labels, acc, op.dim)


def functional_guard(s):
    """Norm radius ``e^{-(3s+2)}`` for the one-particle operator."""
    return math.exp(-(3 * s + 2))


def correlation_functional(model, t, s, G1_t, corr, cfg=SeriesConfig(n_max=1), guard=True,
                           **kw):
    """``G_s(t | G_1(t)) = sum_n 1/n! Tr_{s+1..s+n} G_{s+n}(t) prod G_1(t, i)``.

    Returns a SeriesResult whose ``status`` is ``"guard-exceeded"`` when
    ``||G_1(t)||_1`` is outside the convergence radius.
    """
    if s < 2:
        raise DomainError("correlation functionals are defined for s >= 2")
    G1 = relabel(G1_t, (1,))
    status = "ok"
    if guard and trace_norm(G1) >= functional_guard(s):
        status = "guard-exceeded"
        warnings.warn(f"||G1||_1 = {trace_norm(G1):.3g} exceeds e^-(3s+2)", RuntimeWarning,
                      stacklevel=2)

    def terms():
        for n in range(cfg.n_max + 1):
            labels = tuple(range(1, s + n + 1))
            prod = tensor(*(relabel(G1, (l,)) for l in labels))
            full = functional_generating_operator(model, t, s, n, corr, prod, **kw)
            full = partial_trace(full, labels[s:]) / math.factorial(n)
            yield n, full

    res = _sum_series(terms(), tuple(range(1, s + 1)), G1.dim)
    res.status = status
    return res
