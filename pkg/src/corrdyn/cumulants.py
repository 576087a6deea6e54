"""Cumulants of groups, the nonlinear group and its cumulants.

Notation: a *clustered set* is a sequence whose elements are labels or tuples
of labels (clusters); ``declusterize`` flattens it.  A *decoupling* is a
partition of labels along which the dynamics is switched off: every group
``G*_S`` is replaced by the product of ``G*_{S & C}`` over its blocks ``C``.
Composed nonlinear groups of noninteracting particle groups are evaluated as
the nonlinear group under such a decoupled dynamics.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import partition_group_apply
from .operators import (
    DomainError,
    LabeledOperator,
    check_symmetry,
    partial_trace,
    relabel,
    reorder,
    tensor,
    trace_norm,
    zeros,
)
from .partitions import (
    declusterize,
    enumerate_partitions,
    meet,
    mobius_weight,
    weak_compositions,
)


class CorrelationSequence:
    """Finite sequence ``(f_0, f_1, ..., f_N)`` of symmetric operators.

    Component ``n`` is stored on the labels ``(1, ..., n)``.  Orders up to
    ``max_order`` that were not supplied are zero; asking for a higher order
    is a domain error.
    """

    def __init__(self, components=None, dim=2, scalar=0.0, max_order=None, tol=1e-10):
        self.dim = int(dim)
        self.scalar = scalar
        self._mats = {}
        for n, op in dict(components or {}).items():
            n = int(n)
            if n < 1:
                raise DomainError("components are indexed by n >= 1; use scalar for n = 0")
            mat = op.mat if isinstance(op, LabeledOperator) else np.asarray(op, dtype=complex)
            value = LabeledOperator(tuple(range(1, n + 1)), mat, self.dim)
            if tol is not None and not check_symmetry(value, tol):
                raise DomainError(f"component {n} is not permutation symmetric")
            self._mats[n] = value
        top = max(self._mats, default=0)
        self.max_order = top if max_order is None else int(max_order)
        if self.max_order < top:
            raise DomainError("max_order is below a supplied component")
        self._density = {}

    @classmethod
    def chaos(cls, g1, max_order, dim=None, scalar=0.0):
        """``(scalar, g1, 0, 0, ...)``."""
        dim = g1.dim if isinstance(g1, LabeledOperator) else (dim or 2)
        return cls({1: g1}, dim=dim, scalar=scalar, max_order=max_order)

    def __repr__(self):
        return f"CorrelationSequence(max_order={self.max_order}, nonzero={sorted(self._mats)})"

    def _check(self, n):
        if n < 1 or n > self.max_order:
            raise DomainError(f"sequence has no component of order {n} (max {self.max_order})")

    def is_zero(self, n):
        self._check(n)
        return n not in self._mats

    def __getitem__(self, n):
        self._check(n)
        if n in self._mats:
            return self._mats[n]
        return zeros(tuple(range(1, n + 1)), self.dim)

    def at(self, labels):
        """Component ``|labels|`` placed on ``labels``."""
        labels = tuple(labels)
        return relabel(self[len(labels)], labels)

    def items(self):
        return sorted(self._mats.items())

    def map(self, fn, scalar=None):
        comps = {n: fn(n, op) for n, op in self._mats.items()}
        return CorrelationSequence(comps, self.dim, self.scalar if scalar is None else scalar,
                                   self.max_order)

    def scaled(self, c):
        """Component ``n`` multiplied by ``c**n``."""
        return self.map(lambda n, op: op * (c ** n))

    def norms(self):
        return {n: trace_norm(op) for n, op in self._mats.items()}

    def density(self, n):
        """Cluster sum ``sum_P prod f_{|X|}(X)`` on ``(1..n)``."""
        if n not in self._density:
            self._check(n)
            labels = tuple(range(1, n + 1))
            acc = np.zeros((self.dim ** n,) * 2, dtype=complex)
            for p in enumerate_partitions(labels):
                if any(self.is_zero(len(b)) for b in p):
                    continue
                acc += reorder(tensor(*(self.at(b) for b in p)), labels).mat
            self._density[n] = LabeledOperator(labels, acc, self.dim)
        return self._density[n]

    def density_at(self, labels):
        labels = tuple(labels)
        return relabel(self.density(len(labels)), labels)


def _clusters(clusters):
    return [declusterize(c) if isinstance(c, (tuple, list)) else (int(c),) for c in clusters]


def _restrict(blocks, decouple):
    if decouple is None:
        return tuple(blocks)
    flat = [l for b in blocks for l in b]
    inside = tuple(tuple(l for l in c if l in set(flat)) for c in decouple)
    inside = tuple(c for c in inside if c)
    return meet(tuple(blocks), inside)


def _evolve(model, t, blocks, op, decouple=None):
    return partition_group_apply(model, t, _restrict(blocks, decouple), op)


def cumulant_clustered(model, t, clusters, op, decouple=None):
    """``A_{|P|}(t, {X_1}, ..., {X_k})`` applied to ``op``.

    Labels of ``op`` outside the clusters are spectators.
    """
    groups = _clusters(clusters)
    flat = [l for g in groups for l in g]
    if len(set(flat)) != len(flat):
        raise DomainError("clusters must be disjoint")
    if not set(flat) <= set(op.labels):
        raise DomainError("clusters must be labels of the operator")
    acc = np.zeros_like(op.mat)
    if len(groups) > 1 and not model.interacting:
        # free groups factorize and the Moebius sum vanishes identically
        return LabeledOperator(op.labels, acc, op.dim)
    for coarse in enumerate_partitions(tuple(range(len(groups)))):
        blocks = [tuple(l for k in z for l in groups[k]) for z in coarse]
        acc += mobius_weight(len(coarse)) * _evolve(model, t, blocks, op, decouple).mat
    return LabeledOperator(op.labels, acc, op.dim)


def cumulant_plain(model, t, labels, op):
    """``A_s(t, 1, ..., s)``: all clusters are singletons."""
    return cumulant_clustered(model, t, [(l,) for l in labels], op)


def _product_on(f, blocks, target):
    return reorder(tensor(*(f.at(b) for b in blocks)), target)


def nonlinear_group_apply(model, t, Y, f, decouple=None, method="partition"):
    """``G(t; Y | f) = sum_P A_{|P|}(t, {X_1}, ...) prod f_{|X_j|}(X_j)``.

    ``method="cluster"`` evaluates the same sum by evolving the cluster sums
    of ``f`` and Moebius-inverting; ``decouple`` switches off the interaction
    across the given blocks of labels.
    """
    Y = tuple(Y)
    if not Y:
        raise DomainError("Y must be nonempty")
    if len(Y) > f.max_order:
        raise DomainError(f"sequence lacks components up to {len(Y)}")
    side = f.dim ** len(Y)
    acc = np.zeros((side, side), dtype=complex)
    if method == "partition":
        for p in enumerate_partitions(Y):
            if any(f.is_zero(len(b)) for b in p):
                continue
            op = _product_on(f, p, Y)
            acc += cumulant_clustered(model, t, p, op, decouple).mat
    elif method == "cluster":
        for q in enumerate_partitions(Y):
            op = reorder(tensor(*(f.density_at(b) for b in q)), Y)
            acc += mobius_weight(len(q)) * _evolve(model, t, q, op, decouple).mat
    else:
        raise DomainError(f"unknown method {method!r}")
    return LabeledOperator(Y, acc, f.dim)


def nested_cumulant(model, t, groups, f, method="cluster"):
    """``A_{|X_1|}(t; X_1 | ... A_{|X_k|}(t; X_k | f) ...)`` for disjoint groups.

    Each group is a clustered set; a group with one element contributes its
    nonlinear group.  The composition runs the nonlinear group under the
    dynamics decoupled along the chosen sub-partition of every group.
    """
    groups = [_clusters(g) for g in groups]
    Y = tuple(l for g in groups for c in g for l in c)
    if len(set(Y)) != len(Y):
        raise DomainError("groups must be disjoint")
    side = f.dim ** len(Y)
    acc = np.zeros((side, side), dtype=complex)
    if not model.interacting and any(len(g) > 1 for g in groups):
        return LabeledOperator(Y, acc, f.dim)
    choices = [enumerate_partitions(tuple(range(len(g)))) for g in groups]

    def walk(j, blocks, weight):
        nonlocal acc
        if j == len(groups):
            acc += weight * nonlinear_group_apply(model, t, Y, f, blocks, method).mat
            return
        g = groups[j]
        for r in choices[j]:
            sub = [tuple(l for k in z for l in g[k]) for z in r]
            walk(j + 1, blocks + sub, weight * mobius_weight(len(r)))

    walk(0, [], 1)
    return LabeledOperator(Y, acc, f.dim)


def nonlinear_cumulant(model, t, head, extra, G0, method="cluster"):
    """``A_{1+n}(t; {Y}, s+1, ..., s+n | G0)`` with ``head = Y``."""
    head = declusterize(head)
    extra = tuple(int(l) for l in extra)
    if set(head) & set(extra):
        raise DomainError("extra labels must be disjoint from the head cluster")
    return nested_cumulant(model, t, [[head] + [(l,) for l in extra]], G0, method)


def reduced_cumulant(model, t, s, n, G0):
    """``U_{1+n}(t; {1..s}, s+1, ..., s+n | G0)`` on labels ``1..s+n``.

    The k particles ``s+n-k+1, ..., s+n`` are distributed over the blocks in
    consecutive runs with multinomial weights; the groups do not act on them.
    """
    if s < 1 or n < 0:
        raise DomainError("need s >= 1 and n >= 0")
    labels = tuple(range(1, s + n + 1))
    if s + n > G0.max_order:
        raise DomainError(f"sequence lacks components up to {s + n}")
    side = G0.dim ** (s + n)
    acc = np.zeros((side, side), dtype=complex)
    for k in range(n + 1):
        outer = (-1) ** k * math.comb(n, k)
        ground = labels[: s + n - k]
        spare = labels[s + n - k:]
        for p in enumerate_partitions(ground):
            for runs in weak_compositions(k, len(p)):
                weight = math.factorial(k)
                for m in runs:
                    weight //= math.factorial(m)
                start, factors = 0, []
                for block, m in zip(p, runs):
                    factors.append(block + spare[start:start + m])
                    start += m
                if any(G0.is_zero(len(b)) for b in factors):
                    continue
                op = _product_on(G0, factors, labels)
                acc += outer * weight * cumulant_clustered(model, t, p, op).mat
    return LabeledOperator(labels, acc, G0.dim)


def cluster_recursion_check(model, t, s, n, f):
    """Trace norm of ``G(t; 1..s+n | f) - sum_P nested cumulants over P``."""
    labels = tuple(range(1, s + n + 1))
    lhs = nonlinear_group_apply(model, t, labels, f, method="partition")
    acc = np.zeros_like(lhs.mat)
    for p in enumerate_partitions(labels):
        groups = [[(l,) for l in b] for b in p]
        acc += reorder(nested_cumulant(model, t, groups, f), labels).mat
    return trace_norm(LabeledOperator(labels, lhs.mat - acc, lhs.dim))


def traced_term(op, keep):
    """Partial trace of ``op`` over everything outside ``keep``."""
    return partial_trace(op, [l for l in op.labels if l not in set(keep)])
