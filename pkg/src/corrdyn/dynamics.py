"""Model specification, Hamiltonians and the unitary groups they generate.

Units with hbar = 1 and m = 1.  ``H_n = sum_j K(j) + eps * sum_{j<k} Phi(j, k)``
and the group acts on operators as ``f -> exp(-i t H_n) f exp(i t H_n)``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .operators import (
    DomainError,
    LabeledOperator,
    _check_cap,
    conjugate,
    permute_matrix,
    tensor_embed,
)


def swap_matrix(d):
    p = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            p[b * d + a, a * d + b] = 1.0
    return p


@dataclass(frozen=True, eq=False)
class ModelSpec:
    d: int
    K: np.ndarray
    Phi: np.ndarray
    epsilon: float = 1.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False,
                                  compare=False)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=complex)
        Phi = np.asarray(self.Phi, dtype=complex)
        d = int(self.d)
        if K.shape != (d, d) or Phi.shape != (d * d, d * d):
            raise DomainError("K must be d x d and Phi d^2 x d^2")
        if not np.allclose(K, K.conj().T, atol=1e-12):
            raise DomainError("K must be Hermitian")
        if not np.allclose(Phi, Phi.conj().T, atol=1e-12):
            raise DomainError("Phi must be Hermitian")
        P = swap_matrix(d)
        if not np.allclose(P @ Phi @ P, Phi, atol=1e-12):
            raise DomainError("Phi must be invariant under particle exchange")
        if self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")
        for a in (K, Phi):
            a.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    def with_phi(self, Phi):
        return replace(self, Phi=Phi)

    @property
    def interacting(self):
        """False when the dynamics factorizes over particles."""
        return self.epsilon != 0.0 and bool(np.any(self.Phi != 0))

    @property
    def phi_norm(self):
        """Operator norm of the pair potential."""
        return float(np.linalg.norm(self.Phi, 2))

    # cached spectral data, safe for concurrent readers
    def _memo(self, key, build):
        try:
            return self._cache[key]
        except KeyError:
            pass
        value = build()
        with self._lock:
            self._cache.setdefault(key, value)
        return self._cache[key]

    def hamiltonian_matrix(self, n):
        """H_n on positions 0..n-1 in kron layout."""
        _check_cap(n)

        def build():
            d = self.d
            side = d ** n
            H = np.zeros((side, side), dtype=complex)
            for j in range(n):
                H += np.kron(np.kron(np.eye(d ** j), self.K), np.eye(d ** (n - j - 1)))
            if self.epsilon != 0.0:
                for j in range(n):
                    for k in range(j + 1, n):
                        H += self.epsilon * embed_pair(self.Phi, d, n, j, k)
            H.setflags(write=False)
            return H

        return self._memo(("H", n), build)

    def eigh(self, n):
        def build():
            w, v = np.linalg.eigh(self.hamiltonian_matrix(n))
            return w, v

        return self._memo(("eigh", n), build)

    def unitary(self, t, n):
        """exp(-i t H_n)."""
        if n == 0:
            return np.ones((1, 1), dtype=complex)

        def build():
            w, v = self.eigh(n)
            u = (v * np.exp(-1j * t * w)) @ v.conj().T
            u.setflags(write=False)
            return u

        return self._memo(("U", float(t), n), build)

    def block_unitary(self, t, blocks, n):
        """Product of independent groups on the position blocks of ``range(n)``.

        ``blocks`` is a tuple of tuples of positions in ``range(n)``; positions
        outside every block are spectators and see the identity.
        """
        blocks = tuple(tuple(b) for b in blocks)

        def build():
            u = np.ones((1, 1), dtype=complex)
            for b in blocks:
                u = np.kron(u, self.unitary(t, len(b)))
            order = [p for b in blocks for p in b]
            spectators = [p for p in range(n) if p not in order]
            if spectators:
                u = np.kron(u, np.eye(self.d ** len(spectators)))
                order += spectators
            perm = [order.index(k) for k in range(n)]
            u = permute_matrix(u, n, self.d, perm)
            u.setflags(write=False)
            return u

        return self._memo(("BU", float(t), blocks, n), build)


def embed_pair(phi, d, n, j, k):
    """Two-body matrix acting on positions ``j < k`` of an n-fold product."""
    op = LabeledOperator((j, k), phi, d)
    return tensor_embed(op, tuple(range(n))).mat


def default_model(seed=0, d=2, epsilon=1.0, phi_norm=1.0):
    """K = diag(0, 1, ...), Phi an exchange-symmetrized random Hermitian, ||Phi||_op = phi_norm."""
    rng = np.random.default_rng(seed)
    K = np.diag(np.arange(d, dtype=float))
    a = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    a = (a + a.conj().T) / 2
    P = swap_matrix(d)
    a = (a + P @ a @ P) / 2
    a *= phi_norm / np.linalg.norm(a, 2)
    return ModelSpec(d=d, K=K, Phi=a, epsilon=epsilon)


def positions(labels, subset):
    index = {l: i for i, l in enumerate(labels)}
    return tuple(index[l] for l in subset)


def build_hamiltonian(model, labels):
    labels = tuple(labels)
    if not labels:
        raise DomainError("need at least one label")
    _check_cap(len(labels))
    return LabeledOperator(labels, model.hamiltonian_matrix(len(labels)), model.d)


def group_apply(model, t, labels, op):
    """G*_n(t) f = exp(-itH) f exp(itH) on the labels of ``op``."""
    if set(labels) != set(op.labels):
        raise DomainError("labels must match the operator labels")
    return conjugate(op, model.unitary(t, op.n))


def partition_group_apply(model, t, blocks, op):
    """Product of the groups of each block of labels (no interaction across blocks).

    Labels of ``op`` outside every block are left untouched.
    """
    blocks = tuple(positions(op.labels, b) for b in blocks)
    flat = [p for b in blocks for p in b]
    if len(set(flat)) != len(flat):
        raise DomainError("blocks must be disjoint")
    return conjugate(op, model.block_unitary(t, blocks, op.n))


def generator_apply(model, labels, op, pair=None):
    """N*_n f = -i[H_n, f]; with ``pair`` the interaction part -i[Phi(j1,j2), f]."""
    if set(labels) != set(op.labels):
        raise DomainError("labels must match the operator labels")
    if pair is None:
        H = model.hamiltonian_matrix(op.n)
    else:
        j1, j2 = pair
        if j1 == j2 or j1 not in op.labels or j2 not in op.labels:
            raise DomainError(f"pair {pair} is not within {op.labels}")
        p = positions(op.labels, (j1, j2))
        H = embed_pair(model.Phi, model.d, op.n, *p)
    return LabeledOperator(op.labels, -1j * (H @ op.mat - op.mat @ H), op.dim)


def free_generator_apply(model, j, op):
    """N*(j) f = -i[K(j), f]."""
    if j not in op.labels:
        raise DomainError(f"label {j} not in {op.labels}")
    K = tensor_embed(LabeledOperator((j,), model.K, model.d), op.labels).mat
    return LabeledOperator(op.labels, -1j * (K @ op.mat - op.mat @ K), op.dim)


def free_group_apply(model, t, j, op):
    """Conjugation by exp(-itK) on factor ``j`` only."""
    if j not in op.labels:
        raise DomainError(f"label {j} not in {op.labels}")
    u = model.unitary(t, 1)
    U = tensor_embed(LabeledOperator((j,), u, model.d), op.labels).mat
    return conjugate(op, U)


def free_group_inverse(model, t, j, op):
    return free_group_apply(model, -t, j, op)


def free_all(model, t, op, labels=None):
    """Product of one-particle free groups over ``labels`` (default: all)."""
    labels = op.labels if labels is None else tuple(labels)
    if set(labels) == set(op.labels):
        return conjugate(op, _free_product(model, t, op.n))
    for j in labels:
        op = free_group_apply(model, t, j, op)
    return op


def _free_product(model, t, n):
    def build():
        u1 = model.unitary(t, 1)
        u = np.ones((1, 1), dtype=complex)
        for _ in range(n):
            u = np.kron(u, u1)
        u.setflags(write=False)
        return u

    return model._memo(("free", float(t), n), build)
