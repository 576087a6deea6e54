"""Labeled dense operators on finite tensor-product spaces.

An operator carries an ordered tuple of particle labels; its matrix acts on
``H^{(x) n}`` with ``n = len(labels)`` and rows/columns enumerated in
mixed-radix order, leftmost label most significant (the ``np.kron`` layout).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

#: largest number of labels a dense operator may carry
MAX_LABELS = 7


class DomainError(ValueError):
    """Raised when arguments violate a mathematical precondition."""


class ResourceError(RuntimeError):
    """Raised when an operator would exceed the dense-size cap."""


def _check_cap(n):
    if n > MAX_LABELS:
        raise ResourceError(f"{n} labels exceeds the cap of {MAX_LABELS}")


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    labels: tuple
    mat: np.ndarray
    dim: int = 2

    def __post_init__(self):
        labels = tuple(int(l) for l in self.labels)
        if len(set(labels)) != len(labels):
            raise DomainError(f"duplicate labels in {labels}")
        _check_cap(len(labels))
        mat = np.asarray(self.mat, dtype=complex)
        side = self.dim ** len(labels)
        if mat.shape != (side, side):
            raise DomainError(f"matrix shape {mat.shape} does not match {side}x{side}")
        mat.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mat", mat)

    @property
    def n(self):
        return len(self.labels)

    def __repr__(self):
        return f"LabeledOperator(labels={self.labels}, dim={self.dim})"

    # arithmetic on operators with equal label sets
    def _aligned(self, other):
        if set(other.labels) != set(self.labels) or other.dim != self.dim:
            raise DomainError(f"label sets differ: {self.labels} vs {other.labels}")
        return reorder(other, self.labels).mat

    def __add__(self, other):
        return LabeledOperator(self.labels, self.mat + self._aligned(other), self.dim)

    def __sub__(self, other):
        return LabeledOperator(self.labels, self.mat - self._aligned(other), self.dim)

    def __neg__(self):
        return LabeledOperator(self.labels, -self.mat, self.dim)

    def __mul__(self, c):
        return LabeledOperator(self.labels, c * self.mat, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return LabeledOperator(self.labels, self.mat / c, self.dim)

    def __matmul__(self, other):
        return product(self, other)

    @property
    def H(self):
        return LabeledOperator(self.labels, self.mat.conj().T, self.dim)


def identity(labels, dim=2):
    labels = tuple(labels)
    return LabeledOperator(labels, np.eye(dim ** len(labels)), dim)


def zeros(labels, dim=2):
    labels = tuple(labels)
    side = dim ** len(labels)
    return LabeledOperator(labels, np.zeros((side, side)), dim)


def relabel(op, labels):
    """Same matrix, positional renaming of the labels."""
    labels = tuple(labels)
    if len(labels) != op.n:
        raise DomainError("relabel needs as many labels as the operator has")
    return LabeledOperator(labels, op.mat, op.dim)


def permute_matrix(mat, n, dim, perm):
    """Reorder tensor factors: new position ``k`` holds old factor ``perm[k]``."""
    perm = list(perm)
    if perm == list(range(n)):
        return mat
    t = mat.reshape((dim,) * (2 * n))
    t = t.transpose(perm + [p + n for p in perm])
    return t.reshape(mat.shape)


def reorder(op, labels):
    """Express ``op`` in a different ordering of its own labels."""
    labels = tuple(labels)
    if labels == op.labels:
        return op
    if sorted(labels) != sorted(op.labels):
        raise DomainError(f"{labels} is not a permutation of {op.labels}")
    perm = [op.labels.index(l) for l in labels]
    return LabeledOperator(labels, permute_matrix(op.mat, op.n, op.dim, perm), op.dim)


def canonical(op):
    return reorder(op, sorted(op.labels))


def tensor(*ops, dim=None):
    """Tensor product of operators on mutually disjoint label sets."""
    if not ops:
        return LabeledOperator((), np.ones((1, 1)), dim or 2)
    dim = ops[0].dim
    labels = tuple(itertools.chain.from_iterable(o.labels for o in ops))
    _check_cap(len(labels))
    mat = ops[0].mat
    for o in ops[1:]:
        mat = np.kron(mat, o.mat)
    return LabeledOperator(labels, mat, dim)


def tensor_embed(op, target):
    """Extend ``op`` by the identity on ``target \\ labels(op)``."""
    target = tuple(target)
    missing = [l for l in op.labels if l not in target]
    if missing:
        raise DomainError(f"labels {missing} are not contained in {target}")
    extra = tuple(l for l in target if l not in op.labels)
    _check_cap(len(target))
    if extra:
        op = LabeledOperator(op.labels + extra,
                             np.kron(op.mat, np.eye(op.dim ** len(extra))), op.dim)
    return reorder(op, target)


embed = tensor_embed


def partial_trace(op, traced):
    """Trace out ``traced``; the result keeps the remaining labels in order."""
    traced = set(traced)
    missing = traced - set(op.labels)
    if missing:
        raise DomainError(f"cannot trace over absent labels {sorted(missing)}")
    if not traced:
        return op
    n, d = op.n, op.dim
    keep = [k for k, l in enumerate(op.labels) if l not in traced]
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    row = letters[:n]
    col = letters[n:]
    for k, l in enumerate(op.labels):
        if l in traced:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, op.mat.reshape((d,) * (2 * n)))
    side = d ** len(keep)
    return LabeledOperator(tuple(op.labels[k] for k in keep), t.reshape(side, side), d)


def trace(op):
    return complex(np.trace(op.mat))


def trace_norm(op):
    """Sum of singular values."""
    if op.mat.size == 1:
        return float(abs(op.mat[0, 0]))
    if np.allclose(op.mat, op.mat.conj().T, atol=0, rtol=1e-14):
        return float(np.abs(np.linalg.eigvalsh(op.mat)).sum())
    return float(np.linalg.svd(op.mat, compute_uv=False).sum())


def hermiticity_defect(op):
    """Trace norm of ``op - op^dagger``."""
    return trace_norm(LabeledOperator(op.labels, op.mat - op.mat.conj().T, op.dim))


def is_hermitian(op, tol=1e-12):
    return hermiticity_defect(op) <= tol * max(1.0, trace_norm(op))


def product(a, b):
    """Operator product ``a b``, both embedded into the union of their labels."""
    if a.labels == b.labels:
        return LabeledOperator(a.labels, a.mat @ b.mat, a.dim)
    target = a.labels + tuple(l for l in b.labels if l not in a.labels)
    return LabeledOperator(target, tensor_embed(a, target).mat @ tensor_embed(b, target).mat,
                           a.dim)


def jordan(a, b):
    """Symmetrized product ``(ab + ba)/2``; Hermitian for Hermitian factors."""
    ab = product(a, b)
    ba = reorder(product(b, a), ab.labels)
    return LabeledOperator(ab.labels, 0.5 * (ab.mat + ba.mat), ab.dim)


def commutator(a, b):
    ab = product(a, b)
    ba = reorder(product(b, a), ab.labels)
    return LabeledOperator(ab.labels, ab.mat - ba.mat, ab.dim)


def conjugate(op, unitary):
    """``U op U^dagger`` with ``unitary`` given in the layout of ``op``."""
    return LabeledOperator(op.labels, unitary @ op.mat @ unitary.conj().T, op.dim)


def _position_perms(n):
    return list(itertools.permutations(range(n)))


def check_symmetry(op, tol=1e-12):
    """True iff ``op`` is invariant under every relabeling of its particles."""
    scale = max(1.0, float(np.abs(op.mat).max(initial=0.0)))
    for perm in _position_perms(op.n)[1:]:
        if np.abs(permute_matrix(op.mat, op.n, op.dim, perm) - op.mat).max() > tol * scale:
            return False
    return True


def symmetrize(op):
    perms = _position_perms(op.n)
    acc = np.zeros_like(op.mat)
    for perm in perms:
        acc += permute_matrix(op.mat, op.n, op.dim, perm)
    return LabeledOperator(op.labels, acc / len(perms), op.dim)


def random_hermitian(labels, dim=2, rng=None, trace_norm_value=None, symmetric=True):
    """Random Hermitian operator, optionally permutation symmetric and rescaled."""
    rng = np.random.default_rng(rng)
    labels = tuple(labels)
    side = dim ** len(labels)
    a = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
    op = LabeledOperator(labels, (a + a.conj().T) / 2, dim)
    if symmetric:
        op = symmetrize(op)
    if trace_norm_value is not None:
        op = op * (trace_norm_value / trace_norm(op))
    return op


def random_density(labels, dim=2, rng=None, rank=None, symmetric=True):
    """Random positive operator of unit trace."""
    rng = np.random.default_rng(rng)
    labels = tuple(labels)
    side = dim ** len(labels)
    rank = rank or side
    a = rng.normal(size=(side, rank)) + 1j * rng.normal(size=(side, rank))
    op = LabeledOperator(labels, a @ a.conj().T, dim)
    if symmetric:
        op = symmetrize(op)
    return op * (1.0 / trace(op).real)


def to_json(op):
    return {
        "labels": list(op.labels),
        "dim": op.dim,
        "re": op.mat.real.tolist(),
        "im": op.mat.imag.tolist(),
    }


def from_json(obj):
    mat = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
    return LabeledOperator(tuple(obj["labels"]), mat, int(obj.get("dim", 2)))
