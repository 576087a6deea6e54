"""Kinetic equations for the one-particle operator and their series oracles.

All equations are integrated with fixed-step classical RK4.  Between two
requested output times the step is shortened so that it divides the
interval exactly.  Every trajectory carries a half-step (Richardson)
estimate of the step error.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cumulants import CorrelationSequence
from .dynamics import embed_pair
from .functionals import correlation_functional, functional_guard
from .hierarchy import SeriesConfig, collision_pairs, time_derivative, _interaction
from .operators import (
    DomainError,
    LabeledOperator,
    hermiticity_defect,
    is_hermitian,
    jordan,
    partial_trace,
    relabel,
    reorder,
    tensor,
    trace_norm,
)

THEOREM2_RADIUS = 1.0 / (math.e * (1.0 + math.e ** 9))


@dataclass
class KineticState:
    t: float
    g1: LabeledOperator


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    dt: float
    richardson_error: float = float("nan")
    status: str = "ok"
    meta: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return KineticState(float(self.times[k]), self.states[k])

    def __len__(self):
        return len(self.states)

    @property
    def final(self):
        return self.states[-1]

    def trace_drift(self):
        tr = [np.trace(_as_matrix(s)) for s in self.states]
        return float(max(abs(x - tr[0]) for x in tr))

    def hermiticity(self):
        return float(max(np.abs(_as_matrix(s) - _as_matrix(s).conj().T).sum() for s in self.states))

    def rows(self):
        out = []
        for t, s in zip(self.times, self.states):
            m = _as_matrix(s)
            row = {"t": float(t)}
            for a in range(m.shape[0]):
                for b in range(m.shape[1]):
                    row[f"re_{a}{b}"] = float(m[a, b].real)
                    row[f"im_{a}{b}"] = float(m[a, b].imag)
            row["trace"] = float(np.trace(m).real)
            row["purity"] = float(np.trace(m @ m).real)
            row["richardson_error"] = self.richardson_error
            out.append(row)
        return out

    def to_csv(self, path):
        rows = self.rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


def _as_matrix(state):
    if isinstance(state, LabeledOperator):
        return state.mat
    v = np.asarray(state)
    return np.outer(v, v.conj()) if v.ndim == 1 else v


def rk4_step(rhs, t, y, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + dt / 2, y + dt / 2 * k1)
    k3 = rhs(t + dt / 2, y + dt / 2 * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_solve(rhs, y0, t_grid, dt):
    """Values of the solution at every time of ``t_grid`` (first entry = start)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) < 0):
        raise DomainError("t_grid must be a nondecreasing 1-d sequence")
    if dt <= 0:
        raise DomainError("dt must be positive")
    y = np.array(y0, dtype=complex)
    out = [y.copy()]
    for a, b in zip(t_grid[:-1], t_grid[1:]):
        steps = max(1, math.ceil((b - a) / dt - 1e-9)) if b > a else 0
        h = (b - a) / steps if steps else 0.0
        for k in range(steps):
            y = rk4_step(rhs, a + k * h, y, h)
        out.append(y.copy())
    return out


def _integrate(rhs, y0, t_grid, dt, check_step, tol=1e-8):
    ys = rk4_solve(rhs, y0, t_grid, dt)
    err = float("nan")
    status = "ok"
    if check_step:
        half = rk4_solve(rhs, y0, t_grid, dt / 2)
        err = float(max(np.abs(a - b).max() for a, b in zip(ys, half)))
        if err > tol:
            status = "step-too-large"
            warnings.warn(f"RK4 half-step difference {err:.2e} exceeds {tol:.0e}",
                          RuntimeWarning, stacklevel=3)
    return ys, err, status


def _check_one_body(g1):
    if not isinstance(g1, LabeledOperator):
        g1 = LabeledOperator((1,), g1)
    if g1.n != 1:
        raise DomainError("one-particle operator expected")
    if not is_hermitian(g1, 1e-10):
        raise DomainError("initial one-particle operator must be Hermitian")
    return relabel(g1, (1,))


def mean_field_potential(model, g):
    """``U(g) = Tr_2 Phi (I x g)``."""
    d = model.d
    phi = model.Phi.reshape(d, d, d, d)
    return np.einsum("abcd,db->ac", phi, g)


def _free(model, g):
    return -1j * (model.K @ g - g @ model.K)


def _collision(model, pair):
    """``Tr_2 N_int(1,2) pair`` for a two-particle matrix."""
    comm = -1j * (model.Phi @ pair - pair @ model.Phi)
    d = model.d
    return np.einsum("abcb->ac", comm.reshape(d, d, d, d))


def vlasov_rhs(model, g):
    return _free(model, g) + _collision(model, np.kron(g, g))


def vlasov_integrate(model, g1_0, t_grid, dt=1e-3, check_step=True):
    """Quantum Vlasov equation ``dg/dt = -i[K, g] + Tr_2 N_int(1,2) g g``."""
    g0 = _check_one_body(g1_0)
    ys, err, status = _integrate(lambda t, y: vlasov_rhs(model, y), g0.mat, t_grid, dt,
                                 check_step)
    return Trajectory(np.asarray(t_grid, float), [LabeledOperator((1,), y, model.d) for y in ys],
                      dt, err, status, {"equation": "vlasov"})


def hartree_evolve(model, psi0, t_grid, dt=1e-3, check_step=True):
    """``i dpsi/dt = (K + U(|psi><psi|)) psi``."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (model.d,):
        raise DomainError("psi0 must be a vector of length d")
    if abs(np.linalg.norm(psi0) - 1) > 1e-12:
        raise DomainError("psi0 must be normalized")

    def rhs(t, psi):
        return -1j * (model.K + mean_field_potential(model, np.outer(psi, psi.conj()))) @ psi

    ys, err, status = _integrate(rhs, psi0, t_grid, dt, check_step)
    return Trajectory(np.asarray(t_grid, float), ys, dt, err, status, {"equation": "hartree"})


def _pair_free_unitary(model, t):
    u = model.unitary(t, 1)
    return np.kron(u, u)


def transported_pair(model, t, g2):
    """``G*_1(t) G*_1(t) (g2 + I)`` conjugated by free motion (two particles)."""
    u = _pair_free_unitary(model, t)
    c = g2.mat + np.eye(model.d ** 2)
    return u @ c @ u.conj().T


def vlasov_correlated_rhs(model, t, g, g2):
    if not np.any(g2.mat):
        # C = I: same operand as the Vlasov equation, same summation order
        return vlasov_rhs(model, g)
    c = LabeledOperator((1, 2), transported_pair(model, t, g2), model.d)
    pair = jordan(c, LabeledOperator((1, 2), np.kron(g, g), model.d)).mat
    return _free(model, g) + _collision(model, pair)


def _pair_correlation(g2, d):
    if g2 is None:
        return LabeledOperator((1, 2), np.zeros((d * d, d * d)), d)
    g2 = g2 if isinstance(g2, LabeledOperator) else LabeledOperator((1, 2), g2, d)
    g2 = relabel(g2, (1, 2))
    if not is_hermitian(g2, 1e-10):
        raise DomainError("pair correlation must be Hermitian")
    return g2


def vlasov_correlated_integrate(model, g1_0, g2, t_grid, dt=1e-3, check_step=True):
    """Vlasov-type equation with initial correlations.

    The collision operand is ``C(t) * g g`` with ``C(t)`` the freely transported
    ``g2 + I`` and ``*`` the symmetrized product; ``C`` is rebuilt at every
    stage time.
    """
    g0 = _check_one_body(g1_0)
    g2 = _pair_correlation(g2, model.d)
    ys, err, status = _integrate(lambda t, y: vlasov_correlated_rhs(model, t, y, g2), g0.mat,
                                 t_grid, dt, check_step)
    return Trajectory(np.asarray(t_grid, float), [LabeledOperator((1,), y, model.d) for y in ys],
                      dt, err, status, {"equation": "vlasov-corr"})


def generalized_rhs(model, t, G, corr, cfg, functional_kw=None):
    G1 = LabeledOperator((1,), G, model.d)
    out = _free(model, G) + model.epsilon * _collision(model, np.kron(G, G))
    G2 = correlation_functional(model, t, 2, G1, corr, cfg, guard=False,
                                **(functional_kw or {})).value
    return out + model.epsilon * _collision(model, reorder(G2, (1, 2)).mat)


def generalized_kinetic_integrate(model, G1_0, corr, t_grid, cfg=SeriesConfig(n_max=1), dt=1e-2,
                                  check_step=True, strict=False):
    """Generalized kinetic equation with initial correlations.

    The collision term closes with the truncated correlation functional
    (``cfg.n_max`` is recorded).  Guard statuses refer to the convergence
    radius of the functional and to the global-existence premise.
    """
    G0 = _check_one_body(G1_0)
    norm0 = trace_norm(G0)
    guards = {
        "theorem2_premise": norm0 < THEOREM2_RADIUS,
        "functional_radius": norm0 < functional_guard(2),
    }
    status = "ok"
    if not all(guards.values()):
        if strict:
            raise DomainError(f"initial norm {norm0:.3g} violates a convergence guard")
        status = "guard-exceeded"
        warnings.warn(f"||G1(0)||_1 = {norm0:.3g} is outside the proven convergence radius",
                      RuntimeWarning, stacklevel=2)
    ys, err, st = _integrate(lambda t, y: generalized_rhs(model, t, y, corr, cfg), G0.mat,
                             t_grid, dt, check_step)
    if st != "ok":
        status = st
    return Trajectory(np.asarray(t_grid, float), [LabeledOperator((1,), y, model.d) for y in ys],
                      dt, err, status,
                      {"equation": "generalized", "functional_n_max": cfg.n_max, **guards})


def gkec_residual(model, t, G0, corr, cfg_series, cfg_functional, method="cc"):
    """Residual of the generalized kinetic equation along the hierarchy solution ``G_1(t)``."""
    from .hierarchy import marginal_series_cumulant

    def G1(u):
        return marginal_series_cumulant(model, u, 1, G0, cfg_series, method).value

    d = time_derivative(G1, t, cfg_series)
    rhs = generalized_rhs(model, t, G1(t).mat, corr, cfg_functional)
    return trace_norm(d - LabeledOperator((1,), rhs, model.d))


# --- iterated series -----------------------------------------------------------

def t0_radius(model, g1_0):
    """``(2 ||Phi|| ||g_1^0||_1)^-1``."""
    g = g1_0 if isinstance(g1_0, LabeledOperator) else LabeledOperator((1,), g1_0)
    denom = 2 * model.phi_norm * trace_norm(g)
    return math.inf if denom == 0 else 1.0 / denom


def _simplex_nodes(t, n, order):
    """Nodes ``t > t_1 > ... > t_n > 0`` and weights of a tensorized Gauss-Legendre rule."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1) / 2
    w = w / 2
    nodes = [((), 1.0)]
    for _ in range(n):
        nxt = []
        for pts, wt in nodes:
            upper = pts[-1] if pts else t
            for xi, wi in zip(x, w):
                nxt.append((pts + (upper * xi,), wt * wi * upper))
        nodes = nxt
    return nodes


def _free_all_labels(model, t, op):
    u1 = model.unitary(t, 1)
    u = np.ones((1, 1), dtype=complex)
    for _ in range(op.n):
        u = np.kron(u, u1)
    return LabeledOperator(op.labels, u @ op.mat @ u.conj().T, op.dim)


def _initial_factor(g1_0, corr, m):
    labels = tuple(range(1, m + 1))
    prod = tensor(*(relabel(g1_0, (l,)) for l in labels))
    if corr is None:
        return prod
    from .partitions import enumerate_partitions

    acc = np.zeros_like(prod.mat)
    for p in enumerate_partitions(labels):
        if any(len(b) >= 2 and not corr.has(len(b)) for b in p):
            continue
        acc += corr.act(p, prod).mat
    return LabeledOperator(labels, acc, prod.dim)


def iterated_series_g1(model, g1_0, t, n_max=3, corr=None, order=8, strict=False):
    """Iterated collision series for the limit one-particle operator.

    Term ``n`` integrates over ``t > t_1 > ... > t_n > 0`` the chain of free
    propagations and interactions ``N_int(k, m+1)`` acting on the initial
    factor (``prod g_1^0`` or, with correlations, the partition sum of
    correlation actions on it).  Label ``m+1`` is traced out right after its
    interaction.  Returns ``(value, info)``.
    """
    g0 = _check_one_body(g1_0)
    radius = t0_radius(model, g0)
    info = {"t0": radius, "below_t0": t < radius, "term_norms": []}
    if not t < radius:
        if strict:
            raise DomainError(f"t = {t} is not below t0 = {radius:.3g}")
        warnings.warn(f"t = {t} is not below t0 = {radius:.3g}", RuntimeWarning, stacklevel=2)
    total = _free_all_labels(model, t, g0).mat
    info["term_norms"].append(trace_norm(LabeledOperator((1,), total)))
    for n in range(1, n_max + 1):
        init = _initial_factor(g0, corr, n + 1)
        acc = np.zeros((model.d, model.d), dtype=complex)
        for pts, wt in _simplex_nodes(t, n, order):
            y = _free_all_labels(model, pts[-1], init)
            for m in range(n, 0, -1):
                z = np.zeros_like(y.mat)
                for k in range(1, m + 1):
                    z += _interaction(model, y, k, m + 1).mat
                y = partial_trace(LabeledOperator(y.labels, z, y.dim), (m + 1,))
                earlier = pts[m - 2] if m >= 2 else t
                y = _free_all_labels(model, earlier - pts[m - 1], y)
            acc += wt * y.mat
        info["term_norms"].append(trace_norm(LabeledOperator((1,), acc)))
        total = total + acc
    return LabeledOperator((1,), total, model.d), info


# --- limit correlations and the Vlasov hierarchy ---------------------------------

def limit_correlations(model, t, Y, g_s, g1_t):
    """``prod G*_1(t) g_s prod G*_1(-t)`` acting (symmetrized) on ``prod g_1(t)``.

    ``g_s=None`` stands for absent correlations and returns the product.
    """
    Y = tuple(Y)
    g1 = relabel(g1_t if isinstance(g1_t, LabeledOperator) else LabeledOperator((1,), g1_t), (1,))
    prod = tensor(*(relabel(g1, (l,)) for l in Y))
    if g_s is None:
        return prod
    gs = relabel(g_s, Y)
    moved = _free_all_labels(model, t, gs)
    return reorder(jordan(moved, prod), Y)


def limit_sequence_builder(model, g1_0, corr, max_order, dt=1e-3):
    """``u -> CorrelationSequence`` of limit correlations along the correlated Vlasov flow."""
    g2 = corr.at((1, 2)) if corr is not None and corr.has(2) else None

    def build(u):
        g1 = vlasov_correlated_integrate(model, g1_0, g2, [0.0, u], dt, check_step=False).final
        comps = {1: g1}
        for s in range(2, max_order + 1):
            gs = corr.at(tuple(range(1, s + 1))) if corr is not None and corr.has(s) else None
            if gs is not None:
                comps[s] = limit_correlations(model, u, tuple(range(1, s + 1)), gs, g1)
        return CorrelationSequence(comps, model.d, 1.0, max_order, tol=1e-8)

    return build


def vlasov_hierarchy_rhs(model, s, g):
    """Free part plus the mean-field collision term of the limit hierarchy (no epsilon)."""
    Y = tuple(range(1, s + 1))
    gs = g.at(Y)
    K = sum(embed_one(model.K, model.d, s, j) for j in range(s))
    out = -1j * (K @ gs.mat - gs.mat @ K)
    Ys = Y + (s + 1,)
    acc = np.zeros((model.d ** (s + 1),) * 2, dtype=complex)
    for i in Y:
        acc += _interaction(model, g.at(Ys), i, s + 1).mat
        acc += collision_pairs(model, Ys, g, pinned_first=(i,), pinned_second=(s + 1,)).mat
    coll = partial_trace(LabeledOperator(Ys, acc, model.d), (s + 1,))
    return LabeledOperator(Y, out, model.d) + coll


def embed_one(a, d, n, j):
    return np.kron(np.kron(np.eye(d ** j), a), np.eye(d ** (n - j - 1)))


def vlasov_hierarchy_residual(model, t, s, builder, h=1e-3):
    """Finite-difference residual of the limit hierarchy on ``builder(t)``."""
    cfg = SeriesConfig(fd_step=h)
    Y = tuple(range(1, s + 1))
    d = time_derivative(lambda u: builder(u).at(Y), t, cfg)
    return trace_norm(d - vlasov_hierarchy_rhs(model, s, builder(t)))


def hermiticity_report(traj):
    return max(hermiticity_defect(s) if isinstance(s, LabeledOperator) else 0.0
               for s in traj.states)

