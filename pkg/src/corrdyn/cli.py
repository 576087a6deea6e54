"""Command-line front end.

One JSON config drives every command::

    {"model":   {"d": 2, "K": M, "Phi_seed": 1 | "Phi": M, "phi_norm": 1.0, "epsilon": 1.0},
     "initial": {"g1": M | R, "correlations": {"2": M | R, ...}, "psi0": V},
     "series":  {"n_max": 2, "fd_step": 1e-3, "tol_algebraic": 1e-10, "tol_fd": 1e-4},
     "run":     {...command specific...}}

``M`` is a matrix, either a nested list of reals or ``{"re": [...], "im": [...]}``.
``R`` asks for a random operator: ``{"random": "density" | "hermitian",
"seed": 3, "trace_norm": 0.5}``; a missing seed falls back to ``--seed``.

Exit codes: 0 success, 1 validation failure, 2 numerical check failure,
3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .cumulants import CorrelationSequence, nonlinear_group_apply
from .dynamics import ModelSpec, default_model, free_group_apply
from .functionals import InitialCorrelations, correlation_functional, functional_guard
from .hierarchy import (
    THEOREM1_RADIUS,
    SeriesConfig,
    bbgky_residual,
    marginal_series_cumulant,
    theorem1_premise,
    vn_hierarchy_residual,
    von_neumann_solve,
)
from .kinetics import (
    THEOREM2_RADIUS,
    generalized_kinetic_integrate,
    hartree_evolve,
    t0_radius,
    vlasov_correlated_integrate,
    vlasov_integrate,
)
from .meanfield import meanfield_sweep
from .operators import (
    DomainError,
    LabeledOperator,
    ResourceError,
    hermiticity_defect,
    random_density,
    random_hermitian,
    relabel,
    trace_norm,
)
from .partitions import enumerate_partitions, mobius_weight

EXIT_OK, EXIT_VALIDATION, EXIT_CHECK, EXIT_RESOURCE = 0, 1, 2, 3
KINETIC_EQUATIONS = ("vlasov", "hartree", "vlasov-corr", "generalized")


class ConfigError(DomainError):
    pass


# --- config ---------------------------------------------------------------------

def _matrix(obj, side, what):
    if isinstance(obj, dict) and "re" in obj:
        m = np.asarray(obj["re"], float) + 1j * np.asarray(obj.get("im", 0.0), float)
    else:
        m = np.asarray(obj, dtype=complex)
    if m.shape != (side, side):
        raise ConfigError(f"{what} must be {side} x {side}, got {m.shape}")
    return m


def _vector(obj, side, what):
    if isinstance(obj, dict) and "re" in obj:
        v = np.asarray(obj["re"], float) + 1j * np.asarray(obj.get("im", 0.0), float)
    else:
        v = np.asarray(obj, dtype=complex)
    if v.shape != (side,):
        raise ConfigError(f"{what} must have length {side}")
    return v


def _operator(obj, labels, d, seed, what):
    if isinstance(obj, dict) and "random" in obj:
        _known(what, obj, ("random", "seed", "trace_norm"))
        rng = np.random.default_rng(obj.get("seed", seed))
        kind = obj["random"]
        if kind == "density":
            op = random_density(labels, d, rng)
            if "trace_norm" in obj:
                op = op * float(obj["trace_norm"])
        elif kind == "hermitian":
            op = random_hermitian(labels, d, rng, obj.get("trace_norm"))
        else:
            raise ConfigError(f"{what}: unknown random kind {kind!r}")
        return op
    return LabeledOperator(labels, _matrix(obj, d ** len(labels), what), d)


def _known(section, obj, keys):
    unknown = set(obj) - set(keys)
    if unknown:
        raise ConfigError(f"unknown {section} keys {sorted(unknown)}")


def build_model(cfg, seed=0):
    m = dict(cfg.get("model", {}))
    _known("model", m, ("d", "K", "Phi", "Phi_seed", "phi_norm", "epsilon"))
    d = int(m.get("d", 2))
    eps = float(m.get("epsilon", 1.0))
    if "Phi" in m:
        phi = _matrix(m["Phi"], d * d, "model.Phi")
        K = _matrix(m["K"], d, "model.K") if "K" in m else np.diag(np.arange(d, dtype=float))
        return ModelSpec(d=d, K=K, Phi=phi, epsilon=eps)
    base = default_model(int(m.get("Phi_seed", seed)), d, eps, float(m.get("phi_norm", 1.0)))
    if "K" in m:
        return ModelSpec(d=d, K=_matrix(m["K"], d, "model.K"), Phi=base.Phi, epsilon=eps)
    return base


def build_initial(cfg, d, seed=0):
    init = dict(cfg.get("initial", {}))
    _known("initial", init, ("g1", "correlations", "mode", "psi0"))
    g1 = _operator(init.get("g1", {"random": "density"}), (1,), d, seed, "initial.g1")
    comps = {}
    for k, entry in dict(init.get("correlations", {})).items():
        n = int(k)
        comps[n] = _operator(entry, tuple(range(1, n + 1)), d, seed + n, f"correlations.{k}")
    corr = InitialCorrelations(comps, d, init.get("mode", "partition"))
    psi0 = _vector(init["psi0"], d, "initial.psi0") if "psi0" in init else None
    return g1, corr, psi0


def build_series(cfg):
    s = dict(cfg.get("series", {}))
    known = {"n_max", "fd_step", "tol_algebraic", "tol_fd", "stencil"}
    unknown = set(s) - known
    if unknown:
        raise ConfigError(f"unknown series keys {sorted(unknown)}")
    return SeriesConfig(**s)


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - {"model", "initial", "series", "run"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return cfg


# --- runs ------------------------------------------------------------------------

class Run:
    """Collects rows, checks and guard statuses for one command."""

    def __init__(self, command, cfg, out, strict):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.strict = strict
        self.checks = []
        self.guards = {}
        self.tables = {}

    def check(self, name, value, tol, passed=None, note=None):
        passed = bool(value <= tol) if passed is None else bool(passed)
        rec = {"name": name, "value": float(value), "tol": tol, "passed": passed}
        if note:
            rec["note"] = note
        self.checks.append(rec)

    def guard(self, name, ok, detail):
        self.guards[name] = {"ok": bool(ok), **detail}
        if not ok and self.strict:
            raise DomainError(f"guard {name} violated: {detail}")

    def table(self, name, rows):
        self.tables[name] = rows

    def write(self, series):
        self.out.mkdir(parents=True, exist_ok=True)
        files = []
        for name, rows in self.tables.items():
            if not rows:
                continue
            path = self.out / f"{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
                writer.writeheader()
                writer.writerows(rows)
            files.append(path.name)
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "versions": {"corrdyn": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "truncation": {"n_max": series.n_max},
            "tolerances": {"tol_algebraic": series.tol_algebraic, "tol_fd": series.tol_fd,
                           "fd_step": series.fd_step},
            "guards": self.guards,
            "checks": self.checks,
            "outputs": files,
            "passed": all(c["passed"] for c in self.checks),
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
        return manifest


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _s_list(r, default):
    v = r.get("s", default)
    return [int(x) for x in (v if isinstance(v, list) else [v])]


def _marginal_data(g1, corr, top):
    return corr.marginals(g1, top)


def _theorem1(run, G0):
    top = max(trace_norm(G0[n]) for n in range(1, G0.max_order + 1))
    run.guard("theorem1_premise", theorem1_premise(G0), {"max_norm": top, "radius": THEOREM1_RADIUS})


def cmd_vn_solve(run, model, g1, corr, series, r):
    t = float(r.get("t", 0.5))
    s_list = _s_list(r, [1, 2, 3])
    g0 = _marginal_data(g1, corr, max(s_list))
    rows = []
    for s in s_list:
        Y = tuple(range(1, s + 1))
        gt = von_neumann_solve(model, t, Y, g0)
        res = vn_hierarchy_residual(model, t, Y, g0, series)
        rows.append({"s": s, "t": t, "trace_norm": trace_norm(gt),
                     "hermiticity": hermiticity_defect(gt), "residual": res})
        run.check(f"vn_residual_s{s}", res, series.tol_fd)
    run.table("vn_solve", rows)


def cmd_bbgky_series(run, model, g1, corr, series, r):
    t = float(r.get("t", 0.2))
    s_list = _s_list(r, [1, 2])
    residual_tol = float(r.get("residual_tol", 1e-3))
    top = max(s_list) + 1 + series.n_max
    G0 = _marginal_data(g1, corr, top)
    _theorem1(run, G0)
    rows = []
    for s in s_list:
        res = marginal_series_cumulant(model, t, s, G0, series)
        resid = bbgky_residual(model, t, s, G0, series)
        for rec in res.records():
            rows.append({"s": s, "t": t, **rec, "residual": resid})
        run.check(f"bbgky_residual_s{s}", resid, residual_tol)
    run.table("bbgky_series", rows)


def cmd_functional(run, model, g1, corr, series, r):
    t = float(r.get("t", 0.3))
    G1 = g1 * float(r.get("scale", 1.0))
    rows = []
    for s in [s for s in _s_list(r, 2) if s >= 2]:
        radius = functional_guard(s)
        run.guard(f"functional_radius_s{s}", trace_norm(G1) < radius,
                  {"norm": trace_norm(G1), "radius": radius})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = correlation_functional(model, t, s, G1, corr, series, guard=False)
        rows += [{"s": s, "t": t, **rec} for rec in res.records()]
        run.check(f"functional_hermiticity_s{s}", hermiticity_defect(res.value),
                  series.tol_algebraic)
    run.table("functional", rows)


def _time_grid(r):
    t_max = float(r.get("t_max", 1.0))
    steps = int(r.get("samples", 10))
    return np.linspace(0.0, t_max, steps + 1)


def cmd_kinetic(run, model, g1, corr, series, r, equation, psi0):
    grid = _time_grid(r)
    dt = float(r.get("dt", 1e-3 if equation != "generalized" else 1e-2))
    t_max = float(grid[-1])
    run.guard("t0", t_max < t0_radius(model, g1), {"t_max": t_max, "t0": t0_radius(model, g1)})
    trivial = not model.interacting
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if equation == "vlasov":
            traj = vlasov_integrate(model, g1, grid, dt)
        elif equation == "hartree":
            if psi0 is None:
                raise ConfigError("hartree needs initial.psi0")
            traj = hartree_evolve(model, psi0, grid, dt)
        elif equation == "vlasov-corr":
            g2 = corr.at((1, 2)) if corr.has(2) else None
            traj = vlasov_correlated_integrate(model, g1, g2, grid, dt)
        else:
            norm = trace_norm(g1)
            run.guard("theorem2_premise", norm < THEOREM2_RADIUS,
                      {"norm": norm, "radius": THEOREM2_RADIUS})
            run.guard("functional_radius", norm < functional_guard(2),
                      {"norm": norm, "radius": functional_guard(2)})
            traj = generalized_kinetic_integrate(model, g1, corr, grid, series, dt)
    run.table(f"kinetic_{equation}", traj.rows())
    run.check("trace_drift", traj.trace_drift(), 1e-9 * (1 + t_max))
    run.check("hermiticity", traj.hermiticity(), 1e-10)
    run.check("richardson", traj.richardson_error, 1e-8,
              passed=traj.status != "step-too-large")
    if equation == "hartree":
        norms = [abs(np.linalg.norm(v) - 1) for v in traj.states]
        run.check("norm_drift", max(norms), 1e-9)
    if trivial and equation != "hartree":
        free = [free_group_apply(model, t, 1, relabel(g1, (1,))) for t in grid]
        dev = max(np.abs(a.mat - b.mat).sum() for a, b in zip(traj.states, free))
        run.check("trivial_case_free_motion", dev, 1e-9, note="trivial-case pass" if dev <= 1e-9
                  else "trivial-case fail")


def cmd_meanfield_sweep(run, model, g1, corr, series, r, workers):
    t = float(r.get("t", 0.1))
    eps = [float(e) for e in r.get("eps_list", [0.1, 0.01, 0.001])]
    source = r.get("limit_source", "integrator")
    run.guard("t0", t < t0_radius(model, g1), {"t": t, "t0": t0_radius(model, g1)})
    rows = []
    for s in _s_list(r, 2):
        table = meanfield_sweep(model, t, s, g1, corr, eps, series, source, workers=workers)
        rows += [{"s": s, **row, "limit_source": source} for row in table.rows()]
        if "min_rate" in r:
            run.check(f"fitted_rate_s{s}", table.slope, float(r["min_rate"]),
                      passed=table.slope >= float(r["min_rate"]),
                      note="rate must be at least tol")
    run.table("meanfield_sweep", rows)


def cmd_verify(run, model, g1, corr, series, r):
    """Invariants of the default model at desk scale."""
    rng = np.random.default_rng(int(r.get("seed", 7)))
    t = float(r.get("t", 0.4))
    # Moebius inversion of the groups on a product state
    for s in (2, 3):
        labels = tuple(range(1, s + 1))
        f = random_density(labels, model.d, rng)
        seq = CorrelationSequence({s: f}, model.d, max_order=s, tol=1e-8)
        whole = nonlinear_group_apply(model, t, labels, seq)
        run.check(f"mobius_partition_vs_cluster_s{s}",
                  trace_norm(whole - nonlinear_group_apply(model, t, labels, seq, method="cluster")),
                  series.tol_algebraic)
    run.check("mobius_weights_sum", abs(sum(mobius_weight(len(p))
                                            for p in enumerate_partitions((1, 2, 3, 4)))), 0.0)
    g0 = CorrelationSequence({n: random_hermitian(tuple(range(1, n + 1)), model.d, rng, 0.5)
                              for n in (1, 2, 3)}, model.d)
    for s in (1, 2, 3):
        Y = tuple(range(1, s + 1))
        run.check(f"vn_residual_s{s}", vn_hierarchy_residual(model, t, Y, g0, series),
                  series.tol_fd)
    a = von_neumann_solve(model, 0.2, (1, 2), CorrelationSequence(
        {n: von_neumann_solve(model, 0.3, tuple(range(1, n + 1)), g0) for n in (1, 2)},
        model.d, tol=1e-8))
    b = von_neumann_solve(model, 0.5, (1, 2), g0)
    run.check("group_property_s2", trace_norm(a - b), 1e-9)
    grid = np.linspace(0, 1, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = vlasov_integrate(model, g1, grid)
        run.check("vlasov_trace_drift", traj.trace_drift(), 2e-9)
        run.check("vlasov_hermiticity", traj.hermiticity(), 1e-10)
        psi = np.ones(model.d) / math.sqrt(model.d)
        pure = LabeledOperator((1,), np.outer(psi, psi.conj()), model.d)
        purity = vlasov_integrate(model, pure, grid).states
        run.check("hartree_purity", max(abs(np.trace(p.mat @ p.mat).real - 1) for p in purity),
                  1e-8)
    rows = [{k: v for k, v in c.items() if k != "note"} for c in run.checks]
    run.table("verify", rows)


# --- entry point -----------------------------------------------------------------

def make_parser():
    p = argparse.ArgumentParser(prog="corrdyn", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=["vn-solve", "bbgky-series", "functional", "kinetic",
                                       "meanfield-sweep", "verify"])
    p.add_argument("equation", nargs="?", choices=KINETIC_EQUATIONS,
                   help="kinetic equation (kinetic command only)")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--out", default="corrdyn-out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="fallback seed for random operators")
    p.add_argument("--threads", type=int, default=1, help="parallel workers for sweeps")
    p.add_argument("--strict", action="store_true", help="guard violations become errors")
    return p


def run(command, config_path=None, output_path="corrdyn-out", equation=None, seed=0, threads=1,
        strict=False):
    """Execute one command; returns the exit code."""
    try:
        cfg = load_config(config_path)
        model = build_model(cfg, seed)
        g1, corr, psi0 = build_initial(cfg, model.d, seed)
        series = build_series(cfg)
        r = dict(cfg.get("run", {}))
        job = Run(command if equation is None else f"{command} {equation}", cfg, output_path,
                  strict)
        if command == "kinetic":
            if equation is None:
                raise ConfigError(f"kinetic needs one of {KINETIC_EQUATIONS}")
            cmd_kinetic(job, model, g1, corr, series, r, equation, psi0)
        elif equation is not None:
            raise ConfigError("only the kinetic command takes an equation")
        elif command == "vn-solve":
            cmd_vn_solve(job, model, g1, corr, series, r)
        elif command == "bbgky-series":
            cmd_bbgky_series(job, model, g1, corr, series, r)
        elif command == "functional":
            cmd_functional(job, model, g1, corr, series, r)
        elif command == "meanfield-sweep":
            cmd_meanfield_sweep(job, model, g1, corr, series, r, threads)
        elif command == "verify":
            cmd_verify(job, model, g1, corr, series, r)
        else:
            raise ConfigError(f"unknown command {command!r}")
        manifest = job.write(series)
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DomainError, TypeError, KeyError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for c in manifest["checks"]:
        flag = "ok  " if c["passed"] else "FAIL"
        print(f"{flag} {c['name']}: {c['value']:.3e} (tol {c['tol']:.1e})")
    return EXIT_OK if manifest["passed"] else EXIT_CHECK


def main(argv=None):
    args = make_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.equation, args.seed, args.threads,
               args.strict)


if __name__ == "__main__":
    sys.exit(main())
