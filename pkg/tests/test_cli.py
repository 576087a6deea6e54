import csv
import json

import pytest

from corrdyn.cli import build_model, load_config, main

G1 = {"random": "density", "seed": 3}


def _run(tmp_path, argv, cfg, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = main([*argv, "--config", str(path), "--out", str(out)])
    return code, out


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_verify_passes(tmp_path):
    code, out = _run(tmp_path, ["verify"], {"initial": {"g1": G1}})
    m = _manifest(out)
    assert code == 0 and m["passed"]
    assert m["checks"] and all(c["passed"] for c in m["checks"])
    assert {"command", "versions", "tolerances", "truncation"} <= set(m)


def test_free_vlasov_is_trivial_pass(tmp_path):
    cfg = {"model": {"Phi": [[0] * 4] * 4}, "initial": {"g1": G1}, "run": {"t_max": 0.5}}
    code, out = _run(tmp_path, ["kinetic", "vlasov"], cfg)
    names = {c["name"]: c for c in _manifest(out)["checks"]}
    assert code == 0
    assert names["trivial_case_free_motion"]["passed"]


@pytest.mark.parametrize("equation", ["vlasov", "hartree", "vlasov-corr"])
def test_kinetic_equations_run(tmp_path, equation):
    cfg = {"model": {"Phi_seed": 1}, "initial": {
        "g1": G1, "psi0": [0.6, 0.8],
        "correlations": {"2": {"random": "hermitian", "seed": 4, "trace_norm": 0.3}}},
        "run": {"t_max": 0.3, "samples": 3}}
    code, out = _run(tmp_path, ["kinetic", equation], cfg)
    assert code == 0
    rows = list(csv.DictReader(open(next(out.glob("*.csv")))))
    assert len(rows) == 4


def test_missing_equation_is_validation_failure(tmp_path):
    code, _ = _run(tmp_path, ["kinetic"], {})
    assert code == 1


def test_unknown_config_key_is_validation_failure(tmp_path):
    code, _ = _run(tmp_path, ["verify"], {"model": {"colour": 3}})
    assert code == 1
    code, _ = _run(tmp_path, ["verify"], {"plot": {}}, "b")
    assert code == 1


def test_resource_cap_exit(tmp_path):
    code, _ = _run(tmp_path, ["bbgky-series"], {"initial": {"g1": G1}, "run": {"s": [7]}})
    assert code == 3


def test_sweep_table_and_rate_check(tmp_path):
    cfg = {"initial": {"g1": G1}, "run": {"s": 2, "min_rate": 0.9}}
    code, out = _run(tmp_path, ["meanfield-sweep"], cfg)
    assert code == 0
    rows = list(csv.DictReader(open(out / "meanfield_sweep.csv")))
    assert [float(r["eps"]) for r in rows] == [0.1, 0.01, 0.001]
    assert float(rows[0]["slope"]) > 0.9


def test_failed_rate_check_exits_2(tmp_path):
    cfg = {"initial": {"g1": G1, "correlations": {"2": {"random": "hermitian", "seed": 4,
                                                         "trace_norm": 0.5}}},
           "run": {"s": 2, "min_rate": 0.9}}
    code, out = _run(tmp_path, ["meanfield-sweep"], cfg)
    assert code == 2 and not _manifest(out)["passed"]


def test_rerun_is_bit_identical(tmp_path):
    cfg = {"initial": {"g1": G1}, "run": {"t_max": 0.2, "samples": 4}}
    _, a = _run(tmp_path, ["kinetic", "vlasov"], cfg, "a")
    _, b = _run(tmp_path, ["kinetic", "vlasov"], cfg, "b")
    assert (a / "kinetic_vlasov.csv").read_bytes() == (b / "kinetic_vlasov.csv").read_bytes()


def test_strict_guard(tmp_path):
    cfg = {"initial": {"g1": G1}, "run": {"s": 2}}
    code, out = _run(tmp_path, ["functional"], cfg)
    assert code == 0
    assert not _manifest(out)["guards"]["functional_radius_s2"]["ok"]
    code, _ = _run(tmp_path, ["functional", "--strict"], cfg, "strict")
    assert code == 1


def test_config_builders(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"model": {"d": 2, "K": {"re": [[0, 0], [0, 1]]},
                                          "Phi_seed": 2, "epsilon": 0.5}}))
    m = build_model(load_config(path), 0)
    assert m.epsilon == 0.5 and m.K[1, 1] == 1
