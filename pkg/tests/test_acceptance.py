"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they are
also collected into the terminal summary.
"""
import time

import pytest

from conftest import ACCEPTANCE_LINES
from hbv.config import ExperimentConfig
from hbv.graphcut import CERT_TOL, certificate_stats
from hbv.io import dumps_report, format_csv
from hbv.suites import SUITES, run_suite

_CACHE: dict = {}


def _run(name):
    if name not in _CACHE:
        t0 = time.perf_counter()
        res = run_suite(name, ExperimentConfig())
        _CACHE[name] = (res, time.perf_counter() - t0)
    return _CACHE[name]


def _failed(res):
    return [c.name for c in res.checks if not c.passed]


def _report(k, title, ok, detail, runtime, limit):
    in_time = runtime <= limit
    timing = f"{runtime:.1f}s" + (f", limit {limit:g}s" if limit != float("inf") else "")
    line = f"ACCEPTANCE {k:2d} {'PASS' if ok and in_time else 'FAIL'} {title}: {detail} [{timing}]"
    ACCEPTANCE_LINES[k] = line
    print("\n" + line)
    return ok and in_time


def _suite_criterion(k, title, names, limit):
    results = [_run(n) for n in names]
    failed = [f"{r.name}/{c}" for r, _ in results for c in _failed(r)]
    runtime = sum(t for _, t in results)
    n_checks = sum(len(r.checks) for r, _ in results)
    detail = f"{n_checks - len(failed)}/{n_checks} checks" + (f"; failed {', '.join(failed)}" if failed else "")
    assert _report(k, title, not failed, detail, runtime, limit), detail


def test_c01_perimeter_regression():
    _suite_criterion(1, "perimeter decomposition regression", ["perimeter-regression"], 5)


def test_c02_dual_consistency():
    _suite_criterion(2, "variation vs perimeter consistency", ["dual-consistency"], 60)


def test_c03_coarea_bracket():
    _suite_criterion(3, "coarea bracket", ["coarea"], 120)


def test_c04_scaling_sandwich():
    _suite_criterion(4, "ball scaling sandwich", ["scaling"], 1)


def test_c05_complement_divergence():
    _suite_criterion(5, "complement weight divergence", ["complement"], 30)


def test_c06_isoperimetric():
    _suite_criterion(6, "isoperimetric and trace bounds", ["isoperimetric", "trace"], 60)


def test_c07_graphcut_exactness():
    res, runtime = _run("selfcheck")
    stats = certificate_stats()
    failed = _failed(res)
    ok = not failed and stats["worst_relative_gap"] <= CERT_TOL
    detail = (f"{len(res.checks) - len(failed)}/{len(res.checks)} checks; global certificate "
              f"{stats['worst_relative_gap']:.2e} over {stats['n_solves']} solves")
    assert _report(7, "graph-cut exactness", ok, detail, runtime, 30), detail


def test_c08_capacity_axioms():
    _suite_criterion(8, "capacity axioms", ["capacity-axioms"], 120)


def test_c09_relaxation_tightness():
    _suite_criterion(9, "relaxed vs set capacity", ["relaxation"], 180)


def test_c10_isocapacity():
    _suite_criterion(10, "isocapacity chains", ["isocapacity"], 180)


def test_c11_curvature():
    _suite_criterion(11, "curvature construction", ["curvature"], 120)


def _artifacts(res):
    out = {"json": dumps_report(res.to_dict())}
    for key, (header, rows) in sorted(res.tables.items()):
        out[key] = format_csv(header, rows)
    return out


def test_c12_determinism():
    t0 = time.perf_counter()
    differing = []
    for name in SUITES:
        first, _ = _run(name)
        again = run_suite(name, ExperimentConfig())
        if _artifacts(first) != _artifacts(again):
            differing.append(name)
    detail = f"{len(SUITES) - len(differing)}/{len(SUITES)} suites byte-identical"
    if differing:
        detail += f"; differing {', '.join(differing)}"
    assert _report(12, "determinism", not differing, detail, time.perf_counter() - t0, float("inf")), detail
