import itertools
import json
import os

import numpy as np
import pytest

from hbv.core import Ball, CellSet, Grid, ScalarField, build_grid, rasterize
from hbv.corpus import curvature_corpus
from hbv.curvature import (
    build_curvature,
    lambda_sweep,
    mass,
    massari_value,
    run_bounds,
    save_run,
    toy_sweep_oracle,
    verify_minimality,
    window_perimeter,
)
from hbv.io import read_field, read_set

G44 = Grid(2, (4, 4), 0.5, (-1.0, -1.0))


def toy_disk():
    return rasterize(Ball((0.0, 0.0), 0.8), G44)


def test_lambda_zero_gives_empty():
    run = lambda_sweep(toy_disk(), lambdas=[0.0], alpha=2.0)
    assert run.nested_sets[0].is_empty()


def test_large_lambda_gives_E():
    E = rasterize(Ball((0.1, 0.0), 0.5), build_grid(2, 1.0, 32))
    h = ScalarField(E.grid, np.where(E.mask, 1.0, 0.0))
    lam = 10 * window_perimeter(E, 2.0) / (1.0 * E.grid.cell_volume)
    run = lambda_sweep(E, h, lambdas=[0.0, lam], alpha=2.0)
    assert run.nested_sets[-1] == E


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_toy_sweep_matches_enumeration(alpha):
    E = toy_disk()
    run = lambda_sweep(E, alpha=alpha, steps=10, exhaust=True)
    assert toy_sweep_oracle(run, alpha)


def test_toy_sweep_against_direct_energy_enumeration():
    # independent of the cut graph: enumerate F within E and score with the perimeter module
    E = CellSet(G44, np.array([[0, 1, 1, 0], [1, 1, 1, 1], [0, 1, 1, 1], [0, 0, 1, 0]], bool))
    h = ScalarField(G44, np.where(E.mask, np.linspace(0.5, 2.0, 16).reshape(4, 4), 0.0))
    run = lambda_sweep(E, h, alpha=2.0, steps=8, exhaust=True)
    cells = np.flatnonzero(E.mask.ravel())
    subsets = []
    for bits in itertools.product((0, 1), repeat=len(cells)):
        m = np.zeros(16, bool)
        m[cells[np.array(bits, bool)]] = True
        subsets.append(CellSet(G44, m.reshape(4, 4)))
    pers = [window_perimeter(F, 2.0) for F in subsets]
    rest = [mass(E - F, h) for F in subsets]
    for lam, S in zip(run.lambdas, run.nested_sets):
        vals = np.array([p + lam * r for p, r in zip(pers, rest)])
        best = vals.min()
        tied = [F for F, v in zip(subsets, vals) if v <= best + 1e-12 * (1 + abs(best))]
        low = tied[0]
        for F in tied[1:]:
            low = low & F
        assert S == low
        assert window_perimeter(S, 2.0) + lam * mass(E - S, h) == pytest.approx(best, rel=1e-12, abs=1e-14)


def test_single_level_u():
    E = toy_disk()
    lam = 1e3
    run = lambda_sweep(E, lambdas=[0.0, lam], alpha=2.0)
    assert run.nested_sets[1] == E
    u = build_curvature(run)
    np.testing.assert_array_equal(u.values[E.mask], -lam)
    assert not np.any(u.values[~E.mask])


def test_repeated_level_carries_no_mass():
    E = toy_disk()
    run = lambda_sweep(E, lambdas=[0.0, 500.0, 1000.0], alpha=2.0)
    assert run.nested_sets[1] == run.nested_sets[2] == E
    u = build_curvature(run)
    assert not np.any(u.values == -1000.0)


def test_refusals():
    E = toy_disk()
    with pytest.raises(ValueError):
        lambda_sweep(E, ScalarField(G44, np.zeros(G44.shape)))
    with pytest.raises(ValueError):
        lambda_sweep(E, lambdas=[0.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        lambda_sweep(E, lambdas=[1.0, 2.0])
    with pytest.raises(ValueError):
        lambda_sweep(CellSet.empty(G44))


def test_massari_examples():
    E = toy_disk()
    u0 = ScalarField(G44, np.zeros(G44.shape))
    assert massari_value(CellSet.empty(G44), u0, 2.0).total == 0.0
    mv = massari_value(E, u0, 2.0)
    assert mv.total == mv.perimeter_term == window_perimeter(E, 2.0)
    run = lambda_sweep(E, alpha=2.0, exhaust=True)
    u = build_curvature(run)
    mv = massari_value(E, u, 2.0)
    assert mv.total == pytest.approx(window_perimeter(E, 2.0) - np.abs(u.values).sum() * G44.cell_volume, rel=1e-12)
    assert mv.total == pytest.approx(mv.perimeter_term + mv.integral_term, rel=1e-15)


@pytest.fixture(scope="module", params=[name for name, _ in curvature_corpus()])
def corpus_run(request):
    sh = dict(curvature_corpus())[request.param]
    g = build_grid(2, 1.0, 128)
    E = rasterize(sh, g)
    run = lambda_sweep(E, alpha=2.0, exhaust=True)
    build_curvature(run)
    return request.param, run


def test_corpus_nesting_sign_support(corpus_run):
    _, run = corpus_run
    assert all(a.issubset(b) for a, b in zip(run.nested_sets, run.nested_sets[1:]))
    u = np.asarray(run.u.values)
    assert np.all(u <= 0) and not np.any(u[~run.E.mask])
    assert run.unconverged_cells == 0 and run.nested_sets[-1] == run.E


def test_corpus_bounds(corpus_run):
    _, run = corpus_run
    b = run_bounds(run, 2.0)
    scale = window_perimeter(run.E, 2.0)
    assert b["telescoping_slack"] >= -1e-12 * scale
    assert b["step_slack"] >= -1e-12 * scale
    assert b["l1_slack"] >= -1e-12 * scale


def test_corpus_minimality(corpus_run):
    _, run = corpus_run
    v = verify_minimality(run.E, run.u, 2.0, trials=500, seed=1, nested_sets=run.nested_sets)
    assert v["passed"], (v["worst_margin"], v["witness_kind"])
    assert v["global_margin"] <= 1e-9 * v["scale"]


def test_self_margin_zero():
    E = toy_disk()
    run = lambda_sweep(E, alpha=2.0, exhaust=True)
    u = build_curvature(run)
    v = verify_minimality(E, u, 2.0, trials=0)
    assert v["worst_margin"] <= 1e-12 * v["scale"]
    assert v["global_margin"] <= 1e-12 * (1 + v["scale"])


def test_per_level_optimality_under_flips(rng):
    g = build_grid(2, 1.0, 48)
    E = rasterize(Ball((0.05, 0.0), 0.6), g)
    run = lambda_sweep(E, alpha=2.0, steps=16)
    h = run.h_field
    for lam, S in zip(run.lambdas[::4], run.nested_sets[::4]):
        base = window_perimeter(S, 2.0) + lam * mass(E - S, h)
        for k in range(100):
            m = S.mask.copy()
            if k % 2:
                i, j = np.argwhere(E.mask)[rng.integers(E.count)]
                m[i, j] = ~m[i, j]
            else:
                i, j = rng.integers(0, 44, 2)
                m[i:i + 4, j:j + 4] ^= E.mask[i:i + 4, j:j + 4]
            F = CellSet(g, m & E.mask)
            assert window_perimeter(F, 2.0) + lam * mass(E - F, h) >= base - 1e-12 * (1 + base)


def test_exhaustion_monotone_under_doubling():
    g = build_grid(2, 1.0, 48)
    E = rasterize(Ball((0.05, 0.0), 0.6), g)
    c = window_perimeter(E, 2.0) / mass(E, ScalarField(g, np.where(E.mask, 1.0, 0.0)))
    left = []
    for top in (0.25, 0.5, 1.0, 2.0, 4.0):
        run = lambda_sweep(E, lambdas=[0.0] + [c * top * k / 8 for k in range(1, 9)], alpha=2.0)
        left.append((E - run.nested_sets[-1]).count)
    assert all(b <= a for a, b in zip(left, left[1:]))
    assert left[-1] == 0


def test_save_run_roundtrip(tmp_path):
    E = toy_disk()
    run = lambda_sweep(E, alpha=2.0, steps=6, exhaust=True)
    u = build_curvature(run)
    save_run(run, tmp_path, {"note": "x"})
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["schema"] == 1 and meta["lambdas"] == run.lambdas and meta["note"] == "x"
    assert np.array_equal(read_field(tmp_path / "u.hbvfield").values, u.values)
    for i, S in enumerate(run.nested_sets):
        assert read_set(os.path.join(tmp_path, f"E_{i:03d}.hbvset")) == S
