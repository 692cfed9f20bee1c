"""Named verification suites: each returns checks, data tables and plot specs."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import graphcut
from .capacity import (
    capacity_axiom_suite,
    capacity_relaxed,
    capacity_set_based,
    isocapacity_check,
    isocapacity_sets,
    random_blob,
    set_energy,
    trace_check,
)
from .config import ExperimentConfig, pmap
from .core import Ball, Box, CellSet, Grid, ScalarField, ball_volume, build_grid, rasterize
from .corpus import (
    curvature_corpus,
    radial_isocapacity_corpus,
    shape_corpus_2d,
    shape_corpus_3d,
    smooth_radial_corpus,
)
from .curvature import build_curvature, massari_graph, lambda_sweep, run_bounds, toy_sweep_oracle, verify_minimality
from .perimeter import (
    complement_growth,
    perimeter_indicator,
    perimeter_shape,
    scaling_sweep,
    submodularity_check,
    weight_part,
)
from .variation import coarea_integral, total_variation_smooth, variation_sup

SQRT2 = math.sqrt(2.0)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | None = None
    bound: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": self.value, "bound": self.bound, "detail": self.detail}


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    plots: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, bound=None, detail=""):
        v = None if value is None else float(value)
        b = None if bound is None else float(bound)
        self.checks.append(Check(name, bool(passed), v, b, detail))

    def to_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "data": self.data,
        }


def _plot(file, title, xlabel, ylabel, series, **kw) -> dict:
    return {"file": file, "title": title, "xlabel": xlabel, "ylabel": ylabel, "series": series, **kw}


# --- perimeter ----------------------------------------------------------------


def suite_perimeter_regression(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("perimeter-regression")
    target_ball = SQRT2 * (2 * math.pi + 2 * math.pi / 3)
    target_sq = 4 * SQRT2
    errs = {}
    for n in (64, 128, 256, 512):
        g = build_grid(2, 2.0, n)
        pv = perimeter_indicator(rasterize(Ball((0.0, 0.0), 1.0), g), 2.0, "crofton")
        errs[g.spacing] = pv.total / target_ball - 1.0
    g = build_grid(2, 2.0, 256)
    pv = perimeter_indicator(rasterize(Ball((0.0, 0.0), 1.0), g), 2.0, "crofton")
    res.add("ball_alpha2_crofton_h1/64", abs(pv.total / target_ball - 1) <= 0.03, abs(pv.total / target_ball - 1), 0.03)
    sq = rasterize(Box((0.0, 0.0), (1.0, 1.0)), g)
    pf = perimeter_indicator(sq, 1.0, "faces")
    pc = perimeter_indicator(sq, 1.0, "crofton")
    res.add("square_alpha1_faces_h1/64", abs(pf.total / target_sq - 1) <= 0.02, abs(pf.total / target_sq - 1), 0.02)
    exact = perimeter_shape(Ball((0.0, 0.0), 1.0), 2.0).total
    res.add("ball_alpha2_closed_form", abs(exact - target_ball) <= 1e-12 * target_ball, abs(exact - target_ball))
    half = perimeter_shape(Ball((0.0, 0.0), 0.5), 2.0).total
    t_half = SQRT2 * (math.pi + math.pi / 12)
    res.add("half_ball_alpha2_closed_form", abs(half - t_half) <= 1e-12 * t_half, abs(half - t_half))
    res.data = {
        "ball_alpha2": pv.to_dict(),
        "ball_target": target_ball,
        "square_alpha1_faces": pf.to_dict(),
        "square_alpha1_crofton": pc.to_dict(),
        "square_target": target_sq,
        "ball_rel_error_by_h": {repr(k): v for k, v in errs.items()},
    }
    hs = sorted(errs)
    res.plots.append(_plot("perimeter_regression.svg", "unit ball, alpha=2, crofton", "h", "relative error",
                           {"ball": (hs, [abs(errs[h]) for h in hs])}, logx=True, hlines=[(0.03, "tolerance")]))
    return res


def suite_dual_consistency(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("dual-consistency")
    alpha = cfg.alpha
    corpus = shape_corpus_2d()
    table = {}
    for n in (128, 256):
        g = build_grid(2, 2.0, n)

        def one(item):
            name, sh = item
            E = rasterize(sh, g)
            rep = variation_sup(E.indicator(), alpha, tol=1e-5)
            c = perimeter_indicator(E, alpha, "crofton").total
            return {"shape": name, "sup": rep.sup_value, "crofton": c, "rel": abs(rep.sup_value - c) / c, "converged": rep.converged}

        table[g.spacing] = pmap(one, corpus, cfg.n_workers)
    coarse, fine = table[1 / 32], table[1 / 64]
    worst = max(r["rel"] for r in fine)
    res.add("max_rel_gap_h1/64", worst <= 0.05, worst, 0.05)
    mc = float(np.mean([r["rel"] for r in coarse]))
    mf = float(np.mean([r["rel"] for r in fine]))
    res.add("mean_rel_gap_improves_under_refinement", mf < mc, mf, mc, "mean gap at h=1/64 vs h=1/32")
    res.add("sup_solver_converged", all(r["converged"] for r in coarse + fine))
    res.data = {"alpha": alpha, "h_1/32": coarse, "h_1/64": fine, "mean_rel_gap": {"1/32": mc, "1/64": mf}}
    names = [r["shape"] for r in fine]
    res.plots.append(_plot("dual_consistency.svg", "sup vs crofton", "shape index", "relative gap",
                           {"h=1/32": (list(range(len(names))), [r["rel"] for r in coarse]),
                            "h=1/64": (list(range(len(names))), [r["rel"] for r in fine])},
                           hlines=[(0.05, "tolerance")]))
    return res


def suite_coarea(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("coarea")
    g = build_grid(2, 2.0, 256)
    lo, hi = 0.95, SQRT2 + 0.05
    jobs = [(a, name, fn) for a in (1.0, 2.0, 3.0) for name, fn in smooth_radial_corpus()]

    def one(job):
        a, name, fn = job
        f = ScalarField(g, fn(g.centers()))
        tv = total_variation_smooth(f, a)
        co = coarea_integral(f, a, 200, "crofton")
        return {"alpha": a, "function": name, "tv": tv, "coarea": co, "ratio": co / tv}

    rows = pmap(one, jobs, cfg.n_workers)
    ratios = [r["ratio"] for r in rows]
    res.add("ratio_lower", min(ratios) >= lo, min(ratios), lo)
    res.add("ratio_upper", max(ratios) <= hi, max(ratios), hi)
    res.data = {"rows": rows, "h": g.spacing, "levels": 200}
    series = {}
    for name, _ in smooth_radial_corpus():
        sel = [r for r in rows if r["function"] == name]
        series[name] = ([r["alpha"] for r in sel], [r["ratio"] for r in sel])
    res.plots.append(_plot("coarea.svg", "coarea / variation", "alpha", "ratio", series,
                           hlines=[(lo, "lower"), (hi, "upper")]))
    return res


def suite_scaling(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("scaling")
    small = [round(0.1 * k, 10) for k in range(1, 11)]
    big = [1.0 + 0.25 * k for k in range(1, 13)]
    tables = {}
    ok_all = True
    for d, a in itertools.product((2, 3), (1.0, 2.0, 3.0)):
        rows = scaling_sweep(Ball((0.0,) * d, 1.0), a, small + big)
        bad = [r["s"] for r in rows if not r["holds"]]
        ok_all &= not bad
        res.add(f"sandwich_d{d}_alpha{a:g}", not bad, len(bad), 0, f"violations at s={bad}" if bad else "")
        tables[f"scaling_d{d}_a{a:g}"] = rows
    res.tables = {k: (["s", "P", "P_lower_bound", "P_upper_bound"], v) for k, v in tables.items()}
    res.data = {"tables": tables}
    rows = tables["scaling_d2_a2"]
    res.plots.append(_plot("scaling.svg", "ball, d=2, alpha=2", "s", "perimeter",
                           {"P(sB)": ([r["s"] for r in rows], [r["P"] for r in rows]),
                            "lower": ([r["s"] for r in rows], [r["P_lower_bound"] for r in rows]),
                            "upper": ([r["s"] for r in rows], [r["P_upper_bound"] for r in rows])},
                           logx=True, logy=True))
    return res


def suite_complement(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("complement")
    alpha = cfg.alpha
    d = 2
    rows, slope = complement_growth(Ball((0.0, 0.0), 1.0), alpha, [2.0, 4.0, 8.0, 16.0], cells_per_axis=256)
    target = d + alpha / 2.0
    if alpha > 1:
        res.add("weight_slope", abs(slope - target) <= 0.1 * target, slope, target)
    else:
        res.add("weight_part_zero", all(r["P_weight"] == 0 for r in rows))
    res.data = {"alpha": alpha, "rows": rows, "slope": slope, "target_slope": target}
    res.tables = {"growth": (["R", "P_total", "P_jump", "P_weight"], rows)}
    res.plots.append(_plot("complement.svg", "complement of B(0,1) in box_R", "R", "perimeter",
                           {"weight": ([r["R"] for r in rows], [max(r["P_weight"], 1e-300) for r in rows]),
                            "jump": ([r["R"] for r in rows], [r["P_jump"] for r in rows])},
                           logx=True, logy=True))
    return res


def isoperimetric_bound(d: int) -> float:
    return 1.0 / (SQRT2 * d * ball_volume(d) ** (1.0 / d))


def gaussian_trace_example(cells: int = 256, extent: float = 4.0) -> dict:
    g = build_grid(2, extent, cells)
    f = ScalarField(g, np.exp(-np.sum(g.centers() ** 2, axis=0)))
    lhs = f.lp(2.0)
    tv = total_variation_smooth(f, 1.0)
    oracle = math.sqrt(math.pi / 2) / (SQRT2 * math.pi**1.5)
    return {"lhs": lhs, "tv": tv, "ratio_tv": lhs / tv, "ratio_full": lhs / (f.l1() + tv), "oracle_ratio_tv": oracle,
            "sharp_constant": 1.0 / (2.0 * math.sqrt(math.pi))}


def suite_isoperimetric(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("isoperimetric")
    rows = []
    g2 = build_grid(2, 2.0, 256)
    g3 = build_grid(3, 1.5, 96)
    jobs = [(2, g2, n, s, a) for n, s in shape_corpus_2d() for a in (1.0, 2.0)]
    jobs += [(3, g3, n, s, a) for n, s in shape_corpus_3d() for a in (1.0, 2.0)]

    def one(job):
        d, g, name, sh, a = job
        E = rasterize(sh, g)
        P = perimeter_indicator(E, a, "crofton").total
        ratio = E.volume() ** ((d - 1.0) / d) / P
        return {"dim": d, "shape": name, "alpha": a, "ratio": ratio, "bound": isoperimetric_bound(d)}

    rows = pmap(one, jobs, cfg.n_workers)
    for d in (2, 3):
        sel = [r for r in rows if r["dim"] == d]
        worst = max(r["ratio"] / r["bound"] for r in sel)
        res.add(f"sobolev_ratio_d{d}", worst <= 1.05, worst, 1.05, "max ratio / bound")
    gx = gaussian_trace_example()
    res.add("gaussian_trace_matches_oracle", abs(gx["ratio_tv"] / gx["oracle_ratio_tv"] - 1) <= 0.02,
            gx["ratio_tv"], gx["oracle_ratio_tv"])
    res.add("gaussian_trace_below_sharp_constant", gx["ratio_tv"] <= gx["sharp_constant"], gx["ratio_tv"], gx["sharp_constant"])
    res.data = {"rows": rows, "gaussian": gx}
    sel = [r for r in rows if r["dim"] == 2 and r["alpha"] == 1.0]
    res.plots.append(_plot("isoperimetric.svg", "isoperimetric ratio, d=2, alpha=1", "shape index", "ratio",
                           {"ratio": (list(range(len(sel))), [r["ratio"] for r in sel])},
                           hlines=[(isoperimetric_bound(2), "bound")]))
    return res


def suite_trace(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("trace")
    grids = [build_grid(2, 3.0, n) for n in (96, 192, 384)]
    corpus = [fn for _, fn in smooth_radial_corpus()]
    out = {}
    for p in (1.0, 2.0):
        for a in (1.0, 2.0):
            rep = trace_check(p, corpus, a, grids)
            key = f"p{p:g}_alpha{a:g}"
            out[key] = rep
            res.add(f"drift_{key}", rep["max_drift"] <= 0.05, rep["max_drift"], 0.05)
            if p == 1.0:
                res.add(f"ratio_le_1_{key}", rep["max_ratio"] <= 1.0, rep["max_ratio"], 1.0)
    gx = gaussian_trace_example()
    res.add("gaussian_example", abs(gx["ratio_tv"] / gx["oracle_ratio_tv"] - 1) <= 0.02, gx["ratio_tv"], gx["oracle_ratio_tv"])
    res.data = {"reports": out, "gaussian": gx}
    rep = out["p2_alpha1"]
    series = {f"f{r['id']}": ([lv["h"] for lv in r["levels"]], [lv["ratio"] for lv in r["levels"]]) for r in rep["rows"]}
    res.plots.append(_plot("trace.svg", "||f||_2 / (||f||_1 + TV), alpha=1", "h", "ratio", series, logx=True))
    return res


# --- graph cuts and capacity ------------------------------------------------------


def _tiny_grids():
    return [Grid(2, (3, 3), 0.5, (0.0, 0.0)), Grid(2, (3, 4), 0.5, (-1.0, -1.0)), Grid(2, (2, 6), 0.25, (0.0, 0.0)),
            Grid(1, (12,), 0.3, (-1.8,)), Grid(2, (4, 3), 1.0, (-2.0, -1.0))]


def enumerate_superset_energy(K: CellSet, alpha) -> float:
    """Minimum of volume plus window face perimeter over all supersets of ``K``.

    Vectorised over every subset of the free cells; per-cell weights come
    from single-cell perimeter evaluations rather than the cut graph.
    """
    g = K.grid
    free = np.flatnonzero(~K.mask.ravel())
    if len(free) > 22:
        raise ValueError("too many free cells to enumerate")
    idx = np.arange(g.size)
    cost = np.empty(g.size)
    for i in idx:
        one = np.zeros(g.size, bool)
        one[i] = True
        cost[i] = g.cell_volume + weight_part(CellSet(g, one.reshape(g.shape)), alpha)
    codes = np.arange(2 ** len(free), dtype=np.int64)
    bits = np.repeat(K.mask.reshape(1, -1), len(codes), axis=0)
    bits[:, free] = (codes[:, None] >> np.arange(len(free))) & 1
    beta = SQRT2 * g.face_area
    edge = np.zeros(g.shape)
    for k in range(g.dim):
        sl = [slice(None)] * g.dim
        sl[k] = 0
        edge[tuple(sl)] += 1
        sl[k] = -1
        edge[tuple(sl)] += 1
    vals = bits @ (cost + beta * edge.ravel())
    grid_idx = idx.reshape(g.shape)
    for k in range(g.dim):
        a = np.take(grid_idx, np.arange(g.shape[k] - 1), axis=k).ravel()
        b = np.take(grid_idx, np.arange(1, g.shape[k]), axis=k).ravel()
        vals = vals + beta * (bits[:, a] != bits[:, b]).sum(axis=1)
    return float(vals.min())


def suite_selfcheck(cfg: ExperimentConfig) -> SuiteResult:
    # certificates are counted for this suite's solves only so reports stay reproducible
    with graphcut.CERTIFICATES.scope() as log:
        return _selfcheck(cfg, log)


def _selfcheck(cfg: ExperimentConfig, log) -> SuiteResult:
    res = SuiteResult("selfcheck")
    rng = np.random.default_rng(cfg.seed)
    grids = _tiny_grids()
    mism = 0
    for i in range(500):
        g = grids[i % len(grids)]
        u = ScalarField(g, rng.normal(size=g.shape))
        fin = rng.random(g.shape) < 0.1
        fout = (rng.random(g.shape) < 0.1) & ~fin
        G = graphcut.build_energy(u, float(rng.uniform(0, 2)), CellSet(g, fin), CellSet(g, fout), boundary=bool(i % 2))
        sol = graphcut.min_cut(G)
        val, low = graphcut.brute_force_min(G)
        if abs(sol.value - val) > 1e-9 * (1 + abs(val)) or sol.set != low:
            mism += 1
    res.add("mincut_vs_exhaustive_500", mism == 0, mism, 0)

    g44 = Grid(2, (4, 4), 0.5, (-1.0, -1.0))
    nest_bad = 0
    for _ in range(200):
        base = ScalarField(g44, rng.normal(size=g44.shape))
        direc = ScalarField(g44, -rng.random(g44.shape))
        lams = sorted(rng.uniform(0, 3, 2))
        if lams[0] == lams[1]:
            continue
        jw = float(rng.uniform(0, 1.5))
        sols = graphcut.parametric_sweep(base, direc, lams, jw)
        for lam, s in zip(lams, sols):
            ind = graphcut.min_cut(graphcut.build_energy(ScalarField(g44, base.values + lam * direc.values), jw))
            if ind.set != s.set:
                nest_bad += 1
        if not sols[0].set.issubset(sols[1].set):
            nest_bad += 1
    res.add("parametric_nesting_200", nest_bad == 0, nest_bad, 0)

    g33 = Grid(2, (3, 3), 0.5, (-0.75, -0.75))
    cap_bad = 0
    for a in (1.0, 2.0):
        for _ in range(25):
            K = CellSet(g33, rng.random(g33.shape) < 0.3)
            c = capacity_set_based(K, a).value
            best = min(set_energy(CellSet(g33, np.array(bits, bool).reshape(3, 3)), a)
                       for bits in itertools.product((0, 1), repeat=9)
                       if not np.any(K.mask & ~np.array(bits, bool).reshape(3, 3)))
            if abs(c - best) > 1e-9 * (1 + best):
                cap_bad += 1
    res.add("setcut_vs_exhaustive_3x3", cap_bad == 0, cap_bad, 0)

    g55 = Grid(2, (5, 5), 0.4, (-1.0, -1.0))
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    rel_gap = 0.0
    for a in (1.0, 2.0):
        K = CellSet(g55, m)
        rel = capacity_relaxed(K, a, tol=1e-9)
        best = enumerate_superset_energy(K.dilate(1), a)
        rel_gap = max(rel_gap, abs(rel.value - best) / best)
    res.add("relaxed_vs_enumeration_5x5", rel_gap <= 1e-6, rel_gap, 1e-6)

    sub_bad = 0
    all_sets = [CellSet(g33, np.array(b, bool).reshape(3, 3)) for b in itertools.product((0, 1), repeat=9)]
    for E in all_sets:
        for j in rng.integers(0, len(all_sets), 20):
            lhs, rhs = submodularity_check(E, all_sets[int(j)], 2.0, "faces")
            if lhs > rhs + 1e-9 * rhs:
                sub_bad += 1
    res.add("faces_submodularity_3x3", sub_bad == 0, sub_bad, 0)

    toy_bad = 0
    for t in range(20):
        mask = rng.random((4, 4)) < 0.6
        if not mask.any():
            mask[1, 1] = True
        E = CellSet(g44, mask)
        h = ScalarField(g44, np.where(mask, rng.uniform(0.5, 2.0, (4, 4)), 0.0))
        run = lambda_sweep(E, h, alpha=1.0 + (t % 3), steps=12, exhaust=True)
        if not toy_sweep_oracle(run, run.alpha):
            toy_bad += 1
    res.add("curvature_toy_vs_exhaustive", toy_bad == 0, toy_bad, 0)

    st = log.snapshot()
    res.add("flow_cut_certificate", st["worst_relative_gap"] <= 1e-9, st["worst_relative_gap"], 1e-9,
            f"{st['n_solves']} solves in this suite")
    res.data = {"certificates": st}
    return res


def suite_capacity_axioms(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("capacity-axioms")
    rep = capacity_axiom_suite(cfg.seed, 200, cfg.alpha, build_grid(2, 1.0, 16))
    for name, n in rep["checked"].items():
        bad = sum(1 for v in rep["violations"] if v["axiom"] == name)
        res.add(name, bad == 0, bad, 0, f"{n} instances")
    res.data = rep
    return res


def relaxation_corpus(grid: Grid, seed: int) -> list[tuple[str, CellSet]]:
    rng = np.random.default_rng(seed)
    out = [(n, rasterize(s.scaled(0.45), grid)) for n, s in shape_corpus_2d()]
    for i in range(20 - len(out)):
        out.append((f"blob_{i}", random_blob(grid, rng)))
    return out


def suite_relaxation(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("relaxation")
    g = build_grid(2, 1.0, 48)
    corpus = relaxation_corpus(g, cfg.seed)

    def one(item):
        name, K = item
        rel = capacity_relaxed(K, cfg.alpha, tol=1e-9, max_iters=40000)
        cut = capacity_set_based(K.dilate(1), cfg.alpha)
        return {"set": name, "relaxed": rel.value, "setcut": cut.value, "gap": rel.gap,
                "rel_diff": abs(rel.value - cut.value) / max(cut.value, 1e-300), "converged": rel.converged,
                "iterations": rel.iterations}

    rows = pmap(one, corpus, cfg.n_workers)
    worst = max(r["rel_diff"] for r in rows)
    res.add("relaxed_equals_setcut", worst <= 1e-6, worst, 1e-6)
    res.add("pdhg_converged", all(r["converged"] for r in rows))
    res.data = {"alpha": cfg.alpha, "rows": rows}
    return res


def _drift(values) -> float:
    return max((abs(b / a - 1.0) for a, b in zip(values, values[1:]) if a), default=0.0)


def suite_isocapacity(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("isocapacity")
    alpha = cfg.alpha
    grids = [build_grid(2, 1.5, n) for n in (48, 96, 192)]
    shapes = [(n, s.scaled(0.6)) for n, s in shape_corpus_2d()]
    set_rows = []
    for name, sh in shapes:
        eqs = isocapacity_sets([rasterize(sh, g) for g in grids], alpha)
        set_rows.append({"set": name,
                         "volume_capacity": [e6.to_dict() for e6, _ in eqs],
                         "capacity_set_energy": [e8.to_dict() for _, e8 in eqs]})
    capacity_set_energy_ok = all(e["lhs"] <= e["rhs"] * (1 + 1e-12) for r in set_rows for e in r["capacity_set_energy"])
    res.add("capacity_set_energy_feasibility", capacity_set_energy_ok, max(e["ratio"] for r in set_rows for e in r["capacity_set_energy"]), 1.0)
    res.add("volume_capacity_finite_corpus", all(math.isfinite(e["ratio"]) for r in set_rows for e in r["volume_capacity"]),
            max(_drift([e["ratio"] for e in r["volume_capacity"]]) for r in set_rows), None, "largest corpus drift, informational")
    fn_rows = []
    for name, fn in radial_isocapacity_corpus():
        e5s, e6s, e7s = [], {}, []
        for g in grids:
            f = ScalarField(g, fn(g.centers()))
            e5, e7 = isocapacity_check(f, alpha, 32)
            e5s.append(e5.to_dict())
            e7s.append(e7.to_dict())
            for t in (0.25, 0.5):
                (e6, _), = isocapacity_sets([CellSet(g, np.abs(f.values) >= t)], alpha)
                e6s.setdefault(f"t={t:g}", []).append(e6.to_dict())
        fn_rows.append({"function": name, "norm_capacity": e5s, "capacity_energy": e7s, "volume_capacity_levels": e6s})
    d6 = max(_drift([e["ratio"] for e in lv]) for r in fn_rows for lv in r["volume_capacity_levels"].values())
    res.add("volume_capacity_drift", d6 <= 0.05, d6, 0.05, "superlevel sets of the radial functions")
    for tag in ("norm_capacity", "capacity_energy"):
        d = max(_drift([e["ratio"] for e in r[tag]]) for r in fn_rows)
        res.add(f"{tag}_drift", d <= 0.05, d, 0.05)
        res.add(f"{tag}_finite", all(math.isfinite(e["ratio"]) for r in fn_rows for e in r[tag]))
    res.data = {"alpha": alpha, "h": [g.spacing for g in grids], "sets": set_rows, "functions": fn_rows}
    res.tables = {"isocapacity": (["id", "lhs", "rhs", "ratio"],
                                  [{"id": f"{r['set']}:volume_capacity", **{k: r["volume_capacity"][-1][k] for k in ("lhs", "rhs", "ratio")}} for r in set_rows]
                                  + [{"id": f"{r['set']}:capacity_set_energy", **{k: r["capacity_set_energy"][-1][k] for k in ("lhs", "rhs", "ratio")}} for r in set_rows]
                                  + [{"id": f"{r['function']}:{t}", **{k: r[t][-1][k] for k in ("lhs", "rhs", "ratio")}}
                                     for r in fn_rows for t in ("norm_capacity", "capacity_energy")])}
    hs = [g.spacing for g in grids]
    series = {f"{r['function']}:{t}": (hs, [e["ratio"] for e in r[t]]) for r in fn_rows for t in ("norm_capacity", "capacity_energy")}
    res.plots.append(_plot("isocapacity.svg", "isocapacity ratios", "h", "ratio", series, logx=True))
    return res


# --- curvature ------------------------------------------------------------------------


def suite_curvature(cfg: ExperimentConfig) -> SuiteResult:
    res = SuiteResult("curvature")
    alpha = cfg.alpha
    g = build_grid(2, 1.0, 128)
    rows = []
    for name, sh in curvature_corpus():
        E = rasterize(sh, g)
        run = lambda_sweep(E, alpha=alpha, exhaust=True)
        u = build_curvature(run)
        b = run_bounds(run, alpha)
        v = verify_minimality(E, u, alpha, trials=500, seed=cfg.seed, nested_sets=run.nested_sets)
        scale = v["scale"]
        nested = all(a.issubset(c) for a, c in zip(run.nested_sets, run.nested_sets[1:]))
        rows.append({"set": name, "levels": len(run.lambdas), "c": run.c_increment,
                     "unconverged_cells": run.unconverged_cells,
                     "telescoping_slack": b["telescoping_slack"], "l1": b["l1"], "l1_bound": b["l1_bound"],
                     "l1_slack": b["l1_slack"], "global_margin": v["global_margin"], "worst_margin": v["worst_margin"],
                     "witness": v["witness_kind"], "scale": scale, "nested": nested,
                     "set_sizes": [S.count for S in run.nested_sets]})
        res.add(f"{name}_nesting", nested)
        res.add(f"{name}_exhausted", run.unconverged_cells == 0, run.unconverged_cells, 0)
        res.add(f"{name}_telescoping", b["telescoping_slack"] >= -1e-12 * scale, b["telescoping_slack"], 0.0)
        res.add(f"{name}_l1_bound", b["l1_slack"] >= -1e-12 * scale, b["l1_slack"], 0.0)
        res.add(f"{name}_global_minimality", v["worst_margin"] <= 1e-9 * scale, v["worst_margin"], 1e-9 * scale)
    rng = np.random.default_rng(cfg.seed)
    g44 = Grid(2, (4, 4), 0.5, (-1.0, -1.0))
    toy_bad = 0
    for _ in range(10):
        mask = np.zeros((4, 4), bool)
        mask[1:3, 1:3] = True
        mask |= rng.random((4, 4)) < 0.25
        E = CellSet(g44, mask)
        run = lambda_sweep(E, alpha=alpha, steps=8, exhaust=True)
        u = build_curvature(run)
        ok = toy_sweep_oracle(run, alpha)
        Gm = massari_graph(u, alpha)
        val, _ = graphcut.brute_force_min(Gm)
        cut = graphcut.min_cut(Gm).value
        ok = ok and abs(val - cut) <= 1e-12 * (1 + abs(val))
        toy_bad += not ok
    res.add("toy_4x4_vs_exhaustive", toy_bad == 0, toy_bad, 0)
    res.data = {"alpha": alpha, "h": g.spacing, "rows": rows}
    series = {r["set"]: (list(range(len(r["set_sizes"]))), r["set_sizes"]) for r in rows}
    res.plots.append(_plot("curvature.svg", "nested set sizes", "level i", "cells in E_i", series))
    return res


SUITES = {
    "perimeter-regression": suite_perimeter_regression,
    "dual-consistency": suite_dual_consistency,
    "coarea": suite_coarea,
    "scaling": suite_scaling,
    "complement": suite_complement,
    "isoperimetric": suite_isoperimetric,
    "trace": suite_trace,
    "selfcheck": suite_selfcheck,
    "capacity-axioms": suite_capacity_axioms,
    "relaxation": suite_relaxation,
    "isocapacity": suite_isocapacity,
    "curvature": suite_curvature,
}


def run_suite(name: str, cfg: ExperimentConfig | None = None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]((cfg or ExperimentConfig()).validate())
