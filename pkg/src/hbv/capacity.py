"""Weighted BV capacity: set minimisation, convex relaxation, axioms, inequalities.

Set path: ``cap(K) = min_{A >= K} |A| + P(A)`` with the face perimeter
(box edge counted), solved exactly by one min cut.

Relaxed path: the same energy extended to ``f in [0, 1]`` by its layer-cake
formula, ``f = 1`` on the one-ring dilation of ``K``. This is a linear
program; it is solved by restarted primal-dual hybrid gradient iterations
with a computable duality gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .core import CellSet, Grid, ScalarField, as_alpha, ball_volume, psum, sphere_area
from .graphcut import build_energy, energy, min_cut
from .perimeter import boundary_face_counts, perimeter_indicator
from .variation import GradientOperator, total_variation_smooth

SQRT2 = math.sqrt(2.0)


@dataclass
class CapacityResult:
    value: float
    minimizer: object
    method: str
    converged: bool = True
    gap: float = 0.0
    iterations: int = 0
    extra: dict = field(default_factory=dict)


def _cell_weights(grid: Grid, alpha) -> np.ndarray:
    """Per-cell cost of membership: ``h^d (1 + sqrt(2(alpha-1)) |x|^(alpha/2))``."""
    a = as_alpha(alpha)
    w = SQRT2 * a.kappa * grid.radius() ** (a.alpha / 2.0)
    return grid.cell_volume * (1.0 + w)


def capacity_energy_graph(K: CellSet, alpha):
    unary = ScalarField(K.grid, _cell_weights(K.grid, alpha))
    return build_energy(unary, SQRT2, forced_in=K, boundary=True)


def set_energy(A: CellSet, alpha) -> float:
    """``|A| + P(A)`` with the face perimeter, box edge counted."""
    pv = perimeter_indicator(A, alpha, "faces", boundary=True)
    return A.volume() + pv.total


def capacity_set_based(K: CellSet, alpha) -> CapacityResult:
    if K.is_empty():
        return CapacityResult(0.0, CellSet.empty(K.grid), "setcut")
    sol = min_cut(capacity_energy_graph(K, alpha))
    return CapacityResult(sol.value, sol.set, "setcut", iterations=sol.flow_iterations)


def ball_capacity_continuum(radius: float, alpha, dim: int) -> float:
    """``|B_r| + P(B_r)`` with Euclidean perimeter; the optimal superset of a
    centred ball among centred balls is the ball itself (objective increasing)."""
    a = as_alpha(alpha)
    S = sphere_area(dim)
    jump = SQRT2 * S * radius ** (dim - 1)
    q = dim + a.alpha / 2.0
    wpart = SQRT2 * a.kappa * S * radius**q / q
    return ball_volume(dim) * radius**dim + jump + wpart


def capacity_ballscan(K: CellSet, alpha, radii=None) -> CapacityResult:
    """Minimum of ``|A| + P(A)`` over rasterised centred balls containing ``K``."""
    g = K.grid
    r = g.radius()
    if K.is_empty():
        return CapacityResult(0.0, CellSet.empty(g), "ballscan")
    rmin = float(r[K.mask].max())
    if radii is None:
        radii = np.unique(r[r > rmin - 1e-12])
    best, best_set = math.inf, None
    for rho in radii:
        A = CellSet(g, r <= rho)
        if not K.issubset(A):
            continue
        v = set_energy(A, alpha)
        if v < best:
            best, best_set = v, A
    return CapacityResult(best, best_set, "ballscan")


# --- first-order solver -----------------------------------------------------


class _FaceDiff:
    """Forward differences across interior faces, one array per axis."""

    def __init__(self, grid: Grid):
        self.grid = grid

    def apply(self, f):
        return [np.diff(f, axis=k) for k in range(self.grid.dim)]

    def adjoint(self, y):
        out = np.zeros(self.grid.shape)
        for k, yk in enumerate(y):
            lo = [slice(None)] * self.grid.dim
            hi = [slice(None)] * self.grid.dim
            lo[k] = slice(0, -1)
            hi[k] = slice(1, None)
            out[tuple(lo)] -= yk
            out[tuple(hi)] += yk
        return out


class _StackedGradient:
    def __init__(self, grid, alpha):
        self.op = GradientOperator(grid, alpha)

    def apply(self, f):
        return list(self.op.apply(f))

    def adjoint(self, y):
        return self.op.adjoint(np.asarray(y))


def _norm_estimate(op, shape, iters=30, seed=0) -> float:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        u = op.adjoint(op.apply(v))
        s = float(np.linalg.norm(u))
        if s == 0:
            return 1.0
        v = u / s
    return 1.01 * math.sqrt(s)


@dataclass
class _PdhgOut:
    f: np.ndarray
    primal: float
    dual: float
    iterations: int
    converged: bool


def pdhg_weighted_l1(c, op, rho, lo, hi, max_iters=20000, tol=1e-7, check_every=50, primal_weight=None):
    """Restarted PDHG for ``min <c,f> + sum rho |op f|`` over ``lo <= f <= hi``.

    The dual variable lives in ``[-rho, rho]``; the dual function
    ``sum_c min_{f_c in [lo_c, hi_c]} (c + op^T y)_c f_c`` is exact, so
    ``primal - dual`` is a true optimality gap. Restarts jump to the
    running average whenever its gap has dropped below half the gap at the
    previous restart.
    """
    shape = c.shape
    L = _norm_estimate(op, shape)
    if primal_weight is None:
        rmax = max(float(max(np.max(r) for r in rho)), 1e-300)
        primal_weight = 1.0 / rmax
    tau = 0.98 * primal_weight / L
    sigma = 0.98 / (primal_weight * L)

    def primal(f):
        return psum(c * f) + psum(np.concatenate([(r * np.abs(a)).ravel() for r, a in zip(rho, op.apply(f))]))

    def dual(y):
        r = c + op.adjoint(y)
        return psum(np.minimum(r * lo, r * hi))

    f = np.clip(np.zeros(shape), lo, hi)
    y = [np.zeros_like(a) for a in op.apply(f)]
    f_sum, y_sum, n_avg = np.zeros(shape), [np.zeros_like(a) for a in y], 0
    P, D = primal(f), dual(y)
    restart_gap = P - D
    best = (P - D, f, P, D)
    it = 0
    for it in range(1, max_iters + 1):
        f_new = np.clip(f - tau * (c + op.adjoint(y)), lo, hi)
        fbar = 2.0 * f_new - f
        Kf = op.apply(fbar)
        y = [np.clip(yk + sigma * kk, -r, r) for yk, kk, r in zip(y, Kf, rho)]
        f = f_new
        f_sum += f
        for s, yk in zip(y_sum, y):
            s += yk
        n_avg += 1
        if it % check_every:
            continue
        fa = f_sum / n_avg
        ya = [s / n_avg for s in y_sum]
        Pc, Dc = primal(f), dual(y)
        Pa, Da = primal(fa), dual(ya)
        cand = min((Pc - Dc, f, y, Pc, Dc), (Pa - Da, fa, ya, Pa, Da), key=lambda z: z[0])
        gap, fc, yc, Pk, Dk = cand
        if gap < best[0]:
            best = (gap, fc.copy(), Pk, Dk)
        if best[0] <= tol * (1.0 + abs(best[2])):
            break
        if gap <= 0.5 * restart_gap:
            f, y = fc.copy(), [a.copy() for a in yc]
            restart_gap = gap
            f_sum, y_sum, n_avg = np.zeros(shape), [np.zeros_like(a) for a in y], 0
    gap, fbest, Pb, Db = best
    return _PdhgOut(fbest, Pb, Db, it, gap <= tol * (1.0 + abs(Pb)))


def capacity_relaxed(K: CellSet, alpha, max_iters: int = 20000, tol: float = 1e-7, dilation: int = 1) -> CapacityResult:
    """Convex relaxation over ``f in [0, 1]`` with ``f = 1`` on the dilated ``K``.

    Objective: ``sum f h^d (1 + w) + sqrt(2) h^(d-1) (sum_faces |f_i - f_j| +
    sum over box-edge faces f)``, the layer-cake extension of the set energy.
    """
    g = K.grid
    if K.is_empty():
        return CapacityResult(0.0, ScalarField(g, np.zeros(g.shape)), "relaxed")
    Kd = K.dilate(dilation)
    beta = SQRT2 * g.face_area
    c = _cell_weights(g, alpha) + beta * boundary_face_counts(g)
    op = _FaceDiff(g)
    rho = [np.full(a.shape, beta) for a in op.apply(np.zeros(g.shape))]
    lo = np.where(Kd.mask, 1.0, 0.0)
    hi = np.ones(g.shape)
    out = pdhg_weighted_l1(c, op, rho, lo, hi, max_iters=max_iters, tol=tol)
    return CapacityResult(
        out.primal,
        ScalarField(g, out.f),
        "relaxed",
        converged=out.converged,
        gap=out.primal - out.dual,
        iterations=out.iterations,
        extra={"dual": out.dual, "dilated": Kd},
    )


@dataclass
class SobolevCapacity:
    value: float
    minimizer: ScalarField
    converged: bool
    gap: float
    iterations: int
    hit_upper: bool


def sobolev_1_capacity(K: CellSet, alpha, max_iters: int = 20000, tol: float = 1e-5, upper: float = 2.0, dilation: int = 1) -> SobolevCapacity:
    """``min sum_j (|A+_j f|_1 + |A-_j f|_1) + |f|_1`` over ``f >= 0``, ``f >= 1`` on dilated K.

    The grid is padded by one ring of cells pinned to zero so that ``f``
    pays for leaving the box, as the set capacity does. The admissible set
    is capped at ``f <= upper`` so the duality gap is finite; ``hit_upper``
    flags a minimiser touching the cap.
    """
    g = K.grid
    if K.is_empty():
        return SobolevCapacity(0.0, ScalarField(g, np.zeros(g.shape)), True, 0.0, 0, False)
    Kd = K.dilate(dilation)
    pg = Grid(g.dim, tuple(n + 2 for n in g.shape), g.spacing, tuple(o - g.spacing for o in g.origin))
    inner = tuple(slice(1, -1) for _ in range(g.dim))
    vol = g.cell_volume
    c = np.full(pg.shape, vol)
    op = _StackedGradient(pg, alpha)
    rho = [np.full(pg.shape, vol) for _ in range(2 * g.dim)]
    lo = np.zeros(pg.shape)
    lo[inner] = np.where(Kd.mask, 1.0, 0.0)
    hi = np.zeros(pg.shape)
    hi[inner] = float(upper)
    out = pdhg_weighted_l1(c, op, rho, lo, hi, max_iters=max_iters, tol=tol)
    f = out.f[inner]
    hit = bool(np.any(f >= upper - 1e-6))
    return SobolevCapacity(out.primal, ScalarField(g, f), out.converged, out.primal - out.dual, out.iterations, hit)


# --- axioms -----------------------------------------------------------------


def random_blob(grid: Grid, rng: np.random.Generator, n_parts: int | None = None) -> CellSet:
    """Union of a few random discs and boxes, in grid units."""
    x = grid.centers()
    lo = np.array(grid.origin)
    span = np.array(grid.upper) - lo
    mask = np.zeros(grid.shape, bool)
    for _ in range(n_parts or int(rng.integers(1, 4))):
        c = lo + span * rng.uniform(0.15, 0.85, grid.dim)
        r = float(rng.uniform(0.05, 0.25)) * float(span.min())
        cc = c.reshape((-1,) + (1,) * grid.dim)
        if rng.random() < 0.5:
            mask |= np.sum((x - cc) ** 2, axis=0) < r * r
        else:
            mask |= np.all(np.abs(x - cc) <= r, axis=0)
    if not mask.any():
        mask[tuple(s // 2 for s in grid.shape)] = True
    return CellSet(grid, mask)


def capacity_axiom_suite(seed: int, trials: int, alpha, grid: Grid | None = None, rtol: float = 1e-9) -> dict:
    """Seeded checks of monotonicity, strong and finite subadditivity, chain limits."""
    from .core import build_grid

    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = grid or build_grid(2, 1.0, 16)
    rng = np.random.default_rng(seed)
    cap = lambda S: capacity_set_based(S, alpha)  # noqa: E731
    tolf = lambda *v: rtol * (1.0 + max(abs(x) for x in v))  # noqa: E731
    counts = {k: 0 for k in ("monotone", "strong", "finite", "increasing", "decreasing", "recombined")}
    violations = []
    for i in range(trials):
        A, B = random_blob(grid, rng), random_blob(grid, rng)
        rA, rB = cap(A), cap(B)
        rU, rI = cap(A | B), cap(A & B)
        cA, cB, cU, cI = rA.value, rB.value, rU.value, rI.value
        checks = {
            "monotone": cI <= min(cA, cB) + tolf(cA, cB) and max(cA, cB) <= cU + tolf(cU),
            "strong": cU + cI <= cA + cB + tolf(cA, cB),
        }
        G = capacity_energy_graph(CellSet.empty(grid), alpha)
        MA, MB = rA.minimizer, rB.minimizer
        lhs = energy(G, MA | MB) + energy(G, MA & MB)
        rhs = energy(G, MA) + energy(G, MB)
        checks["recombined"] = lhs <= rhs + tolf(lhs, rhs)
        k = int(rng.integers(2, 9))
        sets = [random_blob(grid, rng, 1) for _ in range(k)]
        U = sets[0]
        for S in sets[1:]:
            U = U | S
        cu = cap(U).value
        tot = sum(cap(S).value for S in sets)
        checks["finite"] = cu <= tot + tolf(tot)
        chain, acc = [], CellSet.empty(grid)
        for S in sets:
            acc = acc | S
            chain.append(cap(acc).value)
        checks["increasing"] = all(b >= a - tolf(a, b) for a, b in zip(chain, chain[1:])) and abs(chain[-1] - cu) <= tolf(cu)
        dec, acc = [], U
        for S in sets:
            acc = acc & (S | sets[0])
            dec.append(cap(acc).value)
        checks["decreasing"] = all(b <= a + tolf(a, b) for a, b in zip(dec, dec[1:])) and abs(dec[-1] - cap(acc).value) <= tolf(dec[-1])
        for name, ok in checks.items():
            counts[name] += 1
            if not ok:
                violations.append({"instance": i, "axiom": name})
    return {"trials": trials, "checked": counts, "violations": violations, "passed": not violations}


# --- trace and isocapacity ----------------------------------------------------


def trace_check(p: float, corpus, alpha, grids) -> dict:
    """Embedding ratio ``||f||_p / (||f||_1 + TV(f))`` across refinements.

    ``corpus`` holds callables ``fn(x)`` sampled on each grid of ``grids``
    (coarse to fine). Both the full ratio and ``||f||_p / TV(f)`` are
    reported; drift is the relative change of the full ratio between the
    coarsest and finest grids.
    """
    rows = []
    for idx, fn in enumerate(corpus):
        per = []
        for g in grids:
            f = ScalarField(g, fn(g.centers()))
            lhs = f.lp(p)
            tv = total_variation_smooth(f, alpha)
            rhs = f.l1() + tv
            per.append({
                "h": g.spacing,
                "lhs": lhs,
                "rhs": rhs,
                "tv": tv,
                "ratio": lhs / rhs if rhs > 0 else 0.0,
                "ratio_tv": lhs / tv if tv > 0 else 0.0,
            })
        r0, r1 = per[0]["ratio"], per[-1]["ratio"]
        drift = (r1 - r0) / r0 if r0 > 0 else 0.0
        rows.append({"id": idx, "levels": per, "drift": drift})
    max_ratio = max((lv["ratio"] for r in rows for lv in r["levels"]), default=0.0)
    max_drift = max((abs(r["drift"]) for r in rows), default=0.0)
    return {"p": p, "rows": rows, "max_ratio": max_ratio, "max_drift": max_drift}


@dataclass
class IsocapacityReport:
    lhs: float
    rhs: float
    ratio: float
    inequality_id: str
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(lhs, rhs, tag, **details) -> IsocapacityReport:
    return IsocapacityReport(lhs, rhs, lhs / rhs if rhs != 0 else math.inf, tag, details)


def capacity_distribution(f: ScalarField, alpha, n_levels: int = 32) -> tuple[float, float]:
    """``(int_0^inf cap({|f| >= t})^p d(t^p))^(1/p)`` with ``p = d/(d-1)``.

    Midpoint rule in ``t``. Returns ``(setcut value, ball-formula cross-check)``;
    the cross-check replaces each level capacity by the continuum value
    for the ball of equal volume.
    """
    g = f.grid
    if g.dim < 2:
        raise ValueError("the capacity distribution needs dim >= 2")
    p = g.dim / (g.dim - 1.0)
    absf = np.abs(np.asarray(f.values))
    top = float(absf.max())
    if top == 0.0:
        return 0.0, 0.0
    dt = top / n_levels
    acc, acc_ball = [], []
    for i in range(n_levels):
        t = (i + 0.5) * dt
        lvl = CellSet(g, absf >= t)
        c = capacity_set_based(lvl, alpha).value
        r = (lvl.volume() / ball_volume(g.dim)) ** (1.0 / g.dim)
        cb = ball_capacity_continuum(r, alpha, g.dim)
        wgt = p * t ** (p - 1.0) * dt
        acc.append(c**p * wgt)
        acc_ball.append(cb**p * wgt)
    return psum(acc) ** (1.0 / p), psum(acc_ball) ** (1.0 / p)


def isocapacity_check(f: ScalarField, alpha, n_levels: int = 32):
    """Function-side chain: (norm_capacity, capacity_energy) reports."""
    g = f.grid
    p = g.dim / (g.dim - 1.0)
    cdist, cball = capacity_distribution(f, alpha, n_levels)
    norm_p = f.lp(p)
    energy_rhs = f.l1() + total_variation_smooth(f, alpha)
    norm_capacity = _report(norm_p, cdist, "norm_capacity", ballscan=cball)
    capacity_energy = _report(cdist, energy_rhs, "capacity_energy", ballscan=cball)
    return norm_capacity, capacity_energy


def isocapacity_sets(sets, alpha):
    """Set-side chain per set: (volume_capacity, capacity_set_energy) reports."""
    out = []
    for M in sets:
        d = M.grid.dim
        c = capacity_set_based(M, alpha).value
        vol = M.volume()
        volume_capacity = _report(vol ** ((d - 1.0) / d), c, "volume_capacity")
        capacity_set_energy = _report(c, set_energy(M, alpha), "capacity_set_energy")
        out.append((volume_capacity, capacity_set_energy))
    return out


__all__ = [
    "CapacityResult",
    "IsocapacityReport",
    "SobolevCapacity",
    "ball_capacity_continuum",
    "capacity_axiom_suite",
    "capacity_ballscan",
    "capacity_distribution",
    "capacity_relaxed",
    "capacity_set_based",
    "isocapacity_check",
    "isocapacity_sets",
    "random_blob",
    "set_energy",
    "sobolev_1_capacity",
    "trace_check",
]
