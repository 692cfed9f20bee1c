"""Exact minimisation of unary + face-cut energies over cell sets.

Energy of a set ``S``::

    E(S) = sum_{c in S} unary(c) + jump_weight * h^(d-1) * #cut faces(S)

where cut faces are face-adjacent pairs split by ``S`` and, when
``boundary`` is on, faces of ``S`` lying on the box edge. Minimisation is an
s-t min cut; the source side is the set. Every solve checks that the flow
value matches the independently recomputed energy of the returned set.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import _maxflow
from .core import CellSet, Grid, ScalarField, psum
from .perimeter import boundary_face_counts, cut_counts, half_offsets

CERT_TOL = 1e-9
SATURATION_EPS = 1e-12


class CertificateError(RuntimeError):
    """Flow value and recomputed cut energy disagree."""


class _CertificateLog:
    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        with getattr(self, "_lock", threading.Lock()):
            self.n_solves = 0
            self.worst = 0.0
            self._scopes = getattr(self, "_scopes", [])

    def record(self, err: float):
        with self._lock:
            self.n_solves += 1
            self.worst = max(self.worst, err)
            scopes = list(self._scopes)
        for sc in scopes:
            sc.record(err)

    @contextmanager
    def scope(self):
        """Yield a fresh log that also receives every record made inside the block."""
        local = _CertificateLog()
        with self._lock:
            self._scopes.append(local)
        try:
            yield local
        finally:
            with self._lock:
                self._scopes.remove(local)

    def snapshot(self) -> dict:
        with self._lock:
            return {"n_solves": self.n_solves, "worst_relative_gap": self.worst}


CERTIFICATES = _CertificateLog()


def certificate_stats() -> dict:
    """Solve count and worst relative flow-vs-energy gap since the last reset."""
    return CERTIFICATES.snapshot()


@dataclass(frozen=True, eq=False)
class CutGraph:
    grid: Grid
    unary: np.ndarray
    jump_weight: float
    forced_in: np.ndarray
    forced_out: np.ndarray
    boundary: bool = True

    @property
    def face_capacity(self) -> float:
        return self.jump_weight * self.grid.face_area

    def effective_unary(self) -> np.ndarray:
        """Unary plus the box-edge faces each member cell would expose."""
        if not self.boundary or self.jump_weight == 0.0:
            return self.unary
        return self.unary + self.face_capacity * boundary_face_counts(self.grid)

    def source_caps(self) -> np.ndarray:
        u = self.effective_unary()
        out = np.maximum(-u, 0.0)
        out[self.forced_in] = np.inf
        return out

    def sink_caps(self) -> np.ndarray:
        u = self.effective_unary()
        out = np.maximum(u, 0.0)
        out[self.forced_out] = np.inf
        return out


@dataclass(frozen=True, eq=False)
class CutSolution:
    value: float
    set: CellSet
    flow_iterations: int
    flow_value: float = 0.0


def build_energy(
    unary: ScalarField,
    jump_weight: float,
    forced_in: CellSet | None = None,
    forced_out: CellSet | None = None,
    boundary: bool = True,
) -> CutGraph:
    grid = unary.grid
    if not (jump_weight >= 0.0 and np.isfinite(jump_weight)):
        raise ValueError("jump_weight must be finite and non-negative")
    fin = np.zeros(grid.shape, bool) if forced_in is None else np.asarray(forced_in.mask)
    fout = np.zeros(grid.shape, bool) if forced_out is None else np.asarray(forced_out.mask)
    for s in (forced_in, forced_out):
        if s is not None and s.grid != grid:
            raise ValueError("forced sets live on a different grid")
    if np.any(fin & fout):
        raise ValueError("forced_in and forced_out overlap")
    u = np.array(unary.values, dtype=np.float64)
    u.flags.writeable = False
    return CutGraph(grid, u, float(jump_weight), fin.copy(), fout.copy(), boundary)


def energy(g: CutGraph, S: CellSet | np.ndarray) -> float:
    """Energy of a set, from face counts (independent of the flow network)."""
    mask = S.mask if isinstance(S, CellSet) else np.asarray(S, bool)
    if np.any(g.forced_in & ~mask) or np.any(g.forced_out & mask):
        return float("inf")
    unary = psum(np.where(mask, g.unary, 0.0))
    faces = sum(cut_counts(mask, half_offsets(g.grid.dim, full=False), g.boundary))
    return unary + g.face_capacity * faces


def _network(g: CutGraph):
    grid = g.grid
    n = grid.size
    s, t = n, n + 1
    idx = np.arange(n).reshape(grid.shape)
    src = g.source_caps().ravel()
    snk = g.sink_caps().ravel()
    tails, heads, fwd, bwd = [], [], [], []
    keep = src > 0
    tails.append(np.full(keep.sum(), s))
    heads.append(np.flatnonzero(keep))
    fwd.append(src[keep])
    bwd.append(np.zeros(keep.sum()))
    keep = snk > 0
    tails.append(np.flatnonzero(keep))
    heads.append(np.full(keep.sum(), t))
    fwd.append(snk[keep])
    bwd.append(np.zeros(keep.sum()))
    wf = g.face_capacity
    if wf > 0:
        for k in range(grid.dim):
            a = np.take(idx, np.arange(grid.shape[k] - 1), axis=k).ravel()
            b = np.take(idx, np.arange(1, grid.shape[k]), axis=k).ravel()
            tails.append(a)
            heads.append(b)
            fwd.append(np.full(a.size, wf))
            bwd.append(np.full(a.size, wf))
    cat = lambda xs, dt: np.concatenate([np.asarray(x, dt) for x in xs])  # noqa: E731
    T, H = cat(tails, np.int64), cat(heads, np.int64)
    F, B = cat(fwd, np.float64), cat(bwd, np.float64)
    finite = np.concatenate([F[np.isfinite(F)], B[np.isfinite(B)], [0.0]])
    scale = float(finite.max())
    return _maxflow.build_csr(T, H, F, B, n + 2), s, t, scale


def min_cut(g: CutGraph) -> CutSolution:
    """Lowest minimiser of the energy, with a built-in duality check."""
    (start, head, cap, rev), s, t, scale = _network(g)
    eps = SATURATION_EPS * max(scale, 1e-300)
    flow, phases = _maxflow.dinic(start, head, cap, rev, s, t, eps)
    seen = _maxflow.reachable(start, head, cap, s, eps)
    mask = seen[: g.grid.size].reshape(g.grid.shape)
    S = CellSet(g.grid, mask)
    u = g.effective_unary()
    const = psum(np.where(u < 0, u, 0.0))
    flow_energy = flow + const
    value = energy(g, S)
    err = abs(flow_energy - value) / (1.0 + abs(value))
    CERTIFICATES.record(err)
    if not err <= CERT_TOL:
        raise CertificateError(
            f"max-flow {flow_energy!r} does not match cut energy {value!r} (rel {err:.3g})"
        )
    return CutSolution(value, S, int(phases), flow_energy)


def parametric_sweep(
    base_unary: ScalarField,
    direction_unary: ScalarField,
    lambdas,
    jump_weight: float,
    forced_in: CellSet | None = None,
    forced_out: CellSet | None = None,
    boundary: bool = True,
) -> list[CutSolution]:
    """Solve for ``unary = base + lam * direction`` at each ``lam``.

    With ``direction <= 0`` the lowest minimisers grow with ``lam``. Each
    level is solved from scratch.
    """
    d = np.asarray(direction_unary.values)
    if not (np.all(d <= 0) or np.all(d >= 0)):
        raise ValueError("direction_unary must not change sign")
    lams = [float(x) for x in lambdas]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambdas must be strictly increasing")
    base = np.asarray(base_unary.values)
    out = []
    for lam in lams:
        unary = ScalarField(base_unary.grid, base + lam * d)
        out.append(min_cut(build_energy(unary, jump_weight, forced_in, forced_out, boundary)))
    return out


def brute_force_min(g: CutGraph, max_cells: int = 20):
    """Exhaustive minimum over all subsets; returns ``(value, lowest set)``.

    The lowest set is the intersection of all subsets within a relative
    ``1e-12`` of the minimum.
    """
    n = g.grid.size
    if n > max_cells:
        raise ValueError(f"exhaustive search limited to {max_cells} cells")
    codes = np.arange(2**n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    u = g.effective_unary().ravel()
    vals = (bits * u).sum(axis=1)
    idx = np.arange(n).reshape(g.grid.shape)
    wf = g.face_capacity
    if wf > 0:
        for k in range(g.grid.dim):
            a = np.take(idx, np.arange(g.grid.shape[k] - 1), axis=k).ravel()
            b = np.take(idx, np.arange(1, g.grid.shape[k]), axis=k).ravel()
            vals = vals + wf * (bits[:, a] != bits[:, b]).sum(axis=1)
    fin, fout = g.forced_in.ravel(), g.forced_out.ravel()
    bad = (~bits & fin).any(axis=1) | (bits & fout).any(axis=1)
    vals = np.where(bad, np.inf, vals)
    best = float(vals.min())
    tie = vals <= best + 1e-12 * (1.0 + abs(best))
    lowest = np.all(bits[tie], axis=0)
    return best, CellSet(g.grid, lowest.reshape(g.grid.shape))


def write_dimacs(g: CutGraph, path) -> None:
    """Dump the network in DIMACS max-flow format (1-based node ids)."""
    (start, head, cap, rev), s, t, scale = _network(g)
    big = float(np.sum(cap[np.isfinite(cap)])) + 1.0
    tail = np.repeat(np.arange(len(start) - 1), np.diff(start))
    lines = [f"p max {len(start) - 1} {int(np.count_nonzero(cap > 0))}", f"n {s + 1} s", f"n {t + 1} t"]
    for a, b, c in zip(tail, head, cap):
        if c > 0:
            lines.append(f"a {a + 1} {b + 1} {(c if np.isfinite(c) else big):.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
