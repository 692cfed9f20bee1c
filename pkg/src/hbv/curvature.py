"""Prescribed mean curvature by a lambda sweep of nested min cuts.

For increasing ``lam_i`` (``lam_0 = 0``, ``E_0`` empty) solve

    min_{F subset E}  P(F) + lam_i * Lambda(E minus F),   Lambda(S) = sum_S h_field h^d

and set ``u = -lam_i * h_field`` on ``E_i minus E_{i-1}``. The perimeter is the
face perimeter with the box edge counted, plus the weight term. With
lowest minimisers the ``E_i`` are nested, and ``E`` then minimises
``F -> P(F) + sum_F u h^d`` among all cell sets, which
:func:`verify_minimality` checks with one unconstrained min cut.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .core import CellSet, ScalarField, as_alpha, psum
from .graphcut import brute_force_min, build_energy, energy, min_cut, parametric_sweep
from .perimeter import perimeter_indicator

SQRT2 = math.sqrt(2.0)


def window_perimeter(F: CellSet, alpha) -> float:
    """Face perimeter plus weight term, box edge counted."""
    return perimeter_indicator(F, alpha, "faces", boundary=True).total


def weight_unary(grid, alpha) -> np.ndarray:
    a = as_alpha(alpha)
    return SQRT2 * a.kappa * grid.radius() ** (a.alpha / 2.0) * grid.cell_volume


def mass(S: CellSet, h_field: ScalarField) -> float:
    return psum(np.where(S.mask, h_field.values, 0.0)) * S.grid.cell_volume


@dataclass(eq=False)
class CurvatureRun:
    E: CellSet
    h_field: ScalarField
    lambdas: list
    nested_sets: list
    c_increment: float
    alpha: float
    u: ScalarField | None = None
    unconverged_cells: int = 0
    unconverged_mass: float = 0.0
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MassariValue:
    perimeter_term: float
    integral_term: float
    total: float


def exhaustion_threshold(E: CellSet, h_field: ScalarField, alpha) -> float:
    """A ``lam`` beyond which ``E`` itself is the only minimiser.

    Adding a cell changes the perimeter by at most
    ``sqrt(2) 2d h^(d-1) + weight h^d``; once ``lam h_field h^d`` exceeds
    that for every cell of ``E``, every strict subset can be improved.
    """
    g = E.grid
    if E.is_empty():
        return 0.0
    face = SQRT2 * 2 * g.dim * g.face_area
    wu = weight_unary(g, alpha)
    ratio = (face + wu[E.mask]) / (np.asarray(h_field.values)[E.mask] * g.cell_volume)
    return float(ratio.max())


def default_lambdas(E: CellSet, h_field: ScalarField, alpha, steps: int = 64, increment: float | None = None, exhaust: bool = False):
    """``lam_i = i c`` with ``c = P(E) / Lambda(E)``; optionally extended until
    the exhaustion threshold is passed."""
    c = increment if increment is not None else window_perimeter(E, alpha) / mass(E, h_field)
    if not c > 0:
        raise ValueError("lambda increment must be positive")
    lams = [i * c for i in range(steps + 1)]
    if exhaust:
        top = exhaustion_threshold(E, h_field, alpha)
        while lams[-1] <= top:
            lams.append(len(lams) * c)
    return lams, c


def lambda_sweep(E: CellSet, h_field: ScalarField | None = None, lambdas=None, alpha=1.0, steps: int = 64, increment: float | None = None, exhaust: bool = False) -> CurvatureRun:
    g = E.grid
    if E.is_empty():
        raise ValueError("the input set is empty")
    if h_field is None:
        h_field = ScalarField(g, np.where(E.mask, 1.0, 0.0))
    hv = np.asarray(h_field.values)
    if np.any(hv[E.mask] <= 0):
        raise ValueError("h_field must be strictly positive on E")
    if lambdas is None:
        lambdas, c = default_lambdas(E, h_field, alpha, steps, increment, exhaust)
    else:
        lambdas = [float(x) for x in lambdas]
        if not lambdas or lambdas[0] != 0.0:
            raise ValueError("lambdas must start at 0")
        if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
            raise ValueError("lambdas must be strictly increasing")
        c = max((b - a for a, b in zip(lambdas, lambdas[1:])), default=0.0)
        if increment is not None:
            if c > increment * (1 + 1e-12):
                raise ValueError("lambda increments exceed the declared bound")
            c = increment
    base = ScalarField(g, np.where(E.mask, weight_unary(g, alpha), 0.0))
    direction = ScalarField(g, np.where(E.mask, -hv * g.cell_volume, 0.0))
    sols = parametric_sweep(base, direction, lambdas, SQRT2, forced_out=~E, boundary=True)
    nested = [s.set for s in sols]
    return CurvatureRun(E, h_field, list(lambdas), nested, float(c), float(as_alpha(alpha).alpha))


def build_curvature(run: CurvatureRun) -> ScalarField:
    g = run.E.grid
    sets = run.nested_sets
    for a, b in zip(sets, sets[1:]):
        if not a.issubset(b):
            raise ValueError("nested sets are not an inclusion chain")
    u = np.zeros(g.shape)
    hv = np.asarray(run.h_field.values)
    prev = np.zeros(g.shape, bool)
    for lam, S in zip(run.lambdas, sets):
        new = S.mask & ~prev
        u[new] = -lam * hv[new]
        prev = S.mask
    missing = run.E.mask & ~prev
    run.unconverged_cells = int(np.count_nonzero(missing))
    run.unconverged_mass = psum(np.where(missing, hv, 0.0)) * g.cell_volume
    run.u = ScalarField(g, u)
    return run.u


def massari_value(F: CellSet, u: ScalarField, alpha) -> MassariValue:
    per = window_perimeter(F, alpha)
    integ = psum(np.where(F.mask, u.values, 0.0)) * F.grid.cell_volume
    return MassariValue(per, integ, per + integ)


def massari_graph(u: ScalarField, alpha):
    g = u.grid
    unary = ScalarField(g, weight_unary(g, alpha) + np.asarray(u.values) * g.cell_volume)
    return build_energy(unary, SQRT2, boundary=True)


def run_bounds(run: CurvatureRun, alpha) -> dict:
    """Telescoping and L1 bounds, with their slacks (non-negative means held)."""
    g = run.E.grid
    per = [window_perimeter(S, alpha) for S in run.nested_sets]
    lam = run.lambdas
    masses = []
    for a, b in zip(run.nested_sets, run.nested_sets[1:]):
        masses.append(mass(b - a, run.h_field))
    prefix, worst_tele = 0.0, math.inf
    for i in range(len(masses)):
        prefix += lam[i] * masses[i]
        worst_tele = min(worst_tele, per[i + 1] - prefix)
    u = run.u if run.u is not None else build_curvature(run)
    l1 = psum(np.abs(u.values)) * g.cell_volume
    bound = run.c_increment * mass(run.E, run.h_field) + window_perimeter(run.E, alpha)
    step_slack = min(
        (per[i + 1] - per[i] - lam[i] * masses[i] for i in range(len(masses))), default=0.0
    )
    return {
        "telescoping_slack": worst_tele if masses else 0.0,
        "step_slack": step_slack,
        "l1": l1,
        "l1_bound": bound,
        "l1_slack": bound - l1,
        "perimeters": per,
    }


def verify_minimality(E: CellSet, u: ScalarField, alpha, trials: int = 500, seed: int = 0, nested_sets=None, rtol: float = 1e-9) -> dict:
    """Compare ``F_u(E)`` with sampled competitors and the exact global minimum."""
    g = E.grid
    rng = np.random.default_rng(seed)
    fE = massari_value(E, u, alpha).total
    scale = window_perimeter(E, alpha) + psum(np.abs(u.values)) * g.cell_volume
    worst, witness, kind = -math.inf, None, None

    def consider(F, tag):
        nonlocal worst, witness, kind
        m = fE - massari_value(F, u, alpha).total
        if m > worst:
            worst, witness, kind = m, F, tag

    consider(E, "self")
    for S in nested_sets or []:
        consider(S, "nested")
    em = np.asarray(E.mask)
    for i in range(trials):
        r = i % 3
        p = rng.uniform(0.001, 0.2)
        flip = rng.random(g.shape) < p
        if r == 0:
            F = CellSet(g, em & ~flip)
        elif r == 1:
            F = CellSet(g, em | (flip & E.dilate(int(rng.integers(1, 4))).mask))
        else:
            from .capacity import random_blob

            F = random_blob(g, rng)
        consider(F, ("subset", "superset", "blob")[r])
    sol = min_cut(massari_graph(u, alpha))
    glob = sol.value
    margin_global = fE - glob
    if margin_global > worst:
        worst, witness, kind = margin_global, sol.set, "global"
    return {
        "F_E": fE,
        "global_min": glob,
        "global_margin": margin_global,
        "worst_margin": worst,
        "witness_kind": kind,
        "witness": witness,
        "scale": scale,
        "passed": worst <= rtol * scale,
    }


def toy_sweep_oracle(run: CurvatureRun, alpha) -> bool:
    """Every ``E_i`` equals the exhaustive lowest minimiser (small grids only)."""
    g = run.E.grid
    hv = np.asarray(run.h_field.values)
    base = np.where(run.E.mask, weight_unary(g, alpha), 0.0)
    d = np.where(run.E.mask, -hv * g.cell_volume, 0.0)
    for lam, S in zip(run.lambdas, run.nested_sets):
        G = build_energy(ScalarField(g, base + lam * d), SQRT2, forced_out=~run.E, boundary=True)
        val, low = brute_force_min(G)
        if low != S or abs(energy(G, S) - val) > 1e-12 * (1 + abs(val)):
            return False
    return True


def save_run(run: CurvatureRun, directory, extra: dict | None = None) -> None:
    """Write ``meta.json``, ``u.hbvfield`` and ``E_###.hbvset`` files."""
    from .io import write_field, write_set

    os.makedirs(directory, exist_ok=True)
    u = run.u if run.u is not None else build_curvature(run)
    write_field(os.path.join(directory, "u.hbvfield"), u)
    for i, S in enumerate(run.nested_sets):
        write_set(os.path.join(directory, f"E_{i:03d}.hbvset"), S)
    meta = {
        "schema": 1,
        "alpha": run.alpha,
        "lambdas": run.lambdas,
        "c_increment": run.c_increment,
        "set_sizes": [S.count for S in run.nested_sets],
        "unconverged_cells": run.unconverged_cells,
        "unconverged_mass": run.unconverged_mass,
    }
    meta.update(extra or {})
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")
