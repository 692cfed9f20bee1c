"""Shape and smooth-function corpora used by the experiment suites."""
from __future__ import annotations

import math

import numpy as np

from .core import Ball, Box, Difference, HalfSpace, Intersection, Shape, Union


def _polygon(normals_offsets) -> Intersection:
    return Intersection(tuple(HalfSpace(n, o) for n, o in normals_offsets))


def shape_corpus_2d() -> list[tuple[str, Shape]]:
    """Twelve planar shapes inside ``[-2, 2]^2``, away from the box edge."""
    s2 = 1.0 / math.sqrt(2.0)
    return [
        ("unit_disk", Ball((0.0, 0.0), 1.0)),
        ("offset_disk", Ball((0.3, -0.2), 0.6)),
        ("unit_square", Box((0.0, 0.0), (1.0, 1.0))),
        ("rectangle", Box((-1.2, -0.4), (0.8, 0.6))),
        ("disk_and_box", Ball((-0.5, 0.0), 0.6) | Box((0.0, -0.3), (1.1, 0.3))),
        ("annulus", Difference(Ball((0.0, 0.0), 1.2), Ball((0.0, 0.0), 0.5))),
        ("half_disk", Ball((0.0, 0.0), 1.0) & HalfSpace((0.0, -1.0), 0.0)),
        ("diamond", _polygon([((s2, s2), 0.9), ((-s2, s2), 0.9), ((s2, -s2), 0.9), ((-s2, -s2), 0.9)])),
        ("two_disks", Ball((-0.7, 0.0), 0.45) | Ball((0.7, 0.2), 0.55)),
        ("l_shape", Box((-1.0, -1.0), (0.0, 1.0)) | Box((-1.0, -1.0), (1.0, 0.0))),
        ("triangle", _polygon([((0.0, -1.0), 0.8), ((-0.8944, 0.4472), 0.5), ((0.8944, 0.4472), 0.5)])),
        ("small_disk", Ball((0.0, 0.0), 0.5)),
    ]


def shape_corpus_3d() -> list[tuple[str, Shape]]:
    return [
        ("unit_ball", Ball((0.0, 0.0, 0.0), 1.0)),
        ("cube", Box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5))),
        ("ball_union_box", Ball((0.3, 0.0, 0.0), 0.5) | Box((-0.8, -0.3, -0.3), (0.0, 0.3, 0.3))),
    ]


def _r2(x):
    return np.sum(np.asarray(x) ** 2, axis=0)


def smooth_radial_corpus() -> list[tuple[str, object]]:
    """Six smooth radial functions, negligible on the edge of ``[-2, 2]^d``."""
    return [
        ("gauss", lambda x: np.exp(-_r2(x))),
        ("narrow_gauss", lambda x: np.exp(-3.0 * _r2(x))),
        ("quartic_bump", lambda x: np.clip(1.0 - _r2(x), 0.0, None) ** 2),
        ("wide_bump", lambda x: np.clip(1.0 - _r2(x) / 2.25, 0.0, None) ** 3),
        ("super_gauss", lambda x: np.exp(-_r2(x) ** 2)),
        ("lorentz_sq", lambda x: 1.0 / (1.0 + 4.0 * _r2(x)) ** 2),
    ]


def tent(radius: float = 1.0):
    return lambda x: np.clip(1.0 - np.sqrt(_r2(x)) / radius, 0.0, None)


def radial_isocapacity_corpus() -> list[tuple[str, object]]:
    return [
        ("tent", tent(1.0)),
        ("quartic_bump", lambda x: np.clip(1.0 - _r2(x), 0.0, None) ** 2),
    ]


def curvature_corpus() -> list[tuple[str, Shape]]:
    """Sets whose face perimeter cannot drop by intersecting with them.

    Every axis line meets each of these in at most one interval, so
    ``P(F & E) <= P(F)`` for any ``F``; that is what lets the sweep's
    ``u`` certify global minimality.
    """
    return [
        ("disk", Ball((0.1, 0.05), 0.5)),
        (
            "annulus_sector",
            Intersection((Difference(Ball((0.0, 0.0), 0.8), Ball((0.0, 0.0), 0.4)), Box((0.02, 0.02), (0.95, 0.95)))),
        ),
        ("two_blobs", Ball((-0.45, -0.45), 0.3) | Ball((0.4, 0.4), 0.35)),
    ]
