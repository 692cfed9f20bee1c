"""Grids, cell fields, analytic shapes and the origin-anchored weight.

Everything here is immutable once built: arrays handed out by
:class:`ScalarField` and :class:`CellSet` are read-only views.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage

DEFAULT_CELL_BUDGET = 2**24


class CellBudgetError(ValueError):
    """Raised when a grid would exceed the configured cell budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(
            f"grid needs {required} cells but the budget is {budget}; "
            f"set HBV_CELL_BUDGET>={required} to allow it"
        )
        self.required = required
        self.budget = budget


def cell_budget() -> int:
    raw = os.environ.get("HBV_CELL_BUDGET")
    if raw is None:
        return DEFAULT_CELL_BUDGET
    return int(raw)


def psum(values) -> float:
    """Sum with numpy's pairwise reduction over a C-contiguous flat copy.

    The flattening fixes the reduction order, so repeated calls on equal
    inputs give bit-identical results.
    """
    arr = np.ascontiguousarray(values, dtype=np.float64).ravel()
    return float(np.add.reduce(arr))


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class AlphaParam:
    alpha: float

    def __post_init__(self):
        if not math.isfinite(self.alpha) or self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")

    @property
    def kappa(self) -> float:
        return math.sqrt(self.alpha - 1.0)


def as_alpha(alpha) -> AlphaParam:
    return alpha if isinstance(alpha, AlphaParam) else AlphaParam(float(alpha))


@dataclass(frozen=True)
class Grid:
    """Uniform isotropic cell-centred grid on an axis-aligned box."""

    dim: int
    shape: tuple
    spacing: float
    origin: tuple

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.shape) != self.dim or len(self.origin) != self.dim:
            raise ValueError("shape and origin must have one entry per axis")
        if any(int(n) < 1 for n in self.shape):
            raise ValueError("every axis needs at least one cell")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError("spacing must be strictly positive")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        budget = cell_budget()
        if self.size > budget:
            raise CellBudgetError(self.size, budget)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def face_area(self) -> float:
        return self.spacing ** (self.dim - 1)

    @property
    def upper(self) -> tuple:
        return tuple(o + n * self.spacing for o, n in zip(self.origin, self.shape))

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.shape[axis]) + 0.5) * self.spacing

    def cell_center(self, index) -> np.ndarray:
        index = tuple(index)
        return np.array(
            [o + (k + 0.5) * self.spacing for o, k in zip(self.origin, index)]
        )

    def centers(self) -> np.ndarray:
        """Cell centres as an array of shape ``(dim, *shape)``."""
        return _centers(self)

    def radius(self) -> np.ndarray:
        return _radius(self)

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(
            self.dim,
            tuple(n * factor for n in self.shape),
            self.spacing / factor,
            self.origin,
        )


@lru_cache(maxsize=16)
def _centers(grid: Grid) -> np.ndarray:
    axes = [grid.axis_centers(k) for k in range(grid.dim)]
    out = np.stack(np.meshgrid(*axes, indexing="ij"))
    out.flags.writeable = False
    return out


@lru_cache(maxsize=16)
def _radius(grid: Grid) -> np.ndarray:
    out = np.sqrt(np.sum(_centers(grid) ** 2, axis=0))
    out.flags.writeable = False
    return out


def build_grid(dim: int, extent: float, cells_per_axis: int) -> Grid:
    """Grid on the symmetric box ``[-extent, extent]^dim``."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if not extent > 0:
        raise ValueError("extent must be positive")
    if cells_per_axis < 2:
        raise ValueError("cells_per_axis must be at least 2")
    required = cells_per_axis**dim
    budget = cell_budget()
    if required > budget:
        raise CellBudgetError(required, budget)
    h = 2.0 * extent / cells_per_axis
    return Grid(dim, (cells_per_axis,) * dim, h, (-float(extent),) * dim)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    def integral(self) -> float:
        return psum(self.values) * self.grid.cell_volume

    def l1(self) -> float:
        return psum(np.abs(self.values)) * self.grid.cell_volume

    def lp(self, p: float) -> float:
        return (psum(np.abs(self.values) ** p) * self.grid.cell_volume) ** (1.0 / p)

    def superlevel(self, t: float) -> "CellSet":
        return CellSet(self.grid, self.values > t)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__


def field_from(grid: Grid, fn) -> ScalarField:
    """Sample ``fn(x)`` at cell centres; ``x`` has shape ``(dim, *shape)``."""
    return ScalarField(grid, fn(grid.centers()))


@dataclass(frozen=True, eq=False)
class CellSet:
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError(f"mask shape {m.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "mask", _frozen(m))

    @classmethod
    def empty(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> "CellSet":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def volume(self) -> float:
        return self.count * self.grid.cell_volume

    def is_empty(self) -> bool:
        return self.count == 0

    def indicator(self) -> ScalarField:
        return ScalarField(self.grid, self.mask.astype(np.float64))

    def _check(self, other: "CellSet"):
        if other.grid != self.grid:
            raise ValueError("cell sets live on different grids")

    def __or__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return CellSet(self.grid, self.mask & ~other.mask)

    def __invert__(self):
        return CellSet(self.grid, ~self.mask)

    def __eq__(self, other):
        return (
            isinstance(other, CellSet)
            and other.grid == self.grid
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self):
        return hash((self.grid, self.mask.tobytes()))

    def issubset(self, other: "CellSet") -> bool:
        self._check(other)
        return not bool(np.any(self.mask & ~other.mask))

    def dilate(self, rings: int = 1) -> "CellSet":
        """Grow by ``rings`` face-neighbour layers (clipped to the box)."""
        if rings <= 0 or self.is_empty():
            return self
        st = ndimage.generate_binary_structure(self.grid.dim, 1)
        return CellSet(self.grid, ndimage.binary_dilation(self.mask, st, iterations=rings))


# --- shapes -----------------------------------------------------------------


class Shape:
    """Exact set description; membership is evaluated at cell centres."""

    variant = ""

    def contains(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, s: float) -> "Shape":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __or__(self, other):
        return Union((self, other))

    def __and__(self, other):
        return Intersection((self, other))

    def __sub__(self, other):
        return Difference(self, other)


def _vec(v) -> tuple:
    return tuple(float(c) for c in np.atleast_1d(v))


def _bcast(v, x):
    return np.asarray(v, dtype=np.float64).reshape((-1,) + (1,) * (x.ndim - 1))


@dataclass(frozen=True)
class Ball(Shape):
    """Open ball; ``radius == 0`` is allowed and describes the empty set."""

    center: tuple
    radius: float
    variant = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError("ball radius must be finite and non-negative")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def centered(self) -> bool:
        return all(c == 0.0 for c in self.center)

    def contains(self, x):
        d2 = np.sum((x - _bcast(self.center, x)) ** 2, axis=0)
        return d2 < self.radius**2

    def scaled(self, s):
        return Ball(tuple(s * c for c in self.center), s * self.radius)

    def volume(self) -> float:
        return ball_volume(self.dim) * self.radius**self.dim

    def perimeter(self) -> float:
        if self.dim == 1:
            return 2.0 if self.radius > 0 else 0.0
        return sphere_area(self.dim) * self.radius ** (self.dim - 1)

    def to_dict(self):
        return {"variant": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Box(Shape):
    """Closed axis-aligned box ``lo <= x <= hi``."""

    lo: tuple
    hi: tuple
    variant = "box"

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec(self.lo))
        object.__setattr__(self, "hi", _vec(self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners differ in dimension")
        if any(not b > a for a, b in zip(self.lo, self.hi)):
            raise ValueError("box extents must be strictly positive")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> tuple:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, x):
        lo, hi = _bcast(self.lo, x), _bcast(self.hi, x)
        return np.all((x >= lo) & (x <= hi), axis=0)

    def scaled(self, s):
        return Box(tuple(s * c for c in self.lo), tuple(s * c for c in self.hi))

    def volume(self) -> float:
        return float(np.prod(self.sides))

    def perimeter(self) -> float:
        sides = self.sides
        if self.dim == 1:
            return 2.0
        total = 0.0
        for k in range(self.dim):
            total += 2.0 * float(np.prod([s for j, s in enumerate(sides) if j != k]))
        return total

    def to_dict(self):
        return {"variant": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class HalfSpace(Shape):
    """``{x : normal . x <= offset}``."""

    normal: tuple
    offset: float
    variant = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "normal", _vec(self.normal))
        if not any(self.normal):
            raise ValueError("half-space normal must be non-zero")

    def contains(self, x):
        return np.sum(x * _bcast(self.normal, x), axis=0) <= self.offset

    def scaled(self, s):
        return HalfSpace(self.normal, s * self.offset)

    def to_dict(self):
        return {"variant": "halfspace", "normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class Union(Shape):
    items: tuple
    variant = "union"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def contains(self, x):
        out = np.zeros(x.shape[1:], dtype=bool)
        for s in self.items:
            out |= s.contains(x)
        return out

    def scaled(self, s):
        return Union(tuple(i.scaled(s) for i in self.items))

    def to_dict(self):
        return {"variant": "union", "items": [i.to_dict() for i in self.items]}


@dataclass(frozen=True)
class Intersection(Shape):
    items: tuple
    variant = "intersection"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("intersection of nothing is not a bounded shape")

    def contains(self, x):
        out = np.ones(x.shape[1:], dtype=bool)
        for s in self.items:
            out &= s.contains(x)
        return out

    def scaled(self, s):
        return Intersection(tuple(i.scaled(s) for i in self.items))

    def to_dict(self):
        return {"variant": "intersection", "items": [i.to_dict() for i in self.items]}


@dataclass(frozen=True)
class Difference(Shape):
    a: Shape
    b: Shape
    variant = "difference"

    def contains(self, x):
        return self.a.contains(x) & ~self.b.contains(x)

    def scaled(self, s):
        return Difference(self.a.scaled(s), self.b.scaled(s))

    def to_dict(self):
        return {"variant": "difference", "pair": [self.a.to_dict(), self.b.to_dict()]}


class ShapeFormatError(ValueError):
    pass


def shape_from_dict(doc) -> Shape:
    if not isinstance(doc, dict) or "variant" not in doc:
        raise ShapeFormatError("shape document must be an object with a 'variant' key")
    v = doc["variant"]
    try:
        if v == "ball":
            return Ball(doc["center"], float(doc["radius"]))
        if v == "box":
            return Box(doc["lo"], doc["hi"])
        if v == "halfspace":
            return HalfSpace(doc["normal"], float(doc["offset"]))
        if v == "union":
            return Union(tuple(shape_from_dict(d) for d in doc["items"]))
        if v == "intersection":
            return Intersection(tuple(shape_from_dict(d) for d in doc["items"]))
        if v == "difference":
            a, b = doc["pair"]
            return Difference(shape_from_dict(a), shape_from_dict(b))
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeFormatError(f"bad '{v}' shape: {exc}") from exc
    raise ShapeFormatError(f"unknown shape variant {v!r}")


def rasterize(shape: Shape, grid: Grid) -> CellSet:
    return CellSet(grid, shape.contains(grid.centers()))


# --- weight ------------------------------------------------------------------


def weight_field(grid: Grid, alpha) -> ScalarField:
    """``sqrt(alpha-1) |x|^(alpha/2)`` at every cell centre."""
    a = as_alpha(alpha)
    if a.kappa == 0.0:
        return ScalarField(grid, np.zeros(grid.shape))
    return ScalarField(grid, a.kappa * grid.radius() ** (a.alpha / 2))


def weight_vector(grid: Grid, alpha) -> np.ndarray:
    """Per-axis zero-order coefficients ``sqrt(alpha-1) x_k |x|^((alpha-2)/2)``.

    Shape ``(dim, *grid.shape)``; the Euclidean norm over axes equals
    :func:`weight_field`. Defined as 0 at the origin.
    """
    a = as_alpha(alpha)
    x = grid.centers()
    if a.kappa == 0.0:
        return np.zeros_like(x)
    r = grid.radius()
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, r ** ((a.alpha - 2.0) / 2.0), 0.0)
    return a.kappa * x * scale


def _gauss_box_moment(box: Box, power: float, nodes: int = 48) -> float:
    """Tensor Gauss-Legendre for int_box |x|^power, axes split at 0."""
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    pts, wts = [], []
    for a, b in zip(box.lo, box.hi):
        cuts = [a, b] if not (a < 0.0 < b) else [a, 0.0, b]
        p, w = [], []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            p.append(0.5 * (hi - lo) * xs + 0.5 * (hi + lo))
            w.append(0.5 * (hi - lo) * ws)
        pts.append(np.concatenate(p))
        wts.append(np.concatenate(w))
    mesh = np.meshgrid(*pts, indexing="ij")
    wmesh = np.meshgrid(*wts, indexing="ij")
    r = np.sqrt(sum(m**2 for m in mesh))
    wt = np.prod(np.stack(wmesh), axis=0)
    return psum(wt * r**power)


def moment_integral(shape: Shape, alpha, grid: Grid | None = None, method: str = "auto") -> float:
    """``int_E |x|^(alpha/2) dx``.

    ``method="auto"`` uses the radial closed form for origin-centred balls,
    tensor Gauss-Legendre for boxes when no grid is given, and midpoint
    quadrature over the rasterized shape otherwise. ``"closed"`` and
    ``"grid"`` force one path.
    """
    a = as_alpha(alpha)
    power = a.alpha / 2.0
    if method not in ("auto", "closed", "grid"):
        raise ValueError(f"unknown method {method!r}")
    if method != "grid" and isinstance(shape, Ball) and shape.centered:
        d = shape.dim
        if shape.radius == 0:
            return 0.0
        if d == 1:
            return 2.0 * shape.radius ** (1 + power) / (1 + power)
        return sphere_area(d) * shape.radius ** (d + power) / (d + power)
    if method == "closed":
        if isinstance(shape, Box):
            return _gauss_box_moment(shape, power)
        raise ValueError("closed form only exists for origin-centred balls and boxes")
    if grid is None:
        if isinstance(shape, Box):
            return _gauss_box_moment(shape, power)
        raise ValueError("this shape needs a grid for midpoint quadrature")
    E = rasterize(shape, grid)
    return psum(np.where(E.mask, grid.radius() ** power, 0.0)) * grid.cell_volume


def mollify(f: ScalarField, radius: float) -> ScalarField:
    """Convolve with the normalized quartic bump ``(1 - r^2/R^2)^2``.

    Boundaries use half-sample symmetric reflection, which keeps both
    constants and the total mass exact for kernels narrower than the box.
    """
    g = f.grid
    if radius < g.spacing:
        raise ValueError(f"mollifier radius {radius} is below the grid spacing {g.spacing}")
    m = int(math.floor(radius / g.spacing))
    if any(2 * m + 1 > 2 * n for n in g.shape):
        raise ValueError("mollifier radius exceeds the domain")
    offs = np.arange(-m, m + 1) * g.spacing
    mesh = np.meshgrid(*([offs] * g.dim), indexing="ij")
    r2 = sum(c**2 for c in mesh) / radius**2
    kernel = np.where(r2 < 1.0, (1.0 - r2) ** 2, 0.0)
    kernel /= psum(kernel)
    out = ndimage.correlate(np.asarray(f.values), kernel, mode="reflect")
    return ScalarField(g, out)


@dataclass(frozen=True, eq=False)
class VectorTestField:
    """``2*dim`` components per cell with pointwise Euclidean norm <= 1."""

    grid: Grid
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.components, dtype=np.float64)
        if c.shape != (2 * self.grid.dim,) + self.grid.shape:
            raise ValueError("test field needs 2*dim components per cell")
        if np.any(np.sqrt(np.sum(c**2, axis=0)) > 1.0 + 1e-12):
            raise ValueError("test field exceeds the unit ball somewhere")
        object.__setattr__(self, "components", _frozen(c))

    @classmethod
    def project(cls, grid: Grid, raw: np.ndarray) -> "VectorTestField":
        return cls(grid, project_unit_ball(raw))


def project_unit_ball(raw: np.ndarray) -> np.ndarray:
    """Per-cell projection onto the Euclidean unit ball (axis 0 = components)."""
    norm = np.sqrt(np.sum(raw**2, axis=0))
    return raw / np.maximum(norm, 1.0)
