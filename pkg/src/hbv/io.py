"""Text raster formats, shape documents and deterministic report writers."""
from __future__ import annotations

import csv
import io as _io
import json

import numpy as np

from .core import CellSet, Grid, ScalarField, Shape, shape_from_dict


class RasterFormatError(ValueError):
    pass


def _fmt(x: float) -> str:
    return "%.17g" % x


def _header(tag: str, grid: Grid) -> str:
    parts = [tag, str(grid.dim)] + [str(n) for n in grid.shape] + [_fmt(grid.spacing)]
    parts += [_fmt(o) for o in grid.origin]
    return " ".join(parts)


def _parse(text: str, tag: str):
    tokens = text.split()
    if not tokens or tokens[0] != tag:
        raise RasterFormatError(f"missing {tag} header")
    try:
        dim = int(tokens[1])
        shape = tuple(int(t) for t in tokens[2 : 2 + dim])
        h = float(tokens[2 + dim])
        origin = tuple(float(t) for t in tokens[3 + dim : 3 + 2 * dim])
    except (IndexError, ValueError) as exc:
        raise RasterFormatError(f"bad {tag} header: {exc}") from exc
    if len(shape) != dim or len(origin) != dim:
        raise RasterFormatError(f"truncated {tag} header")
    grid = Grid(dim, shape, h, origin)
    body = tokens[3 + 2 * dim :]
    if len(body) != grid.size:
        raise RasterFormatError(f"expected {grid.size} cell tokens, found {len(body)}")
    return grid, body


def format_set(S: CellSet) -> str:
    body = " ".join("1" if b else "0" for b in S.mask.ravel(order="C"))
    return _header("HBVSET", S.grid) + "\n" + body + "\n"


def parse_set(text: str) -> CellSet:
    grid, body = _parse(text, "HBVSET")
    if any(t not in ("0", "1") for t in body):
        raise RasterFormatError("HBVSET cells must be 0 or 1")
    mask = np.array([t == "1" for t in body], dtype=bool).reshape(grid.shape)
    return CellSet(grid, mask)


def format_field(f: ScalarField) -> str:
    body = " ".join(_fmt(v) for v in np.asarray(f.values).ravel(order="C"))
    return _header("HBVFIELD", f.grid) + "\n" + body + "\n"


def parse_field(text: str) -> ScalarField:
    grid, body = _parse(text, "HBVFIELD")
    try:
        vals = np.array([float(t) for t in body]).reshape(grid.shape)
    except ValueError as exc:
        raise RasterFormatError(f"bad HBVFIELD value: {exc}") from exc
    return ScalarField(grid, vals)


def write_set(path, S: CellSet) -> None:
    with open(path, "w") as fh:
        fh.write(format_set(S))


def read_set(path) -> CellSet:
    with open(path) as fh:
        return parse_set(fh.read())


def write_field(path, f: ScalarField) -> None:
    with open(path, "w") as fh:
        fh.write(format_field(f))


def read_field(path) -> ScalarField:
    with open(path) as fh:
        return parse_field(fh.read())


def shape_to_json(shape: Shape) -> str:
    return json.dumps(shape.to_dict(), sort_keys=True)


def load_shapes(path) -> list[Shape]:
    """A shape document or a JSON list of them."""
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        return []
    doc = json.loads(text)
    if isinstance(doc, list):
        return [shape_from_dict(d) for d in doc]
    return [shape_from_dict(doc)]


def _clean(obj):
    """Recursively turn numpy scalars/arrays and floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if x != x or x in (float("inf"), float("-inf")):
            return repr(x)
        return x
    return obj


def dumps_report(doc: dict) -> str:
    """Stable JSON text: ``schema: 1``, sorted keys, shortest round-trip floats."""
    body = {"schema": 1}
    body.update(_clean(doc))
    return json.dumps(body, sort_keys=True, indent=1) + "\n"


def write_report(path, doc: dict) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(doc))


def format_csv(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in (r[k] for k in header)])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(format_csv(header, rows))
