"""Experiment configuration shared by the CLI and the suites."""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

from .core import AlphaParam, cell_budget

ESTIMATORS = ("faces", "crofton")


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float = 2.0
    dim: int = 2
    extent: float = 2.0
    cells_per_axis: int = 128
    seed: int = 0
    estimator: str = "crofton"
    output_dir: str = "hbv-out"
    workers: int | None = None

    def validate(self) -> "ExperimentConfig":
        AlphaParam(float(self.alpha))
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if self.cells_per_axis < 2:
            raise ValueError("cells must be at least 2")
        need = self.cells_per_axis**self.dim
        if need > cell_budget():
            raise ValueError(f"grid needs {need} cells, above the budget {cell_budget()}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc).validate()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def n_workers(self) -> int:
        return self.workers or os.cpu_count() or 1


def pmap(fn, items, workers: int = 1) -> list:
    """Ordered map, threaded when ``workers > 1``; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
