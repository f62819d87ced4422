"""Trajectory container, CSV/JSON export, and seeded RNG streams.

Stream-splitting rule: the generator for task ``i`` of a run with master
seed ``s`` is ``Generator(PCG64(SeedSequence(s, spawn_key=(i,))))``.  Work
is always split into the same tasks regardless of the worker count, so
results are bit-identical for any number of workers.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np


def stream(master_seed: int, *index: int) -> np.random.Generator:
    """Independent generator for the task identified by ``index``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(ss))


def run_tasks(
    fn: Callable[[int, np.random.Generator], Any],
    n_tasks: int,
    master_seed: int,
    workers: int = 1,
    key: tuple[int, ...] = (),
) -> list:
    """Evaluate ``fn(i, stream(master_seed, *key, i))`` for each task, in task order."""

    def job(i):
        return fn(i, stream(master_seed, *key, i))

    if workers <= 1 or n_tasks <= 1:
        return [job(i) for i in range(n_tasks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, range(n_tasks)))


def _jsonable(obj):
    if is_dataclass(obj):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class Trajectory:
    """Uniformly sampled path (or ensemble of paths).

    ``values`` has shape (n_samples,) for a single path or
    (n_paths, n_samples) for an ensemble; ``dt`` is the spacing between
    stored samples, which may be a multiple of the integration step.
    """

    t0: float
    dt: float
    values: np.ndarray
    seed: int | None = None
    params: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.values.shape[-1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def warnings(self) -> list:
        return self.metadata.setdefault("warnings", [])

    def sidecar(self) -> dict:
        return _jsonable(
            {
                "t0": self.t0,
                "dt": self.dt,
                "n_samples": self.n_samples,
                "n_paths": 1 if self.values.ndim == 1 else self.values.shape[0],
                "seed": self.seed,
                "params": self.params,
                "metadata": self.metadata,
            }
        )

    def to_csv(self, path) -> Path:
        """Write ``t,y`` (or ``t,y_0,y_1,...`` for an ensemble) plus a ``.json`` sidecar."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        vals = np.atleast_2d(self.values)
        header = ["t", "y"] if self.values.ndim == 1 else ["t"] + [f"y_{i}" for i in range(vals.shape[0])]
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for j, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in vals[:, j]])
        path.with_suffix(".json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True))
        return path

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        values = data[:, 1:].T if data.size else np.empty((meta.get("n_paths", 1), 0))
        if meta.get("n_paths", 1) == 1:
            values = values.reshape(-1)
        return cls(
            t0=meta["t0"],
            dt=meta["dt"],
            values=values,
            seed=meta.get("seed"),
            params=meta.get("params", {}),
            metadata=meta.get("metadata", {}),
        )


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True))
    return path


def write_table(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path
