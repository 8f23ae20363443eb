"""Seed-reproducible sampling of driver increments on a partition.

Every random stream is keyed by ``(seed, path_index, stream)`` through a
Philox counter-based generator, so a path's increments do not depend on how
many other paths are drawn, in which order, or on how many threads are used.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .core import Martingale, Partition, Time, Wiener

_MAX_STREAM = 1 << 20


@dataclass(frozen=True)
class ScaledWiener:
    """``M = sigma * W``; quadratic-variation density ``rho = sigma**2``."""

    sigma: float = 1.0

    @property
    def rho(self) -> float:
        return self.sigma ** 2

    def increments(self, gen: np.random.Generator, steps: np.ndarray) -> np.ndarray:
        return self.sigma * np.sqrt(steps) * gen.standard_normal(steps.size)


@dataclass(frozen=True)
class CompensatedPoisson:
    """``M_t = N_t - lam * t`` for a Poisson process of rate ``lam``; ``rho = lam``."""

    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("Poisson rate must be positive")

    @property
    def rho(self) -> float:
        return self.lam

    def increments(self, gen: np.random.Generator, steps: np.ndarray) -> np.ndarray:
        mean = self.lam * steps
        return gen.poisson(mean) - mean


MartingaleModel = ScaledWiener | CompensatedPoisson


def _stream_id(key) -> int:
    if isinstance(key, int):
        return key
    return 4096 + zlib.crc32(str(key).encode()) % (_MAX_STREAM - 4096)


def stream_generator(seed: int, path_index: int, stream) -> np.random.Generator:
    """Independent generator for one ``(seed, path_index, stream)`` triple."""
    if seed < 0 or path_index < 0:
        raise ValueError("seed and path index must be non-negative")
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, (path_index * _MAX_STREAM + _stream_id(stream)) & 0xFFFFFFFFFFFFFFFF],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class PathSet:
    """Driver increments for a batch of paths on one partition.

    ``wiener`` has shape ``(P, m, N)``; each entry of ``martingales`` has shape
    ``(P, N)``.  A PathSet holding a single path has ``P == 1``.
    """

    partition: Partition
    wiener: np.ndarray
    martingales: Mapping[str, np.ndarray] = field(default_factory=dict)
    models: Mapping[str, MartingaleModel] = field(default_factory=dict)
    seed: int = 0
    path_indices: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.wiener, dtype=float)
        if w.ndim != 3 or w.shape[2] != self.partition.N:
            raise ValueError("wiener increments must have shape (paths, dims, N)")
        w.setflags(write=False)
        object.__setattr__(self, "wiener", w)
        mart = {}
        for key, inc in self.martingales.items():
            inc = np.asarray(inc, dtype=float)
            if inc.shape != (w.shape[0], self.partition.N):
                raise ValueError(f"martingale {key!r} increments have the wrong shape")
            inc.setflags(write=False)
            mart[key] = inc
        object.__setattr__(self, "martingales", mart)
        object.__setattr__(self, "models", dict(self.models))
        idx = self.path_indices
        idx = np.arange(w.shape[0]) if idx is None else np.asarray(idx, dtype=np.int64)
        object.__setattr__(self, "path_indices", idx)

    @property
    def n_paths(self) -> int:
        return self.wiener.shape[0]

    @property
    def dims(self) -> int:
        return self.wiener.shape[1]

    @property
    def N(self) -> int:
        return self.partition.N

    @property
    def path_index(self) -> int:
        if self.n_paths != 1:
            raise ValueError("path_index is defined for single-path sets only")
        return int(self.path_indices[0])

    def increments(self, driver) -> np.ndarray:
        """Increments of ``driver`` over each cell: ``(P, N)``, or ``(N,)`` for time."""
        if isinstance(driver, Time):
            return self.partition.steps
        if isinstance(driver, Wiener):
            if driver.component > self.dims:
                raise ValueError(
                    f"driver uses Wiener component {driver.component}, path has {self.dims}"
                )
            return self.wiener[:, driver.component - 1, :]
        if isinstance(driver, Martingale):
            try:
                return self.martingales[driver.id]
            except KeyError:
                raise KeyError(f"unknown martingale id {driver.id!r}") from None
        raise TypeError(f"not a driver: {driver!r}")

    def values(self, driver) -> np.ndarray:
        """Cumulative driver values at every grid point (pinned at 0 at tau_0)."""
        if isinstance(driver, Time):
            return self.partition.times.copy()
        inc = self.increments(driver)
        out = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
        np.cumsum(inc, axis=-1, out=out[..., 1:])
        return out

    def select(self, rows) -> "PathSet":
        return PathSet(
            self.partition,
            self.wiener[rows],
            {k: v[rows] for k, v in self.martingales.items()},
            self.models,
            self.seed,
            self.path_indices[rows],
        )

    def coarsen(self, factor: int) -> "PathSet":
        """Same noise on a partition with every ``factor`` cells merged."""
        if factor == 1:
            return self
        part = self.partition.coarsen(factor)
        P, m, N = self.wiener.shape

        def merge(a):
            return a.reshape(a.shape[:-1] + (N // factor, factor)).sum(axis=-1)

        return PathSet(
            part,
            merge(self.wiener),
            {k: merge(v) for k, v in self.martingales.items()},
            self.models,
            self.seed,
            self.path_indices,
        )

    # -- debugging dump: versioned header, little-endian float64 payload ---------

    _MAGIC = b"ITOPATH"
    _VERSION = 1

    def dump(self, fh) -> None:
        ids = sorted(self.martingales)
        names = "\n".join(ids).encode()
        fh.write(self._MAGIC + struct.pack("<BqqqqI", self._VERSION, self.n_paths, self.dims,
                                           self.N, self.seed, len(names)))
        fh.write(names)
        fh.write(self.partition.times.astype("<f8").tobytes())
        fh.write(self.path_indices.astype("<i8").tobytes())
        fh.write(self.wiener.astype("<f8").tobytes())
        for key in ids:
            fh.write(self.martingales[key].astype("<f8").tobytes())

    @classmethod
    def load(cls, fh) -> "PathSet":
        magic = fh.read(len(cls._MAGIC))
        if magic != cls._MAGIC:
            raise ValueError("not a path dump")
        head = struct.calcsize("<BqqqqI")
        version, P, m, N, seed, nlen = struct.unpack("<BqqqqI", fh.read(head))
        if version != cls._VERSION:
            raise ValueError(f"unsupported dump version {version}")
        names = fh.read(nlen).decode()
        ids = names.split("\n") if names else []

        def read(count, dtype="<f8"):
            return np.frombuffer(fh.read(8 * count), dtype=dtype)

        times = read(N + 1)
        part = Partition(float(times[0]), float(times[-1]), times.astype(float))
        idx = read(P, "<i8").astype(np.int64)
        wiener = read(P * m * N).reshape(P, m, N).astype(float)
        mart = {key: read(P * N).reshape(P, N).astype(float) for key in ids}
        return cls(part, wiener, mart, {}, seed, idx)


def _normalize_models(models) -> dict:
    if models is None:
        return {}
    if isinstance(models, Mapping):
        return {str(k): v for k, v in models.items()}
    return {str(i): m for i, m in enumerate(models)}


def sample_batch(partition: Partition, dims: int, models=None, seed: int = 0,
                 start: int = 0, count: int = 1) -> PathSet:
    """Paths ``start, ..., start + count - 1`` of the stream as one batch."""
    models = _normalize_models(models)
    if dims < 0 or (dims == 0 and not models):
        raise ValueError("need at least one Wiener component or one martingale model")
    if count < 1:
        raise ValueError("need at least one path")
    if not isinstance(partition, Partition):
        raise TypeError("partition must be a Partition")
    steps = partition.steps
    sd = np.sqrt(steps)
    N = partition.N
    wiener = np.empty((count, dims, N))
    mart = {key: np.empty((count, N)) for key in models}
    for row, p in enumerate(range(start, start + count)):
        for c in range(dims):
            wiener[row, c] = sd * stream_generator(seed, p, c + 1).standard_normal(N)
        for key, model in models.items():
            mart[key][row] = model.increments(stream_generator(seed, p, f"mart:{key}"), steps)
    return PathSet(partition, wiener, mart, models, seed, np.arange(start, start + count))


def sample_paths(partition: Partition, dims: int, models=None, seed: int = 0,
                 count: int = 1) -> Iterator[PathSet]:
    """Yield ``count`` independent single-path PathSets."""
    if count < 1:
        raise ValueError("need at least one path")
    for p in range(count):
        yield sample_batch(partition, dims, models, seed, p, 1)


def cumulative_value(path: PathSet, driver, j: int) -> np.ndarray:
    """Driver value at grid point ``j`` for every path in the set."""
    if not 0 <= j <= path.N:
        raise IndexError(f"grid index {j} outside 0..{path.N}")
    if isinstance(driver, Time):
        return np.full(path.n_paths, path.partition.times[j])
    inc = path.increments(driver)
    return inc[:, :j].sum(axis=-1)
