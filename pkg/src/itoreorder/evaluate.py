"""Evaluation of iterated integrals on sampled paths.

All evaluators take a :class:`~itoreorder.paths.PathSet` holding ``P`` paths
and return an array of shape ``(P,)``.  Forward integrals are nested
left-point sums computed by running prefix accumulation; reversed-order
integrals build their tail integrals by suffix recursion.  Both are O(kN).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import singledispatch

import numpy as np

from .core import (
    FORWARD, REVERSED, Deterministic, IntegralSpec, IteratedValue, KernelExpr,
    KernelSpec, Linear, MartingaleValue, NotSeparable, One, Time, WeightExpr,
    Weighted, WeightedPath, Wiener, WienerIncrement, WienerValue, Martingale,
)
from .paths import PathSet

MAX_DIRECT_ARITY = 2


# ---------------------------------------------------------------------------
# Compensated accumulation


try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _twosum_cumsum(x: np.ndarray) -> np.ndarray:
    # np.cumsum accumulates sequentially, so TwoSum recovers each rounding error exactly
    s = np.cumsum(x, axis=-1)
    if x.shape[-1] < 2:
        return s
    a = s[..., :-1]
    b = x[..., 1:]
    c = s[..., 1:]
    bb = c - a
    err = (a - (c - bb)) + (b - bb)
    s[..., 1:] += np.cumsum(err, axis=-1)
    return s


if njit is not None:

    @njit(cache=True)
    def _kahan_prefix(x, out):
        rows, n = x.shape
        for p in range(rows):
            s = 0.0
            c = 0.0
            out[p, 0] = 0.0
            for j in range(n):
                y = x[p, j] - c
                t = s + y
                c = (t - s) - y
                s = t
                out[p, j + 1] = s

    @njit(cache=True)
    def _kahan_suffix(x, out):
        rows, n = x.shape
        for p in range(rows):
            s = 0.0
            c = 0.0
            out[p, n] = 0.0
            for j in range(n - 1, -1, -1):
                y = x[p, j] - c
                t = s + y
                c = (t - s) - y
                s = t
                out[p, j] = s


def _as_rows(x):
    x = np.ascontiguousarray(x, dtype=float)
    return x.reshape(-1, x.shape[-1])


def prefix_sums(x: np.ndarray) -> np.ndarray:
    """``out[..., j] = sum_{i<j} x[..., i]`` for ``j = 0..N``, Kahan-compensated."""
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1] + (x.shape[-1] + 1,)
    if njit is None:
        out = np.zeros(shape)
        out[..., 1:] = _twosum_cumsum(x)
        return out
    rows = _as_rows(x)
    out = np.empty((rows.shape[0], rows.shape[1] + 1))
    _kahan_prefix(rows, out)
    return out.reshape(shape)


def suffix_sums(x: np.ndarray) -> np.ndarray:
    """``out[..., l] = sum_{i>=l} x[..., i]`` for ``l = 0..N`` (``out[..., N] = 0``)."""
    x = np.asarray(x, dtype=float)
    shape = x.shape[:-1] + (x.shape[-1] + 1,)
    if njit is None:
        out = np.zeros(shape)
        out[..., :-1] = _twosum_cumsum(x[..., ::-1])[..., ::-1]
        return out
    rows = _as_rows(x)
    out = np.empty((rows.shape[0], rows.shape[1] + 1))
    _kahan_suffix(rows, out)
    return out.reshape(shape)


def compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Inclusive cumulative sum along the last axis with error compensation."""
    return prefix_sums(x)[..., 1:]


def total(x: np.ndarray) -> np.ndarray:
    return compensated_cumsum(x)[..., -1]


# ---------------------------------------------------------------------------
# Integrand values at left endpoints


def _rows(path: PathSet, a) -> np.ndarray:
    return np.broadcast_to(a, (path.n_paths, path.N))


@singledispatch
def integrand_values(kind, path: PathSet, interval) -> np.ndarray:
    """Values of ``phi`` at ``tau_0..tau_{N-1}``, shape ``(P, N)``."""
    raise TypeError(f"unsupported integrand {kind!r}")


@integrand_values.register
def _(kind: One, path, interval):
    return np.ones((path.n_paths, path.N))


@integrand_values.register
def _(kind: WienerValue, path, interval):
    return path.values(Wiener(kind.component))[:, :-1]


@integrand_values.register
def _(kind: WienerIncrement, path, interval):
    return path.values(Wiener(kind.component))[:, :-1]


@integrand_values.register
def _(kind: WeightedPath, path, interval):
    w = kind.weight(path.partition.times[:-1], interval)
    return w * path.values(Wiener(kind.component))[:, :-1]


@integrand_values.register
def _(kind: Deterministic, path, interval):
    return np.array(_rows(path, kind.weight(path.partition.times[:-1], interval)))


@integrand_values.register
def _(kind: MartingaleValue, path, interval):
    return path.values(Martingale(kind.id))[:, :-1]


@integrand_values.register
def _(kind: IteratedValue, path, interval):
    if kind.spec.orientation != FORWARD:
        raise ValueError("running values exist for forward integrals only")
    running = forward_prefix(kind.spec, path)[:, :-1]
    return kind.weight(path.partition.times[:-1], interval) * running


@integrand_values.register
def _(kind: Weighted, path, interval):
    return kind.weight(path.partition.times[:-1], interval) * integrand_values(kind.base, path, interval)


@integrand_values.register
def _(kind: Linear, path, interval):
    out = np.zeros((path.n_paths, path.N))
    for c, sub in kind.terms:
        out = out + c * integrand_values(sub, path, interval)
    return out


# ---------------------------------------------------------------------------
# Forward and reversed iterated integrals


def _check_interval(interval, path: PathSet):
    if tuple(interval) != path.partition.interval:
        raise ValueError(
            f"spec interval {tuple(interval)} does not match partition {path.partition.interval}"
        )


def forward_prefix(spec: IntegralSpec, path: PathSet) -> np.ndarray:
    """Running values ``J[phi, psi^(k)]_{tau_j, t}`` for ``j = 0..N``, shape ``(P, N+1)``."""
    _check_interval(spec.interval, path)
    left = path.partition.times[:-1]
    x = integrand_values(spec.integrand, path, spec.interval) * path.increments(spec.drivers[-1])
    running = prefix_sums(x)
    for psi, drv in zip(reversed(spec.weights), reversed(spec.drivers[:-1])):
        running = prefix_sums(psi(left, spec.interval) * running[:, :-1] * path.increments(drv))
    return running


def eval_forward(spec: IntegralSpec, path: PathSet) -> np.ndarray:
    if spec.orientation != FORWARD:
        raise ValueError("eval_forward needs a forward spec")
    return forward_prefix(spec, path)[:, -1]


@dataclass(frozen=True, eq=False)
class TailAccumulator:
    """Tail integrals ``Ihat[psi^(r)]_{T, tau_l}`` for ``r = 0..k`` and ``l = 0..N``.

    ``values[0]`` is identically 1; ``values[r][:, N]`` is 0 for ``r >= 1``.
    """

    level: int
    values: tuple  # k+1 arrays of shape (P, N+1)

    @property
    def top(self) -> np.ndarray:
        return self.values[-1]


def tail_accumulator(weights, drivers, path: PathSet, interval) -> TailAccumulator:
    """Build the tails by the backward recurrence; ``weights[r-1]`` and
    ``drivers[r-1]`` enter at level ``r``."""
    if len(weights) != len(drivers):
        raise ValueError("one driver per weight")
    _check_interval(interval, path)
    left = path.partition.times[:-1]
    levels = [np.ones((path.n_paths, path.N + 1))]
    for psi, drv in zip(weights, drivers):
        x = psi(left, interval) * path.increments(drv)
        if len(levels) > 1:
            x = x * levels[-1][:, 1:]
        levels.append(suffix_sums(np.broadcast_to(x, (path.n_paths, path.N))))
    return TailAccumulator(len(weights), tuple(levels))


def eval_reversed(spec: IntegralSpec, path: PathSet) -> np.ndarray:
    if spec.orientation != REVERSED:
        raise ValueError("eval_reversed needs a reversed spec")
    tails = tail_accumulator(spec.weights, spec.drivers[:-1], path, spec.interval)
    theta = tails.top[:, 1:]
    if spec.post_weight is not None:
        theta = theta * spec.post_weight(path.partition.times[1:], spec.interval)
    x = integrand_values(spec.integrand, path, spec.interval) * path.increments(spec.drivers[-1])
    return total(x * theta)


def eval_combined(phi, theta, driver, path: PathSet, interval=None) -> np.ndarray:
    """``sum_j phi(tau_j) dw_j theta(tau_{j+1})``: integrand at the left end,
    post-factor at the right end of each cell."""
    interval = path.partition.interval if interval is None else tuple(interval)
    _check_interval(interval, path)
    if isinstance(theta, TailAccumulator):
        if theta.top.shape != (path.n_paths, path.N + 1):
            raise ValueError("tail accumulator was built on a different partition")
        post = theta.top[:, 1:]
    elif isinstance(theta, WeightExpr):
        post = theta(path.partition.times[1:], interval)
    else:
        raise TypeError("theta must be a TailAccumulator or a WeightExpr")
    x = integrand_values(phi, path, interval) * path.increments(driver)
    return total(x * post)


def evaluate(spec, path: PathSet) -> np.ndarray:
    """Dispatch on spec type and orientation."""
    if isinstance(spec, IntegralSpec):
        return eval_forward(spec, path) if spec.orientation == FORWARD else eval_reversed(spec, path)
    if isinstance(spec, KernelSpec):
        if spec.orientation == FORWARD:
            return eval_kernel_forward(spec.kernel, spec.xi, spec.drivers, path, spec.interval)
        return eval_kernel_reversed(spec.kernel, spec.xi, spec.drivers, path, spec.interval)
    raise TypeError(f"cannot evaluate {spec!r}")


# ---------------------------------------------------------------------------
# Kernel integrals


def _arity(kernel: KernelExpr, xi, drivers) -> int:
    arity = len(drivers) - (0 if xi is None else 1)
    if arity < 1 or kernel.min_arity > arity:
        raise ValueError(
            f"kernel needs {kernel.min_arity} arguments; {len(drivers)} drivers give {arity}"
        )
    return arity


def _separable_specs(kernel, xi, drivers, interval, orientation):
    arity = _arity(kernel, xi, drivers)
    specs = []
    for coef, gs in kernel.expand(arity):
        if xi is None:
            spec = IntegralSpec(Deterministic(gs[-1]), gs[:-1], drivers, orientation, interval)
        else:
            spec = IntegralSpec(xi, gs, drivers, orientation, interval)
        specs.append((coef, spec))
    return specs


def _kernel_matrix(kernel, path, interval, strict_lower: bool) -> np.ndarray:
    left = path.partition.times[:-1]
    outer, inner = np.meshgrid(left, left, indexing="ij")
    K = kernel((outer, inner), interval)
    mask = np.tril(np.ones_like(K, dtype=bool), -1)
    return np.where(mask, K, 0.0)


def _inner_xi(xi, drivers, path, interval):
    if xi is None:
        return np.ones((path.n_paths, path.N))
    x = integrand_values(xi, path, interval) * path.increments(drivers[-1])
    return prefix_sums(x)


def _direct_forward(kernel, xi, drivers, path, interval):
    arity = _arity(kernel, xi, drivers)
    left = path.partition.times[:-1]
    X = _inner_xi(xi, drivers, path, interval)
    X = X[:, :-1] if xi is not None else X
    if arity == 1:
        return total(kernel((left,), interval) * path.increments(drivers[0]) * X)
    if arity == 2:
        K = _kernel_matrix(kernel, path, interval, True)  # K[j1, j2], j2 < j1
        Y = _rows(path, path.increments(drivers[1])) * X
        Z = Y @ K.T
        return total(_rows(path, path.increments(drivers[0])) * Z)
    raise NotImplementedError(
        f"direct summation supports kernels of at most {MAX_DIRECT_ARITY} arguments"
    )


def _direct_reversed(kernel, xi, drivers, path, interval):
    arity = _arity(kernel, xi, drivers)
    left = path.partition.times[:-1]
    if arity == 1:
        tail = kernel((left,), interval) * _rows(path, path.increments(drivers[0]))
        if xi is None:
            return total(tail)
        T1 = suffix_sums(tail)
    elif arity == 2:
        K = _kernel_matrix(kernel, path, interval, True)  # K[l1, l2], l1 > l2
        A = _rows(path, path.increments(drivers[0])) @ K  # A[l2] = sum_{l1>l2} K dw0
        tail = _rows(path, path.increments(drivers[1])) * A
        if xi is None:
            return total(tail)
        T1 = suffix_sums(tail)
    else:
        raise NotImplementedError(
            f"direct summation supports kernels of at most {MAX_DIRECT_ARITY} arguments"
        )
    x = integrand_values(xi, path, interval) * path.increments(drivers[-1])
    return total(x * T1[:, 1:])


def _kernel_eval(kernel, xi, drivers, path, interval, orientation, method):
    interval = path.partition.interval if interval is None else tuple(interval)
    _check_interval(interval, path)
    drivers = tuple(drivers)
    if method not in ("auto", "direct", "separable"):
        raise ValueError(f"unknown method {method!r}")
    if method != "direct":
        try:
            specs = _separable_specs(kernel, xi, drivers, interval, orientation)
        except NotSeparable:
            if method == "separable":
                raise
        else:
            out = np.zeros(path.n_paths)
            for coef, spec in specs:
                out = out + coef * evaluate(spec, path)
            return out
    if orientation == FORWARD:
        return _direct_forward(kernel, xi, drivers, path, interval)
    return _direct_reversed(kernel, xi, drivers, path, interval)


def eval_kernel_forward(kernel, xi, drivers, path: PathSet, interval=None, method="auto"):
    """Forward kernel integral: nested left-point sums of ``Phi(t_1..) xi``
    over the discrete simplex.  Polynomial and separable kernels are expanded
    into products of one-variable weights; other kernels of at most two
    arguments are summed directly in O(N^2)."""
    return _kernel_eval(kernel, xi, drivers, path, interval, FORWARD, method)


def eval_kernel_reversed(kernel, xi, drivers, path: PathSet, interval=None, method="auto"):
    """Reversed-order kernel integral: outer sum over ``xi dw`` of the tail
    kernel integral starting at the right end of each cell."""
    return _kernel_eval(kernel, xi, drivers, path, interval, REVERSED, method)
