"""Enumeration of the discrete simplex in both nesting orders.

The forward order runs ``j_1`` outermost with ``j_2 < j_1``, ``j_3 < j_2`` and
so on; the reversed order runs ``j_k`` outermost with ``j_{k-1} > j_k``, up to
``j_1 > j_2``.  Both visit the same index tuples, which is what lets a forward
nested sum be rewritten with tail sums.
"""
from __future__ import annotations

import math
from typing import Iterator

import numpy as np


def forward_order(N: int, k: int) -> Iterator[tuple]:
    """Tuples ``(j_1, ..., j_k)`` with ``N > j_1 > ... > j_k >= 0``, ``j_1`` outermost."""
    def rec(prefix, upper, depth):
        if depth == k:
            yield tuple(prefix)
            return
        for j in range(upper):
            yield from rec(prefix + [j], j, depth + 1)

    if k < 1:
        raise ValueError("need k >= 1")
    yield from rec([], N, 0)


def reversed_order(N: int, k: int) -> Iterator[tuple]:
    """The same tuples, ``j_k`` outermost and each inner index above the last."""
    def rec(suffix, lower, depth):
        if depth == k:
            yield tuple(suffix)
            return
        for j in range(lower, N):
            yield from rec([j] + suffix, j + 1, depth + 1)

    if k < 1:
        raise ValueError("need k >= 1")
    yield from rec([], 0, 0)


def nested_sum(a: np.ndarray, order: str = "forward", exact: bool = True) -> float:
    """Sum of ``a[j_1, ..., j_k]`` over the simplex in the given order.

    ``exact=True`` uses an exactly rounded sum, so the result does not depend
    on the visiting order; ``exact=False`` accumulates left to right.
    """
    a = np.asarray(a, dtype=float)
    N, k = a.shape[0], a.ndim
    if any(s != N for s in a.shape):
        raise ValueError("array must be N x ... x N")
    gen = forward_order(N, k) if order == "forward" else reversed_order(N, k)
    if order not in ("forward", "reversed"):
        raise ValueError(f"unknown order {order!r}")
    vals = (float(a[idx]) for idx in gen)
    if exact:
        return math.fsum(vals)
    acc = 0.0
    for v in vals:
        acc += v
    return acc
