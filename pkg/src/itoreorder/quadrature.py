"""Deterministic iterated trapezoid rules over the triangle t <= t1 < t2 <= T."""
from __future__ import annotations

import numpy as np


def _check(interval, nodes):
    t, T = map(float, interval)
    if not np.isfinite(t) or not np.isfinite(T) or not t < T:
        raise ValueError(f"invalid interval {interval!r}")
    if nodes < 2:
        raise ValueError("need at least two nodes")
    return t, T


def triangle_trapezoid(g, interval, nodes: int, outer: str = "upper") -> float:
    """Iterated trapezoid rule for ``int int_{t<=y<=x<=T} g(x, y)``.

    ``outer="upper"`` integrates ``int_t^T int_t^x g dy dx``; ``outer="lower"``
    integrates ``int_t^T int_y^T g dx dy``.  Each inner integral uses ``nodes``
    equally spaced points on its own segment.
    """
    t, T = _check(interval, nodes)
    u = np.linspace(t, T, nodes)
    s = np.linspace(0.0, 1.0, nodes)
    if outer == "upper":
        x = u[:, None]
        y = t + (x - t) * s[None, :]
        lengths = u - t
    elif outer == "lower":
        y = u[:, None]
        x = y + (T - y) * s[None, :]
        lengths = T - u
    else:
        raise ValueError("outer must be 'upper' or 'lower'")
    vals = np.broadcast_to(np.asarray(g(x, y), dtype=float), (nodes, nodes))
    inner = np.trapezoid(vals, s, axis=1) * lengths
    return float(np.trapezoid(inner, u))


def simplex_quadrature(kernels, interval, nodes: int = 513) -> float:
    """``int_t^T int_t^{t2} Phi1(t2, t1) Phi2(t1, t2) dt1 dt2``.

    This is the deterministic value of ``E{IJ}`` for equal components, with
    ``I`` the reversed-order integral of ``Phi1`` and ``J`` the forward
    integral of ``Phi2``.
    """
    phi1, phi2 = kernels
    interval = (float(interval[0]), float(interval[1]))

    def g(t2, t1):
        return phi1((t2, t1), interval) * phi2((t1, t2), interval)

    return triangle_trapezoid(g, interval, nodes, outer="upper")
