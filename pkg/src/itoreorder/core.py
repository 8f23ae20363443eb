"""Domain types: partitions, drivers, closed-form weights and kernels,
integrand kinds, integral specifications and multi-indices.

Storage convention used everywhere in the package: layers are listed
outermost first.  For an iterated integral

    J = int_t^T psi_1(t_1) int_t^{t_1} psi_2(t_2) ... int_t^{t_k} phi dw^{(k+1)} ... dw^{(1)}

``weights[0]`` is ``psi_1`` and ``drivers[0]`` is ``w^{(1)}`` (the outermost
integration), while ``drivers[-1]`` drives the innermost integral of ``phi``.
Kernel arguments follow the same order: argument 0 is the outermost (largest)
time variable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

Interval = tuple[float, float]


# ---------------------------------------------------------------------------
# Partitions


@dataclass(frozen=True, eq=False)
class Partition:
    t: float
    T: float
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a partition needs at least two points")
        if times[0] != self.t or times[-1] != self.T:
            raise ValueError("partition endpoints must equal the interval endpoints")
        if np.any(np.diff(times) <= 0):
            raise ValueError("partition times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def N(self) -> int:
        return self.times.size - 1

    @property
    def interval(self) -> Interval:
        return (self.t, self.T)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def mesh(self) -> float:
        return float(self.steps.max())

    def refine(self, factor: int) -> "Partition":
        """Split every cell into ``factor`` equal sub-cells."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        if factor == 1:
            return self
        frac = np.arange(factor) / factor
        inner = (self.times[:-1, None] + frac[None, :] * self.steps[:, None]).ravel()
        return Partition(self.t, self.T, np.append(inner, self.T))

    def coarsen(self, factor: int) -> "Partition":
        if factor < 1 or self.N % factor:
            raise ValueError(f"cannot coarsen {self.N} steps by {factor}")
        return Partition(self.t, self.T, self.times[::factor])

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return (self.t, self.T) == (other.t, other.T) and np.array_equal(
            self.times, other.times
        )

    def __hash__(self):
        return hash((self.t, self.T, self.times.tobytes()))


def make_uniform_partition(t: float, T: float, N: int) -> Partition:
    if not t < T:
        raise ValueError(f"need t < T, got t={t}, T={T}")
    if N < 1:
        raise ValueError("need at least one step")
    times = t + (T - t) * np.arange(N + 1) / N
    times[-1] = T
    return Partition(float(t), float(T), times)


# ---------------------------------------------------------------------------
# Drivers


@dataclass(frozen=True)
class Time:
    def describe(self) -> str:
        return "dt"


@dataclass(frozen=True)
class Wiener:
    component: int = 1

    def __post_init__(self):
        if self.component < 1:
            raise ValueError("Wiener components are numbered from 1")

    def describe(self) -> str:
        return "df" if self.component == 1 else f"df{self.component}"


@dataclass(frozen=True)
class Martingale:
    id: str

    def describe(self) -> str:
        return f"dM[{self.id}]"


DriverKind = Union[Time, Wiener, Martingale]


# ---------------------------------------------------------------------------
# Nonrandom weight functions on [t, T]


def _anchor(anchor: str, interval: Interval) -> float:
    return interval[0] if anchor == "t" else interval[1]


def _check_anchor(anchor):
    if anchor not in ("t", "T"):
        raise ValueError(f"anchor must be 't' or 'T', got {anchor!r}")


class WeightExpr:
    """A continuous nonrandom function of time, evaluated as ``w(tau, interval)``."""

    def __call__(self, tau, interval: Interval):
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        if not isinstance(other, WeightExpr):
            return NotImplemented
        return Product((self, other))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        if not isinstance(other, WeightExpr):
            return NotImplemented
        return Sum((self, other), (1.0, 1.0))

    __radd__ = __add__

    def __neg__(self):
        return Sum((self,), (-1.0,))

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        return Sum((self, other), (1.0, -1.0))

    def __rsub__(self, other):
        return Const(float(other)) - self


@dataclass(frozen=True)
class Const(WeightExpr):
    c: float = 1.0

    def __call__(self, tau, interval):
        return np.full(np.shape(tau), float(self.c))

    def describe(self):
        return f"{self.c:g}"


@dataclass(frozen=True)
class PowShift(WeightExpr):
    """``(tau - anchor) ** alpha`` with ``anchor`` one of ``"t"`` or ``"T"``."""

    alpha: float
    anchor: str = "t"

    def __post_init__(self):
        _check_anchor(self.anchor)
        if self.alpha < 0:
            raise ValueError("negative exponent is singular at its anchor")
        if self.anchor == "T" and float(self.alpha) != int(self.alpha):
            raise ValueError("(tau - T)**alpha is negative-based; alpha must be an integer")

    def __call__(self, tau, interval):
        base = np.asarray(tau, dtype=float) - _anchor(self.anchor, interval)
        if self.alpha == 0:
            return np.ones_like(base)
        if float(self.alpha).is_integer():
            return base ** int(self.alpha)
        return np.maximum(base, 0.0) ** self.alpha

    def describe(self):
        return f"(s-{self.anchor})^{self.alpha:g}"


@dataclass(frozen=True)
class Exp(WeightExpr):
    alpha: float
    anchor: str = "t"

    def __post_init__(self):
        _check_anchor(self.anchor)

    def __call__(self, tau, interval):
        return np.exp(self.alpha * (np.asarray(tau, dtype=float) - _anchor(self.anchor, interval)))

    def describe(self):
        return f"exp({self.alpha:g}(s-{self.anchor}))"


@dataclass(frozen=True)
class Sin(WeightExpr):
    anchor: str = "t"

    def __post_init__(self):
        _check_anchor(self.anchor)

    def __call__(self, tau, interval):
        return np.sin(np.asarray(tau, dtype=float) - _anchor(self.anchor, interval))

    def describe(self):
        return f"sin(s-{self.anchor})"


@dataclass(frozen=True)
class Cos(WeightExpr):
    anchor: str = "t"

    def __post_init__(self):
        _check_anchor(self.anchor)

    def __call__(self, tau, interval):
        return np.cos(np.asarray(tau, dtype=float) - _anchor(self.anchor, interval))

    def describe(self):
        return f"cos(s-{self.anchor})"


@dataclass(frozen=True)
class Product(WeightExpr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("empty product")

    def __call__(self, tau, interval):
        out = self.factors[0](tau, interval)
        for f in self.factors[1:]:
            out = out * f(tau, interval)
        return out

    def describe(self):
        return "*".join(f.describe() for f in self.factors)


@dataclass(frozen=True)
class Sum(WeightExpr):
    terms: tuple
    coefficients: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        coefs = self.coefficients
        if coefs is None:
            coefs = (1.0,) * len(self.terms)
        coefs = tuple(float(c) for c in coefs)
        if len(coefs) != len(self.terms) or not self.terms:
            raise ValueError("Sum needs one coefficient per term")
        object.__setattr__(self, "coefficients", coefs)

    def __call__(self, tau, interval):
        out = self.coefficients[0] * self.terms[0](tau, interval)
        for c, f in zip(self.coefficients[1:], self.terms[1:]):
            out = out + c * f(tau, interval)
        return out

    def describe(self):
        return " + ".join(f"{c:g}*{f.describe()}" for c, f in zip(self.coefficients, self.terms))


ONE = Const(1.0)


def since_start(alpha: int = 1) -> WeightExpr:
    """``(tau - t) ** alpha``."""
    return PowShift(alpha, "t")


def until_end(alpha: int = 1) -> WeightExpr:
    """``(T - tau) ** alpha`` for integer ``alpha``."""
    if alpha == 0:
        return ONE
    if alpha % 2 == 0:
        return PowShift(alpha, "T")
    return Sum((PowShift(alpha, "T"),), (-1.0,))


# ---------------------------------------------------------------------------
# Kernels on the simplex, arguments outermost first


class KernelExpr:
    """A continuous function of the time variables of an iterated integral."""

    min_arity = 0

    def __call__(self, args: Sequence[np.ndarray], interval: Interval):
        raise NotImplementedError

    def expand(self, arity: int):
        """Return ``[(coef, (g_0, ..., g_{arity-1})), ...]`` with one weight per
        argument, or raise ``NotSeparable``."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def __mul__(self, other):
        if not isinstance(other, KernelExpr):
            return NotImplemented
        return KernelProduct((self, other))

    def __rmul__(self, c):
        if not isinstance(c, (int, float)):
            return NotImplemented
        return KernelSum((self,), (float(c),))


class NotSeparable(ValueError):
    pass


@dataclass(frozen=True)
class KConst(KernelExpr):
    c: float = 1.0

    def __call__(self, args, interval):
        shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
        return np.full(shape, float(self.c))

    def expand(self, arity):
        return [(float(self.c), (ONE,) * arity)]

    def describe(self):
        return f"{self.c:g}"


@dataclass(frozen=True)
class Separable(KernelExpr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def min_arity(self):
        return len(self.factors)

    def __call__(self, args, interval):
        out = np.ones(np.broadcast_shapes(*(np.shape(a) for a in args)))
        for g, a in zip(self.factors, args):
            out = out * g(a, interval)
        return out

    def expand(self, arity):
        return [(1.0, self.factors + (ONE,) * (arity - len(self.factors)))]

    def describe(self):
        return " x ".join(f"[{g.describe()}]" for g in self.factors)


@dataclass(frozen=True)
class DiffPow(KernelExpr):
    """``(x_outer - x_inner) ** alpha`` for argument positions ``outer < inner``."""

    outer: int
    inner: int
    alpha: float = 1.0

    def __post_init__(self):
        if not 0 <= self.outer < self.inner:
            raise ValueError("DiffPow needs argument positions 0 <= outer < inner")
        if self.alpha < 0:
            raise ValueError("negative exponent is singular on the diagonal")

    @property
    def min_arity(self):
        return self.inner + 1

    def __call__(self, args, interval):
        d = np.asarray(args[self.outer], dtype=float) - np.asarray(args[self.inner], dtype=float)
        if float(self.alpha).is_integer():
            return d ** int(self.alpha)
        return np.maximum(d, 0.0) ** self.alpha

    def expand(self, arity):
        if not float(self.alpha).is_integer():
            raise NotSeparable(f"(x{self.outer}-x{self.inner})^{self.alpha:g}")
        a = int(self.alpha)
        out = []
        for p in range(a + 1):
            gs = [ONE] * arity
            gs[self.outer] = PowShift(p, "t")
            gs[self.inner] = PowShift(a - p, "t")
            out.append((math.comb(a, p) * (-1.0) ** (a - p), tuple(gs)))
        return out

    def describe(self):
        return f"(x{self.outer}-x{self.inner})^{self.alpha:g}"


@dataclass(frozen=True)
class KernelProduct(KernelExpr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def min_arity(self):
        return max(f.min_arity for f in self.factors)

    def __call__(self, args, interval):
        out = self.factors[0](args, interval)
        for f in self.factors[1:]:
            out = out * f(args, interval)
        return out

    def expand(self, arity):
        terms = [(1.0, (ONE,) * arity)]
        for f in self.factors:
            nxt = []
            for c1, g1 in terms:
                for c2, g2 in f.expand(arity):
                    nxt.append((c1 * c2, tuple(_mul(a, b) for a, b in zip(g1, g2))))
            terms = nxt
        return terms

    def describe(self):
        return " * ".join(f.describe() for f in self.factors)


@dataclass(frozen=True)
class KernelSum(KernelExpr):
    terms: tuple
    coefficients: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        coefs = self.coefficients or (1.0,) * len(self.terms)
        object.__setattr__(self, "coefficients", tuple(float(c) for c in coefs))

    @property
    def min_arity(self):
        return max(f.min_arity for f in self.terms)

    def __call__(self, args, interval):
        out = self.coefficients[0] * self.terms[0](args, interval)
        for c, f in zip(self.coefficients[1:], self.terms[1:]):
            out = out + c * f(args, interval)
        return out

    def expand(self, arity):
        return [(c * c2, gs) for c, f in zip(self.coefficients, self.terms) for c2, gs in f.expand(arity)]

    def describe(self):
        return " + ".join(f"{c:g}*({f.describe()})" for c, f in zip(self.coefficients, self.terms))


@dataclass(frozen=True)
class Swapped(KernelExpr):
    """``kernel`` with its first two arguments exchanged."""

    kernel: KernelExpr

    @property
    def min_arity(self):
        return max(2, self.kernel.min_arity)

    def __call__(self, args, interval):
        args = tuple(args)
        return self.kernel((args[1], args[0]) + args[2:], interval)

    def expand(self, arity):
        return [(c, (gs[1], gs[0]) + gs[2:]) for c, gs in self.kernel.expand(arity)]

    def describe(self):
        return f"swap({self.kernel.describe()})"


def _mul(a: WeightExpr, b: WeightExpr) -> WeightExpr:
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Product((a, b))


# ---------------------------------------------------------------------------
# Integrands phi_tau


@dataclass(frozen=True)
class One:
    def describe(self):
        return "1"


@dataclass(frozen=True)
class WienerValue:
    """``phi_tau = f_tau^{(i)}``; paths are pinned so this equals the increment since t."""

    component: int = 1

    def describe(self):
        return f"f{self.component}(s)"


@dataclass(frozen=True)
class WienerIncrement:
    component: int = 1

    def describe(self):
        return f"(f{self.component}(s)-f{self.component}(t))"


@dataclass(frozen=True)
class WeightedPath:
    weight: WeightExpr
    component: int = 1

    def describe(self):
        return f"{self.weight.describe()}*f{self.component}(s)"


@dataclass(frozen=True)
class Deterministic:
    weight: WeightExpr

    def describe(self):
        return self.weight.describe()


@dataclass(frozen=True)
class MartingaleValue:
    id: str

    def describe(self):
        return f"M[{self.id}](s)"


@dataclass(frozen=True)
class IteratedValue:
    """``phi_tau = weight(tau) * J[spec]_{tau,t}``: the running value of a forward
    iterated integral, an adapted and mean-square continuous process."""

    spec: "IntegralSpec"
    weight: WeightExpr = ONE

    def describe(self):
        return f"{self.weight.describe()}*J[{self.spec.describe()}](s)"


@dataclass(frozen=True)
class Weighted:
    base: object
    weight: WeightExpr

    def describe(self):
        return f"{self.weight.describe()}*{self.base.describe()}"


@dataclass(frozen=True)
class Linear:
    terms: tuple  # ((coef, integrand), ...)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), k) for c, k in self.terms))

    def describe(self):
        return " + ".join(f"{c:g}*{k.describe()}" for c, k in self.terms)


IntegrandKind = Union[
    One, WienerValue, WienerIncrement, WeightedPath, Deterministic,
    MartingaleValue, IteratedValue, Weighted, Linear,
]

FORWARD = "forward"
REVERSED = "reversed"


def _driver_list(drivers) -> tuple:
    out = tuple(drivers)
    for d in out:
        if not isinstance(d, (Time, Wiener, Martingale)):
            raise TypeError(f"not a driver: {d!r}")
    return out


@dataclass(frozen=True)
class IntegralSpec:
    """One iterated integral ``J[phi, psi^(k)]`` (forward) or its reversed-order
    counterpart built from tail integrals (reversed).

    ``post_weight`` is only meaningful for reversed specs: it multiplies the
    tail at the right endpoint of each cell, as in ``int phi dw h(tau) tail``.
    """

    integrand: object = One()
    weights: tuple = ()
    drivers: tuple = (Wiener(1),)
    orientation: str = FORWARD
    interval: Interval = (0.0, 1.0)
    post_weight: WeightExpr | None = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "drivers", _driver_list(self.drivers))
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))
        if len(self.drivers) != len(self.weights) + 1:
            raise ValueError("need exactly one more driver than weights")
        if self.orientation not in (FORWARD, REVERSED):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.post_weight is not None and self.orientation != REVERSED:
            raise ValueError("post_weight applies to reversed specs only")
        if not self.interval[0] < self.interval[1]:
            raise ValueError("empty interval")

    @property
    def k(self) -> int:
        return len(self.weights)

    def reversed(self) -> "IntegralSpec":
        return IntegralSpec(self.integrand, self.weights, self.drivers, REVERSED, self.interval)

    def forward(self) -> "IntegralSpec":
        return IntegralSpec(self.integrand, self.weights, self.drivers, FORWARD, self.interval)

    def describe(self) -> str:
        layers = [f"{w.describe()} {d.describe()}" for w, d in zip(self.weights, self.drivers)]
        inner = f"{self.integrand.describe()} {self.drivers[-1].describe()}"
        body = " | ".join(layers + [inner])
        tag = "J" if self.orientation == FORWARD else "Jhat"
        if self.post_weight is not None:
            body += f" ; post {self.post_weight.describe()}"
        return f"{tag}[{body}]"


@dataclass(frozen=True)
class KernelSpec:
    """Iterated integral with a kernel over several time variables.

    With ``xi`` given the kernel takes ``len(drivers) - 1`` arguments and ``xi``
    is integrated innermost; with ``xi=None`` the kernel takes one argument per
    driver (a pure kernel layer).
    """

    kernel: KernelExpr
    drivers: tuple
    xi: object = None
    orientation: str = FORWARD
    interval: Interval = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "drivers", _driver_list(self.drivers))
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))
        if self.orientation not in (FORWARD, REVERSED):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if self.kernel.min_arity > self.arity:
            raise ValueError(
                f"kernel needs {self.kernel.min_arity} arguments, layout provides {self.arity}"
            )
        if self.arity < 1:
            raise ValueError("kernel integrals need at least one kernel argument")

    @property
    def arity(self) -> int:
        return len(self.drivers) - (0 if self.xi is None else 1)

    @property
    def k(self) -> int:
        return len(self.drivers) - 1

    def describe(self) -> str:
        tag = "JK" if self.orientation == FORWARD else "JKhat"
        drv = ",".join(d.describe() for d in self.drivers)
        xi = "" if self.xi is None else f"; xi={self.xi.describe()}"
        return f"{tag}[{self.kernel.describe()}; {drv}{xi}]"


# ---------------------------------------------------------------------------
# Multi-indices


@dataclass(frozen=True)
class MultiIndex:
    """Bits ``(l_1, ..., l_k)``; ``l_i = 1`` for a Wiener layer, 0 for a dt layer.
    ``l_1`` is the innermost integration."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("multi-index must be nonempty")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("multi-index entries must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        return cls(tuple(int(ch) for ch in text))

    @property
    def ones_count(self) -> int:
        return sum(self.bits)

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join(map(str, self.bits))


def spec_from_multiindex(mi: MultiIndex, interval: Interval = (0.0, 1.0)) -> IntegralSpec:
    """``J_(l_1...l_k)``: all weights 1, innermost driver from ``l_1``."""
    if not isinstance(mi, MultiIndex):
        mi = MultiIndex(tuple(mi))
    drivers = tuple(Wiener(1) if b else Time() for b in reversed(mi.bits))
    return IntegralSpec(One(), (ONE,) * (len(mi) - 1), drivers, FORWARD, interval)
