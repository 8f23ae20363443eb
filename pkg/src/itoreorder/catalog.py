"""Registry of verifiable order-replacement identities.

Each :class:`Identity` holds two linear combinations of integrals over the
same interval.  The left side is evaluated on a refinement of the partition
used for the right side (``reference=True``), driven by the same noise.  On
one fixed partition the forward and reversed prelimit sums coincide exactly
by the index-exchange identity, so a same-grid comparison would say nothing
about the limits.
"""
from __future__ import annotations

import fnmatch
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    FORWARD, ONE, REVERSED, Cos, Deterministic, DiffPow, Exp, IntegralSpec,
    IteratedValue, KernelProduct, Linear, Weighted, KernelSpec, Martingale, MartingaleValue,
    MultiIndex, One, PowShift, Separable, Sin, Time, Wiener, WienerIncrement,
    WienerValue, WeightedPath, since_start, spec_from_multiindex, until_end,
)
from .paths import CompensatedPoisson, ScaledWiener

# Citation keys used by catalog entries.
BIBLIOGRAPHY = {
    "reorder/closed-form": "closed forms of multi-index integrals J_(l1...lk) with one or two Wiener layers left after reordering",
    "reorder/family": "k-indexed families of multi-index closed forms",
    "reorder/sum": "sums over all multi-indices with a fixed number of Wiener layers",
    "reorder/motivating": "(T-t)(f_T-f_t) = int (s-t) df_s + int (f_s-f_t) ds",
    "reorder/wiener": "order replacement J[phi,psi] = Jhat[phi,psi] for Wiener and time drivers",
    "reorder/kernel": "order replacement for integrals with a kernel over the simplex",
    "reorder/commute": "a nonrandom post-factor commutes into the integrand of a combined integral",
    "reorder/nested": "order replacement with an adapted iterated integral as integrand",
    "reorder/martingale": "order replacement with square-integrable martingale drivers of bounded density",
    "riemann/closed-form": "deterministic iterated Riemann integral against its closed form",
}

F = Wiener(1)
F2 = Wiener(2)
DT = Time()

# Martingale models exercised by the martingale identities.
MODELS = {
    "scaled": ScaledWiener(2.0),
    "poisson": CompensatedPoisson(2.0),
}


@dataclass(frozen=True)
class Term:
    coef: float
    spec: object = None  # IntegralSpec, KernelSpec, or None for a constant

    def describe(self) -> str:
        body = "1" if self.spec is None else self.spec.describe()
        return f"{self.coef:g}*{body}"


def _integrand_drivers(kind) -> list:
    if kind is None:
        return []
    if isinstance(kind, (WienerValue, WienerIncrement, WeightedPath)):
        return [Wiener(kind.component)]
    if isinstance(kind, MartingaleValue):
        return [Martingale(kind.id)]
    if isinstance(kind, IteratedValue):
        return list(_drivers_of(kind.spec))
    if isinstance(kind, Weighted):
        return _integrand_drivers(kind.base)
    if isinstance(kind, Linear):
        return [d for _, k in kind.terms for d in _integrand_drivers(k)]
    return []


def _drivers_of(spec) -> tuple:
    if spec is None:
        return ()
    inner = spec.xi if isinstance(spec, KernelSpec) else spec.integrand
    return tuple(spec.drivers) + tuple(_integrand_drivers(inner))


@dataclass(frozen=True)
class Identity:
    id: str
    lhs: tuple
    rhs: tuple
    citation: str
    group: str = "closed-form"
    formula: str = ""
    models: Mapping = field(default_factory=dict)
    reference: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lhs", tuple(self.lhs))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "models", dict(self.models))
        if not self.lhs or not self.rhs:
            raise ValueError(f"{self.id}: both sides need at least one term")
        if self.citation not in BIBLIOGRAPHY:
            raise ValueError(f"{self.id}: unknown citation {self.citation!r}")
        intervals = {t.spec.interval for t in self.terms if t.spec is not None}
        if len(intervals) > 1:
            raise ValueError(f"{self.id}: sides use different intervals {sorted(intervals)}")
        for d in self.drivers:
            if isinstance(d, Martingale) and d.id not in self.models:
                raise ValueError(f"{self.id}: no model for martingale {d.id!r}")

    @property
    def terms(self) -> tuple:
        return self.lhs + self.rhs

    @property
    def interval(self):
        for t in self.terms:
            if t.spec is not None:
                return t.spec.interval
        return (0.0, 1.0)

    @property
    def drivers(self) -> tuple:
        seen = []
        for t in self.terms:
            for d in _drivers_of(t.spec):
                if d not in seen:
                    seen.append(d)
        return tuple(seen)

    @property
    def dims(self) -> int:
        return max([d.component for d in self.drivers if isinstance(d, Wiener)], default=0)

    @property
    def k(self) -> int:
        return max(len(t.spec.drivers) for t in self.terms if t.spec is not None)

    @property
    def stochastic(self) -> bool:
        return any(not isinstance(d, Time) for d in self.drivers)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "citation": self.citation,
            "group": self.group,
            "formula": self.formula,
            "k": self.k,
            "drivers": [d.describe() for d in self.drivers],
            "interval": list(self.interval),
            "dims": self.dims,
            "models": {key: repr(m) for key, m in self.models.items()},
            "lhs": [t.describe() for t in self.lhs],
            "rhs": [t.describe() for t in self.rhs],
        }


# ---------------------------------------------------------------------------
# builders


def _J(bits: str, interval) -> IntegralSpec:
    return spec_from_multiindex(MultiIndex.parse(bits), interval)


def _wiener_integral(weight, interval, driver=F) -> IntegralSpec:
    """``int weight(s) dw_s``."""
    return IntegralSpec(Deterministic(weight), (), (driver,), FORWARD, interval)


def _ones(n: int, interval) -> IntegralSpec:
    return IntegralSpec(One(), (ONE,) * (n - 1), (F,) * n, FORWARD, interval)


def _ident(id, lhs, rhs, citation, group, formula, **kw) -> Identity:
    def terms(side):
        if not isinstance(side, (list, tuple)):
            side = [(1.0, side)]
        return tuple(Term(float(c), s) for c, s in side)

    return Identity(id, terms(lhs), terms(rhs), citation, group, formula, **kw)


def _closed_forms(iv) -> list:
    cf = "reorder/closed-form"
    out = [
        _ident("J10", _J("10", iv), _wiener_integral(until_end(1), iv), cf, "closed-form",
               "J_(10) = int (T-t1) df"),
        _ident("J10-cos", IntegralSpec(One(), (Cos("T"),), (DT, F), FORWARD, iv),
               _wiener_integral(-Sin("T"), iv), cf, "closed-form",
               "int cos(t2-T) int df dt2 = int sin(T-t1) df"),
        _ident("J10-sin", IntegralSpec(One(), (Sin("T"),), (DT, F), FORWARD, iv),
               _wiener_integral(Cos("T") - 1.0, iv), cf, "closed-form",
               "int sin(t2-T) int df dt2 = int (cos(T-t1)-1) df"),
    ]
    for a in (1.0, -1.0):
        out.append(_ident(
            f"J10-exp-{a:+g}", IntegralSpec(One(), (Exp(a, "T"),), (DT, F), FORWARD, iv),
            [(1.0 / a, _wiener_integral(1.0 - Exp(a, "T"), iv))], cf, "closed-form",
            f"int exp({a:g}(t2-T)) int df dt2 = (1/{a:g}) int (1-exp({a:g}(t1-T))) df"))
    for a in (1, 2, 3):
        out.append(_ident(
            f"J10-pow-{a}", IntegralSpec(One(), (PowShift(a, "T"),), (DT, F), FORWARD, iv),
            [(-1.0 / (a + 1), _wiener_integral(PowShift(a + 1, "T"), iv))], cf, "closed-form",
            f"int (t2-T)^{a} int df dt2 = -1/{a + 1} int (t1-T)^{a + 1} df"))

    def kern(kernel, n):
        return KernelSpec(kernel, (F,) * n, None, FORWARD, iv)

    S = since_start
    U = until_end
    table = [
        ("100", [(0.5, _wiener_integral(U(2), iv))], "1/2 int (T-t1)^2 df"),
        ("010", _wiener_integral(S(1) * U(1), iv), "int (t1-t)(T-t1) df"),
        ("110", IntegralSpec(One(), (U(1),), (F, F), FORWARD, iv), "int (T-t2) int df df"),
        ("101", kern(DiffPow(0, 1, 1), 2), "int int (t2-t1) df df"),
        ("1011", kern(DiffPow(1, 2, 1), 3), "int int int (t2-t1) df df df"),
        ("1101", kern(DiffPow(0, 1, 1), 3), "int int (t3-t2) int df df df"),
        ("1110", IntegralSpec(One(), (U(1), ONE), (F, F, F), FORWARD, iv),
         "int (T-t3) int int df df df"),
        ("1100", [(0.5, IntegralSpec(One(), (U(2),), (F, F), FORWARD, iv))],
         "1/2 int (T-t2)^2 int df df"),
        ("1001", [(0.5, kern(DiffPow(0, 1, 2), 2))], "1/2 int int (t2-t1)^2 df df"),
        ("1010", kern(KernelProduct((Separable((U(1),)), DiffPow(0, 1, 1))), 2),
         "int (T-t2) int (t2-t1) df df"),
        ("0110", IntegralSpec(Deterministic(S(1)), (U(1),), (F, F), FORWARD, iv),
         "int (T-t2) int (t1-t) df df"),
        ("0101", kern(KernelProduct((DiffPow(0, 1, 1), Separable((ONE, S(1))))), 2),
         "int int (t2-t1)(t1-t) df df"),
        ("0010", [(0.5, _wiener_integral(U(1) * S(2), iv))], "1/2 int (T-t1)(t1-t)^2 df"),
        ("0100", [(0.5, _wiener_integral(U(2) * S(1), iv))], "1/2 int (T-t1)^2 (t1-t) df"),
        ("1000", [(1.0 / 6.0, _wiener_integral(U(3), iv))], "1/3! int (T-t1)^3 df"),
    ]
    for bits, rhs, text in table:
        out.append(_ident(f"J{bits}", _J(bits, iv), rhs, cf, "closed-form",
                          f"J_({bits}) = {text}"))
    return out


def _families(iv, ks=(2, 3, 4, 5)) -> list:
    fam = "reorder/family"
    out = []
    for k in ks:
        c1 = 1.0 / math.factorial(k - 1)
        c2 = 1.0 / math.factorial(k - 2)
        out.append(_ident(f"fam-1zeros-k{k}", _J("1" + "0" * (k - 1), iv),
                          [(c1, _wiener_integral(until_end(k - 1), iv))], fam, "family",
                          f"J_(1 0^{k - 1}) = 1/{k - 1}! int (T-t1)^{k - 1} df"))
        out.append(_ident(f"fam-11zeros-k{k}", _J("11" + "0" * (k - 2), iv),
                          [(c2, IntegralSpec(One(), (until_end(k - 2),), (F, F), FORWARD, iv))],
                          fam, "family",
                          f"J_(11 0^{k - 2}) = 1/{k - 2}! int (T-t2)^{k - 2} int df df"))
        if k == 2:
            inner = Deterministic(until_end(1))
        else:
            inner = IteratedValue(_ones(k - 2, iv), until_end(1))
        out.append(_ident(f"fam-ones0-k{k}", _J("1" * (k - 1) + "0", iv),
                          IntegralSpec(inner, (), (F,), FORWARD, iv), fam, "family",
                          f"J_(1^{k - 1} 0) = int (T-t1) J_(1^{k - 2})(t1) df"))
        out.append(_ident(f"fam-1zeros1-k{k}", _J("1" + "0" * (k - 2) + "1", iv),
                          [(c2, KernelSpec(DiffPow(0, 1, k - 2), (F, F), None, FORWARD, iv))],
                          fam, "family",
                          f"J_(1 0^{k - 2} 1) = 1/{k - 2}! int int (t2-t1)^{k - 2} df df"))
        if k >= 3:
            out.append(_ident(f"fam-10ones-k{k}", _J("10" + "1" * (k - 2), iv),
                              KernelSpec(DiffPow(k - 3, k - 2, 1), (F,) * (k - 1), None,
                                         FORWARD, iv),
                              fam, "family",
                              f"J_(10 1^{k - 2}) = int...int (t2-t1) df...df"))
            out.append(_ident(f"fam-ones01-k{k}", _J("1" * (k - 2) + "01", iv),
                              KernelSpec(DiffPow(0, 1, 1), (F,) * (k - 1), None, FORWARD, iv),
                              fam, "family",
                              f"J_(1^{k - 2} 01) = int int (t_(k-1)-t_(k-2)) int...int df...df"))
    return out


def expand_sum_family(k: int, m: int, interval=(0.0, 1.0)) -> Identity:
    """Sum of all ``J_(l_1...l_k)`` with exactly ``m`` Wiener layers against
    ``(T-t)^(k-m)/(k-m)! J_(1...1)`` with ``m`` ones."""
    if m > k:
        raise ValueError(f"need m <= k, got k={k}, m={m}")
    if not 1 <= m <= k <= 6:
        raise ValueError(f"need 1 <= m <= k <= 6, got k={k}, m={m}")
    iv = (float(interval[0]), float(interval[1]))
    lhs = []
    for ones in itertools.combinations(range(k), m):
        bits = "".join("1" if i in ones else "0" for i in range(k))
        lhs.append((1.0, _J(bits, iv)))
    if len(lhs) != math.comb(k, m):
        raise AssertionError("multi-index enumeration is wrong")
    factor = (iv[1] - iv[0]) ** (k - m) / math.factorial(k - m)
    return _ident(f"sum-{k}-{m}", lhs, [(factor, _ones(m, iv))], "reorder/sum", "sum",
                  f"sum over |l|={m} of J_(l1..l{k}) = (T-t)^{k - m}/{k - m}! J_(1^{m})")


def _sums(iv) -> list:
    named = {"sum2": (2, 1), "sum3-11": (3, 2), "sum3": (3, 1), "sum4-2": (4, 2),
             "sum4-1": (4, 1), "sum4-3": (4, 3)}
    out = []
    for name, (k, m) in named.items():
        ident = expand_sum_family(k, m, iv)
        out.append(Identity(name, ident.lhs, ident.rhs, ident.citation, "sum", ident.formula))
    for k in (2, 3, 4, 5):
        for m in range(1, k + 1):
            out.append(expand_sum_family(k, m, iv))
    return out


def _motivating(iv) -> list:
    mot = "reorder/motivating"
    drift = IntegralSpec(WienerIncrement(1), (), (DT,), FORWARD, iv)
    return [
        _ident("rrr111", [(iv[1] - iv[0], _J("1", iv))],
               [(1.0, _wiener_integral(since_start(1), iv)), (1.0, drift)], mot, "motivating",
               "(T-t)(f_T-f_t) = int (s-t) df + int (f_s-f_t) ds"),
        _ident("rrr111-tail", drift, IntegralSpec(One(), (ONE,), (DT, F), REVERSED, iv),
               mot, "motivating", "int (f_s-f_t) ds = int int_s^T ds' df_s"),
    ]


def _deterministic(iv) -> list:
    L = iv[1] - iv[0]
    rc = "riemann/closed-form"
    return [
        _ident("J00-closed", _J("00", iv), [(L ** 2 / 2, None)], rc, "deterministic",
               "J_(00) = (T-t)^2/2"),
        _ident("J000-closed", _J("000", iv), [(L ** 3 / 6, None)], rc, "deterministic",
               "J_(000) = (T-t)^3/6"),
    ]


def _wiener_general(iv) -> list:
    rw = "reorder/wiener"
    out = []
    for n in (2, 3, 4):
        for bits in itertools.product("01", repeat=n):
            bits = "".join(bits)
            spec = _J(bits, iv)
            out.append(_ident(f"thm1-J{bits}", spec, spec.reversed(), rw, "wiener",
                              f"J_({bits}) = Jhat_({bits})"))
    phi = WienerValue(1)
    cases = {"ff": (F, F), "tf": (DT, F), "ft": (F, DT), "tt": (DT, DT)}
    for name, drivers in cases.items():
        # drivers are (outer, inner); a stochastic phi keeps the dt-dt case random
        spec = IntegralSpec(phi, (Exp(0.5, "t"),), drivers, FORWARD, iv)
        out.append(_ident(f"thm1-{name}", spec, spec.reversed(), rw, "wiener",
                          f"J[f, exp(s/2)] = Jhat, drivers {name}"))
    extra = {
        "thm1-k2-mixed": IntegralSpec(WeightedPath(Cos("t"), 1), (Exp(-1.0, "t"), since_start(1)),
                                      (F, DT, F), FORWARD, iv),
        "thm1-k3": IntegralSpec(WienerValue(1), (Cos("t"), ONE, Exp(1.0, "t")),
                                (F, F, DT, F), FORWARD, iv),
        "thm1-2d": IntegralSpec(WienerValue(2), (since_start(1),), (F2, F), FORWARD, iv),
        "thm1-2d-k2": IntegralSpec(One(), (ONE, Cos("T")), (F, F2, F), FORWARD, iv),
    }
    for name, spec in extra.items():
        out.append(_ident(name, spec, spec.reversed(), rw, "wiener",
                          f"J = Jhat for {spec.describe()}"))
    return out


def _kernel_general(iv) -> list:
    rk = "reorder/kernel"

    def pair(name, kernel, drivers, xi, text):
        fwd = KernelSpec(kernel, drivers, xi, FORWARD, iv)
        rev = KernelSpec(kernel, drivers, xi, REVERSED, iv)
        return _ident(name, fwd, rev, rk, "kernel", text)

    return [
        pair("thm2-k2", Separable((Cos("T"),)), (F, F), WienerValue(1),
             "J[xi=f, Phi=cos(t1-T)] = Jhat"),
        pair("thm2-k3", DiffPow(0, 1, 1), (F, F, F), One(),
             "J[xi=1, Phi=(t1-t2)] = Jhat, three Wiener layers"),
        pair("thm2-k3-mixed", KernelProduct((Separable((Exp(1.0, "t"),)), DiffPow(0, 1, 2))),
             (F, DT, F), WienerValue(1), "J[xi=f, Phi=exp(t1)(t1-t2)^2] = Jhat, df dt df"),
        pair("thm2-2d", Separable((since_start(1),)), (F, F2), One(),
             "J[xi=1, Phi=(t1-t)] = Jhat with two components"),
        pair("kernel-pure-k2", DiffPow(0, 1, 1), (F, F), None,
             "J'[Phi] = Jtilde[Phi] for Phi=(t2-t1)"),
        pair("kernel-pure-k3", KernelProduct((DiffPow(0, 2, 1), Separable((ONE, Cos("t"))))),
             (F, DT, F), None, "J'[Phi] = Jtilde[Phi] for Phi=(t3-t1)cos(t2-t)"),
    ]


def _commute(iv) -> list:
    rc = "reorder/commute"

    def pair(name, phi, weights, drivers, h, text, models=None):
        lhs = IntegralSpec(phi, weights, drivers, REVERSED, iv, post_weight=h)
        rhs = IntegralSpec(_times(phi, h), weights, drivers, REVERSED, iv)
        return _ident(name, lhs, rhs, rc, "commute", text, models=models or {})

    return [
        pair("thm3-k0", WienerValue(1), (), (F,), Cos("t"), "int f df cos(s) = int f cos(s) df"),
        pair("thm3-k1", One(), (since_start(1),), (F, F), Exp(1.0, "t"),
             "int df e^s tail = int e^s df tail, k=1"),
        pair("thm3-k2", WienerValue(1), (ONE, Cos("T")), (DT, F, F), until_end(2),
             "int f df (T-s)^2 tail = int f (T-s)^2 df tail, k=2"),
    ]


def _times(phi, h):
    if isinstance(phi, One):
        return Deterministic(h)
    return Weighted(phi, h)


def _nested(iv, drivers_inner=F, models=None, prefix="thm4", group="nested",
            citation="reorder/nested", phi_factory=None) -> list:
    """``int psi ... int h(s) J[phi](s) dw^{(k+1)} ...`` against the k+2 layer
    reversed integral."""
    out = []
    phi_factory = phi_factory or (lambda k: One() if k != 2 else WienerValue(1))
    setups = {
        0: ((), ()),
        1: ((ONE,), (DT,)),
        2: ((Cos("t"), ONE), (drivers_inner, DT)),
    }
    for k, (psis, outer) in setups.items():
        phi = phi_factory(k)
        h = Exp(1.0, "t")
        inner = IntegralSpec(phi, (), (drivers_inner,), FORWARD, iv)
        lhs = IntegralSpec(IteratedValue(inner, h), psis, outer + (drivers_inner,), REVERSED, iv)
        rhs = IntegralSpec(phi, psis + (h,), outer + (drivers_inner, drivers_inner), REVERSED, iv)
        out.append(_ident(f"{prefix}-k{k}", lhs, rhs, citation, group,
                          f"nested replacement, k={k}", models=models or {}))
    return out


def _martingale(iv) -> list:
    rm = "reorder/martingale"
    out = []
    for name, model in MODELS.items():
        M = Martingale(name)
        models = {name: model}
        mv = MartingaleValue(name)

        def add(id, lhs, rhs, text):
            out.append(_ident(id, lhs, rhs, rm, "martingale", text, models=models))

        s = IntegralSpec(One(), (ONE,), (M, M), FORWARD, iv)
        add(f"thm5-{name}-k1", s, s.reversed(), "J[1, 1] = Jhat, dM dM")
        s = IntegralSpec(mv, (Cos("t"),), (DT, M), FORWARD, iv)
        add(f"thm5-{name}-k1-time", s, s.reversed(), "J[M, cos] = Jhat, dt dM")
        s = IntegralSpec(One(), (Exp(1.0, "t"), ONE), (M, DT, M), FORWARD, iv)
        add(f"thm5-{name}-k2", s, s.reversed(), "J[1, (e^s, 1)] = Jhat, dM dt dM")
        fwd = KernelSpec(Separable((Cos("T"),)), (M, M), mv, FORWARD, iv)
        add(f"thm6-{name}-k2", fwd, KernelSpec(fwd.kernel, fwd.drivers, mv, REVERSED, iv),
            "kernel replacement, Phi=cos(t1-T), xi=M")
        fwd = KernelSpec(DiffPow(0, 1, 1), (M, DT, M), One(), FORWARD, iv)
        add(f"thm6-{name}-k3", fwd, KernelSpec(fwd.kernel, fwd.drivers, One(), REVERSED, iv),
            "kernel replacement, Phi=(t1-t2), dM dt dM")
        lhs = IntegralSpec(One(), (ONE,), (M, M), REVERSED, iv, post_weight=Exp(1.0, "t"))
        rhs = IntegralSpec(Deterministic(Exp(1.0, "t")), (ONE,), (M, M), REVERSED, iv)
        add(f"thm7-{name}-k1", lhs, rhs, "post-factor commutation, dM dM")
        for ident in _nested(iv, M, models, prefix=f"thm8-{name}", group="martingale",
                             citation=rm, phi_factory=lambda k: One()):
            if ident.id.endswith(("k1", "k2")):
                out.append(ident)
    return out


def catalog_all(interval=(0.0, 1.0)) -> list:
    iv = (float(interval[0]), float(interval[1]))
    if not iv[0] < iv[1]:
        raise ValueError(f"invalid interval {interval!r}")
    out = (_closed_forms(iv) + _families(iv) + _sums(iv) + _motivating(iv)
           + _deterministic(iv) + _wiener_general(iv) + _kernel_general(iv)
           + _commute(iv) + _nested(iv) + _martingale(iv))
    ids = [i.id for i in out]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise AssertionError(f"duplicate catalog ids: {sorted(dup)}")
    return out


def lookup(identity_id: str, interval=(0.0, 1.0)) -> Identity:
    for ident in catalog_all(interval):
        if ident.id == identity_id:
            return ident
    raise KeyError(f"unknown identity {identity_id!r}")


def select(pattern: str, interval=(0.0, 1.0)) -> list:
    """Catalog entries whose id matches a shell-style glob."""
    return [i for i in catalog_all(interval) if fnmatch.fnmatchcase(i.id, pattern)]


def export_json(identities=None, indent=2) -> str:
    identities = catalog_all() if identities is None else identities
    doc = {
        "bibliography": BIBLIOGRAPHY,
        "identities": [i.to_dict() for i in identities],
    }
    return json.dumps(doc, indent=indent, sort_keys=False)
