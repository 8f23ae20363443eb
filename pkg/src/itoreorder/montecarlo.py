"""Monte Carlo verification of catalog identities on shared noise."""
from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .catalog import Identity
from .core import KernelExpr, Swapped, Wiener, make_uniform_partition
from .evaluate import eval_kernel_forward, eval_kernel_reversed, evaluate
from .paths import sample_batch
from .quadrature import simplex_quadrature

DEFAULT_REFINE = 4
CHUNK = 1000
PILOT_N = 256
ENVELOPE_FACTOR = 10.0
# absolute slack so exact identities (ms_error == 0 up to rounding) pass
ENVELOPE_FLOOR = 1e-20
Z95 = 1.959963984540054


def derive_seed(master: int, *keys) -> int:
    """Reproducible 63-bit child seed for ``(master, *keys)``."""
    text = repr((int(master),) + tuple(keys)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little") >> 1


@dataclass(frozen=True)
class EstimateReport:
    identity_id: str
    citation: str
    interval: tuple
    N: int
    M: int
    seed: int
    refine: int
    ms_error: float
    ci95: tuple
    stderr: float
    median: float
    lhs_mean: float
    rhs_mean: float
    wall_time: float = 0.0
    envelope: float | None = None
    passed: bool | None = None

    def with_envelope(self, envelope: float) -> "EstimateReport":
        return EstimateReport(**{**asdict(self), "envelope": float(envelope),
                                 "passed": bool(self.ms_error <= envelope)})

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "identity_id": self.identity_id,
            "citation": self.citation,
            "interval": list(self.interval),
            "N": self.N,
            "M": self.M,
            "seed": self.seed,
            "refine": self.refine,
            "ms_error": self.ms_error,
            "ci95": list(self.ci95),
            "stderr": self.stderr,
            "median": self.median,
            "lhs_mean": self.lhs_mean,
            "rhs_mean": self.rhs_mean,
            "envelope": self.envelope,
            "pass": self.passed,
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass(frozen=True)
class ConvergenceReport:
    identity_id: str
    rows: tuple  # EstimateReport per N, increasing N
    fitted_slope: float

    @property
    def Ns(self):
        return [r.N for r in self.rows]

    def to_dict(self, timing: bool = False) -> dict:
        return {
            "identity_id": self.identity_id,
            "fitted_slope": self.fitted_slope,
            "rows": [r.to_dict(timing) for r in self.rows],
        }


@dataclass(frozen=True)
class CovarianceReport:
    i1: int
    i2: int
    N: int
    M: int
    seed: int
    mc_estimate: float
    stderr: float
    ci95: tuple
    quadrature: float
    target: float
    z: float = field(default=0.0)

    def within(self, sigmas: float = 4.0) -> bool:
        return abs(self.mc_estimate - self.target) <= sigmas * self.stderr

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        d["pass"] = self.within()
        return d


def evaluate_side(terms, path) -> np.ndarray:
    out = np.zeros(path.n_paths)
    for term in terms:
        if term.spec is None:
            out = out + term.coef
        else:
            out = out + term.coef * evaluate(term.spec, path)
    return out


def _requirements(identities, dims=None, models=None):
    need_dims = max(i.dims for i in identities)
    need_models = {}
    for ident in identities:
        need_models.update(ident.models)
    if dims is not None and dims < need_dims:
        raise ValueError(
            f"identity needs {need_dims} Wiener components, paths would have {dims}"
        )
    if models is not None:
        missing = sorted(set(need_models) - set(models))
        if missing:
            raise ValueError(f"identity needs martingale models {missing}")
        need_models = {k: models[k] for k in need_models}
    if dims is None:
        dims = need_dims
    if dims == 0 and not need_models:
        dims = 1  # deterministic identities still draw one component
    return dims, need_models


def _chunks(M: int, chunk: int):
    return [(s, min(chunk, M - s)) for s in range(0, M, chunk)]


def _side_samples(identities, N, M, seed, refine, workers, chunk, dims=None, models=None):
    intervals = {i.interval for i in identities}
    if len(intervals) != 1:
        raise ValueError("identities run together must share one interval")
    (t, T), = intervals
    dims, models = _requirements(identities, dims, models)
    fine = make_uniform_partition(t, T, N * refine)

    def work(job):
        start, count = job
        path = sample_batch(fine, dims, models, seed, start, count)
        coarse = path.coarsen(refine)
        res = []
        for ident in identities:
            lpath = path if ident.reference else coarse
            res.append((evaluate_side(ident.lhs, lpath), evaluate_side(ident.rhs, coarse)))
        return res

    jobs = _chunks(M, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    out = []
    for n in range(len(identities)):
        L = np.concatenate([p[n][0] for p in parts])
        R = np.concatenate([p[n][1] for p in parts])
        out.append((L, R))
    return out


def _report(ident, N, M, seed, refine, L, R, wall) -> EstimateReport:
    sq = (L - R) ** 2
    ms = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(M))
    return EstimateReport(
        identity_id=ident.id,
        citation=ident.citation,
        interval=tuple(ident.interval),
        N=N, M=M, seed=seed, refine=refine,
        ms_error=ms,
        ci95=(max(ms - Z95 * se, 0.0), ms + Z95 * se),
        stderr=se,
        median=float(np.median(sq)),
        lhs_mean=float(np.mean(L)),
        rhs_mean=float(np.mean(R)),
        wall_time=wall,
    )


def _check_args(N, M, refine):
    if N < 2:
        raise ValueError("need N >= 2")
    if M < 100:
        raise ValueError("need M >= 100 paths")
    if refine < 1:
        raise ValueError("refinement factor must be >= 1")


def verify_many(identities, N: int, M: int, seed: int, refine: int = DEFAULT_REFINE,
                workers: int = 1, chunk: int = CHUNK, dims=None, models=None) -> list:
    """Estimate ``E[(L - R)^2]`` for several identities on one shared sample.

    Every path is keyed by ``(seed, path index)``, so each report equals the
    one :func:`verify_identity` gives for that identity alone.
    """
    _check_args(N, M, refine)
    identities = list(identities)
    if not identities:
        return []
    groups: dict = {}
    for ident in identities:
        groups.setdefault(ident.interval, []).append(ident)
    reports = {}
    for group in groups.values():
        t0 = time.perf_counter()
        samples = _side_samples(group, N, M, seed, refine, workers, chunk, dims, models)
        wall = (time.perf_counter() - t0) / len(group)
        for ident, (L, R) in zip(group, samples):
            reports[ident.id] = _report(ident, N, M, seed, refine, L, R, wall)
    return [reports[i.id] for i in identities]


def verify_identity(identity: Identity, N: int, M: int, seed: int, refine: int = DEFAULT_REFINE,
                    workers: int = 1, chunk: int = CHUNK, dims=None, models=None) -> EstimateReport:
    return verify_many([identity], N, M, seed, refine, workers, chunk, dims, models)[0]


# ---------------------------------------------------------------------------
# envelope


def calibrate(identities, M: int, seed: int, pilot_N: int = PILOT_N, refine: int = DEFAULT_REFINE,
              workers: int = 1, chunk: int = CHUNK) -> dict:
    """Pilot constants ``C = ms_error(pilot_N) * pilot_N`` per identity id."""
    pilots = verify_many(identities, pilot_N, M, derive_seed(seed, "pilot"), refine, workers, chunk)
    return {r.identity_id: r.ms_error * pilot_N for r in pilots}


def envelope(C: float, N: int, factor: float = ENVELOPE_FACTOR) -> float:
    return factor * C / N + ENVELOPE_FLOOR


def check_many(identities, N: int, M: int, seed: int, factor=ENVELOPE_FACTOR,
               pilot_N: int = PILOT_N, refine: int = DEFAULT_REFINE, workers: int = 1,
               chunk: int = CHUNK) -> list:
    """Verify and attach the calibrated envelope.  ``factor`` may be a number
    or a callable ``identity -> number``."""
    identities = list(identities)
    C = calibrate(identities, M, seed, pilot_N, refine, workers, chunk)
    reports = verify_many(identities, N, M, seed, refine, workers, chunk)
    out = []
    for ident, rep in zip(identities, reports):
        f = factor(ident) if callable(factor) else factor
        out.append(rep.with_envelope(envelope(C[ident.id], N, f)))
    return out


def default_factor(identity: Identity) -> float:
    """Jump drivers get twice the slack of continuous ones."""
    return 2 * ENVELOPE_FACTOR if "poisson" in identity.models else ENVELOPE_FACTOR


# ---------------------------------------------------------------------------
# sweeps


def fit_slope(Ns, ms) -> float:
    Ns = np.asarray(Ns, dtype=float)
    ms = np.asarray(ms, dtype=float)
    if np.any(ms <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(Ns), np.log(ms), 1)
    return float(slope)


def _sweep_Ns(Ns):
    Ns = sorted({int(n) for n in Ns})
    if len(Ns) < 3:
        raise ValueError("a convergence sweep needs at least three distinct N values")
    return Ns


def convergence_sweep(identity: Identity, Ns, M: int, seed: int, refine: int = DEFAULT_REFINE,
                      workers: int = 1, chunk: int = CHUNK) -> ConvergenceReport:
    return sweep_many([identity], Ns, M, seed, refine, workers, chunk)[0]


def sweep_many(identities, Ns, M: int, seed: int, refine: int = DEFAULT_REFINE,
               workers: int = 1, chunk: int = CHUNK) -> list:
    """Sweeps sharing paths across identities; each N gets its own seed."""
    Ns = _sweep_Ns(Ns)
    identities = list(identities)
    per_N = [verify_many(identities, N, M, derive_seed(seed, "sweep", N), refine, workers, chunk)
             for N in Ns]
    out = []
    for n, ident in enumerate(identities):
        rows = tuple(reps[n] for reps in per_N)
        out.append(ConvergenceReport(ident.id, rows, fit_slope(Ns, [r.ms_error for r in rows])))
    return out


# ---------------------------------------------------------------------------
# covariance of reversed and forward kernel integrals


def covariance_experiment(phi1: KernelExpr, phi2: KernelExpr, i1: int, i2: int, N: int, M: int,
                          seed: int, interval=(0.0, 1.0), nodes: int = 513, workers: int = 1,
                          chunk: int = CHUNK) -> CovarianceReport:
    """Monte Carlo ``E{IJ}`` against its deterministic value.

    ``I = int dw^{i2}_{t2} int_{t2}^T phi1(t1, t2) dw^{i1}_{t1}`` (reversed
    order) and ``J = int int_t^{t2} phi2(t1, t2) dw^{i1}_{t1} dw^{i2}_{t2}``.
    """
    if N < 2 or M < 2:
        raise ValueError("need N >= 2 and M >= 2")
    for phi in (phi1, phi2):
        if phi.min_arity > 2:
            raise ValueError("covariance kernels take exactly two arguments")
    if i1 < 1 or i2 < 1:
        raise ValueError("components are numbered from 1")
    iv = (float(interval[0]), float(interval[1]))
    part = make_uniform_partition(iv[0], iv[1], N)
    dims = max(i1, i2)
    d_i = (Wiener(i1), Wiener(i2))
    d_j = (Wiener(i2), Wiener(i1))

    def work(job):
        path = sample_batch(part, dims, None, seed, *job)
        I = eval_kernel_reversed(phi1, None, d_i, path, iv)
        J = eval_kernel_forward(Swapped(phi2), None, d_j, path, iv)
        return I * J

    jobs = _chunks(M, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            prod = np.concatenate(list(ex.map(work, jobs)))
    else:
        prod = np.concatenate([work(j) for j in jobs])
    est = float(np.mean(prod))
    se = float(np.std(prod, ddof=1) / math.sqrt(M))
    quad = simplex_quadrature((phi1, phi2), iv, nodes)
    target = quad if i1 == i2 else 0.0
    z = (est - target) / se if se > 0 else 0.0
    return CovarianceReport(i1, i2, N, M, seed, est, se, (est - Z95 * se, est + Z95 * se),
                            quad, target, z)
