"""Second moments and cross moments of iterated integrals against exact values."""
import math

import numpy as np

from itoreorder import (
    Deterministic, IntegralSpec, KConst, Separable, Wiener, covariance_experiment, evaluate,
    make_uniform_partition, sample_batch, since_start, spec_from_multiindex, until_end,
)

part = make_uniform_partition(0.0, 1.0, 512)
paths = sample_batch(part, 1, seed=3, count=20000)

cases = [
    ("J_(1)", spec_from_multiindex((1,)), 1.0),
    ("J_(11)", spec_from_multiindex((1, 1)), 0.5),
    ("J_(111)", spec_from_multiindex((1, 1, 1)), 1 / 6),
    ("1/2 int (T-s)^2 df", IntegralSpec(Deterministic(0.5 * until_end(2)), (), (Wiener(1),)), 0.05),
]
for name, spec, exact in cases:
    sq = evaluate(spec, paths) ** 2
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    print(f"{name:<20} E[J^2] = {sq.mean():.4f} +- {se:.4f}   exact {exact:.4f}")

# E[J_K[phi1] J_K[phi2]] is a deterministic simplex integral for equal components
# and vanishes for independent ones
one = KConst(1.0)
first = Separable((since_start(1),))
for phi1, phi2, i1, i2, label in [(one, one, 1, 1, "one,one"), (one, one, 1, 2, "one,one indep"),
                                  (first, one, 1, 1, "x1,one")]:
    rep = covariance_experiment(phi1, phi2, i1, i2, 128, 20000, seed=5)
    print(f"{label:<15} mc {rep.mc_estimate:+.4f} +- {rep.stderr:.4f}  target {rep.target:+.4f}  z {rep.z:+.2f}")
