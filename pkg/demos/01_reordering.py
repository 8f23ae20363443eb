"""One triple integral, two summation orders, then its closed form.

Run with ``python3 demos/01_reordering_on_one_path.py``.
"""
import numpy as np

from itoreorder import (
    lookup, make_uniform_partition, sample_batch, spec_from_multiindex, evaluate,
)
from itoreorder.montecarlo import evaluate_side

# J_(110): innermost dt, then two Wiener layers
spec = spec_from_multiindex((1, 1, 0))
print(spec.describe())
print(spec.reversed().describe())

# a single path on a fine grid
fine = make_uniform_partition(0.0, 1.0, 4096)
path = sample_batch(fine, 1, seed=7, count=1)

# on the same grid both orders agree to rounding: it is the same finite sum
fwd = evaluate(spec, path)[0]
rev = evaluate(spec.reversed(), path)[0]
print(f"forward {fwd:+.12f}  reversed {rev:+.12f}  gap {abs(fwd - rev):.1e}")

# the catalog identity compares a fine-grid left side with a coarse right side;
# one path is noisy, so look at the root-mean-square gap over many
ident = lookup("J110")
print(ident.formula)
many = sample_batch(fine, 1, seed=7, count=500)
lhs = evaluate_side(ident.lhs, many)
for factor in (256, 64, 16, 4):
    coarse = many.coarsen(factor)
    gap = lhs - evaluate_side(ident.rhs, coarse)
    print(f"N={coarse.N:5d}  rms(lhs-rhs) = {np.sqrt(np.mean(gap ** 2)):.2e}")
