"""Mean-square error of a few identities as the grid is refined.

Stochastic layers give errors of order 1/N; purely deterministic ones 1/N**2.
"""
import numpy as np

from itoreorder import lookup
from itoreorder.montecarlo import sweep_many

Ns = [64, 128, 256, 512]
ids = ["thm1-J11", "thm1-J110", "thm1-tf", "J00-closed"]
reports = sweep_many([lookup(i) for i in ids], Ns, M=2000, seed=11)

print("identity      " + "".join(f"N={n:<10d}" for n in Ns) + "slope")
for rep in reports:
    errs = "".join(f"{r.ms_error:<12.3e}" for r in rep.rows)
    print(f"{rep.identity_id:<14}{errs}{rep.fitted_slope:+.2f}")

# halving the step should divide the error by about 2 or 4
ratios = np.array([[a.ms_error / b.ms_error for a, b in zip(r.rows, r.rows[1:])] for r in reports])
print("successive ratios\n", ratios.round(2))
