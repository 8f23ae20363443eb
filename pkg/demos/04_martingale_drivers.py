"""The same reordering with a compensated Poisson driver instead of Brownian motion.

Jumps make the error heavy tailed, so the median squared gap is much smaller
than the mean.
"""
from itoreorder import catalog_all
from itoreorder.montecarlo import verify_many

idents = [i for i in catalog_all() if i.group == "martingale" and "poisson" in i.id]
for N in (128, 512):
    for rep in verify_many(idents, N, 2000, seed=17):
        print(f"N={N:4d} {rep.identity_id:<20} ms {rep.ms_error:.3e}  median {rep.median:.3e}")
