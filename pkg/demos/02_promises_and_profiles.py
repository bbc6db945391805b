"""Rounding promises and the spectral profiles that act on them.

Shows the interleaved fine-grained promises (branches L and R), one
coarse-graining, and the polynomial profiles used to filter eigenvalues:
the left-right profile and an attenuation profile with its plateau errors.
"""

import numpy as np

from gibbslab import promises, specfun

n, r = 2, 1
for branch in "LR":
    fine = promises.fine_grained(n, r, branch)
    print(f"fine {branch}: {fine.s} intervals, kappa = {fine.kappa}")
    print(f"   first three: {fine.intervals[:3]}")

fine_l = promises.fine_grained(n, r, "L")
for j in range(2**r):
    coarse = promises.coarse_grained(fine_l, n, r, "L", j)
    widths = [round(b - a, 5) for a, b in coarse.intervals]
    print(f"coarse j={j}: {coarse.s} intervals, widths {widths} (all <= 2^-{n} = {2**-n})")

family = promises.PromiseFamily.build(n, r, "L")
grid = np.linspace(0, 1, 20001)
excl = max(family.exclusion_count(x) for x in grid)
print(f"\nmax #promises excluding any point of [0,1]: {excl} (must be <= 1)\n")

delta_sup = 1e-3
profile = specfun.lr_profile(n, r, delta_sup, "poly")
print(f"left-right polynomial: degree {profile.degree}")
for lo, hi in promises.deletion_windows(n, r, "L")[:2]:
    pts = np.linspace(lo, hi, 101)
    print(f"   on L window [{lo:.4f},{hi:.4f}]: max p^2 = {np.max(profile(pts)**2):.2e} "
          f"(target {delta_sup/3:.2e})")

promise = family.coarse[0]
atten = specfun.attenuation_profile(promise, 0.2, 1e-6, "poly")
print(f"\nattenuation polynomial (gamma=0.2): degree {atten.degree}")
trunc = promise.truncate(promise.kappa * 0.2)
worst = max(
    float(np.max(1 - atten(np.linspace(a, b, 101)))) for a, b in trunc.intervals
)
print(f"   worst plateau shortfall on the truncated promise: {worst:.2e}")
