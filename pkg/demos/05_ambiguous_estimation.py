"""What goes wrong without rounding promises.

The estimation-based generator sandwiches the coupling between QPE-kernel
operators A(x) instead of projectors.  On a spectrum aligned with the
estimate grid (alpha = 0) it thermalizes exactly; as the eigenvalues slide
toward the grid midpoints (alpha -> 1) its stationary state drifts away from
the thermal state, and median amplification only delays the onset.
"""

from gibbslab import approxdavies

rows = approxdavies.adversarial_sweep(
    q=4, n=3,
    alpha_grid=[0.0, 0.25, 0.5, 0.75, 1.0],
    m_med_grid=[1, 3, 5],
    beta=5.0,
    seed=7,
)

table = {}
for row in rows:
    table.setdefault(row["m_med"], {})[row["alpha"]] = row["distance"]

alphas = [0.0, 0.25, 0.5, 0.75, 1.0]
print("distance of the stationary state to the true thermal state:")
print("alpha:      " + "  ".join(f"{a:>8.2f}" for a in alphas))
for m_med in (1, 3, 5):
    vals = "  ".join(f"{table[m_med][a]:8.5f}" for a in alphas)
    print(f"m_med = {m_med}:  {vals}")

print("\nalpha = 0 is exact for every amplification level; at alpha = 1 no")
print("amount of median amplification removes the error.")
