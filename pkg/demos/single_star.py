"""Solve one equilibrium star and look at every profile the solver returns.

The independent central parameter is the enthalpy potential at the center,
kappa = y(0); the integration stops at the first zero of y, which defines
the surface.  Outside, the metric matches the vacuum solution, and the
report checks that identity explicitly.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tovlab import HybridEos, solve_steady_state

OUT = Path(__file__).with_suffix(".png")
KAPPA = 0.8

eos = HybridEos(k=1.0, gamma=5.0 / 3.0)
st = solve_steady_state(eos, KAPPA)

print(f"kappa            = {st.kappa}")
print(f"mass M           = {st.M:.8f}")
print(f"radius R         = {st.R:.8f}")
print(f"M/R              = {st.M / st.R:.8f}")
print(f"central density  = {st.rho[0]:.8f}")
safe = np.where(st.grid > 0, st.grid, 1.0)
print(f"max 2m/r         = {np.max(2 * st.m / safe):.6f}  (bound 8/9)")
print(f"surface matching : |e^(2 mu(R)) - (1 - 2M/R)| = "
      f"{abs(np.exp(2 * st.mu_R) - (1 - 2 * st.M / st.R)):.2e}")
for key, val in st.solver_diag.items():
    print(f"  {key}: {val}")

fig, ax = plt.subplots(2, 2, figsize=(9.5, 7), sharex=True)
r = st.grid

ax[0, 0].plot(r, st.y)
ax[0, 0].set_ylabel("y(r)")
ax[0, 0].axhline(0.0, color="k", lw=0.6)

ax[0, 1].plot(r, st.m)
ax[0, 1].set_ylabel("m(r)")

ax[1, 0].plot(r, st.rho, label="rho")
ax[1, 0].plot(r, st.p, "--", label="p")
ax[1, 0].set_ylabel("matter")
ax[1, 0].set_xlabel("r")
ax[1, 0].legend()

ax[1, 1].plot(r, st.mu, label="mu")
ax[1, 1].plot(r, st.lam, "--", label="lambda")
ax[1, 1].set_ylabel("metric")
ax[1, 1].set_xlabel("r")
ax[1, 1].legend()

fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
