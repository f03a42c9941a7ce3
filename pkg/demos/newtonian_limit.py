"""Compare weak-field stars against the zero-pressure-support limit.

As kappa -> 0 the relativistic profiles, rescaled to the limit variables,
converge linearly in kappa to the classical polytrope solution.  The
limit state itself is integrated by the same adaptive machinery with the
relativistic terms switched off.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tovlab import (HybridEos, newtonian_limit_check, solve_lane_emden,
                    solve_steady_state)

OUT = Path(__file__).with_suffix(".png")

eos = HybridEos(k=1.0, gamma=5.0 / 3.0)
kappas = [0.2, 0.1, 0.05, 0.025, 0.0125]

rep = newtonian_limit_check(eos, kappas)
print("kappa      sup-norm error   center error")
for row in list(rep.to_csv_rows())[1:]:
    kap, e0, e1 = (float(v) for v in row.split(","))
    print(f"{kap:8.4f}   {e0:12.6e}   {e1:12.6e}")
print(f"fitted convergence rate in kappa: {rep.rate:.4f}  (expected ~1)")

# overlay: rescaled relativistic y-profiles against the limit profile
limit = solve_lane_emden(5.0 / 3.0, 1.0)
fig, ax = plt.subplots(figsize=(6.5, 4.4))
ax.plot(limit.grid / limit.R, limit.y, "k-", lw=2, label="limit problem")
for kap in (0.4, 0.2, 0.05):
    st = solve_steady_state(eos, kap)
    ax.plot(st.grid / st.R, st.y / kap, "--", lw=1,
            label=f"kappa = {kap:g}, rescaled")
ax.set_xlabel("r / R")
ax.set_ylabel("y / y(0)")
ax.legend()

fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
