"""Tour of the barotropic models: pressure laws and the enthalpy change of
variables the structure solver integrates in.

Prints the validation report for each model and plots p(rho), the sound
speed, and the enthalpy potential Q(rho) with its inverse g(y).
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tovlab import HybridEos, Polytrope

OUT = Path(__file__).with_suffix(".png")

hybrid = HybridEos(k=1.0, gamma=5.0 / 3.0)
poly = Polytrope(k=1.0, gamma=5.0 / 3.0)

for name, eos in (("hybrid", hybrid), ("polytrope", poly)):
    rep = eos.validate()
    print(f"{name}: ok={rep.ok}  positivity={rep.positivity_ok}  "
          f"low-density={rep.low_density_ok}  high-density={rep.high_density_ok}  "
          f"causal={rep.causal_ok}")

# the hybrid law follows the soft polytrope at low density and rolls over
# to a stiffer branch whose sound speed approaches the causal bound
rho = np.geomspace(1e-4, 1e3, 600)
p_h = hybrid.pressure(rho)
p_p = poly.pressure(rho)
cs2_h = hybrid.sound_speed_sq(rho)
cs2_p = poly.sound_speed_sq(rho)

# enthalpy potential: the solver's integration variable; g inverts Q
y = hybrid.enthalpy(rho)
rho_back = hybrid.density_of_enthalpy(y)
print(f"Q/g round trip: max rel err = "
      f"{np.max(np.abs(rho_back - rho) / rho):.2e}")

fig, ax = plt.subplots(1, 3, figsize=(12.5, 3.8))
ax[0].loglog(rho, p_h, label="hybrid")
ax[0].loglog(rho, p_p, "--", label="polytrope")
ax[0].set_xlabel("rho")
ax[0].set_ylabel("p")
ax[0].legend()

ax[1].semilogx(rho, cs2_h, label="hybrid")
ax[1].semilogx(rho, cs2_p, "--", label="polytrope")
ax[1].axhline(1.0, color="k", lw=0.6)
ax[1].set_xlabel("rho")
ax[1].set_ylabel("dp/drho")
ax[1].legend()

ax[2].loglog(rho, y)
ax[2].set_xlabel("rho")
ax[2].set_ylabel("Q(rho)")

fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
