"""Trace the mass-radius curve from weak field deep into the spiral.

The family is indexed by the central parameter kappa.  Along the way the
curve passes critical points of M (where a growing mode appears whenever
the curve bends counterclockwise) and of M/R (where the reduced operator's
kernel closes).  Both kinds are located by bisection on re-solved slopes
and marked on the plot.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tovlab import HybridEos, find_extrema, sweep_family

OUT = Path(__file__).with_suffix(".png")

eos = HybridEos(k=1.0, gamma=5.0 / 3.0)
curve = sweep_family(eos, np.geomspace(0.05, 4.0, 120))

mass_events = find_extrema(curve, which="mass")
ratio_events = find_extrema(curve, which="ratio")

print(f"{'kind':8s} {'kappa*':>12s} {'M':>10s} {'R':>10s} orientation")
for e in mass_events + ratio_events:
    j = curve.index_at(e.kappa_star)
    p = curve.points[j]
    which = "M" if e.which == "mass" else "M/R"
    print(f"{which:3s} {e.kind:4s} {e.kappa_star:12.6f} {p.M:10.6f} "
          f"{p.R:10.6f} {e.orientation}")

fig, ax = plt.subplots(1, 2, figsize=(11, 4.4))

ax[0].plot(curve.radii, curve.masses, lw=1.0)
for e in mass_events:
    j = curve.index_at(e.kappa_star)
    ax[0].plot(curve.points[j].R, curve.points[j].M, "o", ms=6,
               label=f"M {e.kind} at kappa={e.kappa_star:.3f}")
for e in ratio_events:
    j = curve.index_at(e.kappa_star)
    ax[0].plot(curve.points[j].R, curve.points[j].M, "s", ms=6,
               label=f"M/R {e.kind} at kappa={e.kappa_star:.3f}")
ax[0].set_xlabel("R")
ax[0].set_ylabel("M")
ax[0].legend(fontsize=8)

ax[1].semilogx(curve.kappas, curve.masses, label="M")
ax[1].semilogx(curve.kappas, curve.ratios, "--", label="M/R")
for e in mass_events + ratio_events:
    ax[1].axvline(e.kappa_star, color="k", lw=0.5, alpha=0.5)
ax[1].set_xlabel("kappa")
ax[1].legend()

fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
