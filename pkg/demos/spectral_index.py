"""Watch the reduced operator lose an eigenvalue across a ratio extremum.

The Morse index of the reduced quadratic form counts its negative
directions.  As kappa crosses a critical point of M/R the bottom of the
spectrum passes through zero: the kernel gap closes and the count steps
up by one.  This script tracks the three lowest eigenvalues through the
first such crossing.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tovlab import (HybridEos, assemble_reduced_form, build_mesh,
                    kernel_gap, lowest_eigenpairs, morse_index,
                    solve_steady_state)

OUT = Path(__file__).with_suffix(".png")

eos = HybridEos(k=1.0, gamma=5.0 / 3.0)
kappas = np.linspace(1.0, 1.8, 25)

thetas = np.empty((kappas.size, 3))
counts = np.empty(kappas.size, dtype=int)
gaps = np.empty(kappas.size)
for i, kap in enumerate(kappas):
    st = solve_steady_state(eos, kap)
    pair = assemble_reduced_form(st, build_mesh(st, elements=256))
    counts[i] = morse_index(pair).n_minus
    gaps[i] = kernel_gap(pair).gap
    thetas[i] = [t for t, _, _ in lowest_eigenpairs(pair, k=3)]

print(" kappa   n-   gap        three lowest eigenvalues")
for i, kap in enumerate(kappas):
    print(f"{kap:6.3f}  {counts[i]:2d}  {gaps[i]:9.2e}  "
          + "  ".join(f"{t:+.4e}" for t in thetas[i]))

jump = np.nonzero(np.diff(counts))[0]
for j in jump:
    print(f"index steps {counts[j]} -> {counts[j + 1]} between "
          f"kappa = {kappas[j]:.3f} and {kappas[j + 1]:.3f}")

fig, ax = plt.subplots(1, 2, figsize=(10.5, 4.2))
for k in range(3):
    ax[0].plot(kappas, thetas[:, k], marker=".", ms=4)
ax[0].axhline(0.0, color="k", lw=0.6)
ax[0].set_xlabel("kappa")
ax[0].set_ylabel("lowest eigenvalues")

ax[1].semilogy(kappas, gaps, marker=".")
ax[1].set_xlabel("kappa")
ax[1].set_ylabel("kernel gap")

fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(f"wrote {OUT}")
