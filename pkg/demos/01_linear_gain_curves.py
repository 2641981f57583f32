"""Linear gain landscape: frequency response vs. period-aware gains.

Sweeps two systems (a first-order lag and a lightly damped oscillator) over
a log grid of periods and plots, on a shared period axis, the frequency
response |G(j 2pi/T)|, the classical asymptotic slope, and the two
components of the exact periodic gain.  The oscillator shows the resonance
peaks of the AC gain at integer multiples of the resonant period.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import pagkit as pk

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

systems = {
    "first_order_lag": pk.StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]]),
    # damped oscillator with resonant (oscillation) frequency 1 rad/s
    "resonant_2d": pk.StateSpace(
        A=[[0.0, 1.0], [-(1 / np.sqrt(1 - 0.2**2)) ** 2, -2 * 0.2 / np.sqrt(1 - 0.2**2)]],
        B=[[0.0], [1.0]], C=[[1.0, 0.0]]),
}

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
for ax, (name, sys) in zip(axes, systems.items()):
    slope = pk.classical_ag_slope(sys, "B")
    periods = np.geomspace(0.3, 60.0, 80)
    rows = []
    for T in periods:
        lp = pk.linear_pag(sys, "B", T, 2048)
        _, fr = pk.frequency_response(sys, "B", 2 * np.pi / T)
        rows.append((T, lp.gamma_dc, lp.gamma_ac, fr))
    rows = np.array(rows)
    np.savetxt(OUT / f"gains_{name}.csv", rows, delimiter=",",
               header="T,gamma_dc,gamma_ac,freq_resp_norm", comments="")

    ax.loglog(rows[:, 0], rows[:, 3], label="|G(j 2pi/T)|")
    ax.loglog(rows[:, 0], rows[:, 2], label="gamma_ac(T)")
    ax.axhline(rows[0, 1], color="k", ls=":", label="gamma_dc")
    ax.axhline(slope, color="r", ls="--", label="classical slope")
    ax.set_title(name)
    ax.set_xlabel("period T [s]")
    ax.legend(fontsize=8)

fig.tight_layout()
fig.savefig(OUT / "linear_gain_curves.png", dpi=130)
print(f"wrote {OUT}/linear_gain_curves.png and per-system CSVs")
print("note how gamma_ac sits between |G| and the classical slope, and how")
print("the oscillator's gamma_ac peaks near T = 2*pi and 4*pi.")
