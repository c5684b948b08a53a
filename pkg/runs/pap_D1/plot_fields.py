"""Plot the CSV written next to this file (generated by chdissip).

Usage: python plot_fields.py [output.png]
"""
import sys
from pathlib import Path

import numpy as np
import matplotlib.pyplot as plt

here = Path(__file__).parent
data = np.loadtxt(here / "fields.csv", delimiter=",", skiprows=2)
t, x = data[:, 0], data[:, 1]
fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
for ax, col, label in zip(axes, (2, 3, 4), ("u", "F", "p")):
    for tk in np.unique(t):
        m = t == tk
        ax.plot(x[m], data[m, col], lw=1, label=f"t={tk:g}")
    ax.set_xlabel("x")
    ax.set_title(label)
axes[0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "fields.png", dpi=150)
