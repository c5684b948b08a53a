"""Write closed-form peakon-antipeakon data on t in [0, 1.5], x in [-5, 5].

The CSV and a plotting script go to ``--out``.  With ``--render`` the
figure is drawn here too, which needs matplotlib installed.
"""

import argparse
import subprocess
import sys
from pathlib import Path

import numpy as np

from chdissip.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/figures")
    ap.add_argument("--nt", type=int, default=7, help="number of time slices")
    ap.add_argument("--nx", type=int, default=401)
    ap.add_argument("--render", action="store_true")
    args = ap.parse_args()

    times = [f"{t:.6g}" for t in np.linspace(0.0, 1.5, args.nt)]
    code = cli_main(["oracle", "--D", "1", "--t-star", "1", "--times", *times,
                     "--x-min", "-5", "--x-max", "5", "--nx", str(args.nx),
                     "--out", args.out, "--format", "csv"])
    if code or not args.render:
        return code
    script = Path(args.out) / "plot_oracle.py"
    return subprocess.call([sys.executable, str(script)])


if __name__ == "__main__":
    sys.exit(main())
