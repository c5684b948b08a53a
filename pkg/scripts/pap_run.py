"""Solve the D=1, t*=1 peakon-antipeakon case and compare with the closed form.

Usage: python scripts/pap_run.py [--config configs/pap_D1.json] [--N 4096]
"""

import argparse
import time

import numpy as np

from chdissip.config import RunConfig
from chdissip.diagnostics import run_diagnostics
from chdissip.eulerian import compute_F
from chdissip.evolution import breaking_profile, solve
from chdissip.oracle import exact_u


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/pap_D1.json")
    ap.add_argument("--N", type=int, help="override solver.N")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config)
    if args.N:
        raw = dict(cfg.raw, solver={**cfg.raw["solver"], "N": args.N})
        cfg = RunConfig.from_dict(raw, cfg.base_dir)
    params = cfg.pap_params()

    start = time.perf_counter()
    traj = solve(cfg.initial_state(), cfg.solver_config())
    elapsed = time.perf_counter() - start

    lo, hi = cfg.raw["solver"]["xi_domain"]
    x = np.linspace(lo, hi, 8001)
    print(f"D={params.D:g} t*={params.t_star:g} N={cfg.raw['solver']['N']} "
          f"solve {elapsed:.1f}s")
    print(f"{'t':>6} {'sup|u-u_exact|':>15} {'F(inf)':>10}")
    for s in traj.snapshots:
        err = np.max(np.abs(traj.at(s.t).u_on(x) - exact_u(params, s.t, x)))
        print(f"{s.t:6.3f} {err:15.3e} {compute_F(s.eulerian, s.eulerian.x[-1]):10.5f}")

    tau = breaking_profile(traj)["tau"]
    if np.any(tau > 0):
        print(f"first breaking time {np.min(tau[tau > 0]):.6f}")
    print(run_diagnostics(traj).table())


if __name__ == "__main__":
    main()
