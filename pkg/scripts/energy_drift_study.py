"""Energy drift of flux-form runs under grid refinement at fixed box size.

    python scripts/energy_drift_study.py --gamma 0 --N 32 64
"""

import argparse
import warnings

from landaulab import LandauSolver, SolverConfig, VelocityGrid
from landaulab.experiment import build_scenario
from landaulab.solver import SupportLeakageWarning


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--N", type=int, nargs="+", default=[32, 64])
    args = ap.parse_args()
    prev = None
    for N in args.N:
        g = VelocityGrid(2, N, args.L)
        f0 = build_scenario(g, "gaussian_mixture", {"T": 0.09, "separation": 1.0})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SupportLeakageWarning)
            traj = LandauSolver(g, SolverConfig(gamma=args.gamma, t_end=args.t_end, output_every=4)).run(f0)
        E = [g.moments(s.f).energy for s in traj]
        drift = max(abs(e - E[0]) for e in E) / abs(E[0])
        ratio = "" if prev is None else f"  ratio {prev / drift:.1f}"
        print(f"N={N:4d} steps={traj[-1].steps:6d} energy drift {drift:.2e}{ratio}", flush=True)
        prev = drift


if __name__ == "__main__":
    main()
