"""Track the fitted Fourier-decay index along relaxing mixture runs.

Prints sigma_hat at every output for each (T, separation) pair, which shows
how far the single-law fit moves while the spectrum is far from the model.

    python scripts/fourier_witness_scan.py --N 64 --L 8 --gamma 0 0.1,0.4 0.06,1.0
"""

import argparse
import time

from landaulab import LandauSolver, SolverConfig, VelocityGrid
from landaulab import diagnostics as dg
from landaulab.experiment import build_scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--gamma", type=float, default=0.0)
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("cases", nargs="+", help="T,separation pairs")
    args = ap.parse_args()
    g = VelocityGrid(2, args.N, args.L)
    cfg = SolverConfig(gamma=args.gamma, t_end=args.t_end, output_every=10, recompute_coeffs_every_stage=False)
    for case in args.cases:
        T, sep = (float(x) for x in case.split(","))
        f0 = build_scenario(g, "gaussian_mixture", {"T": T, "separation": sep})
        start = time.perf_counter()
        traj = LandauSolver(g, cfg).run(f0)
        sig = [dg.gevrey_fit_fourier(g, s.f).sigma_hat for s in traj]
        print(
            f"T={T:g} sep={sep:g} ({time.perf_counter() - start:.0f}s):",
            " ".join(f"{s:.3f}" for s in sig),
            f"| drift {max(sig) - sig[0]:.3f}",
            flush=True,
        )


if __name__ == "__main__":
    main()
