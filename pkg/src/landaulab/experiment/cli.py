"""Command-line interface.

Exit codes: 0 success, 1 a checked property failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import LandauLabError
from ..multiindex import MultiIndex
from .config import ExperimentConfig, load_config, serialize, with_overrides

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _err(msg: str) -> None:
    print(f"landaulab: {msg}", file=sys.stderr)


def _load(path: str) -> ExperimentConfig:
    if not Path(path).is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return load_config(path)


# subcommands --------------------------------------------------------------------


def cmd_run(args) -> int:
    from .runner import run_experiment

    cfg = _load(args.config)
    res = run_experiment(cfg, args.output)
    props = res.summary["properties"]
    for name, p in props.items():
        verdict = "skip" if not p["applies"] else ("pass" if p["pass"] else "FAIL")
        print(f"{verdict:4s}  {name:24s} value={p['value']!r} threshold={p['threshold']!r}")
    print(f"artifacts in {res.outdir}")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    from .checks import verify_combinatorics

    results = verify_combinatorics(args.max_order, args.sigma, args.dim, args.count_order, args.fit_order)
    for r in results:
        print(f"{'pass' if r.ok else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def cmd_identity(args) -> int:
    from ..diagnostics import energy_identity_check
    from ..solver import LandauSolver
    from .runner import identity_window
    from .scenarios import build_scenario

    cfg = _load(args.config)
    mu = MultiIndex.parse(args.mu)
    grid, kernel = cfg.make_grid(), cfg.make_kernel()
    if mu.d != grid.d:
        raise LandauLabError(f"--mu has {mu.d} entries, grid has d={grid.d}")
    solver = LandauSolver(grid, cfg.make_solver_config(), kernel)
    f0 = build_scenario(grid, cfg.scenario.name, cfg.scenario.params)
    frac = args.dt_fraction if args.dt_fraction is not None else cfg.diagnostics.identity_dt_fraction
    triple = identity_window(solver, solver.initial_state(f0), frac)
    rep = energy_identity_check(grid, triple, mu, kernel, cfg.diagnostics.sigma_list[0], cfg.diagnostics.B, cfg.diagnostics.mask_radius)
    print(f"mu = {mu}   t = {rep.t:.6g}   dt = {rep.dt:.3e}")
    for k, v in rep.terms.items():
        print(f"  ({k}) = {v:+.12e}")
    print(f"  sum    = {rep.rhs_total:+.12e}")
    print(f"  lhs_fd = {rep.lhs_fd:+.12e}")
    print(f"  (I)_1 = {rep.I1:+.6e}  (I)_2 = {rep.I2:+.6e}  K_hat = {rep.K_hat:.6e}")
    print(f"  mismatch = {rep.mismatch:.3e}  coercivity violation / scale = {rep.coercivity_violation / rep.scale if rep.scale else 0.0:.3e}")
    th = cfg.thresholds
    ok = rep.mismatch <= th.identity_rel and rep.coercivity_violation <= th.coercivity_rel * rep.scale
    return EXIT_OK if ok else EXIT_FAIL


def cmd_fit(args) -> int:
    from ..diagnostics import gevrey_fit_fourier
    from .io import read_snapshot

    if not Path(args.snapshot).is_file():
        raise FileNotFoundError(f"snapshot not found: {args.snapshot}")
    head, f = read_snapshot(args.snapshot)
    fit = gevrey_fit_fourier(head.grid, f, tuple(args.window) if args.window else None)
    print(f"t = {head.t:.6g}  d = {head.d}  N = {head.N}  L = {head.L:g}  gamma = {head.gamma:g}")
    print(f"sigma_hat = {fit.sigma_hat:.6f}")
    print(f"c_hat     = {fit.c_hat:.6e}")
    print(f"residual  = {fit.residual:.3e}  shells {fit.window[0]:g}..{fit.window[1]:g} ({fit.n_shells})")
    return EXIT_OK


def _sweep_one(job):
    from .runner import run_experiment

    text, outdir = job
    from .config import parse_config

    res = run_experiment(parse_config(text), outdir)
    return outdir, res.passed


def _parse_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


_ALIASES = {"gamma": "kernel.gamma", "γ": "kernel.gamma", "N": "grid.N", "L": "grid.L", "d": "grid.d"}


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    key, _, values = args.param.partition("=")
    if not values:
        raise ValueError("--param must look like key=v1,v2,...")
    key = _ALIASES.get(key, key)
    base = Path(args.output or cfg.output.directory)
    jobs = []
    for raw in values.split(","):
        val = _parse_value(raw.strip())
        variant = with_overrides(cfg, {key: val})
        jobs.append((serialize(variant), str(base / f"{key.split('.')[-1]}={raw.strip()}")))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    for outdir, passed in results:
        print(f"{'pass' if passed else 'FAIL'}  {outdir}")
    (base / "sweep.json").write_text(json.dumps({o: p for o, p in results}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all(p for _, p in results) else EXIT_FAIL


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="landaulab", description="Spectral solver and regularity diagnostics for the homogeneous Landau equation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a configured experiment and write its artifacts")
    r.add_argument("config", help="TOML experiment config")
    r.add_argument("--output", help="output directory (default: output.directory from the config)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify-combinatorics", help="check the multi-index counting, sum and bound-constant identities")
    v.add_argument("--max-order", type=int, default=20, help="largest |mu| for the sum and Vandermonde checks (default 20)")
    v.add_argument("--sigma", type=float, nargs="+", default=[1.5, 2.0, 3.0], help="Gevrey indices (> 1) for the bound constants")
    v.add_argument("--dim", type=int, default=3, choices=(2, 3), help="space dimension (default 3)")
    v.add_argument("--count-order", type=int, default=30, help="largest order for the count formula check (default 30)")
    v.add_argument("--fit-order", type=int, default=40, help="largest |mu| for the bound-constant fit (default 40)")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("check-identity", help="compare d/dt ||d^mu f||^2 with its Leibniz decomposition at t = 0")
    c.add_argument("config", help="TOML experiment config")
    c.add_argument("--mu", required=True, help="multi-index, e.g. 1,0")
    c.add_argument("--dt-fraction", type=float, default=None, help="time step as a fraction of stable_dt")
    c.set_defaults(func=cmd_identity)

    g = sub.add_parser("fit-gevrey", help="fit the Fourier decay of a snapshot")
    g.add_argument("snapshot", help="binary snapshot file")
    g.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="shell range (default N/8 .. 3N/8)")
    g.set_defaults(func=cmd_fit)

    s = sub.add_parser("sweep", help="run one config over several values of a parameter")
    s.add_argument("config", help="TOML experiment config")
    s.add_argument("--param", required=True, help="dotted key and values, e.g. gamma=0,0.5,1 or solver.cfl=0.25,0.5")
    s.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    s.add_argument("--output", help="base output directory")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, LandauLabError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
