"""Run one configured experiment and write its artifacts.

Files written to the output directory:

``conservation.csv``  t, M, Ev1..Evd, E, H, min_f, K_hat, mass_leak
``norms.csv``         t, order, alpha, l2, l2gamma_grad
``gevrey.csv``        t, sigma_hat, c_hat, residual, C_hat_<sigma> per sigma
``identity.csv``      t, mu, I, II, III, IV, I1, I2, lhs_fd, mismatch,
                      coercivity_violation, scale, C2_implied
``summary.json``      config echo, Q_k and w_k, property verdicts
``snap_XXXX.bin``     snapshots every ``output.snapshot_every`` outputs
"""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .. import diagnostics as dg
from ..errors import FitDegenerateError, LandauLabError
from ..solver import LandauSolver, SolverState
from .config import ExperimentConfig
from .io import write_csv, write_json, write_snapshot
from .scenarios import build_scenario


@dataclass
class StepMonitor:
    """Per-step entropy and positivity tracking."""

    grid: Any
    floor: float
    H_prev: float
    max_increase: float = 0.0
    min_f: float = math.inf
    steps: int = 0

    def __call__(self, state: SolverState) -> None:
        H = self.grid.entropy(state.f, self.floor)
        self.max_increase = max(self.max_increase, H - self.H_prev)
        self.H_prev = H
        self.min_f = min(self.min_f, float(np.min(state.f)))
        self.steps += 1


@dataclass
class RunResult:
    outdir: Path | None
    summary: dict
    states: list[SolverState] = field(repr=False)
    records: list[dg.ConservationRecord] = field(repr=False)
    tables: list[dg.DerivativeNormTable] = field(repr=False)
    fits: list[dg.GevreyFit | None] = field(repr=False)
    identity: list[dg.EnergyIdentityReport] = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.summary["passed"]


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    return _finite_or_none(obj)


def identity_window(solver: LandauSolver, state: SolverState, fraction: float) -> list[SolverState]:
    """Three states (t, t + delta, t + 2 delta) with delta = fraction * stable_dt."""
    delta = fraction * solver.stable_dt(state.coeffs)
    s1 = solver.step(state, delta)
    s2 = solver.step(s1, delta)
    return [state, s1, s2]


def _property(value, threshold, ok, applies=True) -> dict:
    return {"value": value, "threshold": threshold, "pass": bool(ok) if applies else None, "applies": applies}


def evaluate(cfg: ExperimentConfig, outdir=None, write: bool = True) -> RunResult:
    grid = cfg.make_grid()
    kernel = cfg.make_kernel()
    solver = LandauSolver(grid, cfg.make_solver_config(), kernel)
    dgc, th = cfg.diagnostics, cfg.thresholds
    gamma = kernel.gamma
    out = Path(outdir if outdir is not None else cfg.output.directory)
    if write:
        out.mkdir(parents=True, exist_ok=True)

    summary: dict[str, Any] = {"config": cfg.to_dict(), "complete": False}
    try:
        f0 = build_scenario(grid, cfg.scenario.name, cfg.scenario.params)
        H0 = grid.entropy(f0, dgc.entropy_floor)
        monitor = StepMonitor(grid, dgc.entropy_floor, H0, min_f=float(np.min(f0)))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            states = solver.run(f0, on_step=monitor)
        summary["warnings"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})

        records = [dg.conservation_record(grid, s, gamma, dgc.mask_radius, dgc.entropy_floor) for s in states]
        tables = [dg.derivative_norm_table(grid, s.f, dgc.m_max, gamma, s.t) for s in states]
        window = tuple(dgc.fit_window) if dgc.fit_window else None
        fits: list[dg.GevreyFit | None] = []
        for s, tab in zip(states, tables):
            try:
                fit = dg.gevrey_fit_fourier(grid, s.f, window)
                C = {sg: dg.gevrey_constant_witness(tab, sg) for sg in dgc.sigma_list}
                fit = replace(fit, C_hat=C)
            except FitDegenerateError:
                fit = None
            fits.append(fit)

        id_states = states[:-1] if len(states) > 1 else states
        reports = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", dg.IdentityAccuracyWarning)
            for s in id_states:
                triple = identity_window(solver, s, dgc.identity_dt_fraction)
                for mu in cfg.identity_indices():
                    reports.append(
                        dg.energy_identity_check(grid, triple, mu, kernel, dgc.sigma_list[0], dgc.B, dgc.mask_radius)
                    )

        times = [s.t for s in states]
        ks = list(range(1, dgc.m_max + 1))
        Q = [dg.qk_functional(times, tables, k) for k in ks]
        W = {sg: dg.qk_witness(Q, sg) for sg in dgc.sigma_list}

        # property verdicts -------------------------------------------------------------
        M0 = records[0].M
        props: dict[str, dict] = {}
        mass_drift = max(abs(r.M - M0) for r in records) / abs(M0) if M0 != 0 else 0.0
        props["mass_conservation"] = _property(mass_drift, th.mass_rel, mass_drift <= th.mass_rel, cfg.solver.form == "flux")
        ent = monitor.max_increase / abs(H0) if H0 != 0 else monitor.max_increase
        props["entropy_monotone"] = _property(ent, th.entropy_rel, ent <= th.entropy_rel)
        fmax = float(np.max(f0))
        neg = max(0.0, -monitor.min_f) / fmax if fmax > 0 else 0.0
        props["positivity"] = _property(neg, th.positivity_rel, neg <= th.positivity_rel)
        Kmin = min(r.K_hat for r in records)
        props["ellipticity"] = _property(Kmin, 0.0, Kmin > 0, M0 > 0)
        if reports:
            mism = max(r.mismatch for r in reports)
            props["identity"] = _property(mism, th.identity_rel, mism <= th.identity_rel)
            viol = max(r.coercivity_violation / r.scale if r.scale > 0 else r.coercivity_violation for r in reports)
            props["coercivity"] = _property(viol, th.coercivity_rel, viol <= th.coercivity_rel)
        good = [f for f in fits if f is not None]
        if fits[0] is not None and len(good) == len(fits):
            drift = max(f.sigma_hat for f in fits) - fits[0].sigma_hat
            props["gevrey_sigma_drift"] = _property(drift, th.sigma_drift, drift <= th.sigma_drift)
            s0 = dgc.sigma_list[0]
            ratio = max(f.C_hat[s0] for f in fits) / fits[0].C_hat[s0] if fits[0].C_hat[s0] > 0 else 1.0
            props["gevrey_constant_ratio"] = _property(ratio, th.gevrey_ratio, ratio <= th.gevrey_ratio)
        else:
            props["gevrey_sigma_drift"] = _property(None, th.sigma_drift, False, applies=False)
            props["gevrey_constant_ratio"] = _property(None, th.gevrey_ratio, False, applies=False)
        w0 = W[dgc.sigma_list[0]]
        med = statistics.median(w0)
        spread = max(w0) / med if med > 0 else 1.0
        props["qk_spread"] = _property(spread, th.qk_spread, spread <= th.qk_spread, med > 0)

        summary.update(
            {
                "complete": True,
                "steps": monitor.steps,
                "times": times,
                "Q_k": {str(k): q for k, q in zip(ks, Q)},
                "w_k": {f"{sg:g}": w for sg, w in W.items()},
                "initial": {"M": M0, "E": records[0].E, "H": H0},
                "properties": props,
                "passed": all(p["pass"] for p in props.values() if p["applies"]),
            }
        )
    except LandauLabError as exc:
        summary["error"] = f"{type(exc).__name__}: {exc}"
        summary["passed"] = False
        if write and "json" in cfg.output.formats:
            write_json(out / "summary.json", _clean(summary))
        raise

    result = RunResult(out if write else None, _clean(summary), states, records, tables, fits, reports)
    if write:
        _write_artifacts(cfg, out, grid, result)
    return result


def _write_artifacts(cfg: ExperimentConfig, out: Path, grid, res: RunResult) -> None:
    d = grid.d
    sigmas = cfg.diagnostics.sigma_list
    if "csv" in cfg.output.formats:
        write_csv(out / "conservation.csv", dg.ConservationRecord.header(d), (r.as_row() for r in res.records))
        rows = []
        for tab in res.tables:
            for alpha in sorted(tab.entries, key=lambda a: (a.order, a.components)):
                l2, grad = tab.entries[alpha]
                rows.append([tab.t, alpha.order, str(alpha), l2, grad])
        write_csv(out / "norms.csv", ["t", "order", "alpha", "l2", "l2gamma_grad"], rows)
        head = ["t", "sigma_hat", "c_hat", "residual", *[f"C_hat_{s:g}" for s in sigmas]]
        rows = []
        for s, tab, fit in zip(res.states, res.tables, res.fits):
            if fit is None:
                Cs = [dg.gevrey_constant_witness(tab, sg) for sg in sigmas]
                rows.append([s.t, math.nan, math.nan, math.nan, *Cs])
            else:
                rows.append([s.t, fit.sigma_hat, fit.c_hat, fit.residual, *[fit.C_hat[sg] for sg in sigmas]])
        write_csv(out / "gevrey.csv", head, rows)
        head = ["t", "mu", "I", "II", "III", "IV", "I1", "I2", "lhs_fd", "mismatch", "coercivity_violation", "scale", "C2_implied"]
        rows = [
            [r.t, str(r.mu), *[r.terms[k] for k in ("I", "II", "III", "IV")], r.I1, r.I2, r.lhs_fd, r.mismatch,
             r.coercivity_violation, r.scale, r.C2_implied]
            for r in res.identity
        ]
        write_csv(out / "identity.csv", head, rows)
    every = cfg.output.snapshot_every
    if every > 0:
        last = len(res.states) - 1
        for k, s in enumerate(res.states):
            if k % every == 0 or k == last:
                write_snapshot(out / f"snap_{k:04d}.bin", grid, s.f, s.t, cfg.kernel.gamma)
    if "json" in cfg.output.formats:
        write_json(out / "summary.json", res.summary)


def run_experiment(cfg: ExperimentConfig, outdir=None) -> RunResult:
    return evaluate(cfg, outdir, write=True)
