import json
import math
import struct

import numpy as np
import pytest

from landaulab import VelocityGrid
from landaulab.errors import CatalogError, ConfigError, SnapshotError
from landaulab.experiment import build_scenario, parse_config, read_snapshot, run_experiment, serialize, write_snapshot
from landaulab.experiment.cli import main
from landaulab.experiment.config import config_from_dict, with_overrides
from landaulab.experiment.io import parse_snapshot, read_csv, snapshot_bytes
from landaulab.experiment.scenarios import CATALOG

MINIMAL = """
[grid]
d = 2
N = 64
L = 16.0

[kernel]
gamma = 0.0

[solver]
t_end = 0.1

[scenario]
name = "maxwellian"
"""

# a narrow, cheap run for artifact and CLI tests
SMALL = """
[grid]
d = 2
N = 32
L = 8.0

[kernel]
gamma = 0.0

[solver]
t_end = {t_end}
output_every = 2

[diagnostics]
m_max = 3

[scenario]
name = "gaussian_mixture"
params = {{ T = 0.2, separation = 1.0 }}

[output]
snapshot_every = 1
"""


def small(t_end=0.005):
    return SMALL.format(t_end=t_end)


# config ------------------------------------------------------------------------------


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.grid.d, cfg.grid.N, cfg.grid.L) == (2, 64, 16.0)
    assert cfg.solver.form == "flux" and cfg.solver.cfl == 0.5 and cfg.solver.output_every == 10
    assert cfg.diagnostics.B == 4 and cfg.diagnostics.sigma_list == [1.0, 2.0]
    assert cfg.thresholds.mass_rel == 1e-12 and cfg.thresholds.identity_rel == 1e-4
    assert cfg.make_kernel().truncation(cfg.make_grid()) == 8.0


def test_gamma_out_of_scope_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace("gamma = 0.0", "gamma = 1.5"))
    assert info.value.key == "kernel.gamma"


def test_round_trip():
    cfg = parse_config(small())
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert serialize(again) == serialize(cfg)


@pytest.mark.parametrize(
    "edit, key",
    [
        (("[solver]", "[solver]\ncfll = 0.3"), "solver.cfll"),
        (("t_end = 0.1", ""), "solver.t_end"),
        (("N = 64", 'N = "64"'), "grid.N"),
        (('name = "maxwellian"', 'name = "maxwellian"\n[scenario.params]\nT = -1.0'), "scenario.params.T"),
        (('name = "maxwellian"', 'name = "maxwellian"\n[scenario.params]\nwidth = 1.0'), "scenario.params.width"),
        (("[kernel]", "[kernal]\n[kernel]"), "kernal"),
    ],
)
def test_errors_name_the_key(edit, key):
    with pytest.raises(ConfigError) as info:
        parse_config(MINIMAL.replace(*edit))
    assert info.value.key == key


def test_unknown_scenario():
    with pytest.raises((ConfigError, CatalogError)):
        parse_config(MINIMAL.replace('"maxwellian"', '"plasma"'))
    with pytest.raises(CatalogError):
        build_scenario(VelocityGrid(2, 16, 8.0), "plasma")


def test_ints_accepted_for_floats():
    cfg = parse_config(MINIMAL.replace("L = 16.0", "L = 16"))
    assert cfg.grid.L == 16.0 and isinstance(cfg.grid.L, float)


def test_overrides():
    cfg = with_overrides(parse_config(MINIMAL), {"kernel.gamma": 1, "grid.N": 128})
    assert cfg.kernel.gamma == 1.0 and cfg.grid.N == 128
    with pytest.raises(ConfigError) as info:
        with_overrides(cfg, {"grid.N": 32})
    assert info.value.key == "diagnostics.m_max"
    with pytest.raises(ConfigError):
        with_overrides(cfg, {"kernel.gama": 1})


def test_config_from_dict_matches_text():
    text = parse_config(MINIMAL)
    data = {
        "grid": {"d": 2, "N": 64, "L": 16.0},
        "kernel": {"gamma": 0.0},
        "solver": {"t_end": 0.1},
        "scenario": {"name": "maxwellian"},
    }
    assert config_from_dict(data) == text


# scenarios -----------------------------------------------------------------------------


def test_maxwellian_moments():
    g = VelocityGrid(3, 64, 20.0)
    m = g.moments(build_scenario(g, "maxwellian", {"M0": 1, "T": 1}))
    assert abs(m.mass - 1) < 1e-10 and np.max(np.abs(m.momentum)) < 1e-10 and abs(m.energy - 1.5) < 1e-10


def test_zero_separation_mixture_is_gaussian():
    g = VelocityGrid(2, 32, 8.0)
    mix = build_scenario(g, "gaussian_mixture", {"T": 0.3, "separation": 0.0})
    single = build_scenario(g, "maxwellian", {"T": 0.3})
    assert np.allclose(mix, single, rtol=1e-14, atol=0)


def test_anisotropic_covariance():
    g = VelocityGrid(2, 64, 20.0)
    m = g.moments(build_scenario(g, "anisotropic_gaussian", {"M0": 1.0, "T1": 2.0, "T2": 1.0}))
    assert np.allclose(m.second, np.diag([2.0, 1.0]), atol=1e-10)


def test_bump_is_compact_and_normalised():
    g = VelocityGrid(2, 64, 8.0)
    f = build_scenario(g, "bump", {"radius": 1.5})
    assert g.integrate(f) == pytest.approx(1.0, rel=1e-14)
    assert np.all(f[g.speed_sq >= 1.5**2] == 0) and np.all(f >= 0)


def test_catalog_is_deterministic():
    g = VelocityGrid(2, 16, 8.0)
    for name in CATALOG:
        assert np.array_equal(build_scenario(g, name), build_scenario(g, name))


# snapshots -----------------------------------------------------------------------------


def test_snapshot_round_trip(tmp_path):
    g = VelocityGrid(3, 8, 5.0)
    f = np.random.default_rng(0).standard_normal(g.shape)
    p = write_snapshot(tmp_path / "s.bin", g, f, 0.25, 0.5)
    head, back = read_snapshot(p)
    assert (head.d, head.N, head.L, head.t, head.gamma) == (3, 8, 5.0, 0.25, 0.5)
    assert back.tobytes() == f.tobytes()
    assert p.read_bytes()[:4] == b"LAND"
    assert len(p.read_bytes()) == 4 + 3 * 4 + 3 * 8 + 8 * 8**3


def test_snapshot_header_checks():
    g = VelocityGrid(2, 8, 5.0)
    raw = snapshot_bytes(g, np.zeros(g.shape), 0.0, 0.0)
    with pytest.raises(SnapshotError):
        parse_snapshot(b"XXXX" + raw[4:])
    with pytest.raises(SnapshotError):
        parse_snapshot(raw[:4] + struct.pack("<I", 2) + raw[8:])
    with pytest.raises(SnapshotError):
        parse_snapshot(raw[:-8])


# runner --------------------------------------------------------------------------------


def test_minimal_maxwellian_run(tmp_path):
    res = run_experiment(parse_config(MINIMAL), tmp_path / "m")
    props = json.loads((tmp_path / "m" / "summary.json").read_text())["properties"]
    assert props["mass_conservation"]["pass"] and props["mass_conservation"]["value"] <= 1e-12
    assert res.summary["complete"]


def test_t_end_zero_outputs(tmp_path):
    res = run_experiment(parse_config(small(0.0)), tmp_path / "z")
    head, rows = read_csv(tmp_path / "z" / "conservation.csv")
    assert head == ["t", "M", "Ev1", "Ev2", "E", "H", "min_f", "K_hat", "mass_leak"]
    assert len(rows) == 1 and float(rows[0][0]) == 0.0
    assert float(rows[0][1]) == res.records[0].M
    assert sorted(p.name for p in (tmp_path / "z").glob("snap_*.bin")) == ["snap_0000.bin"]


def test_rerun_is_byte_identical(tmp_path):
    cfg = parse_config(small())
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("conservation.csv", "norms.csv", "gevrey.csv", "identity.csv", "summary.json", "snap_0002.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_csv_schemas(tmp_path):
    run_experiment(parse_config(small()), tmp_path / "c")
    head, rows = read_csv(tmp_path / "c" / "norms.csv")
    assert head == ["t", "order", "alpha", "l2", "l2gamma_grad"]
    assert len(rows) == 3 * 10  # three outputs, 1 + 2 + 3 + 4 indices up to order 3
    head, _ = read_csv(tmp_path / "c" / "gevrey.csv")
    assert head == ["t", "sigma_hat", "c_hat", "residual", "C_hat_1", "C_hat_2"]
    head, rows = read_csv(tmp_path / "c" / "identity.csv")
    assert head[:6] == ["t", "mu", "I", "II", "III", "IV"]
    assert len(rows) == 2 * 2  # interior outputs x default indices (0 and e1)


def test_failed_run_marks_summary_incomplete(tmp_path):
    cfg = with_overrides(parse_config(small()), {"scenario.params.T": 1e-4})
    with pytest.raises(Exception):
        run_experiment(cfg, tmp_path / "bad")
    summary = json.loads((tmp_path / "bad" / "summary.json").read_text())
    assert summary["complete"] is False and "error" in summary


# CLI -----------------------------------------------------------------------------------


def test_cli_verify_combinatorics(capsys):
    assert main(["verify-combinatorics", "--max-order", "20", "--sigma", "2"]) == 0
    assert "pass" in capsys.readouterr().out


def test_cli_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.toml")]) == 2
    assert "not found" in capsys.readouterr().err


def test_cli_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 2


def test_cli_help_documents_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify-combinatorics", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--max-order", "--sigma", "--dim", "--count-order", "--fit-order"):
        assert flag in out


def test_cli_fit_gevrey_on_gaussian(tmp_path, capsys):
    g = VelocityGrid(2, 64, 8.0)
    p = write_snapshot(tmp_path / "gaussian.bin", g, build_scenario(g, "maxwellian", {"T": 0.05}), 0.0, 0.0)
    assert main(["fit-gevrey", str(p)]) == 0
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("sigma_hat"))
    assert float(line.split("=")[1]) <= 1.0


def test_cli_fit_gevrey_bad_snapshot(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope")
    assert main(["fit-gevrey", str(bad)]) == 2


def test_cli_run_and_check_identity(tmp_path, capsys):
    cfgp = tmp_path / "c.toml"
    cfgp.write_text(small())
    assert main(["run", str(cfgp), "--output", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "summary.json").is_file()
    assert main(["check-identity", str(cfgp), "--mu", "1,0"]) == 0
    assert "mismatch" in capsys.readouterr().out
    assert main(["check-identity", str(cfgp), "--mu", "1,0,0"]) == 2


def test_cli_sweep(tmp_path):
    cfgp = tmp_path / "c.toml"
    cfgp.write_text(small())
    code = main(["sweep", str(cfgp), "--param", "gamma=0,1", "--output", str(tmp_path / "sw")])
    assert code in (0, 1)
    done = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert len(done) == 2
    for d in ("gamma=0", "gamma=1"):
        assert (tmp_path / "sw" / d / "summary.json").is_file()
    assert main(["sweep", str(cfgp), "--param", "gamma"]) == 2
