"""Experiment engine, CLI exit codes, and golden-file regression."""

import json
import math
import pathlib

import numpy as np
import pytest

from isocap.domains import ellipsoid
from isocap.harness import (ExperimentConfig, fit_loglog, run_asym, run_sweep,
                            scatter_svg, verdict_for)
from isocap.harness.cli import main as cli_main

GOLDEN_DIR = pathlib.Path(__file__).parent / "goldens" / "v1"


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def test_verdict_boundaries():
    assert verdict_for(1.0, 0.1) == "holds"
    assert verdict_for(0.1, 0.1) == "holds-within-error"
    assert verdict_for(0.0, 0.1) == "holds-within-error"
    assert verdict_for(-0.1, 0.1) == "holds-within-error"
    assert verdict_for(-0.1000001, 0.1) == "violated"
    assert verdict_for(-1.0, 0.0) == "violated"
    assert verdict_for(1e-300, 0.0) == "holds"


def test_fit_loglog_recovers_power_law():
    x = np.array([0.01, 0.02, 0.05, 0.1, 0.2])
    y = 3.5 * x**2.25
    slope, intercept, half = fit_loglog(x, y)
    assert slope == pytest.approx(2.25, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.5), abs=1e-12)
    assert half == pytest.approx(0.0, abs=1e-10)


def test_scatter_svg_deterministic_without_timestamp():
    x, y = [1.0, 2.0, 3.0], [2.0, 3.9, 6.1]
    a = scatter_svg(x, y, "t", "x", "y", timestamp=False)
    b = scatter_svg(x, y, "t", "x", "y", timestamp=False)
    assert a == b
    assert a.startswith("<svg")
    assert "generated" not in a
    assert "<circle" in a
    stamped = scatter_svg(x, y, "t", "x", "y", timestamp=True)
    assert "generated" in stamped
    with pytest.raises(ValueError):
        scatter_svg([], [], "t", "x", "y")


def test_run_asym_panel_keys():
    out = run_asym(ellipsoid(0.2))
    for key in ("fraenkel", "alpha", "symdiff_origin", "annulus_lower_bound"):
        assert key in out
        float(out[key])  # repr'd floats parse back
    assert float(out["fraenkel"]) == pytest.approx(0.4142, abs=1e-3)
    out_rel = run_asym(ellipsoid(0.2), outer_radius=2.0)
    assert "alpha_R" in out_rel


# ---------------------------------------------------------------------------
# engine-level sweep behaviour
# ---------------------------------------------------------------------------


def test_run_sweep_threads_do_not_change_bytes(tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    a_dir.mkdir(), b_dir.mkdir()
    spec_args = dict(variant="random_star", count=3, amplitude=0.1, seed=9)
    from isocap.domains import FamilySpec

    cfg_a = ExperimentConfig(out_dir=str(a_dir), threads=1, timestamp=False,
                             family=FamilySpec(**spec_args))
    cfg_b = ExperimentConfig(out_dir=str(b_dir), threads=3, timestamp=False,
                             family=FamilySpec(**spec_args))
    recs_a, summary_a, paths_a = run_sweep(cfg_a)
    recs_b, summary_b, paths_b = run_sweep(cfg_b)
    assert len(recs_a) == 3
    assert summary_a["count"] == 3
    assert summary_a == summary_b
    for key in ("csv", "json", "svg"):
        assert pathlib.Path(paths_a[key]).read_bytes() == \
            pathlib.Path(paths_b[key]).read_bytes()


def test_run_sweep_header_and_verdicts(tmp_path):
    from isocap.domains import FamilySpec

    cfg = ExperimentConfig(out_dir=str(tmp_path), timestamp=False,
                           family=FamilySpec("random_star", 2,
                                             amplitude=0.1, seed=4))
    _, summary, paths = run_sweep(cfg)
    lines = pathlib.Path(paths["csv"]).read_text().splitlines()
    assert lines[0] == ("domain_id,eps_or_t,volume,deficit,deficit_err,"
                        "fraenkel,alpha,hhalf,ratio,verdict")
    assert len(lines) == 3
    assert summary["failures"] == []
    assert all(line.endswith(("holds", "holds-within-error")) for line in lines[1:])


# ---------------------------------------------------------------------------
# golden-file regression through the CLI
# ---------------------------------------------------------------------------

GOLDEN_CASES = [
    pytest.param(["spectrum", "--basename", "spectrum"],
                 ["spectrum.csv", "spectrum.json"], id="spectrum"),
    pytest.param(["fuglede", "--degree", "2", "--order", "0",
                  "--ladder", "0.02,0.01,0.005",
                  "--basename", "fuglede_y20_abs"],
                 ["fuglede_y20_abs.csv", "fuglede_y20_abs.json"],
                 id="fuglede-abs"),
    pytest.param(["fuglede", "--degree", "1", "--order", "0",
                  "--mode", "rel", "--R", "2",
                  "--ladder", "0.02,0.01,0.005",
                  "--basename", "fuglede_y10_rel"],
                 ["fuglede_y10_rel.csv", "fuglede_y10_rel.json"],
                 id="fuglede-rel"),
    pytest.param(["profile", "--basename", "profile"],
                 ["profile.csv", "profile.json"], id="profile"),
    pytest.param(["sweep", "--family", "random_star", "--count", "4",
                  "--amplitude", "0.12", "--seed", "5", "--no-timestamp",
                  "--basename", "sweep_random"],
                 ["sweep_random.csv", "sweep_random.json", "sweep_random.svg"],
                 id="sweep-random"),
    pytest.param(["truncation", "--walks", "20000", "--seed", "3",
                  "--basename", "truncation"],
                 ["truncation.json"], id="truncation"),
]


@pytest.mark.parametrize("args,files", GOLDEN_CASES)
def test_golden_regression(tmp_path, capsys, args, files):
    code = cli_main(args + ["--out-dir", str(tmp_path)])
    capsys.readouterr()
    assert code == 0
    for name in files:
        got = (tmp_path / name).read_bytes()
        want = (GOLDEN_DIR / name).read_bytes()
        assert got == want, f"{name} drifted from goldens/v1"


# ---------------------------------------------------------------------------
# CLI exit codes and error reporting
# ---------------------------------------------------------------------------


def test_cli_cap_ball_json(capsys):
    assert cli_main(["cap", "--ball", "1.0"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert float(payload["capacity_normalized"]) == pytest.approx(
        4.0 * math.pi, rel=1e-12)
    assert abs(float(payload["deficit"])) < 1e-9
    assert payload["mode"] == "abs"


def test_cli_config_error_is_machine_readable(capsys):
    assert cli_main(["cap", "--ball", "-1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2
    assert err["error"] in ("config", "geometry")
    assert err["message"]


def test_cli_solver_error_exit_code(capsys):
    # the walk-on-spheres solver has no relative mode
    code = cli_main(["cap", "--ball", "1", "--solver", "wos",
                     "--walks", "1000", "--mode", "rel", "--R", "2"])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 3


def test_cli_missing_config_file(capsys):
    assert cli_main(["sweep", "--config", "/nonexistent/run.ini"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2


def test_cli_empty_family(tmp_path, capsys):
    code = cli_main(["sweep", "--family", "random_star", "--count", "0",
                     "--out-dir", str(tmp_path)])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2


def test_cli_malformed_domain_file(tmp_path, capsys):
    bad = tmp_path / "bad.dom"
    bad.write_text("not a domain\n")
    assert cli_main(["cap", "--domain", str(bad)]) == 2
    capsys.readouterr()


def test_cli_config_layering_and_override(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[common]\n"
        "seed = 5\n"
        "threads = 1\n"
        "no-timestamp = true\n"
        "[sweep]\n"
        "family = random_star\n"
        "count = 2\n"
        "amplitude = 0.1\n")
    flags_dir, cfg_dir, over_dir = (tmp_path / n for n in ("a", "b", "c"))
    assert cli_main(["sweep", "--family", "random_star", "--count", "2",
                     "--amplitude", "0.1", "--seed", "5", "--no-timestamp",
                     "--out-dir", str(flags_dir)]) == 0
    assert cli_main(["sweep", "--config", str(ini),
                     "--out-dir", str(cfg_dir)]) == 0
    assert cli_main(["sweep", "--config", str(ini), "--seed", "6",
                     "--out-dir", str(over_dir)]) == 0
    capsys.readouterr()
    flags = (flags_dir / "sweep.csv").read_bytes()
    from_cfg = (cfg_dir / "sweep.csv").read_bytes()
    overridden = (over_dir / "sweep.csv").read_bytes()
    assert flags == from_cfg
    assert overridden != flags
