import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from vmbif.cli import main
from vmbif.config import derived_summary, load_config, parse_config
from vmbif.errors import ConfigError, DomainError
from vmbif.output import (fmt_float, read_field_dump, update_summary,
                          write_csv, write_field_dump)

from conftest import C1_2, C1_3

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "omega3.cfg"

BASE = """\
family = exponential
c_light = 10
domain.a = 1
domain.b = 1
domain.nx = 8
domain.ny = 8
lambda.half_width = 400
lambda.grid = 1 60 16
a_curve = 0 1
d1_curve = 1
mu0.index = 1
species.q = -1
species.m = 1
species.k = 1
species.alpha_curve = 1
species.q = 1
species.m = 2
species.k = 1
species.alpha_curve = 1
species.q = 1
species.m = 1
species.k = -3
species.alpha_curve = 2
"""


def _swap(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new)


# ---------------------------------------------------------------------------
# parsing and validation


def test_base_text_parses():
    cfg = parse_config(BASE)
    assert cfg.dom.nx == 8
    assert cfg.mu0_index == 1
    assert cfg.mu0_value is None
    assert len(cfg.curve.species) == 3


@pytest.mark.parametrize("mutate, fragment", [
    (lambda t: _swap(t, "c_light = 10", "c_light 10"), "key = value"),
    (lambda t: _swap(t, "c_light = 10", "c_light ="), "empty value"),
    (lambda t: t + "bogus = 3\n", "unknown key"),
    (lambda t: t + "c_light = 20\n", "duplicate key"),
    (lambda t: _swap(t, "family = exponential", "family = gaussian"),
     "not available"),
    (lambda t: _swap(t, "lambda.grid = 1 60 16", "lambda.grid = 1 60"),
     "start stop count"),
    (lambda t: _swap(t, "lambda.grid = 1 60 16", "lambda.grid = 60 1 16"),
     "must increase"),
    (lambda t: _swap(t, "lambda.half_width = 400",
                     "lambda.half_width = 30"), "strictly inside"),
    (lambda t: t + "mu0.value = 19.7\n", "exactly one"),
    (lambda t: _swap(t, "mu0.index = 1\n", ""), "exactly one"),
    (lambda t: _swap(t, "mu0.index = 1", "mu0.index = 0"), "1-based"),
    (lambda t: t + "tol.root = -1\n", "must be positive"),
    (lambda t: t + "continuation.sides = sideways\n", "both/plus/minus"),
    (lambda t: t + "continuation.xi_step = 0\n", "must be positive"),
    (lambda t: t + "spectral.count = 0\n", "must be positive"),
    (lambda t: _swap(t, "species.q = -1", "species.q = 2"),
     "negative charge"),
    (lambda t: _swap(t, "c_light = 10\n", ""), "missing required key"),
    (lambda t: _swap(t, "domain.nx = 8", "domain.nx = 0"), "domain:"),
    (lambda t: _swap(t, "a_curve = 0 1", "a_curve = 0 1 0 0 0 0 0 1"),
     "degree 6"),
])
def test_rejects_malformed_text(mutate, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(mutate(BASE))


def test_species_block_must_open_with_charge():
    text = _swap(BASE, "species.q = -1\nspecies.m = 1",
                 "species.m = 1\nspecies.q = -1")
    with pytest.raises(ConfigError, match="start with species.q"):
        parse_config(text)


def test_duplicate_key_within_species_block():
    text = _swap(BASE, "species.m = 2", "species.m = 2\nspecies.m = 2")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(text)


def test_error_carries_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("family = exponential\nbroken line\n")
    assert "line 2" in str(err.value)
    assert err.value.line == 2


def test_comments_and_blanks_are_skipped():
    text = "# leading comment\n\n" + BASE.replace(
        "c_light = 10", "c_light = 10   # trailing comment")
    cfg = parse_config(text)
    assert cfg.curve.c_light == 10.0


def test_shipped_config_loads_with_frozen_profile_constants():
    cfg = load_config(CONFIG)
    assert cfg.dom.nx == cfg.dom.ny == 32
    assert cfg.family.kind == "exponential"
    assert cfg.curve.c_light == 10.0
    assert cfg.mu0_index == 1
    assert cfg.spectral_count == 12
    assert cfg.sides == (+1, -1)
    assert len(cfg.lam_grid) == 64
    assert cfg.lam_grid[0] == 1.0 and cfg.lam_grid[-1] == 60.0
    qs = [s.q for s in cfg.curve.species]
    assert qs == [-1.0, 1.0, 1.0]
    assert cfg.curve.species[1].c1 == pytest.approx(C1_2, abs=1e-15)
    assert cfg.curve.species[2].c1 == pytest.approx(C1_3, abs=1e-15)


def test_derived_summary_reports_reference_scales():
    cfg = load_config(CONFIG)
    d = derived_summary(cfg)
    assert d["mu"] == pytest.approx(-8.0 * np.pi, rel=1e-15)
    assert d["eta"] == pytest.approx(4.0 * np.pi, rel=1e-15)
    assert d["nu"] == pytest.approx(4.0 * np.pi / 100.0, rel=1e-15)
    assert d["phi0"] == 0.0 and d["psi0"] == 0.0
    ls = [s["l"] for s in d["species"]]
    assert ls == pytest.approx([1.0, -0.5, -2.0], rel=1e-14)
    dz = [s["d"][2] for s in d["species"]]
    assert dz == pytest.approx([1.0, -2.0, 3.0], rel=1e-14)
    bz = [s["beta"][2] for s in d["species"]]
    assert bz == pytest.approx([0.5, -1.0, 0.75], rel=1e-14)


def test_missing_file_raises_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.cfg")


# ---------------------------------------------------------------------------
# artifact helpers


def test_fmt_float_round_trips():
    for x in (0.1, 1.0 / 3.0, -2.5e300, 7.1e-17, 0.0, 19.73920880217872):
        assert float(fmt_float(x)) == x


def test_write_csv_cell_forms(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b", "c"],
              [(True, np.int64(7), 0.1), (False, 1, 2.0)])
    assert path.read_text() == (
        "a,b,c\n1,7,0.10000000000000001\n0,1,2\n")


def test_update_summary_sections_accumulate(tmp_path):
    path = tmp_path / "summary.json"
    update_summary(path, "one", {"x": np.float64(1.5), "arr": np.arange(3)})
    update_summary(path, "two", {"y": True})
    update_summary(path, "one", {"x": 2.0})
    data = json.loads(path.read_text())
    assert data["one"] == {"x": 2.0}
    assert data["two"] == {"y": True}


def test_field_dump_requires_grid_array(tmp_path):
    with pytest.raises(DomainError):
        write_field_dump(tmp_path / "d.bin", np.zeros(5), 0.1, 1.0)


def test_field_dump_layout(tmp_path):
    path = tmp_path / "d.bin"
    arr = np.arange(6.0).reshape(2, 3)
    write_field_dump(path, arr, 0.25, 3.5)
    raw = path.read_bytes()
    assert len(raw) == 8 + 16 + 6 * 8
    back, h, lam = read_field_dump(path)
    assert np.array_equal(back, arr)
    assert (h, lam) == (0.25, 3.5)


# ---------------------------------------------------------------------------
# command line


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """One scan + branch run against the shipped configuration."""
    out = tmp_path_factory.mktemp("run")
    rc = main(["scan", "--config", str(CONFIG), "--out", str(out)])
    assert rc == 0
    rc = main(["branch", "--config", str(CONFIG), "--out", str(out)])
    assert rc == 0
    return out


def test_check_passes_on_shipped_config(capsys):
    rc = main(["check", "--config", str(CONFIG)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "FAIL" not in out
    assert out.count("pass") >= 4
    assert "multiplicity 1 (odd)" in out


def test_scan_requires_out():
    assert main(["scan", "--config", str(CONFIG)]) == 2


def test_missing_config_exits_with_usage_code(tmp_path, capsys):
    rc = main(["check", "--config", str(tmp_path / "gone.cfg")])
    assert rc == 2
    assert "configuration error" in capsys.readouterr().err


def test_malformed_config_exits_with_usage_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(BASE + "bogus = 3\n")
    rc = main(["check", "--config", str(bad)])
    assert rc == 2
    assert "unknown key" in capsys.readouterr().err


def test_mu0_override_out_of_range(tmp_path, capsys):
    rc = main(["check", "--config", str(CONFIG), "--mu0-index", "99"])
    assert rc == 2
    assert "spectral.count" in capsys.readouterr().err


def test_branch_needs_scan_artifacts(tmp_path, capsys):
    rc = main(["branch", "--config", str(CONFIG), "--out", str(tmp_path)])
    assert rc == 2
    assert "run the scan subcommand first" in capsys.readouterr().err


def test_scan_artifacts(run_dir):
    assert (run_dir / "scan.csv").exists()
    assert (run_dir / "scan.png").exists()
    lines = (run_dir / "scan.csv").read_text().splitlines()
    assert lines[0] == "lambda,chi_minus_exact,chi_minus_asym,g," \
                       "condition_I,condition_II,is_root"
    roots = [ln for ln in lines[1:] if ln.endswith(",1")]
    assert len(roots) == 1
    lam0 = float(roots[0].split(",")[0])
    assert lam0 == pytest.approx(47.38, abs=0.1)

    summary = json.loads((run_dir / "summary.json").read_text())
    assert {"config", "check", "scan"} <= set(summary)
    entry = summary["scan"]["roots"][0]
    assert entry["certified"] is True
    assert entry["multiplicity"] == 1
    assert entry["lambda0"] == pytest.approx(lam0, rel=1e-12)


def test_branch_artifacts(run_dir):
    for side in ("plus", "minus"):
        table = run_dir / f"branch_1_{side}.csv"
        lines = table.read_text().splitlines()
        assert lines[0] == "lambda,xi,u_l2,residual,iterations"
        assert len(lines) == 9
        for ln in lines[1:]:
            vals = ln.split(",")
            assert float(vals[3]) < 1e-9
    assert (run_dir / "branch_1.png").exists()
    assert (run_dir / "fields_1_plus.png").exists()
    dumps = sorted((run_dir / "fields").glob("*.bin"))
    assert len(dumps) == 2 * 2 * 8
    arr, h, lam = read_field_dump(dumps[0])
    assert arr.shape == (33, 33)
    assert h == pytest.approx(1.0 / 32.0)
    assert lam > 0

    summary = json.loads((run_dir / "summary.json").read_text())
    branch = summary["branch_1"]
    assert set(branch["sides"]) == {"plus", "minus"}
    plus = branch["sides"]["plus"]
    assert plus["status"] == "ok"
    assert plus["tangent_deg"] < 10.0
    assert plus["amplitude_slope"] == pytest.approx(1.0, abs=0.2)
    assert plus["maxwell"]["curl_e_sup"] < 1e-12
    assert plus["boundary_rho"] < 1e-10
    assert plus["subspace_max"] == 0.0


def test_scan_without_roots_notes_it(tmp_path, capsys):
    text = CONFIG.read_text().replace("lambda.grid = 1 60 64",
                                      "lambda.grid = 1 10 8")
    cfg = tmp_path / "short.cfg"
    cfg.write_text(text)
    rc = main(["scan", "--config", str(cfg), "--out",
               str(tmp_path / "out"), "--no-figures"])
    assert rc == 0
    assert "no sign change" in capsys.readouterr().out
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["scan"]["roots"] == []
    lines = (tmp_path / "out" / "scan.csv").read_text().splitlines()
    assert all(ln.endswith(",0") for ln in lines[1:])


def test_summary_echoes_config_text(run_dir):
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["config"]["raw"] == CONFIG.read_text()
    assert summary["config"]["path"] == str(CONFIG)


def test_no_figures_flag(tmp_path):
    rc = main(["scan", "--config", str(CONFIG), "--out", str(tmp_path),
               "--no-figures"])
    assert rc == 0
    assert (tmp_path / "scan.csv").exists()
    assert not (tmp_path / "scan.png").exists()


def test_seed_and_threads_echoed(run_dir, tmp_path):
    rc = main(["scan", "--config", str(CONFIG), "--out", str(tmp_path),
               "--seed", "5", "--threads", "2", "--no-figures"])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["seed"] == 5
    assert summary["config"]["threads"] == 2
    # the sweep is deterministic whatever the worker count
    assert (tmp_path / "scan.csv").read_bytes() == \
        (run_dir / "scan.csv").read_bytes()


def test_reruns_are_byte_identical(run_dir, tmp_path):
    rc = main(["scan", "--config", str(CONFIG), "--out", str(tmp_path),
               "--no-figures"])
    assert rc == 0
    rc = main(["branch", "--config", str(CONFIG), "--out", str(tmp_path),
               "--no-figures"])
    assert rc == 0
    assert filecmp.cmp(run_dir / "scan.csv", tmp_path / "scan.csv",
                       shallow=False)
    for side in ("plus", "minus"):
        assert filecmp.cmp(run_dir / f"branch_1_{side}.csv",
                           tmp_path / f"branch_1_{side}.csv",
                           shallow=False)
    for dump in sorted((run_dir / "fields").glob("*.bin")):
        twin = tmp_path / "fields" / dump.name
        assert dump.read_bytes() == twin.read_bytes()


def test_branch_point_selector_bounds(run_dir, capsys):
    rc = main(["branch", "--config", str(CONFIG), "--out", str(run_dir),
               "--point", "4", "--no-figures"])
    assert rc == 2
    assert "out of range" in capsys.readouterr().err
