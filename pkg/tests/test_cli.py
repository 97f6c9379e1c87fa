from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from tcra import cli

GOLDEN = Path(__file__).parent / "golden"
UPDATE = bool(os.environ.get("TCRA_UPDATE_GOLDEN"))

CASES = {
    "threshold": ["threshold", "--design", "tableII_eps01", "--users", "--trajectory"],
    "threshold_tandem": ["threshold", "--design", "tableII_eps0", "--mode", "tandem"],
    "capacity": ["capacity", "--na", "1-6", "--eps", "0.1", "--q", "0.3", "--mean-active", "6",
                 "--p-outage", "0.1,0.01"],
    "pe_profile": ["pe-profile", "--code", "hamming74", "--kind", "exact"],
    "pe_profile_sampled": ["pe-profile", "--code", "cyclic24", "--kind", "sampled",
                           "--samples", "2000", "--seed", "4"],
    "design_ldpc": ["design-ldpc", "--na", "3", "--eps", "0.1", "--dmax", "3",
                    "--generations", "2", "--population", "6", "--seed", "1"],
    "design_short": ["design-short", "--na", "3", "--eps", "0.1", "--dmax", "3",
                     "--codes", "hamming:3;spc:4", "--generations", "2", "--population", "6"],
    "simulate": ["simulate", "--design", "tableII_eps01", "--n", "200", "--na", "6-7",
                 "--frames", "3", "--seed", "2", "--trace", "TRACE"],
}


def _run(name, argv, out: Path):
    argv = [str(out / "trace.jsonl") if a == "TRACE" else a for a in argv]
    code = cli.main(argv + ["--out", str(out)])
    return code


def _outputs(out: Path) -> dict[str, str]:
    return {p.name: p.read_text() for p in sorted(out.iterdir())
            if p.name != "manifest.json" and not p.name.startswith(".")}


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name, tmp_path):
    assert _run(name, CASES[name], tmp_path) == 0
    got = _outputs(tmp_path)
    assert got, "no output files"
    gdir = GOLDEN / name
    if UPDATE:
        gdir.mkdir(parents=True, exist_ok=True)
        for f in gdir.iterdir():
            f.unlink()
        for fname, text in got.items():
            (gdir / fname).write_text(text)
    want = {p.name: p.read_text() for p in sorted(gdir.iterdir())}
    assert got == want


def test_rerun_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = CASES["simulate"]
    assert _run("s", argv, a) == 0 and _run("s", argv, b) == 0
    assert _outputs(a) == _outputs(b)
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    for m in (ma, mb):
        m.pop("timestamp"), m.pop("wall_time_s"), m["config"].pop("trace")
    assert ma == mb


def test_csv_header_carries_digest(tmp_path):
    _run("c", CASES["capacity"], tmp_path)
    dig = json.loads((tmp_path / "manifest.json").read_text())["config_digest"]
    for p in tmp_path.glob("*.csv"):
        assert p.read_text().splitlines()[0] == f"# tcra {cli.__version__} manifest {dig}"


def test_threshold_summary(capsys):
    assert cli.main(["threshold", "--design", "tableII_eps01"]) == 0
    out = capsys.readouterr().out
    line = [x for x in out.splitlines() if x.startswith("R_t* = ")][0]
    assert abs(float(line.split()[2]) - 0.2389) < 1e-3


def test_capacity_single_user(capsys):
    assert cli.main(["capacity", "--na", "1", "--eps", "0"]) == 0
    rows = [x for x in capsys.readouterr().out.splitlines() if x and x[0].isdigit()]
    assert rows[0].split(",")[1] == "1"


def test_pe_profile_hamming(capsys):
    assert cli.main(["pe-profile", "--code", "hamming74", "--kind", "exact"]) == 0
    rows = dict(x.split(",")[:2] for x in capsys.readouterr().out.splitlines()
                if x and x[0].isdigit())
    assert float(rows["3"]) == pytest.approx(0.2, abs=1e-12)


def test_pe_profile_strict_budget():
    assert cli.main(["pe-profile", "--code", "rm:2,5", "--strict"]) == cli.EXIT_INFEASIBLE


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"na": "2", "eps": 0.0}))
    assert cli.main(["capacity", "--config", str(cfg)]) == 0
    assert "1.5" in capsys.readouterr().out
    cfg.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["capacity", "--config", str(cfg)]) == cli.EXIT_CONFIG
    cfg.write_text("{not json")
    assert cli.main(["capacity", "--config", str(cfg)]) == cli.EXIT_CONFIG


def test_bad_inputs_exit_codes(tmp_path, capsys):
    assert cli.main(["nope"]) == cli.EXIT_CONFIG
    assert cli.main(["threshold", "--design", "missing_design"]) == cli.EXIT_CONFIG
    assert cli.main(["threshold", "--bogus-flag"]) == cli.EXIT_CONFIG
    bad = tmp_path / "d.json"
    bad.write_text(json.dumps({"gamma": "1:2", "epsilon": 0.1, "n_a_star": 3, "r_t": 0.9,
                               "outer": {"type": "ldpc", "lambda": "1:3", "rho": "1:6"}}))
    assert cli.main(["threshold", "--design", str(bad), "--users"]) in (cli.EXIT_CONFIG,
                                                                        cli.EXIT_INFEASIBLE)
    assert "error" in capsys.readouterr().err


def test_infeasible_exit_code(tmp_path):
    d = tmp_path / "d.json"
    # single transmissions without an outer code leave a residual eps at every rate
    d.write_text(json.dumps({"gamma": "1:1", "epsilon": 0.1, "n_a_star": 2,
                             "outer": {"type": "none"}}))
    assert cli.main(["threshold", "--design", str(d)]) == cli.EXIT_INFEASIBLE


def test_full_erasure_threshold_is_zero(tmp_path, capsys):
    d = tmp_path / "d.json"
    d.write_text(json.dumps({"gamma": "1:1", "epsilon": 1.0, "n_a_star": 2,
                             "outer": {"type": "ldpc", "lambda": "1:3", "rho": "1:6"}}))
    assert cli.main(["threshold", "--design", str(d)]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("R_t* = 0.000000")
