"""End-to-end acceptance criteria, each reported as one PASS/FAIL line."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import brute_map, codebook
from tcra import capacity as cap
from tcra import cli
from tcra import density_evolution as de
from tcra import gf2codes as gf
from tcra import simulator as sim
from tcra.polynomials import DegreePolynomial

pytestmark = pytest.mark.acceptance


def report(capsys, k: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {k:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[k] = line
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def run_cli(argv, out: Path) -> tuple[int, float]:
    t0 = time.perf_counter()
    code = cli.main(argv + ["--out", str(out)])
    return code, time.perf_counter() - t0


def read_csv(path: Path) -> list[dict]:
    lines = [x for x in path.read_text().splitlines() if not x.startswith("#")]
    return list(csv.DictReader(lines))


def test_c01_threshold_regression(tmp_path, capsys):
    parts, ok = [], True
    for name, target in (("tableII_eps0", 0.252), ("tableII_eps01", 0.233)):
        code, dt = run_cli(["threshold", "--design", name], tmp_path / name)
        r = json.loads((tmp_path / name / "threshold.json").read_text())["r_t_star"]
        good = code == 0 and abs(r - target) <= 0.002 and dt < 10
        ok &= good
        parts.append(f"{name} R_t*={r:.4f} (target {target} +/-0.002, {dt:.1f}s)")
    report(capsys, 1, "bundled LDPC design threshold regression", ok, "; ".join(parts))


@pytest.mark.slow
def test_c02_optimizer_recovery(tmp_path, capsys):
    results = []
    for seed in (0, 1, 2):
        out = tmp_path / f"s{seed}"
        code, dt = run_cli(["design-ldpc", "--na", "7", "--eps", "0.1", "--dmax", "13",
                            "--seed", str(seed)], out)
        d = json.loads((out / "design.json").read_text())
        results.append((seed, d["r_t"], dt, code))
    wins = sum(r >= 0.225 for _, r, _, _ in results)
    ok = wins >= 2 and all(dt < 1800 for _, _, dt, _ in results)
    detail = ", ".join(f"seed {s}: {r:.4f} ({dt:.0f}s)" for s, r, dt, _ in results)
    report(capsys, 2, "optimizer recovery", ok, f"{wins}/3 seeds >= 0.225; {detail}")


@pytest.mark.slow
def test_c03_short_code_design(tmp_path, capsys):
    res = {}
    for kind in ("exact", "linear"):
        out = tmp_path / kind
        code, dt = run_cli(["design-short", "--na", "6", "--eps", "0.1",
                            "--profile-kind", kind], out)
        assert code == 0
        d = json.loads((out / "design.json").read_text())
        g = DegreePolynomial.from_json(d["gamma"])
        res[kind] = (d["r_t"], float(g.padded(14)[[3, 4, 13]].sum()), d["meta"], dt)
    r_ex, mass, meta_ex, dt_ex = res["exact"]
    r_lin, mass_lin, meta_lin, dt_lin = res["linear"]
    close = abs(r_lin - r_ex) <= 0.05 * r_ex
    ok = mass >= 0.9 and close
    best = lambda m: max((v, k) for k, v in m["per_code"].items() if v == v)[1]  # noqa: E731
    detail = (f"exact R_t*={r_ex:.4f} mass{{3,4,13}}={mass:.3f} ({dt_ex:.0f}s); "
              f"linear R_t*={r_lin:.4f} ({abs(r_lin - r_ex) / r_ex:.1%} apart, {dt_lin:.0f}s); "
              f"codes exact={best(meta_ex)} linear={best(meta_lin)} (informational)")
    report(capsys, 3, "short-code design", ok, detail)


def test_c04_profile_oracle(capsys):
    t0 = time.perf_counter()
    p7 = gf.exact_profile(gf.hamming(3)).p_e
    ham_ok = p7[3] == 0.2
    code = gf.cyclic_code(gf.CYCLIC_24_14, 24)
    ex = gf.exact_profile(code).p_e
    samples = 100_000
    sa = gf.sampled_profile(code, samples, np.random.default_rng(0)).p_e
    sigma = np.sqrt(np.maximum(ex * (1 - ex), 1e-300) / samples)
    within = np.abs(sa - ex) <= 3 * sigma + 1e-12
    dt = time.perf_counter() - t0
    ok = (ham_ok and (code.n, code.k, code.d_min) == (24, 14, 4) and np.all(ex[:4] == 0)
          and np.all(ex[11:] == 1) and np.all(np.diff(ex) >= 0) and np.all(within) and dt < 300)
    worst = float(np.max(np.abs(sa - ex) / np.maximum(sigma, 1e-300) * (ex * (1 - ex) > 0)))
    report(capsys, 4, "P_E oracle equivalence", ok,
           f"Hamming P_3={float(p7[3])!r}; (24,14,4) monotone, floor/ceiling ok, "
           f"max |sampled-exact| = {worst:.2f} sigma; {dt:.1f}s")


def test_c05_map_oracle(capsys):
    t0 = time.perf_counter()
    checked = 0
    mismatches = 0
    for code in (gf.single_parity_check(3), gf.hamming(3), gf.reed_muller(1, 3)):
        book = codebook(code.h.to_dense())
        for c in book:
            for mask in range(1 << code.n):
                w = c.astype(np.int8).copy()
                w[[bool((mask >> i) & 1) for i in range(code.n)]] = -1
                got, want = gf.map_erase_decode(code, w), brute_map(book, w)
                same = (got is None and want is None) or (
                    got is not None and want is not None and np.array_equal(got, want))
                mismatches += not same
                checked += 1
    dt = time.perf_counter() - t0
    report(capsys, 5, "MAP decoder oracle", mismatches == 0 and dt < 60,
           f"{checked} (codeword, pattern) cases, {mismatches} mismatches, {dt:.1f}s")


def test_c06_capacity_values(capsys):
    ok1 = all(cap.sum_capacity(1, e) == 1 - e for e in (0.0, 0.1, 0.37, 1.0))
    ok2 = abs(cap.sum_capacity(2, 0.0) - 1.5) <= 1e-12
    x = DegreePolynomial.monomial(1)
    dev = max(abs(cap.complexity_constrained_capacity(x, n, e) - cap.orthogonal_capacity(n, e))
              for n in range(1, 21) for e in (0.0, 0.1, 0.5))
    report(capsys, 6, "capacity values", ok1 and ok2 and dev <= 1e-12,
           f"C_1 = 1-eps exact: {ok1}; C(2,0) = {cap.sum_capacity(2, 0.0)!r}; "
           f"max |psi=x - orthogonal| = {dev:.1e}")


def test_c07_erasure_floor(tmp_path, capsys):
    design = tmp_path / "uncoded_x2.json"
    design.write_text(json.dumps({"gamma": "1:2", "epsilon": 0.1, "n_a_star": 3, "r_t": 0.25,
                                  "outer": {"type": "none"}}))
    code, _ = run_cli(["simulate", "--design", str(design), "--n", "1000", "--na", "1,3",
                       "--frames", "1000", "--decoder", "inner-only"], tmp_path / "out")
    assert code == 0
    rows = {int(r["n_a"]): r for r in read_csv(tmp_path / "out" / "sweep.csv")}
    m3, s3 = float(rows[3]["mean_residual"]), float(rows[3]["std"]) / np.sqrt(1000)
    m1, s1 = float(rows[1]["mean_residual"]), float(rows[1]["std"]) / np.sqrt(1000)
    ok3 = m3 >= 0.01 - 3 * s3
    ok1 = 0.01 <= m1 <= 0.013
    report(capsys, 7, "erasure floor", ok3 and ok1,
           f"N_a=3 mean {m3:.5f} >= 0.01-3sigma: {ok3}; N_a=1 mean {m1:.6f} "
           f"(standard error {s1:.1e}) in [0.01, 0.013]: {ok1}")


def test_c08_threshold_behavior(tmp_path, capsys):
    t0 = time.perf_counter()
    code, _ = run_cli(["simulate", "--design", "tableII_eps01", "--n", "1000",
                       "--na", "1-6,9-12", "--frames", "200"], tmp_path)
    dt = time.perf_counter() - t0
    assert code == 0
    rows = {int(r["n_a"]): float(r["mean_residual"]) for r in read_csv(tmp_path / "sweep.csv")}
    low = all(rows[n] < 1e-2 for n in range(1, 7))
    high = all(rows[n] > 1e-1 for n in range(9, 13))
    curve = " ".join(f"{n}:{v:.2g}" for n, v in sorted(rows.items()))
    report(capsys, 8, "threshold behavior", low and high and dt < 1200,
           f"residual by N_a {curve}; {dt:.0f}s")


def test_c09_tandem_dominance(capsys):
    d = de.bundled_design("tableII_eps01")
    n, n_a, frames = 1000, 7, 100
    cfg = sim.FrameConfig.for_design(d, n, n_a)
    code = sim.outer_code(d, n, np.random.default_rng([0, n_a, 1 << 30]))
    subset = True
    joint, tandem = [], []
    for f in range(frames):
        fr = sim.make_frame(d, cfg, code, [0, n_a, f])
        j = sim.joint_decode_ldpc(fr.r, fr.patterns, code, cfg.t_slots)
        t = sim.tandem_decode(fr.r, fr.patterns, code, cfg.t_slots)
        subset &= bool(np.all(j.resolved[t.resolved]))
        joint.append(j.residual)
        tandem.append(t.residual)
    mj, mt = float(np.mean(joint)), float(np.mean(tandem))
    report(capsys, 9, "tandem dominance", subset and mt > mj,
           f"{frames} frames at N_a={n_a}: subset on every frame: {subset}; "
           f"residual tandem {mt:.4f} > joint {mj:.4f}")


def test_c10_property_suites(capsys):
    t0 = time.perf_counter()
    here = Path(__file__).parent
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(here / "test_properties.py")], capture_output=True, text=True,
                          cwd=here.parent)
    dt = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(capsys, 10, "property suites", proc.returncode == 0 and dt < 300, f"{tail}; {dt:.0f}s")
