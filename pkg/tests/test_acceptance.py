"""Exit criteria. Each test records one PASS/FAIL line, printed in the
terminal summary (see conftest.py) or when run as a script."""
import filecmp
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from thermokc.bitcore import BitString
from thermokc.compressor import decompress, lz78_parse
from thermokc.harness import ExperimentConfig, load_config, run_estimator_audit, run_experiment
from thermokc.machine import Program, iter_complete_programs, kraft_sum
from thermokc.stats import chi_square
from thermokc.thermal import Hamiltonian, boltzmann_probabilities, exact_thermo_grid, state_histogram
from thermokc.trajectory import stitch, traj_complexity

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"
RESULTS: dict[str, tuple[bool, str]] = {}


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS[name] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_01_kraft_audit():
    start = time.perf_counter()
    sums = [kraft_sum(L) for L in range(2, 17)]
    elapsed = time.perf_counter() - start
    ok = all(isinstance(s, Fraction) and s <= 1 for s in sums)
    ok &= all(a <= b for a, b in zip(sums, sums[1:]))
    ok &= elapsed < 120
    record("1 kraft audit", ok, f"max={sums[-1]} ({float(sums[-1]):.6f}), {elapsed:.2f}s")


def test_02_prefix_freeness():
    start = time.perf_counter()
    complete = set()
    for L in range(15):
        for v in range(1 << L):
            p = BitString.from_int(v, L)
            if Program(p).is_complete:
                complete.add(str(p))
    assert complete == {str(p) for p in iter_complete_programs(14)}
    violations = sum(1 for p in complete for cut in range(len(p)) if p[:cut] in complete)
    elapsed = time.perf_counter() - start
    record("2 prefix-freeness", violations == 0 and elapsed < 60,
           f"{len(complete)} complete programs <= 14 bits, {violations} violations, {elapsed:.2f}s")


def test_03_codec_soundness():
    rng = np.random.default_rng(2026)
    start = time.perf_counter()
    failures = 0
    for _ in range(10_000):
        x = BitString.from_array(rng.integers(0, 2, int(rng.integers(0, (1 << 16) + 1)), dtype=np.uint8))
        p = BitString.from_array(rng.integers(0, 2, int(rng.integers(0, (1 << 16) + 1)), dtype=np.uint8))
        failures += decompress(lz78_parse(x, p), p) != x
    elapsed = time.perf_counter() - start
    record("3 codec soundness", failures == 0 and elapsed < 60,
           f"10000 round trips, {failures} failures, {elapsed:.2f}s")


def test_04_oracle_agreement():
    start = time.perf_counter()
    report = run_estimator_audit(ExperimentConfig("estimator-audit", lmax=24))
    elapsed = time.perf_counter() - start
    rho = report.summary["spearman_exact_primed"]
    record("4 oracle agreement", rho is not None and rho >= 0.6 and elapsed < 600,
           f"spearman={rho:.4f} (>= 0.6), censored={report.summary['n_censored']}, {elapsed:.2f}s")


def test_05_boltzmann_fidelity():
    H = Hamiltonian(2, 2, 1.0, 0.0)
    probs = boltzmann_probabilities(H, 0.3)
    start = time.perf_counter()
    pvalues = []
    for seed in range(10):
        counts = state_histogram(H, 0.3, 1_000_000, seed=seed)
        pvalues.append(chi_square(counts, probs)[2])
    elapsed = time.perf_counter() - start
    passing = sum(p > 0.001 for p in pvalues)
    record("5 Boltzmann fidelity", passing >= 9 and elapsed < 300,
           f"{passing}/10 seeds with p > 0.001 (min p={min(pvalues):.3g}), {elapsed:.2f}s")


def test_06_entropy_monotonicity():
    start = time.perf_counter()
    betas = np.linspace(0.0, 2.0, 20)
    ok = True
    for shape in ((2, 2), (4, 4)):
        ent = [r.entropy_bits for r in exact_thermo_grid(Hamiltonian(*shape, 1.0, 0.0), betas)]
        ok &= all(a >= b for a, b in zip(ent, ent[1:]))
    elapsed = time.perf_counter() - start
    record("6 entropy monotonicity", ok and elapsed < 60, f"2x2 and 4x4 over 20 betas, {elapsed:.2f}s")


def test_07_entropy_complexity_correlation():
    start = time.perf_counter()
    small = run_experiment(load_config(CONFIGS / "entropy_correlation.conf"))
    large = run_experiment(load_config(CONFIGS / "ladder_contrast.conf"))
    elapsed = time.perf_counter() - start
    r, rho = small.summary["pearson"], small.summary["spearman"]
    rate = large.summary["hot_gt_cold_rate"]
    assert small.summary["n_points"] == 12 and len(small.config.seeds) == 16
    assert large.summary["n_seeds"] == 32 and large.config.n_sites == 256
    ok = r >= 0.9 and rho >= 0.9 and rate >= 0.95 and elapsed < 900
    record("7 entropy-complexity correlation", ok,
           f"4x4 pearson={r:.4f} spearman={rho:.4f}; 16x16 hot>cold rate={rate:.3f}; {elapsed:.2f}s")


def test_08_clausius_analogue():
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "clausius.conf")
    assert cfg.tf_h == (0.2, 0.4, 0.6, 0.8, 1.0) and cfg.ti_h == 0.0
    assert len(cfg.seeds) == 32 and cfg.n_sites == 256
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    agree = report.summary["sign_agreement"]
    antisym = report.summary["antisymmetry_exact"]
    record("8 Clausius analogue", agree >= 0.8 and antisym == 1 and elapsed < 1200,
           f"sign agreement={agree:.4f} over {report.summary['n_sign_rows']} runs, "
           f"antisymmetry exact={bool(antisym)}, {elapsed:.2f}s")


def test_09_trajectory_accounting():
    rng = np.random.default_rng(909)
    start = time.perf_counter()
    mismatches = 0
    for _ in range(100):
        T = int(rng.integers(1, 30))
        n = int(rng.integers(1, 300))
        states = [BitString.from_array(rng.integers(0, 2, n, dtype=np.uint8)) for _ in range(T + 1)]
        tc = traj_complexity(stitch(states))
        numerator = 0
        for est in tc.per_step:
            numerator += est.bits
        mismatches += Fraction(numerator, T) != tc.mean_bits
    elapsed = time.perf_counter() - start
    record("9 trajectory accounting", mismatches == 0 and elapsed < 60,
           f"100 trajectories, {mismatches} mismatches, {elapsed:.2f}s")


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "thermokc.cli", *args], cwd=cwd,
                          capture_output=True, check=True)


def test_10_cli_determinism(tmp_path):
    start = time.perf_counter()
    identical = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        _cli("simulate", "--rows", "16", "--cols", "16", "--J", "1", "--h", "0.3", "--T", "10",
             "--beta-max", "2", "--beta-min", "0.05", "--sweeps", "3", "--seed", "11", "--tag", "t_f",
             "--out", str(d / "traj.txt"), cwd=d)
        lines = (d / "traj.txt").read_text().splitlines()
        (d / "y.txt").write_text(f"16 16\n{lines[-1]}\n")
        (d / "x.txt").write_text(f"16 16\n{lines[-2]}\n")
        for method in ("primed", "diff"):
            out = _cli("complexity", "--y", "y.txt", "--x", "x.txt", "--method", method, cwd=d).stdout
            (d / f"complexity_{method}.csv").write_bytes(out)
        (d / "oracle.txt").write_bytes(_cli("oracle", "--alpha", "0" * 32, "--lmax", "20", cwd=d).stdout)
        (d / "kraft.txt").write_bytes(_cli("kraft", "--lmax", "14", cwd=d).stdout)
        (d / "exact.csv").write_bytes(_cli("exact", "--rows", "4", "--cols", "4", "--beta", "0.4", cwd=d).stdout)
        for conf in ("clausius.conf", "estimator_audit.conf", "kraft_audit.conf"):
            _cli("experiment", "--config", str(CONFIGS / conf), "--out", str(d / "reports"), cwd=d)
    names = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    for name in names:
        identical.append(filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False))
    elapsed = time.perf_counter() - start
    record("10 CLI determinism", all(identical) and len(names) >= 14 and elapsed < 300,
           f"{sum(identical)}/{len(names)} output files byte-identical, {elapsed:.2f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
