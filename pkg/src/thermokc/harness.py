"""Experiment configuration, orchestration and CSV reports."""
from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from . import __version__, compressor
from .bitcore import BitString, pack_microstate
from .compressor import METHODS, cond_complexity_diff, cond_complexity_primed
from .machine import MAX_EXACT_LMAX, MAX_KRAFT_LMAX, MachineConfig, exact_k, kraft_sum
from .stats import pearson, spearman
from .thermal import (MAX_EXACT_SITES, Hamiltonian, LadderSchedule, anneal_ladder,
                      exact_thermo_grid, ground_state, heat_absorbed, run_sweeps)
from .trajectory import EXACT_STATE_LIMIT, delta_complexity, stitch, traj_complexity

KINDS = ("entropy-correlation", "clausius", "estimator-audit", "kraft-audit")
NA = "NA"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# --- configuration ------------------------------------------------------------

# dotted key -> (attribute, kind)
_KEYS = {
    "kind": ("kind", "str"),
    "rows": ("rows", "int"),
    "cols": ("cols", "int"),
    "ti.J": ("ti_J", "float"),
    "ti.h": ("ti_h", "float"),
    "tf.J": ("tf_J", "float"),
    "tf.h": ("tf_h", "floats"),
    "ladder.T": ("ladder_T", "int"),
    "ladder.beta_max": ("ladder_beta_max", "float"),
    "ladder.beta_min": ("ladder_beta_min", "float"),
    "ladder.sweeps": ("ladder_sweeps", "int"),
    "beta_grid": ("beta_grid", "floats"),
    "burn_in": ("burn_in", "int"),
    "samples": ("samples", "int"),
    "gap": ("gap", "int"),
    "seeds": ("seeds", "ints"),
    "estimator": ("estimator", "str"),
    "lmax": ("lmax", "int"),
    "steps": ("steps", "int"),
    "output": ("output", "str"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    rows: int = 4
    cols: int = 4
    ti_J: float = 1.0
    ti_h: float = 0.0
    tf_J: float = 1.0
    tf_h: tuple[float, ...] = (0.0,)
    ladder_T: int = 10
    ladder_beta_max: float = 2.0
    ladder_beta_min: float = 0.05
    ladder_sweeps: int = 1
    beta_grid: tuple[float, ...] = ()
    burn_in: int = 200
    samples: int = 32
    gap: int = 1
    seeds: tuple[int, ...] = (0,)
    estimator: str = compressor.PRIMED
    lmax: int = MAX_EXACT_LMAX
    steps: int = 10_000
    output: str = ""
    thresholds: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        validate(self)

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def ladder(self) -> LadderSchedule:
        return LadderSchedule(self.ladder_T, self.ladder_beta_max, self.ladder_beta_min, self.ladder_sweeps)

    def hamiltonian_i(self) -> Hamiltonian:
        return Hamiltonian(self.rows, self.cols, self.ti_J, self.ti_h)

    def hamiltonians_f(self) -> list[Hamiltonian]:
        return [Hamiltonian(self.rows, self.cols, self.tf_J, h) for h in self.tf_h]

    def machine(self) -> MachineConfig:
        return MachineConfig(step_budget=self.steps)


def validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
    if cfg.rows < 2:
        raise ConfigError("rows", "must be >= 2")
    if cfg.cols < 2:
        raise ConfigError("cols", "must be >= 2")
    if not cfg.seeds:
        raise ConfigError("seeds", "list must be non-empty")
    if cfg.estimator not in METHODS:
        raise ConfigError("estimator", f"must be one of {', '.join(METHODS)}")
    if cfg.estimator == compressor.EXACT and cfg.n_sites > EXACT_STATE_LIMIT:
        raise ConfigError("estimator", f"exact-bounded needs <= {EXACT_STATE_LIMIT} sites")
    for key, value in (("ladder.T", cfg.ladder_T), ("ladder.sweeps", cfg.ladder_sweeps),
                       ("samples", cfg.samples), ("gap", cfg.gap), ("steps", cfg.steps)):
        if value < 1:
            raise ConfigError(key, "must be >= 1")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in", "must be >= 0")
    if cfg.ladder_beta_min < 0 or cfg.ladder_beta_max < 0:
        raise ConfigError("ladder.beta_min" if cfg.ladder_beta_min < 0 else "ladder.beta_max", "must be >= 0")
    if any(b < 0 for b in cfg.beta_grid):
        raise ConfigError("beta_grid", "inverse temperatures must be >= 0")
    if cfg.kind == "entropy-correlation" and cfg.n_sites <= MAX_EXACT_SITES and not cfg.beta_grid:
        raise ConfigError("beta_grid", "exact branch needs at least one beta")
    if cfg.kind == "clausius" and not cfg.tf_h:
        raise ConfigError("tf.h", "sweep needs at least one value")
    limit = MAX_KRAFT_LMAX if cfg.kind == "kraft-audit" else MAX_EXACT_LMAX
    if not 0 <= cfg.lmax <= limit:
        raise ConfigError("lmax", f"must be in [0, {limit}] for {cfg.kind}")
    for name, _ in cfg.thresholds:
        if not name:
            raise ConfigError("threshold", "empty statistic name")


def _parse_value(key: str, kind: str, raw: str):
    try:
        if kind == "str":
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind == "ints":
            out: list[int] = []
            for part in raw.split(","):
                part = part.strip()
                if ".." in part:
                    lo, hi = part.split("..")
                    out.extend(range(int(lo), int(hi) + 1))
                elif part:
                    out.append(int(part))
            return tuple(out)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None
    raise AssertionError(kind)


def parse_config(text: str) -> ExperimentConfig:
    """``KEY=VALUE`` lines, ``#`` comments, dotted keys; ``threshold.<stat>``
    sets a lower bound on a summary statistic."""
    values: dict[str, Any] = {}
    thresholds: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected KEY=VALUE")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key.startswith("threshold."):
            thresholds[key[len("threshold."):]] = _parse_value(key, "float", raw)
            continue
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        attr, kind = _KEYS[key]
        values[attr] = _parse_value(key, kind, raw)
    if "kind" not in values:
        raise ConfigError("kind", "missing")
    return ExperimentConfig(**values, thresholds=tuple(sorted(thresholds.items())))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, (attr, kind) in _KEYS.items():
        value = getattr(cfg, attr)
        if kind in ("floats", "ints"):
            text = ",".join(repr(v) for v in value)
        else:
            text = repr(value) if kind == "float" else str(value)
        lines.append(f"{key}={text}")
    lines += [f"threshold.{name}={value!r}" for name, value in cfg.thresholds]
    return "\n".join(lines) + "\n"


# --- reports --------------------------------------------------------------------


def fmt(value) -> str:
    if value is None:
        return NA
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating, Fraction)):
        return format(float(value), ".12g")
    return str(value)


def r12(value: float) -> float:
    """Round to the 12 significant digits written to CSV."""
    return float(format(float(value), ".12g"))


@dataclass
class ExperimentReport:
    kind: str
    columns: tuple[str, ...]
    rows: list[tuple]
    summary: dict[str, Any]
    config: ExperimentConfig
    version: str = __version__

    def rows_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def threshold_results(self) -> list[tuple[str, Any, float, bool]]:
        out = []
        for name, bound in self.config.thresholds:
            value = self.summary.get(name)
            ok = isinstance(value, (int, float)) and value >= bound
            out.append((name, value, bound, ok))
        return out

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.threshold_results())

    def summary_csv(self) -> str:
        bounds = dict(self.config.thresholds)
        status = {name: ok for name, _, _, ok in self.threshold_results()}
        lines = ["statistic,value,threshold,status"]
        lines.append(f"artifact_version,{self.version},,")
        for name, value in self.summary.items():
            if name in bounds:
                lines.append(f"{name},{fmt(value)},{fmt(bounds[name])},{'pass' if status[name] else 'fail'}")
            else:
                lines.append(f"{name},{fmt(value)},,")
        for name, bound in self.config.thresholds:
            if name not in self.summary:
                lines.append(f"{name},{NA},{fmt(bound)},fail")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {
            out / f"{self.kind}_rows.csv": self.rows_csv(),
            out / f"{self.kind}_summary.csv": self.summary_csv(),
            out / f"{self.kind}_config.txt": format_config(self.config),
        }
        for path, text in files.items():
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return list(files)


def read_rows_csv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = text.strip("\n").split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


# --- work scheduling ------------------------------------------------------------


def max_threads() -> int:
    raw = os.environ.get("THERMOKC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError("THERMOKC_THREADS", f"not an integer: {raw!r}") from None
    return os.cpu_count() or 1


def map_units(fn: Callable, units: Sequence) -> list:
    """Run independent work units; results come back in input order."""
    workers = min(max_threads(), len(units))
    if workers <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, units))


# --- experiments ----------------------------------------------------------------


def _equilibrium_complexity(H: Hamiltonian, beta: float, seed: int, grid_index: int,
                            cfg: ExperimentConfig) -> float:
    """Mean per-site K(x_{k+1} | x_k) over ``samples`` consecutive equilibrium pairs."""
    rng = np.random.default_rng([seed, grid_index])
    spins, _ = run_sweeps(ground_state(H), H, beta, cfg.burn_in, rng)
    states = [pack_microstate(spins)]
    for _ in range(cfg.samples):
        spins, _ = run_sweeps(spins, H, beta, cfg.gap, rng)
        states.append(pack_microstate(spins))
    traj = stitch(states, None, "eq", seed, H.rows, H.cols)
    tc = traj_complexity(traj, cfg.estimator, cfg.lmax, cfg.machine())
    return float(tc.mean_bits) / H.n_sites


def run_entropy_correlation(cfg: ExperimentConfig) -> ExperimentReport:
    H = cfg.hamiltonian_i()
    if H.n_sites > MAX_EXACT_SITES:
        return _ladder_contrast(cfg, H)
    betas = cfg.beta_grid
    entropies = [r12(e.entropy_bits / H.n_sites) for e in exact_thermo_grid(H, betas)]
    units = [(seed, gi) for seed in cfg.seeds for gi in range(len(betas))]
    values = map_units(lambda u: _equilibrium_complexity(H, betas[u[1]], u[0], u[1], cfg), units)
    rows = [(seed, gi, r12(betas[gi]), entropies[gi], r12(v)) for (seed, gi), v in zip(units, values)]
    return ExperimentReport(
        cfg.kind,
        ("seed", "grid_index", "beta", "entropy_bits_per_site", "complexity_bits_per_site"),
        rows, entropy_correlation_summary(rows), cfg)


def entropy_correlation_summary(rows: Iterable[Sequence]) -> dict[str, Any]:
    by_grid: dict[int, list] = {}
    for _, gi, beta, ent, comp in rows:
        by_grid.setdefault(int(gi), []).append((float(beta), float(ent), float(comp)))
    grid = sorted(by_grid)
    betas = [by_grid[g][0][0] for g in grid]
    ents = [by_grid[g][0][1] for g in grid]
    comps = [sum(c for *_, c in by_grid[g]) / len(by_grid[g]) for g in grid]
    hot, cold = int(np.argmin(betas)), int(np.argmax(betas))
    return {
        "n_points": len(grid),
        "pearson": pearson(ents, comps),
        "spearman": spearman(ents, comps),
        "hot_gt_cold": None if hot == cold else int(comps[hot] > comps[cold]),
    }


def _ladder_contrast(cfg: ExperimentConfig, H: Hamiltonian) -> ExperimentReport:
    ladder = cfg.ladder()

    def unit(seed):
        tc = traj_complexity(anneal_ladder(H, ladder, seed, "t_i"), cfg.estimator, cfg.lmax, cfg.machine())
        return [r12(e.bits / H.n_sites) for e in tc.per_step]

    rows = []
    for seed, per_site in zip(cfg.seeds, map_units(unit, cfg.seeds)):
        rows += [(seed, k, r12(ladder.beta_of(k)), v) for k, v in enumerate(per_site)]
    return ExperimentReport(cfg.kind, ("seed", "rung", "beta", "complexity_bits_per_site"),
                            rows, ladder_contrast_summary(rows), cfg)


def ladder_contrast_summary(rows: Iterable[Sequence]) -> dict[str, Any]:
    by_seed: dict[int, list] = {}
    for seed, _, beta, comp in rows:
        by_seed.setdefault(int(seed), []).append((float(beta), float(comp)))
    wins = 0
    for entries in by_seed.values():
        hot = min(entries, key=lambda e: e[0])[1]
        cold = max(entries, key=lambda e: e[0])[1]
        wins += hot > cold
    return {"n_seeds": len(by_seed), "hot_gt_cold_rate": wins / len(by_seed) if by_seed else None}


def run_clausius(cfg: ExperimentConfig) -> ExperimentReport:
    H_i = cfg.hamiltonian_i()
    ladder = cfg.ladder()
    H_fs = cfg.hamiltonians_f()
    T = ladder.T

    def unit(u):
        seed, gi = u
        H_f = H_fs[gi]
        traj_i = anneal_ladder(H_i, ladder, seed, "t_i")
        traj_f = anneal_ladder(H_f, ladder, seed, "t_f")
        c_i = traj_complexity(traj_i, cfg.estimator, cfg.lmax, cfg.machine())
        c_f = traj_complexity(traj_f, cfg.estimator, cfg.lmax, cfg.machine())
        forward = delta_complexity(c_f, c_i)
        backward = delta_complexity(c_i, c_f)
        antisym = (backward.delta_mean == -forward.delta_mean
                   and all(b == -f for b, f in zip(backward.per_step_delta, forward.per_step_delta)))
        Q = heat_absorbed(traj_f, traj_i, H_f, H_i)
        return forward.delta_mean, Q, antisym

    units = [(seed, gi) for seed in cfg.seeds for gi in range(len(H_fs))]
    rows = []
    for (seed, gi), (d, Q, antisym) in zip(units, map_units(unit, units)):
        sign = None if d == 0 or Q == 0 else int((d > 0) == (Q > 0))
        rows.append((seed, gi, r12(cfg.tf_h[gi]), r12(d), f"{d.numerator}/{d.denominator}",
                     r12(Q), r12(Q / T), sign, int(antisym)))
    return ExperimentReport(
        cfg.kind,
        ("seed", "grid_index", "h_f", "delta_mean", "delta_mean_exact", "Q", "Q_over_T",
         "sign_agree", "antisymmetric"),
        rows, clausius_summary(rows), cfg)


def clausius_summary(rows: Iterable[Sequence]) -> dict[str, Any]:
    rows = list(rows)
    signs = [r[7] for r in rows if r[7] not in (None, NA)]
    deltas = [float(r[3]) for r in rows]
    heats = [float(r[5]) for r in rows]
    by_h: dict[float, list] = {}
    for r in rows:
        by_h.setdefault(float(r[2]), []).append((float(r[3]), float(r[5])))
    hs = sorted(by_h)
    mean_d = [sum(d for d, _ in by_h[h]) / len(by_h[h]) for h in hs]
    mean_q = [sum(q for _, q in by_h[h]) / len(by_h[h]) for h in hs]
    return {
        "n_rows": len(rows),
        "n_sign_rows": len(signs),
        "sign_agreement": sum(int(s) for s in signs) / len(signs) if signs else None,
        "spearman_delta_q": spearman(deltas, heats),
        "spearman_sweep_delta_q": spearman(mean_d, mean_q),
        "antisymmetry_exact": int(all(int(r[8]) == 1 for r in rows)),
        "mean_delta": sum(deltas) / len(deltas) if rows else None,
        "mean_Q": sum(heats) / len(heats) if rows else None,
    }


def _random_suite_string(seed: int, length: int) -> BitString:
    return BitString.from_array(np.random.default_rng(seed).integers(0, 2, length, dtype=np.uint8))


def audit_suite() -> list[BitString]:
    """Twenty fixed strings of 8-16 bits: runs, alternations and seeded-random."""
    B = BitString.from_str
    runs = [B("0" * 8), B("1" * 8), B("0" * 12), B("0" * 16), B("1" * 16), B("0" * 8 + "1" * 8)]
    alternations = [B("01" * 4), B("01" * 6), B("01" * 8), B("10" * 8), B("001" * 4),
                    B("0011" * 4), B("011" * 5)]
    randoms = [_random_suite_string(1000 + i, n) for i, n in enumerate((8, 9, 10, 11, 12, 14, 16))]
    return runs + alternations + randoms


def run_estimator_audit(cfg: ExperimentConfig, suite: Optional[Sequence[BitString]] = None) -> ExperimentReport:
    suite = audit_suite() if suite is None else list(suite)
    if any(len(s) > EXACT_STATE_LIMIT for s in suite):
        raise ConfigError("suite", f"exact branch needs strings of <= {EXACT_STATE_LIMIT} bits")
    machine = cfg.machine()

    def unit(s):
        res = exact_k(s, BitString(), cfg.lmax, machine)
        return res, cond_complexity_primed(s).bits, cond_complexity_diff(s).bits

    rows = []
    for i, (s, (res, primed, diff)) in enumerate(zip(suite, map_units(unit, suite))):
        exact = res.value if res.known else cfg.lmax + 1
        rows.append((i, str(s), len(s), exact, int(not res.known), primed, diff))
    return ExperimentReport(
        cfg.kind, ("index", "string", "length", "exact_bits", "exact_censored", "primed_bits", "diff_bits"),
        rows, estimator_audit_summary(rows), cfg)


def estimator_audit_summary(rows: Iterable[Sequence]) -> dict[str, Any]:
    rows = list(rows)
    exact = [float(r[3]) for r in rows]
    return {
        "n_strings": len(rows),
        "n_censored": sum(int(r[4]) for r in rows),
        "spearman_exact_primed": spearman(exact, [float(r[5]) for r in rows]),
        "spearman_exact_diff": spearman(exact, [float(r[6]) for r in rows]),
    }


def run_kraft_audit(cfg: ExperimentConfig) -> ExperimentReport:
    machine = cfg.machine()
    rows = []
    for L in range(0, cfg.lmax + 1):
        k = kraft_sum(L, BitString(), machine)
        rows.append((L, k.numerator, k.denominator, r12(k)))
    return ExperimentReport(cfg.kind, ("lmax", "numerator", "denominator", "value"),
                            rows, kraft_audit_summary(rows), cfg)


def kraft_audit_summary(rows: Iterable[Sequence]) -> dict[str, Any]:
    sums = [Fraction(int(r[1]), int(r[2])) for r in rows]
    return {
        "max_value": max(sums) if sums else None,
        "bounded": int(all(s <= 1 for s in sums)),
        "monotone": int(all(a <= b for a, b in zip(sums, sums[1:]))),
    }


RUNNERS = {
    "entropy-correlation": run_entropy_correlation,
    "clausius": run_clausius,
    "estimator-audit": run_estimator_audit,
    "kraft-audit": run_kraft_audit,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.kind](cfg)


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)
