"""Trajectory complexity: the mean conditional complexity K(x_{k+1} | x_k)
along an ordered microstate sequence, and differences between two protocol
times."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Optional, Sequence

from . import compressor
from .bitcore import BitString
from .compressor import EXACT, METHODS, ComplexityEstimate
from .machine import DEFAULT_CONFIG, MAX_EXACT_LMAX, MachineConfig, exact_k

if TYPE_CHECKING:
    from .thermal import LadderSchedule

EXACT_STATE_LIMIT = 16


@dataclass(frozen=True)
class Trajectory:
    states: tuple[BitString, ...]
    ladder: Optional["LadderSchedule"]
    protocol_time_tag: str
    seed: int
    rows: int
    cols: int

    @property
    def T(self) -> int:
        return len(self.states) - 1

    @property
    def state_length(self) -> int:
        return len(self.states[0])


def stitch(states: Sequence[BitString], ladder: Any = None, tag: str = "t_i", seed: int = 0,
           rows: Optional[int] = None, cols: Optional[int] = None) -> Trajectory:
    """Validate and bundle x_0..x_T.

    Without lattice dimensions the states are treated as 1 x n.
    """
    states = tuple(states)
    if len(states) < 2:
        raise ValueError("a trajectory needs at least two states (T >= 1)")
    n = len(states[0])
    if any(len(s) != n for s in states):
        raise ValueError("all states in a trajectory must have the same bit length")
    if not tag or any(ch.isspace() for ch in tag):
        raise ValueError(f"protocol time tag must be a non-empty word, got {tag!r}")
    if rows is None or cols is None:
        rows, cols = 1, n
    if rows * cols != n:
        raise ValueError(f"{rows}x{cols} lattice does not match {n}-bit states")
    if ladder is not None and getattr(ladder, "T", len(states) - 1) != len(states) - 1:
        raise ValueError(f"ladder has T={ladder.T} but trajectory has {len(states) - 1} steps")
    return Trajectory(states, ladder, tag, int(seed), rows, cols)


@dataclass(frozen=True)
class TrajectoryComplexity:
    per_step: tuple[ComplexityEstimate, ...]
    mean_bits: Fraction
    method: str
    protocol_time_tag: str
    seed: int
    ladder: Any
    state_length: int

    @property
    def T(self) -> int:
        return len(self.per_step)

    def to_csv(self) -> str:
        lines = ["k,bits,method"]
        lines += [f"{k},{e.bits},{e.method}" for k, e in enumerate(self.per_step)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ComplexityDelta:
    per_step_delta: tuple[int, ...]
    delta_mean: Fraction
    tags: tuple[str, str]  # (initial, final)


def step_estimate(y: BitString, x: BitString, method: str, L_max: int = MAX_EXACT_LMAX,
                  cfg: MachineConfig = DEFAULT_CONFIG) -> ComplexityEstimate:
    if method == EXACT:
        res = exact_k(y, x, L_max, cfg)
        if res.known:
            return ComplexityEstimate(res.value, EXACT, len(y))
        return ComplexityEstimate(L_max + 1, EXACT, len(y), censored=True)
    return compressor.estimate(y, x, method)


def traj_complexity(traj: Trajectory, estimator: str = compressor.PRIMED,
                    L_max: int = MAX_EXACT_LMAX, cfg: MachineConfig = DEFAULT_CONFIG) -> TrajectoryComplexity:
    """(1/T) sum_{k=0}^{T-1} K(x_{k+1} | x_k) with one estimator for every step.

    The exact-bounded estimator reports unresolved steps as L_max + 1
    (flagged ``censored``).
    """
    if estimator not in METHODS:
        raise ValueError(f"unknown estimator {estimator!r}")
    if estimator == EXACT and traj.state_length > EXACT_STATE_LIMIT:
        raise ValueError(f"exact-bounded needs states of <= {EXACT_STATE_LIMIT} bits")
    per_step = tuple(step_estimate(y, x, estimator, L_max, cfg)
                     for x, y in zip(traj.states[:-1], traj.states[1:]))
    mean = Fraction(sum(e.bits for e in per_step), len(per_step))
    return TrajectoryComplexity(per_step, mean, estimator, traj.protocol_time_tag,
                                traj.seed, traj.ladder, traj.state_length)


def delta_complexity(final: TrajectoryComplexity, initial: TrajectoryComplexity) -> ComplexityDelta:
    """Per-step and mean difference final - initial between two aligned runs."""
    if final.T != initial.T:
        raise ValueError(f"trajectories differ in T ({final.T} vs {initial.T})")
    if final.method != initial.method:
        raise ValueError(f"estimators differ ({final.method} vs {initial.method})")
    if final.state_length != initial.state_length:
        raise ValueError("state bit-lengths differ")
    if final.seed != initial.seed or final.ladder != initial.ladder:
        raise ValueError("aligned runs need the same seed and ladder")
    per_step = tuple(f.bits - i.bits for f, i in zip(final.per_step, initial.per_step))
    delta_mean = final.mean_bits - initial.mean_bits
    if Fraction(sum(per_step), final.T) != delta_mean:
        raise ArithmeticError("per-step deltas disagree with the mean difference")
    return ComplexityDelta(per_step, delta_mean, (initial.protocol_time_tag, final.protocol_time_tag))


# --- file format --------------------------------------------------------------


def format_trajectory(traj: Trajectory) -> str:
    lines = [f"{traj.T} {traj.rows} {traj.cols} {traj.protocol_time_tag} {traj.seed}"]
    lines += [str(s) for s in traj.states]
    return "\n".join(lines) + "\n"


def parse_trajectory(text: str) -> Trajectory:
    lines = text.split("\n")
    try:
        T_s, rows_s, cols_s, tag, seed_s = lines[0].split()
        T, rows, cols, seed = int(T_s), int(rows_s), int(cols_s), int(seed_s)
    except ValueError:
        raise ValueError(f"malformed trajectory header: {lines[0]!r}") from None
    body = lines[1:T + 2]
    if len(body) != T + 1:
        raise ValueError(f"expected {T + 1} state lines")
    states = [BitString.from_str(line) for line in body]
    return stitch(states, None, tag, seed, rows, cols)


def write_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_trajectory(traj))


def read_trajectory(path) -> Trajectory:
    with open(path) as fh:
        return parse_trajectory(fh.read())
