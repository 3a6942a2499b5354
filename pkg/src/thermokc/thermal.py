"""Periodic 2D Ising model: Metropolis dynamics along a cold-to-hot ladder and
exact enumeration of small-lattice thermodynamics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np

from .bitcore import BitString, pack_microstate, unpack_microstate
from .trajectory import Trajectory, stitch

MAX_EXACT_SITES = 20
# stands in for beta = infinity at the absolute-zero rung
BETA_CAP = 1e6


@dataclass(frozen=True)
class Hamiltonian:
    """E(s) = -J sum_i s_i (s_right(i) + s_down(i)) - h sum_i s_i, periodic."""

    rows: int
    cols: int
    J: float = 1.0
    h: float = 0.0
    boundary: str = "periodic"

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("lattice needs rows >= 2 and cols >= 2")
        if self.boundary != "periodic":
            raise ValueError("only periodic boundaries are supported")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def with_params(self, J: Optional[float] = None, h: Optional[float] = None) -> "Hamiltonian":
        return Hamiltonian(self.rows, self.cols, self.J if J is None else J,
                           self.h if h is None else h)


@dataclass(frozen=True)
class LadderSchedule:
    """Discrete temperature ladder; rung 0 is the coldest.

    ``betas`` overrides the default linear interpolation from ``beta_max``
    (k = 0) to ``beta_min`` (k = T - 1).
    """

    T: int
    beta_max: float = 2.0
    beta_min: float = 0.05
    sweeps_per_rung: int = 1
    betas: Optional[tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("ladder needs T >= 1")
        if self.sweeps_per_rung < 1:
            raise ValueError("sweeps_per_rung must be >= 1")
        if self.betas is not None:
            object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
            if len(self.betas) != self.T:
                raise ValueError("explicit betas must have length T")
        if any(b < 0 for b in self.beta_list()):
            raise ValueError("inverse temperatures must be >= 0")

    def beta_of(self, k: int) -> float:
        if not 0 <= k < self.T:
            raise IndexError(f"rung {k} outside 0..{self.T - 1}")
        if self.betas is not None:
            return self.betas[k]
        if self.T == 1:
            return self.beta_max
        frac = k / (self.T - 1)
        return self.beta_max * (1 - frac) + self.beta_min * frac

    def beta_list(self) -> list[float]:
        return [self.beta_of(k) for k in range(self.T)]


@dataclass(frozen=True)
class ExactThermo:
    beta: float
    logZ: float  # nats
    mean_energy: float
    entropy_bits: float

    def csv_row(self) -> str:
        return ",".join(f"{v:.12g}" for v in (self.beta, self.logZ, self.mean_energy, self.entropy_bits))


def _check_shape(spins: np.ndarray, H: Hamiltonian) -> np.ndarray:
    arr = np.asarray(spins)
    if arr.shape != (H.rows, H.cols):
        raise ValueError(f"microstate shape {arr.shape} does not match {H.rows}x{H.cols}")
    return arr


def as_spins(state, H: Hamiltonian) -> np.ndarray:
    if isinstance(state, BitString):
        return unpack_microstate(state, H.rows, H.cols)
    return _check_shape(state, H)


def energy(s, H: Hamiltonian) -> float:
    s = as_spins(s, H).astype(np.float64)
    bonds = s * (np.roll(s, -1, axis=1) + np.roll(s, -1, axis=0))
    return float(-H.J * bonds.sum() - H.h * s.sum())


def ground_state(H: Hamiltonian) -> np.ndarray:
    """Lowest-energy of all-up, all-down and checkerboard; ties go to that order."""
    up = np.ones((H.rows, H.cols), dtype=np.int8)
    rr, cc = np.indices((H.rows, H.cols))
    candidates = [up, -up, np.where((rr + cc) % 2 == 0, 1, -1).astype(np.int8)]
    energies = [energy(c, H) for c in candidates]
    return candidates[int(np.argmin(energies))]


@numba.njit(cache=True, nogil=True)
def _sweeps(spins, J, h, beta, uniforms, n_sweeps, e):
    rows, cols = spins.shape
    u = 0
    for _ in range(n_sweeps):
        for r in range(rows):
            for c in range(cols):
                s = spins[r, c]
                nb = (spins[(r + 1) % rows, c] + spins[(r - 1) % rows, c]
                      + spins[r, (c + 1) % cols] + spins[r, (c - 1) % cols])
                dE = 2.0 * s * (J * nb + h)
                if dE <= 0.0 or uniforms[u] < math.exp(-beta * dE):
                    spins[r, c] = -s
                    e += dE
                u += 1
    return e


def run_sweeps(spins, H: Hamiltonian, beta: float, n_sweeps: int,
               rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """``n_sweeps`` fixed-order Metropolis sweeps; returns (new state, tracked energy).

    Each site visit consumes exactly one uniform from ``rng``.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    out = np.array(as_spins(spins, H), dtype=np.int8, copy=True)
    uniforms = rng.random(n_sweeps * H.n_sites)
    e = _sweeps(out, float(H.J), float(H.h), float(beta), uniforms, n_sweeps, energy(out, H))
    return out, e


def metropolis_sweep(spins, H: Hamiltonian, beta: float, rng: np.random.Generator) -> np.ndarray:
    return run_sweeps(spins, H, beta, 1, rng)[0]


@numba.njit(cache=True, nogil=True)
def _sample_counts(spins, J, h, beta, uniforms, n_sweeps, counts):
    rows, cols = spins.shape
    n = rows * cols
    u = 0
    for _ in range(n_sweeps):
        for r in range(rows):
            for c in range(cols):
                s = spins[r, c]
                nb = (spins[(r + 1) % rows, c] + spins[(r - 1) % rows, c]
                      + spins[r, (c + 1) % cols] + spins[r, (c - 1) % cols])
                dE = 2.0 * s * (J * nb + h)
                if dE <= 0.0 or uniforms[u] < math.exp(-beta * dE):
                    spins[r, c] = -s
                u += 1
        idx = 0
        for r in range(rows):
            for c in range(cols):
                idx = idx * 2 + (1 if spins[r, c] > 0 else 0)
        counts[idx] += 1
    return n


def state_histogram(H: Hamiltonian, beta: float, n_sweeps: int, seed: int,
                    burn_in: int = 1000, chunk: int = 250_000) -> np.ndarray:
    """Visit counts of each packed state (index = packed bits as big-endian int)
    recorded after every sweep following ``burn_in`` sweeps from the ground state."""
    if H.n_sites > MAX_EXACT_SITES:
        raise ValueError(f"histogram needs <= {MAX_EXACT_SITES} sites")
    rng = np.random.default_rng(seed)
    spins, _ = run_sweeps(ground_state(H), H, beta, burn_in, rng)
    counts = np.zeros(1 << H.n_sites, dtype=np.int64)
    done = 0
    while done < n_sweeps:
        step = min(chunk, n_sweeps - done)
        _sample_counts(spins, float(H.J), float(H.h), float(beta),
                       rng.random(step * H.n_sites), step, counts)
        done += step
    return counts


def anneal_ladder(H: Hamiltonian, ladder: LadderSchedule, seed: int, tag: str = "t_i") -> Trajectory:
    """x_0 is the ground state; x_k follows x_{k-1} after the rung k-1 sweeps."""
    rng = np.random.default_rng(seed)
    spins = ground_state(H)
    states = [pack_microstate(spins)]
    for k in range(ladder.T):
        spins, _ = run_sweeps(spins, H, ladder.beta_of(k), ladder.sweeps_per_rung, rng)
        states.append(pack_microstate(spins))
    return stitch(states, ladder, tag, seed, rows=H.rows, cols=H.cols)


# --- exact enumeration ------------------------------------------------------


def all_states(n_sites: int) -> np.ndarray:
    """(2^N, N) array of ±1; row i is the state whose packed bits read i."""
    idx = np.arange(1 << n_sites, dtype=np.int64)
    shifts = np.arange(n_sites - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts) & 1
    return (2 * bits - 1).astype(np.int8)


def state_energies(H: Hamiltonian) -> np.ndarray:
    """Energy of every microstate, indexed by packed bits."""
    if H.n_sites > MAX_EXACT_SITES:
        raise ValueError(f"exact enumeration needs rows*cols <= {MAX_EXACT_SITES}, got {H.n_sites}")
    s = all_states(H.n_sites).reshape(-1, H.rows, H.cols).astype(np.float64)
    bonds = s * (np.roll(s, -1, axis=2) + np.roll(s, -1, axis=1))
    return -H.J * bonds.sum(axis=(1, 2)) - H.h * s.sum(axis=(1, 2))


def _spectrum(H: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    levels, degeneracy = np.unique(state_energies(H), return_counts=True)
    return levels, degeneracy.astype(np.float64)


def boltzmann_probabilities(H: Hamiltonian, beta: float) -> np.ndarray:
    w = -beta * state_energies(H)
    w = np.exp(w - w.max())
    return w / w.sum()


def exact_thermo(H: Hamiltonian, beta: float, spectrum=None) -> ExactThermo:
    """Gibbs entropy S = (ln Z + beta <E>) / ln 2 by enumerating all 2^N states.

    Accumulated in base 2 with the largest Boltzmann weight factored out.
    """
    if H.n_sites > MAX_EXACT_SITES:
        raise ValueError(f"exact enumeration needs rows*cols <= {MAX_EXACT_SITES}, got {H.n_sites}")
    levels, degeneracy = spectrum if spectrum is not None else _spectrum(H)
    log2w = -beta * levels / math.log(2)
    top = log2w.max()
    rel = degeneracy * np.exp2(log2w - top)
    total = rel.sum()
    log2Z = top + math.log2(total)
    mean_e = float((rel * levels).sum() / total)
    entropy = log2Z + beta * mean_e / math.log(2)
    return ExactThermo(float(beta), log2Z * math.log(2), mean_e, float(entropy))


def exact_thermo_grid(H: Hamiltonian, betas: Sequence[float]) -> list[ExactThermo]:
    spectrum = _spectrum(H)
    return [exact_thermo(H, b, spectrum) for b in betas]


def heat_absorbed(traj_f: Trajectory, traj_i: Trajectory, H_f: Hamiltonian, H_i: Hamiltonian) -> float:
    """Q = sum_{k=1..T} E_f(x^f_k) - E_i(x^i_k) for aligned runs."""
    if traj_f.T != traj_i.T or traj_f.seed != traj_i.seed or traj_f.ladder != traj_i.ladder:
        raise ValueError("heat needs trajectories with the same T, seed and ladder")
    if (H_f.rows, H_f.cols) != (H_i.rows, H_i.cols):
        raise ValueError("Hamiltonians act on different lattices")
    return sum(energy(xf, H_f) - energy(xi, H_i)
               for xf, xi in zip(traj_f.states[1:], traj_i.states[1:]))
