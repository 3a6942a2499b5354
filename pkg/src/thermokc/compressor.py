"""Bit-level LZ78 with dictionary priming, and conditional complexity estimates.

The dictionary starts with the empty phrase at index 0. Priming parses the
conditioning string first and keeps its phrases; a trailing partial phrase of
the primer adds nothing. The last phrase of ``x`` may repeat an existing
entry, so every phrase is an ``(index, bit)`` pair.
"""
from __future__ import annotations

import bz2
import lzma
import math
import zlib
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .bitcore import EMPTY, BitString, gamma_length

PRIMED = "lz78-primed"
DIFF = "lz78-diff"
EXACT = "exact-bounded"
METHODS = (EXACT, PRIMED, DIFF)


class CorruptParseError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexityEstimate:
    bits: int
    method: str
    input_length: int
    # exact-bounded only: no program within the bound, ``bits`` is bound + 1
    censored: bool = False

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("complexity estimate must be non-negative")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def csv_row(self) -> str:
        return f"{self.bits},{self.method},{self.input_length}"


@dataclass(frozen=True, eq=False)
class Lz78Parse:
    indices: np.ndarray  # int64, referenced dictionary entry per phrase
    next_bits: np.ndarray  # uint8, appended bit per phrase
    initial_size: int  # dictionary entries before the first phrase (root + primer)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def phrases(self) -> list[tuple[int, int]]:
        return list(zip(self.indices.tolist(), self.next_bits.tolist()))

    @property
    def dictionary_size(self) -> int:
        return self.initial_size + len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Lz78Parse):
            return NotImplemented
        return (self.initial_size == other.initial_size
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.next_bits, other.next_bits))


@numba.njit(cache=True, nogil=True)
def _prime(primer, child):
    n_nodes = 1
    node = 0
    for t in range(primer.shape[0]):
        b = primer[t]
        nxt = child[node, b]
        if nxt >= 0:
            node = nxt
        else:
            child[node, b] = n_nodes
            n_nodes += 1
            node = 0
    return n_nodes


@numba.njit(cache=True, nogil=True)
def _parse(x, child, n_nodes, out_idx, out_bit):
    m = 0
    node = 0
    last = x.shape[0] - 1
    for t in range(x.shape[0]):
        b = x[t]
        nxt = child[node, b]
        if nxt >= 0 and t != last:
            node = nxt
            continue
        out_idx[m] = node
        out_bit[m] = b
        m += 1
        if nxt < 0:
            child[node, b] = n_nodes
            n_nodes += 1
        node = 0
    return m


def lz78_parse(x: BitString, primer: BitString = EMPTY) -> Lz78Parse:
    xs, ps = x.to_array(), primer.to_array()
    child = np.full((len(xs) + len(ps) + 1, 2), -1, dtype=np.int64)
    initial = _prime(ps, child)
    out_idx = np.empty(len(xs), dtype=np.int64)
    out_bit = np.empty(len(xs), dtype=np.uint8)
    m = _parse(xs, child, initial, out_idx, out_bit)
    return Lz78Parse(out_idx[:m].copy(), out_bit[:m].copy(), int(initial))


def code_length(parse: Lz78Parse) -> int:
    """Header gamma(m + 1) plus ceil(log2 D_j) + 1 bits for phrase j.

    D_j is the dictionary size when phrase j is emitted, with
    ceil(log2 1) = 0.
    """
    m = len(parse)
    sizes = np.arange(parse.initial_size, parse.initial_size + m, dtype=np.int64)
    # ceil(log2 D) == bit_length(D - 1)
    index_bits = _bit_length(sizes - 1)
    return gamma_length(m + 1) + int(index_bits.sum()) + m


def _bit_length(values: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape, dtype=np.int64)
    v = values.copy()
    while np.any(v):
        nz = v > 0
        out += nz
        v >>= 1
    return out


@numba.njit(cache=True, nogil=True)
def _prime_tree(primer, child, parent, bit, depth):
    n_nodes = 1
    node = 0
    for t in range(primer.shape[0]):
        b = primer[t]
        nxt = child[node, b]
        if nxt >= 0:
            node = nxt
        else:
            child[node, b] = n_nodes
            parent[n_nodes] = node
            bit[n_nodes] = b
            depth[n_nodes] = depth[node] + 1
            n_nodes += 1
            node = 0
    return n_nodes


@numba.njit(cache=True, nogil=True)
def _replay(indices, next_bits, n_nodes, parent, bit, depth, out):
    pos = 0
    for j in range(indices.shape[0]):
        e = n_nodes
        parent[e] = indices[j]
        bit[e] = next_bits[j]
        depth[e] = depth[indices[j]] + 1
        n_nodes += 1
        d = depth[e]
        q = e
        for r in range(d - 1, -1, -1):
            out[pos + r] = bit[q]
            q = parent[q]
        pos += d
    return pos


def decompress(parse: Lz78Parse, primer: BitString = EMPTY) -> BitString:
    ps = primer.to_array()
    m = len(parse)
    cap = len(ps) + m + 1
    child = np.full((len(ps) + 1, 2), -1, dtype=np.int64)
    parent = np.zeros(cap, dtype=np.int64)
    bit = np.zeros(cap, dtype=np.uint8)
    depth = np.zeros(cap, dtype=np.int64)
    initial = _prime_tree(ps, child, parent, bit, depth)
    if initial != parse.initial_size:
        raise CorruptParseError(
            f"primer yields {initial} dictionary entries, parse expects {parse.initial_size}")
    idx = np.asarray(parse.indices, dtype=np.int64)
    nb = np.asarray(parse.next_bits, dtype=np.uint8)
    if m and (np.any(idx < 0) or np.any(idx >= initial + np.arange(m)) or np.any(nb > 1)):
        raise CorruptParseError("phrase references an entry not yet in the dictionary")
    # output length is the sum of phrase depths; bound it before allocating
    depth_total = _phrase_depth_total(idx, depth[:initial], initial)
    out = np.empty(depth_total, dtype=np.uint8)
    n = _replay(idx, nb, initial, parent, bit, depth, out)
    return BitString.from_array(out[:n])


def _phrase_depth_total(idx, primer_depth, initial) -> int:
    m = len(idx)
    if m == 0:
        return 0
    d = np.empty(initial + m, dtype=np.int64)
    d[:initial] = primer_depth
    _fill_depths(idx, d, initial)
    return int(d[initial:].sum())


@numba.njit(cache=True, nogil=True)
def _fill_depths(idx, d, initial):
    for j in range(idx.shape[0]):
        d[initial + j] = d[idx[j]] + 1


def lz78_bits(z: BitString) -> int:
    """Unprimed LZ78 code length C(z)."""
    return code_length(lz78_parse(z))


def cond_complexity_primed(y: BitString, x: BitString = EMPTY) -> ComplexityEstimate:
    """K(y | x) estimated by LZ78 code length of y with a dictionary primed by x."""
    return ComplexityEstimate(code_length(lz78_parse(y, x)), PRIMED, len(y))


def cond_complexity_diff(y: BitString, x: BitString = EMPTY) -> ComplexityEstimate:
    """K(y | x) estimated as max(0, C(xy) - C(x))."""
    bits = lz78_bits(x + y) - lz78_bits(x)
    return ComplexityEstimate(max(0, bits), DIFF, len(y))


def estimate(y: BitString, x: BitString, method: str) -> ComplexityEstimate:
    if method == PRIMED:
        return cond_complexity_primed(y, x)
    if method == DIFF:
        return cond_complexity_diff(y, x)
    raise ValueError(f"no compressor estimator for method {method!r}")


# --- external byte-stream compressors (diagnostic only) ---------------------

BYTE_COMPRESSORS: dict[str, Callable[[bytes], bytes]] = {
    "zlib": lambda b: zlib.compress(b, 9),
    "bz2": lambda b: bz2.compress(b, 9),
    "lzma": lambda b: lzma.compress(b, preset=9),
}


def byte_compressor_bits(z: BitString, name: str = "zlib") -> int:
    """Compressed size in bits of the bits packed 8 per byte (zero padded)."""
    packed = np.packbits(z.to_array()).tobytes()
    return 8 * len(BYTE_COMPRESSORS[name](packed))


def byte_compressor_cond_bits(y: BitString, x: BitString, name: str = "zlib") -> int:
    return max(0, byte_compressor_bits(x + y, name) - byte_compressor_bits(x, name))


def per_bit(estimate: ComplexityEstimate) -> float:
    return estimate.bits / estimate.input_length if estimate.input_length else math.nan
