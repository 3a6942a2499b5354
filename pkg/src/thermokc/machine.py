"""A small prefix computer C(p, d) and exact bounded complexity by enumeration.

Instruction encoding (2-bit opcode, Elias-gamma operands)::

    00                    HALT
    01 g(k) b1..bk        EMIT    append the k literal bits
    10 g(i) g(k)          COPY    append d[i-1 : i-1+k]  (1-based offset)
    11 g(k) g(n) b1..bk   REPEAT  append the k-bit block n times

A program is syntactically complete when it decodes to whole instructions
ending in exactly one HALT with no trailing bits.  The set of complete
programs is prefix-free because decoding stops at the first HALT.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional, Union

from .bitcore import EMPTY, BitString, elias_decode, elias_encode, gamma_length, join

OPCODE_BITS = 2
MAX_EXACT_LMAX = 24
MAX_KRAFT_LMAX = 20

HALT, EMIT, COPY, REPEAT = 0, 1, 2, 3
_OPNAMES = {HALT: "HALT", EMIT: "EMIT", COPY: "COPY", REPEAT: "REPEAT"}


class _Diverges(enum.Enum):
    DIVERGES = "DIVERGES"

    def __repr__(self) -> str:
        return "DIVERGES"


DIVERGES = _Diverges.DIVERGES


class Instruction(NamedTuple):
    op: int
    a: int = 0
    b: int = 0
    literal: BitString = EMPTY

    def __str__(self) -> str:
        name = _OPNAMES[self.op]
        if self.op == HALT:
            return name
        if self.op == EMIT:
            return f"EMIT({self.a}, {self.literal})"
        if self.op == COPY:
            return f"COPY({self.a}, {self.b})"
        return f"REPEAT({self.a}, {self.b}, {self.literal})"


def _opcode(op: int) -> BitString:
    return BitString.from_int(op, OPCODE_BITS)


def encode_instruction(ins: Instruction) -> BitString:
    if ins.op == HALT:
        return _opcode(HALT)
    if ins.op == EMIT:
        if len(ins.literal) < 1:
            raise ValueError("EMIT needs at least one literal bit")
        return join([_opcode(EMIT), elias_encode(len(ins.literal)), ins.literal])
    if ins.op == COPY:
        return join([_opcode(COPY), elias_encode(ins.a), elias_encode(ins.b)])
    if ins.op == REPEAT:
        if len(ins.literal) < 1:
            raise ValueError("REPEAT needs a non-empty block")
        return join([_opcode(REPEAT), elias_encode(len(ins.literal)),
                     elias_encode(ins.b), ins.literal])
    raise ValueError(f"unknown opcode {ins.op}")


@dataclass(frozen=True)
class Program:
    code: BitString

    @classmethod
    def assemble(cls, *instructions: Instruction) -> "Program":
        return cls(join(encode_instruction(i) for i in instructions))

    def __len__(self) -> int:
        return len(self.code)

    def __str__(self) -> str:
        return str(self.code)

    def decode(self) -> Optional[list[Instruction]]:
        """Instruction list, or None if the stream is not a complete program."""
        return decode_program(self.code)

    @property
    def is_complete(self) -> bool:
        return self.decode() is not None


# assembler shorthands
def halt() -> Instruction:
    return Instruction(HALT)


def emit(bits) -> Instruction:
    bits = bits if isinstance(bits, BitString) else BitString.from_str(bits)
    return Instruction(EMIT, len(bits), 0, bits)


def copy(offset: int, count: int) -> Instruction:
    return Instruction(COPY, offset, count)


def repeat(times: int, block) -> Instruction:
    block = block if isinstance(block, BitString) else BitString.from_str(block)
    return Instruction(REPEAT, len(block), times, block)


def decode_program(code: BitString) -> Optional[list[Instruction]]:
    raw = code.to_bytes()
    end = len(raw)
    pos = 0
    out: list[Instruction] = []
    try:
        while True:
            if pos + OPCODE_BITS > end:
                return None
            op = raw[pos] * 2 + raw[pos + 1]
            pos += OPCODE_BITS
            if op == HALT:
                out.append(Instruction(HALT))
                return out if pos == end else None
            if op == EMIT:
                k, pos = elias_decode(code, pos)
                if pos + k > end:
                    return None
                out.append(Instruction(EMIT, k, 0, code[pos:pos + k]))
                pos += k
            elif op == COPY:
                i, pos = elias_decode(code, pos)
                k, pos = elias_decode(code, pos)
                out.append(Instruction(COPY, i, k))
            else:
                k, pos = elias_decode(code, pos)
                n, pos = elias_decode(code, pos)
                if pos + k > end:
                    return None
                out.append(Instruction(REPEAT, k, n, code[pos:pos + k]))
                pos += k
    except ValueError:
        return None


@dataclass(frozen=True)
class MachineConfig:
    step_budget: int = 10_000
    output_limit: int = 4096

    def __post_init__(self):
        if self.step_budget < 1 or self.output_limit < 1:
            raise ValueError("step_budget and output_limit must be >= 1")


DEFAULT_CONFIG = MachineConfig()


def run(p: Union[Program, BitString], d: BitString = EMPTY,
        cfg: MachineConfig = DEFAULT_CONFIG) -> Union[BitString, _Diverges]:
    """Execute ``p`` on data ``d``.

    Every instruction costs one step, except REPEAT which costs one step per
    block copy. Malformed streams, out-of-range COPY, an exhausted step budget
    or output beyond ``cfg.output_limit`` all yield ``DIVERGES``.
    """
    code = p.code if isinstance(p, Program) else p
    instructions = decode_program(code)
    if instructions is None:
        return DIVERGES
    data = d.to_bytes()
    out = bytearray()
    steps = 0
    for ins in instructions:
        if ins.op == HALT:
            steps += 1
            if steps > cfg.step_budget:
                return DIVERGES
            return BitString(bytes(out))
        if ins.op == REPEAT:
            steps += ins.b
            chunk_len = ins.a * ins.b
        else:
            steps += 1
            chunk_len = ins.a if ins.op == EMIT else ins.b
        if steps > cfg.step_budget or len(out) + chunk_len > cfg.output_limit:
            return DIVERGES
        if ins.op == EMIT:
            out += ins.literal.to_bytes()
        elif ins.op == COPY:
            start = ins.a - 1
            if start + ins.b > len(data):
                return DIVERGES
            out += data[start:start + ins.b]
        else:
            out += ins.literal.to_bytes() * ins.b
    return DIVERGES  # unreachable: decode guarantees a trailing HALT


# --- enumeration ------------------------------------------------------------


def iter_complete_programs(max_len: int) -> Iterator[BitString]:
    """Every syntactically complete program of at most ``max_len`` bits.

    Halting is not checked; literal bits are enumerated explicitly.
    """

    def literals(k):
        for v in range(1 << k):
            yield BitString.from_int(v, k)

    def walk(prefix: BitString, room: int):
        if room >= 2:
            yield prefix + _opcode(HALT)
        # smallest non-HALT instruction is 4 bits; HALT needs 2 more
        if room < 6:
            return
        budget = room - 2
        k = 1
        while 2 + gamma_length(k) + k <= budget:
            head = prefix + _opcode(EMIT) + elias_encode(k)
            for lit in literals(k):
                yield from walk(head + lit, room - (2 + gamma_length(k) + k))
            k += 1
        i = 1
        while 2 + gamma_length(i) + 1 <= budget:
            k = 1
            while 2 + gamma_length(i) + gamma_length(k) <= budget:
                cost = 2 + gamma_length(i) + gamma_length(k)
                yield from walk(prefix + _opcode(COPY) + elias_encode(i) + elias_encode(k), room - cost)
                k += 1
            i += 1
        k = 1
        while 2 + gamma_length(k) + 1 + k <= budget:
            n = 1
            while 2 + gamma_length(k) + gamma_length(n) + k <= budget:
                cost = 2 + gamma_length(k) + gamma_length(n) + k
                head = prefix + _opcode(REPEAT) + elias_encode(k) + elias_encode(n)
                for lit in literals(k):
                    yield from walk(head + lit, room - cost)
                n += 1
            k += 1

    yield from walk(EMPTY, max_len)


@dataclass(frozen=True)
class ExactComplexity:
    """Bounded K_C(alpha | d). ``value`` is None when UNKNOWN."""

    value: Optional[int]
    bound: int
    witness: Optional[Program] = None

    @property
    def known(self) -> bool:
        return self.value is not None

    def __str__(self) -> str:
        if self.value is None:
            return "UNKNOWN"
        return f"{self.value},{self.witness}"


def exact_k(alpha: BitString, d: BitString = EMPTY, L_max: int = MAX_EXACT_LMAX,
            cfg: MachineConfig = DEFAULT_CONFIG) -> ExactComplexity:
    """Shortest program of length <= L_max with ``run(p, d) == alpha``.

    Ties at the minimal length go to the lexicographically smallest program.
    The search walks only programs whose partial output is still a prefix of
    ``alpha`` (output is append-only, so no other program can succeed) and
    cuts branches that cannot beat the best length found so far. The result
    is the same as running every bit string of length <= L_max.
    """
    if not 0 <= L_max <= MAX_EXACT_LMAX:
        raise ValueError(f"L_max must be in [0, {MAX_EXACT_LMAX}], got {L_max}")
    target = alpha.to_bytes()
    data = d.to_bytes()
    n_alpha, n_data = len(target), len(data)
    if n_alpha > cfg.output_limit:
        return ExactComplexity(None, L_max)

    best: list = [L_max, None]  # (length bound, best code string)
    halt_code = "00"

    def consider(code: str):
        if best[1] is None or len(code) < best[0] or code < best[1]:
            best[0], best[1] = len(code), code

    def walk(code: str, pos: int, steps: int):
        room = best[0] - len(code)
        if pos == n_alpha and steps + 1 <= cfg.step_budget and room >= 2:
            consider(code + halt_code)
        budget = room - 2  # reserve HALT
        if budget < 4 or pos == n_alpha:
            return
        left = n_alpha - pos
        for k in range(1, left + 1):
            cost = 2 + gamma_length(k) + k
            if cost > budget:
                break
            if steps + 1 <= cfg.step_budget:
                lit = target[pos:pos + k]
                walk(code + "01" + str(elias_encode(k)) + _s(lit), pos + k, steps + 1)
        for i in range(1, n_data + 1):
            if 2 + gamma_length(i) + 1 > budget:
                break
            for k in range(1, min(n_data - i + 1, left) + 1):
                cost = 2 + gamma_length(i) + gamma_length(k)
                if cost > budget:
                    break
                if steps + 1 <= cfg.step_budget and data[i - 1:i - 1 + k] == target[pos:pos + k]:
                    walk(code + "10" + str(elias_encode(i)) + str(elias_encode(k)), pos + k, steps + 1)
        for k in range(1, left + 1):
            if 2 + gamma_length(k) + 1 + k > budget:
                break
            block = target[pos:pos + k]
            n = 1
            while pos + n * k <= n_alpha and target[pos + (n - 1) * k:pos + n * k] == block:
                cost = 2 + gamma_length(k) + gamma_length(n) + k
                if cost > budget:
                    break
                if steps + n <= cfg.step_budget:
                    walk(code + "11" + str(elias_encode(k)) + str(elias_encode(n)) + _s(block),
                         pos + n * k, steps + n)
                n += 1

    walk("", 0, 0)
    if best[1] is None:
        return ExactComplexity(None, L_max)
    return ExactComplexity(best[0], L_max, Program(BitString.from_str(best[1])))


def _s(raw: bytes) -> str:
    return "".join("1" if b else "0" for b in raw)


def kraft_sum(L_max: int, d: BitString = EMPTY, cfg: MachineConfig = DEFAULT_CONFIG) -> Fraction:
    """Exact sum of 2^-|p| over complete, halting programs with |p| <= L_max.

    Halting never depends on literal bit values, so literals are counted by
    multiplicity instead of being enumerated.
    """
    if not 0 <= L_max <= MAX_KRAFT_LMAX:
        raise ValueError(f"L_max must be in [0, {MAX_KRAFT_LMAX}], got {L_max}")
    counts = halting_program_counts(L_max, len(d), cfg.step_budget, cfg.output_limit)
    return Fraction(sum(c << (L_max - L) for L, c in enumerate(counts)), 1 << L_max)


@lru_cache(maxsize=64)
def halting_program_counts(L_max: int, data_len: int, step_budget: int,
                           output_limit: int) -> tuple[int, ...]:
    """Number of complete halting programs of each exact length 0..L_max."""

    @lru_cache(maxsize=None)
    def completions(room: int, out_len: int, steps: int) -> tuple[int, ...]:
        # counts[j] = number of halting suffixes of exactly j bits
        counts = [0] * (room + 1)
        if room >= 2 and steps + 1 <= step_budget:
            counts[2] += 1

        def add(cost, mult, new_out, new_steps):
            if new_steps > step_budget or new_out > output_limit:
                return
            sub = completions(room - cost, new_out, new_steps)
            for j, c in enumerate(sub):
                if c:
                    counts[cost + j] += mult * c

        budget = room - 2
        k = 1
        while 2 + gamma_length(k) + k <= budget:
            add(2 + gamma_length(k) + k, 1 << k, out_len + k, steps + 1)
            k += 1
        i = 1
        while 2 + gamma_length(i) + 1 <= budget:
            k = 1
            while 2 + gamma_length(i) + gamma_length(k) <= budget:
                if i - 1 + k <= data_len:
                    add(2 + gamma_length(i) + gamma_length(k), 1, out_len + k, steps + 1)
                k += 1
            i += 1
        k = 1
        while 2 + gamma_length(k) + 1 + k <= budget:
            n = 1
            while 2 + gamma_length(k) + gamma_length(n) + k <= budget:
                add(2 + gamma_length(k) + gamma_length(n) + k, 1 << k, out_len + k * n, steps + n)
                n += 1
            k += 1
        return tuple(counts)

    return completions(L_max, 0, 0)
