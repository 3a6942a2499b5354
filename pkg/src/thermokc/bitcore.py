"""Bit-level values, Elias-gamma integer codes and microstate packing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

_BINARY = b"\x00\x01"


@dataclass(frozen=True, slots=True)
class BitString:
    """Immutable finite binary string, stored one byte (0 or 1) per bit.

    ``BitString()`` is the empty string.
    """

    _bits: bytes = b""

    def __post_init__(self):
        if not isinstance(self._bits, bytes):
            object.__setattr__(self, "_bits", bytes(self._bits))
        if self._bits.translate(None, _BINARY):
            raise ValueError("BitString holds only 0/1 symbols")

    @classmethod
    def from_str(cls, text: str) -> "BitString":
        text = text.strip()
        if text in ("", "-"):
            return EMPTY
        if set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(text.encode("ascii").translate(_ASCII_TO_BIT))

    @classmethod
    def from_array(cls, arr) -> "BitString":
        return cls(np.ascontiguousarray(arr, dtype=np.uint8).tobytes())

    @classmethod
    def from_int(cls, value: int, width: int) -> "BitString":
        """Big-endian ``width``-bit representation of ``value``."""
        if width == 0:
            return EMPTY
        return cls.from_str(format(value, f"0{width}b"))

    @property
    def length(self) -> int:
        return len(self._bits)

    def __len__(self) -> int:
        return len(self._bits)

    def __iter__(self):
        return iter(self._bits)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return BitString(self._bits[item])
        return self._bits[item]

    def __add__(self, other: "BitString") -> "BitString":
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString(self._bits + other._bits)

    def __mul__(self, times: int) -> "BitString":
        return BitString(self._bits * times)

    def __lt__(self, other: "BitString") -> bool:
        return self._bits < other._bits

    def __str__(self) -> str:
        return self._bits.translate(_BIT_TO_ASCII).decode("ascii")

    def __repr__(self) -> str:
        return f"BitString('{self}')"

    def to_bytes(self) -> bytes:
        return self._bits

    def to_array(self) -> np.ndarray:
        """Read-only uint8 view of the bits."""
        return np.frombuffer(self._bits, dtype=np.uint8)

    def startswith(self, prefix: "BitString") -> bool:
        return self._bits.startswith(prefix._bits)


_ASCII_TO_BIT = bytes.maketrans(b"01", _BINARY)
_BIT_TO_ASCII = bytes.maketrans(_BINARY, b"01")

EMPTY = BitString()

BitLike = Union[BitString, str]


def as_bits(value: BitLike) -> BitString:
    if isinstance(value, BitString):
        return value
    return BitString.from_str(value)


def concat(a: BitString, b: BitString) -> BitString:
    return a + b


def join(parts: Iterable[BitString]) -> BitString:
    return BitString(b"".join(p.to_bytes() for p in parts))


# --- Elias gamma -----------------------------------------------------------


def gamma_length(n: int) -> int:
    """Codeword length of ``elias_encode(n)`` without building it."""
    if n < 1:
        raise ValueError("Elias gamma is defined for n >= 1")
    return 2 * (n.bit_length() - 1) + 1


def elias_encode(n: int) -> BitString:
    """floor(log2 n) zeros followed by the binary form of n."""
    if n < 1:
        raise ValueError("Elias gamma is defined for n >= 1")
    binary = format(n, "b")
    return BitString.from_str("0" * (len(binary) - 1) + binary)


def elias_decode(bits: BitString, pos: int = 0) -> tuple[int, int]:
    """Decode one gamma codeword starting at ``pos``.

    Returns ``(n, next_pos)``. Raises ``ValueError`` if the stream is
    truncated.
    """
    raw = bits.to_bytes()
    end = len(raw)
    zeros = 0
    while pos + zeros < end and raw[pos + zeros] == 0:
        zeros += 1
    stop = pos + 2 * zeros + 1
    if stop > end:
        raise ValueError("truncated Elias gamma codeword")
    n = 0
    for b in raw[pos + zeros:stop]:
        n = (n << 1) | b
    return n, stop


# --- microstates -----------------------------------------------------------


def pack_microstate(spins) -> BitString:
    """Row-major packing, +1 -> 1 and -1 -> 0."""
    arr = np.asarray(spins)
    if arr.ndim != 2:
        raise ValueError("microstate must be a rectangular 2D array")
    if arr.size == 0:
        raise ValueError("empty microstate")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("spins must be +1 or -1")
    return BitString.from_array(arr.reshape(-1) > 0)


def unpack_microstate(bits: BitString, rows: int, cols: int) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValueError("empty microstate")
    if len(bits) != rows * cols:
        raise ValueError(f"{len(bits)} bits do not fill a {rows}x{cols} lattice")
    flat = bits.to_array().astype(np.int8)
    return (2 * flat - 1).reshape(rows, cols)


def format_microstate(bits: BitString, rows: int, cols: int) -> str:
    if len(bits) != rows * cols:
        raise ValueError(f"{len(bits)} bits do not fill a {rows}x{cols} lattice")
    return f"{rows} {cols}\n{bits}\n"


def parse_microstate(text: str) -> tuple[BitString, int, int]:
    lines = text.split("\n")
    try:
        rows, cols = (int(v) for v in lines[0].split())
        bits = BitString.from_str(lines[1])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed microstate file: {exc}") from None
    if len(bits) != rows * cols:
        raise ValueError(f"{len(bits)} bits do not fill a {rows}x{cols} lattice")
    return bits, rows, cols


def read_bits_file(path) -> BitString:
    """Load either the microstate format or raw ``0``/``1`` lines."""
    with open(path) as fh:
        text = fh.read()
    if len(text.split("\n", 1)[0].split()) == 2:
        try:
            return parse_microstate(text)[0]
        except ValueError:
            pass
    return BitString.from_str("".join(text.split()))


def write_microstate(path, bits: BitString, rows: int, cols: int) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_microstate(bits, rows, cols))
