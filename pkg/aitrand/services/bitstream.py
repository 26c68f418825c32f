"""
Packed bit strings, raw file ingestion, block counting and sequential
bit consumption.

Bits are stored MSB-first: bit i lives in byte i // 8 at position
7 - (i % 8). Pad bits of the final byte are always zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from pathlib import Path
from typing import Iterable, Literal

import numpy as np

from aitrand.core.exceptions import (
    ExhaustionError,
    InputTooShortError,
    LengthError,
    ParameterError,
    SourceIOError,
)
from aitrand.services.chunker import iter_bit_chunks, iter_byte_rows

BitOrder = Literal["msb", "lsb"]

MAX_BLOCK_BITS = 16
MAX_TAKE_BITS = 63

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)
_REVERSED = np.array([int(f"{i:08b}"[::-1], 2) for i in range(256)], dtype=np.uint8)


def popcount(buf: np.ndarray) -> int:
    """Number of set bits in a uint8 array."""
    return int(_POPCOUNT[buf].sum(dtype=np.int64))


@dataclass(frozen=True, eq=True)
class BitString:
    """Immutable packed sequence of bits with an exact bit length."""

    data: bytes
    bit_len: int

    def __post_init__(self):
        data = bytes(self.data)
        if self.bit_len < 0:
            raise LengthError(f"bit_len must be non-negative, got {self.bit_len}")
        if self.bit_len > 8 * len(data):
            raise LengthError(
                f"bit_len {self.bit_len} exceeds the {8 * len(data)} bits supplied"
            )
        nbytes = (self.bit_len + 7) // 8
        data = data[:nbytes]
        pad = 8 * nbytes - self.bit_len
        if pad and data[-1] & ((1 << pad) - 1):
            data = data[:-1] + bytes([data[-1] & (0xFF << pad) & 0xFF])
        object.__setattr__(self, "data", data)

    def __len__(self) -> int:
        return self.bit_len

    def __repr__(self) -> str:
        return f"BitString(bit_len={self.bit_len}, sha_prefix={self.data[:4].hex()})"

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> BitString:
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        if arr.size and arr.max() > 1:
            raise ParameterError("bits must be 0 or 1")
        return cls(np.packbits(arr).tobytes(), int(arr.size))

    @classmethod
    def from_text(cls, text: str) -> BitString:
        """Build from a string of '0'/'1' characters (whitespace ignored)."""
        cleaned = "".join(text.split())
        if set(cleaned) - {"0", "1"}:
            raise ParameterError("bit text may only contain 0 and 1")
        return cls.from_bits(np.frombuffer(cleaned.encode(), dtype=np.uint8) - ord("0"))

    def as_array(self) -> np.ndarray:
        """Read-only uint8 view of the packed bytes."""
        return np.frombuffer(self.data, dtype=np.uint8)

    def bits(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Unpacked uint8 array of bits [start, stop)."""
        stop = self.bit_len if stop is None else min(stop, self.bit_len)
        if start >= stop:
            return np.zeros(0, dtype=np.uint8)
        first = start // 8
        last = (stop + 7) // 8
        unpacked = np.unpackbits(self.as_array()[first:last])
        offset = start - 8 * first
        return unpacked[offset : offset + (stop - start)]

    def ones(self, stop: int | None = None) -> int:
        """Number of 1-bits among the first `stop` bits (all bits by default)."""
        stop = self.bit_len if stop is None else min(stop, self.bit_len)
        full = stop // 8
        total = popcount(self.as_array()[:full])
        if stop % 8:
            total += int(self.bits(8 * full, stop).sum())
        return total

    def to_bytes(self) -> bytes:
        return self.data

    def prefix(self, bit_len: int) -> BitString:
        if bit_len > self.bit_len:
            raise LengthError(f"prefix of {bit_len} bits from a {self.bit_len}-bit string")
        return BitString(self.data, bit_len)


@dataclass
class BitCursor:
    """
    Consuming reader over a BitString. Bits are never re-read.

    A cursor has a single owner; it must not be shared between tasks.
    """

    source: BitString
    position: int = field(default=0)

    @property
    def remaining(self) -> int:
        return self.source.bit_len - self.position

    def take_bits(self, k: int) -> int:
        if not 1 <= k <= MAX_TAKE_BITS:
            raise ParameterError(f"k must be in 1..{MAX_TAKE_BITS}, got {k}")
        if k > self.remaining:
            raise ExhaustionError(k, self.remaining)
        first = self.position // 8
        last = (self.position + k + 7) // 8
        window = int.from_bytes(self.source.data[first:last], "big")
        shift = 8 * (last - first) - (self.position - 8 * first) - k
        self.position += k
        return (window >> shift) & ((1 << k) - 1)


@dataclass(frozen=True, eq=False)
class BlockCounts:
    m: int
    counts: np.ndarray
    blocks_total: int

    def __post_init__(self):
        self.counts.setflags(write=False)


def from_packed_bytes(data: bytes, bit_len: int, bit_order: BitOrder = "msb") -> BitString:
    """
    Build a BitString from packed bytes.

    With bit_order="lsb" the input is taken least-significant-bit first within
    each byte and is normalized to the internal MSB-first layout.
    """
    if bit_len > 8 * len(data):
        raise LengthError(f"bit_len {bit_len} exceeds the {8 * len(data)} bits supplied")
    if bit_order == "lsb":
        data = _REVERSED[np.frombuffer(data, dtype=np.uint8)].tobytes()
    elif bit_order != "msb":
        raise ParameterError(f"unknown bit order {bit_order!r}")
    return BitString(data, bit_len)


def load_raw_file(
    path: str | Path, truncate_bits: int | None = None, bit_order: BitOrder = "msb"
) -> BitString:
    """Read a headerless raw dump; bit length is 8 x file size unless truncated."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise SourceIOError(f"cannot read raw bit file {path}: {e}") from e
    bit_len = 8 * len(data)
    if truncate_bits is not None:
        if truncate_bits > bit_len:
            raise LengthError(
                f"truncate_bits {truncate_bits} exceeds the {bit_len} bits in {path}"
            )
        bit_len = truncate_bits
    return from_packed_bytes(data, bit_len, bit_order)


def write_raw_file(x: BitString, path: str | Path) -> Path:
    target = Path(path)
    try:
        target.write_bytes(x.data)
    except OSError as e:
        raise SourceIOError(f"cannot write raw bit file {path}: {e}") from e
    return target


def take_bits(c: BitCursor, k: int) -> int:
    return c.take_bits(k)


def count_blocks(x: BitString, m: int) -> BlockCounts:
    """
    Count non-overlapping m-bit blocks by lexicographic value.

    A trailing remainder shorter than m is discarded.
    """
    if not 1 <= m <= MAX_BLOCK_BITS:
        raise ParameterError(f"block length must be in 1..{MAX_BLOCK_BITS}, got {m}")
    if x.bit_len < m:
        raise InputTooShortError(f"{x.bit_len} bits cannot hold a {m}-bit block")
    total = x.bit_len // m
    size = 1 << m
    counts = np.zeros(size, dtype=np.int64)

    unit = lcm(8, m)
    if unit <= 64:
        group = unit // 8
        per_group = unit // m
        rows = total // per_group
        mask = np.uint64(size - 1)
        for chunk in iter_byte_rows(x.data, group, rows):
            words = np.zeros(len(chunk), dtype=np.uint64)
            for col in range(group):
                words = (words << np.uint64(8)) | chunk[:, col].astype(np.uint64)
            for j in range(per_group):
                values = (words >> np.uint64(m * (per_group - 1 - j))) & mask
                counts += np.bincount(values.astype(np.int64), minlength=size)
        done = rows * per_group
    else:
        weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
        for _, bits in iter_bit_chunks(x.data, total * m, align=m):
            values = bits.reshape(-1, m).astype(np.int64) @ weights
            counts += np.bincount(values, minlength=size)
        done = total

    # leftover whole blocks after the last complete byte group
    if done < total:
        tail = x.bits(done * m, total * m).reshape(-1, m)
        weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
        counts += np.bincount(tail.astype(np.int64) @ weights, minlength=size)

    return BlockCounts(m=m, counts=counts, blocks_total=total)
