"""
Chunked access to packed bit strings.

Large samples (the battery accepts 2^32-bit dumps) are never unpacked in one
piece. Chunks always start on a byte boundary and, when an alignment is
given, on a block boundary as well, so per-chunk results can simply be
summed or carried over.
"""
from math import lcm
from typing import Iterator

import numpy as np

DEFAULT_CHUNK_BITS = 1 << 22


def aligned_chunk_bits(align: int = 1, chunk_bits: int = DEFAULT_CHUNK_BITS) -> int:
    """Largest multiple of lcm(8, align) not exceeding chunk_bits (at least one unit)."""
    unit = lcm(8, align)
    return max(unit, (chunk_bits // unit) * unit)


def iter_bit_chunks(
    data: bytes,
    stop: int,
    align: int = 1,
    chunk_bits: int = DEFAULT_CHUNK_BITS,
) -> Iterator[tuple[int, np.ndarray]]:
    """
    Yield (offset, bits) pairs covering bits [0, stop) of packed MSB-first data.

    Each `bits` array is uint8 with one bit per element.
    """
    size = aligned_chunk_bits(align, chunk_bits)
    raw = np.frombuffer(data, dtype=np.uint8)
    offset = 0
    while offset < stop:
        count = min(size, stop - offset)
        first = offset // 8
        last = (offset + count + 7) // 8
        yield offset, np.unpackbits(raw[first:last], count=count)
        offset += count


def iter_byte_rows(
    data: bytes, group: int, rows: int, chunk_rows: int = 1 << 20
) -> Iterator[np.ndarray]:
    """Yield the first rows*group bytes reshaped to (-1, group), in row chunks."""
    raw = np.frombuffer(data, dtype=np.uint8)[: rows * group].reshape(rows, group)
    for start in range(0, rows, chunk_rows):
        yield raw[start : start + chunk_rows]
