"""
Deterministic bit sources.

Every generator is a pure function of its parameters. The seeded generator
is xorshift64* (shifts 12/25/27, multiplier 2685821657736338717); RANDU is
kept as a known-weak fixture. Raw hardware output is ingested from files.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from fractions import Fraction
from math import ceil

import numba
import numpy as np

from aitrand.core.config import get_settings
from aitrand.core.exceptions import ParameterError
from aitrand.core.logging import get_logger
from aitrand.models.requests import DEFAULT_BIT_LEN, DEFAULT_GROUP_SIZE, SourceDescriptor, SourceGroup
from aitrand.services.bitstream import BitString, load_raw_file
from aitrand.services.chunker import DEFAULT_CHUNK_BITS, iter_bit_chunks

logger = get_logger("SourceCatalog")

XORSHIFT_MULTIPLIER = 2685821657736338717
RANDU_MULTIPLIER = 65539
RANDU_MODULUS = 1 << 31


@numba.jit(nopython=True, cache=True)
def _xorshift64star_words(seed, count):
    out = np.empty(count, dtype=np.uint64)
    s = seed
    mult = np.uint64(2685821657736338717)
    for i in range(count):
        s ^= s >> np.uint64(12)
        s ^= s << np.uint64(25)
        s ^= s >> np.uint64(27)
        out[i] = s * mult
    return out


@numba.jit(nopython=True, cache=True)
def _biased_packed(seed, threshold, count):
    # one output bit per generator word, written straight into packed bytes
    out = np.zeros((count + 7) // 8, dtype=np.uint8)
    s = seed
    mult = np.uint64(2685821657736338717)
    for i in range(count):
        s ^= s >> np.uint64(12)
        s ^= s << np.uint64(25)
        s ^= s >> np.uint64(27)
        if s * mult < threshold:
            out[i >> 3] |= np.uint8(0x80 >> (i & 7))
    return out


@numba.jit(nopython=True, cache=True)
def _randu_packed(seed, count):
    out = np.zeros((count + 7) // 8, dtype=np.uint8)
    x = seed
    for i in range(count):
        x = (x * 65539) % 2147483648
        if (x >> 30) & 1:
            out[i >> 3] |= np.uint8(0x80 >> (i & 7))
    return out


@numba.jit(nopython=True, cache=True)
def _champernowne_packed(count):
    out = np.zeros((count + 7) // 8, dtype=np.uint8)
    pos = 0
    k = 1
    while pos < count:
        width = 0
        t = k
        while t > 0:
            width += 1
            t >>= 1
        for j in range(width - 1, -1, -1):
            if pos == count:
                break
            if (k >> j) & 1:
                out[pos >> 3] |= np.uint8(0x80 >> (pos & 7))
            pos += 1
        k += 1
    return out


def _check_length(bit_len: int):
    if bit_len < 1:
        raise ParameterError(f"bit_len must be at least 1, got {bit_len}")


def prng_words(seed: int, count: int) -> np.ndarray:
    """The first `count` output words of xorshift64* started from `seed`."""
    if not 0 < seed < 1 << 64:
        raise ParameterError("xorshift64* seed must be a nonzero unsigned 64-bit integer")
    return _xorshift64star_words(np.uint64(seed), count)


def gen_prng(seed: int, bit_len: int) -> BitString:
    _check_length(bit_len)
    words = prng_words(seed, (bit_len + 63) // 64)
    # big-endian words give MSB-first bits
    return BitString(words.astype(">u8").tobytes(), bit_len)


def gen_weak_prng(seed: int, bit_len: int) -> BitString:
    """RANDU (x <- 65539 x mod 2^31), emitting bit 30 of each new state."""
    _check_length(bit_len)
    if not 0 < seed < RANDU_MODULUS or seed % 2 == 0:
        raise ParameterError(f"RANDU seed must be odd and in (0, 2^31), got {seed}")
    return BitString(_randu_packed(np.int64(seed), bit_len).tobytes(), bit_len)


def gen_champernowne(bit_len: int) -> BitString:
    """Binary Champernowne: 1, 10, 11, 100, ... concatenated."""
    _check_length(bit_len)
    return BitString(_champernowne_packed(bit_len).tobytes(), bit_len)


def gen_biased(seed: int, p: float, bit_len: int) -> BitString:
    """Bit i is 1 iff the i-th xorshift64* word, read as a fraction of 2^64, is below p."""
    _check_length(bit_len)
    if not 0.0 < p < 1.0:
        raise ParameterError(f"bias p must lie strictly between 0 and 1, got {p}")
    if not 0 < seed < 1 << 64:
        raise ParameterError("xorshift64* seed must be a nonzero unsigned 64-bit integer")
    # below 2^64 for every double p < 1
    threshold = ceil(Fraction(p) * (1 << 64))
    return BitString(_biased_packed(np.uint64(seed), np.uint64(threshold), bit_len).tobytes(), bit_len)


def vn_normalize(raw: BitString, chunk_bits: int = DEFAULT_CHUNK_BITS) -> BitString:
    """
    von Neumann normalization over non-overlapping pairs:
    00 and 11 are dropped, 01 -> 0, 10 -> 1. A trailing odd bit is dropped.

    Pairs are read chunk by chunk; fewer than 8 output bits are carried
    between chunks so only whole bytes are packed.
    """
    packed: list[bytes] = []
    carry = np.empty(0, dtype=np.uint8)
    total = 0
    for _, bits in iter_bit_chunks(raw.data, raw.bit_len - raw.bit_len % 2, align=2, chunk_bits=chunk_bits):
        pairs = bits.reshape(-1, 2)
        kept = np.concatenate([carry, pairs[pairs[:, 0] != pairs[:, 1], 0]])
        whole = kept.size - kept.size % 8
        packed.append(np.packbits(kept[:whole]).tobytes())
        total += whole
        carry = kept[whole:]
    packed.append(np.packbits(carry).tobytes())
    total += int(carry.size)
    return BitString(b"".join(packed), total)


class Source(ABC):
    @abstractmethod
    def load(self, descriptor: SourceDescriptor) -> BitString:
        pass


class PrngSource(Source):
    def load(self, descriptor: SourceDescriptor) -> BitString:
        return gen_prng(descriptor.seed, descriptor.bit_len)


class WeakPrngSource(Source):
    def load(self, descriptor: SourceDescriptor) -> BitString:
        return gen_weak_prng(descriptor.seed, descriptor.bit_len)


class ChampernowneSource(Source):
    def load(self, descriptor: SourceDescriptor) -> BitString:
        return gen_champernowne(descriptor.bit_len)


class BiasedSource(Source):
    def load(self, descriptor: SourceDescriptor) -> BitString:
        return gen_biased(descriptor.seed, descriptor.bias_p, descriptor.bit_len)


class FileSource(Source):
    def load(self, descriptor: SourceDescriptor) -> BitString:
        return load_raw_file(descriptor.path, descriptor.bit_len, descriptor.bit_order)


class SourceFactory:
    _SOURCES: dict[str, type[Source]] = {
        "prng": PrngSource,
        "weak_prng": WeakPrngSource,
        "champernowne": ChampernowneSource,
        "biased": BiasedSource,
        "file": FileSource,
    }

    @staticmethod
    def get_source(kind: str) -> Source:
        try:
            return SourceFactory._SOURCES[kind]()
        except KeyError:
            raise ParameterError(
                f"Unsupported source kind: {kind}. Supported kinds: {', '.join(SourceFactory._SOURCES)}"
            ) from None


def build_source(descriptor: SourceDescriptor) -> BitString:
    """Materialize a descriptor, applying von Neumann normalization when requested."""
    x = SourceFactory.get_source(descriptor.kind).load(descriptor)
    if descriptor.vn_normalize:
        x = vn_normalize(x)
    if x.bit_len > get_settings().long_run_bits:
        logger.warning(f"long run: {descriptor.label()} yields {x.bit_len} bits")
    return x


def default_catalog(bit_len: int = DEFAULT_BIT_LEN, count: int = DEFAULT_GROUP_SIZE) -> list[SourceGroup]:
    """
    Five generated groups in the layout of the quantum-vs-pseudo-random study:
    two pseudo-random generators, a normalized biased stream (the Quantis-style
    device), a computable normal sequence, and a raw biased stream.
    """
    return [
        SourceGroup(name="xorshift", template=SourceDescriptor(kind="prng", seed=1, bit_len=bit_len), count=count),
        SourceGroup(name="randu", template=SourceDescriptor(kind="weak_prng", seed=1, bit_len=bit_len), count=count),
        SourceGroup(
            name="biased_vn",
            template=SourceDescriptor(kind="biased", seed=1, bias_p=0.6, bit_len=2 * bit_len, vn_normalize=True),
            count=count,
        ),
        SourceGroup(name="champernowne", template=SourceDescriptor(kind="champernowne", bit_len=bit_len), count=count),
        SourceGroup(
            name="biased_raw",
            template=SourceDescriptor(kind="biased", seed=101, bias_p=0.52, bit_len=bit_len),
            count=count,
        ),
    ]
