"""
Exact modular arithmetic, the Jacobi symbol, Euler witnesses, Carmichael
numbers and the bit-driven Solovay-Strassen metric.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt
from pathlib import Path

import numpy as np

from aitrand.core.config import get_settings
from aitrand.core.exceptions import (
    DataIntegrityError,
    DegenerateSourceError,
    ExhaustionError,
    ParameterError,
    ResourceError,
    SampleTooShortError,
    SourceIOError,
)
from aitrand.core.logging import get_logger
from aitrand.models.responses import SSRun
from aitrand.services.bitstream import BitCursor, BitString

logger = get_logger("NumberTheory")

MAX_MODULUS = 1 << 63
MAX_REJECTIONS = 64
FULL_VALIDATION_LIMIT = 10**12
# cube root of 2^63: an unfactored cofactor has at most two prime factors
TRIAL_PRIME_LIMIT = 1 << 21
WITNESS_ENCODING = (
    "fixed-width rejection sampling: read ceil(log2(n-3)) bits as v, witness i = 2 + v, "
    "redraw if i > n-2; bits are never reused; numbers visited in ascending order each round, "
    "all k witnesses of a round are drawn before any is tested"
)


@dataclass(frozen=True)
class CarmichaelSet:
    bound: int
    numbers: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.numbers)

    def __iter__(self):
        return iter(self.numbers)


def _check_modulus(n: int):
    if n < 3 or n % 2 == 0 or n >= MAX_MODULUS:
        raise ParameterError(f"modulus must be odd, at least 3 and below 2^63, got {n}")


def mod_pow(a: int, e: int, n: int) -> int:
    _check_modulus(n)
    if not 0 <= a < n:
        raise ParameterError(f"base must be a residue in [0, {n}), got {a}")
    if e < 0:
        raise ParameterError("exponent must be non-negative")
    return pow(a, e, n)


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) by the binary reciprocity algorithm."""
    if n < 1 or n % 2 == 0:
        raise ParameterError(f"Jacobi symbol needs an odd positive n, got {n}")
    if a < 0:
        raise ParameterError(f"a must be non-negative, got {a}")
    a %= n
    result = 1
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def euler_witness(i: int, n: int) -> bool:
    """True iff i proves n composite: gcd(i, n) > 1 or i^((n-1)/2) != (i/n) mod n."""
    _check_modulus(n)
    if not 2 <= i <= n - 2:
        raise ParameterError(f"witness candidate must lie in [2, {n - 2}], got {i}")
    if gcd(i, n) > 1:
        return True
    return pow(i, (n - 1) // 2, n) != jacobi(i, n) % n


def _small_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def enumerate_carmichael(bound: int) -> CarmichaelSet:
    """
    All Carmichael numbers <= bound, by a segmented sieve over Korselt's
    criterion.

    A Carmichael number has every prime factor p <= sqrt(n), so only primes up
    to sqrt(bound) are sieved. Within a segment each odd n keeps a running
    cofactor; n survives when it is squarefree, p - 1 | n - 1 for every sieved
    p | n, the cofactor reaches 1 and at least two primes divide it.
    """
    if bound < 3:
        raise ParameterError(f"bound must be at least 3, got {bound}")
    settings = get_settings()
    if bound > settings.carmichael_max_bound:
        raise ResourceError(
            f"bound {bound} exceeds the configured limit {settings.carmichael_max_bound}",
            "Load a precomputed list with load_carmichael_file or raise AITRAND_CARMICHAEL_MAX_BOUND.",
        )
    primes = _small_primes(isqrt(bound))[1:]  # odd primes only
    segment = max(1024, settings.carmichael_segment)
    found: list[int] = []
    for lo in range(0, bound + 1, segment):
        hi = min(bound + 1, lo + segment)
        n = np.arange(lo, hi, dtype=np.int64)
        ok = (n % 2 == 1) & (n >= 3)
        cofactor = n.copy()
        factors = np.zeros(hi - lo, dtype=np.int8)
        for p in primes:
            if p * p > hi - 1:
                break
            start = (-lo) % p
            idx = slice(start, None, p)
            cofactor[idx] //= p
            factors[idx] += 1
            ok[idx] &= (cofactor[idx] % p != 0) & ((n[idx] - 1) % (p - 1) == 0)
        hits = n[ok & (cofactor == 1) & (factors >= 2)]
        found.extend(int(v) for v in hits)
    return CarmichaelSet(bound=bound, numbers=tuple(found))


def _trial_factor(n: int, primes: np.ndarray) -> tuple[list[int], int]:
    """Distinct prime factors of n among `primes`, with the remaining cofactor."""
    divisors = primes[n % primes == 0]
    cofactor = n
    factors = []
    for p in divisors.tolist():
        factors.append(p)
        cofactor //= p
        if cofactor % p == 0:
            factors.append(p)  # repeated factor marks non-squarefree
            while cofactor % p == 0:
                cofactor //= p
    return factors, cofactor


def _korselt_small_part(n: int, primes: np.ndarray) -> tuple[int, bool] | None:
    """
    Trial-divide n by the primes below min(2^21, sqrt(n) + 1).

    Returns the unfactored cofactor and whether it is known to be 1 or prime,
    or None when a small factor already breaks squarefreeness or p - 1 | n - 1.
    """
    limit = min(TRIAL_PRIME_LIMIT, isqrt(n) + 1)
    factors, cofactor = _trial_factor(n, primes[primes < limit])
    if len(set(factors)) != len(factors):
        return None
    if any((n - 1) % (p - 1) for p in factors):
        return None
    factored = cofactor < limit * limit
    if (cofactor == n and factored) or (cofactor == 1 and len(factors) < 2):
        return None  # prime, or a single prime factor
    return cofactor, factored


def korselt_check(n: int, primes: np.ndarray | None = None) -> bool:
    """
    Korselt's criterion: n odd, composite, squarefree and p - 1 | n - 1 for
    every prime p | n.

    Exact whenever trial division below 2^21 leaves a cofactor below 2^42,
    which holds for every n up to 4.4e12. Larger cofactors cannot be
    factored here and raise ParameterError; fermat_check covers those.
    """
    if n < 3 or n % 2 == 0:
        return False
    primes = _small_primes(TRIAL_PRIME_LIMIT) if primes is None else primes
    part = _korselt_small_part(n, primes)
    if part is None:
        return False
    cofactor, factored = part
    if not factored:
        raise ParameterError(f"{n} has an unfactored cofactor {cofactor}; Korselt's criterion is not decidable here")
    return cofactor == 1 or (n - 1) % (cofactor - 1) == 0


def fermat_check(n: int, primes: np.ndarray | None = None) -> bool:
    """
    Partial validation for n whose cofactor after trial division is at least
    2^42. Below 2^63 such a cofactor is a prime, a product of two primes or a
    prime square; squares are rejected, the small factors must satisfy
    Korselt's conditions, and n must pass Fermat tests to the bases 2..13
    coprime to it. This is weaker than Korselt's criterion.
    """
    if n < 3 or n % 2 == 0:
        return False
    primes = _small_primes(TRIAL_PRIME_LIMIT) if primes is None else primes
    part = _korselt_small_part(n, primes)
    if part is None:
        return False
    cofactor, _ = part
    if isqrt(cofactor) ** 2 == cofactor:
        return False
    bases = [b for b in (2, 3, 5, 7, 11, 13) if n % b]
    return all(pow(b, n - 1, n) == 1 for b in bases)


def load_carmichael_file(path: str | Path, sample_stride: int = 16) -> CarmichaelSet:
    """
    Parse a newline-separated ascending list of Carmichael numbers.

    Entries up to 10^12 are all checked against Korselt's criterion; above
    that every `sample_stride`-th entry is checked, falling back to
    fermat_check when its cofactor is too large to factor.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise SourceIOError(f"cannot read Carmichael list {path}: {e}") from e
    primes = _small_primes(TRIAL_PRIME_LIMIT)
    numbers: list[int] = []
    large_seen = 0
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = int(text)
        except ValueError:
            raise DataIntegrityError(f"not a decimal integer: {text!r}", lineno) from None
        if numbers and value <= numbers[-1]:
            raise DataIntegrityError(f"{value} is not above the previous entry {numbers[-1]}", lineno)
        if value >= MAX_MODULUS:
            raise DataIntegrityError(f"{value} is not below 2^63", lineno)
        check = "Korselt's criterion"
        if value <= FULL_VALIDATION_LIMIT:
            valid = korselt_check(value, primes)
        else:
            large_seen += 1
            valid = value % 2 == 1
            if valid and (large_seen % sample_stride == 1 or sample_stride <= 1):
                try:
                    valid = korselt_check(value, primes)
                except ParameterError:
                    check = "the Fermat check"
                    valid = fermat_check(value, primes)
        if not valid:
            raise DataIntegrityError(f"{value} fails {check}", lineno)
        numbers.append(value)
    bound = numbers[-1] if numbers else 0
    logger.info(f"loaded {len(numbers)} Carmichael numbers from {path}")
    return CarmichaelSet(bound=bound, numbers=tuple(numbers))


def write_carmichael_file(cs: CarmichaelSet, path: str | Path) -> Path:
    target = Path(path)
    try:
        target.write_text("".join(f"{n}\n" for n in cs.numbers), encoding="utf-8")
    except OSError as e:
        raise SourceIOError(f"cannot write Carmichael list {path}: {e}") from e
    return target


def _draw_witness(cursor: BitCursor, n: int) -> int:
    width = (n - 4).bit_length()  # ceil(log2(n - 3))
    for _ in range(MAX_REJECTIONS):
        i = 2 + cursor.take_bits(width)
        if i <= n - 2:
            return i
    raise DegenerateSourceError(
        f"{MAX_REJECTIONS} consecutive witness draws for {n} fell outside [2, {n - 2}]"
    )


def ss_carmichael_metric(x: BitString, cs: CarmichaelSet) -> SSRun:
    """
    Bits of x needed to declare every number in cs composite.

    Round k draws k fresh witnesses for each number still pending; one shared
    cursor feeds all draws.
    """
    if len(cs) == 0:
        raise ParameterError("the Carmichael set is empty")
    cursor = BitCursor(x)
    pending = list(cs.numbers)
    declared = 0
    k = 1
    try:
        while True:
            still = []
            for n in pending:
                draws = [_draw_witness(cursor, n) for _ in range(k)]
                if any(euler_witness(i, n) for i in draws):
                    declared += 1
                else:
                    still.append(n)
            pending = still
            if not pending:
                break
            k += 1
    except ExhaustionError as e:
        progress = {
            "k": k,
            "bits_consumed": cursor.position,
            "declared": declared,
            "total": len(cs),
        }
        raise SampleTooShortError(
            f"sample exhausted after {cursor.position} bits in round {k} "
            f"with {progress['declared']} of {len(cs)} numbers declared composite",
            progress,
        ) from e
    return SSRun(
        k=k,
        bits_consumed=cursor.position,
        verdict_complete=True,
        declared=len(cs),
        total=len(cs),
        witness_encoding=WITNESS_ENCODING,
    )
