from fractions import Fraction
from math import ceil

import numpy as np
import pytest
from pydantic import ValidationError

from aitrand.core.exceptions import ParameterError
from aitrand.models.requests import SourceDescriptor, SourceGroup
from aitrand.services.bitstream import BitString
from aitrand.services.sources import (
    build_source,
    default_catalog,
    gen_biased,
    gen_champernowne,
    gen_prng,
    gen_weak_prng,
    vn_normalize,
)

MASK64 = (1 << 64) - 1


def naive_xorshift(seed: int, count: int) -> list[int]:
    s = seed
    words = []
    for _ in range(count):
        s ^= s >> 12
        s ^= (s << 25) & MASK64
        s ^= s >> 27
        words.append((s * 2685821657736338717) & MASK64)
    return words


def bit_text(x: BitString) -> str:
    return "".join(map(str, x.bits().tolist()))


def test_prng_first_word_matches_recurrence():
    (word,) = naive_xorshift(1, 1)
    assert bit_text(gen_prng(1, 64)) == format(word, "064b")
    assert bit_text(gen_prng(1, 8)) == format(word, "064b")[:8]


def test_prng_spans_words():
    words = naive_xorshift(12345, 3)
    expected = "".join(format(w, "064b") for w in words)[:150]
    assert bit_text(gen_prng(12345, 150)) == expected


def test_prng_rejects_zero_seed():
    with pytest.raises(ParameterError):
        gen_prng(0, 8)


def test_weak_prng_emits_bit_30():
    states = []
    x = 1
    for _ in range(3):
        x = (65539 * x) % (1 << 31)
        states.append(x)
    expected = "".join(str((s >> 30) & 1) for s in states)
    assert bit_text(gen_weak_prng(1, 3)) == expected
    assert bit_text(gen_weak_prng(1, 1)) == "0"


@pytest.mark.parametrize("seed", [2, 0, 1 << 31])
def test_weak_prng_seed_checks(seed):
    with pytest.raises(ParameterError):
        gen_weak_prng(seed, 8)


def test_champernowne_prefixes():
    assert bit_text(gen_champernowne(10)) == "1101110010"
    assert bit_text(gen_champernowne(1)) == "1"
    long = bit_text(gen_champernowne(300))
    for n in (1, 7, 64, 299):
        assert long.startswith(bit_text(gen_champernowne(n)))


def test_champernowne_rejects_empty():
    with pytest.raises(ParameterError):
        gen_champernowne(0)


def test_biased_is_balanced_at_one_half():
    x = gen_biased(1, 0.5, 1 << 16)
    assert abs(x.ones() - (1 << 15)) <= 4 * (0.25 * (1 << 16)) ** 0.5


def test_biased_matches_threshold_rule():
    threshold = ceil(Fraction(0.3) * (1 << 64))
    expected = "".join("1" if w < threshold else "0" for w in naive_xorshift(9, 50))
    assert bit_text(gen_biased(9, 0.3, 50)) == expected


def test_biased_near_one():
    assert gen_biased(1, 0.999999, 100).ones() >= 99


@pytest.mark.parametrize("p", [0.0, 1.0, 1.5, -0.1])
def test_biased_rejects_bad_probability(p):
    with pytest.raises(ParameterError):
        gen_biased(1, p, 10)


def test_von_neumann_constant_cases():
    assert vn_normalize(BitString.from_text("01" * 40)) == BitString.from_bits([0] * 40)
    assert vn_normalize(BitString.from_text("1100" * 25)).bit_len == 0


def test_von_neumann_pair_map_and_odd_tail():
    assert bit_text(vn_normalize(BitString.from_text("10 01 11 00 10 1"))) == "101"


def test_von_neumann_unbiases_a_skewed_stream():
    out = vn_normalize(gen_biased(1, 0.9, 1 << 16))
    assert out.bit_len <= 1 << 15
    n = out.bit_len
    assert abs(out.ones() - n / 2) <= 4 * (n / 4) ** 0.5


def test_von_neumann_seed_average_is_centered():
    fractions = []
    for seed in range(1, 21):
        out = vn_normalize(gen_biased(seed, 0.7, 1 << 14))
        fractions.append(out.ones() / out.bit_len)
    assert abs(np.mean(fractions) - 0.5) < 0.01


def test_generators_are_pure():
    d = SourceDescriptor(kind="biased", seed=5, bias_p=0.6, bit_len=4096, vn_normalize=True)
    assert build_source(d) == build_source(d)
    assert gen_weak_prng(3, 999) == gen_weak_prng(3, 999)


def test_build_source_reads_files(tmp_path):
    path = tmp_path / "raw.bin"
    path.write_bytes(bytes([0x0F, 0xF0]))
    x = build_source(SourceDescriptor(kind="file", path=str(path)))
    assert bit_text(x) == "0000111111110000"
    lsb = build_source(SourceDescriptor(kind="file", path=str(path), bit_order="lsb", bit_len=8))
    assert bit_text(lsb) == "11110000"


def test_long_runs_are_logged(monkeypatch, caplog):
    monkeypatch.setenv("AITRAND_LONG_RUN_BITS", "100")
    with caplog.at_level("WARNING", logger="SourceCatalog"):
        build_source(SourceDescriptor(kind="prng", seed=1, bit_len=128))
    assert "long run" in caplog.text


@pytest.mark.parametrize(
    "fields",
    [
        {"kind": "file"},
        {"kind": "prng", "seed": 1},
        {"kind": "prng", "seed": 0, "bit_len": 8},
        {"kind": "weak_prng", "seed": 4, "bit_len": 8},
        {"kind": "biased", "seed": 1, "bit_len": 8},
        {"kind": "biased", "seed": 1, "bias_p": 1.0, "bit_len": 8},
        {"kind": "prng", "seed": 1, "bit_len": 0},
        {"kind": "quantum", "bit_len": 8},
    ],
)
def test_descriptor_validation(fields):
    with pytest.raises(ValidationError):
        SourceDescriptor(**fields)


def test_group_template_expands_seeds():
    group = SourceGroup(name="g", template=SourceDescriptor(kind="prng", seed=10, bit_len=64), count=4)
    assert [s.seed for s in group.strings] == [10, 11, 12, 13]

    weak = SourceGroup(name="w", template=SourceDescriptor(kind="weak_prng", seed=1, bit_len=64), count=3)
    assert [s.seed for s in weak.strings] == [1, 3, 5]

    champ = SourceGroup(name="c", template=SourceDescriptor(kind="champernowne", bit_len=64), count=2)
    assert len(champ.strings) == 2


def test_group_must_not_be_empty():
    with pytest.raises(ValidationError):
        SourceGroup(name="empty")
    with pytest.raises(ValidationError):
        SourceGroup(name="files", template=SourceDescriptor(kind="file", path="a.bin"))


def test_default_catalog_layout():
    groups = default_catalog(bit_len=1024, count=3)
    assert [g.name for g in groups] == ["xorshift", "randu", "biased_vn", "champernowne", "biased_raw"]
    assert all(len(g.strings) == 3 for g in groups)
    assert all(s.vn_normalize for s in groups[2].strings)


def naive_vn(bits: list[int]) -> list[int]:
    return [a for a, b in zip(bits[0::2], bits[1::2]) if a != b]


def test_generators_write_packed_output_directly():
    # lengths off the byte and word grid
    threshold = ceil(Fraction(0.3) * (1 << 64))
    words = naive_xorshift(9, 1003)
    assert bit_text(gen_biased(9, 0.3, 1003)) == "".join("1" if w < threshold else "0" for w in words)

    x, states = 5, []
    for _ in range(1003):
        x = (65539 * x) % (1 << 31)
        states.append(str((x >> 30) & 1))
    assert bit_text(gen_weak_prng(5, 1003)) == "".join(states)

    numerals = "".join(format(k, "b") for k in range(1, 1000))
    assert bit_text(gen_champernowne(5001)) == numerals[:5001]


@pytest.mark.parametrize("bit_len", [1, 2, 63, 10_007, 100_000])
def test_von_neumann_is_chunk_independent(bit_len):
    raw = gen_biased(3, 0.7, bit_len)
    expected = naive_vn(raw.bits().tolist())
    for chunk_bits in (8, 64, 1000):
        out = vn_normalize(raw, chunk_bits=chunk_bits)
        assert out.bit_len == len(expected)
        assert out.bits().tolist() == expected
    assert vn_normalize(raw) == vn_normalize(raw, chunk_bits=64)
