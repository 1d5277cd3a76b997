import math

import numpy as np
import pytest

import bruteforce as bf
from evodemo.encoding import (
    BitGenome,
    EncodingSpec,
    crossover,
    decode,
    mutate,
    occurrence_stats,
    random_genome,
    state_value_distance,
    sub_encoding_value,
)
from evodemo.errors import ContractViolationError


def spec_1d(bits, low, high, kind="discrete"):
    return EncodingSpec(dims=1, bits_per_dim=bits, bounds=((low, high),), kind=kind)


def test_sub_encoding_is_msb_first():
    spec = spec_1d(4, 0, 8)
    assert sub_encoding_value(BitGenome.from_string("1000"), spec, 0) == 8
    assert sub_encoding_value(BitGenome.from_string("0001"), spec, 0) == 1
    assert sub_encoding_value(BitGenome.from_string("1111"), spec, 0) == 15


def test_discrete_decode_matches_enumeration_oracle():
    # frozen oracle: floor mapping of all 16 codes onto [0, 8]
    expected = [0, 0, 1, 1, 2, 2, 3, 3, 4, 5, 5, 6, 6, 7, 7, 8]
    spec = spec_1d(4, 0, 8)
    for e in range(16):
        genome = BitGenome.from_string(format(e, "04b"))
        assert decode(genome, spec) == (expected[e],)


@pytest.mark.parametrize(
    "bits,ratio",
    [(4, 2.0), (5, 4 / 3), (6, 8 / 7)],
)
def test_occurrence_ratio_over_nine_values(bits, ratio):
    stats = occurrence_stats(spec_1d(bits, 0, 8))
    assert stats.probability_ratio == ratio
    # the ratio summarizes real enumeration counts, not just the formula
    counts = bf.discrete_value_counts(bits, 0, 8)
    assert max(counts.values()) / min(counts.values()) == ratio
    assert stats.higher_probability == max(counts.values()) / 2**bits
    assert stats.lower_probability == min(counts.values()) / 2**bits


def test_discrete_decode_every_code_agrees_with_oracle():
    for bits in (4, 5, 6):
        for low, high in ((0, 8), (1, 9), (-3, 3)):
            spec = spec_1d(bits, low, high)
            for e in range(2**bits):
                genome = BitGenome.from_string(format(e, f"0{bits}b"))
                assert decode(genome, spec)[0] == bf.decode_discrete(genome.bits, low, high)


def test_continuous_decode_endpoints_are_exact():
    spec = spec_1d(9, -0.15, 0.15, kind="continuous")
    assert decode(BitGenome.from_string("0" * 9), spec) == (-0.15,)
    assert decode(BitGenome.from_string("1" * 9), spec) == (0.15,)


def test_continuous_decode_matches_oracle_table():
    # frozen oracle: 3-bit codes over [-1, 1]
    expected = [
        -1.0,
        -0.7142857142857143,
        -0.4285714285714286,
        -0.1428571428571429,
        0.1428571428571428,
        0.4285714285714286,
        0.7142857142857142,
        1.0,
    ]
    spec = spec_1d(3, -1.0, 1.0, kind="continuous")
    for e in range(8):
        genome = BitGenome.from_string(format(e, "03b"))
        assert decode(genome, spec)[0] == pytest.approx(expected[e], abs=1e-15)


def test_continuous_resolution_nine_bits():
    spec = spec_1d(9, -0.15, 0.15, kind="continuous")
    spacing = state_value_distance(spec)
    assert spacing == pytest.approx(0.0005870841487279843, abs=1e-18)
    assert spacing < 0.001


def test_multi_dimension_decode_splits_genome_per_dimension():
    spec = EncodingSpec(dims=2, bits_per_dim=4, bounds=((0, 8), (1, 9)), kind="discrete")
    genome = BitGenome.from_string("10000000")
    assert decode(genome, spec) == (4, 1)


def test_decode_rejects_wrong_genome_length():
    spec = spec_1d(4, 0, 8)
    with pytest.raises(ContractViolationError):
        decode(BitGenome.from_string("101"), spec)


def test_discrete_spec_requires_enough_codes():
    with pytest.raises(ContractViolationError):
        spec_1d(2, 0, 8)  # 4 codes cannot cover 9 values


def test_genome_string_round_trip():
    genome = BitGenome.from_string("10110")
    assert genome.as_string() == "10110"
    assert BitGenome.from_string(genome.as_string()) == genome


def test_random_genome_is_seed_deterministic():
    spec = EncodingSpec(dims=2, bits_per_dim=6, bounds=((1, 9), (1, 9)), kind="discrete")
    a = random_genome(np.random.default_rng(7), spec)
    b = random_genome(np.random.default_rng(7), spec)
    assert a == b
    assert len(a.bits) == spec.genome_length


def test_mutation_flips_exactly_one_bit():
    spec = spec_1d(8, 0, 8)
    rng = np.random.default_rng(3)
    for _ in range(50):
        genome = random_genome(rng, spec)
        child = mutate(genome, rng)
        flips = sum(a != b for a, b in zip(genome.bits, child.bits))
        assert flips == 1


def test_crossover_single_cut_preserves_segments():
    rng = np.random.default_rng(5)
    a = BitGenome.from_string("11111111")
    b = BitGenome.from_string("00000000")
    for _ in range(50):
        bits = crossover(a, b, rng).as_string()
        # ones then zeros, with at least one of each: a single interior cut
        assert "01" not in bits
        assert "1" in bits and "0" in bits
