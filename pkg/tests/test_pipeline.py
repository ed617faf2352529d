import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aoakey import (AngleOfArrival, BitStream, MusicEstimator, PipelineConfig,
                    QuantizerConfig, ReferenceConvention, XsbsEstimator,
                    align_reference, bit_mismatch_rate, combine_streams,
                    encode_levels, generate_key_pair, quantize, quantize_sequence,
                    random_aoa_sequence)

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# reference alignment
# ---------------------------------------------------------------------------

def test_bob_shared_reference_subtracts_pi():
    conv = ReferenceConvention(mode="shared-reference")
    est = AngleOfArrival(azimuth=3 * np.pi / 2, elevation=1.0)
    got = align_reference(est, conv, "bob")
    assert got.azimuth == pytest.approx(np.pi / 2)
    assert got.elevation == pytest.approx(1.0)


def test_alice_identity_any_mode():
    for mode in ("shared-reference", "opposite-reference"):
        conv = ReferenceConvention(mode=mode)
        est = AngleOfArrival(azimuth=1.234, elevation=0.5)
        got = align_reference(est, conv, "alice")
        assert got.azimuth == pytest.approx(1.234)


def test_bob_opposite_reference_identity():
    conv = ReferenceConvention(mode="opposite-reference")
    est = AngleOfArrival(azimuth=2.0)
    assert align_reference(est, conv, "bob").azimuth == pytest.approx(2.0)


def test_alignment_makes_noiseless_nodes_agree():
    # both conventions recover the common angle from each node's raw bearing
    for mode in ("shared-reference", "opposite-reference"):
        conv = ReferenceConvention(mode=mode)
        for common in np.linspace(0, TWO_PI, 9, endpoint=False):
            alice_raw = AngleOfArrival(common)
            bob_raw = AngleOfArrival((common + np.pi) % TWO_PI
                                     if mode == "shared-reference" else common)
            a = align_reference(alice_raw, conv, "alice").azimuth
            b = align_reference(bob_raw, conv, "bob").azimuth
            assert a == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------------------
# quantizer
# ---------------------------------------------------------------------------

def test_quantize_bottom_level():
    cfg = QuantizerConfig(n_quan=5, input_range=(0.0, 1.0))
    assert quantize(0.0, cfg) == 0


def test_quantize_hand_value():
    # 270 degrees with 7 bits over the full circle: floor(270/360 * 128) = 96
    cfg = QuantizerConfig(n_quan=7, input_range=(0.0, TWO_PI), wrap=True)
    assert quantize(np.deg2rad(270.0), cfg) == 96


def test_quantize_top_clamp():
    cfg = QuantizerConfig(n_quan=3, input_range=(0.0, 1.0 + 1e-12))
    assert quantize(1.0, cfg) == 7


@given(st.lists(st.floats(min_value=0.0, max_value=0.999999), min_size=2, max_size=40))
@settings(deadline=None, max_examples=50)
def test_quantize_monotone(values):
    cfg = QuantizerConfig(n_quan=6, input_range=(0.0, 1.0))
    values = sorted(values)
    idx = quantize_sequence(np.array(values), cfg)
    assert np.all(np.diff(idx) >= 0)


def test_quantize_rejects_non_finite():
    cfg = QuantizerConfig(n_quan=4, input_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        quantize(float("nan"), cfg)


def test_quantize_wraps_azimuth():
    cfg = QuantizerConfig(n_quan=7, input_range=(0.0, TWO_PI), wrap=True)
    assert quantize(np.deg2rad(270.0) + TWO_PI, cfg) == 96


def test_quantizer_partitions_range():
    # every in-range value maps to exactly one level; boundaries are uniform
    cfg = QuantizerConfig(n_quan=3, input_range=(0.0, 8.0))
    values = np.arange(0.0, 8.0, 0.5)
    idx = quantize_sequence(values, cfg)
    np.testing.assert_array_equal(idx, np.repeat(np.arange(8), 2))


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def test_encode_zero_index():
    cfg = PipelineConfig(n_quan=3, n_encod=2, n_comb=2)
    stream = encode_levels([0], cfg)
    np.testing.assert_array_equal(stream.bits, [0, 0, 0, 0])


def test_encode_gray_adjacency():
    # adjacent indices differ in exactly one bit before repetition
    for n_quan in range(2, 9):
        cfg = PipelineConfig(n_quan=n_quan, n_encod=1, n_comb=1)
        words = encode_levels(np.arange(1 << n_quan), cfg).bits.reshape(-1, n_quan)
        flips = (words[1:] != words[:-1]).sum(axis=1)
        assert np.all(flips == 1)


def test_encode_repetition_degenerate():
    cfg = PipelineConfig(n_quan=5, n_encod=1, n_comb=3)
    stream = encode_levels(np.arange(32), cfg)
    assert len(stream) == 32 * 5


def test_encode_repeats_msb():
    cfg = PipelineConfig(n_quan=3, n_encod=3, n_comb=2)
    word = encode_levels([7], cfg).bits  # gray(7) = 100
    np.testing.assert_array_equal(word, [1, 1, 1, 0, 0])


def test_encode_rejects_out_of_range():
    cfg = PipelineConfig(n_quan=3, n_encod=1, n_comb=1)
    with pytest.raises(ValueError):
        encode_levels([8], cfg)


def test_gray_never_worse_than_binary_for_adjacent_levels():
    # exhaustive over all adjacent index pairs: the Gray-coded (plus MSB
    # repetition) words mismatch in at most as many bits as plain binary words
    for n_quan in range(2, 9):
        for n_encod in (1, 2, 3):
            idx = np.arange((1 << n_quan) - 1)
            cfg = PipelineConfig(n_quan=n_quan, n_encod=n_encod, n_comb=1)
            width = cfg.encoded_width
            lo = encode_levels(idx, cfg).bits.reshape(-1, width)
            hi = encode_levels(idx + 1, cfg).bits.reshape(-1, width)
            gray_flips = (lo != hi).sum(axis=1)

            def binary_words(values):
                cols = [(values >> (n_quan - 1)) & 1] * n_encod
                cols += [(values >> (n_quan - 1 - i)) & 1 for i in range(1, n_quan)]
                return np.stack(cols, axis=1)

            bin_flips = (binary_words(idx) != binary_words(idx + 1)).sum(axis=1)
            assert np.all(gray_flips <= bin_flips)


# ---------------------------------------------------------------------------
# combining
# ---------------------------------------------------------------------------

def _stream_of(indices, cfg):
    return encode_levels(np.asarray(indices), cfg)


def test_combine_bit_budget():
    cfg = PipelineConfig(n_quan=7, n_encod=2, n_comb=5)
    a = _stream_of(np.arange(10), cfg)
    b = _stream_of(np.arange(10, 20), cfg)
    combined = combine_streams(a, b, cfg)
    assert len(combined) == 10 * 2 * cfg.n_comb


def test_combine_no_drop_when_comb_equals_quan():
    cfg = PipelineConfig(n_quan=4, n_encod=1, n_comb=4)
    a = _stream_of([3, 9], cfg)
    b = _stream_of([5, 1], cfg)
    combined = combine_streams(a, b, cfg)
    expect = np.concatenate([a.bits[:4], b.bits[:4], a.bits[4:], b.bits[4:]])
    np.testing.assert_array_equal(combined.bits, expect)


def test_combine_self_palindrome():
    cfg = PipelineConfig(n_quan=5, n_encod=2, n_comb=3)
    a = _stream_of(np.arange(6), cfg)
    combined = combine_streams(a, a, cfg)
    per = combined.bits.reshape(-1, 2 * cfg.n_comb)
    np.testing.assert_array_equal(per[:, :cfg.n_comb], per[:, cfg.n_comb:])


def test_combine_rejects_mismatched_lengths():
    cfg = PipelineConfig(n_quan=4, n_encod=1, n_comb=2)
    a = _stream_of([1, 2], cfg)
    b = _stream_of([1], cfg)
    with pytest.raises(ValueError):
        combine_streams(a, b, cfg)


# ---------------------------------------------------------------------------
# bit mismatch rate
# ---------------------------------------------------------------------------

def test_bmr_identical_zero():
    a = BitStream(bits=np.array([0, 1, 1, 0], dtype=np.uint8))
    assert bit_mismatch_rate(a, a) == 0.0


def test_bmr_complement_one():
    a = BitStream(bits=np.array([0, 1, 1, 0], dtype=np.uint8))
    b = BitStream(bits=1 - a.bits)
    assert bit_mismatch_rate(a, b) == 1.0


def test_bmr_random_streams_near_half():
    rng = np.random.default_rng(12)
    a = BitStream(bits=rng.integers(0, 2, 10000, dtype=np.uint8))
    b = BitStream(bits=rng.integers(0, 2, 10000, dtype=np.uint8))
    assert abs(bit_mismatch_rate(a, b) - 0.5) < 0.03


def test_bmr_symmetry_and_triangle():
    rng = np.random.default_rng(13)
    a, b, c = (BitStream(bits=rng.integers(0, 2, 512, dtype=np.uint8))
               for _ in range(3))
    assert bit_mismatch_rate(a, b) == bit_mismatch_rate(b, a)
    assert bit_mismatch_rate(a, c) <= bit_mismatch_rate(a, b) + bit_mismatch_rate(b, c)


def test_bmr_length_mismatch():
    a = BitStream(bits=np.zeros(4, dtype=np.uint8))
    b = BitStream(bits=np.zeros(5, dtype=np.uint8))
    with pytest.raises(ValueError):
        bit_mismatch_rate(a, b)


def test_bitstream_hex():
    a = BitStream(bits=np.array([1, 0, 1, 0, 1, 0, 1, 0], dtype=np.uint8))
    assert a.to_hex() == "aa"


# ---------------------------------------------------------------------------
# end-to-end key pair
# ---------------------------------------------------------------------------

def test_generate_key_pair_noiseless_bmr_zero():
    truths = random_aoa_sequence(8, rng_seed=3)
    cfg = PipelineConfig(n_quan=7, n_encod=2, n_comb=2)
    conv = ReferenceConvention(mode="opposite-reference")
    est = XsbsEstimator()
    alice, bob, bmr = generate_key_pair(truths, est, est, conv, cfg,
                                        snr_db=200.0, n=16, seed=4)
    assert bmr == 0.0
    assert np.array_equal(alice.bits, bob.bits)
    assert len(alice) == 8 * 2 * cfg.n_comb


def test_generate_key_pair_noiseless_shared_reference_music():
    # Bob's instrument sees the bearing plus pi; the even-element array is
    # symmetric under that rotation so the aligned estimates match exactly
    truths = random_aoa_sequence(6, rng_seed=9)
    cfg = PipelineConfig(n_quan=7, n_encod=2, n_comb=2)
    est = MusicEstimator()
    _, _, bmr = generate_key_pair(truths, est, est, ReferenceConvention(), cfg,
                                  snr_db=200.0, n=16, seed=10)
    assert bmr == 0.0


def test_generate_key_pair_mixed_estimators_deterministic():
    truths = random_aoa_sequence(4, rng_seed=5)
    cfg = PipelineConfig()
    conv = ReferenceConvention()
    m, x = MusicEstimator(), XsbsEstimator()
    out1 = generate_key_pair(truths, m, x, conv, cfg, snr_db=-5.0, n=100, seed=6)
    out2 = generate_key_pair(truths, m, x, conv, cfg, snr_db=-5.0, n=100, seed=6)
    assert np.array_equal(out1[0].bits, out2[0].bits)
    assert np.array_equal(out1[1].bits, out2[1].bits)
    assert out1[2] == out2[2]
