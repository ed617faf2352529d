import numpy as np
import pytest

from aoakey import (BitStream, HashFunctionFamily, ReconciliationSession,
                    bit_mismatch_rate, estimate_initial_block_size, leakage_bits,
                    privacy_amplify, reconcile)
from aoakey.secrecy import transcript_from_lines, transcript_to_lines


def _random_pair(n, flip_prob, seed):
    rng = np.random.default_rng(seed)
    alice = BitStream(bits=rng.integers(0, 2, n, dtype=np.uint8))
    flips = (rng.random(n) < flip_prob).astype(np.uint8)
    bob = BitStream(bits=alice.bits ^ flips)
    return alice, bob


# ---------------------------------------------------------------------------
# block sizing
# ---------------------------------------------------------------------------

def test_block_size_values():
    assert estimate_initial_block_size(0.10) == 8
    assert estimate_initial_block_size(0.05) == 15
    assert estimate_initial_block_size(0.5) == 2


def test_block_size_zero_bmr_single_block():
    assert estimate_initial_block_size(0.0, key_length=512) == 512


def test_block_size_rejects_bad_estimates():
    with pytest.raises(ValueError):
        estimate_initial_block_size(0.7)
    with pytest.raises(ValueError):
        estimate_initial_block_size(-0.1)


# ---------------------------------------------------------------------------
# reconciliation
# ---------------------------------------------------------------------------

def test_identical_streams_disclose_only_top_parities():
    alice, _ = _random_pair(64, 0.0, seed=1)
    session = ReconciliationSession(permutation_seed=5, block_size=8, pass_count=2)
    corrected, transcript = reconcile(alice, alice, session)
    assert np.array_equal(corrected.bits, alice.bits)
    assert all(rec.kind == "parity" for rec in transcript)
    assert leakage_bits(transcript) == 64 // 8 + 64 // 16


def test_single_flip_corrected_in_first_pass():
    alice, _ = _random_pair(64, 0.0, seed=2)
    bob_bits = alice.bits.copy()
    bob_bits[37] ^= 1
    session = ReconciliationSession(permutation_seed=5, block_size=8, pass_count=1)
    corrected, transcript = reconcile(alice, BitStream(bits=bob_bits), session)
    assert np.array_equal(corrected.bits, alice.bits)
    corrections = [rec for rec in transcript if rec.kind == "correction"]
    assert len(corrections) == 1
    assert corrections[0].payload == 37


def test_alice_stream_never_modified():
    alice, bob = _random_pair(256, 0.1, seed=3)
    before = alice.bits.copy()
    session = ReconciliationSession(permutation_seed=7, block_size=8)
    reconcile(alice, bob, session)
    assert np.array_equal(alice.bits, before)


def test_reconciliation_never_increases_bmr():
    for seed in range(6):
        alice, bob = _random_pair(512, 0.08, seed=100 + seed)
        pre = bit_mismatch_rate(alice, bob)
        session = ReconciliationSession(permutation_seed=seed, block_size=10)
        corrected, _ = reconcile(alice, bob, session)
        assert bit_mismatch_rate(alice, corrected) <= pre


def test_reconcile_deterministic_transcript():
    alice, bob = _random_pair(256, 0.1, seed=4)
    out = []
    for _ in range(2):
        session = ReconciliationSession(permutation_seed=21, block_size=8)
        corrected, transcript = reconcile(alice, bob, session)
        out.append((corrected.bits.copy(), transcript_to_lines(transcript)))
    assert np.array_equal(out[0][0], out[1][0])
    assert out[0][1] == out[1][1]


def test_reconcile_length_mismatch():
    a = BitStream(bits=np.zeros(8, dtype=np.uint8))
    b = BitStream(bits=np.zeros(9, dtype=np.uint8))
    with pytest.raises(ValueError):
        reconcile(a, b, ReconciliationSession(permutation_seed=0, block_size=4))


def test_cascade_clears_ten_percent_mismatch():
    # 512-bit keys at 10% mismatch: zero residual in >= 95% of 200 seeded runs
    ok = 0
    for run in range(200):
        alice, bob = _random_pair(512, 0.10, seed=(9, run))
        session = ReconciliationSession(permutation_seed=(11, run),
                                        block_size=estimate_initial_block_size(0.10))
        corrected, _ = reconcile(alice, bob, session)
        ok += int(np.array_equal(corrected.bits, alice.bits))
    assert ok >= 190, f"only {ok}/200 runs fully reconciled"


# ---------------------------------------------------------------------------
# transcript accounting
# ---------------------------------------------------------------------------

def test_leakage_empty_transcript():
    assert leakage_bits([]) == 0


def test_leakage_counts_each_disclosed_parity():
    alice, _ = _random_pair(64, 0.0, seed=6)
    session = ReconciliationSession(permutation_seed=3, block_size=8, pass_count=1)
    _, transcript = reconcile(alice, alice, session)
    assert leakage_bits(transcript) == 8


def test_leakage_matches_transcript_replay():
    alice, bob = _random_pair(256, 0.08, seed=7)
    session = ReconciliationSession(permutation_seed=9, block_size=10)
    _, transcript = reconcile(alice, bob, session)
    lines = transcript_to_lines(transcript)
    replayed = transcript_from_lines(lines)
    assert leakage_bits(replayed) == leakage_bits(transcript)
    assert sum(1 for r in replayed if r.kind == "correction") == \
        sum(1 for r in transcript if r.kind == "correction")


# ---------------------------------------------------------------------------
# privacy amplification
# ---------------------------------------------------------------------------

def test_amplify_all_zero_input():
    family = HashFunctionFamily(input_length=64, output_length=16)
    out = privacy_amplify(BitStream(bits=np.zeros(64, dtype=np.uint8)), family, 5)
    np.testing.assert_array_equal(out.bits, 0)
    assert len(out) == 16


def test_amplify_deterministic_across_parties():
    family = HashFunctionFamily(input_length=128, output_length=32)
    rng = np.random.default_rng(8)
    key = BitStream(bits=rng.integers(0, 2, 128, dtype=np.uint8))
    a = privacy_amplify(key, family, function_index=99)
    b = privacy_amplify(key, family, function_index=99)
    assert np.array_equal(a.bits, b.bits)
    c = privacy_amplify(key, family, function_index=100)
    assert not np.array_equal(a.bits, c.bits)


def test_amplify_linearity():
    family = HashFunctionFamily(input_length=64, output_length=16)
    rng = np.random.default_rng(9)
    x = BitStream(bits=rng.integers(0, 2, 64, dtype=np.uint8))
    y = BitStream(bits=rng.integers(0, 2, 64, dtype=np.uint8))
    xy = BitStream(bits=x.bits ^ y.bits)
    hx = privacy_amplify(x, family, 3).bits
    hy = privacy_amplify(y, family, 3).bits
    hxy = privacy_amplify(xy, family, 3).bits
    np.testing.assert_array_equal(hxy, hx ^ hy)


def test_amplify_collision_bound():
    # empirical 2-universal check: collision fraction <= 2 * 2^-8 over 1e4 pairs
    family = HashFunctionFamily(input_length=64, output_length=8)
    rng = np.random.default_rng(10)
    collisions = 0
    pairs = 10000
    for k in range(pairs):
        x = rng.integers(0, 2, 64, dtype=np.uint8)
        y = rng.integers(0, 2, 64, dtype=np.uint8)
        if np.array_equal(x, y):
            continue
        hx = privacy_amplify(BitStream(bits=x), family, k)
        hy = privacy_amplify(BitStream(bits=y), family, k)
        collisions += int(np.array_equal(hx.bits, hy.bits))
    assert collisions / pairs <= 2 * 2 ** -8


def test_amplify_validations():
    with pytest.raises(ValueError):
        HashFunctionFamily(input_length=16, output_length=16)
    family = HashFunctionFamily(input_length=16, output_length=8)
    with pytest.raises(ValueError):
        privacy_amplify(BitStream(bits=np.zeros(8, dtype=np.uint8)), family, 0)
