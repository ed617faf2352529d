"""Information reconciliation and privacy amplification.

Reconciliation is the interactive parity-exchange protocol: both parties
permute their streams with a shared seed, split them into blocks, and compare
block parities; a mismatched block is searched bisectively for the one bit
Bob flips. Correcting a bit re-exposes odd parity in earlier passes' blocks,
which are then searched too (the cascading step that drives the residual
mismatch to zero). Every parity Alice disclosess is recorded in the transcript,
so the leakage is simply the transcript's parity count.

Privacy amplification compresses the reconciled key with a binary Toeplitz
matrix drawn from a shared index, a 2-universal linear family.
"""

from dataclasses import dataclass, field

import numpy as np

from .pipeline import BitStream


@dataclass
class TranscriptRecord:
    """One exchanged message: a disclosed parity, a correction, or a hash index."""

    kind: str  # "parity" | "correction" | "hash-index"
    pass_index: int
    block_index: int
    payload: int

    def to_line(self) -> str:
        return f"{self.kind} pass={self.pass_index} block={self.block_index} value={self.payload}"

    @classmethod
    def from_line(cls, line: str):
        parts = line.split()
        kind = parts[0]
        fields = dict(p.split("=") for p in parts[1:])
        return cls(kind=kind, pass_index=int(fields["pass"]),
                   block_index=int(fields["block"]), payload=int(fields["value"]))


@dataclass
class ReconciliationSession:
    """Shared protocol parameters plus the message transcript of one run."""

    permutation_seed: int
    block_size: int
    pass_count: int = 4
    transcript: list = field(default_factory=list)

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.pass_count < 1:
            raise ValueError("pass_count must be >= 1")


def estimate_initial_block_size(bmr_estimate: float, key_length: int = None) -> int:
    """Standard first-pass block sizing ceil(0.73 / BMR); doubled each pass.

    A zero estimate means no observed mismatch, so the whole key is one block.
    """
    if bmr_estimate < 0 or bmr_estimate > 0.5:
        raise ValueError("bmr_estimate must lie in (0, 0.5] (0 means single block)")
    if bmr_estimate == 0:
        if key_length is None:
            raise ValueError("key_length required when bmr_estimate is 0")
        return key_length
    return int(np.ceil(0.73 / bmr_estimate))


def _parity(bits: np.ndarray, idx: np.ndarray) -> int:
    return int(bits[idx].sum() & 1)


def reconcile(alice_bits: BitStream, bob_bits: BitStream,
              session: ReconciliationSession):
    """Correct Bob's stream toward Alice's; returns (corrected, transcript).

    Alice's stream is never modified. Each pass uses a fresh shared
    permutation and doubles the block size; corrections cascade back into
    earlier passes until no block shows a parity mismatch.
    """
    if len(alice_bits) != len(bob_bits):
        raise ValueError("streams must have equal length")
    n = len(alice_bits)
    alice = alice_bits.bits
    bob = bob_bits.bits.copy()
    rng = np.random.default_rng(session.permutation_seed)
    session.transcript = []
    transcript = session.transcript
    perms = []
    block_sizes = []

    def block_indices(pass_idx, block_idx):
        k = block_sizes[pass_idx]
        return perms[pass_idx][block_idx * k:(block_idx + 1) * k]

    def bisect_correct(pass_idx, block_idx):
        idx = block_indices(pass_idx, block_idx)
        while idx.size > 1:
            half = idx.size // 2
            parity_a = _parity(alice, idx[:half])
            transcript.append(TranscriptRecord("parity", pass_idx, block_idx, parity_a))
            if parity_a != _parity(bob, idx[:half]):
                idx = idx[:half]
            else:
                idx = idx[half:]
        flipped = int(idx[0])
        bob[flipped] ^= 1
        transcript.append(TranscriptRecord("correction", pass_idx, block_idx, flipped))
        return flipped

    for pass_idx in range(session.pass_count):
        k = min(n, session.block_size << pass_idx)
        perms.append(rng.permutation(n))
        block_sizes.append(k)
        block_count = (n + k - 1) // k
        work = []
        for b in range(block_count):
            parity_a = _parity(alice, block_indices(pass_idx, b))
            transcript.append(TranscriptRecord("parity", pass_idx, b, parity_a))
            if parity_a != _parity(bob, block_indices(pass_idx, b)):
                work.append((pass_idx, b))
        while work:
            p, b = work.pop()
            idx = block_indices(p, b)
            if _parity(alice, idx) == _parity(bob, idx):
                continue
            flipped = bisect_correct(p, b)
            for p2 in range(len(perms)):
                if p2 != p:
                    pos = int(np.nonzero(perms[p2] == flipped)[0][0])
                    work.append((p2, pos // block_sizes[p2]))
    return BitStream(bits=bob, provenance=bob_bits.provenance), transcript


def leakage_bits(transcript) -> int:
    """Number of parity bits disclosed over the public channel."""
    return sum(1 for rec in transcript if rec.kind == "parity")


def transcript_to_lines(transcript) -> list:
    return [rec.to_line() for rec in transcript]


def transcript_from_lines(lines) -> list:
    return [TranscriptRecord.from_line(line) for line in lines if line.strip()]


@dataclass(frozen=True)
class HashFunctionFamily:
    """Binary Toeplitz family: 2-universal, linear over GF(2).

    A member is identified by ``function_index`` alone (the seed of the
    Toeplitz diagonal bits), so Alice only transmits that index.
    """

    input_length: int
    output_length: int
    family_kind: str = "toeplitz"

    def __post_init__(self):
        if self.output_length >= self.input_length:
            raise ValueError("output_length must be smaller than input_length")
        if self.output_length < 1:
            raise ValueError("output_length must be >= 1")
        if self.family_kind != "toeplitz":
            raise ValueError("only the toeplitz family is implemented")

    def matrix(self, function_index) -> np.ndarray:
        """The (output x input) Toeplitz matrix of member ``function_index``."""
        rng = np.random.default_rng(function_index)
        diags = rng.integers(0, 2, self.input_length + self.output_length - 1,
                             dtype=np.uint8)
        i = np.arange(self.output_length)[:, None]
        j = np.arange(self.input_length)[None, :]
        return diags[j - i + self.output_length - 1]


def privacy_amplify(bits: BitStream, family: HashFunctionFamily,
                    function_index) -> BitStream:
    """Compress a reconciled key with the selected universal-hash member."""
    if len(bits) != family.input_length:
        raise ValueError("bit stream length must equal the family input_length")
    t = family.matrix(function_index)
    out = (t @ bits.bits.astype(np.int64)) & 1
    return BitStream(bits=out.astype(np.uint8), provenance=bits.provenance)
