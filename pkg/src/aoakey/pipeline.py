"""Secret-key bit pipeline: reference alignment, quantization, encoding,
stream combining, and bit mismatch measurement.

The same quantize/encode/combine path serves every randomness source (angle
estimates and the channel baselines); only the input sequence and quantizer
range differ.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .arrays import AngleOfArrival, SignalModel, TWO_PI

ALICE = "alice"
BOB = "bob"


@dataclass(frozen=True)
class ReferenceConvention:
    """Step-0 agreement: one shared bearing reference, or opposite references.

    With a shared reference (both nodes measure from, say, North) the two
    bearings differ by pi and Bob corrects his estimate; with opposite
    references the raw estimates already coincide. Agreed once per session.
    """

    mode: str = "shared-reference"
    rotation: str = "clockwise"

    def __post_init__(self):
        if self.mode not in ("shared-reference", "opposite-reference"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.rotation != "clockwise":
            raise ValueError("only clockwise rotation is modeled")


@dataclass(frozen=True)
class QuantizerConfig:
    """Uniform quantizer over [low, high) with 2**n_quan levels."""

    n_quan: int
    input_range: tuple = (0.0, TWO_PI)
    wrap: bool = False

    def __post_init__(self):
        if not 1 <= self.n_quan <= 16:
            raise ValueError("n_quan must be in [1, 16]")
        low, high = self.input_range
        if not high > low:
            raise ValueError("input_range high must exceed low")


@dataclass(frozen=True)
class PipelineConfig:
    """Bits per sample at each pipeline stage.

    ``n_quan`` quantizer bits, ``n_encod`` copies of the most significant
    encoded bit, and ``n_comb`` most-significant encoded bits kept from each
    stream when two streams are combined.
    """

    n_quan: int = 7
    n_encod: int = 2
    n_comb: int = 2

    def __post_init__(self):
        if not 1 <= self.n_quan <= 16:
            raise ValueError("n_quan must be in [1, 16]")
        if self.n_encod < 1:
            raise ValueError("n_encod must be >= 1")
        if not 1 <= self.n_comb <= self.n_quan:
            raise ValueError("n_comb must satisfy 1 <= n_comb <= n_quan")

    @property
    def encoded_width(self):
        """Bits per sample after encoding."""
        return self.n_quan + self.n_encod - 1


@dataclass(frozen=True)
class BitStream:
    """Ordered bit sequence with a provenance label."""

    bits: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ValueError("bits must be 1-D")
        if bits.size and bits.max() > 1:
            raise ValueError("bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return self.bits.size

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def to_hex(self) -> str:
        return self.to_bytes().hex()


def align_reference(local_estimate: AngleOfArrival, conv: ReferenceConvention,
                    node: str) -> AngleOfArrival:
    """Map a node's raw bearing onto the common angle of Step 0.

    Under a shared reference Bob sees the common azimuth plus pi and subtracts
    it; Alice's estimate and both nodes' elevations pass through unchanged.
    """
    if node not in (ALICE, BOB):
        raise ValueError(f"unknown node {node!r}")
    if conv.mode == "shared-reference" and node == BOB:
        return AngleOfArrival(azimuth=(local_estimate.azimuth - np.pi) % TWO_PI,
                              elevation=local_estimate.elevation)
    return local_estimate


def quantize(value: float, cfg: QuantizerConfig) -> int:
    """Uniform level index of a scalar; wraps first when the range is circular."""
    return int(quantize_sequence(np.array([value]), cfg)[0])


def quantize_sequence(values, cfg: QuantizerConfig) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    low, high = cfg.input_range
    if cfg.wrap:
        values = (values - low) % (high - low) + low
    elif np.any(values < low) or np.any(values >= high):
        span = high - low
        if np.any(values < low - 1e-9 * span) or np.any(values > high + 1e-9 * span):
            raise ValueError("value outside quantizer range")
    return backend.quantize_levels(values, low, high, cfg.n_quan)


def encode_levels(indices, cfg: PipelineConfig, provenance: str = "") -> BitStream:
    """Gray-code each level and repeat the most significant bit n_encod times.

    Gray coding makes a one-level estimation error flip a single bit; the
    repeated copies of the (rarely flipped) top bit dilute the mismatch rate.
    Output is n_quan + n_encod - 1 bits per sample, repeated-MSB block first.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= (1 << cfg.n_quan)):
        raise ValueError("level index out of range for n_quan")
    bits = backend.gray_encode(indices, cfg.n_quan, cfg.n_encod)
    return BitStream(bits=bits, provenance=provenance)


def combine_streams(stream_a: BitStream, stream_b: BitStream,
                    cfg: PipelineConfig) -> BitStream:
    """Concatenate the n_comb most significant encoded bits per sample.

    Each sample contributes n_comb bits from stream A followed by n_comb bits
    from stream B (the repeated-MSB block counts as most significant).
    """
    width = cfg.encoded_width
    if len(stream_a) != len(stream_b):
        raise ValueError("streams must have equal length")
    if len(stream_a) % width != 0:
        raise ValueError("stream length is not a whole number of encoded samples")
    a = stream_a.bits.reshape(-1, width)[:, :cfg.n_comb]
    b = stream_b.bits.reshape(-1, width)[:, :cfg.n_comb]
    merged = np.concatenate([a, b], axis=1).reshape(-1)
    return BitStream(bits=merged, provenance="combined")


def bit_mismatch_rate(a: BitStream, b: BitStream) -> float:
    """Hamming distance over length; 0.5 is the random-guessing worst case."""
    if len(a) != len(b):
        raise ValueError("streams must have equal length")
    if len(a) == 0:
        raise ValueError("streams must be nonempty")
    return float(np.mean(a.bits != b.bits))


AZIMUTH_QUANTIZER_RANGE = (0.0, TWO_PI)
ELEVATION_QUANTIZER_RANGE = (0.0, np.pi / 2)


def _angle_quantizers(cfg: PipelineConfig):
    az_q = QuantizerConfig(n_quan=cfg.n_quan, input_range=AZIMUTH_QUANTIZER_RANGE, wrap=True)
    # the elevation domain is closed at pi/2; the quantizer clamps the endpoint
    el_q = QuantizerConfig(n_quan=cfg.n_quan,
                           input_range=(0.0, np.pi / 2 + 1e-12), wrap=False)
    return az_q, el_q


def angles_to_combined_bits(azimuths, elevations, cfg: PipelineConfig) -> BitStream:
    """Steps 2-4 on an aligned angle sequence: quantize, encode, combine."""
    az_q, el_q = _angle_quantizers(cfg)
    az_bits = encode_levels(quantize_sequence(azimuths, az_q), cfg, "azimuth")
    el_bits = encode_levels(quantize_sequence(elevations, el_q), cfg, "elevation")
    return combine_streams(az_bits, el_bits, cfg)


def random_aoa_sequence(length: int, rng_seed) -> list:
    """Mobility model: azimuth uniform on [0, 2*pi), elevation uniform on [0, pi/2]."""
    rng = np.random.default_rng(rng_seed)
    az = rng.random(length) * TWO_PI
    el = rng.random(length) * (np.pi / 2)
    return [AngleOfArrival(azimuth=a, elevation=e) for a, e in zip(az, el)]


def generate_key_pair(true_aoa_sequence, estimator_alice, estimator_bob,
                      conv: ReferenceConvention, cfg: PipelineConfig,
                      snr_db: float, n: int, seed):
    """Run Steps 0-4 at both nodes over a common AoA sequence.

    Each node observes every true angle through its own independently noisy
    acquisition (under a shared reference Bob's raw bearing is the common
    azimuth plus pi), aligns, quantizes, encodes, and combines the azimuth and
    elevation streams. Returns (alice_bits, bob_bits, bmr).
    """
    if len(true_aoa_sequence) == 0:
        raise ValueError("true_aoa_sequence must be nonempty")
    model = SignalModel.from_snr_db(snr_db)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = ss.spawn(2 * len(true_aoa_sequence))
    streams = {}
    for node_idx, (node, estimator) in enumerate(((ALICE, estimator_alice),
                                                  (BOB, estimator_bob))):
        az_seq = np.empty(len(true_aoa_sequence))
        el_seq = np.empty(len(true_aoa_sequence))
        for i, aoa in enumerate(true_aoa_sequence):
            raw_az = aoa.azimuth
            if conv.mode == "shared-reference" and node == BOB:
                raw_az = (raw_az + np.pi) % TWO_PI
            child = children[node_idx * len(true_aoa_sequence) + i]
            est = estimator.estimate(AngleOfArrival(raw_az, aoa.elevation),
                                     model, n, child)
            aligned = align_reference(est, conv, node)
            az_seq[i] = aligned.azimuth
            el_seq[i] = aligned.elevation
        streams[node] = angles_to_combined_bits(az_seq, el_seq, cfg)
    bmr = bit_mismatch_rate(streams[ALICE], streams[BOB])
    return streams[ALICE], streams[BOB], bmr
