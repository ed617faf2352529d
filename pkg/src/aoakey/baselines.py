"""Channel-amplitude and channel-phase key generation baselines.

Both nodes observe the same Rayleigh coefficient per coherence block through
independent additive noise; amplitude and phase are scaled into [0, 1) and
pushed through exactly the same quantize/encode/combine path the angle
pipeline uses, so curves are directly comparable across randomness sources.
"""

from dataclasses import dataclass

import numpy as np

from .pipeline import (BitStream, PipelineConfig, QuantizerConfig, bit_mismatch_rate,
                       combine_streams, encode_levels, quantize_sequence)

UNIT_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class ReciprocalChannelModel:
    """Reciprocal fading link: identical h per block, independent noise per node."""

    fading_kind: str = "rayleigh"
    coherence_block_count: int = 64
    per_node_noise_variance: float = 0.0

    def __post_init__(self):
        if self.fading_kind != "rayleigh":
            raise ValueError("only rayleigh fading is modeled")
        if self.coherence_block_count < 1:
            raise ValueError("coherence_block_count must be >= 1")
        if self.per_node_noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")


@dataclass(frozen=True)
class ScaledSequence:
    """Real sequence normalized into [0, 1) for source-agnostic quantization."""

    values: np.ndarray
    source: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if np.any(values < 0) or np.any(values >= 1):
            raise ValueError("scaled values must lie in [0, 1)")
        object.__setattr__(self, "values", values)


def simulate_channel_observations(model: ReciprocalChannelModel, snr_db: float,
                                  block_count: int, seed):
    """Per block: h ~ CN(0, 1); each node sees h plus its own noise."""
    if block_count < 1:
        raise ValueError("block_count must be >= 1")
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal(block_count) + 1j * rng.standard_normal(block_count)) / np.sqrt(2)
    sigma = np.sqrt(10.0 ** (-snr_db / 10.0))
    noise_a = sigma * (rng.standard_normal(block_count)
                       + 1j * rng.standard_normal(block_count)) / np.sqrt(2)
    noise_b = sigma * (rng.standard_normal(block_count)
                       + 1j * rng.standard_normal(block_count)) / np.sqrt(2)
    return h + noise_a, h + noise_b


def extract_amplitude(obs) -> ScaledSequence:
    """Envelope scaled by its 99th percentile; the few overshoots are clipped."""
    amp = np.abs(np.asarray(obs))
    scale = np.quantile(amp, 0.99)
    if scale <= 0:
        scale = 1.0
    return ScaledSequence(values=np.clip(amp / scale, 0.0, np.nextafter(1.0, 0.0)),
                          source="amplitude")


def extract_phase(obs) -> ScaledSequence:
    """Argument mapped affinely from [-pi, pi) onto [0, 1)."""
    phase = ((np.angle(np.asarray(obs)) + np.pi) / (2.0 * np.pi)) % 1.0
    return ScaledSequence(values=phase, source="phase")


def scaled_bits(seq: ScaledSequence, cfg: PipelineConfig) -> BitStream:
    """Quantize and encode a unit-range sequence (the shared pipeline entry)."""
    q = QuantizerConfig(n_quan=cfg.n_quan, input_range=UNIT_RANGE)
    return encode_levels(quantize_sequence(seq.values, q), cfg, seq.source)


def baseline_key_pair(source: str, snr_db: float, cfg: PipelineConfig,
                      block_count: int, seed):
    """Key pair from a channel characteristic; returns (alice, bob, bmr).

    ``source`` is "amplitude", "phase", or "combined" (amplitude and phase
    streams merged with the standard combining rule).
    """
    if source not in ("amplitude", "phase", "combined"):
        raise ValueError(f"unknown baseline source {source!r}")
    model = ReciprocalChannelModel(coherence_block_count=block_count)
    obs_a, obs_b = simulate_channel_observations(model, snr_db, block_count, seed)

    def node_bits(obs):
        if source == "amplitude":
            return scaled_bits(extract_amplitude(obs), cfg)
        if source == "phase":
            return scaled_bits(extract_phase(obs), cfg)
        amp = scaled_bits(extract_amplitude(obs), cfg)
        ph = scaled_bits(extract_phase(obs), cfg)
        return combine_streams(amp, ph, cfg)

    alice = node_bits(obs_a)
    bob = node_bits(obs_b)
    return alice, bob, bit_mismatch_rate(alice, bob)
