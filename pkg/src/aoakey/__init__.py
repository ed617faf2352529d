"""Angle-of-arrival based secret key generation at low SNR.

Synthesizes uniform-circular-array snapshots, estimates directions with a
subspace scan (MUSIC) or a switched-beam cross-correlation scan (XSBS), turns
estimate sequences into key bits (quantize, Gray-encode, combine), and
optionally reconciles and privacy-amplifies the keys. Channel amplitude and
phase baselines share the same bit pipeline for comparison.
"""

from .arrays import (AngleOfArrival, ArrayGeometry, SignalModel, SnapshotMatrix,
                     steering_vector, steering_vector_azimuth_only,
                     synthesize_beam_signal, synthesize_snapshots)
from .backend import BACKEND
from .baselines import (ReciprocalChannelModel, ScaledSequence, baseline_key_pair,
                        extract_amplitude, extract_phase,
                        simulate_channel_observations)
from .estimators import (AngleEstimate, CovarianceMatrix, MusicEstimator,
                         SpatialSpectrum, SubspaceDecomposition, XsbsConfig,
                         XsbsEstimator, eigendecompose, estimate_2d,
                         estimate_azimuth, estimate_covariance, music_spectrum,
                         pfr, synthesize_xsbs_acquisition, xsbs_spectrum)
from .experiments import (ExperimentSpec, load_spec, run_bmr_sweep, run_experiment,
                          run_keygen_demo, run_rmse_sweep, run_spectrum)
from .pipeline import (BitStream, PipelineConfig, QuantizerConfig,
                       ReferenceConvention, align_reference, bit_mismatch_rate,
                       combine_streams, encode_levels, generate_key_pair,
                       quantize, quantize_sequence, random_aoa_sequence)
from .secrecy import (HashFunctionFamily, ReconciliationSession,
                      estimate_initial_block_size, leakage_bits, privacy_amplify,
                      reconcile)

__version__ = "0.1.0"
