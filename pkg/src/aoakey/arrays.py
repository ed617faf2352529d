"""Uniform circular array model: geometry, steering vectors, and snapshot synthesis.

Conventions: all angles are radians. Azimuth lives on [0, 2*pi); elevation on
[0, pi/2] (a planar circular array cannot tell an elevation from its mirror
above the horizon, so the upper half-space is used throughout). The carrier
wavelength is the unit of length, so the default wavenumber is 2*pi and the
array radius is expressed in wavelengths.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """A uniform circular array of ``element_count`` antennas.

    Element m (1-based) sits at circle angle 2*pi*m/M. ``radius`` is in
    wavelengths; ``wavenumber`` is 2*pi/lambda with lambda = 1 by default.
    """

    element_count: int
    radius: float
    wavenumber: float = TWO_PI
    element_azimuths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.element_count < 2:
            raise ValueError("element_count must be >= 2")
        if self.radius <= 0 or self.wavenumber <= 0:
            raise ValueError("radius and wavenumber must be positive")
        angles = TWO_PI * np.arange(1, self.element_count + 1) / self.element_count
        object.__setattr__(self, "element_azimuths", angles)

    @classmethod
    def uca(cls, element_count, spacing_wavelengths):
        """Geometry with a given inter-element arc spacing (in wavelengths)."""
        radius = element_count * spacing_wavelengths / TWO_PI
        return cls(element_count=element_count, radius=radius)

    @property
    def beta_r(self):
        """Phase radius wavenumber * radius, the only scale the model uses."""
        return self.wavenumber * self.radius

    def steering(self, azimuths, elevations):
        """Steering matrix (M x G) for arrays of look directions."""
        az = np.atleast_1d(np.asarray(azimuths, dtype=np.float64))
        el = np.broadcast_to(np.atleast_1d(np.asarray(elevations, dtype=np.float64)),
                             az.shape).astype(np.float64, copy=True)
        return backend.steering_matrix(self.beta_r, self.element_azimuths, az, el)


@dataclass(frozen=True)
class AngleOfArrival:
    """Azimuth/elevation direction, azimuth normalized to [0, 2*pi)."""

    azimuth: float
    elevation: float = np.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "azimuth", float(self.azimuth) % TWO_PI)
        if not -1e-12 <= self.elevation <= np.pi / 2 + 1e-12:
            raise ValueError("elevation must lie in [0, pi/2]")
        object.__setattr__(self, "elevation", float(min(max(self.elevation, 0.0), np.pi / 2)))


@dataclass(frozen=True)
class SignalModel:
    """Source power, per-element noise variance, and transmit waveform kind.

    ``waveform_kind`` is ``"random-phase"`` (unit-modulus symbols, constant
    envelope, so the realized source power is exact) or ``"gaussian"``
    (circular complex Gaussian symbols).
    """

    source_power: float = 1.0
    noise_variance: float = 0.0
    waveform_kind: str = "random-phase"

    def __post_init__(self):
        if self.source_power <= 0:
            raise ValueError("source_power must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be nonnegative")
        if self.waveform_kind not in ("random-phase", "gaussian"):
            raise ValueError(f"unknown waveform_kind {self.waveform_kind!r}")

    @classmethod
    def from_snr_db(cls, snr_db, source_power=1.0, waveform_kind="random-phase"):
        """Model with per-element SNR fixed in dB (pre-beamforming)."""
        noise = source_power * 10.0 ** (-snr_db / 10.0)
        return cls(source_power=source_power, noise_variance=noise,
                   waveform_kind=waveform_kind)

    @property
    def snr_db(self):
        if self.noise_variance == 0:
            return np.inf
        return 10.0 * np.log10(self.source_power / self.noise_variance)


@dataclass(frozen=True)
class SnapshotMatrix:
    """Complex baseband samples, rows = receiver outputs, columns = time."""

    data: np.ndarray
    snr_db: float

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[1] < 1:
            raise ValueError("snapshot data must be a 2-D matrix with >= 1 column")
        if not np.all(np.isfinite(data.view(np.float64))):
            raise ValueError("snapshot data contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def sample_count(self):
        return self.data.shape[1]

    @property
    def receiver_count(self):
        return self.data.shape[0]


def steering_vector(geom: ArrayGeometry, aoa: AngleOfArrival) -> np.ndarray:
    """Array response a(az, el); every entry has unit modulus."""
    return geom.steering(aoa.azimuth, aoa.elevation)[:, 0]


def steering_vector_azimuth_only(geom: ArrayGeometry, azimuth: float) -> np.ndarray:
    """Horizon response: steering_vector at elevation pi/2."""
    return geom.steering(float(azimuth), np.pi / 2)[:, 0]


def _draw_symbols(model: SignalModel, n: int, rng: np.random.Generator) -> np.ndarray:
    amp = np.sqrt(model.source_power)
    if model.waveform_kind == "random-phase":
        return amp * np.exp(1j * TWO_PI * rng.random(n))
    return amp * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)


def _draw_noise(shape, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circular complex Gaussian block (one interleaved fill)."""
    out = np.empty(shape, dtype=np.complex128)
    rng.standard_normal(out=out.view(np.float64))
    out *= np.sqrt(0.5)
    return out


def synthesize_snapshots(geom: ArrayGeometry, aoa: AngleOfArrival, model: SignalModel,
                         n: int, rng_seed) -> SnapshotMatrix:
    """Draw X = a(az, el) s + V with i.i.d. circular complex Gaussian noise.

    The draw order (symbols first, then the M x N noise block) is part of the
    contract: identical seeds give bit-identical matrices.
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    a = steering_vector(geom, aoa)
    s = _draw_symbols(model, n, rng)
    data = a[:, None] * s[None, :]
    if model.noise_variance > 0:
        data = data + np.sqrt(model.noise_variance) * _draw_noise((geom.element_count, n), rng)
    return SnapshotMatrix(data=data, snr_db=model.snr_db)


def synthesize_beam_signal(geom: ArrayGeometry, aoa: AngleOfArrival, beam_weights,
                           model: SignalModel, n: int, rng_seed) -> SnapshotMatrix:
    """Single-receiver beam output x = w^H (a s) + v, with Var(v) = noise_variance.

    The combining network is modeled as lossless: the weights act on the
    noise-free array response, and one receiver noise stream is added behind
    the combiner. That noise is taken from the same element-level noise field
    a full-array synthesis would draw (w^H V / ||w||), so unit weights on a
    single element reproduce that element's row of ``synthesize_snapshots``
    under the same seed.
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    w = np.asarray(beam_weights, dtype=np.complex128)
    if w.shape != (geom.element_count,):
        raise ValueError(f"beam_weights must have shape ({geom.element_count},)")
    rng = np.random.default_rng(rng_seed)
    a = steering_vector(geom, aoa)
    s = _draw_symbols(model, n, rng)
    x = (w.conj() @ a) * s
    if model.noise_variance > 0:
        field_noise = _draw_noise((geom.element_count, n), rng)
        norm = np.linalg.norm(w)
        if norm > 0:
            v = (w.conj() @ field_noise) / norm
        else:
            v = _draw_noise(n, rng)
        x = x + np.sqrt(model.noise_variance) * v
    return SnapshotMatrix(data=x[None, :], snr_db=model.snr_db)
