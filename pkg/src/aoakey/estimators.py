"""Direction-of-arrival estimators: subspace (MUSIC) and switched-beam (XSBS).

Both estimators share the same scan conventions: a 1-degree azimuth grid over
[0, 2*pi) and an elevation grid sampled uniformly in sin(elevation)
(direction-cosine space, the natural manifold coordinate of a planar array;
the grid has the same 91-point count a 1-degree grid would have and always
contains the horizon at pi/2). Two-dimensional estimates come from a
two-start coordinate ascent over the spatial power field: one chain starts
from the horizon azimuth scan, the other from a coarse joint azimuth/elevation
scan, and the better refined candidate is kept.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .arrays import (AngleOfArrival, ArrayGeometry, SignalModel, SnapshotMatrix,
                     _draw_noise, _draw_symbols)

AZIMUTH_GRID = np.deg2rad(np.arange(360.0))
# Direction-cosine elevation scan. The bottom cell sits half a step above the
# zenith: at sin(el) = 0 the array response is azimuth-independent, so the
# exactly singular direction is kept out of the scan.
ELEVATION_GRID = np.arcsin(np.concatenate(([0.5], np.arange(1.0, 91.0))) / 90.0)

DEFAULT_MUSIC_GEOMETRY = ArrayGeometry.uca(16, 0.5)
DEFAULT_XSBS_GEOMETRY = ArrayGeometry.uca(17, 1.2)

# Reported MUSIC spectra are capped to a finite dynamic range so the
# peak-to-floor ratio reflects peak-to-sidelobe structure rather than the
# unbounded inverse subspace residual.
MUSIC_DYNAMIC_RANGE = 16.0

# Preference factor for keeping the horizon-started solution in the MUSIC
# two-start selection; see estimate_2d.
MUSIC_RESIDUAL_PREFERENCE = 4.0


@dataclass(frozen=True)
class CovarianceMatrix:
    """Sample covariance (Hermitian PSD) together with the N that formed it."""

    data: np.ndarray
    sample_count: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError("covariance must be square")
        scale = max(np.abs(data).max(), 1.0)
        if np.abs(data - data.conj().T).max() > 1e-10 * scale:
            raise ValueError("covariance must be Hermitian")
        eigvals = np.linalg.eigvalsh(data)
        trace = float(np.trace(data).real)
        if eigvals.min() < -1e-9 * max(trace, 1.0):
            raise ValueError("covariance must be positive semidefinite")
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class SubspaceDecomposition:
    """Signal/noise eigenbasis split, eigenvalues sorted descending."""

    signal_basis: np.ndarray
    noise_basis: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SpatialSpectrum:
    """Power over a strictly increasing angle grid."""

    grid: np.ndarray
    power: np.ndarray
    kind: str

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        power = np.asarray(self.power, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be 1-D, nonempty, strictly increasing")
        if power.shape != grid.shape:
            raise ValueError("power must match grid length")
        if np.any(power < 0):
            raise ValueError("power must be nonnegative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "power", power)


@dataclass(frozen=True)
class AngleEstimate:
    """Grid-snapped angle estimate with the scan resolution it came from."""

    azimuth: float
    grid_resolution: float
    elevation: float | None = None


@dataclass(frozen=True)
class XsbsConfig:
    """Switched-beam scan configuration.

    The array's ``omni_element_indices`` feed the omni-directional reference
    chain (default: five elements with every other circle position skipped, so
    adjacent chosen elements sit two spacings apart). The remaining elements
    form the directional beams. ``reference_noise_factor`` is the noise
    advantage of the reference receiver over a single beam dwell: the
    reference chain integrates across the whole scan rather than one beam
    slot, so its effective noise variance is divided by this factor.
    """

    beam_count: int = 360
    total_elements: int = 17
    omni_element_indices: tuple = (0, 2, 4, 6, 8)
    reference_noise_factor: float = 24.0
    beam_centers: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.beam_count < 2:
            raise ValueError("beam_count must be >= 2")
        omni = tuple(self.omni_element_indices)
        if len(set(omni)) != len(omni) or len(omni) < 1:
            raise ValueError("omni_element_indices must be distinct and nonempty")
        if min(omni) < 0 or max(omni) >= self.total_elements:
            raise ValueError("omni_element_indices out of range")
        if len(omni) >= self.total_elements:
            raise ValueError("at least one element must remain directional")
        if self.reference_noise_factor < 1:
            raise ValueError("reference_noise_factor must be >= 1")
        centers = self.beam_centers
        if centers is None:
            centers = 2.0 * np.pi * np.arange(self.beam_count) / self.beam_count
        centers = np.asarray(centers, dtype=np.float64)
        if centers.size != self.beam_count or np.any(np.diff(centers) <= 0):
            raise ValueError("beam_centers must be strictly increasing, one per beam")
        if centers[0] < 0 or centers[-1] >= 2.0 * np.pi:
            raise ValueError("beam_centers must lie in [0, 2*pi)")
        object.__setattr__(self, "omni_element_indices", omni)
        object.__setattr__(self, "beam_centers", centers)

    def omni_mask(self):
        mask = np.zeros(self.total_elements, dtype=bool)
        mask[list(self.omni_element_indices)] = True
        return mask


def estimate_covariance(x: SnapshotMatrix) -> CovarianceMatrix:
    """Sample auto-covariance (X X^H)/N, symmetrized against rounding skew."""
    data = x.data
    if data.size == 0:
        raise ValueError("empty snapshot matrix")
    n = x.sample_count
    r = (data @ data.conj().T) / n
    r = (r + r.conj().T) / 2.0
    return CovarianceMatrix(data=r, sample_count=n)


def eigendecompose(r: CovarianceMatrix, source_count: int) -> SubspaceDecomposition:
    """Split R into signal and noise eigenspaces by descending eigenvalue."""
    m = r.data.shape[0]
    if not 1 <= source_count < m:
        raise ValueError("source_count must satisfy 1 <= S < M")
    eigvals, eigvecs = np.linalg.eigh(r.data)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    return SubspaceDecomposition(
        signal_basis=eigvecs[:, :source_count],
        noise_basis=eigvecs[:, source_count:],
        eigenvalues=eigvals,
    )


def music_spectrum(decomp: SubspaceDecomposition, geom: ArrayGeometry, grid,
                   elevation: float = np.pi / 2,
                   dynamic_range: float = MUSIC_DYNAMIC_RANGE) -> SpatialSpectrum:
    """Subspace pseudo-spectrum 1 / (a^H P_v a + floor) over an azimuth grid.

    ``dynamic_range`` caps the spectrum's peak-to-floor span (pass None for
    the uncapped form; the denominator is still clamped at 1e-15).
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    steering = geom.steering(grid, elevation)
    floor = 0.0 if dynamic_range is None else geom.element_count / float(dynamic_range)
    basis_h = np.ascontiguousarray(decomp.noise_basis.conj().T)
    power = backend.music_power(basis_h, steering, floor)
    return SpatialSpectrum(grid=grid, power=power, kind="music")


def synthesize_xsbs_acquisition(geom: ArrayGeometry, cfg: XsbsConfig,
                                aoa: AngleOfArrival, model: SignalModel,
                                n: int, rng_seed) -> SnapshotMatrix:
    """One switched-beam scan acquisition as a virtual snapshot matrix.

    Row noise is receiver-referred: every directional beam output w^H X has
    variance ``noise_variance`` (the single receiver behind the lossless beam
    network), and the summed omni rows carry the reference chain's reduced
    noise. Beams formed from one acquisition therefore share their noise
    field, which is what a digital scan of a single dwell sees.
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    if geom.element_count != cfg.total_elements:
        raise ValueError("geometry and config element counts disagree")
    rng = np.random.default_rng(rng_seed)
    a = geom.steering(aoa.azimuth, aoa.elevation)[:, 0]
    s = _draw_symbols(model, n, rng)
    data = a[:, None] * s[None, :]
    if model.noise_variance > 0:
        mask = cfg.omni_mask()
        n_dir = geom.element_count - mask.sum()
        n_omni = mask.sum()
        sigma = np.sqrt(model.noise_variance)
        scale = np.where(mask, sigma / np.sqrt(n_omni * cfg.reference_noise_factor),
                         sigma / np.sqrt(n_dir))
        data = data + scale[:, None] * _draw_noise((geom.element_count, n), rng)
    return SnapshotMatrix(data=data, snr_db=model.snr_db)


def _xsbs_adjoint(snapshots: SnapshotMatrix, cfg: XsbsConfig) -> np.ndarray:
    """Masked correlation vector v with spectrum |a_k^H v|^2 for any beam k.

    The beam-k cross-correlation (1/N) x_k x_o^H equals w_k^H v for
    v = (1/N) X x_o^H, so one vector summarizes the whole scan.
    """
    x = snapshots.data
    mask = cfg.omni_mask()
    x_o = x[mask].sum(axis=0)
    v = (x @ x_o.conj()) / snapshots.sample_count
    v[mask] = 0.0
    return v


def xsbs_spectrum(geom: ArrayGeometry, cfg: XsbsConfig, aoa_truth: AngleOfArrival,
                  model: SignalModel, n: int, rng_seed) -> SpatialSpectrum:
    """Cross-correlation power |(1/N) x_k x_o^H|^2 across the beam scan."""
    snapshots = synthesize_xsbs_acquisition(geom, cfg, aoa_truth, model, n, rng_seed)
    v = _xsbs_adjoint(snapshots, cfg)
    steering = geom.steering(cfg.beam_centers, np.pi / 2)
    power = backend.xsbs_power(v, steering)
    return SpatialSpectrum(grid=cfg.beam_centers, power=power, kind="xsbs")


def pfr(spectrum: SpatialSpectrum) -> float:
    """Peak to floor ratio: max power over the median off-peak power.

    The floor excludes the five grid points on each side of the peak; for
    grids covering the full circle the exclusion wraps around.
    """
    power = spectrum.power
    if power.size < 12:
        raise ValueError("spectrum too short for a peak/floor split")
    if np.all(power == power[0]):
        raise ValueError("degenerate spectrum")
    peak = int(np.argmax(power))
    idx = np.arange(power.size)
    step = np.median(np.diff(spectrum.grid))
    full_circle = spectrum.grid[-1] - spectrum.grid[0] + step >= 2.0 * np.pi - 1e-9
    if full_circle:
        dist = np.minimum(np.abs(idx - peak), power.size - np.abs(idx - peak))
    else:
        dist = np.abs(idx - peak)
    floor = float(np.median(power[dist > 5]))
    if floor <= 0:
        floor = 1e-300
    return float(power[peak] / floor)


def estimate_azimuth(spectrum: SpatialSpectrum) -> AngleEstimate:
    """Grid angle of the spectrum maximum; ties go to the smallest angle."""
    k = int(np.argmax(spectrum.power))
    resolution = float(np.median(np.diff(spectrum.grid))) if spectrum.grid.size > 1 else 0.0
    return AngleEstimate(azimuth=float(spectrum.grid[k]), grid_resolution=resolution)


def _coarse_grids(grid_az, grid_el):
    """Decimated joint scan grid; keeps the top elevation, drops the zenith row
    (azimuth is undefined there and it only adds degenerate candidates)."""
    coarse_az = grid_az[:: max(1, grid_az.size // 120)]
    step = max(1, (grid_el.size - 1) // 10)
    idx = np.unique(np.r_[np.arange(0, grid_el.size, step), grid_el.size - 1])
    coarse_el = grid_el[idx]
    if coarse_el.size > 1:
        coarse_el = coarse_el[1:]
    jaz, jel = np.meshgrid(coarse_az, coarse_el, indexing="ij")
    return jaz.ravel(), jel.ravel()


class _AscentField:
    """Spatial power field over the scan grids.

    ``power_of`` maps a steering matrix to per-column powers. Steering
    matrices for repeated scan lines are memoized in ``cache`` (shared across
    acquisitions by the estimator classes; the grids there are fixed, so
    entries are reused heavily).
    """

    def __init__(self, power_of, geom, grid_az, grid_el, cache=None):
        self.power_of = power_of
        self.geom = geom
        self.grid_az = grid_az
        self.grid_el = grid_el
        self.cache = cache if cache is not None else {}

    def _steering(self, key, az, el):
        mat = self.cache.get(key)
        if mat is None:
            mat = self.geom.steering(az, el)
            self.cache[key] = mat
        return mat

    def best_azimuth(self, elevation):
        a = self._steering(("az", float(elevation)), self.grid_az,
                           np.full(self.grid_az.size, elevation))
        return float(self.grid_az[np.argmax(self.power_of(a))])

    def best_elevation(self, azimuth):
        a = self._steering(("el", float(azimuth)),
                           np.full(self.grid_el.size, azimuth), self.grid_el)
        return float(self.grid_el[np.argmax(self.power_of(a))])

    def coarse_start(self):
        mat = self.cache.get("coarse")
        if mat is None:
            jaz, jel = _coarse_grids(self.grid_az, self.grid_el)
            mat = self.geom.steering(jaz, jel)
            self.cache["coarse"] = mat
            self.cache["coarse-el"] = jel
        return float(self.cache["coarse-el"][np.argmax(self.power_of(mat))])

    def value(self, azimuth, elevation):
        a = self.geom.steering(np.array([azimuth]), np.array([elevation]))
        return float(self.power_of(a)[0])

    def chain(self, az_start=None, el_start=None):
        """Alternating 1-D refinements from either kind of start point."""
        if el_start is None:
            el_start = self.best_elevation(az_start)
        az = self.best_azimuth(el_start)
        el = self.best_elevation(az)
        return az, el, self.value(az, el)


def _two_start_estimate(fld: _AscentField, prefer_first_residual=None):
    """Two-start coordinate ascent over the power field.

    Chain 1 starts from the horizon azimuth scan, chain 2 from the coarse
    joint scan. For XSBS the larger final power wins. MUSIC keeps the
    horizon-started solution unless its subspace residual (the reciprocal of
    the raw pseudo-power) is worse than the coarse-started one by more than
    ``prefer_first_residual``: near breakdown the global spectrum maximum
    drifts into the degenerate low-elevation region, and the horizon start is
    the better-conditioned default.
    """
    horizon = fld.grid_el[-1]
    az0 = fld.best_azimuth(horizon)
    a1, e1, v1 = fld.chain(az_start=az0)
    a2, e2, v2 = fld.chain(el_start=fld.coarse_start())
    if prefer_first_residual is not None:
        if v1 <= 0 or (1.0 / v1) > prefer_first_residual * (1.0 / max(v2, 1e-300)):
            return AngleOfArrival(azimuth=a2, elevation=e2)
        return AngleOfArrival(azimuth=a1, elevation=e1)
    if v2 > v1:
        return AngleOfArrival(azimuth=a2, elevation=e2)
    return AngleOfArrival(azimuth=a1, elevation=e1)


def _music_field(snapshots: SnapshotMatrix, geom: ArrayGeometry, grid_az, grid_el,
                 source_count: int, cache=None) -> _AscentField:
    decomp = eigendecompose(estimate_covariance(snapshots), source_count)
    basis_h = np.ascontiguousarray(decomp.noise_basis.conj().T)

    def power_of(steering):
        return backend.music_power(basis_h, steering, 0.0)

    return _AscentField(power_of, geom, grid_az, grid_el, cache)


def _xsbs_field(snapshots: SnapshotMatrix, geom: ArrayGeometry, cfg: XsbsConfig,
                grid_az, grid_el, cache=None) -> _AscentField:
    v = _xsbs_adjoint(snapshots, cfg)

    def power_of(steering):
        return backend.xsbs_power(v, steering)

    return _AscentField(power_of, geom, grid_az, grid_el, cache)


def estimate_2d(geom: ArrayGeometry, snapshots: SnapshotMatrix, grid_az, grid_el,
                method: str, cfg: XsbsConfig = None,
                source_count: int = 1) -> AngleOfArrival:
    """Joint azimuth/elevation estimate from one snapshot acquisition."""
    grid_az = np.asarray(grid_az, dtype=np.float64)
    grid_el = np.asarray(grid_el, dtype=np.float64)
    if grid_az.size == 0 or grid_el.size == 0:
        raise ValueError("grids must be nonempty")
    if method == "music":
        fld = _music_field(snapshots, geom, grid_az, grid_el, source_count)
        return _two_start_estimate(fld, prefer_first_residual=MUSIC_RESIDUAL_PREFERENCE)
    if method == "xsbs":
        if cfg is None:
            cfg = XsbsConfig(total_elements=geom.element_count)
        fld = _xsbs_field(snapshots, geom, cfg, grid_az, grid_el)
        return _two_start_estimate(fld)
    raise ValueError(f"unknown method {method!r}")


class MusicEstimator:
    """Full-array subspace estimator bound to a geometry and scan grids."""

    name = "music"

    def __init__(self, geom: ArrayGeometry = DEFAULT_MUSIC_GEOMETRY,
                 grid_az=AZIMUTH_GRID, grid_el=ELEVATION_GRID, source_count: int = 1):
        self.geom = geom
        self.grid_az = np.asarray(grid_az, dtype=np.float64)
        self.grid_el = np.asarray(grid_el, dtype=np.float64)
        self.source_count = source_count
        self._cache = {}

    def estimate(self, aoa_true: AngleOfArrival, model: SignalModel, n: int,
                 rng_seed) -> AngleOfArrival:
        from .arrays import synthesize_snapshots
        snapshots = synthesize_snapshots(self.geom, aoa_true, model, n, rng_seed)
        fld = _music_field(snapshots, self.geom, self.grid_az, self.grid_el,
                           self.source_count, self._cache)
        return _two_start_estimate(fld, prefer_first_residual=MUSIC_RESIDUAL_PREFERENCE)

    def estimate_azimuth(self, azimuth_true: float, model: SignalModel, n: int,
                         rng_seed) -> float:
        """One-dimensional scan with the elevation pinned to the horizon."""
        from .arrays import synthesize_snapshots
        aoa = AngleOfArrival(azimuth=azimuth_true, elevation=np.pi / 2)
        snapshots = synthesize_snapshots(self.geom, aoa, model, n, rng_seed)
        fld = _music_field(snapshots, self.geom, self.grid_az, self.grid_el,
                           self.source_count, self._cache)
        return fld.best_azimuth(np.pi / 2)


class XsbsEstimator:
    """Switched-beam cross-correlation estimator with a single receiver chain."""

    name = "xsbs"

    def __init__(self, geom: ArrayGeometry = DEFAULT_XSBS_GEOMETRY,
                 cfg: XsbsConfig = None, grid_az=AZIMUTH_GRID, grid_el=ELEVATION_GRID):
        self.geom = geom
        self.cfg = cfg if cfg is not None else XsbsConfig(total_elements=geom.element_count)
        if self.cfg.total_elements != geom.element_count:
            raise ValueError("geometry and config element counts disagree")
        self.grid_az = np.asarray(grid_az, dtype=np.float64)
        self.grid_el = np.asarray(grid_el, dtype=np.float64)
        self._cache = {}

    def estimate(self, aoa_true: AngleOfArrival, model: SignalModel, n: int,
                 rng_seed) -> AngleOfArrival:
        snapshots = synthesize_xsbs_acquisition(self.geom, self.cfg, aoa_true,
                                                model, n, rng_seed)
        fld = _xsbs_field(snapshots, self.geom, self.cfg, self.grid_az,
                          self.grid_el, self._cache)
        return _two_start_estimate(fld)

    def estimate_azimuth(self, azimuth_true: float, model: SignalModel, n: int,
                         rng_seed) -> float:
        aoa = AngleOfArrival(azimuth=azimuth_true, elevation=np.pi / 2)
        snapshots = synthesize_xsbs_acquisition(self.geom, self.cfg, aoa, model,
                                                n, rng_seed)
        fld = _xsbs_field(snapshots, self.geom, self.cfg, self.grid_az,
                          self.grid_el, self._cache)
        return fld.best_azimuth(np.pi / 2)
