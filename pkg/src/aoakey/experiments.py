"""Batch experiment harness: RMSE sweeps, spectra, BMR sweeps, and key demos.

Experiments are described by an :class:`ExperimentSpec` (loadable from an INI
config file), run deterministically from a master seed, and written as CSV
with the fully resolved spec embedded in a comment preamble. Reruns of the
same spec and seed are byte-identical.
"""

import configparser
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .arrays import AngleOfArrival, SignalModel
from .baselines import baseline_key_pair
from .estimators import MusicEstimator, XsbsEstimator
from .pipeline import (ALICE, BOB, PipelineConfig, QuantizerConfig, ReferenceConvention,
                       BitStream, align_reference, angles_to_combined_bits,
                       bit_mismatch_rate, combine_streams, encode_levels,
                       quantize_sequence, random_aoa_sequence)
from .secrecy import (HashFunctionFamily, ReconciliationSession,
                      estimate_initial_block_size, leakage_bits, privacy_amplify,
                      reconcile, transcript_to_lines)
from . import estimators as est_mod

BMR_THRESHOLD = 0.15
TRUE_AZIMUTH_DEG = 270.0
TRUE_ELEVATION_DEG = 90.0

AOA_SOURCES = ("azimuth", "elevation", "combined")
BASELINE_SOURCES = ("amplitude", "phase", "amp-phase-combined")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: what to run, over which grids, from which seed."""

    kind: str = "rmse"
    estimator: str = "both"
    snr_grid_db: tuple = (-10.0, -15.0, -20.0, -25.0, -30.0)
    sample_counts: tuple = (100, 1000, 2000)
    trials: int = 100
    seed: int = 0
    sources: tuple = AOA_SOURCES
    n_quan: tuple = (7,)
    n_encod: tuple = (2,)
    n_comb: tuple = (2,)
    key_samples: int = 64
    reconciliation_enabled: bool = False

    def __post_init__(self):
        if self.kind not in ("rmse", "spectrum", "bmr", "keygen"):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.estimator not in ("music", "xsbs", "both"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_grid_db or not self.sample_counts:
            raise ConfigError("snr and sample grids must be nonempty")
        if self.key_samples < 1:
            raise ConfigError("key_samples must be >= 1")
        for name in ("n_quan", "n_encod", "n_comb"):
            if not getattr(self, name):
                raise ConfigError(f"{name} sweep must be nonempty")
        for source in self.sources:
            if source not in AOA_SOURCES + BASELINE_SOURCES:
                raise ConfigError(f"unknown source {source!r}")

    @property
    def experiment_id(self):
        return f"{self.kind}-{self.estimator}-seed{self.seed}"

    def estimator_names(self):
        return ("music", "xsbs") if self.estimator == "both" else (self.estimator,)

    def pipeline_combos(self):
        return [(q, e, c) for q in self.n_quan for e in self.n_encod for c in self.n_comb]

    def resolved_text(self) -> str:
        """Canonical INI rendering of every resolved field."""
        cp = configparser.ConfigParser()
        cp["experiment"] = {
            "kind": self.kind,
            "estimator": self.estimator,
            "seed": str(self.seed),
            "trials": str(self.trials),
        }
        cp["grid"] = {
            "snr_db": ", ".join(f"{s:g}" for s in self.snr_grid_db),
            "sample_counts": ", ".join(str(n) for n in self.sample_counts),
        }
        cp["pipeline"] = {
            "n_quan": ", ".join(str(v) for v in self.n_quan),
            "n_encod": ", ".join(str(v) for v in self.n_encod),
            "n_comb": ", ".join(str(v) for v in self.n_comb),
            "key_samples": str(self.key_samples),
        }
        cp["sources"] = {"use": ", ".join(self.sources)}
        cp["secrecy"] = {"reconciliation": str(self.reconciliation_enabled).lower()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _parse_list(raw, cast):
    return tuple(cast(part.strip()) for part in raw.split(",") if part.strip())


def load_spec(path, kind=None) -> ExperimentSpec:
    """Read an INI config file into a spec; missing keys keep their defaults."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    kwargs = {}
    if cp.has_section("experiment"):
        sec = cp["experiment"]
        if "kind" in sec:
            kwargs["kind"] = sec["kind"].strip()
        if "estimator" in sec:
            kwargs["estimator"] = sec["estimator"].strip()
        if "seed" in sec:
            kwargs["seed"] = sec.getint("seed")
        if "trials" in sec:
            kwargs["trials"] = sec.getint("trials")
    if cp.has_section("grid"):
        sec = cp["grid"]
        if "snr_db" in sec:
            kwargs["snr_grid_db"] = _parse_list(sec["snr_db"], float)
        if "sample_counts" in sec:
            kwargs["sample_counts"] = _parse_list(sec["sample_counts"], int)
    if cp.has_section("pipeline"):
        sec = cp["pipeline"]
        for name in ("n_quan", "n_encod", "n_comb"):
            if name in sec:
                kwargs[name] = _parse_list(sec[name], int)
        if "key_samples" in sec:
            kwargs["key_samples"] = sec.getint("key_samples")
    if cp.has_section("sources") and "use" in cp["sources"]:
        kwargs["sources"] = _parse_list(cp["sources"]["use"], str)
    if cp.has_section("secrecy") and "reconciliation" in cp["secrecy"]:
        kwargs["reconciliation_enabled"] = cp["secrecy"].getboolean("reconciliation")
    if kind is not None:
        kwargs["kind"] = kind
    try:
        return ExperimentSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _make_estimator(name):
    if name == "music":
        return MusicEstimator()
    if name == "xsbs":
        return XsbsEstimator()
    raise ConfigError(f"unknown estimator {name!r}")


def _child_seed(master, *key):
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(k) for k in key))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_results(out_dir, spec: ExperimentSpec, columns, rows, extra_files=None):
    """Write results.csv (+ spec.resolved and any extra files) under out_dir."""
    from pathlib import Path

    target = Path(out_dir) / spec.experiment_id
    target.mkdir(parents=True, exist_ok=True)
    preamble = ["# aoakey " + spec.kind + " experiment",
                f"# seed={spec.seed}"]
    preamble += ["# spec: " + line for line in spec.resolved_text().splitlines() if line]
    lines = preamble + [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col)) for col in columns))
    (target / "results.csv").write_text("\n".join(lines) + "\n")
    (target / "spec.resolved").write_text(spec.resolved_text())
    for name, text in (extra_files or {}).items():
        (target / name).write_text(text)
    return target


# ---------------------------------------------------------------------------
# RMSE sweep
# ---------------------------------------------------------------------------

RMSE_COLUMNS = ("experiment_id", "estimator", "snr_db", "sample_count", "trials",
                "rmse_azimuth_deg", "rmse_elevation_deg")


def _rmse_point(args):
    """All trials of one (estimator, snr, N) grid point."""
    est_name, snr_db, n, trials, seed = args
    estimator = _make_estimator(est_name)
    model = SignalModel.from_snr_db(snr_db)
    truth = AngleOfArrival(np.deg2rad(TRUE_AZIMUTH_DEG), np.deg2rad(TRUE_ELEVATION_DEG))
    err_az = np.empty(trials)
    err_el = np.empty(trials)
    for trial in range(trials):
        seed_1d = _child_seed(seed, 1, int(snr_db * 10) & 0xFFFF, n, trial, 0)
        az_hat = estimator.estimate_azimuth(truth.azimuth, model, n, seed_1d)
        err_az[trial] = np.rad2deg(az_hat - truth.azimuth)
        seed_2d = _child_seed(seed, 1, int(snr_db * 10) & 0xFFFF, n, trial, 1)
        est = estimator.estimate(truth, model, n, seed_2d)
        err_el[trial] = np.rad2deg(est.elevation - truth.elevation)
    return float(np.sqrt(np.mean(err_az ** 2))), float(np.sqrt(np.mean(err_el ** 2)))


def run_rmse_sweep(spec: ExperimentSpec, parallel: int = 1):
    """Azimuth (horizon 1-D scan) and elevation (2-D) RMSE over the SNR/N grid.

    The true direction is fixed at azimuth 270 deg on the horizon; errors are
    plain grid-snapped differences in degrees (not wrapped), so the failure
    regime saturates near the uniform-error level.
    """
    tasks = [(est, snr, n, spec.trials, spec.seed)
             for est in spec.estimator_names()
             for snr in spec.snr_grid_db
             for n in spec.sample_counts]
    results = _map_tasks(_rmse_point, tasks, parallel)
    rows = []
    for (est, snr, n, _, _), (rmse_az, rmse_el) in zip(tasks, results):
        rows.append({"experiment_id": spec.experiment_id, "estimator": est,
                     "snr_db": snr, "sample_count": n, "trials": spec.trials,
                     "rmse_azimuth_deg": rmse_az, "rmse_elevation_deg": rmse_el})
    rows.sort(key=lambda r: (r["estimator"], -r["snr_db"], r["sample_count"]))
    return rows


# ---------------------------------------------------------------------------
# Spectrum + PFR
# ---------------------------------------------------------------------------

SPECTRUM_COLUMNS = ("experiment_id", "estimator", "snr_db", "sample_count",
                    "angle_deg", "power", "pfr_mean")


def _spectrum_point(args):
    est_name, snr_db, n, trials, seed = args
    model = SignalModel.from_snr_db(snr_db)
    truth = AngleOfArrival(np.deg2rad(TRUE_AZIMUTH_DEG), np.deg2rad(TRUE_ELEVATION_DEG))
    pfrs = np.empty(trials)
    first = None
    for trial in range(trials):
        child = _child_seed(seed, 2, int(snr_db * 10) & 0xFFFF, n, trial)
        if est_name == "music":
            from .arrays import synthesize_snapshots
            from .estimators import (DEFAULT_MUSIC_GEOMETRY, estimate_covariance,
                                     eigendecompose, music_spectrum)
            snaps = synthesize_snapshots(DEFAULT_MUSIC_GEOMETRY, truth, model, n, child)
            decomp = eigendecompose(estimate_covariance(snaps), 1)
            spectrum = music_spectrum(decomp, DEFAULT_MUSIC_GEOMETRY, est_mod.AZIMUTH_GRID)
        else:
            from .estimators import (DEFAULT_XSBS_GEOMETRY, XsbsConfig, xsbs_spectrum)
            spectrum = xsbs_spectrum(DEFAULT_XSBS_GEOMETRY, XsbsConfig(), truth,
                                     model, n, child)
        pfrs[trial] = est_mod.pfr(spectrum)
        if first is None:
            first = spectrum
    return first, float(np.mean(pfrs))


def run_spectrum(spec: ExperimentSpec, parallel: int = 1):
    """One spectrum realization per (estimator, N) plus the mean PFR over trials."""
    snr = spec.snr_grid_db[0]
    tasks = [(est, snr, n, spec.trials, spec.seed)
             for est in spec.estimator_names()
             for n in spec.sample_counts]
    results = _map_tasks(_spectrum_point, tasks, parallel)
    rows = []
    for (est, _, n, _, _), (spectrum, pfr_mean) in zip(tasks, results):
        for angle, power in zip(spectrum.grid, spectrum.power):
            rows.append({"experiment_id": spec.experiment_id, "estimator": est,
                         "snr_db": snr, "sample_count": n,
                         "angle_deg": float(np.rad2deg(angle)), "power": float(power),
                         "pfr_mean": pfr_mean})
    rows.sort(key=lambda r: (r["estimator"], r["sample_count"], r["angle_deg"]))
    return rows


# ---------------------------------------------------------------------------
# BMR sweep
# ---------------------------------------------------------------------------

BMR_COLUMNS = ("experiment_id", "estimator", "source", "snr_db", "sample_count",
               "n_quan", "n_encod", "n_comb", "trials", "bmr_mean", "bmr_std",
               "threshold")


def _bmr_trial_estimates(args):
    """Aligned estimate sequences for one (estimator, snr, trial).

    Returns per node the 2-D azimuth/elevation sequences under the
    shared-reference convention (when any 2-D source is requested) and the
    1-D azimuth-only sequences of the horizon scenario (when requested).
    """
    est_name, snr_db, n, key_samples, trial, seed, need_2d, need_1d = args
    estimator = _make_estimator(est_name)
    model = SignalModel.from_snr_db(snr_db)
    conv = ReferenceConvention()
    snr_key = int(snr_db * 10) & 0xFFFF
    truths = random_aoa_sequence(key_samples, _child_seed(seed, 3, snr_key, trial, 0))
    rng_1d = np.random.default_rng(_child_seed(seed, 3, snr_key, trial, 1))
    az_true_1d = rng_1d.random(key_samples) * 2 * np.pi
    out = {}
    for node_idx, node in enumerate((ALICE, BOB)):
        az2 = np.empty(key_samples)
        el2 = np.empty(key_samples)
        az1 = np.empty(key_samples)
        for i, truth in enumerate(truths):
            if need_2d:
                raw_az = truth.azimuth
                if node == BOB:
                    raw_az = (raw_az + np.pi) % (2 * np.pi)
                child = _child_seed(seed, 3, snr_key, trial, 10 + node_idx, i)
                est = estimator.estimate(AngleOfArrival(raw_az, truth.elevation),
                                         model, n, child)
                aligned = align_reference(est, conv, node)
                az2[i] = aligned.azimuth
                el2[i] = aligned.elevation
            if need_1d:
                raw_az1 = az_true_1d[i]
                if node == BOB:
                    raw_az1 = (raw_az1 + np.pi) % (2 * np.pi)
                child1 = _child_seed(seed, 3, snr_key, trial, 20 + node_idx, i)
                az_hat = estimator.estimate_azimuth(raw_az1, model, n, child1)
                aligned1 = align_reference(AngleOfArrival(az_hat), conv, node)
                az1[i] = aligned1.azimuth
        out[node] = (az2, el2, az1)
    return out


def _aoa_source_bmr(node_est, source, pcfg: PipelineConfig):
    from .pipeline import _angle_quantizers

    az_q, el_q = _angle_quantizers(pcfg)
    streams = {}
    for node, (az2, el2, az1) in node_est.items():
        if source == "combined":
            streams[node] = angles_to_combined_bits(az2, el2, pcfg)
        elif source == "azimuth":
            streams[node] = encode_levels(quantize_sequence(az1, az_q), pcfg, "azimuth")
        else:
            streams[node] = encode_levels(quantize_sequence(el2, el_q), pcfg, "elevation")
    return bit_mismatch_rate(streams[ALICE], streams[BOB])


def run_bmr_sweep(spec: ExperimentSpec, parallel: int = 1):
    """Mean/std BMR per (source, SNR, pipeline combo).

    Angle estimates are produced once per (estimator, SNR, trial) and reused
    across every pipeline parameter combination, which keeps parameter sweeps
    cheap and makes them directly comparable.
    """
    n = spec.sample_counts[0]
    combos = spec.pipeline_combos()
    rows = []
    aoa_sources = [s for s in spec.sources if s in AOA_SOURCES]
    base_sources = [s for s in spec.sources if s in BASELINE_SOURCES]
    need_2d = any(s in ("elevation", "combined") for s in aoa_sources)
    need_1d = "azimuth" in aoa_sources
    for snr in spec.snr_grid_db:
        cache = {}
        if aoa_sources:
            for est_name in spec.estimator_names():
                tasks = [(est_name, snr, n, spec.key_samples, t, spec.seed,
                          need_2d, need_1d)
                         for t in range(spec.trials)]
                cache[est_name] = _map_tasks(_bmr_trial_estimates, tasks, parallel)
        for q, e, c in combos:
            pcfg = PipelineConfig(n_quan=q, n_encod=e, n_comb=c)
            for est_name in (spec.estimator_names() if aoa_sources else ()):
                for source in aoa_sources:
                    vals = np.array([_aoa_source_bmr(node_est, source, pcfg)
                                     for node_est in cache[est_name]])
                    rows.append(_bmr_row(spec, est_name, source, snr, n, q, e, c, vals))
            for source in base_sources:
                name = {"amplitude": "amplitude", "phase": "phase",
                        "amp-phase-combined": "combined"}[source]
                vals = np.empty(spec.trials)
                for t in range(spec.trials):
                    child = _child_seed(spec.seed, 4, int(snr * 10) & 0xFFFF, t)
                    _, _, bmr = baseline_key_pair(name, snr, pcfg, spec.key_samples, child)
                    vals[t] = bmr
                rows.append(_bmr_row(spec, "channel", source, snr, n, q, e, c, vals))
    rows.sort(key=lambda r: (r["estimator"], r["source"], -r["snr_db"],
                             r["n_quan"], r["n_encod"], r["n_comb"]))
    return rows


def _bmr_row(spec, est_name, source, snr, n, q, e, c, vals):
    return {"experiment_id": spec.experiment_id, "estimator": est_name,
            "source": source, "snr_db": snr, "sample_count": n,
            "n_quan": q, "n_encod": e, "n_comb": c, "trials": spec.trials,
            "bmr_mean": float(np.mean(vals)), "bmr_std": float(np.std(vals)),
            "threshold": BMR_THRESHOLD}


# ---------------------------------------------------------------------------
# Key generation demo (steps 0-6 end to end)
# ---------------------------------------------------------------------------

KEYGEN_COLUMNS = ("experiment_id", "estimator", "snr_db", "sample_count",
                  "key_bits", "bmr_pre", "bmr_post", "leakage_bits",
                  "final_key_bits", "keys_match", "alice_key_hex", "bob_key_hex")


def run_keygen_demo(spec: ExperimentSpec):
    """One full protocol run; returns (row, transcript_lines, report_text)."""
    est_name = spec.estimator_names()[0]
    estimator = _make_estimator(est_name)
    snr = spec.snr_grid_db[0]
    n = spec.sample_counts[0]
    pcfg = PipelineConfig(n_quan=spec.n_quan[0], n_encod=spec.n_encod[0],
                          n_comb=spec.n_comb[0])
    conv = ReferenceConvention()
    truths = random_aoa_sequence(spec.key_samples, _child_seed(spec.seed, 5, 0))
    from .pipeline import generate_key_pair
    alice, bob, bmr_pre = generate_key_pair(truths, estimator, estimator, conv,
                                            pcfg, snr, n,
                                            _child_seed(spec.seed, 5, 1))
    transcript = []
    bmr_post = bmr_pre
    leakage = 0
    if spec.reconciliation_enabled:
        block = estimate_initial_block_size(max(bmr_pre, 1e-9), key_length=len(alice)) \
            if bmr_pre > 0 else len(alice)
        block = min(block, len(alice))
        session = ReconciliationSession(
            permutation_seed=int(_child_seed(spec.seed, 5, 2).generate_state(1)[0]),
            block_size=block)
        bob, transcript = reconcile(alice, bob, session)
        bmr_post = bit_mismatch_rate(alice, bob)
        leakage = leakage_bits(transcript)
        out_len = min(max(8, len(alice) - leakage), len(alice) - 1)
        family = HashFunctionFamily(input_length=len(alice), output_length=out_len)
        hash_index = int(_child_seed(spec.seed, 5, 3).generate_state(1)[0])
        from .secrecy import TranscriptRecord
        transcript.append(TranscriptRecord("hash-index", -1, -1, hash_index))
        alice = privacy_amplify(alice, family, hash_index)
        bob = privacy_amplify(bob, family, hash_index)
    match = bool(np.array_equal(alice.bits, bob.bits))
    row = {"experiment_id": spec.experiment_id, "estimator": est_name,
           "snr_db": snr, "sample_count": n,
           "key_bits": 2 * pcfg.n_comb * spec.key_samples,
           "bmr_pre": bmr_pre, "bmr_post": bmr_post, "leakage_bits": leakage,
           "final_key_bits": len(alice), "keys_match": match,
           "alice_key_hex": alice.to_hex(), "bob_key_hex": bob.to_hex()}
    report = "\n".join([
        f"estimator: {est_name}   snr: {snr:g} dB   samples/estimate: {n}",
        f"key samples: {spec.key_samples}   key bits: {row['key_bits']}",
        f"bit mismatch rate before reconciliation: {bmr_pre:.4f}",
        f"bit mismatch rate after reconciliation:  {bmr_post:.4f}",
        f"parity bits leaked: {leakage}",
        f"final key length: {len(alice)} bits",
        f"alice key: {alice.to_hex()}",
        f"bob key:   {bob.to_hex()}",
        "keys match" if match else "KEYS DIFFER",
    ])
    return row, transcript_to_lines(transcript), report


# ---------------------------------------------------------------------------
# task mapping
# ---------------------------------------------------------------------------

def _map_tasks(fn, tasks, parallel):
    if parallel <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, tasks))


def run_experiment(spec: ExperimentSpec, out_dir, parallel: int = 1):
    """Dispatch on spec.kind, write outputs, and return the output directory."""
    start = time.time()
    extra = None
    if spec.kind == "rmse":
        rows, columns = run_rmse_sweep(spec, parallel), RMSE_COLUMNS
    elif spec.kind == "spectrum":
        rows, columns = run_spectrum(spec, parallel), SPECTRUM_COLUMNS
    elif spec.kind == "bmr":
        rows, columns = run_bmr_sweep(spec, parallel), BMR_COLUMNS
    else:
        row, transcript_lines, report = run_keygen_demo(spec)
        rows, columns = [row], KEYGEN_COLUMNS
        extra = {"transcript.log": "\n".join(transcript_lines) + "\n",
                 "report.txt": report + "\n"}
    target = write_results(out_dir, spec, columns, rows, extra_files=extra)
    elapsed = time.time() - start
    return target, rows, elapsed
