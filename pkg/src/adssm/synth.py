"""Synthetic data with planted ground truth, at two fidelity levels.

gen_metric_series plants a response curve directly as a binned series
(model evaluation plus seeded Gaussian noise).  gen_sweep_dataset builds
whole sweep snapshots from first principles: emitters with exponential
excess loss and seeded logistic activation over a Gamma-distributed noise
floor (the mean of noise_averages exponential draws, i.e. segment-averaged
receiver noise; noise_averages=1 is the plain Rayleigh-power case).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bands import BandDefinition, BandRange, default_band_registry, resolve_band
from .binning import AltitudeBin, BinnedMetricSeries
from .errors import InputError, ScenarioError
from .grid import FrequencyGrid, SweepConfig, build_frequency_grid
from .model import ExpModelParams, LogisticModelParams, exp_eval, logistic_eval
from .sweep import SweepRecord

PLANTED_METRICS = ("power", "entropy_norm", "sparsity")


def gen_metric_series(model, centers, noise_sigma: float = 0.0, seed: int = 0,
                      band: str = "synthetic", metric: str | None = None,
                      count: int = 10) -> BinnedMetricSeries:
    """Evaluate a planted model at bin centers, plus seeded Gaussian noise.

    noise_sigma=0 reproduces the model exactly.  Logistic values are clipped
    to [0, 1] after adding noise, matching what binned sparsity means can be.
    """
    c = np.asarray(centers, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InputError("centers must be a non-empty 1-D array")
    if np.any(np.diff(c) <= 0) or np.any(c < 0):
        raise InputError("centers must be non-negative and strictly increasing")
    if noise_sigma < 0:
        raise InputError(f"noise_sigma must be non-negative, got {noise_sigma}")

    if isinstance(model, LogisticModelParams):
        values = np.atleast_1d(logistic_eval(model, c))
        metric = metric or "sparsity"
    elif isinstance(model, ExpModelParams):
        values = np.atleast_1d(exp_eval(model, c))
        metric = metric or "power"
    else:
        raise InputError(f"unsupported model type {type(model).__name__}")

    rng = np.random.default_rng(seed)
    values = values + noise_sigma * rng.standard_normal(c.size)
    if isinstance(model, LogisticModelParams):
        values = np.clip(values, 0.0, 1.0)

    bins = tuple(
        AltitudeBin(center=float(ci), mean=float(vi), std=float(noise_sigma), count=count)
        for ci, vi in zip(c, values)
    )
    return BinnedMetricSeries(band=band, metric=metric, delta_h=_lattice_step(c), bins=bins)


def _lattice_step(centers: np.ndarray) -> float:
    if centers.size > 1:
        return float(np.min(np.diff(centers)))
    return 2.0 * float(centers[0]) if centers[0] > 0 else 1.0


@dataclass(frozen=True)
class EmitterSpec:
    """One planted emitter inside a band.

    bins is "all" or band-relative indices.  Received power in its bins is
    peak_power_db - excess_loss_db * exp(-h / clutter_height_m), with
    optional log-normal jitter, whenever the seeded activation draw at
    probability logistic(activation_k * (h - activation_h50_m)) fires.
    """

    bins: str | tuple[int, ...]
    peak_power_db: float
    excess_loss_db: float
    clutter_height_m: float
    activation_h50_m: float
    activation_k: float
    jitter_sigma_db: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.bins, str):
            if self.bins != "all":
                raise ScenarioError(f'emitter bins must be "all" or indices, got {self.bins!r}')
        else:
            object.__setattr__(self, "bins", tuple(int(b) for b in self.bins))
            if not self.bins:
                raise ScenarioError("emitter bins must be non-empty")
        if self.excess_loss_db < 0:
            raise ScenarioError(f"excess_loss_db must be >= 0, got {self.excess_loss_db}")
        if self.clutter_height_m <= 0:
            raise ScenarioError(f"clutter_height_m must be > 0, got {self.clutter_height_m}")
        if self.activation_k <= 0:
            raise ScenarioError(f"activation_k must be > 0, got {self.activation_k}")
        if self.jitter_sigma_db < 0:
            raise ScenarioError(f"jitter_sigma_db must be >= 0, got {self.jitter_sigma_db}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Self-contained description of a synthetic campaign."""

    name: str
    seed: int
    sweep: SweepConfig
    bands: tuple[BandRange, ...]
    trajectory: tuple[tuple[float, float], ...]   # (timestamp_s, altitude_m)
    emitters: dict[str, tuple[EmitterSpec, ...]] = field(default_factory=dict)
    noise_floor_db: dict[str, float] = field(default_factory=dict)
    default_noise_floor_db: float = -100.0
    noise_averages: int = 100
    planted: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.bands:
            raise ScenarioError("scenario needs at least one band")
        names = [b.name for b in self.bands]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate band names in scenario: {names}")
        if not self.trajectory:
            raise ScenarioError("scenario trajectory is empty")
        for t, h in self.trajectory:
            if not (np.isfinite(t) and np.isfinite(h)) or h < 0:
                raise ScenarioError(f"bad trajectory point (t={t}, h={h})")
        times = [t for t, _ in self.trajectory]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ScenarioError("trajectory timestamps must strictly increase")
        if self.noise_averages < 1:
            raise ScenarioError(f"noise_averages must be >= 1, got {self.noise_averages}")
        for scope, keys in (("emitters", self.emitters), ("noise_floor_db", self.noise_floor_db),
                            ("planted", self.planted)):
            unknown = set(keys) - set(names)
            if unknown:
                raise ScenarioError(f"{scope} reference unknown bands {sorted(unknown)}")
        for band, per_metric in self.planted.items():
            for metric, params in per_metric.items():
                if metric not in PLANTED_METRICS:
                    raise ScenarioError(
                        f"planted metric {metric!r} for {band!r} not in {PLANTED_METRICS}"
                    )
                want = LogisticModelParams if metric == "sparsity" else ExpModelParams
                if not isinstance(params, want):
                    raise ScenarioError(
                        f"planted {band}/{metric} must be {want.__name__}"
                    )

    def to_dict(self) -> dict:
        def emitter_dict(e: EmitterSpec) -> dict:
            return {
                "bins": e.bins if isinstance(e.bins, str) else list(e.bins),
                "peak_power_db": e.peak_power_db,
                "excess_loss_db": e.excess_loss_db,
                "clutter_height_m": e.clutter_height_m,
                "activation_h50_m": e.activation_h50_m,
                "activation_k": e.activation_k,
                "jitter_sigma_db": e.jitter_sigma_db,
            }

        return {
            "name": self.name,
            "seed": self.seed,
            "sweep": {
                "f_start_hz": self.sweep.f_start,
                "f_stop_hz": self.sweep.f_stop,
                "step_hz": self.sweep.step,
                "sample_rate_hz": self.sweep.sample_rate,
                "fft_size": self.sweep.fft_size,
                "edge_trim": self.sweep.edge_trim,
                "samples_per_capture": self.sweep.samples_per_capture,
            },
            "bands": [
                {"name": b.name, "f_low_hz": b.f_low_hz, "f_high_hz": b.f_high_hz}
                for b in self.bands
            ],
            "trajectory": [[t, h] for t, h in self.trajectory],
            "emitters": {
                band: [emitter_dict(e) for e in ems] for band, ems in self.emitters.items()
            },
            "noise_floor_db": dict(self.noise_floor_db),
            "default_noise_floor_db": self.default_noise_floor_db,
            "noise_averages": self.noise_averages,
            "planted": {
                band: {
                    metric: {k: float(v) for k, v in vars(params).items()}
                    for metric, params in per_metric.items()
                }
                for band, per_metric in self.planted.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        try:
            sw = d["sweep"]
            sweep = SweepConfig(
                f_start=float(sw["f_start_hz"]),
                f_stop=float(sw["f_stop_hz"]),
                step=float(sw["step_hz"]),
                sample_rate=float(sw["sample_rate_hz"]),
                fft_size=int(sw["fft_size"]),
                edge_trim=int(sw.get("edge_trim", 0)),
                samples_per_capture=int(sw.get("samples_per_capture", sw["fft_size"])),
            )
            bands = []
            registry = None
            for entry in d["bands"]:
                if isinstance(entry, str):
                    if registry is None:
                        registry = {b.name: b for b in default_band_registry()}
                    if entry not in registry:
                        raise ScenarioError(f"band {entry!r} is not in the default registry")
                    bands.append(registry[entry])
                else:
                    bands.append(BandRange(name=str(entry["name"]),
                                           f_low_hz=float(entry["f_low_hz"]),
                                           f_high_hz=float(entry["f_high_hz"])))
            traj = d["trajectory"]
            if isinstance(traj, dict):
                trajectory = ascent_trajectory(
                    h_max=float(traj["h_max_m"]), rate=float(traj["rate_mps"]),
                    dwell=float(traj["dwell_s"]),
                )
            else:
                trajectory = tuple((float(t), float(h)) for t, h in traj)
            emitters = {
                band: tuple(EmitterSpec(
                    bins=e["bins"] if isinstance(e["bins"], str) else tuple(e["bins"]),
                    peak_power_db=float(e["peak_power_db"]),
                    excess_loss_db=float(e["excess_loss_db"]),
                    clutter_height_m=float(e["clutter_height_m"]),
                    activation_h50_m=float(e["activation_h50_m"]),
                    activation_k=float(e["activation_k"]),
                    jitter_sigma_db=float(e.get("jitter_sigma_db", 0.0)),
                ) for e in ems)
                for band, ems in d.get("emitters", {}).items()
            }
            planted = {}
            for band, per_metric in d.get("planted", {}).items():
                planted[band] = {}
                for metric, p in per_metric.items():
                    if metric == "sparsity":
                        planted[band][metric] = LogisticModelParams(
                            k=float(p["k"]), h_s=float(p["h_s"]))
                    else:
                        planted[band][metric] = ExpModelParams(
                            x_inf=float(p["x_inf"]), x_zero=float(p["x_zero"]),
                            tau=float(p["tau"]))
            return cls(
                name=str(d.get("name", "scenario")),
                seed=int(d["seed"]),
                sweep=sweep,
                bands=tuple(bands),
                trajectory=trajectory,
                emitters=emitters,
                noise_floor_db={k: float(v) for k, v in d.get("noise_floor_db", {}).items()},
                default_noise_floor_db=float(d.get("default_noise_floor_db", -100.0)),
                noise_averages=int(d.get("noise_averages", 100)),
                planted=planted,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"bad scenario description: {exc}") from exc


def ascent_trajectory(h_max: float, rate: float, dwell: float) -> tuple[tuple[float, float], ...]:
    """Snapshots every dwell seconds during a constant-rate climb to h_max."""
    if rate <= 0 or dwell <= 0 or h_max < 0:
        raise ScenarioError(
            f"ascent needs rate > 0, dwell > 0, h_max >= 0; got {rate}, {dwell}, {h_max}"
        )
    points = []
    i = 0
    while True:
        t = i * dwell
        h = rate * t
        if h >= h_max:
            points.append((t, float(h_max)))
            break
        points.append((t, h))
        i += 1
    return tuple(points)


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        return ScenarioSpec.from_dict(json.load(fh))


def save_scenario(path: str | Path, spec: ScenarioSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    v, w = values[order], weights[order]
    cum = np.cumsum(w)
    idx = int(np.searchsorted(cum, 0.5 * cum[-1], side="left"))
    return float(v[min(idx, v.size - 1)])


def gen_sweep_dataset(spec: ScenarioSpec) -> tuple[FrequencyGrid, list[SweepRecord], dict]:
    """Generate sweep snapshots along the trajectory plus a truth sidecar.

    Every random stream is derived from the scenario seed, so repeated calls
    are bit-identical.  Bins claimed by an active emitter carry exactly the
    emitter power (plus jitter when configured); everything else is noise.
    """
    grid = build_frequency_grid(spec.sweep)
    band_defs: dict[str, BandDefinition] = {}
    for br in spec.bands:
        band_defs[br.name] = resolve_band(grid, br.name, br.f_low_hz, br.f_high_hz)

    floor_linear = np.full(grid.n_bins, 10.0 ** (spec.default_noise_floor_db / 10.0))
    for name, bd in band_defs.items():
        fl = spec.noise_floor_db.get(name, spec.default_noise_floor_db)
        floor_linear[bd.bin_start:bd.bin_stop] = 10.0 ** (fl / 10.0)

    # Resolve emitters to absolute grid bins and give each its own streams.
    resolved = []
    e_index = 0
    for br in spec.bands:
        for em in spec.emitters.get(br.name, ()):
            bd = band_defs[br.name]
            if isinstance(em.bins, str):
                rel = np.arange(bd.n_bins)
            else:
                rel = np.asarray(em.bins, dtype=int)
                if rel.min() < 0 or rel.max() >= bd.n_bins:
                    raise ScenarioError(
                        f"emitter bins {rel.min()}..{rel.max()} fall outside band "
                        f"{br.name!r} with {bd.n_bins} bins"
                    )
            act_rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 1, e_index)))
            jit_rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 2, e_index)))
            resolved.append((br.name, em, bd.bin_start + rel, act_rng, jit_rng))
            e_index += 1

    noise_rng = np.random.default_rng(np.random.SeedSequence((spec.seed, 0)))
    navg = spec.noise_averages
    records = []
    for t, h in spec.trajectory:
        emitted = np.zeros(grid.n_bins)
        for _, em, abs_bins, act_rng, jit_rng in resolved:
            gate = LogisticModelParams(k=em.activation_k, h_s=em.activation_h50_m)
            if act_rng.uniform() < logistic_eval(gate, h):
                level_db = (em.peak_power_db
                            - em.excess_loss_db * np.exp(-h / em.clutter_height_m))
                db = np.full(abs_bins.size, level_db)
                if em.jitter_sigma_db > 0:
                    db = db + jit_rng.normal(0.0, em.jitter_sigma_db, size=abs_bins.size)
                emitted[abs_bins] += 10.0 ** (db / 10.0)
        noise = noise_rng.gamma(shape=float(navg), scale=floor_linear / navg)
        psd = np.where(emitted > 0.0, emitted, noise)
        records.append(SweepRecord(timestamp=float(t), altitude=float(h), psd=psd))

    truth = {
        "name": spec.name,
        "seed": spec.seed,
        "noise_averages": navg,
        "default_noise_floor_db": spec.default_noise_floor_db,
        "noise_floor_db": dict(spec.noise_floor_db),
        "bands": [
            {"name": br.name, "f_low_hz": br.f_low_hz, "f_high_hz": br.f_high_hz,
             "n_bins": band_defs[br.name].n_bins}
            for br in spec.bands
        ],
        "planted": {
            band: {metric: {k: float(v) for k, v in vars(params).items()}
                   for metric, params in per_metric.items()}
            for band, per_metric in spec.planted.items()
        },
        "derived": _derived_truth(spec, band_defs),
        "n_snapshots": len(records),
        "altitude_max_m": max(h for _, h in spec.trajectory),
    }
    return grid, records, truth


def _derived_truth(spec: ScenarioSpec, band_defs: dict[str, BandDefinition]) -> dict:
    out = {}
    for br in spec.bands:
        ems = spec.emitters.get(br.name, ())
        if not ems:
            continue
        bd = band_defs[br.name]
        weights = np.array([
            bd.n_bins if isinstance(e.bins, str) else len(e.bins) for e in ems
        ], dtype=float)
        h50s = np.array([e.activation_h50_m for e in ems], dtype=float)
        out[br.name] = {
            "activation_h50_weighted_median_m": _weighted_median(h50s, weights),
            "occupied_bin_fraction": float(weights.sum() / bd.n_bins),
        }
    return out
