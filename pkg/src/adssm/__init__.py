"""Altitude-dependent spectral structure modelling toolkit.

Pipeline: synthesize or ingest swept-spectrum snapshots, compute band-level
metrics (average power, spectral entropy, sparsity), aggregate them over
altitude bins, fit closed-form response curves and report transition heights.
"""

from .bands import (BandDefinition, BandRange, band_by_name, default_band_registry,
                    load_band_registry, resolve_band, save_band_registry)
from .binning import (AltitudeBin, BinnedMetricSeries, bin_by_altitude,
                      read_binned_csv, write_binned_csv)
from .errors import (AdssmError, BandRangeError, ConfigurationError, GridMismatchError,
                     InputError, InsufficientDataError, PlacementError, ScenarioError)
from .fitting import (FitOptions, FitReport, fit_exp, fit_exp_reduced, fit_logistic,
                      goodness, nelder_mead, read_fit_report, render_summary_table,
                      write_fit_report)
from .grid import (DEFAULT_SWEEP, FrequencyGrid, SweepConfig, build_frequency_grid,
                   sweep_centers)
from .metrics import (DEFAULT_EPS, MetricSample, ThresholdSpec, band_average_power,
                      noise_floor, occupancy_threshold, snapshot_metrics,
                      sparsity, spectral_entropy)
from .model import (ExpModelParams, LogisticModelParams, TransitionHeights,
                    exp_eval, exp_ode_residual, logistic_eval,
                    transition_heights_exp, transition_heights_logistic)
from .sweep import SweepRecord, extract_band_psd, read_sweep_dataset, write_sweep_dataset
from .synth import (EmitterSpec, ScenarioSpec, ascent_trajectory, gen_metric_series,
                    gen_sweep_dataset, load_scenario, save_scenario)
from .welch import WelchConfig, read_raw_capture, trim_and_place, welch_psd

__version__ = "0.1.0"

__all__ = [
    "AdssmError", "AltitudeBin", "BandDefinition", "BandRange", "BandRangeError",
    "BinnedMetricSeries", "ConfigurationError", "DEFAULT_EPS", "DEFAULT_SWEEP",
    "EmitterSpec", "ExpModelParams", "FitOptions", "FitReport", "FrequencyGrid",
    "GridMismatchError", "InputError", "InsufficientDataError", "LogisticModelParams",
    "MetricSample", "PlacementError", "ScenarioError", "ScenarioSpec", "SweepConfig",
    "SweepRecord", "ThresholdSpec", "TransitionHeights", "WelchConfig",
    "ascent_trajectory", "band_average_power", "band_by_name", "bin_by_altitude",
    "build_frequency_grid", "default_band_registry", "exp_eval", "exp_ode_residual",
    "extract_band_psd", "fit_exp", "fit_exp_reduced", "fit_logistic",
    "gen_metric_series", "gen_sweep_dataset", "goodness", "load_band_registry",
    "load_scenario", "logistic_eval", "nelder_mead", "noise_floor",
    "occupancy_threshold", "read_binned_csv", "read_fit_report", "read_raw_capture",
    "read_sweep_dataset", "render_summary_table", "resolve_band",
    "save_band_registry", "save_scenario", "snapshot_metrics", "sparsity",
    "spectral_entropy", "sweep_centers", "transition_heights_exp",
    "transition_heights_logistic", "trim_and_place", "welch_psd",
    "write_binned_csv", "write_fit_report", "write_sweep_dataset",
]
