"""Averaged-periodogram PSD estimation and placement of trimmed captures.

welch_psd returns a DC-centered (fftshifted) two-sided estimate running from
-fs/2 up to +fs/2, window-power normalized.  trim_and_place drops the edge
bins of one capture and writes the rest into its slot of the global grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError, PlacementError
from .grid import FrequencyGrid, SweepConfig
from .sweep import SweepRecord

WINDOWS = ("rectangular", "hann")
SCALINGS = ("density", "spectrum")


@dataclass(frozen=True)
class WelchConfig:
    """Estimator settings.

    Defaults (hann window, 50% overlap, density scaling) are assumptions
    recorded in pipeline metadata, not measured choices.
    """

    fft_size: int = 512
    overlap_fraction: float = 0.5
    window: str = "hann"
    scaling: str = "density"

    def __post_init__(self) -> None:
        n = self.fft_size
        if n < 2 or (n & (n - 1)) != 0:
            raise ConfigurationError(f"fft_size must be a power of two, got {n}")
        if not (0.0 <= self.overlap_fraction < 1.0):
            raise ConfigurationError(
                f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}"
            )
        if self.window not in WINDOWS:
            raise ConfigurationError(f"window must be one of {WINDOWS}, got {self.window!r}")
        if self.scaling not in SCALINGS:
            raise ConfigurationError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")


def _window_samples(cfg: WelchConfig) -> np.ndarray:
    n = cfg.fft_size
    if cfg.window == "rectangular":
        return np.ones(n)
    # Periodic hann, the spectral-analysis convention.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def welch_psd(iq: np.ndarray, fs: float, cfg: WelchConfig = WelchConfig()) -> np.ndarray:
    """Two-sided PSD estimate of a complex baseband capture.

    Args:
        iq: 1-D complex samples, at least fft_size of them.
        fs: sample rate in Hz.
        cfg: estimator settings.

    Returns:
        Length fft_size array, DC-centered, ordered -fs/2 .. +fs/2.
        density scaling integrates to the mean-square sample power;
        spectrum scaling puts a unit tone's squared amplitude in its bin.
    """
    x = np.asarray(iq)
    if x.ndim != 1:
        raise InputError(f"iq must be 1-D, got shape {x.shape}")
    if x.size < cfg.fft_size:
        raise InputError(f"need at least fft_size={cfg.fft_size} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("iq contains non-finite samples")
    if fs <= 0:
        raise InputError(f"fs must be positive, got {fs}")

    n = cfg.fft_size
    hop = max(1, n - int(round(cfg.overlap_fraction * n)))
    segments = np.lib.stride_tricks.sliding_window_view(x, n)[::hop]
    w = _window_samples(cfg)
    spec = np.fft.fft(segments * w, axis=1)
    pxx = np.mean(np.abs(spec) ** 2, axis=0)
    if cfg.scaling == "density":
        pxx = pxx / (fs * np.sum(w ** 2))
    else:
        pxx = pxx / np.sum(w) ** 2
    return np.fft.fftshift(pxx)


def trim_and_place(psd: np.ndarray, center_freq: float, cfg: SweepConfig,
                   grid: FrequencyGrid, into: SweepRecord) -> SweepRecord:
    """Write one capture's retained bins into its grid slot.

    The input PSD must be DC-centered and fft_size long; the middle
    fft_size - 2*edge_trim bins land at the capture's position on the
    schedule.  Returns an updated record, other positions untouched.
    """
    arr = np.asarray(psd, dtype=float)
    if arr.ndim != 1 or arr.size != cfg.fft_size:
        raise InputError(f"psd must have fft_size={cfg.fft_size} bins, got {arr.size}")
    if grid.n_bins % cfg.retained_bins != 0:
        raise ConfigurationError(
            f"grid size {grid.n_bins} is not a whole number of "
            f"{cfg.retained_bins}-bin captures"
        )
    if into.psd.size != grid.n_bins:
        raise InputError(
            f"record has {into.psd.size} bins but the grid has {grid.n_bins}"
        )
    pos = (center_freq - cfg.f_start) / cfg.step
    idx = int(round(pos))
    n_captures = grid.n_bins // cfg.retained_bins
    if abs(pos - idx) > 1e-6 or not (0 <= idx < n_captures):
        raise PlacementError(
            f"center frequency {center_freq:g} Hz is not on the sweep schedule "
            f"(f_start {cfg.f_start:g} Hz, step {cfg.step:g} Hz, {n_captures} captures)"
        )
    start = idx * cfg.retained_bins
    # Cross-check the slot against the grid frequencies themselves.
    expect_first = center_freq - (cfg.fft_size // 2 - cfg.edge_trim) * cfg.bin_width
    if abs(grid.bin_freqs[start] - expect_first) > 1e-6 * cfg.bin_width:
        raise PlacementError(
            f"grid bin {start} at {grid.bin_freqs[start]:g} Hz does not match the "
            f"capture's first retained bin at {expect_first:g} Hz"
        )
    out = into.psd.copy()
    out[start:start + cfg.retained_bins] = arr[cfg.edge_trim:cfg.fft_size - cfg.edge_trim]
    return into.with_psd(out)


def read_raw_capture(path: str | Path) -> tuple[np.ndarray, float, float]:
    """Read interleaved little-endian float32 I/Q plus its JSON sidecar.

    The sidecar sits next to the capture with a .json suffix and holds
    {fs_hz, center_freq_hz}.  Returns (iq, fs, center_freq).
    """
    path = Path(path)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size == 0 or raw.size % 2 != 0:
        raise InputError(f"{path}: expected interleaved I/Q pairs, got {raw.size} floats")
    sidecar = path.with_suffix(".json")
    try:
        with open(sidecar, encoding="utf-8") as fh:
            meta = json.load(fh)
        fs = float(meta["fs_hz"])
        center = float(meta["center_freq_hz"])
    except FileNotFoundError as exc:
        raise InputError(f"missing capture sidecar {sidecar}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad capture sidecar {sidecar}: {exc}") from exc
    iq = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return iq, fs, center
