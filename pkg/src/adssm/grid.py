"""Global frequency grid assembled from a stepped sweep of fixed-rate captures.

Each capture is one FFT at a center frequency on the sweep schedule.  After
discarding ``edge_trim`` bins on both sides (anti-alias filter roll-off), the
retained spans of consecutive captures abut exactly when the tuning step
equals ``bin_width * (fft_size - 2 * edge_trim)``.  The assembled grid is
then uniform, so later band extraction reduces to index slicing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Relative tolerance for "these two frequencies are the same bin".
REL_TOL = 1e-6


@dataclass(frozen=True)
class SweepConfig:
    """Sweep schedule and per-capture FFT parameters.

    Attributes:
        f_start: first capture center frequency, Hz.
        f_stop: frequency the sweep must cover, Hz.
        step: center-frequency increment between captures, Hz.
        sample_rate: capture sample rate, Hz.
        fft_size: FFT length per capture.
        edge_trim: bins discarded on each edge of every capture.
        samples_per_capture: IQ samples recorded per capture.
    """

    f_start: float
    f_stop: float
    step: float
    sample_rate: float
    fft_size: int
    edge_trim: int = 42
    samples_per_capture: int = 500_000

    def __post_init__(self) -> None:
        if self.f_start >= self.f_stop:
            raise ConfigurationError(
                f"f_start ({self.f_start} Hz) must lie below f_stop ({self.f_stop} Hz)"
            )
        if self.step <= 0:
            raise ConfigurationError(f"step must be positive, got {self.step}")
        if self.sample_rate <= 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.fft_size < 2:
            raise ConfigurationError(f"fft_size must be at least 2, got {self.fft_size}")
        if self.edge_trim < 0:
            raise ConfigurationError(f"edge_trim must be non-negative, got {self.edge_trim}")
        if self.fft_size - 2 * self.edge_trim < 1:
            raise ConfigurationError(
                f"edge_trim {self.edge_trim} leaves no bins of a {self.fft_size}-point FFT"
            )
        if self.samples_per_capture < self.fft_size:
            raise ConfigurationError(
                f"samples_per_capture ({self.samples_per_capture}) is below fft_size"
            )

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.fft_size

    @property
    def retained_bins(self) -> int:
        """Bins kept per capture after edge trimming."""
        return self.fft_size - 2 * self.edge_trim

    @property
    def retained_span(self) -> float:
        """Bandwidth kept per capture, in bin-edge terms (Hz)."""
        return self.retained_bins * self.bin_width


#: The survey configuration the default band registry was designed around:
#: 87 MHz to 6 GHz in 25.68 MHz steps, 30.72 MHz rate, 512-point FFTs with
#: 42 bins trimmed per edge (428 retained bins of 60 kHz, abutting spans).
DEFAULT_SWEEP = SweepConfig(
    f_start=87e6,
    f_stop=6e9,
    step=25.68e6,
    sample_rate=30.72e6,
    fft_size=512,
    edge_trim=42,
    samples_per_capture=500_000,
)


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Uniform, strictly increasing grid of retained bin center frequencies."""

    bin_freqs: np.ndarray
    bin_width: float

    def __post_init__(self) -> None:
        freqs = np.asarray(self.bin_freqs, dtype=float)
        if freqs.ndim != 1 or freqs.size == 0:
            raise ConfigurationError("grid needs a non-empty 1-D frequency array")
        if self.bin_width <= 0:
            raise ConfigurationError(f"bin_width must be positive, got {self.bin_width}")
        diffs = np.diff(freqs)
        if np.any(diffs <= 0):
            raise ConfigurationError("grid frequencies must be strictly increasing")
        if np.any(np.abs(diffs - self.bin_width) > REL_TOL * self.bin_width):
            raise ConfigurationError(
                "grid spacing is not uniform at the configured bin width"
            )
        freqs = freqs.copy()
        freqs.setflags(write=False)
        object.__setattr__(self, "bin_freqs", freqs)

    @property
    def n_bins(self) -> int:
        return int(self.bin_freqs.size)

    @property
    def f_first(self) -> float:
        return float(self.bin_freqs[0])

    def to_dict(self, gain_offset_db: float = 0.0) -> dict:
        """Compact serializable form; f_start_hz is the first bin center."""
        return {
            "f_start_hz": self.f_first,
            "bin_width_hz": float(self.bin_width),
            "n_bins": self.n_bins,
            "gain_offset_db": float(gain_offset_db),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyGrid":
        n = int(d["n_bins"])
        width = float(d["bin_width_hz"])
        freqs = float(d["f_start_hz"]) + width * np.arange(n)
        return cls(bin_freqs=freqs, bin_width=width)


def sweep_centers(cfg: SweepConfig) -> np.ndarray:
    """Center frequencies of the capture schedule covering [f_start, f_stop].

    Captures are appended until the retained span of the last one reaches
    f_stop, so the grid always covers the requested range.  The retained
    window is DC-centered and therefore half a bin asymmetric: its top
    edge is the upper edge of offset bin retained_bins - 1 - (fft//2 - trim).
    """
    k_max = cfg.retained_bins - 1 - (cfg.fft_size // 2 - cfg.edge_trim)
    half_top = (k_max + 0.5) * cfg.bin_width
    guard = REL_TOL * cfg.bin_width
    centers = []
    c = cfg.f_start
    while True:
        centers.append(c)
        if c + half_top >= cfg.f_stop - guard:
            break
        c += cfg.step
    return np.asarray(centers)


def build_frequency_grid(cfg: SweepConfig) -> FrequencyGrid:
    """Assemble the global grid of retained bin centers for a sweep config.

    Raises ConfigurationError when the step does not match the retained span:
    consecutive captures would overlap or leave a gap, and the assembled grid
    could not stay uniform.
    """
    mismatch = cfg.step - cfg.retained_span
    if abs(mismatch) > 1e-9 * cfg.retained_span:
        kind = "a gap between" if mismatch > 0 else "an overlap of"
        raise ConfigurationError(
            f"step {cfg.step:g} Hz does not match the retained span "
            f"{cfg.retained_span:g} Hz ({cfg.retained_bins} bins x "
            f"{cfg.bin_width:g} Hz); this would create {kind} consecutive captures"
        )
    centers = sweep_centers(cfg)
    # Retained bin offsets relative to the capture center, DC-centered FFT
    # ordering: k runs from -fft_size/2 + edge_trim to fft_size/2 - edge_trim - 1.
    k = np.arange(cfg.retained_bins) - (cfg.fft_size // 2 - cfg.edge_trim)
    offsets = k * cfg.bin_width
    freqs = (centers[:, None] + offsets[None, :]).ravel()
    return FrequencyGrid(bin_freqs=freqs, bin_width=cfg.bin_width)
