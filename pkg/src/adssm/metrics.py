"""Per-snapshot band metrics: average power, spectral entropy, sparsity.

The occupancy threshold is campaign-wide per band: a low percentile of the
pooled dB samples (the noise floor) plus a fixed margin.  Percentiles use
linear interpolation between the two closest order statistics, computed in
the dB domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

#: Absolute regularizer added to the band power sum before normalizing.
DEFAULT_EPS = 1e-20


@dataclass(frozen=True)
class ThresholdSpec:
    """Occupancy threshold rule: percentile noise floor plus margin, fixed
    per band for a whole campaign."""

    percentile: float = 5.0
    margin_db: float = 3.0
    scope: str = "per_band_per_campaign"

    def __post_init__(self) -> None:
        if not (0.0 < self.percentile < 100.0):
            raise InputError(f"percentile must be in (0, 100), got {self.percentile}")
        if self.margin_db < 0.0:
            raise InputError(f"margin_db must be non-negative, got {self.margin_db}")
        if self.scope != "per_band_per_campaign":
            raise InputError(f"unsupported threshold scope {self.scope!r}")


@dataclass(frozen=True)
class MetricSample:
    """Metrics of one band in one snapshot.  power_db is -inf when the
    band carried no power at all; such rows are excluded from binning."""

    altitude: float
    power_db: float
    entropy_bits: float
    entropy_norm: float
    sparsity: float


def _check_band_psd(band_psd: np.ndarray) -> np.ndarray:
    arr = np.asarray(band_psd, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("band psd must be a non-empty 1-D array")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InputError("band psd values must be finite and non-negative")
    return arr


def band_average_power(band_psd: np.ndarray) -> float:
    """10*log10 of the mean linear PSD over the band; -inf for all-zero input."""
    arr = _check_band_psd(band_psd)
    m = arr.mean()
    if m == 0.0:
        return float("-inf")
    return float(10.0 * np.log10(m))


def spectral_entropy(band_psd: np.ndarray, eps: float = DEFAULT_EPS) -> tuple[float, float]:
    """Shannon entropy of the normalized in-band power distribution.

    Returns (entropy_bits, entropy_norm) where entropy_norm divides by the
    log2 bin count.  A single-bin band has zero entropy by definition.
    """
    arr = _check_band_psd(band_psd)
    if eps < 0.0:
        raise InputError(f"eps must be non-negative, got {eps}")
    n = arr.size
    if n == 1:
        return 0.0, 0.0
    denom = arr.sum() + eps
    if denom == 0.0:
        return 0.0, 0.0
    p = arr / denom
    nz = p > 0.0
    h = float(-np.sum(p[nz] * np.log2(p[nz]))) + 0.0   # fold -0.0 to 0.0
    return h, h / float(np.log2(n))


def _percentile_db(sorted_db: np.ndarray, percentile: float) -> float:
    """Linear interpolation between the closest order statistics.

    Implemented by hand so pools containing -inf (zero-power samples)
    degrade to -inf instead of NaN.
    """
    n = sorted_db.size
    pos = percentile / 100.0 * (n - 1)
    lo = int(np.floor(pos))
    frac = pos - lo
    a = float(sorted_db[lo])
    if frac == 0.0 or lo + 1 >= n:
        return a
    b = float(sorted_db[lo + 1])
    if a == b or not np.isfinite(a):
        return a
    return a + frac * (b - a)


def noise_floor(pool_linear: np.ndarray, spec: ThresholdSpec = ThresholdSpec()) -> float:
    """Percentile of the pooled band samples, in dB."""
    arr = _check_band_psd(pool_linear)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(arr)
    return _percentile_db(np.sort(db), spec.percentile)


def occupancy_threshold(pool_linear: np.ndarray, spec: ThresholdSpec = ThresholdSpec()) -> float:
    """Campaign occupancy threshold for one band: noise floor + margin, dB."""
    return noise_floor(pool_linear, spec) + spec.margin_db


def sparsity(band_psd: np.ndarray, gamma_db: float) -> float:
    """Fraction of band bins strictly above the threshold, in [0, 1]."""
    arr = _check_band_psd(band_psd)
    if not np.isfinite(gamma_db):
        raise InputError(f"gamma_db must be finite, got {gamma_db}")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(arr)
    return float(np.mean(db > gamma_db))


def snapshot_metrics(altitude: float, band_psd: np.ndarray, gamma_db: float,
                     eps: float = DEFAULT_EPS) -> MetricSample:
    """All three metrics of one band PSD vector at one altitude."""
    bits, norm = spectral_entropy(band_psd, eps=eps)
    return MetricSample(
        altitude=float(altitude),
        power_db=band_average_power(band_psd),
        entropy_bits=bits,
        entropy_norm=norm,
        sparsity=sparsity(band_psd, gamma_db),
    )
