"""Altitude binning of metric samples.

Bins are half-open [k*delta_h, (k+1)*delta_h) with centers at
(k + 0.5)*delta_h.  Non-finite metric values (the -inf no-power sentinel)
are excluded before binning, and bins with fewer than min_count samples
are dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, InsufficientDataError

METRIC_NAMES = ("power", "entropy_norm", "sparsity")


@dataclass(frozen=True)
class AltitudeBin:
    center: float
    mean: float
    std: float     # population std of the samples in the bin
    count: int


@dataclass(frozen=True)
class BinnedMetricSeries:
    """One metric of one band, aggregated over altitude bins."""

    band: str
    metric: str
    delta_h: float
    bins: tuple[AltitudeBin, ...]

    def __post_init__(self) -> None:
        if self.metric not in METRIC_NAMES:
            raise InputError(f"metric must be one of {METRIC_NAMES}, got {self.metric!r}")
        if self.delta_h <= 0:
            raise InputError(f"delta_h must be positive, got {self.delta_h}")
        if not self.bins:
            raise InsufficientDataError(f"{self.band}/{self.metric}: series has no bins")
        centers = np.array([b.center for b in self.bins])
        means = np.array([b.mean for b in self.bins])
        if not np.all(np.isfinite(means)):
            raise InputError(f"{self.band}/{self.metric}: bin means must be finite")
        if np.any(np.diff(centers) <= 0):
            raise InputError(f"{self.band}/{self.metric}: bin centers must increase")
        # Gaps are allowed (dropped bins) but centers stay on the delta_h lattice.
        steps = np.diff(centers) / self.delta_h
        if centers.size > 1 and np.any(np.abs(steps - np.round(steps)) > 1e-6):
            raise InputError(
                f"{self.band}/{self.metric}: centers are not spaced by multiples "
                f"of delta_h={self.delta_h}"
            )
        if any(b.count < 1 for b in self.bins):
            raise InputError(f"{self.band}/{self.metric}: bin counts must be >= 1")

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.bins])

    @property
    def means(self) -> np.ndarray:
        return np.array([b.mean for b in self.bins])

    @property
    def n_bins(self) -> int:
        return len(self.bins)

    @property
    def span(self) -> float:
        return float(self.bins[-1].center - self.bins[0].center)


def bin_by_altitude(samples, delta_h: float = 10.0, min_count: int = 3,
                    band: str = "", metric: str = "power") -> BinnedMetricSeries:
    """Aggregate (altitude, value) pairs into altitude bins.

    Args:
        samples: iterable of (altitude_m, value) pairs.
        delta_h: bin height in meters.
        min_count: bins with fewer samples are dropped (default 3, an
            assumption echoed in pipeline metadata).
        band, metric: labels carried through to the series.

    Raises:
        InputError: on negative or non-finite altitudes, or bad delta_h.
        InsufficientDataError: when no bin survives min_count.
    """
    if delta_h <= 0:
        raise InputError(f"delta_h must be positive, got {delta_h}")
    if min_count < 1:
        raise InputError(f"min_count must be >= 1, got {min_count}")
    arr = np.asarray(list(samples), dtype=float)
    if arr.size == 0:
        raise InsufficientDataError(f"{band}/{metric}: no samples to bin")
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError("samples must be (altitude, value) pairs")
    alts, vals = arr[:, 0], arr[:, 1]
    if not np.all(np.isfinite(alts)) or np.any(alts < 0):
        raise InputError("altitudes must be finite and non-negative")

    keep = np.isfinite(vals)   # sentinel exclusion
    alts, vals = alts[keep], vals[keep]
    if alts.size == 0:
        raise InsufficientDataError(f"{band}/{metric}: all samples were sentinels")

    ks = np.floor(alts / delta_h).astype(int)
    bins = []
    for k in np.unique(ks):
        sel = vals[ks == k]
        if sel.size < min_count:
            continue
        bins.append(AltitudeBin(
            center=(k + 0.5) * delta_h,
            mean=float(sel.mean()),
            std=float(sel.std(ddof=0)),
            count=int(sel.size),
        ))
    if not bins:
        raise InsufficientDataError(
            f"{band}/{metric}: no altitude bin reached min_count={min_count}"
        )
    return BinnedMetricSeries(band=band, metric=metric, delta_h=delta_h, bins=tuple(bins))


def write_binned_csv(path: str | Path, series_list: list[BinnedMetricSeries]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band", "metric", "center_m", "mean", "std", "count"])
        for s in series_list:
            for b in s.bins:
                writer.writerow([s.band, s.metric, str(float(b.center)),
                                 str(float(b.mean)), str(float(b.std)), b.count])


def read_binned_csv(path: str | Path, delta_h: float | None = None) -> list[BinnedMetricSeries]:
    """Read binned series grouped by (band, metric), preserving file order.

    delta_h is not part of the schema; pass it (the bin stage records it in
    its metadata) or let it default to the smallest center spacing per series.
    """
    groups: dict[tuple[str, str], list[AltitudeBin]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"band", "metric", "center_m", "mean", "std", "count"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise InputError(f"{path}: expected columns {sorted(expected)}")
        for row in reader:
            try:
                key = (row["band"], row["metric"])
                groups.setdefault(key, []).append(AltitudeBin(
                    center=float(row["center_m"]), mean=float(row["mean"]),
                    std=float(row["std"]), count=int(row["count"]),
                ))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}: bad row {row!r}: {exc}") from exc
    if not groups:
        raise InsufficientDataError(f"{path}: no binned rows")
    series = []
    for (band, metric), bins in groups.items():
        if delta_h is not None:
            dh = delta_h
        elif len(bins) > 1:
            dh = float(min(np.diff([b.center for b in bins])))
        else:
            dh = 2.0 * bins[0].center if bins[0].center > 0 else 1.0
        series.append(BinnedMetricSeries(band=band, metric=metric, delta_h=dh,
                                         bins=tuple(bins)))
    return series
