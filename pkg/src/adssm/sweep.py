"""Sweep snapshots (one PSD vector per altitude) and their on-disk form.

A sweep dataset is a long-format CSV with columns
``timestamp_s,altitude_m,bin_index,psd_linear`` plus a JSON grid file
``{f_start_hz, bin_width_hz, n_bins, gain_offset_db}`` stored alongside,
where f_start_hz is the first bin center.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bands import BandDefinition
from .errors import GridMismatchError, InputError
from .grid import FrequencyGrid


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """One assembled sweep snapshot: linear PSD per grid bin at one altitude."""

    timestamp: float          # seconds since campaign start
    altitude: float           # meters above ground
    psd: np.ndarray           # linear power per bin, >= 0
    gain_offset_db: float = 0.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.psd, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("psd must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise InputError("psd values must be finite and non-negative")
        if not np.isfinite(self.altitude) or self.altitude < 0:
            raise InputError(f"altitude must be a finite non-negative value, got {self.altitude}")
        if not np.isfinite(self.timestamp):
            raise InputError(f"timestamp must be finite, got {self.timestamp}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "psd", arr)

    @classmethod
    def empty(cls, grid: FrequencyGrid, timestamp: float, altitude: float,
              gain_offset_db: float = 0.0) -> "SweepRecord":
        """An all-zero record ready for capture-by-capture assembly."""
        return cls(timestamp=timestamp, altitude=altitude,
                   psd=np.zeros(grid.n_bins), gain_offset_db=gain_offset_db)

    def with_psd(self, psd: np.ndarray) -> "SweepRecord":
        return replace(self, psd=psd)


def extract_band_psd(rec: SweepRecord, band: BandDefinition) -> np.ndarray:
    """Linear PSD over the band's bins with the record gain offset applied."""
    if band.grid_size != rec.psd.size:
        raise GridMismatchError(
            f"band {band.name!r} was resolved against a {band.grid_size}-bin grid "
            f"but the record has {rec.psd.size} bins"
        )
    out = rec.psd[band.bin_start:band.bin_stop].astype(float)
    if rec.gain_offset_db != 0.0:
        out = out * 10.0 ** (rec.gain_offset_db / 10.0)
    return out


def write_sweep_dataset(csv_path: str | Path, grid_path: str | Path,
                        grid: FrequencyGrid, records: list[SweepRecord]) -> None:
    """Write records (CSV) plus the grid sidecar (JSON).

    All records must share one gain offset; it is stored once in the grid file.
    """
    if not records:
        raise InputError("cannot write an empty sweep dataset")
    gains = {r.gain_offset_db for r in records}
    if len(gains) != 1:
        raise InputError(f"records carry mixed gain offsets {sorted(gains)}")
    for r in records:
        if r.psd.size != grid.n_bins:
            raise GridMismatchError(
                f"record at t={r.timestamp} has {r.psd.size} bins, grid has {grid.n_bins}"
            )
    with open(grid_path, "w", encoding="utf-8") as fh:
        json.dump(grid.to_dict(gain_offset_db=records[0].gain_offset_db),
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_s", "altitude_m", "bin_index", "psd_linear"])
        for rec in sorted(records, key=lambda r: r.timestamp):
            t, h = str(float(rec.timestamp)), str(float(rec.altitude))
            for i, v in enumerate(rec.psd):
                writer.writerow([t, h, i, str(float(v))])


def read_sweep_dataset(csv_path: str | Path,
                       grid_path: str | Path) -> tuple[FrequencyGrid, list[SweepRecord]]:
    """Read a sweep dataset back into a grid and ordered records."""
    with open(grid_path, encoding="utf-8") as fh:
        gd = json.load(fh)
    try:
        grid = FrequencyGrid.from_dict(gd)
        gain = float(gd["gain_offset_db"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad grid file {grid_path}: {exc}") from exc

    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise InputError(f"sweep dataset {csv_path} has no rows")
    if data.shape[1] != 4:
        raise InputError(f"sweep dataset {csv_path} must have 4 columns, got {data.shape[1]}")

    timestamps = data[:, 0]
    records = []
    for t in np.unique(timestamps):
        rows = data[timestamps == t]
        alts = np.unique(rows[:, 1])
        if alts.size != 1:
            raise InputError(f"snapshot t={t} has inconsistent altitudes {alts}")
        order = np.argsort(rows[:, 2])
        idx = rows[order, 2].astype(int)
        if idx.size != grid.n_bins or not np.array_equal(idx, np.arange(grid.n_bins)):
            raise InputError(
                f"snapshot t={t} does not cover all {grid.n_bins} grid bins exactly once"
            )
        records.append(
            SweepRecord(timestamp=float(t), altitude=float(alts[0]),
                        psd=rows[order, 3], gain_offset_db=gain)
        )
    return grid, records
