"""Named frequency allocations and their resolution onto a grid."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import BandRangeError, InputError
from .grid import FrequencyGrid


@dataclass(frozen=True)
class BandRange:
    """A named frequency range, not yet tied to any grid."""

    name: str
    f_low_hz: float
    f_high_hz: float

    def __post_init__(self) -> None:
        if not self.name:
            raise InputError("band name must be non-empty")
        if not (self.f_low_hz < self.f_high_hz):
            raise InputError(
                f"band {self.name!r}: f_low_hz ({self.f_low_hz}) must lie "
                f"below f_high_hz ({self.f_high_hz})"
            )


@dataclass(frozen=True)
class BandDefinition:
    """A band resolved against a concrete grid: a contiguous run of bins."""

    name: str
    f_low: float
    f_high: float
    bin_start: int   # first grid index inside the band
    bin_stop: int    # one past the last
    grid_size: int   # length of the grid this was resolved against

    def __post_init__(self) -> None:
        if not (0 <= self.bin_start < self.bin_stop <= self.grid_size):
            raise InputError(
                f"band {self.name!r}: bin range [{self.bin_start}, {self.bin_stop}) "
                f"invalid for a {self.grid_size}-bin grid"
            )

    @property
    def bins(self) -> range:
        """Grid indices covered by the band, in ascending order."""
        return range(self.bin_start, self.bin_stop)

    @property
    def n_bins(self) -> int:
        return self.bin_stop - self.bin_start


def resolve_band(grid: FrequencyGrid, name: str, f_low: float, f_high: float) -> BandDefinition:
    """Map [f_low, f_high] to the grid bins whose centers fall inside it.

    Both edges are inclusive.  Raises BandRangeError when no bin center
    lands in the range.
    """
    if not (f_low < f_high):
        raise InputError(f"band {name!r}: f_low ({f_low}) must lie below f_high ({f_high})")
    freqs = grid.bin_freqs
    start = int(np.searchsorted(freqs, f_low, side="left"))
    stop = int(np.searchsorted(freqs, f_high, side="right"))
    if start >= stop:
        raise BandRangeError(
            f"band {name!r} [{f_low:g}, {f_high:g}] Hz contains no grid bin center "
            f"(grid spans [{freqs[0]:g}, {freqs[-1]:g}] Hz)"
        )
    return BandDefinition(
        name=name,
        f_low=f_low,
        f_high=f_high,
        bin_start=start,
        bin_stop=stop,
        grid_size=grid.n_bins,
    )


def load_band_registry(path: str | Path) -> list[BandRange]:
    """Read a JSON band registry: a list of {name, f_low_hz, f_high_hz}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise InputError(f"band registry {path} must be a non-empty JSON list")
    bands = []
    for entry in raw:
        try:
            bands.append(
                BandRange(
                    name=str(entry["name"]),
                    f_low_hz=float(entry["f_low_hz"]),
                    f_high_hz=float(entry["f_high_hz"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"band registry {path}: bad entry {entry!r}: {exc}") from exc
    names = [b.name for b in bands]
    if len(set(names)) != len(names):
        raise InputError(f"band registry {path} has duplicate band names")
    return bands


def save_band_registry(path: str | Path, bands: list[BandRange]) -> None:
    payload = [
        {"name": b.name, "f_low_hz": b.f_low_hz, "f_high_hz": b.f_high_hz} for b in bands
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def default_band_registry() -> list[BandRange]:
    """The six survey bands shipped with the package."""
    text = resources.files("adssm").joinpath("data/bands.json").read_text(encoding="utf-8")
    return [
        BandRange(name=e["name"], f_low_hz=float(e["f_low_hz"]), f_high_hz=float(e["f_high_hz"]))
        for e in json.loads(text)
    ]


def band_by_name(bands: list[BandRange], name: str) -> BandRange:
    for b in bands:
        if b.name == name:
            return b
    raise KeyError(f"unknown band {name!r}; have {[b.name for b in bands]}")
