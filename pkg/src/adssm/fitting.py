"""Least-squares fits of the altitude response curves.

All fits minimize the sum of squared residuals against binned metric means
with a derivative-free simplex search (no gradients, deterministic restarts).
Scale parameters (tau, k) are searched in log space so they stay positive.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .binning import BinnedMetricSeries
from .errors import InputError, InsufficientDataError
from .model import (ExpModelParams, LogisticModelParams, STANDARD_FRACTIONS,
                    TransitionHeights, exp_eval, logistic_eval,
                    transition_heights_exp, transition_heights_logistic)

# Simplex move coefficients: reflection, expansion, contraction, shrink.
ALPHA, GAMMA, RHO, SIGMA = 1.0, 2.0, 0.5, 0.5

MODEL_FREE_PARAMS = {"exp": 3, "exp_reduced": 2, "logistic": 2}


@dataclass(frozen=True)
class FitOptions:
    """Search budget and termination settings, echoed into every report.

    x_tol and f_tol are relative spreads of the simplex and its values;
    both must be met (or max_iters exhausted) to stop.  Restarts jitter
    every start coordinate by up to +-20%, deterministically from seed.
    """

    max_iters: int = 2000
    x_tol: float = 1e-8
    f_tol: float = 1e-10
    restarts: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise InputError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise InputError("x_tol and f_tol must be positive")
        if self.restarts < 1:
            raise InputError(f"restarts must be >= 1, got {self.restarts}")


def _nm_single(objective, x0: np.ndarray, opts: FitOptions) -> tuple[np.ndarray, float]:
    n = x0.size
    nonzdelt, zdelt = 0.05, 0.00025
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        if simplex[i + 1, i] != 0.0:
            simplex[i + 1, i] *= 1.0 + nonzdelt
        else:
            simplex[i + 1, i] = zdelt
    fvals = np.array([objective(v) for v in simplex])

    for _ in range(opts.max_iters):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        f_spread = fvals[-1] - fvals[0]
        x_spread = float(np.max(np.abs(simplex[1:] - simplex[0])))
        x_scale = max(1.0, float(np.max(np.abs(simplex[0]))))
        if (f_spread <= opts.f_tol * max(1.0, abs(fvals[0]))
                and x_spread <= opts.x_tol * x_scale):
            break

        centroid = simplex[:-1].mean(axis=0)
        xr = centroid + ALPHA * (centroid - simplex[-1])
        fr = objective(xr)
        if fr < fvals[0]:
            xe = centroid + GAMMA * (centroid - simplex[-1])
            fe = objective(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + RHO * (centroid - simplex[-1])
            else:
                xc = centroid - RHO * (centroid - simplex[-1])
            fc = objective(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                simplex[1:] = simplex[0] + SIGMA * (simplex[1:] - simplex[0])
                fvals[1:] = [objective(v) for v in simplex[1:]]

    best = int(np.argmin(fvals))
    return simplex[best].copy(), float(fvals[best])


def nelder_mead(objective, x0, opts: FitOptions = FitOptions()) -> tuple[np.ndarray, float]:
    """Minimize a scalar objective from x0, best of `restarts` starts.

    The first start is x0 itself; later starts multiply each coordinate by
    a seeded draw in [0.8, 1.2].  Returns (x_best, f_best); f_best never
    exceeds the objective at x0.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1 or x0.size == 0:
        raise InputError(f"x0 must be a non-empty 1-D vector, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise InputError("x0 must be finite")
    f0 = float(objective(x0))
    if not np.isfinite(f0):
        raise InputError(f"objective is not finite at the start point ({f0})")

    rng = np.random.default_rng(opts.seed)
    best_x, best_f = x0, f0
    for r in range(opts.restarts):
        if r == 0:
            start = x0
        else:
            start = x0 * (1.0 + 0.2 * rng.uniform(-1.0, 1.0, size=x0.size))
            if not np.isfinite(float(objective(start))):
                continue
        x, f = _nm_single(objective, start, opts)
        if f < best_f:
            best_x, best_f = x, f
    return best_x, best_f


@dataclass(frozen=True)
class FitReport:
    """Fit outcome for one (band, metric) series."""

    band: str
    metric: str
    model: str   # "exp" | "exp_reduced" | "logistic"
    params: ExpModelParams | LogisticModelParams
    rmse: float
    r2: float | None
    transitions: TransitionHeights
    n_bins: int
    options_echo: FitOptions
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.model not in MODEL_FREE_PARAMS:
            raise InputError(f"unknown model {self.model!r}")
        if self.rmse < 0 or not np.isfinite(self.rmse):
            raise InputError(f"rmse must be finite and non-negative, got {self.rmse}")
        if self.r2 is not None and self.r2 > 1.0 + 1e-12:
            raise InputError(f"r2 cannot exceed 1, got {self.r2}")
        if self.n_bins < MODEL_FREE_PARAMS[self.model] + 1:
            raise InputError(
                f"{self.model} fit needs at least {MODEL_FREE_PARAMS[self.model] + 1} "
                f"bins, got {self.n_bins}"
            )

    def predict(self, h):
        if self.model == "logistic":
            return logistic_eval(self.params, h)
        return exp_eval(self.params, h)

    def to_dict(self) -> dict:
        def _clean(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {
            "band": self.band,
            "metric": self.metric,
            "model": self.model,
            "params": asdict(self.params),
            "rmse": float(self.rmse),
            "r2": _clean(self.r2),
            "h10_m": _clean(self.transitions.h10),
            "h50_m": _clean(self.transitions.h50),
            "h90_m": _clean(self.transitions.h90),
            "n_bins": int(self.n_bins),
            "options": asdict(self.options_echo),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        model = d["model"]
        params_cls = LogisticModelParams if model == "logistic" else ExpModelParams
        heights = [d.get(k) for k in ("h10_m", "h50_m", "h90_m")]
        trans = (TransitionHeights(*[float(v) for v in heights])
                 if all(v is not None for v in heights) else TransitionHeights.undefined())
        return cls(
            band=d["band"], metric=d["metric"], model=model,
            params=params_cls(**d["params"]),
            rmse=float(d["rmse"]),
            r2=None if d.get("r2") is None else float(d["r2"]),
            transitions=trans,
            n_bins=int(d["n_bins"]),
            options_echo=FitOptions(**d["options"]),
            flags=tuple(d.get("flags", ())),
        )


def write_fit_report(path: str | Path, report: FitReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_fit_report(path: str | Path) -> FitReport:
    with open(path, encoding="utf-8") as fh:
        return FitReport.from_dict(json.load(fh))


def goodness(series: BinnedMetricSeries, model_eval) -> tuple[float, float | None]:
    """RMSE and R^2 of a fitted curve against the bin means.

    R^2 is taken about the series mean and may go negative for a fit worse
    than that mean; it is None (null in reports) for a zero-variance series.
    """
    if series.n_bins < 2:
        raise InsufficientDataError(
            f"{series.band}/{series.metric}: goodness needs >= 2 bins"
        )
    y = series.means
    pred = np.asarray(model_eval(series.centers), dtype=float)
    resid = y - pred
    rmse = float(np.sqrt(np.mean(resid ** 2)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return rmse, None
    return rmse, 1.0 - float(np.sum(resid ** 2)) / ss_tot


def _exp_objective(h: np.ndarray, y: np.ndarray):
    def objective(theta):
        x_inf, x_zero, log_tau = theta
        tau = np.exp(min(max(log_tau, -700.0), 700.0))
        with np.errstate(over="ignore", under="ignore"):
            resid = y - (x_inf - (x_inf - x_zero) * np.exp(-h / tau))
        return float(np.dot(resid, resid))
    return objective


def fit_exp(series: BinnedMetricSeries, opts: FitOptions = FitOptions(),
            q_list=STANDARD_FRACTIONS) -> FitReport:
    """Fit the three-parameter exponential relaxation to a binned series.

    Starts from the data itself: ground value from the first bin, asymptote
    from the last, tau at a third of the altitude span.  A flat series has
    no identifiable tau and is delegated to the reduced fit.
    """
    if series.n_bins < 4:
        raise InsufficientDataError(
            f"{series.band}/{series.metric}: exp fit needs >= 4 bins, got {series.n_bins}"
        )
    y = series.means
    value_range = float(y.max() - y.min())
    if value_range <= opts.f_tol * abs(float(y.mean())):
        reduced = fit_exp_reduced(series, tau_fixed=None, opts=opts, q_list=q_list)
        return FitReport(
            band=reduced.band, metric=reduced.metric, model=reduced.model,
            params=reduced.params, rmse=reduced.rmse, r2=reduced.r2,
            transitions=reduced.transitions, n_bins=reduced.n_bins,
            options_echo=opts, flags=reduced.flags + ("degenerate_flat_series",),
        )

    h = series.centers
    tau0 = series.span / 3.0
    theta0 = np.array([y[-1], y[0], np.log(tau0)])
    best, _ = nelder_mead(_exp_objective(h, y), theta0, opts)
    params = ExpModelParams(
        x_inf=float(best[0]), x_zero=float(best[1]),
        tau=float(np.exp(min(max(best[2], -700.0), 700.0))),
    )
    rmse, r2 = goodness(series, lambda hh: exp_eval(params, hh))
    return FitReport(
        band=series.band, metric=series.metric, model="exp", params=params,
        rmse=rmse, r2=r2, transitions=transition_heights_exp(params, q_list),
        n_bins=series.n_bins, options_echo=opts,
    )


def fit_exp_reduced(series: BinnedMetricSeries, tau_fixed: float | None = None,
                    opts: FitOptions = FitOptions(),
                    q_list=STANDARD_FRACTIONS) -> FitReport:
    """Two-parameter exponential fit with tau held fixed.

    With tau known the model is linear in (x_inf, x_zero) on the basis
    {1 - exp(-h/tau), exp(-h/tau)}, so the solution is a closed-form
    least-squares solve; no search is involved.
    """
    if series.n_bins < 3:
        raise InsufficientDataError(
            f"{series.band}/{series.metric}: reduced exp fit needs >= 3 bins, "
            f"got {series.n_bins}"
        )
    if tau_fixed is None:
        tau_fixed = series.span / 3.0
    if not np.isfinite(tau_fixed) or tau_fixed <= 0:
        raise InputError(f"tau_fixed must be positive, got {tau_fixed}")

    h, y = series.centers, series.means
    e = np.exp(-h / tau_fixed)
    design = np.column_stack([1.0 - e, e])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise InsufficientDataError(
            f"{series.band}/{series.metric}: reduced fit design is rank-deficient"
        )
    params = ExpModelParams(x_inf=float(coef[0]), x_zero=float(coef[1]), tau=float(tau_fixed))
    rmse, r2 = goodness(series, lambda hh: exp_eval(params, hh))
    return FitReport(
        band=series.band, metric=series.metric, model="exp_reduced", params=params,
        rmse=rmse, r2=r2, transitions=transition_heights_exp(params, q_list),
        n_bins=series.n_bins, options_echo=opts,
    )


def _logistic_objective(h: np.ndarray, y: np.ndarray):
    def objective(theta):
        log_k, h_s = theta
        k = np.exp(min(max(log_k, -700.0), 700.0))
        z = k * (h - h_s)
        s = np.empty_like(z)
        pos = z >= 0
        with np.errstate(over="ignore", under="ignore"):
            s[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
            ez = np.exp(z[~pos])
            s[~pos] = ez / (1.0 + ez)
        resid = y - s
        return float(np.dot(resid, resid))
    return objective


def _first_crossing(h: np.ndarray, y: np.ndarray, level: float) -> float | None:
    above = np.nonzero(y >= level)[0]
    if above.size == 0:
        return None
    return float(h[above[0]])


def fit_logistic(series: BinnedMetricSeries, opts: FitOptions = FitOptions(),
                 q_list=STANDARD_FRACTIONS) -> FitReport:
    """Fit the rising logistic to a binned sparsity series.

    Midpoint starts at the first crossing of (min+max)/2 (median altitude
    when the series starts above it) and the steepness at 4 over the
    empirical 10-90 rise span, floored at 1e-3 per meter.
    """
    if series.n_bins < 3:
        raise InsufficientDataError(
            f"{series.band}/{series.metric}: logistic fit needs >= 3 bins, "
            f"got {series.n_bins}"
        )
    h, y = series.centers, series.means
    if np.any(y < 0.0) or np.any(y > 1.0):
        raise InputError(
            f"{series.band}/{series.metric}: logistic fit needs values in [0, 1], "
            f"got [{y.min():g}, {y.max():g}]"
        )
    ymin, ymax = float(y.min()), float(y.max())
    flags: tuple[str, ...] = ()

    if ymax - ymin == 0.0:
        # Constant series: no crossing, nothing identifiable to search for.
        flags = ("degenerate_no_crossing",)
        params = LogisticModelParams(k=1e-3, h_s=float(np.median(h)))
    else:
        mid = 0.5 * (ymin + ymax)
        if y[0] >= mid:
            h_s0 = float(np.median(h))
            flags = ("midpoint_init_fallback",)
        else:
            h_s0 = _first_crossing(h, y, mid)
        h_lo = _first_crossing(h, y, ymin + 0.1 * (ymax - ymin))
        h_hi = _first_crossing(h, y, ymin + 0.9 * (ymax - ymin))
        rise = (h_hi - h_lo) if (h_lo is not None and h_hi is not None) else 0.0
        k0 = max(4.0 / rise if rise > 0 else 4.0 / max(series.span, 1.0), 1e-3)
        theta0 = np.array([np.log(k0), h_s0])
        best, _ = nelder_mead(_logistic_objective(h, y), theta0, opts)
        params = LogisticModelParams(
            k=float(np.exp(min(max(best[0], -700.0), 700.0))), h_s=float(best[1]),
        )

    rmse, r2 = goodness(series, lambda hh: logistic_eval(params, hh))
    return FitReport(
        band=series.band, metric=series.metric, model="logistic", params=params,
        rmse=rmse, r2=r2, transitions=transition_heights_logistic(params, q_list),
        n_bins=series.n_bins, options_echo=opts, flags=flags,
    )


TABLE_COLUMNS = ("band", "p_inf_db", "p0_db", "h_inf_bits", "h0_bits", "s_inf", "s0",
                 "rmse_p_db", "rmse_h_bits", "rmse_s", "r2_p")


def render_summary_table(reports: list[FitReport],
                         band_bin_counts: dict[str, int] | None = None) -> str:
    """Render per-band fit summaries as a fixed-schema CSV string.

    One row per band: power asymptote/ground value, entropy asymptote and
    ground value in bits (needs the band bin count; falls back to the
    normalized scale without it), sparsity limits, per-metric RMSE and the
    power R^2.  Values are formatted to two decimals, missing cells blank.
    """
    def fmt(v) -> str:
        if v is None or not np.isfinite(v):
            return ""
        return f"{v:.2f}"

    rows = {}
    for rep in reports:
        cells = rows.setdefault(rep.band, {c: "" for c in TABLE_COLUMNS[1:]})
        if rep.metric == "power" and rep.model in ("exp", "exp_reduced"):
            cells["p_inf_db"] = fmt(rep.params.x_inf)
            cells["p0_db"] = fmt(rep.params.x_zero)
            cells["rmse_p_db"] = fmt(rep.rmse)
            cells["r2_p"] = fmt(rep.r2)
        elif rep.metric == "entropy_norm" and rep.model in ("exp", "exp_reduced"):
            scale = 1.0
            if band_bin_counts and band_bin_counts.get(rep.band, 0) >= 2:
                scale = float(np.log2(band_bin_counts[rep.band]))
            cells["h_inf_bits"] = fmt(rep.params.x_inf * scale)
            cells["h0_bits"] = fmt(rep.params.x_zero * scale)
            cells["rmse_h_bits"] = fmt(rep.rmse * scale)
        elif rep.metric == "sparsity" and rep.model == "logistic":
            cells["s_inf"] = fmt(1.0)
            cells["s0"] = fmt(logistic_eval(rep.params, 0.0))
            cells["rmse_s"] = fmt(rep.rmse)

    lines = [",".join(TABLE_COLUMNS)]
    for band, cells in rows.items():
        lines.append(",".join([band] + [cells[c] for c in TABLE_COLUMNS[1:]]))
    return "\n".join(lines) + "\n"
