"""Closed-form altitude response curves and their transition heights.

Power and entropy follow an exponential relaxation from a ground value
toward a high-altitude asymptote; sparsity follows a rising logistic.
Transition heights h10/h50/h90 mark where a curve has completed 10/50/90%
of its total ground-to-asymptote change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

STANDARD_FRACTIONS = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class ExpModelParams:
    """x(h) = x_inf - (x_inf - x_zero) * exp(-h / tau)."""

    x_inf: float
    x_zero: float
    tau: float

    def __post_init__(self) -> None:
        for name in ("x_inf", "x_zero", "tau"):
            if not np.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite, got {getattr(self, name)}")
        if self.tau <= 0:
            raise InputError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class LogisticModelParams:
    """s(h) = 1 / (1 + exp(-k * (h - h_s)))."""

    k: float
    h_s: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.k) or not np.isfinite(self.h_s):
            raise InputError(f"k and h_s must be finite, got k={self.k}, h_s={self.h_s}")
        if self.k <= 0:
            raise InputError(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class TransitionHeights:
    """Heights where 10/50/90% of the total change is complete.

    All three are NaN when the transition is undefined (flat curve).
    """

    h10: float
    h50: float
    h90: float

    def __post_init__(self) -> None:
        vals = (self.h10, self.h50, self.h90)
        if all(np.isfinite(v) for v in vals):
            if not (self.h10 <= self.h50 <= self.h90):
                raise InputError(f"transition heights must be ordered, got {vals}")
        elif any(np.isfinite(v) for v in vals):
            raise InputError(f"transition heights must be all finite or all NaN, got {vals}")

    @classmethod
    def undefined(cls) -> "TransitionHeights":
        return cls(float("nan"), float("nan"), float("nan"))

    @property
    def defined(self) -> bool:
        return bool(np.isfinite(self.h10))


def exp_eval(p: ExpModelParams, h):
    """Evaluate the exponential relaxation at altitude(s) h."""
    return p.x_inf - (p.x_inf - p.x_zero) * np.exp(-np.asarray(h, dtype=float) / p.tau)


def exp_ode_residual(p: ExpModelParams, h):
    """Defect of dx/dh = (x_inf - x(h)) / tau at the closed-form solution.

    Zero up to rounding; kept as an explicit consistency probe.
    """
    hh = np.asarray(h, dtype=float)
    deriv = (p.x_inf - p.x_zero) / p.tau * np.exp(-hh / p.tau)
    return deriv - (p.x_inf - exp_eval(p, hh)) / p.tau


def logistic_eval(p: LogisticModelParams, h):
    """Evaluate the logistic activation at altitude(s) h.

    Branches on the sign of the exponent so nothing overflows even for
    |k * (h - h_s)| in the hundreds.
    """
    z = p.k * (np.asarray(h, dtype=float) - p.h_s)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


def _check_fractions(q_list) -> tuple[float, float, float]:
    q = tuple(float(v) for v in q_list)
    if len(q) != 3:
        raise InputError(f"expected three change fractions, got {len(q)}")
    if any(not (0.0 < v < 1.0) for v in q):
        raise InputError(f"change fractions must be in (0, 1), got {q}")
    if not (q[0] < q[1] < q[2]):
        raise InputError(f"change fractions must increase, got {q}")
    return q


def transition_heights_exp(p: ExpModelParams,
                           q_list=STANDARD_FRACTIONS) -> TransitionHeights:
    """h_q = -tau * ln(1 - q); independent of the endpoints.

    A flat curve (x_inf == x_zero) has no transition: returns the
    undefined (all-NaN) result.
    """
    q = _check_fractions(q_list)
    scale = max(abs(p.x_inf), abs(p.x_zero), 1.0)
    if abs(p.x_inf - p.x_zero) <= 1e-12 * scale:
        return TransitionHeights.undefined()
    h = [float(-p.tau * np.log1p(-v)) for v in q]
    return TransitionHeights(h10=h[0], h50=h[1], h90=h[2])


def transition_heights_logistic(p: LogisticModelParams,
                                q_list=STANDARD_FRACTIONS) -> TransitionHeights:
    """Heights where the logistic covers q of its change from s(0) to 1.

    Solves s(h_q) = s(0) + q * (1 - s(0)) in closed form and clips at the
    ground, since the curve is only observed for h >= 0.
    """
    q = _check_fractions(q_list)
    s0 = logistic_eval(p, 0.0)
    heights = []
    for v in q:
        target = s0 + v * (1.0 - s0)
        if target >= 1.0:
            # Curve already saturated at the ground within float precision.
            return TransitionHeights.undefined()
        h = p.h_s - np.log(1.0 / target - 1.0) / p.k
        heights.append(max(float(h), 0.0))
    return TransitionHeights(h10=heights[0], h50=heights[1], h90=heights[2])
