"""Slopes of duration against n and the ratios built from them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvariantViolation


@dataclass(frozen=True)
class SlopeMetrics:
    slopes: dict            # m -> Delta_m
    delta_inf: float
    pi_cisc: float
    eta: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"slopes": {str(k): v for k, v in self.slopes.items()},
                "delta_inf": self.delta_inf, "pi_cisc": self.pi_cisc,
                "eta": {str(k): v for k, v in self.eta.items()},
                "xi": {str(k): v for k, v in self.xi.items()}}


def fit_slope(points) -> float:
    """Least-squares slope of tau against n; points is a map or (n, tau) pairs."""
    pts = list(points.items()) if isinstance(points, dict) else list(points)
    if len(pts) < 2:
        raise InvariantViolation("a slope needs at least two points")
    x = np.array([float(p[0]) for p in pts])
    y = np.array([float(p[1]) for p in pts])
    if np.ptp(x) == 0:
        raise InvariantViolation("all points share one n")
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def metrics_from_slopes(slopes: dict, delta_inf: float, base=2) -> SlopeMetrics:
    if delta_inf <= 0:
        raise InvariantViolation("the extrapolated slope must be positive")
    if base not in slopes:
        raise InvariantViolation(f"no slope for the reference size {base!r}")
    d2 = slopes[base]
    pi = d2 / delta_inf
    eta = {m: delta_inf / d for m, d in slopes.items()}
    xi = {m: d2 / d for m, d in slopes.items()}
    return SlopeMetrics(dict(slopes), float(delta_inf), pi, eta, xi)


def slope_metrics(durations: dict, delta_inf: float, base=2) -> SlopeMetrics:
    """durations maps m -> {n: tau}; each family gets its own regression line."""
    return metrics_from_slopes({m: fit_slope(pts) for m, pts in durations.items()},
                               delta_inf, base)


# Reported slopes, rescaled so that the extrapolated slope is 1.  Only the
# ratios are published, so each family is rebuilt from (pi, xi) or (pi, eta).
REPORTED_SLOPES = {
    "swap": {2: 2.16, 8: 2.16 / 1.88},
    "qft": {2: 2.27, "5/10": 1 / 0.53},
    "cnnot": {2: 13.6, "8/8/1": 1 / 0.18},
}


def reported_metrics(family: str) -> SlopeMetrics:
    try:
        slopes = REPORTED_SLOPES[family]
    except KeyError:
        raise InvariantViolation(f"no reported slopes for {family!r}") from None
    return metrics_from_slopes(slopes, 1.0)
