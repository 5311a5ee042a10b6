"""Point estimators of the population mean evaluated on a realized sample."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateError, DomainError, UsageError
from .popmodel import PopulationSummary
from .sampling import SampleRealization
from .theory import (
    NonResponseSpec,
    Variant,
    optimum_gamma,
    optimum_t1,
    optimum_t2,
    population_slope,
)

REQUIRED: dict[str, tuple[str, ...]] = {
    "hh": (),
    "lr": ("b",),
    "t1": ("w11", "w12"),
    "t2": ("w21", "w22", "alpha", "delta"),
    "t3": ("gamma", "b"),
}

SAMPLE_SLOPE = "sample"


@dataclass(frozen=True)
class EstimatorSpec:
    """One estimator with its constants.

    ``b`` may be the string ``"sample"`` to use the slope fitted on the
    observed (respondent plus sub-sampled) units of each realization.
    """

    variant: Variant
    constants: Mapping[str, float | str] = field(default_factory=dict)
    xbar_pop: float = math.nan
    name: str = ""

    def __post_init__(self) -> None:
        if self.variant not in REQUIRED:
            raise UsageError(f"unknown estimator {self.variant!r}")
        missing = [c for c in REQUIRED[self.variant] if c not in self.constants]
        if missing:
            raise UsageError(f"{self.variant}: missing constant(s) {', '.join(missing)}")
        for key in REQUIRED[self.variant]:
            value = self.constants[key]
            if key == "b" and value == SAMPLE_SLOPE:
                continue
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise UsageError(f"{self.variant}: constant {key}={value!r} is not a finite real")
        if self.variant == "t2" and not 0.0 <= float(self.constants["alpha"]) <= 1.0:
            raise UsageError("t2: alpha must lie in [0, 1]")
        if self.variant != "hh" and not math.isfinite(self.xbar_pop):
            raise UsageError(f"{self.variant}: the population mean of x is required")
        object.__setattr__(self, "constants", dict(self.constants))
        if not self.name:
            object.__setattr__(self, "name", self.variant)

    def get(self, key: str) -> float:
        return float(self.constants[key])


def hh_mean(r: SampleRealization) -> float:
    """``(n1 * ybar_n1 + n2 * ybar_h2) / n``."""
    if r.n2 == 0:
        return r.y_resp_mean
    if r.h2 == 0:
        raise DomainError("non-respondents present but the sub-sample is empty")
    if r.n1 == 0:
        return r.y_sub_mean
    return (r.n1 * r.y_resp_mean + r.n2 * r.y_sub_mean) / r.n


def sample_slope(r: SampleRealization) -> float:
    """Least-squares slope of y on x over the observed units."""
    x = np.asarray(r.x_obs)
    y = np.asarray(r.y_obs)
    if x.size < 2:
        raise DegenerateError("sample slope needs at least two observed units")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise DegenerateError("sample slope undefined: observed x values are constant")
    return float(dx @ (y - y.mean())) / sxx


def _slope(spec: EstimatorSpec, r: SampleRealization) -> float:
    b = spec.constants["b"]
    return sample_slope(r) if b == SAMPLE_SLOPE else float(b)


def _regression(gamma: float, ybar: float, b: float, xbar_pop: float, xbar: float) -> float:
    return gamma * (ybar + b * (xbar_pop - xbar))


def point_estimate(spec: EstimatorSpec, r: SampleRealization) -> float:
    ybar = hh_mean(r)
    X = spec.xbar_pop
    if spec.variant == "hh":
        return ybar
    if spec.variant == "lr":
        return _regression(1.0, ybar, _slope(spec, r), X, r.x_mean)
    if spec.variant == "t3":
        return _regression(spec.get("gamma"), ybar, _slope(spec, r), X, r.x_mean)
    if spec.variant == "t1":
        return spec.get("w11") * ybar + spec.get("w12") * (X - r.x_mean)
    # t2
    alpha, delta = spec.get("alpha"), spec.get("delta")
    linear = spec.get("w21") * ybar + spec.get("w22") * (X - r.x_mean)
    if delta == 0:
        return linear
    den = alpha * X + (1.0 - alpha) * r.x_mean
    if not den > 0:
        raise DegenerateError(f"t2: alpha*Xbar + (1-alpha)*xbar* = {den} is not positive")
    return linear * (X / den) ** delta


def optimum_specs(
    s: PopulationSummary,
    nr: NonResponseSpec,
    alpha: float = 0.0,
    delta: float = 1.0,
    slope: float | str | None = None,
) -> list[EstimatorSpec]:
    """hh, lr, t1, t2 and t3 with their first-order optimum constants."""
    beta = population_slope(s)
    b: float | str = beta if slope is None else slope
    w11, w12 = optimum_t1(s, nr)
    w21, w22 = optimum_t2(s, nr, alpha, delta)
    gamma = optimum_gamma(s, nr, beta)
    X = s.xbar
    return [
        EstimatorSpec("hh", {}, X),
        EstimatorSpec("lr", {"b": b}, X),
        EstimatorSpec("t1", {"w11": w11, "w12": w12}, X),
        EstimatorSpec("t2", {"w21": w21, "w22": w22, "alpha": alpha, "delta": delta}, X),
        EstimatorSpec("t3", {"gamma": gamma, "b": b}, X),
    ]
