"""Systematic sample selection, non-response labelling and Hansen-Hurwitz sub-sampling.

Frame positions are 1-based throughout this module, matching the usual
"random start in 1..k, then every k-th unit" description.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from .errors import DomainError
from .popmodel import DesignParams, Population

LabelingMode = Literal["stratum_tail", "bernoulli"]
Seed = int | np.random.Generator | np.random.SeedSequence | None


def systematic_indices(start: int, design: DesignParams) -> tuple[int, ...]:
    if not 1 <= start <= design.k:
        raise DomainError(f"start {start} outside [1, {design.k}]")
    return tuple(range(start, design.N + 1, design.k))


def enumerate_samples(design: DesignParams) -> list[tuple[int, ...]]:
    """All k possible systematic samples, in order of their start."""
    return [systematic_indices(i, design) for i in range(1, design.k + 1)]


@dataclass(frozen=True, eq=False)
class NonResponseLabeling:
    """Per-unit membership of the non-response stratum."""

    labels: npt.NDArray[np.bool_]

    def __post_init__(self) -> None:
        labels = np.array(self.labels, dtype=bool)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def realized_rate(self) -> float:
        return float(self.labels.mean()) if self.labels.size else 0.0

    @property
    def count(self) -> int:
        return int(self.labels.sum())


def label_nonresponse(
    pop: Population,
    k_rate: float,
    mode: LabelingMode = "stratum_tail",
    seed: Seed = None,
) -> NonResponseLabeling:
    """Mark the non-response stratum.

    ``stratum_tail`` labels the last ``floor(K * N)`` frame positions, which
    keeps the stratum and its mean square fixed. ``bernoulli`` labels each
    unit independently with probability ``K``.
    """
    if not 0.0 <= k_rate <= 1.0:
        raise DomainError(f"non-response rate K={k_rate} outside [0, 1]")
    if mode == "stratum_tail":
        m = int(math.floor(k_rate * pop.N + 1e-9))
        labels = np.zeros(pop.N, dtype=bool)
        if m:
            labels[pop.N - m :] = True
    elif mode == "bernoulli":
        labels = np.random.default_rng(seed).random(pop.N) < k_rate
    else:
        raise DomainError(f"unknown labeling mode {mode!r}")
    return NonResponseLabeling(labels)


def stratum_mean_square(pop: Population, labeling: NonResponseLabeling) -> float:
    """Mean square (divisor count - 1) of y over the non-response stratum; 0 below 2 units."""
    y2 = pop.y[labeling.labels]
    if y2.size < 2:
        return 0.0
    return float(np.var(y2, ddof=1))


def subsample_size(n2: int, l_factor: float) -> int:
    """``max(1, round(n2 / L))`` with halves rounded up; 0 when there are no non-respondents."""
    if n2 == 0:
        return 0
    return max(1, min(n2, int(math.floor(n2 / l_factor + 0.5))))


@dataclass(frozen=True)
class SampleRealization:
    start: int
    unit_indices: tuple[int, ...]
    responders: tuple[int, ...]
    nonresponders: tuple[int, ...]
    subsample: tuple[int, ...]
    y_resp_mean: float
    y_sub_mean: float
    x_mean: float
    y_obs: tuple[float, ...] = ()
    x_obs: tuple[float, ...] = ()

    @property
    def n(self) -> int:
        return len(self.unit_indices)

    @property
    def n1(self) -> int:
        return len(self.responders)

    @property
    def n2(self) -> int:
        return len(self.nonresponders)

    @property
    def h2(self) -> int:
        return len(self.subsample)

    @property
    def realized_l(self) -> float:
        """``n2 / h2``, or NaN when nobody failed to respond."""
        return self.n2 / self.h2 if self.h2 else math.nan


def realize(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    start: int,
    subsample: tuple[int, ...],
) -> SampleRealization:
    """Build a realization from an explicit start and sub-sample (used for enumeration)."""
    units = systematic_indices(start, design)
    labels = labeling.labels
    responders = tuple(p for p in units if not labels[p - 1])
    nonresponders = tuple(p for p in units if labels[p - 1])
    if not set(subsample) <= set(nonresponders):
        raise DomainError("sub-sample must be drawn from the non-respondents")
    if nonresponders and not subsample:
        raise DomainError("non-respondents present but the sub-sample is empty")

    def mean_y(positions: tuple[int, ...]) -> float:
        if not positions:
            return math.nan
        return math.fsum(pop.y[p - 1] for p in positions) / len(positions)

    observed = responders + subsample
    return SampleRealization(
        start=start,
        unit_indices=units,
        responders=responders,
        nonresponders=nonresponders,
        subsample=subsample,
        y_resp_mean=mean_y(responders),
        y_sub_mean=mean_y(subsample),
        x_mean=math.fsum(pop.x[p - 1] for p in units) / len(units),
        y_obs=tuple(float(pop.y[p - 1]) for p in observed),
        x_obs=tuple(float(pop.x[p - 1]) for p in observed),
    )


def draw_realization(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    l_factor: float,
    seed: Seed = None,
) -> SampleRealization:
    """Draw a random start, split the sample by response, and sub-sample the non-respondents."""
    if l_factor < 1.0:
        raise DomainError(f"sub-sampling factor L={l_factor} must be >= 1")
    if labeling.labels.size != pop.N:
        raise DomainError("labeling does not match the population size")
    rng = np.random.default_rng(seed)
    start = int(rng.integers(1, design.k + 1))
    units = systematic_indices(start, design)
    nonresp = [p for p in units if labeling.labels[p - 1]]
    h2 = subsample_size(len(nonresp), l_factor)
    picked = rng.choice(len(nonresp), size=h2, replace=False) if h2 else []
    subsample = tuple(sorted(nonresp[i] for i in picked))
    return realize(pop, design, labeling, start, subsample)
