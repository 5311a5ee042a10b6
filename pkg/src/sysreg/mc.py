"""Monte Carlo check of the closed-form bias and MSE against repeated sampling."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .errors import UsageError
from .estimators import SAMPLE_SLOPE, EstimatorSpec, optimum_specs, point_estimate
from .popmodel import DesignParams, Population, PopulationSummary, calibrate_intraclass, summarize
from .sampling import LabelingMode, NonResponseLabeling, draw_realization, stratum_mean_square
from .theory import (
    NonResponseSpec,
    TheoryResult,
    population_slope,
    theory_hh,
    theory_t1,
    theory_t2,
    theory_t3,
)

Convention = Literal["enumeration", "theta"]

Z_BAND = 3.0
REL_BAND = 0.05
L_WARN = 0.1


@dataclass(frozen=True)
class McConfig:
    """Simulation settings.

    ``estimators=None`` simulates hh, lr, t1, t2 and t3 at the first-order
    optimum constants implied by the population and labeling. With
    ``convention="enumeration"`` the theory side uses intraclass correlations
    calibrated to the exact design variance of the systematic mean (see
    :func:`sysreg.popmodel.calibrate_intraclass`); ``"theta"`` uses them as
    summarised.
    """

    replications: int
    seed: int = 0
    l_factor: float = 2.0
    labeling_mode: LabelingMode = "stratum_tail"
    estimators: Sequence[EstimatorSpec] | None = None
    alpha: float = 0.0
    delta: float = 1.0
    convention: Convention = "enumeration"
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise UsageError("replications must be at least 1")
        if self.l_factor < 1.0:
            raise UsageError("L must be >= 1")
        if self.convention not in ("enumeration", "theta"):
            raise UsageError(f"unknown variance convention {self.convention!r}")


def _same(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@dataclass(frozen=True)
class EstimatorReport:
    name: str
    variant: str
    empirical_bias: float
    empirical_mse: float
    mse_se: float
    theory_bias: float
    theory_mse: float
    z_score: float
    rel_band: float

    @property
    def rel_diff(self) -> float:
        if self.theory_mse == 0:
            return 0.0 if self.empirical_mse == 0 else math.inf
        return (self.empirical_mse - self.theory_mse) / self.theory_mse

    @property
    def within_band(self) -> bool:
        """Empirical MSE within ``max(3 SE, rel_band * theory)`` of the theory."""
        if _same(self.empirical_mse, self.theory_mse):
            return True
        gap = abs(self.empirical_mse - self.theory_mse)
        return gap <= max(Z_BAND * self.mse_se, self.rel_band * abs(self.theory_mse))


@dataclass(frozen=True)
class McReport:
    rows: dict[str, EstimatorReport]
    summary: PopulationSummary
    nonresponse: NonResponseSpec
    replications: int
    mean_realized_l: float
    warnings: list[str] = field(default_factory=list)


def theory_for(spec: EstimatorSpec, s: PopulationSummary, nr: NonResponseSpec) -> TheoryResult:
    """Closed-form bias and MSE of ``spec`` at its own constants."""
    c = spec.constants

    def slope() -> float:
        b = c["b"]
        return population_slope(s) if b == SAMPLE_SLOPE else float(b)

    if spec.variant == "hh":
        return theory_hh(s, nr)
    if spec.variant == "lr":
        return theory_t3(s, nr, b=slope(), gamma=1.0)
    if spec.variant == "t1":
        return theory_t1(s, nr, (spec.get("w11"), spec.get("w12")))
    if spec.variant == "t2":
        return theory_t2(s, nr, spec.get("alpha"), spec.get("delta"), (spec.get("w21"), spec.get("w22")))
    return theory_t3(s, nr, b=slope(), gamma=spec.get("gamma"))


def _replicate(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    l_factor: float,
    specs: Sequence[EstimatorSpec],
    seed: int,
    indices: range,
) -> tuple[np.ndarray, np.ndarray]:
    est = np.empty((len(indices), len(specs)))
    realized_l = np.empty(len(indices))
    for row, i in enumerate(indices):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        r = draw_realization(pop, design, labeling, l_factor, np.random.default_rng(ss))
        realized_l[row] = r.realized_l
        for col, spec in enumerate(specs):
            est[row, col] = point_estimate(spec, r)
    return est, realized_l


def _chunks(total: int, parts: int) -> list[range]:
    step = math.ceil(total / parts)
    return [range(a, min(a + step, total)) for a in range(0, total, step)]


def theory_inputs(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    l_factor: float,
    convention: Convention = "enumeration",
) -> tuple[PopulationSummary, NonResponseSpec]:
    """Population summary and non-response parameters derived from the data and labeling."""
    s = summarize(pop, design)
    if convention == "enumeration":
        s = calibrate_intraclass(s, pop, design)
    nr = NonResponseSpec(labeling.realized_rate, l_factor, stratum_mean_square(pop, labeling))
    return s, nr


def run_mc(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    cfg: McConfig,
) -> McReport:
    s, nr = theory_inputs(pop, design, labeling, cfg.l_factor, cfg.convention)
    specs = list(cfg.estimators) if cfg.estimators is not None else optimum_specs(s, nr, cfg.alpha, cfg.delta)
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise UsageError(f"estimator names must be unique, got {names}")

    R = cfg.replications
    if cfg.n_jobs > 1 and R > 1:
        parts = _chunks(R, cfg.n_jobs)
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            futures = [
                pool.submit(_replicate, pop, design, labeling, cfg.l_factor, specs, cfg.seed, part)
                for part in parts
            ]
            results = [f.result() for f in futures]
        est = np.concatenate([r[0] for r in results])
        realized_l = np.concatenate([r[1] for r in results])
    else:
        est, realized_l = _replicate(pop, design, labeling, cfg.l_factor, specs, cfg.seed, range(R))

    target = s.ybar
    rows = {}
    for col, spec in enumerate(specs):
        err = est[:, col] - target
        sq = err * err
        mse = math.fsum(sq) / R
        se = math.sqrt(math.fsum((sq - mse) ** 2) / (R - 1) / R) if R > 1 else math.nan
        th = theory_for(spec, s, nr)
        if se > 0:
            z = (mse - th.mse) / se
        else:
            z = 0.0 if _same(mse, th.mse) else math.inf
        rows[spec.name] = EstimatorReport(
            name=spec.name,
            variant=spec.variant,
            empirical_bias=math.fsum(err) / R,
            empirical_mse=mse,
            mse_se=se,
            theory_bias=th.bias,
            theory_mse=th.mse,
            z_score=z,
            rel_band=0.0 if spec.variant == "hh" else REL_BAND,
        )

    finite_l = realized_l[np.isfinite(realized_l)]
    mean_l = math.fsum(finite_l) / finite_l.size if finite_l.size else math.nan
    warnings = []
    if finite_l.size and abs(mean_l - cfg.l_factor) / cfg.l_factor > L_WARN:
        warnings.append(
            f"average realized L'={mean_l:.4f} differs from L={cfg.l_factor:g} by more than "
            f"{L_WARN:.0%}; sub-sample sizes are rounded"
        )
    return McReport(rows, s, nr, R, mean_l, warnings)


@dataclass(frozen=True)
class Verdict:
    within: int
    runs: int

    @property
    def label(self) -> str:
        """``"first-order"`` unless the band is missed at two or more seeds."""
        return "violated" if self.runs - self.within >= 2 else "first-order"


def run_mc_seeds(
    pop: Population,
    design: DesignParams,
    labeling: NonResponseLabeling,
    cfg: McConfig,
    seeds: Sequence[int],
) -> tuple[list[McReport], dict[str, Verdict]]:
    """Repeat :func:`run_mc` over several seeds and tally band agreement per estimator."""
    reports = [run_mc(pop, design, labeling, replace(cfg, seed=seed)) for seed in seeds]
    verdicts = {
        name: Verdict(sum(r.rows[name].within_band for r in reports), len(reports))
        for name in reports[0].rows
    }
    return reports, verdicts
