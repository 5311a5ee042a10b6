"""First-order bias, MSE and optimum constants for the estimator class.

All quantities are population-level. ``C_0`` and ``C_1`` are the effective
coefficients of variation ``C_Y * sqrt(1 + (n-1) rho_Y)`` and
``C_X * sqrt(1 + (n-1) rho_X)``, so that ``E(e0^2) = theta C_0^2 + nr / Ybar^2``,
``E(e1^2) = theta C_1^2`` and ``E(e0 e1) = theta rho C_0 C_1`` with
``nr = (L-1)/n * K * S_Y2^2`` the Hansen-Hurwitz inflation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Mapping, NamedTuple, Sequence

from .errors import DegenerateError, DomainError
from .popmodel import PopulationSummary

Variant = Literal["hh", "lr", "t1", "t2", "t3"]
VARIANTS: tuple[Variant, ...] = ("hh", "lr", "t1", "t2", "t3")


@dataclass(frozen=True)
class NonResponseSpec:
    """Non-response rate ``K``, sub-sampling factor ``L`` and stratum mean square."""

    k_rate: float
    l_factor: float
    s2_y2: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.k_rate <= 1.0:
            raise DomainError(f"non-response rate K={self.k_rate} outside [0, 1]")
        if self.l_factor < 1.0:
            raise DomainError(f"sub-sampling factor L={self.l_factor} must be >= 1")
        if self.s2_y2 < 0:
            raise DomainError("S_Y2^2 must be non-negative")

    def inflation(self, n: int) -> float:
        """``(L-1)/n * K * S_Y2^2``, the variance added by sub-sampling non-respondents."""
        if self.k_rate == 0.0 or self.l_factor == 1.0:
            return 0.0
        return (self.l_factor - 1.0) / n * self.k_rate * self.s2_y2


@dataclass(frozen=True)
class EffectiveMoments:
    c0: float
    c1: float
    v0: float
    v1: float
    c01: float
    nr: float
    rho_star: float
    k1: float
    theta: float
    rho: float


@dataclass(frozen=True)
class TheoryResult:
    estimator: Variant
    bias: float
    mse: float
    constants: dict[str, float] = field(default_factory=dict)
    pre_vs_hh: float = math.nan


class ACoeffs(NamedTuple):
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float


def effective_moments(s: PopulationSummary, nr: NonResponseSpec) -> EffectiveMoments:
    theta = s.theta
    c0 = s.c_y * math.sqrt(s.factor_y)
    c1 = s.c_x * math.sqrt(s.factor_x)
    inflation = nr.inflation(s.n)
    if s.factor_x > 0:
        rho_star = math.sqrt(s.factor_y / s.factor_x)
    else:
        rho_star = math.inf
    k1 = s.rho * s.c_y / s.c_x if s.c_x > 0 else math.nan
    return EffectiveMoments(
        c0=c0,
        c1=c1,
        v0=theta * c0 * c0 + inflation / s.ybar**2,
        v1=theta * c1 * c1,
        c01=theta * s.rho * c0 * c1,
        nr=inflation,
        rho_star=rho_star,
        k1=k1,
        theta=theta,
        rho=s.rho,
    )


def var_hh(s: PopulationSummary, nr: NonResponseSpec) -> float:
    """Variance of the Hansen-Hurwitz mean under systematic sampling."""
    return s.theta * s.factor_y * s.s2_y + nr.inflation(s.n)


def var_xstar(s: PopulationSummary) -> float:
    return s.theta * s.factor_x * s.s2_x


def pre(candidate_mse: float, s: PopulationSummary, nr: NonResponseSpec) -> float:
    """Percentage relative efficiency against the Hansen-Hurwitz mean."""
    if not candidate_mse > 0:
        raise DegenerateError(f"PRE needs a positive MSE, got {candidate_mse}")
    return 100.0 * var_hh(s, nr) / candidate_mse


def _pre_or_nan(mse: float, s: PopulationSummary, nr: NonResponseSpec) -> float:
    return pre(mse, s, nr) if mse > 0 else math.nan


def _require_auxiliary(m: EffectiveMoments) -> None:
    if m.v1 <= 0:
        raise DegenerateError("auxiliary variance is zero: E(e1^2) = theta * C_1^2 = 0")


def theory_hh(s: PopulationSummary, nr: NonResponseSpec) -> TheoryResult:
    mse = var_hh(s, nr)
    return TheoryResult("hh", 0.0, mse, {}, _pre_or_nan(mse, s, nr))


def population_slope(s: PopulationSummary) -> float:
    """``rho * Ybar * C_0 / (Xbar * C_1)``, the regression slope in effective-CV terms."""
    m = effective_moments(s, NonResponseSpec(0.0, 1.0, 0.0))
    _require_auxiliary(m)
    return s.rho * s.ybar * m.c0 / (s.xbar * m.c1)


def mse_lr(s: PopulationSummary, nr: NonResponseSpec) -> TheoryResult:
    """Regression estimator with the population slope.

    ``theta Ybar^2 {1 + (n-1) rho_Y} C_Y^2 (1 - rho^2) + nr``; at K = 0 this is
    ``theta Ybar^2 {1 + (n-1) rho_X} [C_Y^2 - K_1^2 C_X^2] rho*^2``.
    """
    m = effective_moments(s, nr)
    if s.c_x == 0:
        raise DegenerateError("auxiliary coefficient of variation is zero")
    mse = s.theta * s.ybar**2 * s.factor_y * s.c_y**2 * (1.0 - s.rho**2) + m.nr
    b = population_slope(s)
    return TheoryResult("lr", 0.0, mse, {"b": b}, _pre_or_nan(mse, s, nr))


# -- t1 ---------------------------------------------------------------------


def mse_t1(s: PopulationSummary, nr: NonResponseSpec, w11: float, w12: float) -> float:
    m = effective_moments(s, nr)
    Y, X, th = s.ybar, s.xbar, s.theta
    return (
        Y**2
        + w11**2 * Y**2 * (1.0 + th * m.c0**2)
        + w12**2 * X**2 * th * m.c1**2
        - 2.0 * w11 * w12 * X * Y * th * s.rho * m.c0 * m.c1
        - 2.0 * w11 * Y**2
        + m.nr * w11**2
    )


def _solve2(a11: float, a12: float, a22: float, b1: float, b2: float, what: str) -> tuple[float, float]:
    det = a11 * a22 - a12 * a12
    if det == 0 or not math.isfinite(det):
        raise DegenerateError(f"{what}: singular normal equations (determinant {det})")
    return (b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det


def optimum_t1(s: PopulationSummary, nr: NonResponseSpec) -> tuple[float, float]:
    """Stationary point of the t1 MSE quadratic."""
    m = effective_moments(s, nr)
    _require_auxiliary(m)
    Y, X, th = s.ybar, s.xbar, s.theta
    return _solve2(
        Y**2 * (1.0 + th * m.c0**2) + m.nr,
        -X * Y * th * s.rho * m.c0 * m.c1,
        X**2 * th * m.c1**2,
        Y**2,
        0.0,
        "t1",
    )


def printed_t1_weights(s: PopulationSummary, nr: NonResponseSpec) -> tuple[float, float]:
    """Closed forms for (w11*, w12*) read literally, with the non-response
    term outside the ``Xbar C_1 [...]`` product in the w12* denominator."""
    m = effective_moments(s, nr)
    q0 = (1.0 - s.rho**2) * s.theta * m.c0**2
    w11 = 1.0 / (1.0 + q0 + m.nr / s.ybar**2)
    w12 = s.rho * m.c0 * s.ybar / (s.xbar * m.c1 * (1.0 + q0) + m.nr / s.ybar**2)
    return w11, w12


def theory_t1(
    s: PopulationSummary,
    nr: NonResponseSpec,
    weights: tuple[float, float] | None = None,
) -> TheoryResult:
    solved = optimum_t1(s, nr)
    w11, w12 = solved if weights is None else weights
    printed = printed_t1_weights(s, nr)
    mse = mse_t1(s, nr, w11, w12)
    constants = {
        "w11": w11,
        "w12": w12,
        "w11_opt": solved[0],
        "w12_opt": solved[1],
        "w11_printed": printed[0],
        "w12_printed": printed[1],
    }
    return TheoryResult("t1", (w11 - 1.0) * s.ybar, mse, constants, _pre_or_nan(mse, s, nr))


# -- t2 ---------------------------------------------------------------------


def a_coeffs(m: EffectiveMoments, delta: float, nr_abs: float, alpha: float = 0.0) -> ACoeffs:
    """Coefficients A1..A6 of the t2 MSE quadratic.

    Expanding ``[Xbar / (alpha Xbar + (1-alpha) xbar*)]^delta`` gives linear
    coefficient ``a = delta (1-alpha)`` and quadratic coefficient
    ``c = delta (delta+1) (1-alpha)^2 / 2`` on ``e1``. At ``alpha = 0`` these
    are ``delta`` and ``delta (delta+1) / 2`` and the coefficients take their
    usual printed form.
    """
    lin = delta * (1.0 - alpha)
    quad = delta * (delta + 1.0) * (1.0 - alpha) ** 2 / 2.0
    th, c0, c1, rho = m.theta, m.c0, m.c1, m.rho
    return ACoeffs(
        a1=1.0 + th * (c0**2 + (lin**2 + 2.0 * quad) * c1**2 - 4.0 * lin * rho * c0 * c1),
        a2=th * c1**2,
        a3=th * (2.0 * lin * c1**2 - rho * c0 * c1),
        a4=1.0 - th * (lin * rho * c0 * c1 - quad * c1**2),
        a5=lin * th * c1**2,
        a6=nr_abs,
    )


def _t2_coeffs(s: PopulationSummary, nr: NonResponseSpec, alpha: float, delta: float) -> ACoeffs:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha={alpha} outside [0, 1]")
    m = effective_moments(s, nr)
    return a_coeffs(m, delta, m.nr, alpha)


def mse_t2(
    s: PopulationSummary,
    nr: NonResponseSpec,
    w21: float,
    w22: float,
    alpha: float = 0.0,
    delta: float = 1.0,
) -> float:
    A = _t2_coeffs(s, nr, alpha, delta)
    Y, X = s.ybar, s.xbar
    return (
        Y**2
        + w21**2 * Y**2 * A.a1
        + w22**2 * X**2 * A.a2
        + 2.0 * w21 * w22 * X * Y * A.a3
        - 2.0 * w21 * Y**2 * A.a4
        - 2.0 * w22 * X * Y * A.a5
        + w21**2 * A.a6
    )


def bias_t2(
    s: PopulationSummary,
    nr: NonResponseSpec,
    w21: float,
    w22: float,
    alpha: float = 0.0,
    delta: float = 1.0,
) -> float:
    A = _t2_coeffs(s, nr, alpha, delta)
    return s.ybar * (w21 * A.a4 - 1.0) + w22 * s.xbar * A.a5


def _t2_denominator(A: ACoeffs, ybar: float) -> float:
    den = A.a1 * A.a2 - A.a3**2 + A.a2 * A.a6 / ybar**2
    if den == 0 or not math.isfinite(den):
        raise DegenerateError(f"t2: A1*A2 - A3^2 + A2*A6/Ybar^2 = {den}")
    return den


def printed_t2_weights(
    s: PopulationSummary, nr: NonResponseSpec, alpha: float = 0.0, delta: float = 1.0
) -> tuple[float, float]:
    A = _t2_coeffs(s, nr, alpha, delta)
    Y = s.ybar
    den = _t2_denominator(A, Y)
    w21 = (A.a2 * A.a4 - A.a3 * A.a5) / den
    w22 = Y / s.xbar * (A.a1 * A.a5 - A.a3 * A.a4 + A.a5 * A.a6 / Y**2) / den
    return w21, w22


def optimum_t2(
    s: PopulationSummary, nr: NonResponseSpec, alpha: float = 0.0, delta: float = 1.0
) -> tuple[float, float]:
    A = _t2_coeffs(s, nr, alpha, delta)
    _t2_denominator(A, s.ybar)
    Y, X = s.ybar, s.xbar
    return _solve2(
        Y**2 * A.a1 + A.a6,
        X * Y * A.a3,
        X**2 * A.a2,
        Y**2 * A.a4,
        X * Y * A.a5,
        "t2",
    )


def theory_t2(
    s: PopulationSummary,
    nr: NonResponseSpec,
    alpha: float = 0.0,
    delta: float = 1.0,
    weights: tuple[float, float] | None = None,
) -> TheoryResult:
    solved = optimum_t2(s, nr, alpha, delta)
    printed = printed_t2_weights(s, nr, alpha, delta)
    w21, w22 = solved if weights is None else weights
    mse = mse_t2(s, nr, w21, w22, alpha, delta)
    constants = {
        "w21": w21,
        "w22": w22,
        "alpha": alpha,
        "delta": delta,
        "w21_opt": solved[0],
        "w22_opt": solved[1],
        "w21_printed": printed[0],
        "w22_printed": printed[1],
    }
    bias = bias_t2(s, nr, w21, w22, alpha, delta)
    return TheoryResult("t2", bias, mse, constants, _pre_or_nan(mse, s, nr))


# -- t3 ---------------------------------------------------------------------


def _t3_bracket(s: PopulationSummary, m: EffectiveMoments, b: float) -> float:
    Y, X, th = s.ybar, s.xbar, s.theta
    return (
        Y**2 * (1.0 + th * m.c0**2) + b**2 * X**2 * th * m.c1**2 - 2.0 * X * Y * b * s.rho * th * m.c0 * m.c1
    )


def mse_t3(s: PopulationSummary, nr: NonResponseSpec, gamma: float, b: float) -> float:
    m = effective_moments(s, nr)
    return gamma**2 * _t3_bracket(s, m, b) + s.ybar**2 * (1.0 - 2.0 * gamma) + m.nr * gamma**2


def optimum_gamma(s: PopulationSummary, nr: NonResponseSpec, b: float) -> float:
    m = effective_moments(s, nr)
    den = _t3_bracket(s, m, b) + m.nr
    if not den > 0:
        raise DegenerateError(f"t3: optimum gamma denominator {den} is not positive")
    return s.ybar**2 / den


def printed_gamma(s: PopulationSummary, nr: NonResponseSpec, b: float) -> float:
    """The gamma* closed form as printed, with ``1 - theta C_0^2`` in the denominator."""
    m = effective_moments(s, nr)
    Y, X, th = s.ybar, s.xbar, s.theta
    den = (
        Y**2 * (1.0 - th * m.c0**2)
        + b**2 * X**2 * th * m.c1**2
        - 2.0 * X * Y * b * s.rho * th * m.c0 * m.c1
        + m.nr
    )
    return Y**2 / den if den != 0 else math.nan


def theory_t3(
    s: PopulationSummary,
    nr: NonResponseSpec,
    b: float | None = None,
    gamma: float | None = None,
) -> TheoryResult:
    if b is None:
        b = population_slope(s)
    solved = optimum_gamma(s, nr, b)
    g = solved if gamma is None else gamma
    mse = mse_t3(s, nr, g, b)
    constants = {
        "gamma": g,
        "b": b,
        "gamma_opt": solved,
        "gamma_printed": printed_gamma(s, nr, b),
    }
    return TheoryResult("t3", (g - 1.0) * s.ybar, mse, constants, _pre_or_nan(mse, s, nr))


# -- tables -----------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    k_rate: float
    l_factor: float
    results: dict[str, TheoryResult]
    flags: dict[str, str] = field(default_factory=dict)

    @property
    def pre(self) -> dict[str, float]:
        return {name: r.pre_vs_hh for name, r in self.results.items()}


TABLE_ESTIMATORS = ("lr", "t1", "t2", "t3")


def table31(
    s: PopulationSummary,
    grid: Sequence[NonResponseSpec],
    alpha: float = 0.0,
    delta: float = 1.0,
    weights: Literal["optimum", "anchored"] = "optimum",
    anchor: NonResponseSpec | None = None,
    suspect: Mapping[tuple[float, float], Iterable[str]] | None = None,
) -> list[TableRow]:
    """PRE of lr, t1, t2 and t3 against the Hansen-Hurwitz mean over a (K, L) grid.

    ``weights="optimum"`` re-optimises the constants in every cell.
    ``weights="anchored"`` optimises them once, at ``anchor`` (default: the
    first grid cell), and evaluates every cell at those fixed constants.
    ``suspect`` maps ``(K, L)`` to estimator names whose cells should be
    flagged ``"suspect-transcription"``.
    """
    if not grid:
        raise DomainError("grid must not be empty")
    if weights not in ("optimum", "anchored"):
        raise DomainError(f"unknown weight mode {weights!r}")
    fixed: dict[str, tuple[float, ...]] = {}
    if weights == "anchored":
        ref = grid[0] if anchor is None else anchor
        fixed["t1"] = optimum_t1(s, ref)
        fixed["t2"] = optimum_t2(s, ref, alpha, delta)
        fixed["t3"] = (optimum_gamma(s, ref, population_slope(s)),)

    rows = []
    for nr in grid:
        results = {
            "lr": mse_lr(s, nr),
            "t1": theory_t1(s, nr, fixed.get("t1")),  # type: ignore[arg-type]
            "t2": theory_t2(s, nr, alpha, delta, fixed.get("t2")),  # type: ignore[arg-type]
            "t3": theory_t3(s, nr, gamma=fixed["t3"][0] if fixed else None),
        }
        flags = {name: "ok" for name in TABLE_ESTIMATORS}
        if suspect:
            for name in suspect.get(_cell_key(nr.k_rate, nr.l_factor), ()):
                flags[name] = "suspect-transcription"
        rows.append(TableRow(nr.k_rate, nr.l_factor, results, flags))
    return rows


def _cell_key(k_rate: float, l_factor: float) -> tuple[float, float]:
    return (round(k_rate, 9), round(l_factor, 9))
