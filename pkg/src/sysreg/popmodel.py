"""Finite populations, systematic designs and population-level parameters."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, replace
from typing import IO, Iterator

import numpy as np
import numpy.typing as npt

from .errors import DegenerateError, DomainError, ParseError, SchemaError

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class Population:
    """An ordered sampling frame of ``(y, x)`` unit records.

    Frame order is significant: position ``p`` (0-based) belongs to the
    systematic sample ``p % k``.
    """

    y: FloatArray
    x: FloatArray

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=np.float64)
        x = np.array(self.x, dtype=np.float64)
        if y.ndim != 1 or y.shape != x.shape:
            raise DomainError("y and x must be one-dimensional and of equal length")
        if y.size < 2:
            raise DomainError(f"population needs at least 2 units, got {y.size}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise DomainError("population values must be finite")
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return int(self.y.size)

    @property
    def units(self) -> list[tuple[float, float]]:
        return list(zip(self.y.tolist(), self.x.tolist()))

    def __len__(self) -> int:
        return self.N

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.units)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["y", "x"])
        for y, x in self.units:
            writer.writerow([repr(y), repr(x)])
        return buf.getvalue()


@dataclass(frozen=True)
class DesignParams:
    """Systematic design with ``N = n * k``."""

    N: int
    n: int
    k: int

    def __post_init__(self) -> None:
        if min(self.N, self.n, self.k) < 1:
            raise DomainError("N, n and k must be positive")
        if self.N != self.n * self.k:
            raise DomainError(
                f"N={self.N} is not n*k={self.n}*{self.k}; "
                "fractional-interval systematic sampling is not supported"
            )
        if self.n < 2:
            raise DomainError("sample size n must be at least 2")

    @classmethod
    def from_sizes(cls, N: int, n: int) -> DesignParams:
        if n < 1 or N % n:
            raise DomainError(f"N={N} is not a multiple of n={n}")
        return cls(N=N, n=n, k=N // n)

    @property
    def theta(self) -> float:
        return 1.0 / self.n - 1.0 / self.N


@dataclass(frozen=True)
class PopulationSummary:
    """Every population-level quantity the closed-form theory consumes."""

    N: int
    n: int
    ybar: float
    xbar: float
    s2_y: float
    s2_x: float
    rho: float
    rho_y: float
    rho_x: float

    def __post_init__(self) -> None:
        if self.N < 2 or self.n < 1 or self.n > self.N:
            raise DomainError(f"invalid sizes N={self.N}, n={self.n}")
        if self.ybar == 0:
            raise DegenerateError("population mean of y is zero")
        if self.xbar == 0:
            raise DegenerateError("population mean of x is zero")
        if self.s2_y < 0 or self.s2_x < 0:
            raise DomainError("mean squares must be non-negative")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"correlation {self.rho} outside [-1, 1]")
        for name in ("rho_y", "rho_x"):
            if 1.0 + (self.n - 1) * getattr(self, name) < 0:
                raise DomainError(f"{name} gives a negative variance factor")

    @property
    def theta(self) -> float:
        return 1.0 / self.n - 1.0 / self.N

    @property
    def c_y(self) -> float:
        return math.sqrt(self.s2_y) / abs(self.ybar)

    @property
    def c_x(self) -> float:
        return math.sqrt(self.s2_x) / abs(self.xbar)

    @property
    def factor_y(self) -> float:
        """Intraclass variance factor ``1 + (n-1) rho_y``."""
        return 1.0 + (self.n - 1) * self.rho_y

    @property
    def factor_x(self) -> float:
        return 1.0 + (self.n - 1) * self.rho_x

    def as_dict(self) -> dict[str, float]:
        return {
            "N": self.N,
            "n": self.n,
            "ybar": self.ybar,
            "xbar": self.xbar,
            "s2_y": self.s2_y,
            "s2_x": self.s2_x,
            "rho": self.rho,
            "rho_y": self.rho_y,
            "rho_x": self.rho_x,
            "theta": self.theta,
            "c_y": self.c_y,
            "c_x": self.c_x,
        }


def load_population(source: str | os.PathLike[str] | IO[str]) -> Population:
    """Read a ``y,x`` CSV (header required) into a :class:`Population`.

    ``source`` is a path or an open text stream. Row numbers in parse errors
    are 1-based and count data rows only.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_population(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: expected a header row with columns y, x") from None
    names = [h.strip().lower() for h in header]
    missing = [c for c in ("y", "x") if c not in names]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    iy, ix = names.index("y"), names.index("x")

    ys: list[float] = []
    xs: list[float] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            y = float(row[iy])
            x = float(row[ix])
        except (IndexError, ValueError):
            raise ParseError(row_no, f"cannot parse {row!r} as two reals") from None
        if not (math.isfinite(y) and math.isfinite(x)):
            raise ParseError(row_no, "values must be finite")
        ys.append(y)
        xs.append(x)
    if len(ys) < 2:
        raise DomainError(f"population needs at least 2 units, got {len(ys)}")
    return Population(np.array(ys), np.array(xs))


def sample_matrix(values: npt.ArrayLike, design: DesignParams) -> FloatArray:
    """Arrange frame values as an ``n x k`` array; column ``i`` is sample ``i``."""
    v = np.asarray(values, dtype=np.float64)
    if v.size != design.N:
        raise DomainError(f"expected {design.N} values, got {v.size}")
    return v.reshape(design.n, design.k)


def intraclass_correlation(values: npt.ArrayLike, design: DesignParams) -> float:
    """Within-systematic-sample intraclass correlation.

    Ordered within-sample cross-products of deviations from the population
    mean, divided by ``(n-1)`` times the total sum of squares. The
    cross-product sum over sample ``i`` equals ``(sum_j d_ij)**2 - sum_j d_ij**2``.
    Returns 0 for a constant variable.
    """
    d = sample_matrix(values, design)
    d = d - d.mean()
    total = float(np.sum(d * d))
    if total == 0.0:
        return 0.0
    cross = float(np.sum(d.sum(axis=0) ** 2)) - total
    rho = cross / ((design.n - 1) * total)
    lo = -1.0 / (design.n - 1)
    if not lo - 1e-12 <= rho <= 1.0 + 1e-12:
        raise AssertionError(f"intraclass correlation {rho} outside [{lo}, 1]")
    return min(max(rho, lo), 1.0)


def systematic_variance(values: npt.ArrayLike, design: DesignParams) -> float:
    """Exact design variance of the systematic sample mean, by enumeration of all k starts."""
    means = sample_matrix(values, design).mean(axis=0)
    mu = float(np.mean(values))
    return float(np.mean((means - mu) ** 2))


def summarize(pop: Population, design: DesignParams) -> PopulationSummary:
    """Compute means, mean squares (divisor N-1), correlation and intraclass correlations."""
    if design.N != pop.N:
        raise DomainError(f"design N={design.N} does not match population N={pop.N}")
    y, x = pop.y, pop.x
    ybar, xbar = float(y.mean()), float(x.mean())
    if ybar == 0:
        raise DegenerateError("population mean of y is zero")
    if xbar == 0:
        raise DegenerateError("population mean of x is zero")
    dy, dx = y - ybar, x - xbar
    s2_y = float(dy @ dy) / (pop.N - 1)
    s2_x = float(dx @ dx) / (pop.N - 1)
    if s2_x == 0:
        raise DegenerateError("auxiliary variable has zero variance")
    rho = 0.0 if s2_y == 0 else float(dy @ dx) / ((pop.N - 1) * math.sqrt(s2_y * s2_x))
    return PopulationSummary(
        N=pop.N,
        n=design.n,
        ybar=ybar,
        xbar=xbar,
        s2_y=s2_y,
        s2_x=s2_x,
        rho=min(max(rho, -1.0), 1.0),
        rho_y=intraclass_correlation(y, design),
        rho_x=intraclass_correlation(x, design),
    )


def calibrate_intraclass(
    summary: PopulationSummary, pop: Population, design: DesignParams
) -> PopulationSummary:
    """Return ``summary`` with ``rho_y``/``rho_x`` chosen so that
    ``theta * (1 + (n-1) rho) * S^2`` equals the exact enumeration variance
    of the systematic sample mean.

    With the enumeration definition of the intraclass correlation the
    theta-form is short by the factor ``(N-n)/(N-1)``; this removes it.
    The calibrated values may exceed 1 and are not range-checked.
    """

    def solve(values: FloatArray, s2: float, current: float) -> float:
        if s2 == 0:
            return current
        factor = systematic_variance(values, design) / (design.theta * s2)
        return (factor - 1.0) / (design.n - 1)

    return replace(
        summary,
        rho_y=solve(pop.y, summary.s2_y, summary.rho_y),
        rho_x=solve(pop.x, summary.s2_x, summary.rho_x),
    )


def _unit_scale(v: FloatArray) -> FloatArray:
    return v / math.sqrt(float(v @ v) / v.size)


def _orthogonal_to(v: FloatArray, basis: FloatArray) -> FloatArray:
    return v - basis * float(v @ basis) / float(basis @ basis)


def synthetic_population(
    N: int,
    n: int,
    rho: float,
    rho_y: float,
    ms_ratio: float | None = None,
    tail: float = 0.25,
    ybar: float = 100.0,
    xbar: float = 10.0,
    cv_y: float = 0.5,
    cv_x: float = 0.4,
    seed: int | np.random.Generator | None = 0,
) -> Population:
    """Generate a frame with prescribed correlation and intraclass correlation.

    Each variable is ``sqrt(r) * a[sample] + sqrt(1 - r) * e`` where the
    sample effects ``a`` and the column-centred unit noise ``e`` are exactly
    orthogonalised, so ``rho`` and ``rho_y`` (shared by both variables) are
    hit up to floating point. When ``ms_ratio`` is given, deviations of y in
    the last ``floor(tail * N)`` frame positions are rescaled about their own
    mean so that this tail's mean square is ``ms_ratio`` times S_Y^2; this
    perturbs the other targets slightly.
    """
    design = DesignParams.from_sizes(N, n)
    k = design.k
    if not -1.0 <= rho <= 1.0:
        raise DomainError("rho must lie in [-1, 1]")
    if not -1.0 / (n - 1) <= rho_y <= 1.0:
        raise DomainError(f"rho_y must lie in [{-1.0 / (n - 1):.6g}, 1]")
    rng = np.random.default_rng(seed)
    share = (1.0 + (n - 1) * rho_y) / n
    partner = math.sqrt(max(0.0, 1.0 - rho * rho))

    def effects() -> FloatArray:
        a = rng.standard_normal(k)
        return a - a.mean()

    def noise() -> FloatArray:
        e = rng.standard_normal((n, k))
        return (e - e.mean(axis=0)).ravel()

    a = effects()
    e = noise()
    a_perp = effects()
    e_perp = noise()
    if k > 1:
        a = _unit_scale(a)
        a_perp = _unit_scale(_orthogonal_to(a_perp, a))
    else:
        a = a_perp = np.zeros(k)
    e = _unit_scale(e)
    e_perp = _unit_scale(_orthogonal_to(e_perp, e))

    cols = np.arange(N) % k
    zx = math.sqrt(share) * a[cols] + math.sqrt(1.0 - share) * e
    ay = rho * a + partner * a_perp
    ey = rho * e + partner * e_perp
    zy = math.sqrt(share) * ay[cols] + math.sqrt(1.0 - share) * ey

    def scaled(z: FloatArray, mean: float, cv: float) -> FloatArray:
        sd = math.sqrt(float(z @ z) / (N - 1))
        return mean + cv * abs(mean) * z / sd

    y = scaled(zy, ybar, cv_y)
    x = scaled(zx, xbar, cv_x)

    if ms_ratio is not None:
        m = int(math.floor(tail * N))
        if m < 2:
            raise DomainError("tail must contain at least 2 units to set its mean square")
        t = slice(N - m, N)
        mu_t = float(y[t].mean())
        ss_t = float(np.sum((y[t] - mu_t) ** 2))
        rest = y[: N - m]
        ss_other = float(np.sum((rest - y.mean()) ** 2)) + m * (mu_t - float(y.mean())) ** 2
        coef = ss_t / (m - 1) - ms_ratio * ss_t / (N - 1)
        if ss_t == 0 or coef <= 0:
            raise DomainError(f"mean-square ratio {ms_ratio} is not attainable")
        s = math.sqrt(ms_ratio * ss_other / (N - 1) / coef)
        y = y.copy()
        y[t] = mu_t + s * (y[t] - mu_t)

    return Population(y, x)
