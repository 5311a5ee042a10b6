"""Built-in forest-strip parameter set and the printed PRE table it is audited against."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from scipy.optimize import brentq

from .popmodel import PopulationSummary
from .theory import (
    TABLE_ESTIMATORS,
    NonResponseSpec,
    TableRow,
    _cell_key,
    mse_lr,
    pre,
    table31,
)

BUILTIN_NAME = "murthy1967-summary"

# Timber volume (y) and strip length (x) for 176 forest strips, n = 16.
FOREST_N = 176
FOREST_n = 16
FOREST_YBAR = 282.6136
FOREST_XBAR = 6.9943
FOREST_S2_Y = 24114.6700
FOREST_S2_X = 8.7600
FOREST_RHO = 0.8710
FOREST_S2_Y2 = 0.75 * FOREST_S2_Y

K_GRID = (0.1, 0.2, 0.3, 0.4)
L_GRID = (2.0, 2.5, 3.0, 3.5)

# (K, L) -> PRE of (lr, t1, t2, t3) against the Hansen-Hurwitz mean.
PRINTED_TABLE: dict[tuple[float, float], tuple[float, float, float, float]] = {
    (0.1, 2.0): (407.4884, 434.0181, 438.9431, 434.0199),
    (0.1, 2.5): (404.1824, 430.7801, 435.7177, 430.7819),
    (0.1, 3.0): (400.9468, 427.6068, 432.5561, 427.6086),
    (0.1, 3.5): (397.7794, 424.4964, 429.4564, 424.4982),
    (0.2, 2.0): (400.9468, 427.6068, 432.5561, 427.6086),
    (0.2, 2.5): (394.6779, 421.4470, 426.4168, 421.4487),
    (0.2, 3.0): (388.6647, 415.5240, 420.5112, 415.5257),
    (0.2, 3.5): (382.8921, 409.8246, 414.8261, 409.8262),
    (0.3, 2.0): (394.6779, 421.4470, 426.4168, 421.4487),
    (0.3, 2.5): (385.7493, 412.6472, 417.6419, 412.6488),
    (0.3, 3.0): (377.3458, 404.3362, 409.3494, 415.5257),
    (0.3, 3.5): (369.4225, 396.4225, 401.5007, 409.8262),
    (0.4, 2.0): (388.6647, 415.5240, 420.5112, 421.4487),
    (0.4, 2.5): (377.3458, 404.3362, 409.3494, 412.6488),
    (0.4, 3.0): (366.8810, 393.9475, 398.9770, 404.3379),
    (0.4, 3.5): (357.1773, 384.2753, 389.3132, 369.4760),
}

# t3 cells that repeat values printed elsewhere in the table or break the
# monotone pattern of their neighbours.
SUSPECT_CELLS: dict[tuple[float, float], tuple[str, ...]] = {
    (0.3, 3.0): ("t3",),
    (0.3, 3.5): ("t3",),
    (0.4, 2.0): ("t3",),
    (0.4, 2.5): ("t3",),
    (0.4, 3.0): ("t3",),
    (0.4, 3.5): ("t3",),
}

ANCHOR_CELL = (0.1, 2.0)
AUDIT_TOLERANCE = 5e-4


def summary_with_intraclass(rho_intraclass: float) -> PopulationSummary:
    return PopulationSummary(
        N=FOREST_N,
        n=FOREST_n,
        ybar=FOREST_YBAR,
        xbar=FOREST_XBAR,
        s2_y=FOREST_S2_Y,
        s2_x=FOREST_S2_X,
        rho=FOREST_RHO,
        rho_y=rho_intraclass,
        rho_x=rho_intraclass,
    )


def back_solve_intraclass(
    target_pre: float | None = None,
    k_rate: float = ANCHOR_CELL[0],
    l_factor: float = ANCHOR_CELL[1],
) -> float:
    """Common value of rho_Y = rho_X at which the regression estimator's PRE
    equals ``target_pre`` (default: the printed lr value of the cell).

    PRE of lr is increasing in the intraclass factor, so the root is unique.
    """
    if target_pre is None:
        target_pre = PRINTED_TABLE[_cell_key(k_rate, l_factor)][0]
    nr = NonResponseSpec(k_rate, l_factor, FOREST_S2_Y2)

    def gap(r: float) -> float:
        s = summary_with_intraclass(r)
        return pre(mse_lr(s, nr).mse, s, nr) - target_pre

    lo = -1.0 / (FOREST_n - 1) + 1e-9
    return float(brentq(gap, lo, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200))


@lru_cache(maxsize=1)
def builtin_summary() -> PopulationSummary:
    """Summary parameters with the intraclass correlation back-solved from the lr column."""
    return summary_with_intraclass(back_solve_intraclass())


def builtin_grid(
    k_grid: tuple[float, ...] = K_GRID, l_grid: tuple[float, ...] = L_GRID
) -> list[NonResponseSpec]:
    return [NonResponseSpec(k, l, FOREST_S2_Y2) for k in k_grid for l in l_grid]


@dataclass(frozen=True)
class AuditCell:
    k_rate: float
    l_factor: float
    estimator: str
    printed: float
    computed: float
    flag: str

    @property
    def rel_dev(self) -> float:
        return (self.computed - self.printed) / self.printed

    @property
    def within(self) -> bool:
        return abs(self.rel_dev) <= AUDIT_TOLERANCE


def audit_rows(weights: str = "anchored") -> list[TableRow]:
    return table31(
        builtin_summary(),
        builtin_grid(),
        alpha=0.0,
        delta=1.0,
        weights=weights,  # type: ignore[arg-type]
        anchor=NonResponseSpec(*ANCHOR_CELL, FOREST_S2_Y2),
        suspect=SUSPECT_CELLS,
    )


def audit_table31(weights: str = "anchored") -> list[AuditCell]:
    """Compare every printed cell with its recomputed value.

    The printed t1, t2 and t3 columns hold the constants optimised at
    (K=0.1, L=2.0) fixed across the whole grid, which is what
    ``weights="anchored"`` reproduces.
    """
    cells = []
    for row in audit_rows(weights):
        printed = PRINTED_TABLE[_cell_key(row.k_rate, row.l_factor)]
        for name, value in zip(TABLE_ESTIMATORS, printed):
            cells.append(
                AuditCell(
                    row.k_rate,
                    row.l_factor,
                    name,
                    value,
                    row.results[name].pre_vs_hh,
                    row.flags[name],
                )
            )
    return cells


def audit_passes(cells: list[AuditCell]) -> bool:
    return all(c.within for c in cells if c.flag == "ok")
