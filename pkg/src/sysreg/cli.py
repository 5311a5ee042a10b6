"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric degeneracy,
4 audit-table31 found a non-flagged cell outside tolerance.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from typing import Any, Callable, Sequence

from . import audit
from .errors import DataError, SysregError, UsageError
from .mc import McConfig, McReport, run_mc
from .popmodel import (
    DesignParams,
    Population,
    PopulationSummary,
    load_population,
    summarize,
    synthetic_population,
)
from .sampling import label_nonresponse, stratum_mean_square
from .theory import TABLE_ESTIMATORS, NonResponseSpec, TableRow, table31

EXIT_AUDIT_MISMATCH = 4

DEFAULTS: dict[str, Any] = {
    "format": "text",
    "k_grid": "0.1,0.2,0.3,0.4",
    "l_grid": "2.0,2.5,3.0,3.5",
    "alpha": 0.0,
    "delta": 1.0,
    "weights": "optimum",
    "reps": 10000,
    "seed": 0,
    "L": 2.0,
    "labeling": "stratum_tail",
    "convention": "enumeration",
    "jobs": 1,
}

SYNTHETIC_KEYS = {
    "N": int,
    "n": int,
    "rho": float,
    "rho_y": float,
    "ratio": float,
    "tail": float,
    "ybar": float,
    "xbar": float,
    "cv_y": float,
    "cv_x": float,
    "seed": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def parse_floats(text: str) -> list[float]:
    try:
        values = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise UsageError("empty grid")
    return values


def parse_synthetic(text: str) -> dict[str, Any]:
    """``N=240,n=16,rho=0.8,rho_y=0.9[,ratio=0.75,tail=0.25,seed=1,...]``."""
    spec: dict[str, Any] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in SYNTHETIC_KEYS:
            raise UsageError(f"bad synthetic spec item {item!r}; keys: {', '.join(SYNTHETIC_KEYS)}")
        try:
            spec[key] = SYNTHETIC_KEYS[key](value)
        except ValueError:
            raise UsageError(f"bad value in synthetic spec: {item!r}") from None
    for key in ("N", "n", "rho", "rho_y"):
        if key not in spec:
            raise UsageError(f"synthetic spec needs {key}")
    return spec


def read_config(path: str) -> dict[str, str]:
    """Plain ``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{no}: expected key=value")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sysreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value file; command-line flags take precedence")
        p.add_argument("--format", choices=("text", "csv"))
        p.add_argument("--out", help="write results here instead of stdout")

    def data_source(p: argparse.ArgumentParser, builtin: bool) -> None:
        p.add_argument("--pop", help="CSV file with columns y,x in frame order")
        p.add_argument("--synthetic", help="generator spec, e.g. N=240,n=16,rho=0.8,rho_y=0.9")
        if builtin:
            p.add_argument("--builtin", choices=(audit.BUILTIN_NAME,))
        p.add_argument("--n", type=int, help="sample size (required with --pop)")

    p = sub.add_parser("summarize", help="population parameters")
    common(p)
    data_source(p, builtin=False)

    p = sub.add_parser("theory-table", help="closed-form PRE table over a (K, L) grid")
    common(p)
    data_source(p, builtin=True)
    p.add_argument("--k-grid", dest="k_grid")
    p.add_argument("--l-grid", dest="l_grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--weights", choices=("optimum", "anchored"))

    p = sub.add_parser("simulate", help="Monte Carlo check of the closed forms")
    common(p)
    data_source(p, builtin=False)
    p.add_argument("--k-grid", dest="k_grid")
    p.add_argument("--L", dest="L", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--labeling", choices=("stratum_tail", "bernoulli"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--convention", choices=("enumeration", "theta"))
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("audit-table31", help="recompute the built-in PRE table and compare")
    common(p)
    return parser


def resolve(argv: Sequence[str] | None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    config = read_config(args.config) if args.config else {}
    for key, value in config.items():
        if not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, key) is None:
            setattr(args, key, value)
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    casts: dict[str, Callable[[Any], Any]] = {
        "n": int,
        "alpha": float,
        "delta": float,
        "reps": int,
        "seed": int,
        "L": float,
        "jobs": int,
    }
    for key, cast in casts.items():
        if getattr(args, key, None) is not None:
            try:
                setattr(args, key, cast(getattr(args, key)))
            except ValueError:
                raise UsageError(f"bad value for {key}: {getattr(args, key)!r}") from None
    if getattr(args, "format", None) not in ("text", "csv"):
        raise UsageError(f"format must be text or csv, got {args.format!r}")
    return args


# -- data -------------------------------------------------------------------


def load_data(args: argparse.Namespace) -> tuple[Population, DesignParams]:
    sources = [s for s in ("pop", "synthetic", "builtin") if getattr(args, s, None)]
    if len(sources) != 1:
        raise UsageError(
            "give exactly one of --pop, --synthetic" + (", --builtin" if hasattr(args, "builtin") else "")
        )
    if args.synthetic:
        spec = parse_synthetic(args.synthetic)
        n = spec["n"] if args.n is None else args.n
        pop = synthetic_population(
            spec.pop("N"),
            spec.pop("n"),
            spec.pop("rho"),
            spec.pop("rho_y"),
            ms_ratio=spec.pop("ratio", None),
            **spec,
        )
    else:
        try:
            pop = load_population(args.pop)
        except OSError as exc:
            raise DataError(f"{args.pop}: {exc.strerror or exc}") from None
        except DataError as exc:
            raise DataError(f"{args.pop}: {exc}") from None
        if args.n is None:
            raise UsageError("--n is required with --pop")
        n = args.n
    return pop, DesignParams.from_sizes(pop.N, n)


# -- rendering --------------------------------------------------------------


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def render_summary(s: PopulationSummary, fmt: str) -> str:
    d = s.as_dict()
    if fmt == "csv":
        return _csv(["field", "value"], [[k, v] for k, v in d.items()])
    lines = [f"N={s.N} n={s.n} theta={s.theta:.6f}", f"k={s.N // s.n}"]
    lines += [
        f"{key}={d[key]:.6f}"
        for key in ("ybar", "xbar", "s2_y", "s2_x", "rho", "rho_y", "rho_x", "c_y", "c_x")
    ]
    return "\n".join(lines) + "\n"


TABLE_CSV_COLUMNS = ("K", "L", "estimator", "pre_vs_hh", "mse", "bias", "flag")


def render_table(rows: list[TableRow], fmt: str) -> str:
    if fmt == "csv":
        out = []
        for row in rows:
            for name in TABLE_ESTIMATORS:
                r = row.results[name]
                out.append([row.k_rate, row.l_factor, name, r.pre_vs_hh, r.mse, r.bias, row.flags[name]])
        return _csv(TABLE_CSV_COLUMNS, out)
    header = ["K", "L", *(f"PRE({n})" for n in TABLE_ESTIMATORS)]
    body = [
        [f"{row.k_rate:g}", f"{row.l_factor:g}"]
        + [
            f"{row.results[n].pre_vs_hh:.4f}" + ("*" if row.flags[n] != "ok" else "")
            for n in TABLE_ESTIMATORS
        ]
        for row in rows
    ]
    return _aligned(header, body)


MC_CSV_COLUMNS = (
    "K",
    "L",
    "estimator",
    "empirical_bias",
    "empirical_mse",
    "mse_se",
    "theory_bias",
    "theory_mse",
    "z_score",
    "rel_diff",
    "within_band",
)


def render_mc(reports: list[tuple[float, McReport]], fmt: str) -> str:
    rows = []
    for k_rate, rep in reports:
        for r in rep.rows.values():
            rows.append(
                [
                    k_rate,
                    rep.nonresponse.l_factor,
                    r.name,
                    r.empirical_bias,
                    r.empirical_mse,
                    r.mse_se,
                    r.theory_bias,
                    r.theory_mse,
                    r.z_score,
                    r.rel_diff,
                    "yes" if r.within_band else "no",
                ]
            )
    if fmt == "csv":
        return _csv(MC_CSV_COLUMNS, rows)
    body = [
        [f"{v:g}" if i < 2 else (f"{v:.6g}" if isinstance(v, float) else str(v)) for i, v in enumerate(row)]
        for row in rows
    ]
    return _aligned(MC_CSV_COLUMNS, body)


AUDIT_CSV_COLUMNS = ("K", "L", "estimator", "printed", "computed", "rel_dev", "flag")


def render_audit(cells: list[audit.AuditCell], fmt: str) -> str:
    rows = [[c.k_rate, c.l_factor, c.estimator, c.printed, c.computed, c.rel_dev, c.flag] for c in cells]
    if fmt == "csv":
        return _csv(AUDIT_CSV_COLUMNS, rows)
    body = [
        [
            f"{c.k_rate:g}",
            f"{c.l_factor:g}",
            c.estimator,
            f"{c.printed:.4f}",
            f"{c.computed:.4f}",
            f"{c.rel_dev:+.2e}",
            c.flag,
        ]
        for c in cells
    ]
    return _aligned(AUDIT_CSV_COLUMNS, body)


# -- commands ---------------------------------------------------------------


def cmd_summarize(args: argparse.Namespace) -> tuple[str, int]:
    pop, design = load_data(args)
    return render_summary(summarize(pop, design), args.format), 0


def cmd_theory_table(args: argparse.Namespace) -> tuple[str, int]:
    k_grid, l_grid = parse_floats(args.k_grid), parse_floats(args.l_grid)
    suspect = None
    if getattr(args, "builtin", None):
        if args.n is not None:
            raise UsageError("--n cannot be combined with --builtin")
        s = audit.builtin_summary()
        grid = [NonResponseSpec(k, l, audit.FOREST_S2_Y2) for k in k_grid for l in l_grid]
        suspect = audit.SUSPECT_CELLS
    else:
        pop, design = load_data(args)
        s = summarize(pop, design)
        grid = []
        for k in k_grid:
            s2_y2 = stratum_mean_square(pop, label_nonresponse(pop, k))
            grid += [NonResponseSpec(k, l, s2_y2) for l in l_grid]
    rows = table31(s, grid, args.alpha, args.delta, weights=args.weights, suspect=suspect)
    return render_table(rows, args.format), 0


def cmd_simulate(args: argparse.Namespace) -> tuple[str, int]:
    pop, design = load_data(args)
    reports = []
    for i, k_rate in enumerate(parse_floats(args.k_grid)):
        labeling = label_nonresponse(pop, k_rate, args.labeling, seed=[args.seed, i])
        cfg = McConfig(
            replications=args.reps,
            seed=args.seed,
            l_factor=args.L,
            labeling_mode=args.labeling,
            alpha=args.alpha,
            delta=args.delta,
            convention=args.convention,
            n_jobs=args.jobs,
        )
        rep = run_mc(pop, design, labeling, cfg)
        for w in rep.warnings:
            print(f"warning (K={k_rate:g}): {w}", file=sys.stderr)
        reports.append((k_rate, rep))
    return render_mc(reports, args.format), 0


def cmd_audit_table31(args: argparse.Namespace) -> tuple[str, int]:
    cells = audit.audit_table31()
    code = 0 if audit.audit_passes(cells) else EXIT_AUDIT_MISMATCH
    return render_audit(cells, args.format), code


COMMANDS = {
    "summarize": cmd_summarize,
    "theory-table": cmd_theory_table,
    "simulate": cmd_simulate,
    "audit-table31": cmd_audit_table31,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = resolve(argv)
        text, code = COMMANDS[args.command](args)
    except SysregError as exc:
        print(f"sysreg: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"sysreg: error: {args.out}: {exc.strerror}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
