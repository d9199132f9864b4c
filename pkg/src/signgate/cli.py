"""Command line: sign inference on a column of statistics, scenario
simulation, and the acceptance-region comparison table.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from .distributions import ShiftedChiSq
from .error_rates import AcceptanceRegion, rate_triple
from .errors import SignGateError
from .procedures import (
    by_procedure,
    decide,
    lc_procedure,
    nlc_procedure,
    optimize_s,
    tce_procedure,
    two_sided_pvalues,
)
from .simulation import load_scenarios, reports_to_csv, run_scenario

__all__ = ["main", "cmd_infer", "cmd_simulate", "cmd_table1"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parse_value(token: str, row: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"row {row}: cannot parse {token!r} as a number") from None
    if not math.isfinite(value):
        raise ValueError(f"row {row}: non-finite value {token!r}")
    return value


def _read_values(path: str, csv_col: str | None) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read input: {exc}") from exc

    values = []
    if csv_col is None:
        for row, line in enumerate(text.splitlines(), start=1):
            token = line.strip()
            if token:
                values.append(_parse_value(token, row))
    else:
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows:
            raise ValueError("input is empty")
        try:
            index = int(csv_col)
            header = False
            try:
                float(rows[0][index])
            except (ValueError, IndexError):
                header = True  # first row is not numeric in that column
        except ValueError:
            if csv_col not in rows[0]:
                raise ValueError(f"no column named {csv_col!r} in header") from None
            index = rows[0].index(csv_col)
            header = True
        for row, record in enumerate(rows[1:] if header else rows, start=2 if header else 1):
            if index >= len(record):
                raise ValueError(f"row {row}: no column {index}")
            values.append(_parse_value(record[index], row))

    if not values:
        raise ValueError("input is empty")
    return np.array(values, dtype=np.float64)


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    if not lo < value < hi:
        raise ValueError(f"{name} must be in ({lo:g}, {hi:g}), got {value:g}")
    return value


def cmd_infer(args) -> int:
    y = _read_values(args.input, args.csv)
    if args.procedure != "fixed-alpha":
        if args.alpha is not None or args.s is not None:
            raise ValueError("--alpha/--s apply only to procedure fixed-alpha")
        _check_range("--alpha-s", args.alpha_s, 0.0, 0.5)

    if args.procedure == "by":
        dec = by_procedure(y, args.alpha_s)
    elif args.procedure == "lc":
        dec = lc_procedure(y, args.alpha_s)
    elif args.procedure == "nlc":
        dec = nlc_procedure(y, args.alpha_s)
    elif args.procedure == "tce":
        dec = tce_procedure(y, args.alpha_s)
    else:
        if args.alpha is None:
            raise ValueError("procedure fixed-alpha requires --alpha")
        alpha = _check_range("--alpha", args.alpha, 0.0, 1.0)
        s = 0.5 if args.s is None else _check_range("--s", args.s, 0.0, 1.0)
        dec = decide(y, AcceptanceRegion(alpha, s))

    p = two_sided_pvalues(y)
    lines = ["index,y,rejected,sign,p_value"]
    for i in range(y.size):
        lines.append(
            f"{i},{_fmt(y[i])},{int(dec.rejected[i])},{int(dec.sign[i])},{_fmt(p[i])}"
        )
    _write_text(args.output, "\n".join(lines) + "\n")

    alpha_used = dec.alpha_used
    if np.ndim(alpha_used) > 0:
        alpha_used = float(np.max(alpha_used))  # largest per-experiment threshold
    print(
        f"procedure={dec.procedure} alpha_chosen={_fmt(alpha_used)} R={dec.n_rejected}",
        file=sys.stderr,
    )
    for note in dec.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return 0


def _write_plot(reports, path: str) -> None:
    try:
        import matplotlib
    except ImportError:
        raise ValueError(
            "--plot requires matplotlib; install the 'plot' extra"
        ) from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    procedures = list(reports[0].rows)
    x = np.arange(len(reports))
    labels = [r.scenario_id for r in reports]
    fig, (ax_sep, ax_signs) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for k, name in enumerate(procedures):
        off = (k - (len(procedures) - 1) / 2) * 0.08
        sep = [r.rows[name].mean_sep for r in reports]
        sep_err = [1.96 * r.rows[name].se_sep for r in reports]
        ax_sep.errorbar(x + off, sep, yerr=sep_err, fmt="o", capsize=3, label=name)
        signs = [r.rows[name].mean_signs for r in reports]
        signs_err = [1.96 * r.rows[name].se_signs for r in reports]
        ax_signs.errorbar(x + off, signs, yerr=signs_err, fmt="o", capsize=3, label=name)
    ax_sep.set_ylabel("mean SEP (±1.96 SE)")
    ax_sep.legend()
    ax_signs.set_ylabel("mean signs inferred (±1.96 SE)")
    ax_signs.set_xticks(x)
    ax_signs.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_simulate(args) -> int:
    seed = args.seed
    if seed is None:
        env = os.environ.get("SIGNGATE_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ValueError(f"SIGNGATE_SEED must be an integer, got {env!r}") from None
    if args.replicates is not None and args.replicates < 1:
        raise ValueError(f"--replicates must be >= 1, got {args.replicates}")
    if args.workers < 1:
        raise ValueError(f"--workers must be >= 1, got {args.workers}")

    scenarios = load_scenarios(args.scenario, replicates=args.replicates, seed=seed)
    reports = [run_scenario(sc, workers=args.workers) for sc in scenarios]
    _write_text(args.output, reports_to_csv(reports))
    if args.plot is not None:
        _write_plot(reports, args.plot)
    return 0


_TABLE1_ALPHA = 0.05
# Reference s = 1/2 row (MSER percent, MSDR) used to select the effect
# scale convention; the published table's endpoints are twice the
# z-unit values, so the search tries scale factors 1 and 2.
_TABLE1_TARGET = (3.01, 0.189)
_TABLE1_TOL = (0.1, 0.003)


def cmd_table1(args) -> int:
    best = None
    for kappa in (1.0, 2.0):
        G = ShiftedChiSq(3.0, 3.0).scaled(1.0 / kappa)
        rt = rate_triple(G, AcceptanceRegion(_TABLE1_ALPHA, 0.5))
        score = abs(100.0 * rt.mser - _TABLE1_TARGET[0]) / _TABLE1_TOL[0] + abs(
            rt.msdr - _TABLE1_TARGET[1]
        ) / _TABLE1_TOL[1]
        if best is None or score < best[0]:
            best = (score, kappa, G, rt)
    _, kappa, G, rt_u = best

    if (
        abs(100.0 * rt_u.mser - _TABLE1_TARGET[0]) > _TABLE1_TOL[0]
        or abs(rt_u.msdr - _TABLE1_TARGET[1]) > _TABLE1_TOL[1]
    ):
        print(
            "warning: no effect-scale convention matches the reference row; "
            f"emitting closest (scale {kappa:g})",
            file=sys.stderr,
        )

    rows = [("s_U", 0.5, rt_u)]
    s_d = optimize_s(G, _TABLE1_ALPHA, "maximize-msdr")
    rows.append(("s_D", s_d, rate_triple(G, AcceptanceRegion(_TABLE1_ALPHA, s_d))))
    s_e = optimize_s(G, _TABLE1_ALPHA, "minimize-mser")
    rows.append(("s_E", s_e, rate_triple(G, AcceptanceRegion(_TABLE1_ALPHA, s_e))))

    lines = ["row,s,lower,upper,scaled_lower,scaled_upper,mser_percent,msdr"]
    for name, s, rt in rows:
        region = AcceptanceRegion(_TABLE1_ALPHA, s)
        lines.append(
            f"{name},{_fmt(s)},{_fmt(region.l)},{_fmt(region.u)},"
            f"{_fmt(kappa * region.l)},{_fmt(kappa * region.u)},"
            f"{_fmt(100.0 * rt.mser)},{_fmt(rt.msdr)}"
        )
    _write_text(args.output, "\n".join(lines) + "\n")
    print(
        f"effect-scale convention: {kappa:g} "
        f"(scaled endpoint columns are z-units times {kappa:g})",
        file=sys.stderr,
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signgate",
        description="Adaptive sign-error-rate control for many normal means.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser("infer", help="decide signs for observed statistics")
    p_infer.add_argument("--input", required=True, help="input file path")
    p_infer.add_argument(
        "--csv",
        metavar="COL",
        help="read a CSV column (integer index or header name) instead of one value per line",
    )
    p_infer.add_argument(
        "--procedure",
        required=True,
        choices=["by", "lc", "nlc", "tce", "fixed-alpha"],
    )
    p_infer.add_argument("--alpha-s", type=float, default=0.1, help="target level (default 0.1)")
    p_infer.add_argument("--alpha", type=float, help="fixed-alpha only: region level")
    p_infer.add_argument("--s", type=float, help="fixed-alpha only: tail split (default 0.5)")
    p_infer.add_argument(
        "--model",
        choices=["ald0"],
        default="ald0",
        help="tce only: effect model (zero-location asymmetric Laplace)",
    )
    p_infer.add_argument("--output", help="decision CSV path (default stdout)")
    p_infer.set_defaults(func=cmd_infer)

    p_sim = sub.add_parser("simulate", help="run a scenario file")
    p_sim.add_argument("--scenario", required=True, help="scenario config path (TOML)")
    p_sim.add_argument("--replicates", type=int, help="override replicate count")
    p_sim.add_argument(
        "--seed", type=int, help="override master seed (default: SIGNGATE_SEED, then config)"
    )
    p_sim.add_argument("--workers", type=int, default=1, help="parallel workers (default 1)")
    p_sim.add_argument("--output", help="report CSV path (default stdout)")
    p_sim.add_argument("--plot", metavar="SVG", help="also write point plots with 1.96 SE bars")
    p_sim.set_defaults(func=cmd_simulate)

    p_tab = sub.add_parser(
        "table1", help="acceptance-region comparison for centered chi-square effects"
    )
    p_tab.add_argument("--output", help="CSV path (default stdout)")
    p_tab.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SignGateError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
