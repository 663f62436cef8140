"""Command-line interface.

Subcommands
-----------
kappa     select the KDE concentration maximizing the determinant criterion
fit       fit per-gene harmonic regressions (optionally density-weighted)
screen    Wald/F rhythm screening over a panel
compare   no-intercept slope of weighted vs unweighted statistics
simulate  phase-sweep Monte Carlo study

Every command writes delimited output plus, where applicable, an SVG
figure into --out, along with a metadata.json echoing the effective
option values.  Option precedence is flags > config file (key=value
lines) > built-in defaults.

Exit codes: 0 success, 2 ingestion error, 3 numeric/degenerate-design
error, 4 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .basis import theta_to_amplitude_phase
from .design import (
    compute_weights,
    d_criterion_for_kappa,
    d_optimal_bound,
    information_matrix,
    select_kappa,
)
from .errors import (
    DegenerateDesignError,
    IngestionError,
    InsufficientDataError,
    InvalidArgumentError,
    SearchFailureError,
    SingularCriterionError,
    UndefinedSlopeError,
    UndefinedStatisticError,
    WcosinorError,
)
from .inference import F_MODE_CLASSICAL, F_MODE_PAPER, screen_panel
from .kde import CircularKde, loo_folds, make_folds
from .panel import format_float, ingest_csv, read_time_csv
from .regression import fit_panel
from .simulate import ARMS, RunConfig, default_phase_grid, make_setting, run_sweep

EXIT_OK = 0
EXIT_INGESTION = 2
EXIT_NUMERIC = 3
EXIT_CONFIG = 4

_NUMERIC_ERRORS = (
    DegenerateDesignError,
    InsufficientDataError,
    SingularCriterionError,
    SearchFailureError,
    UndefinedSlopeError,
    UndefinedStatisticError,
    np.linalg.LinAlgError,
)


class _UsageError(Exception):
    """Raised for malformed flags/config; mapped to exit code 4."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


@dataclass(frozen=True)
class ComparisonResult:
    """No-intercept regression of weighted on unweighted statistics."""

    beta: float
    n_weighted_greater: int
    n_weighted_not_greater: int
    pairs: tuple


def compare_statistics(unweighted, weighted):
    """Slope beta = sum(u*w)/sum(u^2) plus greater/not-greater counts.

    Raises UndefinedSlopeError when every unweighted statistic is zero.
    """
    u = np.asarray(unweighted, dtype=float)
    w = np.asarray(weighted, dtype=float)
    if u.shape != w.shape or u.ndim != 1 or u.size < 1:
        raise InvalidArgumentError("need matching nonempty statistic vectors")
    denom = float(np.sum(u * u))
    if denom == 0.0:
        raise UndefinedSlopeError("every unweighted statistic is zero")
    beta = float(np.sum(u * w)) / denom
    greater = int(np.sum(w > u))
    return ComparisonResult(
        beta=beta,
        n_weighted_greater=greater,
        n_weighted_not_greater=int(u.size - greater),
        pairs=tuple(zip(u.tolist(), w.tolist())),
    )


# ---------------------------------------------------------------------------
# option plumbing: flags > config file > defaults
# ---------------------------------------------------------------------------

def _parse_kappa_grid(text):
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise _UsageError(f"--kappa-grid expects lo:hi:n, got {text!r}") from None


def _parse_folds(text):
    if text == "loo":
        return "loo"
    try:
        m = int(text)
    except ValueError:
        raise _UsageError(f"--folds expects 'loo' or an integer, got {text!r}") from None
    if m < 1:
        raise _UsageError(f"--folds must be >= 1, got {m}")
    return m


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise _UsageError(f"expected a boolean, got {text!r}")


_OPTION_PARSERS = {
    "order": int,
    "weighted": _parse_bool,
    "folds": _parse_folds,
    "kappa_grid": _parse_kappa_grid,
    "kappa_refine": int,
    "trials": int,
    "seed": int,
    "f_mode": str,
    "rows": str,
    "mode": str,
    "statistic": str,
    "setting": int,
    "n_times": int,
    "time_source": str,
    "phase_points": int,
}

_DEFAULTS = {
    "order": 1,
    "weighted": False,
    "folds": "loo",
    "kappa_grid": (1e-3, 1e3, 60),
    "kappa_refine": 40,
    "trials": 500,
    "seed": 0,
    "f_mode": F_MODE_PAPER,
    "rows": "samples",
    "mode": "unweighted",
    "statistic": "wald",
    "setting": 1,
    "n_times": 50,
    "time_source": "vonmises:0,1",
    "phase_points": 20,
}


def _read_config_file(path):
    """Parse a simple key=value config file into raw string values."""
    raw = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in _OPTION_PARSERS:
            raise _UsageError(f"{path}:{lineno}: unknown option {key!r}")
        raw[key] = value.strip()
    return raw


def _effective_options(args, names):
    """Merge flag values, config-file values, and defaults for ``names``."""
    cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}
    out = {}
    for name in names:
        flag_val = getattr(args, name, None)
        if flag_val is not None:
            out[name] = flag_val
        elif name in cfg:
            out[name] = _OPTION_PARSERS[name](cfg[name])
        else:
            out[name] = _DEFAULTS[name]
    return out


def _metadata_value(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def _write_metadata(out_dir, command, options, inputs):
    meta = {
        "command": command,
        "options": {k: _metadata_value(v) for k, v in sorted(options.items())},
        "inputs": {k: str(v) for k, v in sorted(inputs.items())},
    }
    with open(out_dir / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_folds(folds_opt, n, seed):
    if folds_opt == "loo":
        return loo_folds(n)
    if folds_opt > n:
        raise _UsageError(f"--folds {folds_opt} exceeds the sample count {n}")
    return make_folds(n, folds_opt, seed)


def _load_times(args, opts):
    if getattr(args, "times", None):
        return read_time_csv(args.times), {"times": args.times}
    if getattr(args, "panel", None):
        panel = ingest_csv(args.panel, layout=opts["rows"])
        return panel.times, {"panel": args.panel}
    raise _UsageError("provide --times or --panel")


def _weighted_pipeline(times, opts):
    """Shared weighted-mode plumbing: folds -> kappa search -> weights."""
    lo, hi, n_grid = opts["kappa_grid"]
    fold_of = _resolve_folds(opts["folds"], times.size, opts["seed"])
    search = select_kappa(
        times,
        opts["order"],
        fold_of,
        kappa_lo=lo,
        kappa_hi=hi,
        n_grid=n_grid,
        n_refine=opts["kappa_refine"],
    )
    weights = compute_weights(times, CircularKde(times, search.kappa_opt))
    return search, weights


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_kappa(args):
    opts = _effective_options(
        args, ["order", "folds", "kappa_grid", "kappa_refine", "seed", "rows"]
    )
    times, inputs = _load_times(args, opts)
    search, _ = _weighted_pipeline(times, opts)
    unweighted = float(
        np.linalg.det(information_matrix(times, None, opts["order"]))
    )

    out = _out_dir(args)
    with open(out / "kappa_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kappa", "criterion"])
        for kap, val in search.trace:
            writer.writerow([format_float(kap), format_float(val)])
    result = {
        "kappa_opt": search.kappa_opt,
        "criterion_value": search.criterion_value,
        "bound": search.bound,
        "unweighted_criterion": unweighted,
        "n_samples": int(times.size),
        "order": opts["order"],
    }
    with open(out / "kappa_result.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .plots import plot_kappa_trace

    plot_kappa_trace(search.trace, search.bound, unweighted, out / "kappa_trace.svg")
    _write_metadata(out, "kappa", opts, inputs)
    print(
        f"kappa_opt={search.kappa_opt:.6g} criterion={search.criterion_value:.6g} "
        f"bound={search.bound:.6g} unweighted={unweighted:.6g}"
    )
    return EXIT_OK


def _fit_record(gene_id, trig_fit, kappa):
    ap = theta_to_amplitude_phase(trig_fit.theta)
    rec = {
        "gene": str(gene_id),
        "theta": [float(v) for v in trig_fit.theta],
        "mesor": ap.mesor,
        "harmonics": [
            {"amplitude": float(a), "phase": float(p)}
            for a, p in zip(ap.amplitudes, ap.phases)
        ],
        "sigma2": float(trig_fit.sigma2),
        "flags": [],
    }
    if kappa is not None:
        rec["kappa"] = float(kappa)
    return rec


def _cmd_fit(args):
    opts = _effective_options(
        args,
        ["order", "weighted", "folds", "kappa_grid", "kappa_refine", "seed", "rows"],
    )
    panel = ingest_csv(args.panel, layout=opts["rows"])
    if panel.n_genes < 1:
        raise IngestionError(f"{args.panel}: no usable genes after ingestion")
    kappa = None
    weights = None
    if opts["weighted"]:
        search, weights = _weighted_pipeline(panel.times, opts)
        kappa = search.kappa_opt

    records = []
    fits = fit_panel(panel.times, panel.expr, weights=weights, k=opts["order"])
    for gene_id, trig_fit in zip(panel.gene_ids, fits):
        records.append(_fit_record(gene_id, trig_fit, kappa))

    out = _out_dir(args)
    with open(out / "fits.json", "w") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if opts["weighted"]:
        # weights are shared across genes; summarize them once per run
        opts = dict(
            opts,
            kappa_opt=kappa,
            weight_min=float(weights.min()),
            weight_max=float(weights.max()),
            weight_ess=float(1.0 / np.sum(weights ** 2)),
        )
    _write_metadata(
        out,
        "fit",
        opts,
        {"panel": args.panel, "genes_dropped": panel.provenance["n_dropped"]},
    )
    print(f"fitted {len(records)} gene(s) -> {out / 'fits.json'}")
    return EXIT_OK


def _screen_rows(panel, k, f_mode, weights):
    reports = screen_panel(panel, weights=weights, k=k, f_mode=f_mode)
    return {r.gene_id: r for r in reports}, reports


def _cmd_screen(args):
    opts = _effective_options(
        args,
        ["order", "mode", "f_mode", "folds", "kappa_grid", "kappa_refine", "seed", "rows"],
    )
    if opts["mode"] not in ("unweighted", "weighted", "both"):
        raise _UsageError(f"--mode must be unweighted|weighted|both, got {opts['mode']!r}")
    panel = ingest_csv(args.panel, layout=opts["rows"])
    if panel.n_genes < 1:
        raise IngestionError(f"{args.panel}: no usable genes after ingestion")

    kappa = None
    weights = None
    if opts["mode"] in ("weighted", "both"):
        search, weights = _weighted_pipeline(panel.times, opts)
        kappa = search.kappa_opt

    out = _out_dir(args)
    path = out / "screen.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if opts["mode"] == "both":
            _, unw = _screen_rows(panel, opts["order"], opts["f_mode"], None)
            _, wtd = _screen_rows(panel, opts["order"], opts["f_mode"], weights)
            writer.writerow(
                [
                    "gene",
                    "unweighted_wald_stat",
                    "unweighted_wald_p",
                    "unweighted_f_stat",
                    "unweighted_f_p",
                    "unweighted_flags",
                    "weighted_wald_stat",
                    "weighted_wald_p",
                    "weighted_f_stat",
                    "weighted_f_p",
                    "weighted_flags",
                ]
            )
            for ru, rw in zip(unw, wtd):
                writer.writerow(
                    [
                        ru.gene_id,
                        format_float(ru.wald_stat),
                        format_float(ru.wald_p),
                        format_float(ru.f_stat),
                        format_float(ru.f_p),
                        ";".join(ru.flags),
                        format_float(rw.wald_stat),
                        format_float(rw.wald_p),
                        format_float(rw.f_stat),
                        format_float(rw.f_p),
                        ";".join(rw.flags),
                    ]
                )
        else:
            use_w = weights if opts["mode"] == "weighted" else None
            _, reports = _screen_rows(panel, opts["order"], opts["f_mode"], use_w)
            writer.writerow(
                [
                    "gene",
                    "wald_stat",
                    "wald_df",
                    "wald_p",
                    "f_stat",
                    "f_d1",
                    "f_d2",
                    "f_p",
                    "flags",
                ]
            )
            for r in reports:
                writer.writerow(
                    [
                        r.gene_id,
                        format_float(r.wald_stat),
                        r.wald_df,
                        format_float(r.wald_p),
                        format_float(r.f_stat),
                        r.f_d1,
                        r.f_d2,
                        format_float(r.f_p),
                        ";".join(r.flags),
                    ]
                )
    inputs = {"panel": args.panel, "genes_dropped": panel.provenance["n_dropped"]}
    if kappa is not None:
        opts = dict(opts, kappa_opt=kappa)
    _write_metadata(out, "screen", opts, inputs)
    print(f"screened {panel.n_genes} gene(s) -> {path}")
    return EXIT_OK


def _cmd_compare(args):
    opts = _effective_options(args, ["statistic"])
    stat = opts["statistic"]
    if stat not in ("wald", "f"):
        raise _UsageError(f"--statistic must be wald or f, got {stat!r}")
    ucol = f"unweighted_{stat}_stat"
    wcol = f"weighted_{stat}_stat"
    try:
        with open(args.table, newline="") as fh:
            reader = csv.DictReader(fh)
            have = reader.fieldnames or []
            if ucol not in have or wcol not in have:
                raise IngestionError(
                    f"{args.table}: expected both-mode screening columns "
                    f"({ucol!r}, {wcol!r})"
                )
            u, w = [], []
            for row in reader:
                try:
                    uv, wv = float(row[ucol]), float(row[wcol])
                except (TypeError, ValueError, KeyError):
                    continue
                if math.isfinite(uv) and math.isfinite(wv):
                    u.append(uv)
                    w.append(wv)
    except OSError as exc:
        raise IngestionError(f"cannot read {args.table}: {exc}") from exc
    if not u:
        raise IngestionError(f"{args.table}: no finite statistic pairs")

    result = compare_statistics(u, w)
    out = _out_dir(args)
    payload = {
        "statistic": stat,
        "beta": result.beta,
        "n_weighted_greater": result.n_weighted_greater,
        "n_weighted_not_greater": result.n_weighted_not_greater,
        "n_total": len(u),
    }
    with open(out / "comparison.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .plots import plot_comparison

    plot_comparison(u, w, result.beta, out / "comparison.svg", statistic=stat)
    _write_metadata(out, "compare", opts, {"table": args.table})
    print(
        f"beta={result.beta:.6g} weighted>unweighted for "
        f"{result.n_weighted_greater}/{len(u)} gene(s)"
    )
    return EXIT_OK


def _cmd_simulate(args):
    opts = _effective_options(
        args,
        [
            "setting",
            "order",
            "trials",
            "seed",
            "f_mode",
            "n_times",
            "time_source",
            "phase_points",
            "kappa_grid",
            "kappa_refine",
        ],
    )
    source = opts["time_source"]
    inputs = {}
    if getattr(args, "times", None):
        source = f"file:{args.times}"
        inputs["times"] = args.times
    setting = make_setting(opts["setting"], time_source=source, n_times=opts["n_times"])
    lo, hi, n_grid = opts["kappa_grid"]
    config = RunConfig(
        k=opts["order"],
        phase_grid=default_phase_grid(opts["phase_points"]),
        trials=opts["trials"],
        seed=opts["seed"],
        f_mode=opts["f_mode"],
        kappa_lo=lo,
        kappa_hi=hi,
        kappa_grid_points=n_grid,
        kappa_refine_points=opts["kappa_refine"],
    )
    summary = run_sweep(setting, config)

    out = _out_dir(args)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["phase_index", "phase_radians", "arm", "mean_wald_over_n", "mean_f"]
        )
        for j, phase in enumerate(summary.phases, start=1):
            for arm in ARMS:
                writer.writerow(
                    [
                        j,
                        format_float(phase),
                        arm,
                        format_float(summary.mean_wald_over_n[arm][j - 1]),
                        format_float(summary.mean_f[arm][j - 1]),
                    ]
                )
    cov_payload = {
        "cov": {
            f"{arm}.{stat}": summary.cov[(arm, stat)]
            for arm, stat in sorted(summary.cov)
        },
        "kappa_opt": summary.kappa_opt,
        "kappa_criterion": summary.kappa_criterion,
        "error_counts": dict(sorted(summary.error_counts.items())),
        "n_times": summary.n_times,
        "setting": summary.setting_id,
    }
    with open(out / "cov.json", "w") as fh:
        json.dump(cov_payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    from .plots import plot_phase_sweep

    plot_phase_sweep(summary, out / "sweep.svg")
    _write_metadata(out, "simulate", dict(opts, time_source=source), inputs)
    for arm in ARMS:
        print(
            f"{arm}: cov_wald={summary.cov[(arm, 'wald')]:.4g} "
            f"cov_f={summary.cov[(arm, 'f')]:.4g}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub, *, panel=False, times=False, out=True):
    sub.add_argument("--config", help="key=value config file")
    if panel:
        sub.add_argument("--panel", required=panel == "required", help="panel CSV")
        sub.add_argument(
            "--rows", choices=("samples", "genes"), help="panel layout (default samples)"
        )
    if times:
        sub.add_argument("--times", help="time-vector CSV (time_hours column)")
    if out:
        sub.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = _Parser(prog="wcosinor", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("kappa", help="select the KDE concentration")
    _add_common(p, panel=True, times=True)
    p.add_argument("--order", type=int, help="harmonic order (default 1)")
    p.add_argument("--folds", type=_parse_folds, help="'loo' or a fold count")
    p.add_argument("--kappa-grid", dest="kappa_grid", type=_parse_kappa_grid,
                   help="search grid lo:hi:n")
    p.add_argument("--kappa-refine", dest="kappa_refine", type=int,
                   help="refinement evaluation budget")
    p.add_argument("--seed", type=int, help="seed for random fold partitions")
    p.set_defaults(func=_cmd_kappa)

    p = subs.add_parser("fit", help="fit per-gene harmonic regressions")
    _add_common(p, panel="required")
    p.add_argument("--order", type=int, help="harmonic order (default 1)")
    p.add_argument("--weighted", action="store_const", const=True, default=None,
                   help="use density-derived weights")
    p.add_argument("--folds", type=_parse_folds, help="'loo' or a fold count")
    p.add_argument("--kappa-grid", dest="kappa_grid", type=_parse_kappa_grid)
    p.add_argument("--kappa-refine", dest="kappa_refine", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_fit)

    p = subs.add_parser("screen", help="Wald/F screening over a panel")
    _add_common(p, panel="required")
    p.add_argument("--order", type=int, help="harmonic order (default 1)")
    p.add_argument("--mode", choices=("unweighted", "weighted", "both"))
    p.add_argument("--f-mode", dest="f_mode", choices=(F_MODE_PAPER, F_MODE_CLASSICAL))
    p.add_argument("--folds", type=_parse_folds)
    p.add_argument("--kappa-grid", dest="kappa_grid", type=_parse_kappa_grid)
    p.add_argument("--kappa-refine", dest="kappa_refine", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_screen)

    p = subs.add_parser("compare", help="weighted-vs-unweighted slope")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--table", required=True, help="both-mode screening CSV")
    p.add_argument("--statistic", choices=("wald", "f"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare)

    p = subs.add_parser("simulate", help="phase-sweep Monte Carlo study")
    _add_common(p, times=True)
    p.add_argument("--setting", type=int, help="study setting 1..7 (default 1)")
    p.add_argument("--order", type=int, help="harmonic order (default 1)")
    p.add_argument("--trials", type=int, help="trials per phase (default 500)")
    p.add_argument("--seed", type=int)
    p.add_argument("--f-mode", dest="f_mode", choices=(F_MODE_PAPER, F_MODE_CLASSICAL))
    p.add_argument("--n-times", dest="n_times", type=int,
                   help="synthetic time-vector length (default 50)")
    p.add_argument("--time-source", dest="time_source",
                   help="equispaced | vonmises:MU,KAPPA | mixture:... | file:PATH")
    p.add_argument("--phase-points", dest="phase_points", type=int,
                   help="phase grid size (default 20)")
    p.add_argument("--kappa-grid", dest="kappa_grid", type=_parse_kappa_grid)
    p.add_argument("--kappa-refine", dest="kappa_refine", type=int)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except WcosinorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
