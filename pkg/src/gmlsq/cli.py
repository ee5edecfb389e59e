"""Command-line frontend.

Subcommands: fit, predict, bench, noise-sweep, learning-curve, param-sweep.
Kernel and influence flags use compact name:param syntax (linear, rbf:2.0,
gaussian:0.5, ...); value lists accept start:step:stop ranges or
comma-separated values. Exit codes: 0 success, 1 usage error (one-line
diagnostic on stderr), 2 data or solver error (one JSON diagnostic line on
stderr). Relative --out paths are placed under $GMLSQ_OUT_DIR when that
variable is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import bench, figures
from .bench import GridSpec, Protocol
from .data import load_csv
from .errors import GmlsqError, ParseError
from .kernels import InfluenceSpec, KernelSpec
from .models import (
    ModelParams,
    fit_lssvm,
    fit_mimm,
    fit_wimm,
    load_model,
    predict,
    save_model,
    training_residuals,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not math.isfinite(value) or value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive real, got {text}")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not math.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative real, got {text}")
    return value


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return value


def _parse_kernel(text: str) -> KernelSpec:
    name, sep, param = text.partition(":")
    try:
        if name == "linear":
            if sep:
                raise ValueError("linear kernel takes no parameter")
            return KernelSpec("linear")
        if name == "rbf":
            if not sep:
                raise ValueError("rbf kernel needs a parameter, e.g. rbf:2.0")
            return KernelSpec("rbf", sigma=float(param))
        raise ValueError(f"unknown kernel {name!r} (choose linear or rbf:SIGMA)")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_influence(text: str) -> InfluenceSpec:
    name, sep, param = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(
            f"influence needs name:param syntax (e.g. gaussian:1.0), got {text!r}"
        )
    try:
        return InfluenceSpec(name, float(param))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _parse_influence_variant(text: str) -> str:
    if text not in bench.INFLUENCE_VARIANTS:
        raise argparse.ArgumentTypeError(
            f"unknown influence variant {text!r} (choose from {', '.join(bench.INFLUENCE_VARIANTS)})"
        )
    return text


def _float_range(start: float, step: float, stop: float) -> tuple:
    if step <= 0:
        raise argparse.ArgumentTypeError("range step must be positive")
    if stop < start:
        raise argparse.ArgumentTypeError("range stop must be >= start")
    values = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-9 * max(1.0, abs(stop)):
            break
        values.append(round(v, 12))
        k += 1
    return tuple(values)


def _parse_values(text: str) -> tuple:
    """start:step:stop range, or comma-separated values, or one value."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise argparse.ArgumentTypeError(
                    f"ranges use start:step:stop, got {text!r}"
                )
            return _float_range(float(parts[0]), float(parts[1]), float(parts[2]))
        return tuple(float(p) for p in text.split(",") if p != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse value list {text!r}") from None


def _parse_label_column(text: str):
    if text == "last":
        return "last"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f'label column must be an integer index or "last", got {text!r}'
        ) from None


def _resolve_out(path: str) -> str:
    base = os.environ.get("GMLSQ_OUT_DIR")
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, metavar="CSV", help="dataset file (CSV, UTF-8)")
    p.add_argument("--has-header", action="store_true", help="skip the first row")
    p.add_argument("--label-column", type=_parse_label_column, default="last",
                   metavar="IDX", help='0-based label column index, or "last" (default)')
    p.add_argument("--positive-label", default="auto", metavar="LABEL",
                   help='raw label mapped to +1; "auto" picks the lexicographically larger')


def _add_protocol_flags(p: argparse.ArgumentParser, train_fraction: float) -> None:
    p.add_argument("--train-fraction", type=_fraction, default=train_fraction,
                   metavar="F", help=f"stratified train fraction in (0,1), default {train_fraction}")
    p.add_argument("--trials", type=int, default=5, metavar="T",
                   help="independent repetitions per configuration (default 5)")
    p.add_argument("--seed", type=int, default=0, metavar="S",
                   help="base seed; trial t uses seed S + t (default 0)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="J",
                   help="worker threads for independent cells (default: CPU count; 1 = serial)")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, metavar="PATH", help="report output path")
    p.add_argument("--format", choices=("json", "csv", "both"), default="json",
                   help="report format (default json)")
    p.add_argument("--plot", action="store_true",
                   help="also render a figure next to the report")


def _load_dataset(args):
    return load_csv(args.data, has_header=args.has_header,
                    label_column=args.label_column, positive_label=args.positive_label)


def _require_influence(args, parser: argparse.ArgumentParser) -> None:
    if args.model != "lssvm" and args.influence is None:
        parser.error(f"--influence is required for model {args.model!r}")


def _write_reports(reports, args) -> list[str]:
    out = _resolve_out(args.out)
    if args.format in ("json", "csv"):
        bench.write_report(reports, out, args.format)
        return [out]
    # both: JSON at --out, CSV alongside it
    bench.write_report(reports, out, "json")
    csv_path = os.path.splitext(out)[0] + ".csv"
    bench.write_report(reports, csv_path, "csv")
    return [out, csv_path]


def _sweep_lines(reports) -> str:
    lines = []
    for r in reports:
        c = r.best_by_test
        lines.append(
            f"{r.sweep_axis} = {r.sweep_value:g}: "
            f"train {100 * c.mean_train:6.2f} ± {100 * c.std_train:5.2f} %, "
            f"test {100 * c.mean_test:6.2f} ± {100 * c.std_test:5.2f} %"
            + (f", {c.n_singular} singular" if c.n_singular else "")
        )
    return "\n".join(lines)


def _fixed_params(args) -> dict:
    kernel = args.kernel
    iparam = args.influence.param if args.influence is not None else None
    return bench.make_params(args.gamma, args.lam, kernel.sigma, iparam)


def _cmd_fit(args, parser) -> int:
    _require_influence(args, parser)
    ds = _load_dataset(args)
    standardize = not args.no_standardize
    if args.model == "lssvm":
        model = fit_lssvm(ds.X, ds.y, args.kernel, args.gamma, standardize=standardize)
    else:
        params = ModelParams(gamma=args.gamma, lam=args.lam)
        fit = fit_wimm if args.model == "wimm" else fit_mimm
        model = fit(ds.X, ds.y, args.kernel, args.influence, params, standardize=standardize)
    out = _resolve_out(args.out)
    save_model(model, out)
    train_acc = float(np.mean(predict(model, ds.X) == ds.y))
    residual = float(np.max(np.abs(training_residuals(model))))
    print(f"fitted {model.kind} on {ds.name}: m = {ds.m}, n = {ds.n}")
    print(f"train accuracy {100 * train_acc:.2f} %, max constraint residual {residual:.3e}")
    print(f"model written to {out}")
    return 0


def _read_unlabeled(path: str, has_header: bool) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise GmlsqError(f"cannot read {path}: {exc}") from exc
    start = 1 if has_header else 0
    out = []
    for i, row in enumerate(rows):
        if i < start or not row:
            continue
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(i + 1, j + 1, f"cannot parse {cell!r} as a real number") from None
        out.append(parsed)
    if not out:
        raise GmlsqError(f"{path}: no data rows")
    return np.asarray(out, dtype=np.float64)


def _cmd_predict(args, parser) -> int:
    model = load_model(args.model_file)
    labels = None
    if args.no_labels:
        features = _read_unlabeled(args.data, args.has_header)
    else:
        ds = _load_dataset(args)
        features, labels = ds.X, ds.y
    preds = predict(model, features)
    out = _resolve_out(args.out)
    try:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["prediction"])
            for v in preds:
                writer.writerow([int(v)])
    except OSError as exc:
        raise GmlsqError(f"cannot write {out}: {exc}") from exc
    print(f"{model.kind}: {preds.shape[0]} predictions written to {out}")
    if labels is not None:
        acc = float(np.mean(preds == labels))
        print(f"accuracy against file labels: {100 * acc:.2f} %")
    return 0


def _cmd_bench(args, parser) -> int:
    ds = _load_dataset(args)
    grid = GridSpec(
        gamma_grid=args.gamma_grid,
        lambda_grid=args.lambda_grid,
        kernel_param_grid=args.sigma_grid,
        influence_param_grid=args.influence_grid,
    )
    protocol = Protocol(train_fraction=args.train_fraction, trials=args.trials,
                        base_seed=args.seed)
    if args.model == "all":
        models = bench.MODEL_KINDS
    elif args.model == "lssvm":
        models = ("lssvm",)
    else:
        models = ("lssvm", args.model)
    reports = bench.bench_suite(ds, args.kernel.variant, grid, protocol,
                                models=models, influences=args.influences,
                                jobs=args.jobs)
    written = _write_reports(reports, args)
    print(bench.format_table(reports), end="")
    if args.plot:
        fig = figures.render_bench_figure(reports, os.path.splitext(written[0])[0] + ".png")
        written.append(fig)
    print(f"report written to {', '.join(written)}")
    return 0


def _run_sweep(args, parser, kind: str) -> int:
    _require_influence(args, parser)
    ds = _load_dataset(args)
    protocol = Protocol(train_fraction=args.train_fraction, trials=args.trials,
                        base_seed=args.seed)
    params = _fixed_params(args)
    variant = args.influence.variant if args.influence is not None else None
    if kind == "noise":
        for f in args.fractions:
            if not 0.0 <= f <= 1.0:
                parser.error(f"--fractions entries must lie in [0, 1], got {f}")
        reports = bench.noise_sweep(ds, args.model, args.kernel.variant, variant,
                                    params, args.fractions, protocol, jobs=args.jobs)
    else:
        for f in args.fractions:
            if not 0.0 < f <= 1.0:
                parser.error(f"--fractions entries must lie in (0, 1], got {f}")
        reports = bench.learning_curve(ds, args.model, args.kernel.variant, variant,
                                       params, args.fractions, protocol, jobs=args.jobs)
    written = _write_reports(reports, args)
    print(_sweep_lines(reports))
    if args.plot:
        fig = figures.render_sweep_figure(reports, os.path.splitext(written[0])[0] + ".png")
        written.append(fig)
    print(f"report written to {', '.join(written)}")
    return 0


def _cmd_noise_sweep(args, parser) -> int:
    return _run_sweep(args, parser, "noise")


def _cmd_learning_curve(args, parser) -> int:
    return _run_sweep(args, parser, "curve")


def _cmd_param_sweep(args, parser) -> int:
    ds = _load_dataset(args)
    if args.model == "lssvm":
        parser.error("param-sweep varies the influence parameter; lssvm has none")
    for v in args.values:
        if v <= 0:
            parser.error(f"--values entries must be positive, got {v}")
    protocol = Protocol(train_fraction=args.train_fraction, trials=args.trials,
                        base_seed=args.seed)
    reports = bench.param_sensitivity(ds, args.model, args.kernel.variant,
                                      args.influence, args.values, args.gamma,
                                      args.lam, protocol, sigma=args.kernel.sigma,
                                      jobs=args.jobs)
    written = _write_reports(reports, args)
    print(_sweep_lines(reports))
    if args.plot:
        fig = figures.render_sweep_figure(reports, os.path.splitext(written[0])[0] + ".png")
        written.append(fig)
    print(f"report written to {', '.join(written)}")
    return 0


def _add_model_flags(p: argparse.ArgumentParser, *, sweep: bool = False) -> None:
    p.add_argument("--model", required=True, choices=("lssvm", "wimm", "mimm"),
                   help="classifier kind")
    p.add_argument("--kernel", type=_parse_kernel, default=KernelSpec("linear"),
                   metavar="K", help="linear (default) or rbf:SIGMA with SIGMA > 0")
    p.add_argument("--gamma", type=_positive_float, default=1.0, metavar="G",
                   help="memory-cost weight, > 0 (default 1)")
    p.add_argument("--lambda", dest="lam", type=_nonnegative_float, default=0.0,
                   metavar="L", help="memory-impact weight, >= 0 (default 0)")
    if not sweep:
        p.add_argument("--influence", type=_parse_influence, default=None, metavar="NAME:P",
                       help="memory influence: gaussian:S, hinge:R, ball:E, or inverse:B "
                            "(required for wimm/mimm)")


def build_parser() -> _Parser:
    parser = _Parser(prog="gmlsq",
                     description="Least-squares kernel classifiers with memory terms "
                                 "(lssvm, wimm, mimm) and a reproducible experiment harness.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit one model and save it as JSON")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--no-standardize", action="store_true",
                   help="train on raw features (default: per-feature z-score)")
    p.add_argument("--out", required=True, metavar="PATH", help="model output path")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("predict", help="classify rows of a CSV with a saved model")
    p.add_argument("--model-file", required=True, metavar="PATH", help="saved model JSON")
    _add_data_flags(p)
    p.add_argument("--no-labels", action="store_true",
                   help="treat every column as a feature (no label column)")
    p.add_argument("--out", required=True, metavar="PATH", help="predictions CSV path")
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("bench", help="grid-search models on one dataset (70/30 protocol)")
    _add_data_flags(p)
    p.add_argument("--model", choices=("lssvm", "wimm", "mimm", "all"), default="all",
                   help="which models to bench (default all; wimm/mimm include lssvm baseline)")
    p.add_argument("--kernel", type=_parse_kernel, default=KernelSpec("linear"),
                   metavar="K", help="linear (default) or rbf (sigma comes from --sigma-grid)")
    p.add_argument("--influences", type=lambda s: tuple(_parse_influence_variant(v) for v in s.split(",")),
                   default=bench.INFLUENCE_VARIANTS, metavar="V[,V...]",
                   help="influence variants to bench (default all four)")
    p.add_argument("--gamma-grid", type=_parse_values, default=bench.DEFAULT_POWER_GRID,
                   metavar="VALS", help="default 2^-6..2^5")
    p.add_argument("--lambda-grid", type=_parse_values, default=bench.DEFAULT_POWER_GRID,
                   metavar="VALS", help="default 2^-6..2^5")
    p.add_argument("--sigma-grid", type=_parse_values, default=bench.DEFAULT_POWER_GRID,
                   metavar="VALS", help="rbf kernel parameter grid, default 2^-6..2^5")
    p.add_argument("--influence-grid", type=_parse_values, default=bench.DEFAULT_POWER_GRID,
                   metavar="VALS", help="influence parameter grid, default 2^-6..2^5")
    _add_protocol_flags(p, 0.7)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("noise-sweep", help="label-noise robustness sweep (80/20 protocol)")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--fractions", type=_parse_values, default=bench.DEFAULT_NOISE_FRACTIONS,
                   metavar="VALS", help="noise fractions, default 0:0.05:0.5")
    _add_protocol_flags(p, 0.8)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_noise_sweep)

    p = sub.add_parser("learning-curve", help="training-size sweep (80/20 protocol)")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--fractions", type=_parse_values, default=bench.DEFAULT_CURVE_FRACTIONS,
                   metavar="VALS", help="training-set fractions, default 0.1:0.1:1.0")
    _add_protocol_flags(p, 0.8)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_learning_curve)

    p = sub.add_parser("param-sweep", help="influence-parameter sensitivity (80/20 protocol)")
    _add_data_flags(p)
    _add_model_flags(p, sweep=True)
    p.add_argument("--influence", type=_parse_influence_variant, required=True,
                   metavar="NAME", help="influence variant whose parameter is swept")
    p.add_argument("--values", type=_parse_values, default=bench.DEFAULT_SENSITIVITY_VALUES,
                   metavar="VALS", help="influence parameter values, default 0.1:0.1:2.0")
    _add_protocol_flags(p, 0.8)
    _add_output_flags(p)
    p.set_defaults(handler=_cmd_param_sweep)

    return parser


def _emit_error(exc: BaseException) -> None:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        doc["row"] = exc.row
        doc["col"] = exc.col
    report = getattr(exc, "report", None)
    if report is not None and report.condition_estimate is not None:
        cond = report.condition_estimate
        doc["condition_estimate"] = cond if math.isfinite(cond) else None
    print(json.dumps(doc), file=sys.stderr)


def run(argv=None) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args, parser)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    except GmlsqError as exc:
        _emit_error(exc)
        return 2
    except Exception as exc:  # never crash with a traceback on bad input
        _emit_error(exc)
        return 2


def main() -> None:
    sys.exit(run())
