"""Experiment orchestration: repeated trials, grid search, and sweeps.

Every experiment follows the same trial scheme: trial t splits the dataset
with seed ``base_seed + t``, optionally perturbs the training half (label
noise, subsampling), standardizes, fits, and scores both halves. Noise and
subsample seeds are derived from the trial seed before any work runs, so
reports are pure functions of (dataset, protocol, base seed) and parallel
execution cannot change them. Timing fields (every key ending in
``_seconds``) are the one exception and are excluded from determinism
claims; fits and predictions are timed around matrix assembly and solve,
after standardization.

Accuracy statistics use the population standard deviation (divisor m, not
m - 1); every report records this. Grid selection maximizes mean test
accuracy, breaking ties by higher mean train accuracy and then by the
lexicographically smallest (gamma, lam, sigma, influence_param) tuple; the
train-selected cell is reported alongside for comparison. Singular fits
score zero accuracy and are counted per cell, never raised.
"""

from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .data import Dataset, SplitSpec, derive_seed, inject_label_noise, stratified_split, subsample
from .errors import IoError, SingularMatrix
from .kernels import InfluenceSpec, KernelSpec
from .models import ModelParams, Standardizer, fit_lssvm, fit_mimm, fit_wimm, predict

MODEL_KINDS = ("lssvm", "wimm", "mimm")
INFLUENCE_VARIANTS = ("gaussian", "hinge", "ball", "inverse")

DEFAULT_POWER_GRID = tuple(2.0**i for i in range(-6, 6))
DEFAULT_NOISE_FRACTIONS = tuple(round(0.05 * i, 2) for i in range(11))
DEFAULT_CURVE_FRACTIONS = tuple(round(0.1 * i, 1) for i in range(1, 11))
DEFAULT_SENSITIVITY_VALUES = tuple(round(0.1 * i, 1) for i in range(1, 21))

_NOISE_SALT = 1
_SUBSAMPLE_SALT = 2

_SELECTION_NOTE = (
    "best = max mean test accuracy; ties by higher mean train accuracy, "
    "then lexicographically smallest (gamma, lam, sigma, influence_param)"
)
_STD_FORMULA = "population"

_PARAM_KEYS = ("gamma", "lam", "sigma", "influence_param")


def make_params(gamma: float, lam: float = 0.0, sigma: float | None = None,
                influence_param: float | None = None) -> dict:
    """Parameter cell in canonical key order (stable across runs)."""
    return {"gamma": float(gamma), "lam": float(lam),
            "sigma": None if sigma is None else float(sigma),
            "influence_param": None if influence_param is None else float(influence_param)}


def _lex_key(params: dict) -> tuple:
    return tuple(0.0 if params[k] is None else params[k] for k in _PARAM_KEYS)


@dataclass(frozen=True)
class GridSpec:
    """Parameter grids; an empty grid marks an axis a model never uses."""

    gamma_grid: tuple = DEFAULT_POWER_GRID
    lambda_grid: tuple = DEFAULT_POWER_GRID
    kernel_param_grid: tuple = DEFAULT_POWER_GRID
    influence_param_grid: tuple = DEFAULT_POWER_GRID

    def __post_init__(self):
        if len(self.gamma_grid) == 0:
            raise ValueError("gamma grid must not be empty")
        for name, grid, low in (
            ("gamma", self.gamma_grid, 0.0),
            ("lambda", self.lambda_grid, -1.0),
            ("kernel_param", self.kernel_param_grid, 0.0),
            ("influence_param", self.influence_param_grid, 0.0),
        ):
            for v in grid:
                if not np.isfinite(v) or (v <= low if low >= 0 else v < 0):
                    raise ValueError(f"{name} grid entry {v} out of domain")


@dataclass(frozen=True)
class Protocol:
    """Split fraction, trial count, and the base seed all trials derive from."""

    train_fraction: float = 0.7
    trials: int = 5
    base_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    seed: int
    params: dict
    train_size: int
    test_size: int
    train_accuracy: float
    test_accuracy: float
    fit_seconds: float
    predict_seconds: float
    solver_singular: bool

    def to_doc(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "seed": self.seed,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "solver_singular": self.solver_singular,
            "fit_seconds": self.fit_seconds,
            "predict_seconds": self.predict_seconds,
        }


@dataclass(frozen=True)
class CellResult:
    """One parameter tuple's trials plus aggregate statistics."""

    params: dict
    trials: tuple
    mean_train: float
    std_train: float
    mean_test: float
    std_test: float
    mean_fit_seconds: float
    mean_predict_seconds: float
    n_singular: int

    @classmethod
    def from_trials(cls, params: dict, trials: list) -> "CellResult":
        tr = np.array([t.train_accuracy for t in trials])
        te = np.array([t.test_accuracy for t in trials])
        return cls(
            params=params,
            trials=tuple(trials),
            mean_train=float(tr.mean()),
            std_train=float(tr.std()),
            mean_test=float(te.mean()),
            std_test=float(te.std()),
            mean_fit_seconds=float(np.mean([t.fit_seconds for t in trials])),
            mean_predict_seconds=float(np.mean([t.predict_seconds for t in trials])),
            n_singular=sum(1 for t in trials if t.solver_singular),
        )

    def to_doc(self) -> dict:
        return {
            "params": dict(self.params),
            "mean_train_accuracy": self.mean_train,
            "std_train_accuracy": self.std_train,
            "mean_test_accuracy": self.mean_test,
            "std_test_accuracy": self.std_test,
            "n_singular": self.n_singular,
            "mean_fit_seconds": self.mean_fit_seconds,
            "mean_predict_seconds": self.mean_predict_seconds,
            "trials": [t.to_doc() for t in self.trials],
        }


@dataclass(frozen=True)
class ExperimentReport:
    dataset: str
    dataset_m: int
    dataset_n: int
    model: str
    kernel_variant: str
    influence_variant: str | None
    protocol: Protocol
    noise_fraction: float
    subsample_fraction: float
    sweep_axis: str | None
    sweep_value: float | None
    cells: tuple
    best_by_test_index: int
    best_by_train_index: int

    @property
    def best_by_test(self) -> CellResult:
        return self.cells[self.best_by_test_index]

    @property
    def best_by_train(self) -> CellResult:
        return self.cells[self.best_by_train_index]

    def to_doc(self) -> dict:
        head = self.best_by_test
        return {
            "format": "gmlsq-report",
            "version": 1,
            "dataset": self.dataset,
            "dataset_m": self.dataset_m,
            "dataset_n": self.dataset_n,
            "model": self.model,
            "kernel_variant": self.kernel_variant,
            "influence_variant": self.influence_variant,
            "protocol": {
                "train_fraction": self.protocol.train_fraction,
                "trials": self.protocol.trials,
                "base_seed": self.protocol.base_seed,
                "noise_fraction": self.noise_fraction,
                "subsample_fraction": self.subsample_fraction,
                "sweep_axis": self.sweep_axis,
                "sweep_value": self.sweep_value,
                "std_formula": _STD_FORMULA,
                "selection": _SELECTION_NOTE,
            },
            "best_by_test": dict(head.params),
            "best_by_train": dict(self.best_by_train.params),
            "headline": {
                "params": dict(head.params),
                "mean_train_accuracy": head.mean_train,
                "std_train_accuracy": head.std_train,
                "mean_test_accuracy": head.mean_test,
                "std_test_accuracy": head.std_test,
                "n_singular": head.n_singular,
            },
            "cells": [c.to_doc() for c in self.cells],
        }


def _build_kernel(kernel_variant: str, sigma: float | None) -> KernelSpec:
    if kernel_variant == "linear":
        return KernelSpec("linear")
    return KernelSpec("rbf", sigma=sigma)


def _fit_one(kind: str, xs, y, kernel: KernelSpec, influence: InfluenceSpec | None,
             gamma: float, lam: float):
    if kind == "lssvm":
        return fit_lssvm(xs, y, kernel, gamma, standardize=False)
    params = ModelParams(gamma=gamma, lam=lam)
    if kind == "wimm":
        return fit_wimm(xs, y, kernel, influence, params, standardize=False)
    return fit_mimm(xs, y, kernel, influence, params, standardize=False)


def _run_single_trial(ds: Dataset, kind: str, kernel_variant: str,
                      influence_variant: str | None, params: dict,
                      protocol: Protocol, trial_index: int,
                      noise_fraction: float, subsample_fraction: float) -> TrialResult:
    seed = protocol.base_seed + trial_index
    train, test = stratified_split(ds, SplitSpec(protocol.train_fraction, True, seed))
    if noise_fraction > 0.0:
        train = inject_label_noise(train, noise_fraction, derive_seed(seed, _NOISE_SALT))
    if subsample_fraction < 1.0:
        train = subsample(train, subsample_fraction, derive_seed(seed, _SUBSAMPLE_SALT))

    std = Standardizer.fit(train.X)
    xs = std.transform(train.X)
    zs = std.transform(test.X)
    kernel = _build_kernel(kernel_variant, params["sigma"])
    influence = None
    if kind != "lssvm":
        influence = InfluenceSpec(influence_variant, params["influence_param"])

    start = time.perf_counter()
    try:
        model = _fit_one(kind, xs, train.y, kernel, influence, params["gamma"], params["lam"])
    except SingularMatrix:
        return TrialResult(
            trial_index=trial_index, seed=seed, params=params,
            train_size=train.m, test_size=test.m,
            train_accuracy=0.0, test_accuracy=0.0,
            fit_seconds=time.perf_counter() - start, predict_seconds=0.0,
            solver_singular=True,
        )
    fit_seconds = time.perf_counter() - start

    start = time.perf_counter()
    pred_test = predict(model, zs)
    predict_seconds = time.perf_counter() - start
    pred_train = predict(model, xs)
    return TrialResult(
        trial_index=trial_index, seed=seed, params=params,
        train_size=train.m, test_size=test.m,
        train_accuracy=float(np.mean(pred_train == train.y)),
        test_accuracy=float(np.mean(pred_test == test.y)),
        fit_seconds=fit_seconds, predict_seconds=predict_seconds,
        solver_singular=False,
    )


def _run_cell(ds, kind, kernel_variant, influence_variant, params, protocol,
              noise_fraction, subsample_fraction) -> CellResult:
    trials = [
        _run_single_trial(ds, kind, kernel_variant, influence_variant, params,
                          protocol, t, noise_fraction, subsample_fraction)
        for t in range(protocol.trials)
    ]
    return CellResult.from_trials(params, trials)


def _map(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _best_indices(cells) -> tuple[int, int]:
    by_test = min(
        range(len(cells)),
        key=lambda i: (-cells[i].mean_test, -cells[i].mean_train, _lex_key(cells[i].params)),
    )
    by_train = min(
        range(len(cells)),
        key=lambda i: (-cells[i].mean_train, -cells[i].mean_test, _lex_key(cells[i].params)),
    )
    return by_test, by_train


def _make_report(ds, kind, kernel_variant, influence_variant, protocol, cells,
                 noise_fraction=0.0, subsample_fraction=1.0,
                 sweep_axis=None, sweep_value=None) -> ExperimentReport:
    bt, btr = _best_indices(cells)
    return ExperimentReport(
        dataset=ds.name, dataset_m=ds.m, dataset_n=ds.n,
        model=kind, kernel_variant=kernel_variant, influence_variant=influence_variant,
        protocol=protocol,
        noise_fraction=noise_fraction, subsample_fraction=subsample_fraction,
        sweep_axis=sweep_axis, sweep_value=sweep_value,
        cells=tuple(cells), best_by_test_index=bt, best_by_train_index=btr,
    )


def run_trials(ds: Dataset, kind: str, kernel_variant: str,
               influence_variant: str | None, params: dict, protocol: Protocol,
               *, noise_fraction: float = 0.0, subsample_fraction: float = 1.0,
               sweep_axis: str | None = None, sweep_value: float | None = None) -> ExperimentReport:
    """Repeated trials of one fixed parameter tuple."""
    cell = _run_cell(ds, kind, kernel_variant, influence_variant, params, protocol,
                     noise_fraction, subsample_fraction)
    return _make_report(ds, kind, kernel_variant, influence_variant, protocol, [cell],
                        noise_fraction=noise_fraction, subsample_fraction=subsample_fraction,
                        sweep_axis=sweep_axis, sweep_value=sweep_value)


def _grid_axes(kind: str, kernel_variant: str, grid: GridSpec) -> list[dict]:
    gammas = grid.gamma_grid
    lams = grid.lambda_grid if kind != "lssvm" else (0.0,)
    sigmas = grid.kernel_param_grid if kernel_variant == "rbf" else (None,)
    iparams = grid.influence_param_grid if kind != "lssvm" else (None,)
    for name, axis in (("lambda", lams), ("kernel_param", sigmas), ("influence_param", iparams)):
        if len(axis) == 0:
            raise ValueError(f"{name} grid must not be empty for this configuration")
    return [
        make_params(g, l, s, p)
        for g, l, s, p in itertools.product(gammas, lams, sigmas, iparams)
    ]


def grid_search(ds: Dataset, kind: str, kernel_variant: str,
                influence_variant: str | None, grid: GridSpec, protocol: Protocol,
                *, jobs: int = 1) -> tuple[dict, ExperimentReport]:
    """Evaluate every parameter tuple with shared trial splits; never aborts
    on singular cells. Returns (test-selected best params, full report)."""
    cells_params = _grid_axes(kind, kernel_variant, grid)

    def one(params: dict) -> CellResult:
        return _run_cell(ds, kind, kernel_variant, influence_variant, params,
                         protocol, 0.0, 1.0)

    cells = _map(one, cells_params, jobs)
    report = _make_report(ds, kind, kernel_variant, influence_variant, protocol, cells)
    return dict(report.best_by_test.params), report


def noise_sweep(ds: Dataset, kind: str, kernel_variant: str,
                influence_variant: str | None, params: dict, fractions,
                protocol: Protocol, *, jobs: int = 1) -> list[ExperimentReport]:
    """One report per label-noise fraction; noise is injected into the
    training half only, and training accuracy is scored against the noisy
    labels while test accuracy uses clean ones."""

    def one(f: float) -> ExperimentReport:
        return run_trials(ds, kind, kernel_variant, influence_variant, params, protocol,
                          noise_fraction=f, sweep_axis="noise_fraction", sweep_value=f)

    return _map(one, fractions, jobs)


def learning_curve(ds: Dataset, kind: str, kernel_variant: str,
                   influence_variant: str | None, params: dict, fractions,
                   protocol: Protocol, *, jobs: int = 1) -> list[ExperimentReport]:
    """One report per training-set fraction; fractions of the same trial are
    prefixes of one permutation, so larger fractions contain smaller ones."""

    def one(f: float) -> ExperimentReport:
        return run_trials(ds, kind, kernel_variant, influence_variant, params, protocol,
                          subsample_fraction=f, sweep_axis="subsample_fraction", sweep_value=f)

    return _map(one, fractions, jobs)


def param_sensitivity(ds: Dataset, kind: str, kernel_variant: str,
                      influence_variant: str, values, gamma: float, lam: float,
                      protocol: Protocol, *, sigma: float | None = None,
                      jobs: int = 1) -> list[ExperimentReport]:
    """Sweep the influence-function parameter, holding everything else fixed."""

    def one(v: float) -> ExperimentReport:
        params = make_params(gamma, lam, sigma, v)
        return run_trials(ds, kind, kernel_variant, influence_variant, params, protocol,
                          sweep_axis="influence_param", sweep_value=v)

    return _map(one, values, jobs)


def bench_suite(ds: Dataset, kernel_variant: str, grid: GridSpec, protocol: Protocol,
                *, models=MODEL_KINDS, influences=INFLUENCE_VARIANTS,
                jobs: int = 1) -> list[ExperimentReport]:
    """Grid-search every requested model/influence pairing on one dataset.

    lssvm appears once (it has no influence axis); wimm and mimm appear once
    per influence variant, mirroring the benchmark table layout.
    """
    reports = []
    for kind in models:
        if kind == "lssvm":
            _, rep = grid_search(ds, "lssvm", kernel_variant, None, grid, protocol, jobs=jobs)
            reports.append(rep)
        else:
            for variant in influences:
                _, rep = grid_search(ds, kind, kernel_variant, variant, grid, protocol, jobs=jobs)
                reports.append(rep)
    return reports


def format_table(reports) -> str:
    """Fixed-width accuracy table: one row per report's test-selected cell,
    columns for train/test accuracy (percent, mean and population std) and
    mean fit time."""
    reports = list(reports)
    r0 = reports[0]
    lines = [
        f"dataset: {r0.dataset} (m = {r0.dataset_m}, n = {r0.dataset_n})",
        f"protocol: {r0.protocol.train_fraction:.0%} train, {r0.protocol.trials} trials, "
        f"base seed {r0.protocol.base_seed}, kernel {r0.kernel_variant}; "
        f"std = {_STD_FORMULA}; selection = mean test accuracy",
        "",
        f"{'model':<8}{'influence':<12}{'train(%)':>16}{'test(%)':>16}{'fit(s)':>10}  best params",
    ]
    for r in reports:
        c = r.best_by_test
        pieces = [f"gamma={c.params['gamma']:g}"]
        if r.model != "lssvm":
            pieces.append(f"lam={c.params['lam']:g}")
        if c.params["sigma"] is not None:
            pieces.append(f"sigma={c.params['sigma']:g}")
        if c.params["influence_param"] is not None:
            pieces.append(f"param={c.params['influence_param']:g}")
        lines.append(
            f"{r.model:<8}{r.influence_variant or '-':<12}"
            f"{100 * c.mean_train:7.2f} ± {100 * c.std_train:5.2f}"
            f"{100 * c.mean_test:8.2f} ± {100 * c.std_test:5.2f}"
            f"{c.mean_fit_seconds:10.4f}  {' '.join(pieces)}"
        )
    return "\n".join(lines) + "\n"


_CSV_COLUMNS = (
    "dataset", "model", "kernel_variant", "influence_variant",
    "sweep_axis", "sweep_value", "noise_fraction", "subsample_fraction",
    "gamma", "lam", "sigma", "influence_param",
    "trial_index", "seed", "train_size", "test_size",
    "train_accuracy", "test_accuracy", "solver_singular",
    "fit_seconds", "predict_seconds",
)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _csv_rows(report: ExperimentReport):
    for cell in report.cells:
        for t in cell.trials:
            yield [_csv_cell(v) for v in (
                report.dataset, report.model, report.kernel_variant,
                report.influence_variant,
                report.sweep_axis, report.sweep_value,
                report.noise_fraction, report.subsample_fraction,
                cell.params["gamma"], cell.params["lam"],
                cell.params["sigma"], cell.params["influence_param"],
                t.trial_index, t.seed, t.train_size, t.test_size,
                t.train_accuracy, t.test_accuracy, t.solver_singular,
                t.fit_seconds, t.predict_seconds,
            )]


def write_report(reports, path: str, fmt: str = "json") -> None:
    """Write one report or a list of them as JSON (full nested structure) or
    CSV (one row per trial per parameter tuple per sweep point)."""
    single = isinstance(reports, ExperimentReport)
    items = [reports] if single else list(reports)
    try:
        if fmt == "json":
            if single:
                doc = items[0].to_doc()
            else:
                doc = {"format": "gmlsq-report-list", "version": 1,
                       "reports": [r.to_doc() for r in items]}
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(jsonio.dumps(doc))
        elif fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(_CSV_COLUMNS)
                for r in items:
                    writer.writerows(_csv_rows(r))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_report(path: str) -> dict:
    """Read back a JSON report document (single or list form)."""
    try:
        with open(path, encoding="utf-8") as fh:
            return jsonio.loads(fh.read())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoError(f"{path} is not valid JSON: {exc}") from exc


def strip_timings(doc):
    """Copy of a report document with every *_seconds field removed, the
    form under which reports must be byte-identical across reruns."""
    if isinstance(doc, dict):
        return {k: strip_timings(v) for k, v in doc.items() if not k.endswith("_seconds")}
    if isinstance(doc, list):
        return [strip_timings(v) for v in doc]
    return doc
