"""Behavioral acceptance gate.

Eight end-to-end criteria covering memorization, degeneracy to the
least-squares baseline, agreement with brute-force stationarity solves, a
hand-solved fixture, the label-noise trend, fit-time ordering, the default
benchmark protocol, and bit-level determinism. Each test prints one
PASS/FAIL line (visible under pytest -s, or in captured output otherwise).

Run with: python3 -m pytest tests/test_acceptance.py -s -v
"""

import json
import os
import statistics
import time

import numpy as np
import pytest

from gmlsq import (
    DEFAULT_NOISE_FRACTIONS,
    DEFAULT_POWER_GRID,
    Dataset,
    GridSpec,
    InfluenceSpec,
    KernelSpec,
    ModelParams,
    Protocol,
    SingularMatrix,
    Standardizer,
    bench_suite,
    fit_lssvm,
    fit_mimm,
    fit_wimm,
    format_table,
    grid_search,
    influence_matrix,
    load_from_manifest,
    load_manifest,
    noise_sweep,
    predict,
    read_report,
    round_half_up,
    strip_timings,
    training_residuals,
    write_report,
)
from gmlsq.bench import make_params

from conftest import (
    mimm_full_stationarity,
    random_instance,
    separated_instance,
    wimm_full_stationarity,
)

LINEAR = KernelSpec("linear")
RBF = KernelSpec("rbf", sigma=1.0)
GAUSS = InfluenceSpec("gaussian", 0.25)
INVERSE = InfluenceSpec("inverse", 1.0)
MANIFEST = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                        "datasets", "manifest.json")


def _verdict(num: int, name: str, ok: bool, detail: str) -> None:
    line = f"[acceptance] criterion {num} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
    print(f"\n{line}", flush=True)
    assert ok, line


def _supplied_datasets():
    """Every manifest entry whose data file is actually present."""
    base = os.path.dirname(MANIFEST)
    out = []
    for entry in load_manifest(MANIFEST):
        if os.path.exists(os.path.join(base, entry["file"])):
            out.append(load_from_manifest(entry, base))
    return out


def test_criterion_1_memorization():
    """WIMM (gaussian) and MIMM (inverse) drive training error to zero
    whenever the influence system is nonsingular."""
    params = ModelParams(gamma=1.0, lam=0.5)
    jobs = []
    for ds in _supplied_datasets():
        jobs.append((ds.name, ds.X, ds.y))
    for seed in range(50):
        m = 10 + (seed * 977) % 191  # 10..200
        n = 2 + seed % 5
        x, y = separated_instance(seed, m, n, min_dist=0.4)
        jobs.append((f"synthetic-{seed}", x, y))

    checked = singular = 0
    worst = 0.0
    failures = []
    for name, x, y in jobs:
        for fit, influence in ((fit_wimm, GAUSS), (fit_mimm, INVERSE)):
            try:
                model = fit(x, y, LINEAR, influence, params)
            except SingularMatrix:
                singular += 1
                continue
            checked += 1
            acc = float(np.mean(predict(model, x) == y))
            residual = float(np.max(np.abs(training_residuals(model))))
            worst = max(worst, residual)
            if acc != 1.0 or residual >= 1e-6:
                failures.append(f"{name}/{model.kind}: acc {acc}, residual {residual:.2e}")
    _verdict(1, "memorization", not failures and checked > 0,
             f"{len(jobs)} instances (incl. {len(jobs) - 50} supplied datasets), "
             f"{checked} nonsingular fits all at 100% train accuracy, "
             f"max residual {worst:.2e} < 1e-6, {singular} singular skips"
             + (f"; failures: {failures[:3]}" if failures else ""))


def test_criterion_2_degeneracy():
    """Identity influence and lambda = 0 reproduce the plain least-squares
    baseline exactly (up to solver tolerance)."""
    gammas = (0.125, 1.0, 8.0)
    worst = 0.0
    failures = 0
    for seed in range(100):
        m = 6 + (seed * 37) % 95  # 6..100
        n = 2 + seed % 4
        kernel = LINEAR if seed % 2 == 0 else RBF
        gamma = gammas[seed % 3]
        x, y = random_instance(seed, m, n)
        base = fit_lssvm(x, y, kernel, gamma)
        params = ModelParams(gamma=gamma, lam=0.0)
        wimm = fit_wimm(x, y, kernel, np.eye(m), params)
        mimm = fit_mimm(x, y, kernel, np.ones(m), params)
        for model in (wimm, mimm):
            gap = max(
                float(np.max(np.abs(model.alpha - base.alpha))),
                abs(model.bias - base.bias),
                float(np.max(np.abs(model.xi - model.alpha / gamma))),
            )
            worst = max(worst, gap)
            if gap > 1e-10:
                failures += 1
    _verdict(2, "degeneracy", failures == 0,
             f"100 instances x 2 models, worst (alpha, b, xi) gap {worst:.2e} <= 1e-10")


def test_criterion_3_kkt_oracle():
    """The reduced bordered solve agrees with a brute-force solve of the
    full stationarity system in (w, b, xi, alpha)."""
    gammas = (0.5, 1.0, 2.0)
    lams = (0.0, 0.5, 1.0)
    worst = 0.0
    failures = 0
    for seed in range(50):
        m = 6 + (seed * 13) % 15  # 6..20
        n = 2 + seed % 3
        gamma, lam = gammas[seed % 3], lams[seed % 3]
        x, y = separated_instance(seed + 1000, m, n)
        params = ModelParams(gamma=gamma, lam=lam)

        wimm = fit_wimm(x, y, LINEAR, GAUSS, params)
        xs = wimm.train_X
        w_full, b_full, xi_full, alpha_full = wimm_full_stationarity(
            xs, y, influence_matrix(GAUSS, xs), gamma, lam)
        w_reduced = xs.T @ (y * wimm.alpha)
        gap_w = max(
            float(np.max(np.abs(wimm.alpha - alpha_full))),
            abs(wimm.bias - b_full),
            float(np.max(np.abs(wimm.xi - xi_full))),
            float(np.max(np.abs(w_reduced - w_full))),
        )

        mimm = fit_mimm(x, y, LINEAR, INVERSE, params)
        w_full, b_full, xi_full, alpha_full = mimm_full_stationarity(
            mimm.train_X, y, mimm.delta_vec, gamma, lam)
        w_reduced = mimm.train_X.T @ (y * mimm.alpha)
        gap_m = max(
            float(np.max(np.abs(mimm.alpha - alpha_full))),
            abs(mimm.bias - b_full),
            float(np.max(np.abs(mimm.xi - xi_full))),
            float(np.max(np.abs(w_reduced - w_full))),
        )

        worst = max(worst, gap_w, gap_m)
        if max(gap_w, gap_m) > 1e-8:
            failures += 1
    _verdict(3, "stationarity oracle", failures == 0,
             f"50 linear instances, worst block gap {worst:.2e} <= 1e-8")


def test_criterion_4_hand_solved_fixture():
    """Two points, identity influence: the system solves by hand to
    alpha = (2/3, 2/3), b = 1/3, xi = (2/3, 2/3)."""
    x = np.array([[0.0], [1.0]])
    y = np.array([1.0, -1.0])
    params = ModelParams(gamma=1.0, lam=0.0)
    results = {
        "wimm": fit_wimm(x, y, LINEAR, np.eye(2), params, standardize=False),
        "mimm": fit_mimm(x, y, LINEAR, np.ones(2), params, standardize=False),
    }
    worst = 0.0
    for model in results.values():
        worst = max(
            worst,
            float(np.max(np.abs(model.alpha - 2.0 / 3.0))),
            abs(model.bias - 1.0 / 3.0),
            float(np.max(np.abs(model.xi - 2.0 / 3.0))),
        )
    base = fit_lssvm(x, y, LINEAR, gamma=1.0, standardize=False)
    worst = max(worst, float(np.max(np.abs(base.alpha - 2.0 / 3.0))),
                abs(base.bias - 1.0 / 3.0))
    _verdict(4, "hand-solved fixture", worst <= 1e-12,
             f"alpha = (2/3, 2/3), b = 1/3, xi = (2/3, 2/3); worst gap {worst:.2e} <= 1e-12")


def test_criterion_5_noise_robustness_trend():
    """Memory models hold 100% noisy-train accuracy across the noise ramp
    while the baseline degrades and clean-test accuracy does not improve."""
    protocol = Protocol(train_fraction=0.8, trials=5, base_seed=0)
    fractions = DEFAULT_NOISE_FRACTIONS
    problems = []
    datasets = _supplied_datasets()[:2]
    assert len(datasets) == 2, "two supplied benchmark datasets required"
    for ds in datasets:
        runs = {
            "lssvm": noise_sweep(ds, "lssvm", "linear", None,
                                 make_params(1.0), fractions, protocol),
            "wimm": noise_sweep(ds, "wimm", "linear", "gaussian",
                                make_params(1.0, 0.5, None, 0.25), fractions, protocol),
            "mimm": noise_sweep(ds, "mimm", "linear", "inverse",
                                make_params(1.0, 0.5, None, 1.0), fractions, protocol),
        }
        for kind in ("wimm", "mimm"):
            for rep in runs[kind]:
                for t in rep.best_by_test.trials:
                    if not t.solver_singular and t.train_accuracy != 1.0:
                        problems.append(
                            f"{ds.name}/{kind} at noise {rep.sweep_value}: "
                            f"train {t.train_accuracy}")
            first, last = runs[kind][0].best_by_test, runs[kind][-1].best_by_test
            if last.mean_test > first.mean_test:
                problems.append(
                    f"{ds.name}/{kind}: clean-test at 0.5 ({last.mean_test:.3f}) "
                    f"> at 0 ({first.mean_test:.3f})")
        for rep in runs["lssvm"]:
            if rep.sweep_value >= 0.1 and rep.best_by_test.mean_train >= 1.0:
                problems.append(
                    f"{ds.name}/lssvm at noise {rep.sweep_value}: train did not drop")
    _verdict(5, "noise robustness trend", not problems,
             f"2 datasets x {len(fractions)} fractions x 5 trials; memory models "
             "at 100% noisy-train, baseline below 100% from fraction 0.1, "
             "clean-test at 0.5 <= at 0"
             + (f"; problems: {problems[:3]}" if problems else ""))


@pytest.mark.slow
def test_criterion_6_timing_ordering():
    """Median-of-5 fit times order MIMM below WIMM at m = 2000 and 5000,
    and a single fit at m = 5000 stays under a minute."""
    params = ModelParams(gamma=1.0, lam=0.5)
    medians = {}
    worst_seen = 0.0
    singular = False
    for m in (2000, 5000):
        x, y = random_instance(7 + m, m, 10)
        xs = Standardizer.fit(x).transform(x)
        for kind, fit, influence in (("wimm", fit_wimm, GAUSS),
                                     ("mimm", fit_mimm, INVERSE)):
            times = []
            for _ in range(5):
                t0 = time.perf_counter()
                model = fit(xs, y, LINEAR, influence, params, standardize=False)
                times.append(time.perf_counter() - t0)
                singular = singular or model.solve_report.singular
            medians[kind, m] = statistics.median(times)
            if m == 5000:
                worst_seen = max(worst_seen, max(times))
    ordered = all(medians["mimm", m] < medians["wimm", m] for m in (2000, 5000))
    _verdict(6, "timing ordering", ordered and worst_seen < 60.0 and not singular,
             "median fit seconds "
             f"m=2000: mimm {medians['mimm', 2000]:.2f} < wimm {medians['wimm', 2000]:.2f}; "
             f"m=5000: mimm {medians['mimm', 5000]:.2f} < wimm {medians['wimm', 5000]:.2f}; "
             f"slowest single m=5000 fit {worst_seen:.2f} s < 60 s")


@pytest.mark.slow
def test_criterion_7_default_protocol():
    """The default benchmark runs the 70/30, 5-repeat, power-grid protocol
    and reports train/test mean and std per influence variant."""
    x, y = separated_instance(4242, 60, 3)
    ds = Dataset(name="acceptance-grid", X=x, y=y)
    reports = bench_suite(ds, "linear", GridSpec(), Protocol())
    problems = []

    layout = [(r.model, r.influence_variant) for r in reports]
    expected = [("lssvm", None)] + [("wimm", v) for v in ("gaussian", "hinge", "ball", "inverse")] \
        + [("mimm", v) for v in ("gaussian", "hinge", "ball", "inverse")]
    if layout != expected:
        problems.append(f"row layout {layout}")

    for r in reports:
        if r.protocol.train_fraction != 0.7 or r.protocol.trials != 5:
            problems.append(f"{r.model} protocol {r.protocol}")
        want_cells = 12 if r.model == "lssvm" else 12 ** 3
        if len(r.cells) != want_cells:
            problems.append(f"{r.model}/{r.influence_variant}: {len(r.cells)} cells")
        gammas = {c.params["gamma"] for c in r.cells}
        if gammas != set(DEFAULT_POWER_GRID):
            problems.append(f"{r.model}: gamma grid {sorted(gammas)}")
        for t in r.cells[0].trials:
            if t.train_size != round_half_up(0.7 * ds.m):
                problems.append(f"{r.model}: train size {t.train_size}")

    # the memorization cells that render as "100 +- 0" train accuracy
    for model, variant in (("wimm", "gaussian"), ("mimm", "inverse")):
        rep = next(r for r in reports if (r.model, r.influence_variant) == (model, variant))
        cell = rep.best_by_train
        if not (cell.mean_train == 1.0 and cell.std_train == 0.0 and cell.n_singular == 0):
            problems.append(
                f"{model}/{variant} best-train cell: {cell.mean_train} "
                f"+- {cell.std_train}, {cell.n_singular} singular")

    table = format_table(reports)
    lines = table.strip().split("\n")
    if len(lines) != 4 + len(reports):
        problems.append(f"table has {len(lines)} lines")
    header = lines[3]
    for column in ("model", "influence", "train(%)", "test(%)"):
        if column not in header:
            problems.append(f"missing column {column}")
    perfect = f"{100.0:7.2f} ± {0.0:5.2f}"
    wimm_row = next(line for line in lines if line.startswith("wimm") and "gaussian" in line)
    if perfect not in wimm_row:
        problems.append(f"wimm gaussian row lacks 100 +- 0 train cell: {wimm_row!r}")

    _verdict(7, "default protocol", not problems,
             f"{len(reports)} reports, 70/30 x 5 trials, "
             f"{sum(len(r.cells) for r in reports)} grid cells over 2^-6..2^5, "
             "train/test mean +- std per variant, memorization cells at 100 +- 0"
             + (f"; problems: {problems[:3]}" if problems else ""))


def test_criterion_8_determinism(tmp_path):
    """Identical seeds produce byte-identical reports once timing fields
    are stripped, for both JSON and CSV."""
    ds = _supplied_datasets()[0]
    protocol = Protocol(train_fraction=0.8, trials=3, base_seed=7)
    grid = GridSpec(gamma_grid=(0.5, 1.0), lambda_grid=(0.5,),
                    influence_param_grid=(0.25,))

    def one_run(tag):
        _, rep = grid_search(ds, "wimm", "linear", "gaussian", grid, protocol)
        sweep = noise_sweep(ds, "mimm", "linear", "inverse",
                            make_params(1.0, 0.5, None, 1.0), (0.0, 0.3), protocol)
        jp = tmp_path / f"grid-{tag}.json"
        cp = tmp_path / f"sweep-{tag}.csv"
        write_report(rep, str(jp))
        write_report(sweep, str(cp), fmt="csv")
        stripped = json.dumps(strip_timings(read_report(str(jp))), sort_keys=True)
        rows = []
        with open(cp, newline="") as fh:
            for line in fh.read().splitlines():
                cells = line.split(",")
                rows.append(",".join(cells[:-2]))  # final two columns are timings
        return stripped.encode(), "\n".join(rows).encode()

    first_json, first_csv = one_run("a")
    second_json, second_csv = one_run("b")
    _verdict(8, "determinism", first_json == second_json and first_csv == second_csv,
             f"grid search + noise sweep re-run: {len(first_json)} JSON bytes and "
             f"{len(first_csv)} CSV bytes identical after dropping timing fields")
