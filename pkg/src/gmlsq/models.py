"""The three classifiers: LSSVM, WIMM, and MIMM.

All three reduce to one bordered linear system in (alpha, b):

    [[Y K Y + R/gamma, y], [y^T, 0]] (alpha; b) = (t; 0)

where R is the memory block: the identity for LSSVM (plain ridge), the
dense Y (Delta Delta^T) Y for WIMM (Delta is the pairwise influence matrix),
and diag(delta)^2 for MIMM (delta_i is the influence between sample i and
its class centroid). The memory costs xi are recovered afterwards from the
stationarity conditions. With an identity influence and lambda = 0 both
memory models degenerate to LSSVM, which the tests pin down exactly.

Features are standardized per column (z-score with population standard
deviation, zero-variance columns left unscaled) inside fit; predictions
standardize with the stored statistics. Pass ``standardize=False`` to train
on raw features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .errors import DimensionMismatch, IoError, MissingClass
from .kernels import (
    CentroidPair,
    InfluenceSpec,
    KernelSpec,
    class_centroids,
    gram_matrix,
    influence_between,
    influence_matrix,
    mimm_delta_vector,
)
from .linalg import SolveReport, assemble_bordered, solve_dense, symmetric_square

_KINDS = ("lssvm", "wimm", "mimm")


@dataclass(frozen=True)
class ModelParams:
    """Training weights: gamma prices memory cost, lam prices memory impact.

    gamma must be positive; lam may be zero, which switches the memory
    impact term off and (with an identity influence) recovers plain LSSVM.
    """

    gamma: float
    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be a positive real, got {self.gamma}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be a nonnegative real, got {self.lam}")


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine scaling fixed at fit time."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)  # population standard deviation (ddof = 0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(mean=mean, scale=scale)

    @classmethod
    def identity(cls, n: int) -> "Standardizer":
        return cls(mean=np.zeros(n), scale=np.ones(n))

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.ndim != 2 or x.shape[1] != self.mean.shape[0]:
            raise DimensionMismatch(
                f"expected {self.mean.shape[0]} feature columns, got shape {x.shape}"
            )
        return (x - self.mean) / self.scale


@dataclass(frozen=True)
class FittedModel:
    """Everything needed to score new points and certify the fit.

    ``train_X`` is stored standardized; ``xi`` is empty for lssvm. Exactly
    one of ``influence`` (closed-form) and the explicit ``delta_matrix`` /
    ``delta_vec`` inputs is the memory definition for wimm; mimm always
    stores ``delta_vec`` and ``centroids``.
    """

    kind: str
    params: ModelParams
    kernel: KernelSpec
    influence: InfluenceSpec | None
    alpha: np.ndarray
    bias: float
    xi: np.ndarray
    train_X: np.ndarray
    train_y: np.ndarray
    standardizer: Standardizer
    solve_report: SolveReport
    delta_matrix: np.ndarray | None = None
    centroids: CentroidPair | None = None
    delta_vec: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.train_X.shape[0]

    @property
    def n(self) -> int:
        return self.train_X.shape[1]


def _check_training(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise DimensionMismatch(f"X must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DimensionMismatch("X contains non-finite values")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} rows but {y.shape[0]} labels")
    if not np.all(np.abs(y) == 1.0):
        raise ValueError("labels must be +1 or -1")
    if not ((y > 0).any() and (y < 0).any()):
        raise MissingClass("training data must contain both classes")
    return x, y


def _standardize_for_fit(x: np.ndarray, standardize: bool) -> tuple[Standardizer, np.ndarray]:
    std = Standardizer.fit(x) if standardize else Standardizer.identity(x.shape[1])
    return std, std.transform(x)


def _solve_bordered(h: np.ndarray, y: np.ndarray, top: np.ndarray):
    system = assemble_bordered(h, y)
    rhs = np.concatenate([top, [0.0]])
    solution, report = solve_dense(system, rhs)
    return solution[:-1], float(solution[-1]), report


def fit_lssvm(x, y, kernel: KernelSpec, gamma: float, *, standardize: bool = True) -> FittedModel:
    """Least-squares SVM: ridge-regularized kernel classifier, no memory term."""
    params = ModelParams(gamma=float(gamma))
    x, y = _check_training(x, y)
    std, xs = _standardize_for_fit(x, standardize)
    k = gram_matrix(kernel, xs, xs)
    h = np.outer(y, y) * k + np.eye(len(y)) / params.gamma
    alpha, bias, report = _solve_bordered(h, y, np.ones(len(y)))
    return FittedModel(
        kind="lssvm",
        params=params,
        kernel=kernel,
        influence=None,
        alpha=alpha,
        bias=bias,
        xi=np.zeros(0),
        train_X=xs,
        train_y=y,
        standardizer=std,
        solve_report=report,
    )


def _wimm_delta(influence, xs: np.ndarray) -> tuple[InfluenceSpec | None, np.ndarray]:
    if isinstance(influence, InfluenceSpec):
        return influence, influence_matrix(influence, xs)
    delta = np.asarray(influence, dtype=np.float64)
    m = xs.shape[0]
    if delta.shape != (m, m):
        raise DimensionMismatch(f"explicit influence matrix must be {m}x{m}, got {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise DimensionMismatch("explicit influence matrix contains non-finite values")
    if not np.array_equal(delta, delta.T):
        raise DimensionMismatch("explicit influence matrix must be exactly symmetric")
    return None, delta


def fit_wimm(x, y, kernel: KernelSpec, influence, params: ModelParams, *, standardize: bool = True) -> FittedModel:
    """Weighted-impact memory model: every training point influences every
    decision through the pairwise influence matrix.

    ``influence`` is either an InfluenceSpec or an explicit symmetric m x m
    matrix of precomputed pairwise influence values.
    """
    x, y = _check_training(x, y)
    std, xs = _standardize_for_fit(x, standardize)
    spec, delta = _wimm_delta(influence, xs)
    # h = Y (K + Delta Delta^T / gamma) Y, built in place to keep the peak
    # footprint near three m x m arrays at benchmark sizes.
    mm = symmetric_square(delta)
    mm /= params.gamma
    top = 1.0 + params.lam * (y * (mm @ y))
    mm += gram_matrix(kernel, xs, xs)
    mm *= y[None, :]
    mm *= y[:, None]
    alpha, bias, report = _solve_bordered(mm, y, top)
    xi = (y / params.gamma) * (delta.T @ (y * (alpha - params.lam)))
    return FittedModel(
        kind="wimm",
        params=params,
        kernel=kernel,
        influence=spec,
        alpha=alpha,
        bias=bias,
        xi=xi,
        train_X=xs,
        train_y=y,
        standardizer=std,
        solve_report=report,
        delta_matrix=None if spec is not None else delta,
    )


def _mimm_delta(influence, xs, y) -> tuple[InfluenceSpec | None, CentroidPair, np.ndarray]:
    cents = class_centroids(xs, y)
    if isinstance(influence, InfluenceSpec):
        return influence, cents, mimm_delta_vector(influence, xs, y, cents)
    delta = np.asarray(influence, dtype=np.float64).reshape(-1)
    if delta.shape[0] != xs.shape[0]:
        raise DimensionMismatch(
            f"explicit influence vector must have length {xs.shape[0]}, got {delta.shape[0]}"
        )
    if not np.all(np.isfinite(delta)):
        raise DimensionMismatch("explicit influence vector contains non-finite values")
    return None, cents, delta


def fit_mimm(x, y, kernel: KernelSpec, influence, params: ModelParams, *, standardize: bool = True) -> FittedModel:
    """Maximum-impact memory model: each point's memory term couples it only
    to its class centroid, so the memory block is diagonal.

    ``influence`` is either an InfluenceSpec or an explicit length-m vector
    of precomputed per-sample influence values.
    """
    x, y = _check_training(x, y)
    std, xs = _standardize_for_fit(x, standardize)
    spec, cents, delta = _mimm_delta(influence, xs, y)
    d2 = delta * delta
    h = np.outer(y, y) * gram_matrix(kernel, xs, xs)
    h[np.diag_indices_from(h)] += d2 / params.gamma
    top = 1.0 + (params.lam / params.gamma) * d2
    alpha, bias, report = _solve_bordered(h, y, top)
    xi = (alpha - params.lam) * delta / params.gamma
    return FittedModel(
        kind="mimm",
        params=params,
        kernel=kernel,
        influence=spec,
        alpha=alpha,
        bias=bias,
        xi=xi,
        train_X=xs,
        train_y=y,
        standardizer=std,
        solve_report=report,
        centroids=cents,
        delta_vec=delta,
    )


def _as_points(model: FittedModel, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z.reshape(1, -1)
    if z.ndim != 2 or z.shape[1] != model.n:
        raise DimensionMismatch(f"expected points with {model.n} features, got shape {z.shape}")
    return z


def _generalization_scores(model: FittedModel, z: np.ndarray) -> np.ndarray:
    k = gram_matrix(model.kernel, model.train_X, z)
    return (model.train_y * model.alpha) @ k + model.bias


def _lookup_columns(train_x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """For each query row, the index of the first bitwise-equal training row,
    or -1 when there is none (explicit influence carries no values off the
    training set)."""
    out = np.full(z.shape[0], -1, dtype=np.intp)
    for j in range(z.shape[0]):
        eq = np.flatnonzero((train_x == z[j]).all(axis=1))
        if eq.size:
            out[j] = eq[0]
    return out


def _wimm_memory_scores(model: FittedModel, z: np.ndarray) -> np.ndarray:
    weights = model.train_y * model.xi
    if model.influence is not None:
        return weights @ influence_between(model.influence, model.train_X, z)
    cols = _lookup_columns(model.train_X, z)
    mem = np.zeros(z.shape[0])
    hit = cols >= 0
    if hit.any():
        mem[hit] = weights @ model.delta_matrix[:, cols[hit]]
    return mem


def _nearest_training_index(model: FittedModel, z: np.ndarray) -> np.ndarray:
    """Row-wise nearest stored training point (ties to the smallest index)."""
    sq_t = np.einsum("ij,ij->i", model.train_X, model.train_X)
    sq_z = np.einsum("ij,ij->i", z, z)
    d2 = sq_t[:, None] + sq_z[None, :] - 2.0 * (model.train_X @ z.T)
    return np.argmin(d2, axis=0)


def _mimm_memory_scores(model: FittedModel, z: np.ndarray) -> np.ndarray:
    nearest = _nearest_training_index(model, z)
    y_star = model.train_y[nearest]
    xi_star = model.xi[nearest]
    if model.influence is not None:
        cents = np.vstack([model.centroids.centroid_pos, model.centroids.centroid_neg])
        to_cent = influence_between(model.influence, z, cents)
        per_class = np.where(y_star > 0, to_cent[:, 0], to_cent[:, 1])
        return y_star * xi_star * per_class
    # Explicit influence vector: defined only at the training points
    # themselves, so the memory term applies exactly there and is zero
    # elsewhere.
    mem = np.zeros(z.shape[0])
    for j in range(z.shape[0]):
        i = nearest[j]
        if np.array_equal(z[j], model.train_X[i]):
            mem[j] = y_star[j] * xi_star[j] * model.delta_vec[i]
    return mem


def decision_scores(model: FittedModel, z) -> np.ndarray:
    """Decision values at already-standardized points (one row per point)."""
    z = _as_points(model, z)
    scores = _generalization_scores(model, z)
    if model.kind == "wimm":
        scores = scores + _wimm_memory_scores(model, z)
    elif model.kind == "mimm":
        scores = scores + _mimm_memory_scores(model, z)
    return scores


def decision_wimm(model: FittedModel, x) -> float:
    """Decision value of a WIMM model at one standardized point."""
    if model.kind != "wimm":
        raise ValueError(f"expected a wimm model, got {model.kind!r}")
    return float(decision_scores(model, x)[0])


def decision_mimm(model: FittedModel, x) -> float:
    """Decision value of a MIMM model at one standardized point: the
    generalization score plus the memory term of the nearest training point,
    evaluated against that point's class centroid."""
    if model.kind != "mimm":
        raise ValueError(f"expected a mimm model, got {model.kind!r}")
    return float(decision_scores(model, x)[0])


def predict(model: FittedModel, x_test) -> np.ndarray:
    """Classify raw feature rows: standardize, score, take the sign.

    A score of exactly zero classifies as +1.
    """
    z = model.standardizer.transform(np.asarray(x_test, dtype=np.float64))
    scores = decision_scores(model, z)
    return np.where(scores < 0.0, -1.0, 1.0)


def training_residuals(model: FittedModel) -> np.ndarray:
    """How far each training point sits from its equality constraint.

    For lssvm and wimm: r_i = y_i f(x_i) - 1, with f the model's own
    decision. For mimm: r_i = y_i (generalization score) - 1 + xi_i delta_i.
    Zero residuals certify perfect memorization; lssvm residuals are
    generally nonzero because its slack is only penalized, not remembered.
    """
    gen = _generalization_scores(model, model.train_X)
    y = model.train_y
    if model.kind == "lssvm":
        return y * gen - 1.0
    if model.kind == "wimm":
        if model.influence is not None:
            mem = (y * model.xi) @ influence_between(
                model.influence, model.train_X, model.train_X
            )
        else:
            mem = (y * model.xi) @ model.delta_matrix
        return y * (gen + mem) - 1.0
    return y * gen - 1.0 + model.xi * model.delta_vec


def _spec_to_doc(spec) -> dict | None:
    if spec is None:
        return None
    if isinstance(spec, KernelSpec):
        return {"variant": spec.variant, "sigma": spec.sigma}
    return {"variant": spec.variant, "param": spec.param}


def _model_to_doc(model: FittedModel) -> dict:
    report = model.solve_report
    cond = report.condition_estimate
    return {
        "format": "gmlsq-model",
        "version": 1,
        "kind": model.kind,
        "params": {"gamma": model.params.gamma, "lam": model.params.lam},
        "kernel": _spec_to_doc(model.kernel),
        "influence": _spec_to_doc(model.influence),
        "alpha": model.alpha,
        "bias": model.bias,
        "xi": model.xi,
        "train_X": model.train_X,
        "train_y": model.train_y,
        "standardizer": {"mean": model.standardizer.mean, "scale": model.standardizer.scale},
        "solve_report": {
            "residual_inf_norm": report.residual_inf_norm,
            "condition_estimate": cond if cond is not None and math.isfinite(cond) else None,
            "singular": report.singular,
        },
        "delta_matrix": model.delta_matrix,
        "centroids": None
        if model.centroids is None
        else {"pos": model.centroids.centroid_pos, "neg": model.centroids.centroid_neg},
        "delta_vec": model.delta_vec,
    }


def save_model(model: FittedModel, path: str) -> None:
    """Write the model as a JSON document that round-trips scores exactly."""
    text = jsonio.dumps(_model_to_doc(model))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _doc_get(doc: dict, key: str):
    if key not in doc:
        raise IoError(f"model document is missing field {key!r}")
    return doc[key]


def load_model(path: str) -> FittedModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = jsonio.loads(fh.read())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "gmlsq-model":
        raise IoError(f"{path} is not a model document")
    kind = _doc_get(doc, "kind")
    if kind not in _KINDS:
        raise IoError(f"unknown model kind {kind!r}")
    kdoc = _doc_get(doc, "kernel")
    kernel = KernelSpec(variant=kdoc["variant"], sigma=kdoc.get("sigma"))
    idoc = doc.get("influence")
    influence = None if idoc is None else InfluenceSpec(variant=idoc["variant"], param=idoc["param"])
    pdoc = _doc_get(doc, "params")
    sdoc = _doc_get(doc, "standardizer")
    rdoc = _doc_get(doc, "solve_report")
    cdoc = doc.get("centroids")

    def arr(v):
        return np.asarray(v, dtype=np.float64)

    return FittedModel(
        kind=kind,
        params=ModelParams(gamma=float(pdoc["gamma"]), lam=float(pdoc["lam"])),
        kernel=kernel,
        influence=influence,
        alpha=arr(_doc_get(doc, "alpha")),
        bias=float(_doc_get(doc, "bias")),
        xi=arr(_doc_get(doc, "xi")),
        train_X=arr(_doc_get(doc, "train_X")),
        train_y=arr(_doc_get(doc, "train_y")),
        standardizer=Standardizer(mean=arr(sdoc["mean"]), scale=arr(sdoc["scale"])),
        solve_report=SolveReport(
            residual_inf_norm=float(rdoc["residual_inf_norm"]),
            condition_estimate=None
            if rdoc["condition_estimate"] is None
            else float(rdoc["condition_estimate"]),
            singular=bool(rdoc["singular"]),
        ),
        delta_matrix=None if doc.get("delta_matrix") is None else arr(doc["delta_matrix"]),
        centroids=None
        if cdoc is None
        else CentroidPair(centroid_pos=arr(cdoc["pos"]), centroid_neg=arr(cdoc["neg"])),
        delta_vec=None if doc.get("delta_vec") is None else arr(doc["delta_vec"]),
    )
