"""Generalization kernels and memory-influence functions.

Two kernels (linear, rbf) and four influence variants:

    gaussian  delta = exp(-d^2 / (2 sigma^2)) / (sigma sqrt(2 pi))
    hinge     delta = max(rho - d, 0)
    ball      delta = d if d <= eps else 0          (zero on the diagonal)
    inverse   delta = beta / d if x != z else 1     (exact bitwise equality)

where d = ||x - z||. The inverse variant's equality test is bitwise on
coordinates, never tolerance-based, so near-duplicate points yield large but
finite entries that the solver's singularity check will surface. The inverse
variant's scale parameter is called beta here to avoid clashing with the
model bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MissingClass

_KERNEL_VARIANTS = ("linear", "rbf")
_INFLUENCE_VARIANTS = ("gaussian", "hinge", "ball", "inverse")

GAUSSIAN_NORM = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Closed description of the generalization kernel K(x, z)."""

    variant: str
    sigma: float | None = None

    def __post_init__(self):
        if self.variant not in _KERNEL_VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "rbf":
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("rbf kernel requires sigma > 0")
        elif self.sigma is not None:
            raise ValueError("linear kernel takes no parameter")


@dataclass(frozen=True)
class InfluenceSpec:
    """Closed description of the memory-influence function delta(x, z)."""

    variant: str
    param: float

    def __post_init__(self):
        if self.variant not in _INFLUENCE_VARIANTS:
            raise ValueError(f"unknown influence variant {self.variant!r}")
        if self.param <= 0:
            raise ValueError("influence parameter must be > 0")


@dataclass(frozen=True)
class CentroidPair:
    """Per-class arithmetic means of the training features."""

    centroid_pos: np.ndarray
    centroid_neg: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.centroid_pos, dtype=np.float64).reshape(-1)
        neg = np.asarray(self.centroid_neg, dtype=np.float64).reshape(-1)
        if pos.shape != neg.shape:
            raise DimensionMismatch(
                f"centroids have lengths {pos.shape[0]} and {neg.shape[0]}"
            )
        object.__setattr__(self, "centroid_pos", pos)
        object.__setattr__(self, "centroid_neg", neg)


def _pair(x, z) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if x.shape != z.shape:
        raise DimensionMismatch(f"vectors have lengths {x.shape[0]} and {z.shape[0]}")
    return x, z


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x, z = _pair(x, z)
    if spec.variant == "linear":
        return float(np.dot(x, z))
    d2 = float(np.dot(x - z, x - z))
    return math.exp(-spec.sigma * d2)


def influence_eval(spec: InfluenceSpec, x, z) -> float:
    x, z = _pair(x, z)
    if spec.variant == "inverse" and np.array_equal(x, z):
        return 1.0
    # math.hypot is internally scaled, so the distance between bitwise
    # distinct points stays strictly positive even at denormal separations
    # (IEEE subtraction of distinct doubles never rounds to zero).
    d = math.hypot(*(x - z))
    if spec.variant == "gaussian":
        s = spec.param
        return GAUSSIAN_NORM / s * math.exp(-d * d / (2.0 * s * s))
    if spec.variant == "hinge":
        return max(spec.param - d, 0.0)
    if spec.variant == "ball":
        return d if d <= spec.param else 0.0
    return spec.param / d  # inverse, distinct points


def _as_features(a, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a 2-D feature matrix, got shape {a.shape}")
    return a


def _sq_distances(a: np.ndarray, b: np.ndarray, self_pair: bool) -> np.ndarray:
    # ||a_i - b_j||^2 via the expanded quadratic form; cancellation can leave
    # tiny negatives, clamp them, and force the exact-zero diagonal for the
    # self case.
    sq_a = np.einsum("ij,ij->i", a, a)
    sq_b = sq_a if self_pair else np.einsum("ij,ij->i", b, b)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    if self_pair:
        np.fill_diagonal(d2, 0.0)
    return d2


def _symmetrize(m: np.ndarray) -> np.ndarray:
    # Copy the lower triangle over the upper so mirrored entries are
    # bit-identical regardless of BLAS accumulation order.
    lower = np.tril(m)
    return lower + np.tril(m, -1).T


def gram_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """Kernel matrix with entry (i, j) = K(a_i, b_j)."""
    a = _as_features(a, "A")
    b = _as_features(b, "B")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"feature matrices have {a.shape[1]} and {b.shape[1]} columns"
        )
    self_pair = a is b or (a.shape == b.shape and np.array_equal(a, b))
    if spec.variant == "linear":
        k = a @ b.T
    else:
        k = np.exp(-spec.sigma * _sq_distances(a, b, self_pair))
    return _symmetrize(k) if self_pair else k


def _equality_mask(x: np.ndarray) -> np.ndarray:
    eq = np.ones((x.shape[0], x.shape[0]), dtype=bool)
    for k in range(x.shape[1]):
        col = x[:, k]
        eq &= col[:, None] == col[None, :]
    return eq


def influence_matrix(spec: InfluenceSpec, x) -> np.ndarray:
    """Influence matrix with entry (i, j) = delta(x_i, x_j); exactly symmetric."""
    x = _as_features(x, "X")
    d2 = _sq_distances(x, x, True)
    d = np.sqrt(d2)
    if spec.variant == "gaussian":
        s = spec.param
        out = GAUSSIAN_NORM / s * np.exp(-d2 / (2.0 * s * s))
    elif spec.variant == "hinge":
        out = np.maximum(spec.param - d, 0.0)
    elif spec.variant == "ball":
        out = np.where(d <= spec.param, d, 0.0)
    else:
        eq = _equality_mask(x)
        with np.errstate(divide="ignore"):
            out = np.where(eq, 1.0, spec.param / d)
    return _symmetrize(out)


def _cross_equality_mask(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    eq = np.ones((a.shape[0], b.shape[0]), dtype=bool)
    for k in range(a.shape[1]):
        eq &= a[:, k][:, None] == b[:, k][None, :]
    return eq


def influence_between(spec: InfluenceSpec, a, b) -> np.ndarray:
    """Influence matrix with entry (i, j) = influence_eval(spec, a_i, b_j).

    Used at decision time between stored training points and query points.
    Pairs that are bitwise equal are treated as exactly distance zero, so
    scoring a training point reproduces the fit-time influence value.
    """
    a = _as_features(a, "A")
    b = _as_features(b, "B")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(
            f"feature matrices have {a.shape[1]} and {b.shape[1]} columns"
        )
    d2 = _sq_distances(a, b, False)
    eq = _cross_equality_mask(a, b)
    d2[eq] = 0.0
    d = np.sqrt(d2)
    if spec.variant == "gaussian":
        s = spec.param
        return GAUSSIAN_NORM / s * np.exp(-d2 / (2.0 * s * s))
    if spec.variant == "hinge":
        return np.maximum(spec.param - d, 0.0)
    if spec.variant == "ball":
        return np.where(d <= spec.param, d, 0.0)
    with np.errstate(divide="ignore"):
        return np.where(eq, 1.0, spec.param / d)


def class_centroids(x, y) -> CentroidPair:
    """Arithmetic mean of each class's training features."""
    x = _as_features(x, "X")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} rows but {y.shape[0]} labels")
    pos = y > 0
    if not pos.any() or pos.all():
        raise MissingClass("both classes must be present to form centroids")
    return CentroidPair(
        centroid_pos=x[pos].mean(axis=0),
        centroid_neg=x[~pos].mean(axis=0),
    )


def mimm_delta_vector(spec: InfluenceSpec, x, y, cents: CentroidPair) -> np.ndarray:
    """delta_i = influence between sample i and its own class centroid."""
    x = _as_features(x, "X")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"{x.shape[0]} rows but {y.shape[0]} labels")
    delta = np.empty(x.shape[0], dtype=np.float64)
    for i in range(x.shape[0]):
        c = cents.centroid_pos if y[i] > 0 else cents.centroid_neg
        delta[i] = influence_eval(spec, c, x[i])
    return delta
