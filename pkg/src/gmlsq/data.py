"""Dataset ingestion, splitting, label noise, and subsampling.

All randomness in this module flows through a splitmix64 generator seeded
with a caller-supplied 64-bit integer, with Fisher-Yates shuffles and
rejection sampling on top. The platform RNG is never used, so split, noise,
and subsample outputs are byte-identical across runs and platforms for a
given seed. Seeds for sub-tasks are derived with :func:`derive_seed` before
any work is dispatched.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InsufficientClassSamples,
    IoError,
    LabelCardinalityError,
    ParseError,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64, state


def derive_seed(seed: int, salt: int) -> int:
    """Deterministically derive an independent 64-bit seed from (seed, salt)."""
    out, _ = _splitmix64((seed ^ ((salt * _GOLDEN) & _MASK64)) & _MASK64)
    return out


class SplitMix64:
    """Tiny deterministic PRNG (splitmix64 stream + rejection sampling)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        out, self._state = _splitmix64(self._state)
        return out

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates shuffle; returns the list."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class Dataset:
    """Feature matrix, +/-1 labels, and provenance."""

    name: str
    X: np.ndarray
    y: np.ndarray
    source_path: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatch(
                f"{self.X.shape[0]} feature rows but {self.y.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.X)):
            raise DimensionMismatch("features contain non-finite values")
        if not np.all(np.abs(self.y) == 1.0):
            raise ValueError("labels must be +1 or -1")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.name, self.X[idx], self.y[idx], self.source_path)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def load_csv(
    path: str,
    has_header: bool = False,
    label_column: int | str = "last",
    positive_label: str = "auto",
    name: str | None = None,
) -> Dataset:
    """Load a delimited file into a Dataset.

    Row/column indices in diagnostics are 1-based file coordinates (the
    header row counts). ``positive_label="auto"`` maps the lexicographically
    larger of the two raw labels to +1.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    start = 1 if has_header else 0
    body = [(i, row) for i, row in enumerate(rows) if i >= start and row]
    if not body:
        raise LabelCardinalityError(f"{path}: no data rows")

    width = len(body[0][1])
    if label_column == "last":
        label_idx = width - 1
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise ParseError(body[0][0] + 1, label_idx + 1, "label column out of range")

    features: list[list[float]] = []
    raw_labels: list[str] = []
    for i, row in body:
        if len(row) != width:
            raise ParseError(i + 1, len(row), f"expected {width} cells, found {len(row)}")
        feat = []
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(i + 1, j + 1, f"cannot parse {cell!r} as a real number") from None
            if not math.isfinite(value):
                raise ParseError(i + 1, j + 1, f"non-finite feature value {cell!r}")
            feat.append(value)
        features.append(feat)
        raw_labels.append(row[label_idx].strip())

    distinct = sorted(set(raw_labels))
    if len(distinct) != 2:
        raise LabelCardinalityError(
            f"{path}: expected exactly 2 distinct labels, found {len(distinct)}: {distinct[:6]}"
        )
    if positive_label == "auto":
        pos = distinct[1]  # lexicographically larger
    else:
        if positive_label not in distinct:
            raise LabelCardinalityError(
                f"{path}: positive label {positive_label!r} not among labels {distinct}"
            )
        pos = positive_label

    y = np.array([1.0 if lab == pos else -1.0 for lab in raw_labels])
    dataset_name = name if name is not None else os.path.splitext(os.path.basename(path))[0]
    return Dataset(dataset_name, np.array(features, dtype=np.float64), y, source_path=str(path))


def _class_indices(y: np.ndarray) -> tuple[list[int], list[int]]:
    pos = [int(i) for i in np.flatnonzero(y > 0)]
    neg = [int(i) for i in np.flatnonzero(y < 0)]
    return pos, neg


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic train/test split; train and test rows keep original order.

    Stratified mode draws per-class counts proportional to class sizes,
    rounding down for the +1 class and giving the remainder to the -1 class.
    """
    pos, neg = _class_indices(ds.y)
    if not pos or not neg:
        raise InsufficientClassSamples("dataset must contain both classes")

    total = round_half_up(spec.train_fraction * ds.m)
    rng = SplitMix64(spec.seed)
    if spec.stratified:
        n_pos = math.floor(total * len(pos) / ds.m)
        n_neg = total - n_pos
        if not (1 <= n_pos <= len(pos) and 1 <= n_neg <= len(neg)):
            raise InsufficientClassSamples(
                f"cannot draw {n_pos}+{n_neg} train rows from classes of "
                f"size {len(pos)}/{len(neg)}"
            )
        rng.shuffle(pos)
        rng.shuffle(neg)
        train_idx = sorted(pos[:n_pos] + neg[:n_neg])
    else:
        order = rng.shuffle(list(range(ds.m)))
        train_idx = sorted(order[:total])
        chosen = ds.y[train_idx]
        if not ((chosen > 0).any() and (chosen < 0).any()):
            raise InsufficientClassSamples("unstratified draw missed a class")

    in_train = np.zeros(ds.m, dtype=bool)
    in_train[train_idx] = True
    test_idx = [int(i) for i in np.flatnonzero(~in_train)]
    return ds.take(train_idx), ds.take(test_idx)


def inject_label_noise(train: Dataset, fraction: float, seed: int) -> Dataset:
    """Flip exactly round-half-up(fraction * m) labels, chosen without replacement."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("noise fraction must lie in [0, 1]")
    flips = round_half_up(fraction * train.m)
    order = SplitMix64(seed).shuffle(list(range(train.m)))
    y = train.y.copy()
    for i in order[:flips]:
        y[i] = -y[i]
    return Dataset(train.name, train.X, y, train.source_path)


def _interleaved_permutation(y: np.ndarray, seed: int) -> list[int]:
    """Class-interleaved permutation whose every prefix of length >= 2 holds
    both classes and stays within one sample of proportional stratification.

    Positions 0 and 1 take one sample from each class (larger class first);
    later positions go to the class with the larger proportional deficit.
    """
    pos, neg = _class_indices(y)
    rng = SplitMix64(seed)
    rng.shuffle(pos)
    rng.shuffle(neg)
    m = len(pos) + len(neg)
    first, second = (pos, neg) if len(pos) >= len(neg) else (neg, pos)
    perm = [first[0], second[0]]
    taken = {id(first): 1, id(second): 1}
    while len(perm) < m:
        t = len(perm) + 1
        deficit_first = t * len(first) / m - taken[id(first)]
        deficit_second = t * len(second) / m - taken[id(second)]
        if taken[id(second)] >= len(second):
            src = first
        elif taken[id(first)] >= len(first):
            src = second
        elif deficit_first >= deficit_second:
            src = first
        else:
            src = second
        perm.append(src[taken[id(src)]])
        taken[id(src)] += 1
    return perm


def subsample(train: Dataset, fraction: float, seed: int) -> Dataset:
    """Stratified prefix subsample of round-half-up(fraction * m) rows.

    Samples at different fractions of the same seed are prefixes of one
    permutation, so a larger fraction always contains a smaller one; rows
    are returned in original order, making fraction 1.0 the identity.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("subsample fraction must lie in (0, 1]")
    k = round_half_up(fraction * train.m)
    if k >= train.m:
        return train
    if k < 2:
        raise InsufficientClassSamples(
            f"subsample of {k} row(s) cannot retain both classes"
        )
    pos, neg = _class_indices(train.y)
    if not pos or not neg:
        raise InsufficientClassSamples("dataset must contain both classes")
    perm = _interleaved_permutation(train.y, seed)
    return train.take(sorted(perm[:k]))


def load_manifest(path: str) -> list[dict]:
    """Read a dataset manifest: a JSON list of entries with keys
    name, file, expected_m, expected_n and optional loader options."""
    try:
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise IoError(f"{path}: manifest must be a JSON list")
    for e in entries:
        for key in ("name", "file", "expected_m", "expected_n"):
            if key not in e:
                raise IoError(f"{path}: manifest entry missing {key!r}: {e}")
    return entries


def load_from_manifest(entry: dict, base_dir: str = ".") -> Dataset:
    """Load one manifest entry and validate its dimensions loudly."""
    path = os.path.join(base_dir, entry["file"])
    ds = load_csv(
        path,
        has_header=bool(entry.get("has_header", False)),
        label_column=entry.get("label_column", "last"),
        positive_label=entry.get("positive_label", "auto"),
        name=entry["name"],
    )
    if (ds.m, ds.n) != (entry["expected_m"], entry["expected_n"]):
        raise DimensionMismatch(
            f"{entry['name']}: expected (m, n) = ({entry['expected_m']}, "
            f"{entry['expected_n']}), loaded ({ds.m}, {ds.n})"
        )
    return ds
