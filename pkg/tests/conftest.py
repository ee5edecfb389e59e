"""Shared helpers for the test suite.

All synthetic instances are generated through the package's own PRNG so the
suite is deterministic across platforms regardless of global RNG state.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from gmlsq import SplitMix64


def uniform01(rng: SplitMix64) -> float:
    """Uniform double in [0, 1) from one 64-bit draw."""
    return (rng.next_u64() >> 11) * 2.0**-53


def standard_normal(rng: SplitMix64, count: int) -> np.ndarray:
    """Box-Muller normals driven by the package PRNG."""
    out = np.empty(count)
    i = 0
    while i < count:
        u1 = ((rng.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (rng.next_u64() >> 11) * 2.0**-53
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        i += 1
        if i < count:
            out[i] = r * math.sin(2.0 * math.pi * u2)
            i += 1
    return out


def random_instance(seed: int, m: int, n: int, *, separation: float = 2.0,
                    spread: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Two gaussian blobs with at least two points per class.

    Returns (x, y) with y in {-1, +1}; class sizes vary with the seed but
    never drop below two so stratified splitting stays feasible.
    """
    if m < 4:
        raise ValueError("need m >= 4 for two points per class")
    rng = SplitMix64(seed)
    m_pos = 2 + rng.next_below(m - 3)  # 2 .. m - 2
    y = np.concatenate([np.ones(m_pos), -np.ones(m - m_pos)])
    x = standard_normal(rng, m * n).reshape(m, n) * spread
    x[: m_pos] += separation
    x[m_pos:] -= separation
    order = np.asarray(rng.shuffle(list(range(m))))
    return x[order], y[order]


def separated_instance(seed: int, m: int, n: int, *, min_dist: float = 0.5,
                       separation: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Two blobs with every pair of points at least min_dist apart.

    Random gaussian draws can land two same-class points arbitrarily close
    together, which drives smooth influence matrices toward singularity; the
    memorization and oracle guarantees are stated for nonsingular influence,
    so tests of those guarantees use this generator.
    """
    if m < 4:
        raise ValueError("need m >= 4 for two points per class")
    rng = SplitMix64(seed)
    m_pos = 2 + rng.next_below(m - 3)
    points: list[np.ndarray] = []
    while len(points) < m:
        cand = standard_normal(rng, n)
        cand += separation if len(points) < m_pos else -separation
        if all(np.linalg.norm(cand - p) >= min_dist for p in points):
            points.append(cand)
    x = np.array(points)
    y = np.concatenate([np.ones(m_pos), -np.ones(m - m_pos)])
    order = np.asarray(rng.shuffle(list(range(m))))
    return x[order], y[order]


def blob_dataset(seed: int, m: int, n: int, **kw):
    """random_instance wrapped in a Dataset for split/bench helpers."""
    from gmlsq import Dataset

    x, y = random_instance(seed, m, n, **kw)
    return Dataset(name=f"blobs-{seed}", X=x, y=y)


@pytest.fixture
def tiny_fixture():
    """Two one-dimensional points, one per class: the hand-checkable case."""
    x = np.array([[0.0], [1.0]])
    y = np.array([1.0, -1.0])
    return x, y


def wimm_full_stationarity(x, y, delta, gamma, lam):
    """Independent oracle: assemble and solve the complete first-order
    system in the unknowns (w, b, xi, alpha) for the linear kernel.

    Rows: gradient in w; gradient in b; gradient in each xi_k; the m
    equality constraints. No bordered reduction is involved.
    """
    m, n = x.shape
    yd = np.diag(y)
    mem = yd @ delta @ yd  # entry (k, i) = y_k y_i delta(x_i, x_k)
    size = n + 1 + 2 * m
    a = np.zeros((size, size))
    rhs = np.zeros(size)
    sw, sb, sxi, sal = (slice(0, n), slice(n, n + 1),
                        slice(n + 1, n + 1 + m), slice(n + 1 + m, size))
    a[sw, sw] = np.eye(n)
    a[sw, sal] = -x.T @ yd
    a[sb, sal] = y
    a[sxi, sxi] = gamma * np.eye(m)
    a[sxi, sal] = -mem
    rhs[sxi] = -lam * (mem @ np.ones(m))
    a[sal, sw] = yd @ x
    a[sal, sb] = y.reshape(-1, 1)
    a[sal, sxi] = mem
    rhs[sal] = 1.0
    sol = np.linalg.solve(a, rhs)
    return sol[sw], float(sol[sb][0]), sol[sxi], sol[sal]


def lssvm_full_stationarity(x, y, gamma):
    """Same oracle for the baseline: memory block replaced by the identity."""
    return wimm_full_stationarity(x, y, np.diag(y) @ np.eye(len(y)) @ np.diag(y), gamma, 0.0)


def mimm_full_stationarity(x, y, delta_vec, gamma, lam):
    """Full first-order system for the centroid-influence model."""
    m, n = x.shape
    yd = np.diag(y)
    d = np.diag(delta_vec)
    size = n + 1 + 2 * m
    a = np.zeros((size, size))
    rhs = np.zeros(size)
    sw, sb, sxi, sal = (slice(0, n), slice(n, n + 1),
                        slice(n + 1, n + 1 + m), slice(n + 1 + m, size))
    a[sw, sw] = np.eye(n)
    a[sw, sal] = -x.T @ yd
    a[sb, sal] = y
    a[sxi, sxi] = gamma * np.eye(m)
    a[sxi, sal] = -d
    rhs[sxi] = -lam * delta_vec
    a[sal, sw] = yd @ x
    a[sal, sb] = y.reshape(-1, 1)
    a[sal, sxi] = d
    rhs[sal] = 1.0
    sol = np.linalg.solve(a, rhs)
    return sol[sw], float(sol[sb][0]), sol[sxi], sol[sal]
