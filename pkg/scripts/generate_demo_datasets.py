"""Regenerate the demo CSV datasets shipped under datasets/.

The files are committed; this script exists so they can be rebuilt
bit-identically (all randomness flows through the package's own PRNG, never
the platform default). Run from the repository root:

    python3 scripts/generate_demo_datasets.py
"""

from __future__ import annotations

import csv
import math
import os
import sys

from gmlsq import SplitMix64


def _gauss_pairs(rng: SplitMix64):
    """Box-Muller transform over the package PRNG."""
    while True:
        u1 = ((rng.next_u64() >> 11) + 1) * 2.0**-53  # (0, 1]
        u2 = (rng.next_u64() >> 11) * 2.0**-53  # [0, 1)
        r = math.sqrt(-2.0 * math.log(u1))
        yield r * math.cos(2.0 * math.pi * u2)
        yield r * math.sin(2.0 * math.pi * u2)


def make_blobs(path: str, seed: int, m_pos: int, m_neg: int, n: int,
               separation: float, spread: float) -> None:
    rng = SplitMix64(seed)
    gauss = _gauss_pairs(rng)
    rows = []
    for label, count, sign in (("pos", m_pos, 1.0), ("neg", m_neg, -1.0)):
        center = [sign * separation * (1.0 + 0.25 * (k % 3)) for k in range(n)]
        for _ in range(count):
            feat = [center[k] + spread * next(gauss) for k in range(n)]
            rows.append([f"{v:.6f}" for v in feat] + [label])
    order = rng.shuffle(list(range(len(rows))))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for i in order:
            writer.writerow(rows[i])
    print(f"wrote {path}: m = {len(rows)}, n = {n}")


def main() -> None:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "datasets"
    os.makedirs(out_dir, exist_ok=True)
    make_blobs(os.path.join(out_dir, "demo_blobs_a.csv"), seed=2024,
               m_pos=70, m_neg=50, n=4, separation=0.8, spread=1.0)
    make_blobs(os.path.join(out_dir, "demo_blobs_b.csv"), seed=7,
               m_pos=75, m_neg=75, n=6, separation=0.6, spread=1.1)


if __name__ == "__main__":
    main()
