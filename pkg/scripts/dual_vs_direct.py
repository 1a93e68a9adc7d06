"""Sweep the gap between the direct sums E and the dual sums over q = p^2.

    python3 scripts/dual_vs_direct.py --primes 11,31,47 [--Y 2]
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

from apmoments.acceptance import dual_gap_series
from apmoments.coeffs import generate_delta
from apmoments.harness import DualParams
from apmoments.voronoi import WindowTransform


def needed_length(tr: WindowTransform, primes: list[int], Y: float) -> int:
    # Direct side runs to the window end hi * X, the dual side to M_max.
    n = 1
    for p in primes:
        params = DualParams.from_Y(p * p, Y, transform=tr)
        n = max(n, math.ceil(tr.spec.hi * params.X) + 1, params.M_max + 1)
    return n


@dataclass
class SweepConfig:
    primes: list[int] = field(default_factory=lambda: [11, 31, 47])
    Y: float = 2.0
    threads: int = 1


def run(cfg: SweepConfig) -> dict[int, float]:
    tr = WindowTransform.integral(12)
    delta = generate_delta(needed_length(tr, cfg.primes, cfg.Y))
    return dual_gap_series(delta, tr, cfg.primes, cfg.Y, cfg.threads)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--primes", default="11,31,47")
    ap.add_argument("--Y", type=float, default=2.0)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    cfg = SweepConfig([int(t) for t in a.primes.split(",")], a.Y, a.threads)
    print("p,max_gap")
    for p, gap in run(cfg).items():
        print(f"{p},{gap:.6e}")


if __name__ == "__main__":
    main()
