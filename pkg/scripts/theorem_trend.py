"""Moment reports over q = p^2 at fixed Y, showing the relative gap shrink with p.

    python3 scripts/theorem_trend.py --primes 31,47 --nu 1,2,3
"""

from __future__ import annotations

import argparse
import json
import math
import warnings
from dataclasses import dataclass, field

from apmoments.coeffs import generate_delta
from apmoments.harness import DualParams, OutOfRegimeWarning, moment_report
from apmoments.voronoi import WindowTransform


def needed_length(tr: WindowTransform, primes: list[int], Y: float) -> int:
    # Direct side runs to the window end hi * X, the dual side to M_max.
    n = 1
    for p in primes:
        params = DualParams.from_Y(p * p, Y, transform=tr)
        n = max(n, math.ceil(tr.spec.hi * params.X) + 1, params.M_max + 1)
    return n


@dataclass
class TrendConfig:
    primes: list[int] = field(default_factory=lambda: [31, 47])
    nus: list[int] = field(default_factory=lambda: [1, 2, 3])
    Y: float = 2.0
    e: int = 1
    threads: int = 1


def run(cfg: TrendConfig) -> list[dict]:
    tr = WindowTransform.integral(12)
    delta = generate_delta(needed_length(tr, cfg.primes, cfg.Y))
    rows = []
    for p in cfg.primes:
        params = DualParams.from_Y(p * p, cfg.Y, transform=tr)
        for nu in cfg.nus:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", OutOfRegimeWarning)
                rep = moment_report(delta, params, tr, nu, cfg.e, threads=cfg.threads)
            rel = abs(rep.lhs - rep.rhs_main) / abs(rep.rhs_main) if rep.rhs_main else None
            rows.append({"p": p, "nu": nu, "lhs": rep.lhs, "main": rep.rhs_main, "relative_gap": rel,
                         "budget": rep.error_budget["total"], "in_regime": rep.in_regime})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--primes", default="31,47")
    ap.add_argument("--nu", default="1,2,3")
    ap.add_argument("--Y", type=float, default=2.0)
    ap.add_argument("--threads", type=int, default=1)
    a = ap.parse_args()
    cfg = TrendConfig([int(t) for t in a.primes.split(",")], [int(t) for t in a.nu.split(",")], a.Y,
                      threads=a.threads)
    print(json.dumps(run(cfg), indent=2))


if __name__ == "__main__":
    main()
