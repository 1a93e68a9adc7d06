"""Dual values over a QR prime: zero atom, even moments and an SVG histogram.

    python3 scripts/mixed_distribution.py --M-max 12 --svg mixed.svg
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apmoments.acceptance import mixed_distribution_data
from apmoments.coeffs import generate_delta
from apmoments.harness import class_mask, empirical_moment, main_term, restricted_variance
from apmoments.svg import emit_histogram
from apmoments.voronoi import WindowTransform


@dataclass
class MixedConfig:
    M_max: int = 12
    bins: int = 40
    svg: Path | None = None


def run(cfg: MixedConfig) -> dict:
    tr = WindowTransform.integral(12)
    delta = generate_delta(1000)
    rec, params, M = mixed_distribution_data(delta, tr, cfg.M_max)
    mod = params.modulus
    units = class_mask(mod, 1) | class_mask(mod, -1)
    V = restricted_variance(delta, params, tr, 1)
    out = {"p": rec.p, "least_nonresidue": rec.least_nonresidue, "M_max": params.M_max, "V_plus": V,
           "zero_fraction": float(np.mean(M[units] == 0))}
    for nu in (2, 4):
        emp = float(empirical_moment(M, mod, nu, 1))
        out[f"ratio_nu{nu}"] = emp / main_term(delta, params, tr, nu, 1)
    if cfg.svg:
        cfg.svg.write_text(emit_histogram(M[units], cfg.bins, V, title=f"dual values, q = {rec.p}^2"))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M-max", type=int, default=12)
    ap.add_argument("--bins", type=int, default=40)
    ap.add_argument("--svg", type=Path, default=None)
    a = ap.parse_args()
    print(json.dumps(run(MixedConfig(a.M_max, a.bins, a.svg)), indent=2))


if __name__ == "__main__":
    main()
