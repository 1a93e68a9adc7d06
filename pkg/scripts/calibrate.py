"""One-off oracle run at p = 11 that records the dual/direct calibration constant.

The stored value is the tolerance against which larger moduli are compared,
so it is measured here once and never typed in by hand.

    python3 scripts/calibrate.py [--out data/expected_results.json]
"""

from __future__ import annotations

import argparse
import json
import platform
from pathlib import Path

import numpy as np

from apmoments import __version__
from apmoments.acceptance import CALIBRATION_KEY, default_expected_path
from apmoments.coeffs import generate_delta
from apmoments.harness import DualParams, dual_direct_gap
from apmoments.voronoi import WindowTransform


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=11)
    ap.add_argument("--Y", type=float, default=2.0)
    ap.add_argument("--out", type=Path, default=default_expected_path())
    args = ap.parse_args()

    tr = WindowTransform.integral(12)
    params = DualParams.from_Y(args.p**2, args.Y, transform=tr)
    delta = generate_delta(int(np.ceil(tr.spec.hi * params.X)) + params.M_max)
    gap = dual_direct_gap(delta, params, tr)

    doc = json.loads(args.out.read_text()) if args.out.exists() else {}
    doc[CALIBRATION_KEY] = gap
    doc["calibration_run"] = {
        "p": args.p,
        "N": 2,
        "Y": args.Y,
        "X": params.X,
        "M_max": params.M_max,
        "eta": params.eta,
        "package_version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"max |E - i^k M| at p={args.p}: {gap:.6e} -> {args.out}")


if __name__ == "__main__":
    main()
