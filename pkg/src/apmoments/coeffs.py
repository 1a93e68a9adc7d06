"""Normalized Fourier coefficient series.

The discriminant function is generated exactly.  eta^3 has the sparse Jacobi
expansion sum_k (-1)^k (2k+1) q^{k(k+1)/2}, and eta^24 = ((eta^3)^2)^2)^2, so
three squarings give tau.  Each squaring runs modulo several NTT primes.
Garner reconstruction happens once at the end, because tau is bounded by
d(n) n^{11/2} and d(n) <= 2 sqrt(n).  Half-integral weight series are only
read from files.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np

from .ntt import (
    MAX_LOG_SIZE,
    ModularConvolver,
    garner_digits,
    garner_float,
    garner_int,
    primes_for_bound,
    transform_size,
)

DELTA_WEIGHT = 12
# Largest X whose three squarings fit in one 2^26-point transform.
MAX_DELTA_X = 1 << (MAX_LOG_SIZE - 1)
_GARNER_CHUNK = 1 << 22


class WeightKind(str, Enum):
    INTEGRAL = "integral"
    HALF_INTEGRAL = "half_integral"


class Cusp(str, Enum):
    INFINITY = "infinity"
    ZERO = "zero"
    MINUS_HALF = "minus_half"


class Source(str, Enum):
    GENERATED_DELTA = "generated_delta"
    FILE = "file"
    SYNTHETIC = "synthetic"


class CoefficientError(ValueError):
    """Malformed or inconsistent coefficient data."""


@dataclass(frozen=True, eq=False)
class CoefficientSeries:
    """Real normalized coefficients a(1..X).

    ``values`` has length X + 1 with ``values[0] == 0`` so that the array can
    be indexed directly by n.

    Attributes:
        values: read-only float64 array.
        kind: integral or half-integral weight.
        weight: kappa for integral weight, ell for weight ell + 1/2.
        cusp: expansion cusp the coefficients belong to.
        source: where the numbers came from.
        normalized: whether values[1] = 1 is promised.
        eigenform: whether the file claims a Hecke eigenform.
    """

    values: np.ndarray
    kind: WeightKind = WeightKind.INTEGRAL
    weight: int = DELTA_WEIGHT
    cusp: Cusp = Cusp.INFINITY
    source: Source = Source.SYNTHETIC
    normalized: bool = False
    eigenform: bool = False

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) < 2:
            raise CoefficientError("empty series")
        if v[0] != 0:
            raise CoefficientError("values[0] must be 0 (series are indexed from 1)")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise CoefficientError(f"non-finite coefficient at {bad}")
        if self.normalized and v[1] != 1:
            raise CoefficientError(f"normalized series must have a(1) = 1, got {v[1]}")
        if v.flags.writeable:
            v = v.copy()
            v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "kind", WeightKind(self.kind))
        object.__setattr__(self, "cusp", Cusp(self.cusp))
        object.__setattr__(self, "source", Source(self.source))

    @property
    def length(self) -> int:
        return len(self.values) - 1

    @classmethod
    def synthetic(cls, coeffs: Sequence[float], **kw) -> CoefficientSeries:
        """Series from a(1), a(2), ... given as a plain sequence."""
        v = np.concatenate([[0.0], np.asarray(coeffs, dtype=np.float64)])
        return cls(v, source=Source.SYNTHETIC, **kw)

    def scaled(self, c: float) -> CoefficientSeries:
        return replace(self, values=self.values * c, normalized=False)

    def truncated(self, X: int) -> CoefficientSeries:
        if X > self.length:
            raise CoefficientError(f"series has length {self.length} < {X}")
        return replace(self, values=self.values[: X + 1])

    def metadata(self) -> dict:
        meta = {
            "kind": self.kind.value,
            "cusp": self.cusp.value,
            "normalized": self.normalized,
            "eigenform": self.eigenform,
            "source": self.source.value,
        }
        meta["kappa" if self.kind is WeightKind.INTEGRAL else "ell"] = self.weight
        return meta


@dataclass(frozen=True)
class RankinEstimate:
    grid: tuple[int, ...]
    ratios: tuple[float, ...]
    weighted_ratios: tuple[float, ...] = field(default=())

    @property
    def c_f(self) -> float:
        return self.ratios[-1]


# -- tau ---------------------------------------------------------------------


def eta_cubed(length: int) -> np.ndarray:
    """Coefficients 0..length-1 of prod (1 - q^n)^3."""
    out = np.zeros(length, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < length:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


def _tau_bound(X: int) -> int:
    # |tau(n)| <= d(n) n^{11/2} <= 2 n^6.
    return 2 * X**6


def _check_delta_size(X: int) -> None:
    if not 1 <= X <= MAX_DELTA_X:
        raise ValueError(
            f"X={X} outside [1, {MAX_DELTA_X}]; the NTT size cap is 2^{MAX_LOG_SIZE}"
        )
    size = transform_size(X, X)
    n_primes = len(primes_for_bound(_tau_bound(X)))
    need = 8 * size + 8 * (size // 2) * 2 + 4 * X * n_primes + 8 * 4 * _GARNER_CHUNK
    total = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    if need > 0.8 * total:
        raise MemoryError(f"tau up to {X} needs about {need >> 20} MiB")


def tau_residues(X: int) -> tuple[list[np.ndarray], list[int]]:
    """tau(1..X) modulo each CRT prime, as uint32 arrays."""
    _check_delta_size(X)
    chosen = primes_for_bound(_tau_bound(X))
    size = transform_size(X, X)
    base = eta_cubed(X)
    residues = []
    for p, g in chosen:
        conv = ModularConvolver(p, g, size)
        cur = np.mod(base, p).astype(np.uint64)
        for _ in range(3):
            cur = conv.multiply(cur, None, X)
        residues.append(cur.astype(np.uint32))
        del conv, cur
    return residues, [p for p, _ in chosen]


def ramanujan_tau(X: int) -> np.ndarray:
    """Exact tau(1..X) as an object array of Python ints (index 0 holds tau(1))."""
    residues, primes = tau_residues(X)
    return garner_int(garner_digits(residues, primes), primes)


def ramanujan_tau_schoolbook(X: int) -> list[int]:
    """tau(1..X) by expanding prod_n (1 - q^n)^24 factor by factor.

    Each factor is applied through its binomial expansion, with no
    transforms involved; this is the independent oracle for ``ramanujan_tau``.
    """
    series = np.zeros(X, dtype=object)
    series[0] = 1
    binom = [(-1) ** k * math.comb(24, k) for k in range(25)]
    for n in range(1, X):
        acc = series.copy()
        for k in range(1, min(24, (X - 1) // n) + 1):
            acc[n * k :] += binom[k] * series[: X - n * k]
        series = acc
    return [int(v) for v in series]


def generate_delta(X: int) -> CoefficientSeries:
    """Normalized a(n) = tau(n) / n^{11/2} for n <= X."""
    residues, primes = tau_residues(X)
    values = np.zeros(X + 1)
    for lo in range(0, X, _GARNER_CHUNK):
        hi = min(lo + _GARNER_CHUNK, X)
        digits = garner_digits([r[lo:hi] for r in residues], primes)
        n = np.arange(lo + 1, hi + 1, dtype=np.float64)
        values[lo + 1 : hi + 1] = garner_float(digits, primes) / n**5.5
    values.flags.writeable = False
    return CoefficientSeries(
        values,
        kind=WeightKind.INTEGRAL,
        weight=DELTA_WEIGHT,
        cusp=Cusp.INFINITY,
        source=Source.GENERATED_DELTA,
        normalized=True,
        eigenform=True,
    )


# -- file I/O ----------------------------------------------------------------


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _parse_metadata(meta: dict) -> dict:
    kind = WeightKind(meta.get("kind", "half_integral"))
    if kind is WeightKind.INTEGRAL:
        weight = int(meta.get("kappa", meta.get("weight", DELTA_WEIGHT)))
    else:
        if "ell" not in meta:
            raise CoefficientError("half-integral metadata must declare ell")
        weight = int(meta["ell"])
    return {
        "kind": kind,
        "weight": weight,
        "cusp": Cusp(meta.get("cusp", "infinity")),
        "normalized": bool(meta.get("normalized", False)),
        "eigenform": bool(meta.get("eigenform", False)),
    }


def load_coefficients(path: str | os.PathLike, metadata: dict | None = None) -> CoefficientSeries:
    """Read a ``n,coeff`` CSV (plus JSON sidecar when metadata is None).

    Raises:
        FileNotFoundError: if the CSV does not exist.
        CoefficientError: bad header, malformed rows, index gaps, non-finite
            values, or no rows at all.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no coefficient file at {path}")
    if metadata is None:
        side = _sidecar(path)
        metadata = json.loads(side.read_text()) if side.exists() else {}
    meta = _parse_metadata(metadata)
    coeffs: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["n", "coeff"]:
            raise CoefficientError(f"expected header 'n,coeff', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CoefficientError(f"malformed row at line {lineno}: {row}")
            try:
                n, c = int(row[0]), float(row[1])
            except ValueError as exc:
                raise CoefficientError(f"malformed row at line {lineno}: {row}") from exc
            expected = len(coeffs) + 1
            if n != expected:
                raise CoefficientError(f"index gap at {expected}")
            if not math.isfinite(c):
                raise CoefficientError(f"non-finite coefficient at {n}")
            coeffs.append(c)
    if not coeffs:
        raise CoefficientError("empty series")
    series = CoefficientSeries(
        np.concatenate([[0.0], coeffs]), source=Source.FILE, **meta
    )
    if series.eigenform and series.kind is WeightKind.HALF_INTEGRAL:
        ceiling_warning(series)
    return series


def write_coefficients(series: CoefficientSeries, path: str | os.PathLike) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "coeff"])
        for n, c in enumerate(series.values[1:].tolist(), start=1):
            out.writerow([n, repr(c)])
    _sidecar(path).write_text(json.dumps(series.metadata(), indent=2) + "\n")


# -- checks ------------------------------------------------------------------

CEILING_EXPONENT = 1 / 6 + 0.05


def ceiling_warning(series: CoefficientSeries, calibrate: int = 100) -> int:
    """Advisory growth check |a(n)| <= C n^{1/6 + 0.05}.

    C is the largest ratio over the first ``calibrate`` entries.  Returns the
    number of later entries above the ceiling and warns when it is nonzero.
    """
    v = np.abs(series.values[1:])
    n = np.arange(1, len(v) + 1, dtype=np.float64)
    ratio = v / n**CEILING_EXPONENT
    C = ratio[:calibrate].max()
    over = int(np.count_nonzero(ratio[calibrate:] > C))
    if over:
        warnings.warn(
            f"{over} coefficients exceed the calibrated ceiling {C:.4g} n^{CEILING_EXPONENT:.4f}",
            stacklevel=2,
        )
    return over


@nb.njit(cache=True)
def divisor_counts(n: int) -> np.ndarray:
    """d[k] = number of divisors of k for k <= n (d[0] = 0)."""
    d = np.zeros(n + 1, dtype=np.int32)
    for k in range(1, n + 1):
        for j in range(k, n + 1, k):
            d[j] += 1
    return d


def deligne_violations(series: CoefficientSeries, n_max: int | None = None) -> np.ndarray:
    """Indices n <= n_max with |a(n)| > d(n)."""
    n_max = series.length if n_max is None else min(n_max, series.length)
    d = divisor_counts(n_max)
    a = np.abs(series.values[: n_max + 1])
    return np.flatnonzero(a[1:] > d[1:] * (1 + 1e-12)) + 1


def rankin_estimate(series: CoefficientSeries, grid: Sequence[int]) -> RankinEstimate:
    """Partial sums sum_{m<=Y} |a(m)|^2 / Y and sum |a(m)|^2 / sqrt(m) / sqrt(Y)."""
    grid = tuple(int(Y) for Y in grid)
    if not grid or min(grid) < 1 or max(grid) > series.length:
        raise ValueError(f"grid must lie in [1, {series.length}]")
    sq = series.values**2
    m = np.arange(len(sq), dtype=np.float64)
    m[0] = 1.0
    plain = np.cumsum(sq)
    weighted = np.cumsum(sq / np.sqrt(m))
    return RankinEstimate(
        grid,
        tuple(float(plain[Y] / Y) for Y in grid),
        tuple(float(weighted[Y] / math.sqrt(Y)) for Y in grid),
    )
