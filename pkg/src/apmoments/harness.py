"""Direct and dual sums over residue classes, and their moments.

Direct side: S(X, q, a) = sum_{n = a (q)} a(n) w(n/X) and E = S / sqrt(X/q),
obtained in one bucketing pass over n.

Dual side: M(a) = Y^{-1/2} sum_{m < M_max} c(m) K(m a) B(m/Y), with K the
Kloosterman value Kl_q(1, .) in integral weight and Sa_q in half-integral
weight.  Both depend on m a only through its residue, so the coefficients
are bucketed by m mod q first and the sweep over a becomes one gather per
unit residue.

Every reduction uses fixed-size blocks summed in a fixed order, so results
do not depend on the thread count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .coeffs import CoefficientSeries
from .expsum import kloosterman_sweep, legendre_table, sa_sweep
from .modarith import PrimePowerModulus, as_modulus, epsilon_factor
from .voronoi import WindowSpec, WindowTransform

_BLOCK = 1 << 18


class Mode(str, Enum):
    INTEGRAL = "integral"
    HALF_INTEGRAL = "half_integral"


class OutOfRegimeWarning(UserWarning):
    """The growth hypothesis of the moment asymptotics is violated."""


def _tree_sum(parts: list[np.ndarray]) -> np.ndarray:
    # Pairwise reduction in a fixed order.
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _map_blocks(fn: Callable[[int, int], np.ndarray], total: int, threads: int) -> list[np.ndarray]:
    bounds = [(lo, min(lo + _BLOCK, total)) for lo in range(0, total, _BLOCK)]
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda b: fn(*b), bounds))
    return [fn(lo, hi) for lo, hi in bounds]


@dataclass(frozen=True)
class DualParams:
    """Sizes tying the direct sum of length X to the dual sum of length M_max.

    Y = q^2/X in integral weight and 4q^2/X in half-integral weight.  The
    dual sum runs over 1 <= m < M_max.
    """

    X: float
    modulus: PrimePowerModulus
    Y: float
    eta: float
    M_max: int
    mode: Mode = Mode.INTEGRAL

    def __post_init__(self) -> None:
        if self.Y <= 0 or self.X <= 0:
            raise ValueError(f"need X, Y > 0, got X={self.X}, Y={self.Y}")
        if self.M_max < 1:
            raise ValueError(f"M_max must be >= 1, got {self.M_max}")

    @property
    def q(self) -> int:
        return self.modulus.q

    @classmethod
    def from_Y(
        cls,
        q: int | PrimePowerModulus,
        Y: float,
        mode: Mode | str = Mode.INTEGRAL,
        eta: float | None = None,
        transform: WindowTransform | None = None,
        tail_tol: float = 1e-9,
    ) -> DualParams:
        """Fix Y and derive X; M_max = ceil(Y^{1+eta}).

        With eta=None the cutoff is taken large enough that the dropped
        kernel tail Y^{1/2} int_{M/Y} |B| is below tail_tol, and eta is
        reported back as log(M_max)/log(Y) - 1 (Y > 1).
        """
        mod = as_modulus(q)
        mode = Mode(mode)
        X = (4 if mode is Mode.HALF_INTEGRAL else 1) * mod.q**2 / Y
        if eta is not None:
            if eta <= 0:
                raise ValueError(f"eta must be positive, got {eta}")
            M = math.ceil(Y ** (1 + eta))
        else:
            if transform is None:
                raise ValueError("automatic cutoff needs the kernel transform")
            x_cut = transform.cutoff(tail_tol / math.sqrt(Y))
            M = max(math.ceil(Y**1.5), math.ceil(x_cut * Y))
            eta = math.log(M) / math.log(Y) - 1 if Y > 1 else math.inf
        return cls(X, mod, Y, eta, M, mode)


@dataclass(frozen=True)
class DirectSums:
    """S and E for every residue a mod q (non-units included, flagged)."""

    S: np.ndarray
    E: np.ndarray
    units: np.ndarray
    total: float


def compute_E(
    series: CoefficientSeries,
    params: DualParams,
    window: WindowSpec | None = None,
    threads: int = 1,
) -> DirectSums:
    """One pass over n in the window support, bucketed by n mod q.

    Raises:
        ValueError: if the series is shorter than hi * X.
    """
    window = window or WindowSpec.default()
    X, q = params.X, params.q
    n_lo = max(1, math.floor(window.lo * X))
    n_hi = math.ceil(window.hi * X)
    if n_hi > series.length:
        raise ValueError(f"series too short: length {series.length}, need {n_hi}")
    vals = series.values

    def block(lo: int, hi: int) -> np.ndarray:
        n = np.arange(n_lo + lo, n_lo + hi)
        return np.bincount(n % q, weights=vals[n] * window(n / X), minlength=q)

    S = _tree_sum(_map_blocks(block, n_hi - n_lo + 1, threads))
    units = np.arange(q) % params.modulus.p != 0
    return DirectSums(S, S / math.sqrt(X / q), units, float(S.sum()))


def dual_table(params: DualParams) -> np.ndarray:
    """K(r) for r mod q: Kl_q(1, r) (integral) or Sa_q(r) (half-integral)."""
    if params.mode is Mode.INTEGRAL:
        if params.modulus.N < 2:
            raise ValueError("the closed-form dual side needs N >= 2")
        return kloosterman_sweep(1, params.modulus)
    return sa_sweep(1, params.modulus).astype(complex)


def front_factor(params: DualParams, weight: int) -> complex:
    """i^kappa in integral weight, eps_q^{-2 ell} in weight ell + 1/2."""
    if params.mode is Mode.INTEGRAL:
        return 1j**weight
    return epsilon_factor(params.q) ** (-2 * weight)


def dual_coefficients(
    dual: CoefficientSeries, params: DualParams, transform: WindowTransform
) -> np.ndarray:
    """c(m) = a(m) B(m/Y) / sqrt(Y) for 1 <= m < M_max (index 0 is m = 1)."""
    M = params.M_max - 1
    if M > dual.length:
        raise ValueError(f"dual series has length {dual.length}, need {M}")
    m = np.arange(1, M + 1)
    return dual.values[1 : M + 1] * transform(m / params.Y) / math.sqrt(params.Y)


def compute_dual_M(
    dual: CoefficientSeries,
    params: DualParams,
    transform: WindowTransform,
    threads: int = 1,
) -> np.ndarray:
    """M(a) for every residue a mod q (zero where p | a), front factor excluded."""
    q, p = params.q, params.modulus.p
    c = dual_coefficients(dual, params, transform)
    m = np.arange(1, len(c) + 1)
    keep = m % p != 0
    buckets = np.bincount(m[keep] % q, weights=c[keep], minlength=q)
    K = dual_table(params)
    a = np.arange(q, dtype=np.int64)
    rows = np.flatnonzero(buckets)

    def block(lo: int, hi: int) -> np.ndarray:
        acc = np.zeros(q, dtype=complex)
        for b in rows[lo:hi]:
            acc += buckets[b] * K[a * b % q]
        return acc

    per = 64
    chunks = [(lo, min(lo + per, len(rows))) for lo in range(0, len(rows), per)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: block(*b), chunks))
    else:
        parts = [block(lo, hi) for lo, hi in chunks]
    out = _tree_sum(parts) if parts else np.zeros(q, dtype=complex)
    out[a % p == 0] = 0
    return out


def class_mask(mod: PrimePowerModulus, e: int) -> np.ndarray:
    """Residues a mod q with (a/p) = e."""
    if e not in (1, -1):
        raise ValueError(f"class must be +1 or -1, got {e}")
    chi = legendre_table(mod.p)
    return chi[np.arange(mod.q) % mod.p] == e


def _fsum_complex(z: np.ndarray) -> complex:
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def empirical_moment(values: np.ndarray, mod: PrimePowerModulus, nu: int, e: int) -> complex | float:
    """(2/phi(q)) sum_{(a/p)=e} values[a]^nu.

    Raises:
        ValueError: for an empty class.
    """
    mask = class_mask(mod, e)
    if not mask.any():
        raise ValueError("empty residue class")
    v = np.asarray(values)[mask] ** nu
    if np.iscomplexobj(v):
        total = _fsum_complex(v)
        return total * 2 / mod.phi if total.imag else total.real * 2 / mod.phi
    return math.fsum(v.tolist()) * 2 / mod.phi


def restricted_variance(
    dual: CoefficientSeries, params: DualParams, transform: WindowTransform, e: int
) -> float:
    """V_e = (1/Y) sum_{1 <= m < M_max, (m/p) = e} a(m)^2 B(m/Y)^2."""
    c = dual_coefficients(dual, params, transform)
    m = np.arange(1, len(c) + 1)
    chi = legendre_table(params.modulus.p)[m % params.modulus.p]
    return math.fsum((c[chi == e] ** 2).tolist())


def gaussian_factor(nu: int) -> int:
    """nu!/(nu/2)! for even nu, 0 for odd nu."""
    if nu % 2:
        return 0
    return math.factorial(nu) // math.factorial(nu // 2)


def main_term(
    dual: CoefficientSeries, params: DualParams, transform: WindowTransform, nu: int, e: int
) -> float:
    if nu % 2:
        return 0.0
    return gaussian_factor(nu) * restricted_variance(dual, params, transform, e) ** (nu // 2)


def growth_constant(nu: int) -> float:
    """C_nu = 1 / (2 nu^(2^(nu-1)))."""
    return 1.0 / (2 * nu ** (2 ** (nu - 1)))


def in_regime(params: DualParams, nu: int, delta: float) -> bool:
    """1 <= Y^(2^(nu-2) + delta) < C_nu q."""
    val = params.Y ** (2.0 ** (nu - 2) + delta)
    return 1 <= val < growth_constant(nu) * params.q


@dataclass
class MomentReport:
    nu: int
    e: int
    mode: str
    p: int
    N: int
    X: float
    Y: float
    eta: float
    M_max: int
    lhs: float
    rhs_main: float
    V_e: float
    error_budget: dict
    class_size: int
    in_regime: bool
    delta: float
    alt_lhs: float | None = None
    calibration: float | None = None
    dual_cusp: str = "infinity"
    direct_cusp: str = "infinity"
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def alternative_E(direct: DirectSums, lower: DirectSums, params: DualParams) -> np.ndarray:
    """(S_{p^N}(a) - S_{p^{N-1}}(a mod p^{N-1}) / p) / sqrt(X/p^N) for every a mod q."""
    q, low_q = params.q, lower.S.shape[0]
    a = np.arange(q)
    return (direct.S - lower.S[a % low_q] / params.modulus.p) / math.sqrt(params.X / q)


def moment_report(
    series: CoefficientSeries,
    params: DualParams,
    transform: WindowTransform,
    nu: int,
    e: int,
    dual: CoefficientSeries | None = None,
    window: WindowSpec | None = None,
    delta: float = 0.0,
    calibration: float | None = None,
    threads: int = 1,
) -> MomentReport:
    """Empirical class moment of E against the main term and error budget.

    ``series`` feeds the direct side.  The main term uses ``dual`` when given
    (the cusp-0 series in half-integral weight), else ``series`` itself.
    """
    window = window or transform.spec
    dual = dual if dual is not None else series
    if params.mode is Mode.HALF_INTEGRAL and dual is series:
        raise ValueError("half-integral reports need the cusp-0 series as `dual`")
    direct = compute_E(series, params, window, threads)
    lhs = empirical_moment(direct.E, params.modulus, nu, e)
    V = restricted_variance(dual, params, transform, e)
    rhs = gaussian_factor(nu) * V ** (nu // 2) if nu % 2 == 0 else 0.0
    p = params.modulus.p
    first = params.Y ** (-0.5 if params.mode is Mode.INTEGRAL else -1 / 3)
    budget = {"decay": first, "modulus": params.Y ** (nu / 2) / p}
    budget["total"] = budget["decay"] + budget["modulus"]
    ok = in_regime(params, nu, delta)
    notes = []
    if not ok:
        msg = (
            f"out of regime: Y^(2^(nu-2)+delta) = {params.Y ** (2.0 ** (nu - 2) + delta):.4g} "
            f"vs C_nu q = {growth_constant(nu) * params.q:.4g}"
        )
        warnings.warn(msg, OutOfRegimeWarning, stacklevel=2)
        notes.append(msg)
    alt = None
    low = params.modulus.lower()
    if low is not None:
        low_params = DualParams(params.X, low, params.Y, params.eta, params.M_max, params.mode)
        lower = compute_E(series, low_params, window, threads)
        alt = float(np.real(empirical_moment(alternative_E(direct, lower, params), params.modulus, nu, e)))
    return MomentReport(
        nu=nu,
        e=e,
        mode=params.mode.value,
        p=p,
        N=params.modulus.N,
        X=params.X,
        Y=params.Y,
        eta=params.eta,
        M_max=params.M_max,
        lhs=float(np.real(lhs)),
        rhs_main=rhs,
        V_e=V,
        error_budget=budget,
        class_size=params.modulus.phi // 2,
        in_regime=ok,
        delta=delta,
        alt_lhs=alt,
        calibration=calibration,
        dual_cusp=dual.cusp.value,
        direct_cusp=series.cusp.value,
        notes=notes,
    )


# -- distribution -------------------------------------------------------------


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def mixture_moment(nu: int, V: float) -> float:
    """nu-th moment of (1/2) delta_0 + (1/2) N(0, 2V)."""
    if nu % 2:
        return 0.0
    return 0.5 * (2 * V) ** (nu // 2) * double_factorial(nu - 1)


@dataclass(frozen=True)
class DistributionRecord:
    empirical: tuple[float, ...]
    mixture: tuple[float, ...]
    gaps: tuple[float, ...]
    zero_mass: float
    count: int


def distribution_test(values: Sequence[float], V: float, max_nu: int = 4) -> DistributionRecord:
    """Moments 1..max_nu of ``values`` against the mixture with variance 2V."""
    if V <= 0:
        raise ValueError(f"V must be positive, got {V}")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values")
    emp = tuple(math.fsum((v**k).tolist()) / v.size for k in range(1, max_nu + 1))
    mix = tuple(mixture_moment(k, V) for k in range(1, max_nu + 1))
    gaps = tuple(abs(a - b) for a, b in zip(emp, mix))
    return DistributionRecord(emp, mix, gaps, float(np.count_nonzero(v == 0)) / v.size, int(v.size))


def dual_direct_gap(
    series: CoefficientSeries,
    params: DualParams,
    transform: WindowTransform,
    threads: int = 1,
) -> float:
    """max over units a of |E(a) - i^kappa M(a)| (integral weight)."""
    direct = compute_E(series, params, transform.spec, threads)
    M = compute_dual_M(series, params, transform, threads)
    diff = np.abs(direct.E - front_factor(params, series.weight) * M)
    return float(diff[direct.units].max())
