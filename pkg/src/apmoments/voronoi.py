"""Smooth windows, Mellin transforms and the Voronoi kernel B.

B is computed as an inverse Mellin integral on a vertical line,

    B(x) = (1/2 pi i) int_(sigma) G(s) w^(1 - s) x^{-s} ds,
    G(s) = (2 pi)^{1 - 2s} Gamma(s + c) / Gamma(1 - s + c),

with c = (kappa - 1)/2 in integral weight kappa and c = ell/2 - 1/4 in weight
ell + 1/2.  An independent route through the Hankel-type integral
2 pi int w(y) J_{2c}(4 pi sqrt(xy)) dy is kept as an oracle.

The window used by default is exp(-1/(1 - (2x - 3)^2)) on (1, 2).  It is
Gevrey rather than analytic, so its Mellin transform decays like
exp(-C sqrt|t|) and B decays like exp(-C' x^{1/4}): the kernel tail is long,
and cutoffs are derived from computed values of B rather than assumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import jv, loggamma

from .coeffs import CoefficientSeries, WeightKind
from .modarith import (
    as_modulus,
    epsilon_factor,
    kronecker_symbol,
    mod_inverse,
    PrimePowerModulus,
)

_GL_ORDER = 40
# Past this point |B| is below 1e-20 for the default window and only
# rounding noise is left in the table, so tails are integrated up to here.
TAIL_X_MAX = 1e6
TAIL_SIGMA = 2.5
# Rows per block so that a complex block stays near 64 MB.
_BLOCK_ELEMS = 1 << 22


def _gauss_panels(edges: np.ndarray, order: int = _GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive edges."""
    g, gw = np.polynomial.legendre.leggauss(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    return ((b - a) / 2 * g + (a + b) / 2).ravel(), ((b - a) / 2 * gw).ravel()


def default_bump(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    u = 2 * x - 3
    out = np.zeros_like(x)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1 / (1 - u[inside] ** 2))
    return out


class WindowKind(str, Enum):
    DEFAULT_BUMP = "default_bump"
    USER_TABLE = "user_table"


@dataclass(frozen=True, eq=False)
class WindowSpec:
    """A non-negative window w with compact support [lo, hi] in (0, inf).

    Tables are interpolated by PCHIP, which keeps w >= 0.  Runs of zeros at
    either end are trimmed to one knot, so zero-padding a table is a no-op.
    """

    kind: WindowKind
    lo: float
    hi: float
    evaluator: Callable[[np.ndarray], np.ndarray]
    knots: tuple[float, ...] = ()
    smooth: bool = False
    jumps: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.lo < self.hi < math.inf:
            raise ValueError(f"support must satisfy 0 < lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def default(cls) -> WindowSpec:
        return cls(WindowKind.DEFAULT_BUMP, 1.0, 2.0, default_bump, smooth=True)

    @classmethod
    def from_table(cls, xs, ys) -> WindowSpec:
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 3:
            raise ValueError("window table needs matching 1-D arrays with >= 3 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("window abscissae must be strictly increasing")
        if np.any(ys < 0) or not np.any(ys > 0):
            raise ValueError("window values must be >= 0 and not all zero")
        nz = np.flatnonzero(ys > 0)
        i0, i1 = max(nz[0] - 1, 0), min(nz[-1] + 1, len(xs) - 1)
        xs, ys = xs[i0 : i1 + 1], ys[i0 : i1 + 1]
        if xs[0] <= 0:
            raise ValueError("window support must lie in (0, inf)")
        interp = PchipInterpolator(xs, ys, extrapolate=False)

        def evaluate(x: np.ndarray) -> np.ndarray:
            out = interp(np.asarray(x, dtype=np.float64))
            return np.nan_to_num(out, nan=0.0).clip(min=0.0)

        return cls(
            WindowKind.USER_TABLE, float(xs[0]), float(xs[-1]), evaluate, tuple(xs),
            jumps=_derivative_jumps(xs, interp.c),
        )

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=np.float64))

    def nodes(self, panels: int) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes over the support, with panels split at table knots."""
        if self.knots:
            k = np.asarray(self.knots)
            per = max(1, math.ceil(panels / (len(k) - 1)))
            edges = np.unique(
                np.concatenate([np.linspace(a, b, per + 1) for a, b in zip(k[:-1], k[1:])])
            )
        else:
            edges = np.linspace(self.lo, self.hi, panels + 1)
        return _gauss_panels(edges)

    def l2_norm(self, panels: int = 200) -> float:
        y, W = self.nodes(panels)
        return math.sqrt(float(np.dot(W, self(y) ** 2)))


def _derivative_jumps(xs: np.ndarray, c: np.ndarray) -> np.ndarray:
    """J[k, i] = w^(k)(x_i+) - w^(k)(x_i-) for a piecewise cubic, k = 0..3."""
    h = np.diff(xs)
    left = np.stack([c[3], c[2], 2 * c[1], 6 * c[0]])  # derivatives at x_i+
    right = np.stack([  # derivatives at x_{i+1}-
        ((c[0] * h + c[1]) * h + c[2]) * h + c[3],
        (3 * c[0] * h + 2 * c[1]) * h + c[2],
        6 * c[0] * h + 2 * c[1],
        6 * c[0],
    ])
    J = np.zeros((4, len(xs)))
    J[:, :-1] += left
    J[:, 1:] -= right
    return J


def _mellin_piecewise_cubic(xs: np.ndarray, J: np.ndarray, s: np.ndarray) -> np.ndarray:
    # Four integrations by parts on each piece; interior boundary terms
    # combine into derivative jumps at the knots:
    #   w^(s) = sum_i sum_k (-1)^(k+1) J[k, i] x_i^(s+k) / (s (s+1) ... (s+k)).
    lnx = np.log(xs)
    out = np.zeros(len(s), dtype=complex)
    rows = max(1, _BLOCK_ELEMS // len(xs))
    for i in range(0, len(s), rows):
        z = s[i : i + rows, None]
        pw = np.exp(z * lnx)
        poch = z.copy()
        acc = np.zeros(pw.shape, dtype=complex)
        for k in range(4):
            acc += (-1) ** (k + 1) * J[k] * pw / poch
            pw = pw * xs
            poch = poch * (z + k + 1)
        out[i : i + rows] = acc.sum(axis=1)
    return out


def mellin_w(spec: WindowSpec, s: complex, rtol: float = 1e-12, max_panels: int = 1 << 14) -> complex:
    """w^(s) = int w(x) x^{s-1} dx by composite Gauss-Legendre, panels doubled to rtol.

    The tolerance is relative to int |w(x) x^{s-1}| dx, which is the natural
    scale once |Im s| is large and the transform itself is tiny.
    """
    panels = 8
    prev = None
    while True:
        y, W = spec.nodes(panels)
        f = spec(y) * W
        val = complex(np.dot(f, np.exp((s - 1) * np.log(y))))
        scale = float(np.dot(np.abs(f), y ** (s.real - 1)))
        if prev is not None and abs(val - prev) <= rtol * scale:
            return val
        if panels >= max_panels:
            warnings.warn(f"mellin_w did not reach rtol={rtol} at s={s}", stacklevel=2)
            return val
        prev = val
        panels *= 2


def mellin_w_bulk(spec: WindowSpec, s: np.ndarray, height: float) -> np.ndarray:
    """w^ at many points whose imaginary parts satisfy |Im s| <= height.

    Smooth windows use the trapezoid rule in u = log x.  Its aliasing error
    involves w^ at frequencies beyond height + 1500, which is far below
    rounding.  Piecewise-cubic tables are transformed exactly, except close
    to the removable poles s = 0, -1, -2, -3 where Gauss-Legendre panels
    between knots take over.
    """
    if spec.jumps is not None:
        s = np.asarray(s, dtype=complex)
        near = np.min(np.abs(s[:, None] + np.arange(4)), axis=1) < 0.5
        out = np.empty(len(s), dtype=complex)
        out[~near] = _mellin_piecewise_cubic(np.asarray(spec.knots), spec.jumps, s[~near])
        out[near] = [mellin_w(spec, complex(z)) for z in s[near]]
        return out
    if spec.smooth:
        h = math.pi / (height + 1500.0)
        u = np.arange(math.log(spec.lo) + h / 2, math.log(spec.hi), h)
        f = spec(np.exp(u)) * h
        lny = u
    else:
        phase = height * math.log(spec.hi / spec.lo)
        y, W = spec.nodes(max(16, math.ceil(12 * phase / (2 * math.pi) / _GL_ORDER) + 16))
        f = spec(y) * W / y
        lny = np.log(y)
    keep = f != 0
    lny, f = lny[keep], f[keep]
    s = np.asarray(s, dtype=complex)
    out = np.empty(len(s), dtype=complex)
    rows = max(1, _BLOCK_ELEMS // len(lny))
    for i in range(0, len(s), rows):
        out[i : i + rows] = np.exp(np.outer(s[i : i + rows], lny)) @ f
    return out


class WeightConvention(str, Enum):
    INTEGRAL = "integral"
    HALF_INTEGRAL = "half_integral"


def _lagrange(g: np.ndarray, pos: np.ndarray, order: int = 6) -> np.ndarray:
    # Local Lagrange interpolation on a unit-spaced grid.
    i0 = np.floor(pos).astype(np.int64) - (order // 2 - 1)
    f = pos - i0
    out = np.zeros(len(pos), dtype=g.dtype)
    for j in range(order):
        w = np.ones(len(pos))
        for k in range(order):
            if k != j:
                w *= (f - k) / (j - k)
        out += w * g[i0 + j]
    return out


@dataclass(eq=False)
class WindowTransform:
    """The kernel B for one window and one gamma factor.

    With Phi(t) = G(sigma + it) w^(1 - sigma - it), the function
    g(v) = e^{sigma v} B(e^v) = (1/2 pi) int Phi(t) e^{-itv} dt is a Fourier
    integral.  The trapezoid rule in t with step 2 pi / period makes it
    periodic in v.  One FFT then tabulates g on a uniform grid in v = log x,
    and B at any x follows by local interpolation.  g decays at both ends of
    the v-range, so the wrap-around is negligible.

    ``contour`` evaluates the same integral pointwise with composite
    Gauss-Legendre in t; it is the slow reference for the grid.

    Attributes:
        spec: the window.
        convention: integral (weight = kappa) or half_integral (weight = ell).
        weight: kappa or ell.
        sigma: abscissa of the contour.
        T: truncation height; chosen from the envelope |Phi| when None.
        tol: target size of |Phi| at the truncation height.
        v_min: log of the smallest tabulated x.
        period: length of the v-range (sets the t step).
        grid_log2: log2 of the number of grid points.
    """

    spec: WindowSpec = field(default_factory=WindowSpec.default)
    convention: WeightConvention = WeightConvention.INTEGRAL
    weight: int = 12
    sigma: float = 1.2
    T: float | None = None
    tol: float = 1e-10
    v_min: float = -12.0
    period: float = 48.0
    grid_log2: int = 21
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.convention = WeightConvention(self.convention)
        if self.sigma <= -self.shift:
            raise ValueError(f"sigma={self.sigma} must exceed {-self.shift}")
        if self.T is None:
            self.T = self._choose_height()

    @classmethod
    def integral(cls, kappa: int = 12, **kw) -> WindowTransform:
        return cls(convention=WeightConvention.INTEGRAL, weight=kappa, **kw)

    @classmethod
    def half_integral(cls, ell: int = 4, **kw) -> WindowTransform:
        return cls(convention=WeightConvention.HALF_INTEGRAL, weight=ell, **kw)

    @property
    def shift(self) -> float:
        if self.convention is WeightConvention.INTEGRAL:
            return (self.weight - 1) / 2
        return self.weight / 2 - 0.25

    @property
    def bessel_order(self) -> float:
        return 2 * self.shift

    @property
    def x_range(self) -> tuple[float, float]:
        # Keep clear of the wrap-around at the top of the period.
        return math.exp(self.v_min), math.exp(self.v_min + self.period - 6.0)

    def log_gamma_ratio(self, s: np.ndarray) -> np.ndarray:
        """log of (2 pi)^{1-2s} Gamma(s + c) / Gamma(1 - s + c), assembled before exp."""
        c = self.shift
        return (1 - 2 * s) * math.log(2 * math.pi) + loggamma(s + c) - loggamma(1 - s + c)

    def phi(self, t: np.ndarray, height: float | None = None) -> np.ndarray:
        s = self.sigma + 1j * np.asarray(t, dtype=np.float64)
        h = float(np.max(np.abs(t))) if height is None else height
        return np.exp(self.log_gamma_ratio(s)) * mellin_w_bulk(self.spec, 1 - s, h)

    def _choose_height(self) -> float:
        """Height beyond which |Phi| stays below max(tol, rounding floor).

        The computed w^ bottoms out near machine epsilon times int w dx/x
        while |G| grows like t^{2 sigma - 1}, so the computed envelope has a
        rising floor.  T is the first height from which |Phi| stays below
        both for a stretch of 500; a warning is issued when the floor at T is
        above tol.
        """
        t = np.arange(0.0, 12000.0, 5.0)
        env = np.abs(self.phi(t))
        mass = float(np.real(mellin_w_bulk(self.spec, np.zeros(1), 0.0)[0]))
        s = self.sigma + 1j * t
        floor = 100 * np.finfo(float).eps * mass * np.abs(np.exp(self.log_gamma_ratio(s)))
        below = env < np.maximum(self.tol, floor)
        # First height after which the envelope stays down for 500 units;
        # isolated rounding spikes further up are ignored.
        run = 100
        ok = [i for i in range(len(t) - run) if below[i : i + run].all()]
        T = float(t[ok[0]]) if ok else float(t[-1])
        floor_T = float(np.interp(T, t, floor))
        if floor_T > self.tol:
            warnings.warn(
                f"B integrand floor {floor_T:.2g} exceeds tol={self.tol} at T={T:.0f}",
                stacklevel=3,
            )
        return T

    @cached_property
    def _grid(self) -> np.ndarray:
        n = 1 << self.grid_log2
        dt = 2 * math.pi / self.period
        K = math.ceil(self.T / dt)
        if 2 * K + 1 > n:
            raise ValueError("grid too small for the t step; raise grid_log2")
        k = np.arange(-K, K + 1)
        t = k * dt
        A = np.zeros(n, dtype=complex)
        A[k % n] = self.phi(t, self.T) * np.exp(-1j * t * self.v_min) * dt / (2 * math.pi)
        g = np.fft.fft(A)
        g.flags.writeable = False
        return g

    def evaluate_complex(self, x) -> np.ndarray:
        """B(x) from the grid, before the imaginary part is dropped."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        lo, hi = self.x_range
        if np.any(x <= 0):
            raise ValueError("B is defined for x > 0 only")
        if np.any(x < lo):
            raise ValueError(f"x below the tabulated range (min {lo:.3g}); lower v_min")
        out = np.zeros(len(x), dtype=complex)
        inside = x <= hi
        v = np.log(x[inside])
        dv = self.period / (1 << self.grid_log2)
        out[inside] = _lagrange(self._grid, (v - self.v_min) / dv) * np.exp(-self.sigma * v)
        return out

    def __call__(self, x) -> np.ndarray:
        """B(x), real.

        Raises:
            ArithmeticError: if some imaginary residue exceeds 1e-8.
        """
        vals = self.evaluate_complex(x)
        worst = float(np.max(np.abs(vals.imag))) if len(vals) else 0.0
        if worst > 1e-8:
            raise ArithmeticError(f"B has imaginary residue {worst:.3g}; quadrature misconfigured")
        return vals.real

    def contour(self, x, panel: float = 2.0, order: int = 20) -> np.ndarray:
        """Pointwise Gauss-Legendre evaluation of the contour integral (complex)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        key = ("contour", panel, order)
        if key not in self._cache:
            n_panels = max(1, math.ceil(2 * self.T / panel))
            t, tw = _gauss_panels(np.linspace(-self.T, self.T, n_panels + 1), order)
            self._cache[key] = (self.sigma + 1j * t, self.phi(t, self.T) * tw / (2 * math.pi))
        s, F = self._cache[key]
        out = np.empty(len(x), dtype=complex)
        rows = max(1, _BLOCK_ELEMS // len(s))
        lx = np.log(x)
        for i in range(0, len(x), rows):
            out[i : i + rows] = np.exp(-np.outer(lx[i : i + rows], s)) @ F
        return out

    def tail_integral(self, x) -> np.ndarray:
        """Estimates of int_x^inf |B| for each x, from tabulated values.

        Grid noise scales like x^{-sigma}, so the tail table is built on a
        second contour with sigma >= TAIL_SIGMA; B itself does not depend on
        sigma.
        """
        key = "tail"
        if key not in self._cache:
            if self.sigma >= TAIL_SIGMA:
                aux = self
            else:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    aux = replace(self, sigma=TAIL_SIGMA, T=None, _cache={})
            hi = min(aux.x_range[1], TAIL_X_MAX)
            xs = np.exp(np.arange(math.log(0.01), math.log(hi), 1e-4))
            b = np.abs(aux(xs))
            seg = 0.5 * (b[1:] + b[:-1]) * np.diff(xs)
            tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
            self._cache[key] = (xs, tail)
        xs, tail = self._cache[key]
        return np.interp(np.asarray(x, dtype=np.float64), xs, tail)

    def cutoff(self, tol: float) -> float:
        """Smallest tabulated x with int_x^inf |B| < tol."""
        self.tail_integral(1.0)
        xs, tail = self._cache["tail"]
        ok = np.flatnonzero(tail < tol)
        if not len(ok):
            raise ArithmeticError(f"tail of B does not reach {tol}")
        return float(xs[ok[0]])


def bessel_b(spec: WindowSpec, x, order: float, panels: int = 400) -> np.ndarray:
    """Oracle: B(x) = 2 pi int w(y) J_order(4 pi sqrt(x y)) dy."""
    y, W = spec.nodes(panels)
    f = spec(y) * W
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return np.array([2 * math.pi * np.dot(f, jv(order, 4 * math.pi * np.sqrt(v * y))) for v in x])


# -- Plancherel --------------------------------------------------------------


@dataclass(frozen=True)
class PlancherelRecord:
    w_norm: float
    b_norm: float
    gap: float
    b_norm_coarse: float
    x_max: float


def _b_norm_sq(transform: WindowTransform, x_max: float, step: float) -> float:
    # x = u^2 removes the sqrt behaviour of the Bessel argument.
    u0 = math.sqrt(transform.x_range[0])
    edges = np.arange(u0, math.sqrt(x_max) + step, step)
    u, W = _gauss_panels(edges, 20)
    b = transform(u * u)
    return float(np.dot(W, 2 * u * b * b))


def plancherel_check(
    transform: WindowTransform, x_max: float = 3000.0, step: float = 0.25
) -> PlancherelRecord:
    """Compare ||w||_2 with ||B||_2 on (0, x_max], at two resolutions in sqrt(x)."""
    w_norm = transform.spec.l2_norm()
    fine = math.sqrt(_b_norm_sq(transform, x_max, step / 2))
    coarse = math.sqrt(_b_norm_sq(transform, x_max, step))
    return PlancherelRecord(w_norm, fine, abs(w_norm - fine) / w_norm, coarse, x_max)


# -- Voronoi identity --------------------------------------------------------


@dataclass(frozen=True)
class VoronoiResidual:
    lhs: complex
    rhs: complex
    residual: float
    terms: int


def _window_sum(series: CoefficientSeries, spec: WindowSpec, X: float, phase: Callable) -> complex:
    n_lo = max(1, math.floor(spec.lo * X))
    n_hi = math.ceil(spec.hi * X)
    if n_hi > series.length:
        raise ValueError(f"series has length {series.length}, need {n_hi}")
    n = np.arange(n_lo, n_hi + 1)
    return complex(np.sum(series.values[n] * spec(n / X) * phase(n)))


def voronoi_residual(
    series: CoefficientSeries,
    q: int | PrimePowerModulus,
    b: int,
    X: float,
    transform: WindowTransform | None = None,
    dual: CoefficientSeries | None = None,
    tail_tol: float = 1e-9,
) -> VoronoiResidual:
    """Both sides of the twisted Voronoi formula and their relative difference.

    Integral weight kappa (level 1):
        sum a(n) e_q(bn) w(n/X) = i^kappa (X/q) sum a(m) e_q(-b' m) B(m q^{-2} X),
    with b' the inverse of b.  In weight ell + 1/2, ``series`` holds the
    coefficients at infinity and ``dual`` those at the cusp 0, and
        rhs = eps_q^{-(2 ell + 1)} (-b'/q) X/(2q) sum f0(m) e_q(-(4b)' m) B(m X/(4 q^2)).
    The dual sum stops once (prefactor) x (Y int |B| beyond) drops below tail_tol.
    """
    mod = as_modulus(q)
    qq = mod.q
    if math.gcd(b, qq) != 1:
        raise ValueError(f"b={b} is not invertible modulo {qq}")
    spec = transform.spec if transform is not None else WindowSpec.default()
    half = series.kind is WeightKind.HALF_INTEGRAL
    if transform is None:
        transform = (
            WindowTransform.half_integral(series.weight, spec=spec)
            if half
            else WindowTransform.integral(series.weight, spec=spec)
        )
    lhs = _window_sum(series, spec, X, lambda n: np.exp(2j * np.pi * (b * n % qq) / qq))
    if half:
        if dual is None:
            raise ValueError("half-integral mode needs the cusp-0 series as `dual`")
        ell = series.weight
        Y = 4 * qq * qq / X
        twist = mod_inverse(4 * b % qq, qq)
        front = (
            epsilon_factor(qq) ** (-(2 * ell + 1))
            * kronecker_symbol(-mod_inverse(b, qq) % qq, qq)
            * X
            / (2 * qq)
        )
        coeffs = dual
    else:
        Y = qq * qq / X
        twist = mod_inverse(b, qq)
        front = 1j**series.weight * X / qq
        coeffs = series
    x_cut = transform.cutoff(tail_tol / (abs(front) * max(Y, 1e-300)))
    M = max(1, math.ceil(x_cut * Y))
    if M > coeffs.length:
        raise ValueError(f"dual series has length {coeffs.length}, need {M}")
    m = np.arange(1, M + 1)
    phase = np.exp(-2j * np.pi * (twist * m % qq) / qq)
    rhs = front * complex(np.sum(coeffs.values[m] * phase * transform(m / Y)))
    return VoronoiResidual(lhs, rhs, abs(lhs - rhs) / (1 + abs(lhs)), M)
