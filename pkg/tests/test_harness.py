import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apmoments.acceptance import CALIBRATION_KEY, load_expected
from apmoments.coeffs import CoefficientSeries, WeightKind
from apmoments.expsum import sa_sweep
from apmoments.harness import (
    DualParams,
    Mode,
    OutOfRegimeWarning,
    class_mask,
    compute_dual_M,
    compute_E,
    distribution_test,
    double_factorial,
    dual_direct_gap,
    empirical_moment,
    front_factor,
    gaussian_factor,
    growth_constant,
    in_regime,
    main_term,
    mixture_moment,
    moment_report,
    restricted_variance,
)
from apmoments.modarith import PrimePowerModulus, find_nonresidue
from apmoments.qrprimes import first_prime_with_nonresidue_above
from apmoments.voronoi import WindowSpec

SPEC = WindowSpec.default()


def test_params_from_eta():
    P = DualParams.from_Y(121, 4.0, eta=0.5)
    assert P.M_max == 8 and P.X == 121**2 / 4 and P.q == 121
    H = DualParams.from_Y(121, 4.0, Mode.HALF_INTEGRAL, eta=0.5)
    assert H.X == 4 * 121**2 / 4


def test_params_validation():
    with pytest.raises(ValueError):
        DualParams.from_Y(121, 2.0)  # automatic cutoff needs the kernel
    with pytest.raises(ValueError):
        DualParams.from_Y(121, 2.0, eta=-1)
    with pytest.raises(ValueError):
        DualParams(10.0, PrimePowerModulus(11, 2), 0.0, 0.5, 3)


def test_automatic_cutoff(kernel12):
    P = DualParams.from_Y(121, 2.0, transform=kernel12)
    assert P.M_max >= math.ceil(2**1.5)
    assert P.eta == pytest.approx(math.log(P.M_max) / math.log(2) - 1)
    tail = kernel12.tail_integral(np.array([P.M_max / P.Y]))[0] * math.sqrt(P.Y)
    assert tail <= 1.01e-9


def test_spike_series_lands_in_one_class():
    n0, X, q = 137, 100.0, 121
    coeffs = np.zeros(300)
    coeffs[n0 - 1] = 1.0
    P = DualParams(X, PrimePowerModulus(11, 2), q * q / X, 0.5, 3)
    S = compute_E(CoefficientSeries.synthetic(coeffs), P, SPEC).S
    w0 = float(SPEC(n0 / X))
    assert S[n0 % q] == w0 and np.count_nonzero(S) == 1


def test_partition_identity(delta_small):
    P = DualParams(7320.0, PrimePowerModulus(11, 2), 121**2 / 7320, 0.5, 3)
    d = compute_E(delta_small, P, SPEC)
    n = np.arange(7320, 2 * 7320 + 1)
    total = math.fsum((delta_small.values[n] * SPEC(n / 7320.0)).tolist())
    assert abs(d.total - total) < 1e-12


def test_direct_dual_agree_q121(delta_small, kernel12):
    P = DualParams.from_Y(121, 2.0, transform=kernel12)
    assert dual_direct_gap(delta_small, P, kernel12) < 2e-3


def test_class_decomposition(delta_small, kernel12):
    P = DualParams.from_Y(121, 2.0, transform=kernel12)
    E = compute_E(delta_small, P, SPEC).E
    mod = P.modulus
    units = np.arange(mod.q) % mod.p != 0
    for nu in (1, 2, 3, 4):
        whole = math.fsum((E[units] ** nu).tolist()) / mod.phi
        half = 0.5 * empirical_moment(E, mod, nu, 1) + 0.5 * empirical_moment(E, mod, nu, -1)
        assert abs(whole - half) < 1e-12


def test_results_do_not_depend_on_threads(delta_small, kernel12):
    P = DualParams.from_Y(289, 2.0, transform=kernel12)
    for fn in (lambda t: compute_E(delta_small, P, SPEC, t).E, lambda t: compute_dual_M(delta_small, P, kernel12, t)):
        a, b = fn(1), fn(4)
        assert np.array_equal(a, b)
    r1 = moment_report(delta_small, P, kernel12, 2, 1, threads=1)
    r4 = moment_report(delta_small, P, kernel12, 2, 1, threads=3)
    assert r1.as_dict() == r4.as_dict()


@pytest.mark.parametrize("M_max", [3, 6, 12])
def test_dual_vanishes_on_nonsquares(M_max, kernel12):
    rec = first_prime_with_nonresidue_above(M_max - 1)
    rng = np.random.default_rng(M_max)
    series = CoefficientSeries.synthetic(rng.normal(size=M_max))
    P = DualParams.from_Y(rec.p**2, 2.0, eta=math.log(M_max) / math.log(2) - 1 - 1e-9)
    assert P.M_max == M_max
    M = compute_dual_M(series, P, kernel12)
    assert np.all(M[class_mask(P.modulus, -1)] == 0)


@given(st.floats(-4, 4, allow_nan=False).filter(lambda c: c != 0))
def test_dual_is_linear(c):
    from apmoments.voronoi import WindowTransform

    tr = _kernel_cache()
    series = CoefficientSeries.synthetic(np.linspace(-1, 1, 40))
    P = DualParams.from_Y(49, 2.0, eta=4.0)
    a = compute_dual_M(series, P, tr)
    b = compute_dual_M(series.scaled(c), P, tr)
    assert np.allclose(b, c * a, rtol=1e-12, atol=1e-15)


_KERNEL = {}


def _kernel_cache():
    from apmoments.voronoi import WindowTransform

    if "k" not in _KERNEL:
        _KERNEL["k"] = WindowTransform.integral(12)
    return _KERNEL["k"]


def test_empirical_moment_examples():
    mod = PrimePowerModulus(7, 1)
    const = np.full(7, 1.7)
    for nu in (1, 2, 3):
        assert empirical_moment(const, mod, nu, 1) == pytest.approx(1.7**nu, rel=1e-14)
    assert empirical_moment(sa_sweep(1, mod), mod, 1, 1) == pytest.approx(-1 / 3, abs=1e-12)


@pytest.mark.parametrize("q", [25, 49, 121])
def test_relabeling_swaps_classes(q):
    mod = PrimePowerModulus.from_q(q)
    mu = find_nonresidue(mod.p)
    f = np.sin(np.arange(q) * 0.37)
    g = f[(mu * np.arange(q)) % q]
    assert empirical_moment(g, mod, 3, 1) == pytest.approx(empirical_moment(f, mod, 3, -1), rel=1e-12)


def test_main_term_examples(delta_small, kernel12):
    P = DualParams.from_Y(121, 2.0, eta=3.0)
    assert main_term(delta_small, P, kernel12, 3, 1) == 0
    V = restricted_variance(delta_small, P, kernel12, 1)
    assert main_term(delta_small, P, kernel12, 2, 1) == 2 * V
    spike = CoefficientSeries.synthetic([1.0] + [0.0] * 20)
    Vs = restricted_variance(spike, P, kernel12, 1)
    assert Vs == pytest.approx(kernel12(np.array([1 / P.Y]))[0] ** 2 / P.Y, rel=1e-15)


@pytest.mark.parametrize("nu", [2, 4, 6, 8])
def test_main_term_is_gaussian_moment(nu):
    V = Fraction(3, 7)
    lhs = gaussian_factor(nu) * V ** (nu // 2)
    rhs = double_factorial(nu - 1) * (2 * V) ** (nu // 2)
    assert lhs == rhs


def test_growth_constant():
    assert growth_constant(2) == 1 / 8 and growth_constant(3) == 1 / 162
    P = DualParams.from_Y(47**2, 2.0, eta=0.5)
    assert in_regime(P, 2, 0.0) and not in_regime(DualParams.from_Y(121, 64.0, eta=0.5), 3, 0.0)


def test_front_factor():
    P = DualParams.from_Y(49, 2.0, eta=1.0)
    assert front_factor(P, 12) == 1
    H = DualParams.from_Y(343, 2.0, Mode.HALF_INTEGRAL, eta=1.0)
    assert front_factor(H, 4) == pytest.approx((1j) ** -8)


def test_distribution_examples():
    rec = distribution_test(np.zeros(50), 1.0)
    assert rec.zero_mass == 1 and all(m == 0 for m in rec.empirical)
    assert mixture_moment(2, 1.0) == 1
    assert mixture_moment(4, 1.0) == 0.5 * 4 * 3
    with pytest.raises(ValueError):
        distribution_test([], 1.0)


def test_distribution_of_mixture_sample():
    rng = np.random.default_rng(7)
    V = 0.3
    v = np.where(rng.random(200_000) < 0.5, 0.0, rng.normal(0, math.sqrt(2 * V), 200_000))
    rec = distribution_test(v, V)
    assert abs(rec.zero_mass - 0.5) < 0.01
    assert rec.empirical[1] == pytest.approx(rec.mixture[1], rel=0.02)
    assert rec.empirical[3] == pytest.approx(rec.mixture[3], rel=0.05)


def test_half_integral_report_requires_dual(kernel4):
    s = CoefficientSeries.synthetic(np.ones(2000), kind=WeightKind.HALF_INTEGRAL, weight=4)
    P = DualParams.from_Y(9, 1.0, Mode.HALF_INTEGRAL, eta=1.0)
    with pytest.raises(ValueError):
        moment_report(s, P, kernel4, 2, 1)


def test_out_of_regime_warns(delta_small, kernel12):
    P = DualParams.from_Y(121, 2.0, eta=3.0)
    with pytest.warns(OutOfRegimeWarning):
        rep = moment_report(delta_small, P, kernel12, 4, 1)
    assert not rep.in_regime and rep.notes


@pytest.fixture(scope="module")
def report_p47(acceptance_ctx, kernel12):
    P = DualParams.from_Y(47**2, 2.0, transform=kernel12)
    delta = acceptance_ctx.delta(math.ceil(2 * P.X) + 1)
    calib = load_expected()[CALIBRATION_KEY]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutOfRegimeWarning)
        return {nu: moment_report(delta, P, kernel12, nu, 1, calibration=calib) for nu in (1, 2, 3)}


def test_p47_odd_moments_below_budget(report_p47):
    for nu in (1, 3):
        r = report_p47[nu]
        assert r.rhs_main == 0 and abs(r.lhs) < r.error_budget["total"]


def test_p47_second_moment_within_calibrated_budget(report_p47):
    r = report_p47[2]
    assert r.calibration is not None
    assert abs(r.lhs - r.rhs_main) < r.error_budget["total"] * r.calibration
    assert r.alt_lhs is not None and r.dual_cusp == r.direct_cusp == "infinity"
