import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from apmoments.acceptance import float_is_zero, sqrt_sum_tuples
from apmoments.modarith import PrimePowerModulus, legendre, mod_sqrt
from apmoments.saliemoments import (
    MomentTuple,
    check_delta_bound,
    class_orbit,
    q_poly,
    salie_moment_bruteforce,
    salie_moment_exact,
    salie_moment_formula,
    sqrt_sum_is_zero,
    squarefree_decompose,
)

Q5_9 = 5**9


def test_formula_examples():
    assert salie_moment_exact(MomentTuple.make(7, [1], 1)) == Fraction(-1, 3)
    assert salie_moment_exact(MomentTuple.make(9, [1, 1], 1)) == 2
    assert salie_moment_formula(MomentTuple.make(9, [1], -1)) == 0


def test_bruteforce_examples():
    assert abs(salie_moment_bruteforce(MomentTuple.make(7, [1], 1)) + 1 / 3) < 1e-12
    assert abs(salie_moment_bruteforce(MomentTuple.make(9, [1, 1], 1)) - 2) < 1e-12
    t = MomentTuple.make(25, [1, 4], 1)
    assert abs(salie_moment_bruteforce(t) - salie_moment_formula(t)) < 1e-9


def test_tuple_validation():
    with pytest.raises(ValueError):
        MomentTuple.make(9, [3], 1)
    with pytest.raises(ValueError):
        MomentTuple.make(9, [1], 0)


@pytest.mark.parametrize("q,sel", [(27, 1), (27, -1), (49, 1), (125, -1)])
def test_class_orbit_is_the_class(q, sel):
    mod = PrimePowerModulus.from_q(q)
    orbit = class_orbit(mod, sel)
    want = {a for a in range(q) if a % mod.p and legendre(a, mod.p) == sel}
    assert sorted(orbit.tolist()) == sorted(want)


@given(
    st.sampled_from([7, 9, 25, 27, 49]),
    st.lists(st.integers(1, 2500), min_size=1, max_size=3),
    st.sampled_from([1, -1]),
)
def test_formula_matches_bruteforce(q, shifts, sel):
    p = PrimePowerModulus.from_q(q).p
    shifts = [m for m in shifts if m % p]
    if not shifts:
        return
    t = MomentTuple.make(q, shifts, sel)
    assert abs(salie_moment_formula(t) - salie_moment_bruteforce(t)) < 1e-9


def test_bruteforce_independent_of_threads():
    t = MomentTuple.make(343, [1, 2, 4], 1)
    assert salie_moment_bruteforce(t, 1) == salie_moment_bruteforce(t, 4)


@pytest.mark.parametrize("m,r,t", [(1, 1, 1), (12, 2, 3), (49, 7, 1), (720, 12, 5), (997, 1, 997)])
def test_squarefree_decompose(m, r, t):
    d = squarefree_decompose(m)
    assert (d.r, d.t) == (r, t)


@given(st.integers(1, 10**7))
def test_squarefree_kernel_property(m):
    d = squarefree_decompose(m)
    assert d.r * d.r * d.t == m
    assert all(d.t % (k * k) for k in range(2, math.isqrt(d.t) + 1))


def test_q_poly_examples():
    assert q_poly([9, 4]) == 5
    assert q_poly([4, 4]) == 0
    assert q_poly([1, 4, 9]) == 0


@given(st.lists(st.integers(1, 200), min_size=2, max_size=4), st.integers(2, 5))
def test_q_poly_homogeneous_of_degree(values, c):
    r = len(values)
    scaled = q_poly([c * c * m for m in values])
    assert scaled == c ** (2 * 2 ** (r - 2)) * q_poly(values)


def test_q_poly_three_variable_expansion():
    for a, b, c in itertools.product(range(1, 8), repeat=3):
        assert q_poly([a, b, c]) == a * a + b * b + c * c - 2 * a * b - 2 * b * c - 2 * c * a


def test_sqrt_sum_examples():
    assert sqrt_sum_is_zero([1, -1], [4, 4])
    assert sqrt_sum_is_zero([1, 1, -1], [1, 4, 9])
    assert not sqrt_sum_is_zero([1, -1], [2, 3])


def test_sqrt_sum_matches_high_precision_sample():
    rng = random.Random(5)
    for signs, vals in sqrt_sum_tuples(rng, 500):
        assert sqrt_sum_is_zero(signs, vals) == float_is_zero(signs, vals)


def test_delta_bound_examples():
    r = check_delta_bound(Q5_9, 100, [1, 1])
    assert (r.lhs, r.rhs, r.holds) == (2, 8, True)
    r = check_delta_bound(Q5_9, 100, [1, 4])
    assert (r.lhs, r.rhs, r.holds) == (0, 0, True)
    r = check_delta_bound(Q5_9, 100, [1, 4, 9])
    assert r.holds and r.rhs >= 16


def test_delta_bound_rejects_bad_input():
    with pytest.raises(ValueError):
        check_delta_bound(Q5_9, 100, [2, 1])  # 2 is a non-residue mod 5
    with pytest.raises(ValueError):
        check_delta_bound(Q5_9, 100, [1, 101])
    with pytest.raises(ValueError):
        check_delta_bound(125, 100, [1, 4, 9])  # size hypothesis fails


def test_modular_zero_implies_q_divides_q_poly():
    q, mod = 27, PrimePowerModulus.from_q(27)
    qr = [m for m in range(1, 27) if m % 3 and legendre(m, 3) == 1]
    seen = 0
    for m1, m2 in itertools.product(qr, repeat=2):
        r1, r2 = mod_sqrt(m1, mod), mod_sqrt(m2, mod)
        for e in (1, -1):
            if (r1 + e * r2) % q == 0:
                seen += 1
                assert q_poly([m1, m2]) % q == 0
    assert seen > 0
