import cmath
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from apmoments.expsum import (
    Method,
    gauss_sum,
    inverse_table,
    kloosterman,
    kloosterman_matrix_direct,
    kloosterman_sweep,
    sa,
    sa_sweep,
    salie,
    salie_matrix_direct,
    sqrt_table,
)
from apmoments.modarith import PrimePowerModulus, legendre, mod_sqrt

C49 = 2 * math.cos(4 * math.pi / 9)


def test_kloosterman_examples():
    assert abs(kloosterman(1, 1, 5, Method.DIRECT) - (2 + 2 * math.cos(4 * math.pi / 5)) / math.sqrt(5)) < 1e-12
    assert abs(kloosterman(1, 1, 9, Method.CLOSED_FORM) - C49) < 1e-12
    assert kloosterman(1, 3, 9, Method.CLOSED_FORM) == 0


def test_salie_examples():
    assert abs(salie(1, 1, 9, Method.CLOSED_FORM) - C49) < 1e-12
    closed, direct = salie(1, 2, 25, Method.CLOSED_FORM), salie(1, 2, 25, Method.DIRECT)
    assert abs(closed) <= 2 + 1e-12 and abs(closed - direct) < 1e-12
    assert salie(1, 5, 25, Method.CLOSED_FORM) == 0


def test_sa_examples():
    assert abs(sa(4, 9) - C49) < 1e-12
    assert abs(sa(7, 9) - 2 * math.cos(8 * math.pi / 9)) < 1e-12
    assert sa(2, 25) == 0


def test_gauss_examples():
    assert abs(gauss_sum(1, 1, 3) - 1j / math.sqrt(3)) < 1e-12
    assert abs(gauss_sum(2, 0, 9) - 6 / 9) < 1e-12
    # For q = 9 the Jacobi symbol (x/9) = (x/3)^2 is principal on units, so
    # nu = 1 and nu = 2 agree; an odd power of p gives a genuine character.
    assert abs(gauss_sum(1, 0, 9) - 6 / 9) < 1e-12
    assert abs(gauss_sum(1, 0, 27)) < 1e-12


def test_closed_form_rejects_p_dividing_m():
    with pytest.raises(ValueError):
        kloosterman(3, 1, 9, Method.CLOSED_FORM)
    with pytest.raises(ValueError):
        salie(5, 2, 25, Method.CLOSED_FORM)
    with pytest.raises(ValueError):
        kloosterman(1, 1, 7, Method.CLOSED_FORM)  # N = 1


@pytest.mark.parametrize("q", [9, 25, 27, 49, 81, 121, 125, 343])
def test_closed_vs_direct_all_pairs(q):
    mod = PrimePowerModulus.from_q(q)
    K, S = kloosterman_matrix_direct(mod), salie_matrix_direct(mod)
    for m in range(1, q):
        if m % mod.p == 0:
            continue
        assert np.abs(kloosterman_sweep(m, mod) - K[m]).max() < 1e-9
    for m, n in [(1, 1), (2, 3), (q - 1, 7), (4, q - 2)]:
        if m % mod.p:
            assert abs(salie(m, n, mod, Method.CLOSED_FORM) - S[m, n % q]) < 1e-9


@pytest.mark.parametrize("q", [9, 25, 49, 121])
def test_even_N_sums_coincide(q):
    mod = PrimePowerModulus.from_q(q)
    assert np.abs(kloosterman_matrix_direct(mod) - salie_matrix_direct(mod)).max() < 1e-12


@pytest.mark.parametrize("q", [9, 25, 27, 49, 125, 343])
def test_chebyshev_identity(q):
    mod = PrimePowerModulus.from_q(q)
    qr = [x for x in range(1, q) if x % mod.p and legendre(x, mod.p) == 1]
    for m in qr[:: max(1, len(qr) // 12)]:
        k = mod_sqrt(m, mod)
        for x in qr:
            theta = 2 * math.pi * mod_sqrt(x, mod) / q
            assert abs(sa(m * x, mod) - 2 * math.cos(k * theta)) < 1e-9


@pytest.mark.parametrize("q", [25, 27, 49])
def test_sa_square_relabeling_is_a_permutation(q):
    mod = PrimePowerModulus.from_q(q)
    base = np.round(sa_sweep(3, mod), 9)
    for s in (2, 4, 6):
        if s % mod.p == 0:
            continue
        moved = np.round(sa_sweep(3 * s * s % q, mod), 9)
        assert Counter(base.tolist()) == Counter(moved.tolist())


@given(st.sampled_from([9, 25, 27, 49, 121, 125]), st.integers(1, 10**6), st.integers(1, 10**6))
def test_normalized_sums_bounded_by_two(q, m, n):
    p = PrimePowerModulus.from_q(q).p
    if (m * n) % p == 0:
        return
    assert abs(kloosterman(m, n, q, Method.CLOSED_FORM)) <= 2 + 1e-12
    assert abs(salie(m, n, q, Method.CLOSED_FORM)) <= 2 + 1e-12
    assert abs(sa(m * n, q)) <= 2


@given(st.sampled_from([9, 25, 27, 49, 121]), st.integers(0, 10**6))
def test_tables_consistent(q, x):
    inv, root = inverse_table(q), sqrt_table(q)
    x %= q
    if inv[x]:
        assert x * inv[x] % q == 1
    if root[x]:
        assert root[x] ** 2 % q == x and root[x] <= (q - 1) // 2


def test_sweep_matches_scalar():
    mod = PrimePowerModulus.from_q(49)
    sw = sa_sweep(3, mod)
    for a in range(49):
        assert abs(sw[a] - sa(3 * a, mod)) < 1e-12
    kl = kloosterman_sweep(5, mod)
    for a in range(0, 49, 5):
        assert cmath.isclose(kl[a], kloosterman(5, a, mod, Method.CLOSED_FORM), abs_tol=1e-12)
