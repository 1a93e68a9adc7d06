import numpy as np
import pytest
from hypothesis import given, strategies as st

from apmoments.ntt import (
    MAX_LOG_SIZE,
    NTT_PRIMES,
    ModularConvolver,
    garner_digits,
    garner_float,
    garner_int,
    primes_for_bound,
    schoolbook_multiply,
    series_multiply,
    transform_size,
)


def test_trivial_square():
    assert series_multiply([1, 1], [1, 1]).tolist() == [1, 2, 1]


def test_ntt_primes_support_max_size():
    for p, g in NTT_PRIMES:
        assert (p - 1) % (1 << MAX_LOG_SIZE) == 0
        assert pow(g, (p - 1) // 2, p) == p - 1  # g is a non-residue, hence generates the 2-part


def pentagonal(n):
    out = [0] * n
    k = 0
    while True:
        done = True
        for j in (k, -k - 1) if k else (0,):
            e = j * (3 * j - 1) // 2
            if e < n:
                out[e] += (-1) ** abs(j)
                done = False
        if done and k:
            break
        k += 1
    return out


def test_pentagonal_square_matches_schoolbook():
    u = pentagonal(21)
    assert series_multiply(u, u, 21).tolist() == schoolbook_multiply(u, u, 21)


def test_eta_cubed_eighth_power_is_product_expansion():
    from apmoments.coeffs import eta_cubed, ramanujan_tau_schoolbook

    e = eta_cubed(100)
    for _ in range(3):
        e = series_multiply(e, e, 100)
    assert [int(v) for v in e] == ramanujan_tau_schoolbook(100)


@given(
    st.lists(st.integers(-(10**6), 10**6), min_size=1, max_size=300),
    st.lists(st.integers(-(10**6), 10**6), min_size=1, max_size=300),
)
def test_random_products_match_schoolbook(u, v):
    assert series_multiply(u, v).tolist() == schoolbook_multiply(u, v)


@given(st.lists(st.integers(-(2**80), 2**80), min_size=1, max_size=40))
def test_big_integer_inputs(u):
    arr = np.array(u, dtype=object)
    got = series_multiply(arr, arr)
    assert [int(x) for x in got] == schoolbook_multiply(u, u)


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=200), st.integers(1, 250))
def test_truncation(u, cap):
    assert series_multiply(u, u, cap).tolist() == schoolbook_multiply(u, u, cap)


def test_transform_size():
    assert transform_size(1, 1) == 1
    assert transform_size(3, 3) == 8
    assert transform_size(4, 1) == 4
    with pytest.raises(MemoryError):
        transform_size(1 << MAX_LOG_SIZE, 2)


def test_convolver_rejects_bad_size():
    p, g = NTT_PRIMES[0]
    with pytest.raises(ValueError):
        ModularConvolver(p, g, 12)


def test_prime_count_grows_with_bound():
    assert len(primes_for_bound(10)) == 1
    assert len(primes_for_bound(2**100)) == 4
    with pytest.raises(OverflowError):
        primes_for_bound(2**400)


@given(st.lists(st.integers(-(2**90), 2**90), min_size=1, max_size=20))
def test_garner_round_trip(vals):
    chosen = primes_for_bound(2**91)
    primes = [p for p, _ in chosen]
    res = [np.array([v % p for v in vals], dtype=np.uint64) for p in primes]
    digits = garner_digits(res, primes)
    assert [int(x) for x in garner_int(digits, primes)] == vals
    f = garner_float(digits, primes)
    for a, b in zip(f, vals):
        assert a == pytest.approx(float(b), rel=1e-15, abs=1.0)
