import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sympy import factorint, isprime, primepi

from apmoments.modarith import kronecker_symbol
from apmoments.qrprimes import (
    character_prime_sums,
    count_qr_primes,
    first_prime_with_nonresidue_above,
    least_nonresidue,
    least_nonresidues,
    parse_z,
    primes_up_to,
    qr_prime_records,
    search_qr_primes,
)


def naive_primes(x):
    return [n for n in range(2, x + 1) if all(n % d for d in range(2, math.isqrt(n) + 1))]


def squares_mod(p):
    return {(r * r) % p for r in range(1, p)}


@pytest.mark.parametrize("p, n", [(7, 3), (23, 5), (3, 2)])
def test_least_nonresidue_examples(p, n):
    assert least_nonresidue(p) == n


def test_sieve_matches_trial_division():
    assert primes_up_to(5000).tolist() == naive_primes(5000)


def test_segment_boundaries():
    from apmoments.qrprimes import iter_prime_segments

    got = np.concatenate(list(iter_prime_segments(20000, segment=997)))
    assert got.tolist() == naive_primes(20000)


@given(st.integers(3, 200_000).filter(lambda n: n % 2 == 1 and isprime(n)))
def test_record_invariant(p):
    n = least_nonresidue(p)
    for m in range(1, n):
        assert pow(m, (p - 1) // 2, p) == 1
    assert pow(n, (p - 1) // 2, p) == p - 1


def test_vectorised_matches_scalar():
    ps = primes_up_to(30000)
    ps = ps[ps > 2]
    assert least_nonresidues(ps).tolist() == [least_nonresidue(int(p)) for p in ps]


def test_count_examples():
    assert count_qr_primes(100, 2) == 11
    assert count_qr_primes(30, 1) == int(primepi(30)) - 1


def test_count_z2_is_plus_minus_one_mod_8():
    recs = search_qr_primes(100, 2)
    assert [r.p for r in recs] == [p for p in naive_primes(100) if p % 8 in (1, 7)]


def test_count_z3_matches_exhaustive_oracle():
    oracle = 0
    for p in naive_primes(10_000)[1:]:
        sq = squares_mod(p)
        oracle += all(m % p in sq for m in range(1, 4))
    assert count_qr_primes(10_000, 3) == oracle


def test_loglog_count_nondecreasing_and_positive():
    grid = [7, 10, 30, 100, 1000, 10_000, 100_000, 1_000_000]
    counts = [count_qr_primes(x, "loglog") for x in grid]
    assert all(c > 0 for c in counts)
    assert counts == sorted(counts)


def test_records_stream():
    recs = list(qr_prime_records(200))
    assert [r.p for r in recs] == naive_primes(200)[1:]
    assert all(r.least_nonresidue == least_nonresidue(r.p) for r in recs)


def test_first_prime_with_large_nonresidue():
    r = first_prime_with_nonresidue_above(11)
    assert r.least_nonresidue > 11
    assert all(least_nonresidue(p) <= 11 for p in naive_primes(r.p - 1)[1:])


def test_count_rejects_small_x():
    with pytest.raises(ValueError):
        count_qr_primes(2)


@pytest.mark.parametrize("spec, want", [("const:3", 3.0), ("loglog", "loglog"), ("const:2.5", 2.5)])
def test_parse_z(spec, want):
    assert parse_z(spec) == want


def test_parse_z_rejects():
    with pytest.raises(ValueError):
        parse_z("cubic")


def test_charsum_principal():
    r = character_prime_sums(1, 1000)
    assert r.pi_chi == int(primepi(1000))


def test_charsum_q3_x10():
    r = character_prime_sums(3, 10)
    want = sum(kronecker_symbol(3, p) for p in (2, 3, 5, 7))
    assert r.pi_chi == want
    assert kronecker_symbol(3, 3) == 0


@given(st.sampled_from([1, 3, 5, 7, 15, 21, 105]), st.integers(3, 3000))
def test_charsum_bounds_and_split(q, x):
    r = character_prime_sums(q, x)
    assert abs(r.pi_chi) <= primepi(x)
    assert math.isclose(r.psi_chi, r.psi_primes + r.psi_prime_powers, abs_tol=1e-9)
    direct = 0.0
    for n in range(2, x + 1):
        f = factorint(n)
        if len(f) == 1:
            direct += kronecker_symbol(q, n) * math.log(next(iter(f)))
    assert math.isclose(r.psi_chi, direct, abs_tol=1e-6)


@pytest.mark.parametrize("q", [0, 4, 9, 45])
def test_charsum_rejects(q):
    with pytest.raises(ValueError):
        character_prime_sums(q, 100)
