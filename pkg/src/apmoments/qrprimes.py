"""Primes whose first few integers are all quadratic residues.

The sieve is a segmented Eratosthenes.  Least non-residues of a whole block
of primes are found together: for each small prime l (in increasing order)
the symbol (l/p) follows from p mod 4l by reciprocity, so the block is
filtered with array operations instead of one modular power per prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .modarith import kronecker_symbol, legendre

SEGMENT = 1 << 20


@dataclass(frozen=True)
class QrPrimeRecord:
    p: int
    least_nonresidue: int


@dataclass(frozen=True)
class CharacterSums:
    q_I: int
    x: int
    pi_chi: int
    psi_chi: float
    psi_primes: float
    psi_prime_powers: float


def _small_primes(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, math.isqrt(n) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return np.flatnonzero(sieve)


def iter_prime_segments(x: int, segment: int = SEGMENT) -> Iterator[np.ndarray]:
    """Yield the primes <= x in increasing blocks (segmented sieve)."""
    if x < 2:
        return
    base = _small_primes(math.isqrt(x) + 1)
    for lo in range(0, x + 1, segment):
        hi = min(lo + segment, x + 1)
        mark = np.ones(hi - lo, dtype=bool)
        if lo == 0:
            mark[: min(2, hi)] = False
        for p in base:
            if p * p >= hi:
                break
            start = max(p * p, (lo + p - 1) // p * p)
            mark[start - lo :: p] = False
        yield np.flatnonzero(mark) + lo


def primes_up_to(x: int) -> np.ndarray:
    blocks = list(iter_prime_segments(x))
    return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)


def least_nonresidue(p: int) -> int:
    """Smallest m >= 2 with (m/p) = -1.  The answer is always prime."""
    if p < 3:
        raise ValueError(f"p must be an odd prime, got {p}")
    m = 2
    while True:
        if legendre(m, p) == -1:
            return m
        m += 1 if m == 2 else 2
        while any(m % d == 0 for d in range(3, math.isqrt(m) + 1, 2)):
            m += 2


def _symbol_vec(ell: int, p: np.ndarray) -> np.ndarray:
    """(ell/p) for a prime ell and an array of odd primes p != ell."""
    if ell == 2:
        r = p % 8
        return np.where((r == 1) | (r == 7), 1, -1)
    chi = np.zeros(ell, dtype=np.int64)
    y = np.arange(1, ell)
    chi[:] = -1
    chi[(y * y) % ell] = 1
    chi[0] = 0
    flip = np.where((ell % 4 == 3) & (p % 4 == 3), -1, 1)
    return chi[p % ell] * flip


def least_nonresidues(primes: np.ndarray) -> np.ndarray:
    """Vectorized least_nonresidue over an array of odd primes."""
    primes = np.asarray(primes, dtype=np.int64)
    out = np.zeros(len(primes), dtype=np.int64)
    todo = np.arange(len(primes))
    ell = 2
    while len(todo):
        p = primes[todo]
        # ell == p is impossible here: every m < p is a residue only for p <= 2.
        chi = _symbol_vec(ell, p)
        chi[p == ell] = 0
        hit = chi == -1
        out[todo[hit]] = ell
        todo = todo[~hit]
        ell = _next_prime(ell)
    return out


def _next_prime(n: int) -> int:
    m = n + 1
    while any(m % d == 0 for d in range(2, math.isqrt(m) + 1)):
        m += 1
    return m


def qr_prime_records(x: int) -> Iterator[QrPrimeRecord]:
    for block in iter_prime_segments(x):
        block = block[block > 2]
        for p, n in zip(block.tolist(), least_nonresidues(block).tolist()):
            yield QrPrimeRecord(p, n)


def _resolve_z(Z: float | str | Callable[[float], float]) -> Callable[[np.ndarray], np.ndarray]:
    if Z == "loglog":
        return lambda p: np.log(np.log(p))
    if callable(Z):
        return lambda p: np.array([Z(float(v)) for v in p])
    return lambda p: np.full(len(p), float(Z))


def parse_z(spec: str) -> float | str:
    """Parse the CLI form ``const:3`` or ``loglog``."""
    if spec == "loglog":
        return "loglog"
    if spec.startswith("const:"):
        return float(spec.split(":", 1)[1])
    raise ValueError(f"unknown Z spec {spec!r}; use const:<value> or loglog")


def qr_prime_mask(primes: np.ndarray, Z) -> np.ndarray:
    """(m/p) = 1 for all 1 <= m <= floor(Z(p)), elementwise over odd primes."""
    primes = np.asarray(primes, dtype=np.int64)
    zf = np.floor(_resolve_z(Z)(primes.astype(float))).astype(np.int64)
    n = least_nonresidues(primes)
    # m = p itself would give symbol 0, so p must also exceed floor(Z).
    return (n > zf) & (primes > zf)


def count_qr_primes(x: int, Z=2) -> int:
    """N_x: odd primes p <= x with (m/p) = 1 for every 1 <= m <= Z(p)."""
    if x < 3:
        raise ValueError(f"need x >= 3, got {x}")
    total = 0
    for block in iter_prime_segments(x):
        block = block[block > 2]
        total += int(qr_prime_mask(block, Z).sum())
    return total


def search_qr_primes(x: int, Z=2) -> list[QrPrimeRecord]:
    out = []
    for block in iter_prime_segments(x):
        block = block[block > 2]
        mask = qr_prime_mask(block, Z)
        n = least_nonresidues(block[mask])
        out.extend(QrPrimeRecord(int(p), int(k)) for p, k in zip(block[mask], n))
    return out


def first_prime_with_nonresidue_above(bound: int, start: int = 3) -> QrPrimeRecord:
    """Smallest odd prime p >= start whose least non-residue exceeds bound."""
    lo = max(start, 3)
    width = 1 << 16
    while True:
        hi = lo + width
        block = primes_up_to(hi)
        block = block[block >= lo]
        if len(block):
            n = least_nonresidues(block)
            hit = np.flatnonzero(n > bound)
            if len(hit):
                i = hit[0]
                return QrPrimeRecord(int(block[i]), int(n[i]))
        lo = hi + 1
        width *= 2


def character_prime_sums(q_I: int, x: int) -> CharacterSums:
    """pi_chi(x) and psi_chi(x) for chi = (q_I / .), standard Kronecker symbol.

    psi_chi sums chi(n) Lambda(n) over prime powers n <= x; the part coming
    from proper powers p^k, k >= 2, is reported separately.
    """
    if q_I < 1 or q_I % 2 == 0:
        raise ValueError(f"q_I must be odd and positive, got {q_I}")
    d = 3
    while d * d <= q_I:
        if q_I % (d * d) == 0:
            raise ValueError(f"q_I must be squarefree, got {q_I}")
        d += 2
    primes = primes_up_to(x)
    chi = np.array([kronecker_symbol(q_I, int(p)) for p in primes], dtype=np.int64)
    logs = np.log(primes.astype(float))
    pi_chi = int(chi.sum())
    psi_primes = math.fsum(chi * logs)
    extra = []
    for p, c, lg in zip(primes.tolist(), chi.tolist(), logs.tolist()):
        if p * p > x:
            break
        pk, k = p * p, 2
        while pk <= x:
            extra.append(c**k * lg)
            pk *= p
            k += 1
    psi_pp = math.fsum(extra)
    return CharacterSums(q_I, x, pi_chi, psi_primes + psi_pp, psi_primes, psi_pp)
