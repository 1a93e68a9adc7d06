"""Normalized Kloosterman, Salie and Gauss sums modulo odd prime powers.

Two evaluation routes are kept side by side: ``direct`` sums over the unit
group (O(q), with a cached inverse table) and ``closed_form`` which only needs
the two square roots of mn modulo q (O(log q)).  The vectorized helpers at the
bottom evaluate the closed form for a whole residue sweep at once; they take
the square roots from a table built by squaring, not from ``mod_sqrt``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .modarith import (
    PrimePowerModulus,
    as_modulus,
    epsilon_factor,
    kronecker_symbol,
    legendre,
    mod_sqrt,
)


class Method(str, Enum):
    DIRECT = "direct"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class TwistedSumValue:
    value: complex
    method: Method


@lru_cache(maxsize=64)
def inverse_table(q: int) -> np.ndarray:
    """inv[x] = x^{-1} mod q for units x, 0 elsewhere. Read-only."""
    mod = as_modulus(q)
    inv = np.zeros(q, dtype=np.int64)
    for x in range(1, q):
        if x % mod.p:
            inv[x] = pow(x, -1, q)
    inv.flags.writeable = False
    return inv


@lru_cache(maxsize=64)
def legendre_table(p: int) -> np.ndarray:
    """chi[r] = (r/p) for r in [0, p)."""
    chi = -np.ones(p, dtype=np.int8)
    chi[0] = 0
    y = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
    chi[(y * y) % p] = 1
    chi.flags.writeable = False
    return chi


def jacobi_table(mod: PrimePowerModulus) -> np.ndarray:
    """(x/q) = (x/p)^N for every residue x mod q."""
    chi = legendre_table(mod.p).astype(np.int64)
    vals = chi[np.arange(mod.q) % mod.p]
    return vals**mod.N if mod.N > 1 else vals


@lru_cache(maxsize=16)
def sqrt_table(q: int) -> np.ndarray:
    """root[x] = canonical square root of x in [1, (q-1)/2], 0 if none.

    Built by squaring every unit y <= (q-1)/2, so it is independent of the
    Tonelli-Shanks path in ``mod_sqrt``.
    """
    mod = as_modulus(q)
    root = np.zeros(q, dtype=np.int64)
    y = np.arange(1, (q - 1) // 2 + 1, dtype=np.int64)
    y = y[y % mod.p != 0]
    root[(y * y) % q] = y
    root.flags.writeable = False
    return root


def _check_closed_form(m: int, n: int, mod: PrimePowerModulus) -> bool:
    """Returns True when the sum vanishes by the p | n clause."""
    if m % mod.p == 0:
        raise ValueError(
            f"closed form needs p not dividing m (p={mod.p}, m={m})"
        )
    return n % mod.p == 0 and mod.N >= 2


def kloosterman(
    m: int,
    n: int,
    q: int | PrimePowerModulus,
    method: Method | str = Method.DIRECT,
) -> complex:
    """Normalized Kloosterman sum Kl_q(m, n) = q^{-1/2} sum e_q(mx + n/x)."""
    mod = as_modulus(q)
    method = Method(method)
    qq = mod.q
    if method is Method.DIRECT:
        x = np.flatnonzero(inverse_table(qq))
        phase = (m * x + n * inverse_table(qq)[x]) % qq
        return complex(np.exp(2j * np.pi * phase / qq).sum() / math.sqrt(qq))
    if mod.N < 2:
        raise ValueError("closed-form Kloosterman sums need N >= 2")
    if _check_closed_form(m, n, mod):
        return 0j
    r = mod_sqrt(m * n % qq, mod)
    if r is None:
        return 0j
    eps = epsilon_factor(qq)
    total = 0j
    for x in (r, qq - r):
        total += kronecker_symbol(x, qq) * cmath.exp(4j * math.pi * x / qq)
    return eps * total


def salie(
    m: int,
    n: int,
    q: int | PrimePowerModulus,
    method: Method | str = Method.DIRECT,
) -> complex:
    """Normalized Salie sum Sal_q(m, n) = q^{-1/2} sum (x/q) e_q(mx + n/x).

    For q = p and p | n the closed form is read with the single root x = 0,
    which reproduces the Gauss sum (m/p) eps_p.
    """
    mod = as_modulus(q)
    method = Method(method)
    qq = mod.q
    if method is Method.DIRECT:
        inv = inverse_table(qq)
        x = np.flatnonzero(inv)
        chi = jacobi_table(mod)[x]
        phase = (m * x + n * inv[x]) % qq
        return complex((chi * np.exp(2j * np.pi * phase / qq)).sum() / math.sqrt(qq))
    if _check_closed_form(m, n, mod):
        return 0j
    front = kronecker_symbol(m, qq) * epsilon_factor(qq)
    if n % mod.p == 0:
        return front * (1 + 0j)
    r = mod_sqrt(m * n % qq, mod)
    if r is None:
        return 0j
    return front * 2 * math.cos(4 * math.pi * r / qq)


def sa(x: int, q: int | PrimePowerModulus) -> float:
    """Sa_q(x) = 2 cos(2 pi sqrt(x)/q) when (x/p) = 1, else 0."""
    mod = as_modulus(q)
    if x % mod.p == 0 or legendre(x, mod.p) != 1:
        return 0.0
    r = mod_sqrt(x % mod.q, mod)
    return 2 * math.cos(2 * math.pi * r / mod.q)


def gauss_sum(nu: int, a: int, q: int | PrimePowerModulus) -> complex:
    """G((./q)^nu, a) = (1/q) sum_{x mod q} (x/q)^nu e_q(a x).

    (x/q) is the Jacobi symbol, so for even N the character is principal.
    Non-units carry the value 0 for every nu >= 1.
    """
    mod = as_modulus(q)
    qq = mod.q
    chi = jacobi_table(mod)
    if nu % 2 == 0:
        chi = chi * chi
    x = np.arange(qq)
    return complex((chi * np.exp(2j * np.pi * ((a * x) % qq) / qq)).sum() / qq)


# -- vectorized closed forms -------------------------------------------------


def kloosterman_sweep(m: int, mod: PrimePowerModulus) -> np.ndarray:
    """Kl_q(m, a) for every residue a mod q (closed form, N >= 2).

    Entries with p | a vanish; p | m is rejected as for the scalar version.
    """
    if mod.N < 2:
        raise ValueError("closed-form Kloosterman sums need N >= 2")
    qq = mod.q
    if m % mod.p == 0:
        raise ValueError(f"closed form needs p not dividing m (p={mod.p}, m={m})")
    a = np.arange(qq, dtype=np.int64)
    r = sqrt_table(qq)[(m % qq) * a % qq]
    hit = r > 0
    out = np.zeros(qq, dtype=complex)
    rr = r[hit]
    chi = jacobi_table(mod)
    eps = epsilon_factor(qq)
    out[hit] = eps * (
        chi[rr] * np.exp(4j * np.pi * rr / qq)
        + chi[qq - rr] * np.exp(-4j * np.pi * rr / qq)
    )
    return out


def sa_sweep(m: int, mod: PrimePowerModulus) -> np.ndarray:
    """Sa_q(m a) for every residue a mod q."""
    qq = mod.q
    a = np.arange(qq, dtype=np.int64)
    r = sqrt_table(qq)[(m % qq) * a % qq]
    out = np.where(r > 0, 2 * np.cos(2 * np.pi * r / qq), 0.0)
    return out


def kloosterman_matrix_direct(mod: PrimePowerModulus) -> np.ndarray:
    """K[m, n] = Kl_q(m, n) for all 0 <= m, n < q by direct summation.

    One (q x phi) by (phi x q) product of additive characters.
    """
    qq = mod.q
    inv = inverse_table(qq)
    x = np.flatnonzero(inv)
    k = np.arange(qq)
    U = np.exp(2j * np.pi * ((np.outer(k, x)) % qq) / qq)
    V = np.exp(2j * np.pi * ((np.outer(inv[x], k)) % qq) / qq)
    return U @ V / math.sqrt(qq)


def salie_matrix_direct(mod: PrimePowerModulus) -> np.ndarray:
    qq = mod.q
    inv = inverse_table(qq)
    x = np.flatnonzero(inv)
    chi = jacobi_table(mod)[x]
    k = np.arange(qq)
    U = np.exp(2j * np.pi * ((np.outer(k, x)) % qq) / qq) * chi
    V = np.exp(2j * np.pi * ((np.outer(inv[x], k)) % qq) / qq)
    return U @ V / math.sqrt(qq)
