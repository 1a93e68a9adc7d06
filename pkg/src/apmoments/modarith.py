"""Exact modular arithmetic over odd prime powers.

Everything here works on Python integers, so products never overflow.  The
modulus cap of 2**62 is kept anyway so that values stay interchangeable with
the numpy ``int64`` tables built elsewhere in the package.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

MODULUS_CAP = 1 << 62

# Deterministic Miller-Rabin witnesses, valid for every n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test (exact below 2**64)."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimePowerModulus:
    """The modulus q = p**N with p an odd prime."""

    p: int
    N: int = 1

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"exponent must be >= 1, got N={self.N}")
        if self.p < 3 or not is_prime(self.p):
            raise ValueError(f"p must be an odd prime, got p={self.p}")
        if self.p**self.N >= MODULUS_CAP:
            raise ValueError(f"q = {self.p}^{self.N} exceeds the 2^62 cap")

    @property
    def q(self) -> int:
        return self.p**self.N

    @property
    def phi(self) -> int:
        return self.p ** (self.N - 1) * (self.p - 1)

    def lower(self) -> PrimePowerModulus | None:
        """The modulus q/p, or None when q = p."""
        if self.N == 1:
            return None
        return PrimePowerModulus(self.p, self.N - 1)

    @classmethod
    def from_q(cls, q: int) -> PrimePowerModulus:
        """Factor an odd prime power q into (p, N)."""
        if q < 3 or q % 2 == 0:
            raise ValueError(f"q must be an odd prime power, got {q}")
        p = 3
        while p * p <= q and q % p:
            p += 2
        if q % p:
            p = q
        N, r = 0, q
        while r % p == 0:
            r //= p
            N += 1
        if r != 1:
            raise ValueError(f"q={q} is not a prime power")
        return cls(p, N)

    def __str__(self) -> str:
        return f"{self.p}^{self.N}" if self.N > 1 else str(self.p)


def as_modulus(q: int | PrimePowerModulus) -> PrimePowerModulus:
    if isinstance(q, PrimePowerModulus):
        return q
    return PrimePowerModulus.from_q(int(q))


def kronecker_symbol(a: int, n: int) -> int:
    """Kronecker symbol (a/n), the full extension to every nonzero n."""
    if n == 0:
        raise ValueError("the Kronecker symbol is undefined for n = 0")
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -1
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # n is now odd and positive: Jacobi symbol by reciprocity.
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p, via Euler's criterion."""
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def epsilon_factor(d: int) -> complex:
    """The theta multiplier: 1 when d = 1 mod 4, i when d = 3 mod 4."""
    if d % 2 == 0:
        raise ValueError(f"epsilon factor needs an odd integer, got {d}")
    return 1 + 0j if d % 4 == 1 else 1j


@lru_cache(maxsize=None)
def find_nonresidue(p: int) -> int:
    """Smallest positive quadratic non-residue modulo the odd prime p."""
    m = 2
    while legendre(m, p) != -1:
        m += 1
    return m


def _tonelli_shanks(x: int, p: int) -> int:
    x %= p
    if p % 4 == 3:
        return pow(x, (p + 1) // 4, p)
    s, d = 0, p - 1
    while d % 2 == 0:
        d //= 2
        s += 1
    z = pow(find_nonresidue(p), d, p)
    r = pow(x, (d + 1) // 2, p)
    t = pow(x, d, p)
    m = s
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(z, 1 << (m - i - 1), p)
        r = r * b % p
        z = b * b % p
        t = t * z % p
        m = i
    return r


def mod_sqrt(x: int, q: int | PrimePowerModulus) -> int | None:
    """Canonical square root of x modulo q, in [1, (q-1)/2].

    Tonelli-Shanks modulo p, then Newton/Hensel lifting to p**N.  Returns
    None when x is a non-residue modulo p.

    Raises:
        ValueError: if p divides x.
    """
    mod = as_modulus(q)
    p, N = mod.p, mod.N
    if x % p == 0:
        raise ValueError(f"mod_sqrt needs gcd(x, p) = 1, got x={x}, p={p}")
    if legendre(x, p) != 1:
        return None
    r = _tonelli_shanks(x, p)
    k = 1
    while k < N:
        k = min(2 * k, N)
        pk = p**k
        r = (r - (r * r - x) * pow(2 * r, -1, pk)) % pk
    qq = mod.q
    return r if r <= (qq - 1) // 2 else qq - r


def mod_inverse(u: int, q: int | PrimePowerModulus) -> int:
    """Inverse of u modulo q in [1, q-1]."""
    qq = as_modulus(q).q
    if math.gcd(u, qq) != 1:
        raise ValueError(f"{u} is not invertible modulo {qq}")
    return pow(u, -1, qq)


def ramanujan_sum(x: int, q: int | PrimePowerModulus) -> int:
    """Sum of e_q(b x) over invertible b mod q, by its closed form."""
    mod = as_modulus(q)
    p, N = mod.p, mod.N
    if x % mod.q == 0:
        return mod.phi
    if x % p ** (N - 1) == 0:
        return -(p ** (N - 1))
    return 0


def dirac_mod(x: int, q: int) -> int:
    if q < 1:
        raise ValueError(f"modulus must be >= 1, got {q}")
    return 1 if x % q == 0 else 0


def e_q(x: int, q: int) -> complex:
    """exp(2 pi i x / q); x is reduced first so the phase stays small."""
    return cmath.exp(2j * math.pi * (x % q) / q)


def primitive_root(mod: PrimePowerModulus) -> int:
    """A generator of (Z/qZ)^x: a primitive root mod p, lifted if needed."""
    p = mod.p
    factors = _prime_factors(p - 1)
    g = 2
    while any(pow(g, (p - 1) // f, p) == 1 for f in factors):
        g += 1
    if mod.N > 1 and pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out
