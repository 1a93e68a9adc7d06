"""Residue-class moments of products of Sa_q values.

The exact formula reduces a moment over a symbol class to counting sign
patterns e with sum e_i sqrt(mu m_i) = 0 modulo q and modulo q/p.  The brute
force oracle sums the product over the class directly, walking the class as
an orbit of a primitive root so that no Legendre symbols are evaluated.

Deciding whether a signed sum of integer square roots vanishes is done
exactly: write m = r^2 t with t squarefree, then the sum is zero iff for each
kernel t the signed r's cancel.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .expsum import sqrt_table
from .modarith import (
    PrimePowerModulus,
    as_modulus,
    find_nonresidue,
    legendre,
    mod_sqrt,
    primitive_root,
)


@dataclass(frozen=True)
class MomentTuple:
    modulus: PrimePowerModulus
    shifts: tuple[int, ...]
    selector: int = 1

    def __post_init__(self) -> None:
        if self.selector not in (1, -1):
            raise ValueError(f"class selector must be +1 or -1, got {self.selector}")
        for m in self.shifts:
            if m <= 0 or m % self.modulus.p == 0:
                raise ValueError(f"shift {m} must be positive and coprime to p")

    @classmethod
    def make(cls, q: int | PrimePowerModulus, shifts: Sequence[int], selector: int = 1):
        return cls(as_modulus(q), tuple(int(m) for m in shifts), int(selector))


@dataclass(frozen=True)
class SquarefreeDecomposition:
    m: int
    r: int
    t: int


@dataclass(frozen=True)
class DeltaBoundCheck:
    lhs: int
    rhs: int
    holds: bool


def _sign_patterns(nu: int):
    return itertools.product((1, -1), repeat=nu)


def _count_vanishing(roots: Sequence[int], modulus: int) -> int:
    return sum(
        1
        for e in _sign_patterns(len(roots))
        if sum(ei * r for ei, r in zip(e, roots)) % modulus == 0
    )


def salie_moment_exact(t: MomentTuple) -> Fraction:
    """The class moment of prod Sa_q(m_i a) as an exact rational."""
    mod = t.modulus
    symbols = {legendre(m, mod.p) for m in t.shifts}
    if len(symbols) != 1 or symbols.pop() != t.selector:
        return Fraction(0)
    mu = 1 if t.selector == 1 else find_nonresidue(mod.p)
    roots = [mod_sqrt(mu * m % mod.q, mod) for m in t.shifts]
    main = _count_vanishing(roots, mod.q)
    low = mod.lower()
    if low is None:
        sub = 2 ** len(t.shifts)
    else:
        sub = _count_vanishing(
            [mod_sqrt(mu * m % low.q, low) for m in t.shifts], low.q
        )
    return Fraction(mod.q, mod.phi) * (main - Fraction(sub, mod.p))


def salie_moment_formula(t: MomentTuple) -> float:
    """Exact class moment of prod_i Sa_q(m_i a), as a float."""
    return float(salie_moment_exact(t))


def class_orbit(mod: PrimePowerModulus, selector: int) -> np.ndarray:
    """The units a mod q with (a/p) = selector, as the orbit g^(2k + j)."""
    g = primitive_root(mod)
    half = mod.phi // 2
    out = np.empty(half, dtype=np.int64)
    step = g * g % mod.q
    a = 1 if selector == 1 else g
    for k in range(half):
        out[k] = a
        a = a * step % mod.q
    return out


def _sa_values(mod: PrimePowerModulus) -> np.ndarray:
    root = sqrt_table(mod.q)
    return np.where(root > 0, 2 * np.cos(2 * np.pi * root / mod.q), 0.0)


def salie_moment_bruteforce(t: MomentTuple, threads: int = 1) -> float:
    """(2/phi(q)) sum over the class of prod_i Sa_q(m_i a), summed directly.

    The class is split into ``threads`` contiguous chunks; partial sums are
    combined with ``math.fsum`` so the result does not depend on the split.
    """
    mod = t.modulus
    table = _sa_values(mod)
    orbit = class_orbit(mod, t.selector)

    def chunk(a: np.ndarray) -> np.ndarray:
        prod = np.ones(len(a))
        for m in t.shifts:
            prod *= table[(m % mod.q) * a % mod.q]
        return prod

    pieces = np.array_split(orbit, max(1, threads))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(chunk, pieces))
    else:
        parts = [chunk(a) for a in pieces]
    return 2 * math.fsum(np.concatenate(parts)) / mod.phi


# -- exact square-root sums --------------------------------------------------


def squarefree_decompose(m: int) -> SquarefreeDecomposition:
    """m = r^2 t with t squarefree, by trial division."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    r, t, n = 1, 1, m
    d = 2
    while d * d <= n:
        k = 0
        while n % d == 0:
            n //= d
            k += 1
        r *= d ** (k // 2)
        if k % 2:
            t *= d
        d += 1 if d == 2 else 2
    t *= n
    return SquarefreeDecomposition(m, r, t)


def sqrt_sum_is_zero(signs: Sequence[int], values: Sequence[int]) -> bool:
    """True iff sum_i signs[i] * sqrt(values[i]) == 0 exactly."""
    if len(signs) != len(values):
        raise ValueError("signs and values must have equal length")
    by_kernel: dict[int, int] = defaultdict(int)
    for e, m in zip(signs, values):
        d = squarefree_decompose(m)
        by_kernel[d.t] += e * d.r
    return all(v == 0 for v in by_kernel.values())


def _mul_radicals(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    # Elements are sums c_k sqrt(k) over squarefree k.
    out: dict[int, int] = defaultdict(int)
    for k1, c1 in a.items():
        for k2, c2 in b.items():
            g = math.gcd(k1, k2)
            out[(k1 // g) * (k2 // g)] += c1 * c2 * g
    return {k: c for k, c in out.items() if c}


def q_poly(values: Sequence[int]) -> int:
    """Q_r(m_1..m_r) = prod over sign vectors with e_1 = 1 of sum e_i sqrt(m_i)."""
    r = len(values)
    if r == 0:
        return 0
    if r == 1:
        return int(values[0])
    parts = [squarefree_decompose(int(m)) for m in values]
    acc: dict[int, int] = {1: 1}
    for tail in _sign_patterns(r - 1):
        factor: dict[int, int] = defaultdict(int)
        for e, d in zip((1, *tail), parts):
            factor[d.t] += e * d.r
        acc = _mul_radicals(acc, {k: c for k, c in factor.items() if c})
        if not acc:
            return 0
    if set(acc) != {1}:
        raise ArithmeticError(f"Q_{r} did not reduce to an integer: {acc}")
    return acc[1]


def check_delta_bound(
    q: int | PrimePowerModulus, Y: float, values: Sequence[int]
) -> DeltaBoundCheck:
    """Compare the modular and integer zero counts of signed root sums.

    Raises:
        ValueError: when (nu^2 Y)^(2^(nu-2)) >= q/2, some m_i >= Y, or some
            m_i is not a residue modulo p.
    """
    mod = as_modulus(q)
    nu = len(values)
    if (nu * nu * Y) ** (2.0 ** (nu - 2)) >= mod.q / 2:
        raise ValueError(f"size hypothesis fails for nu={nu}, Y={Y}, q={mod.q}")
    for m in values:
        if not 1 <= m < Y:
            raise ValueError(f"need 1 <= m < Y, got m={m}, Y={Y}")
        if legendre(m, mod.p) != 1:
            raise ValueError(f"{m} is not a quadratic residue mod {mod.p}")
    roots = [mod_sqrt(m % mod.q, mod) for m in values]
    lhs = _count_vanishing(roots, mod.q)
    zeros = sum(1 for e in _sign_patterns(nu) if sqrt_sum_is_zero(e, values))
    rhs = 2**nu * zeros
    return DeltaBoundCheck(lhs, rhs, lhs <= rhs)
