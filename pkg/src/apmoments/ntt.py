"""Exact integer convolution by number-theoretic transforms and CRT.

Each prime is below 2**32 with 2**26 dividing p - 1, so residues and their
products fit in uint64 and transforms up to length 2**26 are available.
Twiddle multiplications use Shoup's precomputed quotient trick, which needs
nothing wider than 64 bits.

Results are reassembled with Garner's algorithm in balanced digits, which
gives both exact Python integers and a numerically stable float64 value.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

# (prime, primitive root); every p - 1 is divisible by 2**26.
NTT_PRIMES: tuple[tuple[int, int], ...] = (
    (3892314113, 3),
    (3489660929, 3),
    (3221225473, 5),
    (2885681153, 3),
    (2483027969, 3),
    (2281701377, 3),
    (2013265921, 31),
    (1811939329, 13),
    (469762049, 3),
)
MAX_LOG_SIZE = 26


@nb.njit(cache=True)
def _twiddles(n, root, p):
    # Stage with half-width h uses w[h + j] = omega_{2h}^j, 0 <= j < h.
    w = np.zeros(max(n, 2), dtype=np.uint32)
    ws = np.zeros(max(n, 2), dtype=np.uint32)
    P = np.uint64(p)
    base = np.uint64(root)
    h = n // 2
    while h >= 1:
        cur = np.uint64(1)
        for j in range(h):
            w[h + j] = cur
            ws[h + j] = (cur << np.uint64(32)) // P
            cur = (cur * base) % P
        base = (base * base) % P
        h //= 2
    return w, ws


@nb.njit(cache=True)
def _mulmod_shoup(x, wj, wsj, P):
    qt = (x * wsj) >> np.uint64(32)
    v = x * wj - qt * P
    return v - P if v >= P else v


@nb.njit(cache=True)
def _dif(a, w, ws, p):
    """Forward transform, natural order in, bit-reversed order out."""
    n = a.shape[0]
    P = np.uint64(p)
    h = n // 2
    while h >= 1:
        for start in range(0, n, 2 * h):
            for j in range(h):
                u = a[start + j]
                v = a[start + j + h]
                s = u + v
                a[start + j] = s - P if s >= P else s
                t = u + P - v if u < v else u - v
                a[start + j + h] = _mulmod_shoup(t, np.uint64(w[h + j]), np.uint64(ws[h + j]), P)
        h //= 2


@nb.njit(cache=True)
def _dit(a, w, ws, p):
    """Same transform, bit-reversed order in, natural order out."""
    n = a.shape[0]
    P = np.uint64(p)
    h = 1
    while h < n:
        for start in range(0, n, 2 * h):
            for j in range(h):
                u = a[start + j]
                v = _mulmod_shoup(a[start + j + h], np.uint64(w[h + j]), np.uint64(ws[h + j]), P)
                s = u + v
                a[start + j] = s - P if s >= P else s
                a[start + j + h] = u + P - v if u < v else u - v
        h *= 2


@nb.njit(cache=True)
def _pointwise(a, b, p):
    P = np.uint64(p)
    for i in range(a.shape[0]):
        a[i] = (a[i] * b[i]) % P


@nb.njit(cache=True)
def _inverse_finish(a, n_inv, p):
    # The inverse transform is the forward one with indices 1..n-1 reversed.
    n = a.shape[0]
    P = np.uint64(p)
    ni = np.uint64(n_inv)
    i, j = 1, n - 1
    while i < j:
        t = a[i]
        a[i] = a[j]
        a[j] = t
        i += 1
        j -= 1
    for i in range(n):
        a[i] = (a[i] * ni) % P


class ModularConvolver:
    """Truncated cyclic convolution modulo one NTT prime at a fixed size."""

    def __init__(self, p: int, g: int, size: int):
        if size & (size - 1) or size > 1 << MAX_LOG_SIZE:
            raise ValueError(f"transform size must be a power of two <= 2^{MAX_LOG_SIZE}")
        self.p, self.size = p, size
        root = pow(g, (p - 1) // size, p)
        self.w, self.ws = _twiddles(size, root, p)
        self.n_inv = pow(size, -1, p)

    def _forward(self, x: np.ndarray) -> np.ndarray:
        a = np.zeros(self.size, dtype=np.uint64)
        a[: len(x)] = x
        if self.size > 1:
            _dif(a, self.w, self.ws, self.p)
        return a

    def multiply(self, u: np.ndarray, v: np.ndarray | None, cap: int) -> np.ndarray:
        """(u * v) mod p truncated to ``cap`` terms; v=None squares u."""
        a = self._forward(u)
        if v is None:
            _pointwise(a, a, self.p)
        else:
            _pointwise(a, self._forward(v), self.p)
        if self.size > 1:
            _dit(a, self.w, self.ws, self.p)
            _inverse_finish(a, self.n_inv, self.p)
        return a[:cap].copy()


def transform_size(len_u: int, len_v: int) -> int:
    """Smallest power of two holding the full linear product (no wrap-around)."""
    need = max(len_u + len_v - 1, 1)
    size = 1 << (need - 1).bit_length()
    if size > 1 << MAX_LOG_SIZE:
        raise MemoryError(f"convolution of length {need} exceeds 2^{MAX_LOG_SIZE}")
    return size


def primes_for_bound(bound: int) -> list[tuple[int, int]]:
    """Enough NTT primes that their product exceeds 2 * bound + 1."""
    chosen, prod = [], 1
    for p, g in NTT_PRIMES:
        if prod > 2 * bound + 1:
            break
        chosen.append((p, g))
        prod *= p
    if prod <= 2 * bound + 1:
        raise OverflowError(f"coefficient bound {bound} exceeds the CRT range")
    return chosen


def to_residues(x: np.ndarray, p: int) -> np.ndarray:
    """Signed integers (int64 or Python ints) to uint64 residues mod p."""
    if x.dtype == object:
        return np.array([int(v) % p for v in x], dtype=np.uint64)
    return np.mod(x.astype(np.int64), p).astype(np.uint64)


def garner_digits(residues: list[np.ndarray], primes: list[int]) -> list[np.ndarray]:
    """Balanced mixed-radix digits d_k with value = sum d_k prod_{j<k} p_j."""
    digits: list[np.ndarray] = []
    for k, (r, p) in enumerate(zip(residues, primes)):
        acc = r.astype(np.uint64) % np.uint64(p)
        for j in range(k):
            pj = primes[j]
            dj = np.mod(digits[j], p).astype(np.uint64)
            inv = np.uint64(pow(pj, -1, p))
            diff = (acc + np.uint64(p) - dj) % np.uint64(p)
            acc = (diff * inv) % np.uint64(p)
        d = acc.astype(np.int64)
        d = np.where(d > p // 2, d - p, d)
        digits.append(d)
    return digits


def garner_float(digits: list[np.ndarray], primes: list[int]) -> np.ndarray:
    """Horner evaluation from the top digit; stable for balanced digits."""
    val = digits[-1].astype(np.float64)
    for d, p in zip(reversed(digits[:-1]), reversed(primes[:-1])):
        val = val * float(p) + d
    return val


def garner_int(digits: list[np.ndarray], primes: list[int]) -> np.ndarray:
    val = digits[-1].astype(object)
    for d, p in zip(reversed(digits[:-1]), reversed(primes[:-1])):
        val = val * p + d.astype(object)
    return val


def series_multiply(u, v, cap: int | None = None) -> np.ndarray:
    """Exact product of two integer sequences, truncated to ``cap`` terms.

    The number of CRT primes is chosen from max|u| * max|v| * min(len), so
    the result cannot overflow.  Returns int64 when every coefficient fits,
    otherwise an object array of Python ints.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    if u.dtype != object:
        u = u.astype(np.int64)
    if v.dtype != object:
        v = v.astype(np.int64)
    if len(u) == 0 or len(v) == 0:
        return np.zeros(0, dtype=np.int64)
    full = len(u) + len(v) - 1
    cap = full if cap is None else min(cap, full)
    u, v = u[:cap], v[:cap]
    bound = max(int(abs(x)) for x in (u.max(), u.min())) * max(
        int(abs(x)) for x in (v.max(), v.min())
    ) * min(len(u), len(v))
    size = transform_size(len(u), len(v))
    chosen = primes_for_bound(bound)
    residues = []
    for p, g in chosen:
        conv = ModularConvolver(p, g, size)
        residues.append(conv.multiply(to_residues(u, p), to_residues(v, p), cap))
    primes = [p for p, _ in chosen]
    digits = garner_digits(residues, primes)
    if bound < 2**63:
        out = digits[-1].copy()
        for d, p in zip(reversed(digits[:-1]), reversed(primes[:-1])):
            out = out * p + d
        return out
    return garner_int(digits, primes)


def schoolbook_multiply(u, v, cap: int | None = None) -> list[int]:
    """Reference O(n^2) truncated product in Python integers."""
    u = [int(x) for x in u]
    v = [int(x) for x in v]
    full = len(u) + len(v) - 1
    cap = full if cap is None else min(cap, full)
    out = [0] * cap
    for i, a in enumerate(u[:cap]):
        if a:
            for j, b in enumerate(v[: cap - i]):
                out[i + j] += a * b
    return out


def bits_needed(bound: int) -> int:
    return math.ceil(math.log2(2 * bound + 1))
