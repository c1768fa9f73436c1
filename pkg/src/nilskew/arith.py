"""Mobius sieve, continued fractions, and resonance classification.

The sieve side produces read-only tables of mu(n); the continued-fraction
side expands a rotation number into partial quotients and convergents with
exact rational arithmetic, classifies convergent denominators by the
threshold q_{k+1} <= q_k^B, and decides membership of integer frequencies in
the resonant bands (multiples of a sharp denominator q_k lying in
[q_k, q_{k+1}), together with 0).

Rotation numbers are carried by the Alpha wrapper, which keeps both a float
value and an exact Fraction so that n*alpha mod 1 and distances to the
nearest integer never accumulate drift.

MobiusTable is written once by its constructor and read-only afterwards;
everything else is pure, so concurrent reads need no coordination.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    PrecisionExhaustedError,
    ResourceBudgetError,
    SieveTooSmallError,
    UndecidableBandError,
    ValidationError,
)

__all__ = [
    "MobiusTable",
    "mobius_sieve",
    "write_sieve_cache",
    "read_sieve_cache",
    "ContinuedFraction",
    "cf_expand",
    "DenominatorClassification",
    "classify",
    "m1_member",
    "liouville_alpha",
    "Alpha",
]

SIEVE_MAGIC = b"MUSIEVE1"


class MobiusTable:
    """mu(n) for 1 <= n <= n_max, sieve-built, read-only after construction."""

    __slots__ = ("n_max", "_values")

    def __init__(self, n_max: int, values: np.ndarray):
        if values.shape != (n_max + 1,) or values.dtype != np.int8:
            raise ValidationError("values must be an int8 array indexed 0..n_max")
        values = values.copy()
        values.setflags(write=False)
        self.n_max = n_max
        self._values = values

    @property
    def values(self) -> np.ndarray:
        """Read-only array with values[n] = mu(n); index 0 is unused."""
        return self._values

    def mu(self, n: int) -> int:
        if not 1 <= n <= self.n_max:
            raise ValidationError(f"mu({n}) outside sieve range 1..{self.n_max}")
        return int(self._values[n])

    def require(self, n: int) -> None:
        if n > self.n_max:
            raise SieveTooSmallError(f"sieve covers n <= {self.n_max}, requested {n}")


def _prime_mask(limit: int) -> np.ndarray:
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return mask


def mobius_sieve(n_max: int, segmented: bool = False, block_size: int = 1 << 20) -> MobiusTable:
    """Build mu(1..n_max).  The default path sieves the whole range in
    memory; the segmented path bounds working memory by block_size."""
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    try:
        if segmented:
            values = _mobius_segmented(n_max, block_size)
        else:
            values = _mobius_flat(n_max)
    except MemoryError as exc:  # pragma: no cover - machine dependent
        raise ResourceBudgetError(f"sieve allocation failed for n_max={n_max}") from exc
    return MobiusTable(n_max, values)


def _mobius_flat(n_max: int) -> np.ndarray:
    mu = np.ones(n_max + 1, dtype=np.int8)
    mu[0] = 0
    primes = np.flatnonzero(_prime_mask(n_max))
    for p in primes:
        mu[p::p] *= -1
    for p in primes[primes <= math.isqrt(n_max)]:
        mu[p * p :: p * p] = 0
    return mu


def _mobius_segmented(n_max: int, block_size: int) -> np.ndarray:
    out = np.zeros(n_max + 1, dtype=np.int8)
    base_primes = np.flatnonzero(_prime_mask(math.isqrt(n_max)))
    lo = 1
    while lo <= n_max:
        hi = min(lo + block_size - 1, n_max)
        out[lo : hi + 1] = _mobius_block(lo, hi, base_primes)
        lo = hi + 1
    return out


def _mobius_block(lo: int, hi: int, base_primes: np.ndarray) -> np.ndarray:
    n = hi - lo + 1
    mu = np.ones(n, dtype=np.int8)
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    for p in base_primes:
        p = int(p)
        start = (-lo) % p
        mu[start::p] *= -1
        rem[start::p] //= p
        pe = p * p
        first = True
        while pe <= hi:
            start_e = (-lo) % pe
            if first:
                mu[start_e::pe] = 0
                first = False
            rem[start_e::pe] //= p
            pe *= p
    # entries with a leftover factor have exactly one prime above sqrt(hi)
    mu[rem > 1] *= -1
    if lo == 1:
        mu[0] = 1
    return mu


def write_sieve_cache(table: MobiusTable, path) -> None:
    """Cache format: 8-byte magic, 8-byte little-endian n_max, then n_max
    signed bytes with mu(1) at data offset 0."""
    with open(path, "wb") as fh:
        fh.write(SIEVE_MAGIC)
        fh.write(struct.pack("<Q", table.n_max))
        fh.write(table.values[1:].tobytes())


def read_sieve_cache(path) -> MobiusTable:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != SIEVE_MAGIC:
            raise ValidationError(f"bad sieve cache magic {magic!r}")
        (n_max,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(n_max), dtype=np.int8)
        if data.shape[0] != n_max:
            raise ValidationError("truncated sieve cache")
    values = np.zeros(n_max + 1, dtype=np.int8)
    values[1:] = data
    return MobiusTable(int(n_max), values)


# ----------------------------------------------------------------------------
# Continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients a_1..a_K and convergents (l_k, q_k), k = 0..K.

    `alpha` is the exact rational value the expansion was computed from
    (inputs are rationals or rational truncations of decimals/floats).
    `terminated` is True when the expansion reached alpha exactly.
    """

    alpha: Fraction
    partial_quotients: tuple
    convergents: tuple
    terminated: bool

    @property
    def K(self) -> int:
        return len(self.partial_quotients)

    def q(self, k: int) -> int:
        return self.convergents[k][1]

    def l(self, k: int) -> int:
        return self.convergents[k][0]

    def denominators(self):
        return tuple(q for (_, q) in self.convergents)


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, float):
        return Fraction(alpha)
    if isinstance(alpha, int):
        return Fraction(alpha)
    raise ValidationError(f"cannot interpret alpha of type {type(alpha)!r}")


def cf_expand(alpha, k_max: int = 64, q_cap: int = 10**18, uncertainty=Fraction(0)) -> ContinuedFraction:
    """Expand alpha in (0, 1) by the Gauss map with exact rational arithmetic.

    When `uncertainty` is positive, each partial quotient is certified by
    running the map on the interval [alpha - u, alpha + u]; disagreement of
    the two endpoint floors raises PrecisionExhaustedError.
    """
    alpha = _as_fraction(alpha)
    u = Fraction(uncertainty)
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie strictly between 0 and 1")
    lo, hi = alpha - u, alpha + u
    quotients = []
    convergents = [(0, 1)]
    l_prev, q_prev = 1, 0  # virtual index -1
    l_cur, q_cur = 0, 1
    terminated = False
    while len(quotients) < k_max:
        if lo <= 0:
            if hi <= 0:
                terminated = True
                break
            raise PrecisionExhaustedError(
                "cannot certify termination at partial quotient "
                f"a_{len(quotients) + 1}"
            )
        a_hi = math.floor(1 / lo)
        a_lo = math.floor(1 / hi)
        if a_lo != a_hi:
            raise PrecisionExhaustedError(
                f"partial quotient a_{len(quotients) + 1} uncertain ({a_lo} vs {a_hi})"
            )
        a = a_lo
        l_next = a * l_cur + l_prev
        q_next = a * q_cur + q_prev
        if q_next > q_cap:
            break
        quotients.append(a)
        convergents.append((l_next, q_next))
        l_prev, q_prev, l_cur, q_cur = l_cur, q_cur, l_next, q_next
        lo, hi = 1 / hi - a, 1 / lo - a
    if not terminated and lo <= 0 and hi <= 0:
        terminated = True  # the expansion completed exactly at the k_max cap
    return ContinuedFraction(alpha, tuple(quotients), tuple(convergents), terminated)


def _cf_from_quotients(quotients) -> ContinuedFraction:
    convergents = [(0, 1)]
    l_prev, q_prev = 1, 0
    l_cur, q_cur = 0, 1
    for a in quotients:
        l_next = a * l_cur + l_prev
        q_next = a * q_cur + q_prev
        convergents.append((l_next, q_next))
        l_prev, q_prev, l_cur, q_cur = l_cur, q_cur, l_next, q_next
    alpha = Fraction(l_cur, q_cur)
    return ContinuedFraction(alpha, tuple(quotients), tuple(convergents), True)


@dataclass(frozen=True)
class DenominatorClassification:
    """Split of computed convergent denominators by q_{k+1} <= q_k^B.

    Each index k with 1 <= k <= K-1 is classified; `kinds[k-1]` is "flat" or
    "sharp".  The value 1 is always flat.  Ties q_{k+1} == q_k^B go flat.
    """

    B: Fraction
    q_flat: frozenset
    q_sharp: frozenset
    kinds: tuple
    classified_upto: int


def _power_leq(qn: int, qk: int, B: Fraction) -> bool:
    # exact test q_{k+1} <= q_k ** B without floating point
    return qn ** B.denominator <= qk ** B.numerator


def classify(cf: ContinuedFraction, B) -> DenominatorClassification:
    B = Fraction(B)
    if not B > 2:
        raise ValidationError("B must exceed 2")
    kinds = []
    flat = {1}
    sharp = set()
    for k in range(1, cf.K):
        qk, qn = cf.q(k), cf.q(k + 1)
        if qk == 1:
            kinds.append("flat")
        elif _power_leq(qn, qk, B):
            kinds.append("flat")
            flat.add(qk)
        else:
            kinds.append("sharp")
            sharp.add(qk)
    return DenominatorClassification(
        B, frozenset(flat), frozenset(sharp), tuple(kinds), cf.K - 1
    )


def m1_member(m: int, cls: DenominatorClassification, cf: ContinuedFraction) -> bool:
    """Is m resonant: zero, or a multiple of a sharp q_k inside [q_k, q_{k+1})?"""
    if m == 0:
        return True
    am = abs(m)
    if cf.K < 1 or am >= cf.q(cf.K):
        raise UndecidableBandError(
            f"|m|={am} is not below the largest computed convergent denominator"
        )
    if am < cf.q(1):
        return False
    # locate the band: largest k >= 1 with q_k <= |m|
    k = max(j for j in range(1, cf.K) if cf.q(j) <= am)
    if k > cls.classified_upto:
        raise UndecidableBandError(f"band of |m|={am} is not classified")
    return cls.kinds[k - 1] == "sharp" and am % cf.q(k) == 0


def _int_nth_root_ceil(x: int, r: int) -> int:
    if x <= 0:
        return 0
    lo, hi = 0, 1
    while hi**r < x:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**r >= x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def liouville_alpha(B, levels: int, a1: int = 2, tail_terms: int = 8,
                    q_limit: int = 2**256) -> ContinuedFraction:
    """Test fixture: choose partial quotients a_{k+1} >= q_k^(B-1) greedily so
    that q_{k+1} > q_k^B at the first `levels` indices, then pad with a short
    golden tail (ending in 2 so the quotient list is canonical)."""
    B = Fraction(B)
    if not B > 2:
        raise ValidationError("B must exceed 2")
    if levels > 5:
        raise ValidationError("levels must be <= 5")
    if levels < 0:
        raise ValidationError("levels must be >= 0")
    quotients = [a1]
    q_prev, q_cur = 1, a1
    for _ in range(levels):
        # smallest a with a >= q_cur^(B-1) and (a*q_cur + q_prev)^r > q_cur^p
        p, r = B.numerator, B.denominator
        a = _int_nth_root_ceil(q_cur ** (p - r), r)
        while (a * q_cur + q_prev) ** r <= q_cur**p:
            a += 1
        q_next = a * q_cur + q_prev
        if q_next > q_limit:
            raise OverflowError(f"q_k exceeded the configured limit {q_limit}")
        quotients.append(a)
        q_prev, q_cur = q_cur, q_next
    if tail_terms > 0:
        quotients.extend([1] * (tail_terms - 1))
        quotients.append(2)
    return _cf_from_quotients(quotients)


# ----------------------------------------------------------------------------
# Rotation numbers


class Alpha:
    """A rotation number: float value plus exact Fraction bookkeeping.

    n*alpha mod 1 and distances to the nearest integer are computed through
    the Fraction, so orbit rotations never accumulate drift.  Input forms:
    `rat:p/q`, `dec:<digits>`, `cf:a1,a2,...`, or a bare float/decimal.
    """

    __slots__ = ("value", "exact", "uncertainty", "source", "_cf_cache")

    def __init__(self, exact, uncertainty=Fraction(0), source: str = "rat"):
        exact = _as_fraction(exact)
        if not 0 <= exact < 1:
            raise ValidationError("alpha must lie in [0, 1)")
        self.exact = exact
        self.value = float(exact)
        self.uncertainty = Fraction(uncertainty)
        self.source = source
        self._cf_cache = None

    def __repr__(self):
        return f"Alpha({self.value!r}, source={self.source!r})"

    @classmethod
    def from_float(cls, x: float) -> "Alpha":
        u = Fraction(math.ulp(x) if x else 0) / 2
        return cls(Fraction(x), uncertainty=u, source="float")

    @classmethod
    def from_cf(cls, cf: ContinuedFraction) -> "Alpha":
        a = cls(cf.alpha, source="cf")
        a._cf_cache = cf
        return a

    @classmethod
    def parse(cls, spec: str) -> "Alpha":
        spec = spec.strip()
        if spec.startswith("rat:"):
            body = spec[4:]
            try:
                p_str, q_str = body.split("/")
                return cls(Fraction(int(p_str), int(q_str)), source="rat")
            except (ValueError, ZeroDivisionError) as exc:
                raise ValidationError(f"bad rational alpha spec {spec!r}") from exc
        if spec.startswith("cf:"):
            try:
                quotients = [int(tok) for tok in spec[3:].split(",") if tok]
            except ValueError as exc:
                raise ValidationError(f"bad cf alpha spec {spec!r}") from exc
            if not quotients or any(a < 1 for a in quotients):
                raise ValidationError("cf alpha spec needs positive partial quotients")
            return cls.from_cf(_cf_from_quotients(quotients))
        if spec.startswith("dec:"):
            body = spec[4:]
        else:
            body = spec
        try:
            if "." in body:
                int_part, frac_part = body.split(".")
                places = len(frac_part)
                val = Fraction(int((int_part or "0") + frac_part), 10**places)
                unc = Fraction(1, 2 * 10**places)
            else:
                val = Fraction(int(body))
                unc = Fraction(0)
        except ValueError as exc:
            raise ValidationError(f"bad alpha spec {spec!r}") from exc
        return cls(val, uncertainty=unc, source="dec")

    def continued_fraction(self, k_max: int = 64, q_cap: int = 10**15) -> ContinuedFraction:
        cached = self._cf_cache
        if cached is None:
            cached = cf_expand(self.exact, k_max=k_max, q_cap=q_cap,
                               uncertainty=self.uncertainty)
            self._cf_cache = cached
        return cached

    def frac_mult(self, n: int) -> float:
        """Fractional part of n*alpha, computed exactly then rounded once."""
        p, q = self.exact.numerator, self.exact.denominator
        return float(Fraction((n * p) % q, q))

    def norm_dist(self, m: int) -> float:
        """Distance from m*alpha to the nearest integer."""
        p, q = self.exact.numerator, self.exact.denominator
        r = (m * p) % q
        return float(Fraction(min(r, q - r), q))

    def e_at(self, m: int) -> complex:
        """e(m*alpha) = exp(2*pi*i*m*alpha)."""
        import cmath

        return cmath.exp(2j * math.pi * self.frac_mult(m))

    def rotate(self, t0: float, n: int) -> float:
        return (t0 + self.frac_mult(n)) % 1.0

    def rotate_block(self, t0: float, n0: int, count: int) -> np.ndarray:
        """t-coordinates after n0, n0+1, ..., n0+count-1 rotation steps."""
        if count <= 0:
            return np.zeros(0)
        p, q = self.exact.numerator, self.exact.denominator
        if q <= 1 << 40 and count <= 1 << 20:
            r0 = (n0 * p) % q
            rr = (r0 + np.arange(count, dtype=np.int64) * (p % q)) % q
            return (t0 + rr / float(q)) % 1.0
        base = self.rotate(t0, n0)
        return (base + np.arange(count) * self.value) % 1.0
