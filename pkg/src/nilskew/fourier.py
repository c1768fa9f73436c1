"""Finitely supported Fourier models, the resonant split, and Birkhoff sums.

A FourierSeries is a finite frequency -> coefficient map standing in for a
smooth 1-periodic function.  Squaring is done by coefficient convolution so
that later algebraic cancellations hold exactly on the truncated model.

`decompose` splits a series into its resonant part (frequencies in the
divisible bands over sharp denominators, plus 0) and the rest.  `cobound`
solves g(t + alpha) - g(t) = f(t) mode-by-mode with the small divisors
e(m*alpha) - 1, and certifies the sup-norm of the tail that a decay profile
would contribute beyond the truncation; the certificate combines three
bounds on the distance from m*alpha to the nearest integer: 1/(2|m|) off the
divisible bands, d/(2 q_{k+1}) on the divisible band of a computed flat q_k,
and |m|^(-B)/2 uniformly for frequencies whose nearest-fraction denominator
is at least 2.

Everything here is pure and immutable; grid evaluations can run in parallel
with no coordination.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

import numpy as np

from .arith import Alpha, ContinuedFraction, DenominatorClassification, m1_member
from .errors import SmallDivisorError, ValidationError

__all__ = [
    "FourierSeries",
    "cos_series",
    "sin_series",
    "constant_series",
    "zero_series",
    "series_from_spec",
    "square",
    "decompose",
    "TailProfile",
    "cobound",
    "birkhoff",
    "BirkhoffCache",
    "phi_bound_check",
    "e",
    "e_array",
]

TWO_PI = 2.0 * math.pi


def e(x) -> complex:
    """e(x) = exp(2*pi*i*x)."""
    return cmath.exp(TWO_PI * 1j * x)


def e_array(x) -> np.ndarray:
    return np.exp(TWO_PI * 1j * np.asarray(x, dtype=float))


class FourierSeries:
    """Finitely supported frequency -> complex coefficient map.

    Real-valued series must satisfy coeff(-m) == conj(coeff(m)); this is
    checked at construction.  Evaluation is 1-periodic by construction.
    """

    __slots__ = ("coeffs", "real_valued", "_ms", "_cs")

    def __init__(self, coeffs, real_valued: bool | None = None):
        cleaned = {}
        for m, c in dict(coeffs).items():
            c = complex(c)
            if c != 0:
                cleaned[int(m)] = c
        if real_valued is None:
            real_valued = all(
                abs(cleaned.get(-m, 0) - c.conjugate()) <= 1e-12 * max(1.0, abs(c))
                for m, c in cleaned.items()
            )
        if real_valued:
            for m, c in cleaned.items():
                if abs(cleaned.get(-m, 0) - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                    raise ValidationError(
                        f"coefficients at +-{m} are not conjugate-symmetric"
                    )
        self.coeffs = MappingProxyType(cleaned)
        self.real_valued = bool(real_valued)
        ms = sorted(cleaned)
        self._ms = np.array(ms, dtype=np.int64)
        self._cs = np.array([cleaned[m] for m in ms], dtype=complex)

    # -- basic queries -------------------------------------------------------

    def coeff(self, m: int) -> complex:
        return self.coeffs.get(m, 0j)

    @property
    def support(self) -> tuple:
        return tuple(int(m) for m in self._ms)

    @property
    def max_frequency(self) -> int:
        return int(np.max(np.abs(self._ms))) if len(self._ms) else 0

    @property
    def mean(self) -> complex:
        return self.coeff(0)

    def sup_norm_bound(self) -> float:
        return float(np.sum(np.abs(self._cs)))

    def lipschitz_sum(self) -> float:
        """2*pi*sum |m||c_m|, a valid Lipschitz constant."""
        return TWO_PI * float(np.sum(np.abs(self._ms) * np.abs(self._cs)))

    def __repr__(self):
        kind = "real" if self.real_valued else "complex"
        return f"FourierSeries({dict(self.coeffs)!r}, {kind})"

    def __eq__(self, other):
        return isinstance(other, FourierSeries) and dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    # -- evaluation ----------------------------------------------------------

    def eval(self, t: float):
        acc = 0j
        for m, c in zip(self._ms, self._cs):
            acc += c * e(int(m) * (t % 1.0))
        return acc.real if self.real_valued else acc

    def eval_array(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if len(self._ms) == 0:
            out = np.zeros(t.shape, dtype=complex)
        else:
            out = np.exp(TWO_PI * 1j * np.multiply.outer(t % 1.0, self._ms)) @ self._cs
        return out.real if self.real_valued else out

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        acc = dict(self.coeffs)
        for m, c in other.coeffs.items():
            acc[m] = acc.get(m, 0j) + c
        return FourierSeries(acc, real_valued=self.real_valued and other.real_valued)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "FourierSeries":
        real = self.real_valued and complex(scalar).imag == 0
        return FourierSeries({m: scalar * c for m, c in self.coeffs.items()},
                             real_valued=real)

    def convolve(self, other: "FourierSeries") -> "FourierSeries":
        acc = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = m1 + m2
                acc[m] = acc.get(m, 0j) + c1 * c2
        return FourierSeries(acc, real_valued=self.real_valued and other.real_valued)

    def conjugate(self) -> "FourierSeries":
        return FourierSeries({-m: c.conjugate() for m, c in self.coeffs.items()},
                             real_valued=self.real_valued)


def cos_series() -> FourierSeries:
    return FourierSeries({1: 0.5, -1: 0.5}, real_valued=True)


def sin_series() -> FourierSeries:
    return FourierSeries({1: -0.5j, -1: 0.5j}, real_valued=True)


def constant_series(c) -> FourierSeries:
    return FourierSeries({0: c}, real_valued=(complex(c).imag == 0))


def zero_series() -> FourierSeries:
    return FourierSeries({}, real_valued=True)


_PRESETS = {
    "cos": cos_series,
    "sin": sin_series,
    "zero": zero_series,
    "one": lambda: constant_series(1.0),
}


def series_from_spec(spec) -> FourierSeries:
    """Build a series from a preset name or {"real":..., "coeffs":[[m,re,im],...]}."""
    if isinstance(spec, FourierSeries):
        return spec
    if isinstance(spec, str):
        name = spec.strip()
        if name in _PRESETS:
            return _PRESETS[name]()
        import json

        try:
            spec = json.loads(name)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"unknown function spec {name!r}") from exc
    if not isinstance(spec, dict) or "coeffs" not in spec:
        raise ValidationError("function spec must have a 'coeffs' list")
    coeffs = {}
    for entry in spec["coeffs"]:
        m, re_part, im_part = entry
        coeffs[int(m)] = coeffs.get(int(m), 0j) + complex(float(re_part), float(im_part))
    return FourierSeries(coeffs, real_valued=spec.get("real"))


def square(f: FourierSeries) -> FourierSeries:
    """Coefficient-convolution square of a real-valued series."""
    if not f.real_valued:
        raise ValidationError("square() expects a real-valued series")
    return f.convolve(f)


def decompose(f: FourierSeries, cls: DenominatorClassification,
              cf: ContinuedFraction) -> tuple[FourierSeries, FourierSeries]:
    """Split f into (resonant, non-resonant) parts; exact coefficient-wise."""
    res, non = {}, {}
    for m, c in f.coeffs.items():
        (res if m1_member(m, cls, cf) else non)[m] = c
    return (FourierSeries(res, real_valued=f.real_valued),
            FourierSeries(non, real_valued=f.real_valued))


@dataclass(frozen=True)
class TailProfile:
    """Assumed decay |f^(m)| <= scale * |m|^(-2B) for |m| > cutoff."""

    scale: float
    B: float
    cutoff: int

    @classmethod
    def fit(cls, f: FourierSeries, B) -> "TailProfile":
        B = float(B)
        scale = 0.0
        for m, c in f.coeffs.items():
            if m != 0:
                scale = max(scale, abs(c) * abs(m) ** (2 * B))
        return cls(scale, B, f.max_frequency)


def _zeta_tail(s: float, m0: int) -> float:
    """Upper bound on sum_{d > m0} d^(-s)."""
    if s <= 1:
        return math.inf
    if m0 < 1:
        return 1.0 + 1.0 / (s - 1.0)
    return m0 ** (1.0 - s) / (s - 1.0)


def _certified_tail_bound(profile: TailProfile, alpha: Alpha) -> float:
    """Sup-norm bound on the cobounded tail beyond the truncation cutoff.

    Uses |e(x) - 1| >= 4 * dist(x, Z) and the three-way case analysis on
    dist(m*alpha, Z) described in the module docstring.
    """
    C, B, M = profile.scale, profile.B, max(profile.cutoff, 1)
    if C == 0.0:
        return 0.0
    cf = alpha.continued_fraction()
    bound = C * _zeta_tail(2 * B - 1, M)          # off-band frequencies
    bound += C * _zeta_tail(B, M)                 # nearest-fraction denominator >= 2
    B_frac = Fraction(B)
    start = 0 if (cf.K >= 1 and cf.q(1) > 1) else 1
    for k in range(start, cf.K):
        qk, qn = cf.q(k), cf.q(k + 1)
        flat = qk == 1 or qn ** B_frac.denominator <= qk ** B_frac.numerator
        if not flat:
            continue
        d0 = M // qk
        bound += C * qn * float(qk) ** (-2 * B) * _zeta_tail(2 * B + 1, d0)
    return bound


def cobound(f2: FourierSeries, alpha: Alpha, tail_profile: TailProfile,
            divisor_floor: float = 1e-12) -> tuple[FourierSeries, float]:
    """Solve g(t+alpha) - g(t) = f2(t) mode-wise; returns (g, tail bound).

    f2 must have no zero frequency.  A support frequency whose divisor
    distance falls below `divisor_floor` raises SmallDivisorError instead of
    producing a huge coefficient.
    """
    if 0 in f2.coeffs:
        raise ValidationError("cobound requires a zero mean (no m = 0 coefficient)")
    g = {}
    for m, c in f2.coeffs.items():
        nd = alpha.norm_dist(m)
        if nd < divisor_floor:
            raise SmallDivisorError(
                f"frequency m={m} has divisor distance {nd:.3e} below the floor; "
                "it should have been classified resonant or needs more precision"
            )
        g[m] = c / (alpha.e_at(m) - 1.0)
    return (FourierSeries(g, real_valued=f2.real_valued),
            _certified_tail_bound(tail_profile, alpha))


def birkhoff(f: FourierSeries, alpha: Alpha, t: float, n: int):
    """n-term ergodic sum sum_{l<n} f(l*alpha + t), by direct accumulation."""
    if n < 0:
        raise ValidationError("n must be >= 0")
    if n == 0:
        return 0.0 if f.real_valued else 0j
    block = 1 << 16
    re_parts, im_parts = [], []
    done = 0
    while done < n:
        count = min(block, n - done)
        ts = alpha.rotate_block(t, done, count)
        vals = f.eval_array(ts)
        if f.real_valued:
            re_parts.append(math.fsum(vals))
        else:
            re_parts.append(math.fsum(vals.real))
            im_parts.append(math.fsum(vals.imag))
        done += count
    if f.real_valued:
        return math.fsum(re_parts)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


class BirkhoffCache:
    """Per-mode geometric closed forms for fast ergodic-sum queries.

    Modes whose divisor distance is 0 contribute linearly in n; modes with a
    tiny but nonzero divisor fall back to per-mode direct summation so the
    query stays within 1e-10 of the direct n-term sum.
    """

    def __init__(self, series: FourierSeries, alpha: Alpha, geometric_floor: float = 1e-5):
        self.series = series
        self.alpha = alpha
        self._linear = []     # (m, c): e(m*alpha) == 1 exactly
        self._geometric = []  # (m, c, e(m*alpha) - 1)
        self._slow = []       # (m, c): divisor too small for the closed form
        for m, c in series.coeffs.items():
            if m == 0:
                self._linear.append((m, c))
                continue
            nd = alpha.norm_dist(m)
            if nd == 0.0:
                self._linear.append((m, c))
            elif nd >= geometric_floor:
                self._geometric.append((m, c, alpha.e_at(m) - 1.0))
            else:
                self._slow.append((m, c))

    def query(self, n: int, t: float):
        if n == 0:
            return 0.0 if self.series.real_valued else 0j
        acc = 0j
        for m, c in self._linear:
            acc += n * c * e(m * t)
        for m, c, denom in self._geometric:
            num = cmath.exp(TWO_PI * 1j * self.alpha.frac_mult(m * n)) - 1.0
            acc += c * e(m * t) * num / denom
        for m, c in self._slow:
            s = 0j
            for l in range(n):
                s += e(m * self.alpha.rotate(t, l))
            acc += c * s
        return acc.real if self.series.real_valued else acc

    def query_array(self, n: int, t_grid) -> np.ndarray:
        t_grid = np.asarray(t_grid, dtype=float)
        acc = np.zeros(t_grid.shape, dtype=complex)
        for m, c in self._linear:
            acc += n * c * e_array(m * t_grid)
        for m, c, denom in self._geometric:
            num = cmath.exp(TWO_PI * 1j * self.alpha.frac_mult(m * n)) - 1.0
            acc += (c * num / denom) * e_array(m * t_grid)
        for m, c in self._slow:
            s = np.zeros(t_grid.shape, dtype=complex)
            for l in range(n):
                s += e_array(m * ((t_grid + self.alpha.frac_mult(l)) % 1.0))
            acc += c * s
        return acc.real if self.series.real_valued else acc


def phi_bound_check(f_resonant: FourierSeries, cf: ContinuedFraction,
                    cls: DenominatorClassification, k_index: int,
                    t_grid) -> float:
    """Sup over the grid of |S_{q_k}(t) - q_k * f^(0)| for the resonant part."""
    if not (1 <= k_index <= cls.classified_upto):
        raise ValidationError("k_index must point at a classified convergent")
    alpha = Alpha.from_cf(cf)
    qk = cf.q(k_index)
    cache = BirkhoffCache(f_resonant, alpha)
    vals = cache.query_array(qk, np.asarray(t_grid, dtype=float))
    dev = np.abs(vals - qk * f_resonant.coeff(0))
    return float(np.max(dev))
