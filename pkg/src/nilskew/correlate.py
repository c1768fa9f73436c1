"""Mobius correlation sums along orbits and over arithmetic progressions.

`mobius_correlation` streams one orbit pass and reports the running averages
(1/n) sum_{k<=n} mu(k) f(T^k P0) at the requested checkpoints, accumulating
block partial sums that are recombined with math.fsum so a checkpoint value
recomputed from scratch agrees bit-for-bit.

`mu_exponential_sum` evaluates sum_{n<=N, n=a mod q} mu(n) e(f(n)) for a
real-coefficient polynomial f.  Phases are produced block-by-block from an
exact rational re-expansion of the polynomial at each block anchor, so the
reduction mod 1 never sees a large argument.

`rational_alpha_reduction` handles rational alpha = a/q: every ergodic sum
is affine on each residue class mod q, so the orbit observable factors into
e(quadratic polynomial in n) times a bounded Gaussian-sum factor; the report
carries the per-residue polynomials and can reassemble the correlation sum
residue class by residue class for comparison against streaming.

The orbit stream is inherently sequential; independent experiments can share
the read-only sieve table freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import MobiusTable
from .errors import ValidationError
from .flows import FlowSpec, orbit_coords
from .fourier import square
from .observables import ClassAObservable
from .heisenberg import ProductPoint

__all__ = [
    "mobius_correlation",
    "mu_exponential_sum",
    "control_stats",
    "ControlStats",
    "polynomial_phase_block",
    "RationalReduction",
    "rational_alpha_reduction",
]

_BLOCK = 1 << 16


def _checkpoint_values(block_iter, N, checkpoints):
    """Shared streaming accumulator: complex block sums + in-block cumsums."""
    checkpoints = sorted(int(c) for c in checkpoints)
    if any(c < 1 or c > N for c in checkpoints):
        raise ValidationError("checkpoints must lie in 1..N")
    re_parts, im_parts = [], []
    results = []
    ci = 0
    for n0, vals in block_iter:
        count = len(vals)
        while ci < len(checkpoints) and n0 < checkpoints[ci] <= n0 + count:
            idx = checkpoints[ci] - n0 - 1
            run = np.cumsum(vals)
            total = complex(
                math.fsum(re_parts + [run[idx].real]),
                math.fsum(im_parts + [run[idx].imag]),
            )
            results.append((checkpoints[ci], total / checkpoints[ci]))
            ci += 1
        re_parts.append(math.fsum(vals.real))
        im_parts.append(math.fsum(vals.imag))
    return results


def mobius_correlation(flow: FlowSpec, obs, P0: ProductPoint, N: int,
                       checkpoints, mu: MobiusTable, control: bool = False):
    """Running averages (1/n) sum mu(k) obs(T^k P0) at each checkpoint.

    With control=True the Mobius weights are replaced by all ones.
    """
    mu.require(N)

    def blocks():
        for n0, t, x, y, z in orbit_coords(flow, P0, N, block=_BLOCK):
            vals = np.asarray(obs.eval_coords(t, x, y, z), dtype=complex)
            if not control:
                w = mu.values[n0 + 1 : n0 + 1 + len(t)].astype(float)
                vals = vals * w
            yield n0, vals

    return _checkpoint_values(blocks(), N, checkpoints)


def polynomial_phase_block(coeffs, n0: int, count: int) -> np.ndarray:
    """(f(n0), ..., f(n0+count-1)) mod 1 for f with the given coefficients
    (constant term first), via exact rational re-anchoring at n0."""
    fracs = [Fraction(c) if not isinstance(c, Fraction) else c for c in coeffs]
    d = len(fracs) - 1
    # re-expand around the anchor: f(n0 + i) = sum_j c'_j i^j with exact c'_j
    shifted = []
    for j in range(d + 1):
        cj = Fraction(0)
        for k in range(j, d + 1):
            cj += fracs[k] * math.comb(k, j) * (n0 ** (k - j))
        shifted.append(float(cj % 1))
    i = np.arange(count, dtype=float)
    phase = np.zeros(count)
    power = np.ones(count)
    for j in range(d + 1):
        if j > 0:
            power = power * i
        phase += shifted[j] * power
    return phase % 1.0


def mu_exponential_sum(coeffs, a: int, q: int, N: int, mu: MobiusTable,
                       checkpoints=None) -> complex:
    """sum_{n<=N, n = a mod q} mu(n) e(f(n)) with f given by `coeffs`
    (constant first).  With checkpoints, returns [(n, partial sum)]."""
    if not 0 <= a < q:
        raise ValidationError("need 0 <= a < q")
    if N < 0:
        raise ValidationError("N must be >= 0")
    if N == 0:
        return [] if checkpoints else 0j
    mu.require(N)
    want_checkpoints = checkpoints is not None
    marks = sorted(int(c) for c in checkpoints) if want_checkpoints else []
    ci = 0
    results = []
    re_parts, im_parts = [], []
    # block size keeps i^degree small so the float phase stays accurate
    d = max(len(list(coeffs)) - 1, 1)
    block = 1 << max(4, 12 - 4 * (d - 1))
    n0 = 1
    while n0 <= N:
        count = min(block, N - n0 + 1)
        ns = np.arange(n0, n0 + count)
        mask = (ns % q) == a
        vals = np.zeros(count, dtype=complex)
        if np.any(mask):
            phases = polynomial_phase_block(coeffs, n0, count)[mask]
            w = mu.values[n0 : n0 + count].astype(float)[mask]
            vals[mask] = w * np.exp(2j * np.pi * phases)
        while ci < len(marks) and n0 - 1 < marks[ci] <= n0 - 1 + count:
            idx = marks[ci] - n0
            run = np.cumsum(vals)
            total = complex(
                math.fsum(re_parts + [run[idx].real]),
                math.fsum(im_parts + [run[idx].imag]),
            )
            results.append((marks[ci], total))
            ci += 1
        re_parts.append(math.fsum(vals.real))
        im_parts.append(math.fsum(vals.imag))
        n0 += count
    if want_checkpoints:
        return results
    return complex(math.fsum(re_parts), math.fsum(im_parts))


@dataclass(frozen=True)
class ControlStats:
    mertens_ratio: float
    squarefree_density: float


def control_stats(N: int, mu: MobiusTable) -> ControlStats:
    """(1/N) sum mu(n) and (1/N) sum mu(n)^2, exact integer accumulation."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    mu.require(N)
    vals = mu.values[1 : N + 1].astype(np.int64)
    return ControlStats(int(np.sum(vals)) / N, int(np.sum(vals * vals)) / N)


# ----------------------------------------------------------------------------
# Rational rotation numbers


@dataclass
class RationalReduction:
    """Residue-class reduction data for a flow with alpha = a/q."""

    flow: FlowSpec
    obs: ClassAObservable
    P0: ProductPoint
    q: int
    a: int
    gamma_mean: dict          # h -> gamma(h) for h in {"phi", "psi", "eta"}
    gamma_partial: dict       # h -> array of gamma(h, b), b = 0..q
    poly: list                # b -> (c0, c1, c2) phase polynomial coefficients
    s_sum_max_err: float

    def s1_affine(self, n):
        """S1 via the per-residue affine formula."""
        n = np.asarray(n, dtype=np.int64)
        b = n % self.q
        return (n - b) * self.gamma_mean["phi"] + self.gamma_partial["phi"][b]

    def observable_terms(self, ns) -> np.ndarray:
        """Observable values along the orbit from the affine reduction."""
        ns = np.asarray(ns, dtype=np.int64)
        b = ns % self.q
        rep = self.P0.p.rep
        s1 = (ns - b) * self.gamma_mean["phi"] + self.gamma_partial["phi"][b]
        x_raw = rep.x + s1
        y_raw = rep.y + s1
        x_n = x_raw % 1.0
        y_shift = np.floor(y_raw)
        y_n = y_raw - y_shift
        theta = self.obs.theta
        # reducing y by an integer multiplies the Gaussian factor by
        # e(-m * shift * x); the raw center coordinate in the phase polynomial
        # carries the compensating term, so restore it here
        gauss = theta.gauss_factor_arrays(x_n, y_n) * np.exp(
            -2j * np.pi * theta.m * y_shift * x_n
        )
        phases = np.zeros(len(ns))
        qf = Fraction(self.q)
        for res in range(self.q):
            mask = b == res
            if not np.any(mask):
                continue
            c0, c1, c2 = (Fraction(c) if not isinstance(c, Fraction) else c
                          for c in self.poly[res])
            # substitute n = res + q*u; u runs contiguously from u0
            bf = Fraction(res)
            poly_u = [c0 + c1 * bf + c2 * bf * bf,
                      (c1 + 2 * c2 * bf) * qf,
                      c2 * qf * qf]
            us = (ns[mask] - res) // self.q
            u0 = int(us[0])
            ph = np.empty(len(us))
            start = 0
            while start < len(us):
                stop = min(start + 256, len(us))
                local = polynomial_phase_block(poly_u, u0 + start, stop - start)
                ph[start:stop] = local
                start = stop
            phases[mask] = ph
        vals = np.exp(2j * np.pi * phases) * gauss
        return np.conjugate(vals) if self.obs.conjugated else vals

    def reassembled_correlation(self, N: int, mu: MobiusTable, checkpoints=None):
        """(1/N) sum mu(n) e(P(n;b)) Gauss(n), reassembled residue-wise."""
        mu.require(N)
        marks = sorted(checkpoints) if checkpoints else [N]
        out = []
        for mark in marks:
            ns = np.arange(1, mark + 1)
            terms = self.observable_terms(ns)
            w = mu.values[1 : mark + 1].astype(float)
            total = complex(math.fsum((w * terms).real), math.fsum((w * terms).imag))
            out.append((mark, total / mark))
        return out if checkpoints else out[0][1]


def rational_alpha_reduction(flow: FlowSpec, obs: ClassAObservable,
                             P0: ProductPoint, n_check: int = 1000) -> RationalReduction:
    """Build the residue-class polynomial reduction for rational alpha.

    Verifies the affine structure of the ergodic sums against direct
    accumulation up to n_check and stores the worst error.
    """
    if flow.kind != "T":
        raise ValidationError("the residue reduction applies to the equal-slot kind T")
    if not isinstance(obs, ClassAObservable):
        raise ValidationError("the reduction needs a class-A observable")
    alpha = flow.alpha
    q = alpha.exact.denominator
    a = alpha.exact.numerator
    if q > 10**6:
        raise ValidationError("alpha denominator too large for residue reduction")
    t0 = P0.t
    rep = P0.p.rep
    x0, y0, z0 = rep.x, rep.y, rep.z
    phi, _, psi = flow.fiber_series()
    eta = square(phi)
    ts = np.array([alpha.rotate(t0, l) for l in range(q)])
    tables = {}
    means = {}
    for name, series in (("phi", phi), ("psi", psi), ("eta", eta)):
        vals = np.asarray(series.eval_array(ts), dtype=float)
        partial = np.concatenate(([0.0], np.cumsum(vals)))  # gamma(h, b), b = 0..q
        tables[name] = partial
        means[name] = partial[q] / q
    # S-sum affine identity against direct accumulation
    max_err = 0.0
    for name, series in (("phi", phi), ("psi", psi), ("eta", eta)):
        ls = np.array([alpha.rotate(t0, l) for l in range(n_check)])
        direct = np.cumsum(np.asarray(series.eval_array(ls), dtype=float))
        ns = np.arange(1, n_check + 1)
        bs = ns % q
        affine = (ns - bs) * means[name] + tables[name][bs]
        max_err = max(max_err, float(np.max(np.abs(direct - affine))))
    theta = obs.theta
    m, j = theta.m, theta.j
    poly = []
    for b in range(q):
        A1 = means["phi"]
        B1 = tables["phi"][b] - b * A1
        A2 = means["psi"]
        B2 = tables["psi"][b] - b * A2
        A3 = means["eta"]
        B3 = tables["eta"][b] - b * A3
        c2 = 0.5 * m * A1 * A1
        c1 = (obs.xi1 * alpha.value + (obs.xi2 + obs.xi3 + j) * A1
              + m * (A1 * B1 - 0.5 * A3 + A2 + y0 * A1))
        c0 = (obs.xi1 * t0 + (obs.xi2 + j) * (x0 + B1) + obs.xi3 * (y0 + B1)
              + m * (z0 + 0.5 * B1 * B1 - 0.5 * B3 + B2 + y0 * B1))
        poly.append((c0, c1, c2))
    return RationalReduction(flow, obs, P0, q, a, means, tables, poly, max_err)
