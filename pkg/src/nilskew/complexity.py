"""Orbit-averaged metrics, covering estimates, shadowing grids, distality.

`dbar_n` averages the product metric along two orbits.  `estimate_sn` runs a
greedy cover of an empirical sample by dbar-balls until more than a (1-eps)
fraction of the sample mass is covered; greedy picks give a certified upper
bound on the restricted covering number.  `build_Fk` is the explicit product
grid with circle spacing eps/(L*q_k) and fiber spacing 1/(q_k^2*L); its
cardinality is exactly (1/eps)*L^4*q_k^7, so it is materialized lazily and
only `points()` enforces the size budget.  `verify_shadowing` tracks each
trial point against its nearest grid point for n_k = q_k^(B-1) steps of the
resonant flow and reports both the worst pointwise distance and the worst
orbit average.

Pairwise distance work is vectorized; trials and sample pairs are
independent, so callers may parallelize them freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import ContinuedFraction, DenominatorClassification
from .errors import ResourceBudgetError, SizeOverflowError, ValidationError
from .flows import FlowSpec, iterate, orbit_coords
from .fourier import FourierSeries
from .heisenberg import (
    HeisElement,
    NilPoint,
    ProductPoint,
    circle_dist,
    d_prod,
    nil_distance_arrays,
    nil_distance_lower_bound,
    reduce,
)

__all__ = [
    "CoveringReport",
    "dbar_n",
    "empirical_sample",
    "estimate_sn",
    "FkGrid",
    "build_Fk",
    "ShadowingResult",
    "verify_shadowing",
    "lipschitz",
    "distality_probe",
]


@dataclass(frozen=True)
class CoveringReport:
    n: int
    epsilon: float
    centers_used: int
    covered_mass: float
    sample_size: int
    centers: tuple = ()


def dbar_n(flow: FlowSpec, P: ProductPoint, Q: ProductPoint, n: int,
           window: int = 3) -> float:
    """(1/n) sum_{j<n} d_prod(T^j P, T^j Q)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    orbit_p = iterate(flow, P, n - 1, collect=True)
    orbit_q = iterate(flow, Q, n - 1, collect=True)
    return math.fsum(d_prod(a, b, window) for a, b in zip(orbit_p, orbit_q)) / n


def empirical_sample(flow: FlowSpec, P0: ProductPoint, burn_in: int,
                     count: int, stride: int = 1):
    """Orbit points T^(burn_in + i*stride)(P0) for i < count."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    if stride < 1:
        raise ValidationError("stride must be >= 1")
    out = []
    current = iterate(flow, P0, burn_in)
    for i in range(count):
        out.append(current)
        if i + 1 < count:
            current = iterate(flow, current, stride)
    return out


def _orbit_stack(flow: FlowSpec, points, n: int):
    """Coordinates (t, x, y, z) of T^j applied to every point, j = 0..n-1.

    Returns arrays of shape (n, K).
    """
    K = len(points)
    ts = np.empty((n, K))
    xs = np.empty((n, K))
    ys = np.empty((n, K))
    zs = np.empty((n, K))
    for col, P in enumerate(points):
        ts[0, col] = P.t
        rep = P.p.rep
        xs[0, col], ys[0, col], zs[0, col] = rep.x, rep.y, rep.z
        if n > 1:
            for j, (_, t, x, y, z) in enumerate(_steps_of(flow, P, n - 1)):
                ts[j + 1, col] = t
                xs[j + 1, col] = x
                ys[j + 1, col] = y
                zs[j + 1, col] = z
    return ts, xs, ys, zs


def _steps_of(flow, P, n):
    for n0, t, x, y, z in orbit_coords(flow, P, n):
        for i in range(len(t)):
            yield n0 + i, t[i], x[i], y[i], z[i]


def pair_dbar_matrix(flow: FlowSpec, points, n: int, window: int = 3,
                     chunk: int = 1 << 14) -> np.ndarray:
    """Matrix of dbar_n over all sample pairs, vectorized over pairs."""
    K = len(points)
    ts, xs, ys, zs = _orbit_stack(flow, points, n)
    acc = np.zeros((K, K))
    iu, ju = np.triu_indices(K, k=1)
    for j in range(n):
        t_row = ts[j]
        dt = np.abs(t_row[iu] - t_row[ju]) % 1.0
        dt = np.minimum(dt, 1.0 - dt)
        fiber = np.empty(len(iu))
        same = (xs[j][iu] == xs[j][ju]) & (ys[j][iu] == ys[j][ju]) & (zs[j][iu] == zs[j][ju])
        for start in range(0, len(iu), chunk):
            sl = slice(start, start + chunk)
            fiber[sl] = nil_distance_arrays(
                (xs[j][iu[sl]], ys[j][iu[sl]], zs[j][iu[sl]]),
                (xs[j][ju[sl]], ys[j][ju[sl]], zs[j][ju[sl]]),
                window,
            )
        fiber[same] = 0.0
        step_d = np.maximum(dt, fiber)
        acc[iu, ju] += step_d
        acc[ju, iu] += step_d
    return acc / n


def estimate_sn(flow: FlowSpec, sample, n: int, epsilon: float,
                window: int = 3) -> CoveringReport:
    """Greedy cover of the sample by dbar_n-balls of radius epsilon.

    Repeatedly picks the sample point whose ball covers the most uncovered
    sample mass until the covered fraction exceeds 1 - epsilon.
    """
    if not sample:
        raise ValidationError("sample must be nonempty")
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    K = len(sample)
    mat = pair_dbar_matrix(flow, sample, n, window)
    ball = mat < epsilon
    covered = np.zeros(K, dtype=bool)
    centers = []
    target = (1.0 - epsilon) * K
    while covered.sum() <= target:
        gains = np.sum(ball & ~covered, axis=1)
        pick = int(np.argmax(gains))
        if gains[pick] == 0:
            break
        centers.append(pick)
        covered |= ball[pick]
    return CoveringReport(
        n=n,
        epsilon=epsilon,
        centers_used=len(centers),
        covered_mass=float(covered.sum()) / K,
        sample_size=K,
        centers=tuple(centers),
    )


# ----------------------------------------------------------------------------
# The explicit covering grid


@dataclass(frozen=True)
class FkGrid:
    """Product grid with t-spacing eps/(L*q_k) and fiber spacing 1/(q_k^2*L)."""

    q_k: int
    L: int
    eps_inverse: int
    t_count: int
    fiber_count: int
    budget: int | None = None

    @property
    def cardinality(self) -> int:
        return self.t_count * self.fiber_count**3

    def nearest(self, P: ProductPoint) -> ProductPoint:
        """The grid point nearest to P, coordinate by coordinate."""
        tq = round(P.t * self.t_count) % self.t_count
        rep = P.p.rep
        F = self.fiber_count
        xq = round(rep.x * F) % F
        yq = round(rep.y * F) % F
        zq = round(rep.z * F) % F
        return ProductPoint(
            tq / self.t_count,
            NilPoint(HeisElement(xq / F, yq / F, zq / F)),
        )

    def points(self):
        """Materialize the grid; guarded by the configured budget."""
        if self.budget is not None and self.cardinality > self.budget:
            raise SizeOverflowError(
                f"grid cardinality {self.cardinality} exceeds budget {self.budget}"
            )
        F = self.fiber_count
        for it in range(self.t_count):
            t = it / self.t_count
            for ix in range(F):
                for iy in range(F):
                    for iz in range(F):
                        yield ProductPoint(
                            t, NilPoint(HeisElement(ix / F, iy / F, iz / F))
                        )


def build_Fk(cf: ContinuedFraction, cls: DenominatorClassification, k_index: int,
             epsilon: float, L: int, budget: int | None = 10**7) -> FkGrid:
    """Grid whose cardinality is exactly (1/eps) * L^4 * q_k^7."""
    eps_frac = Fraction(epsilon).limit_denominator(10**9)
    if eps_frac.numerator != 1:
        raise ValidationError("epsilon must be the reciprocal of an integer")
    eps_inverse = eps_frac.denominator
    L = int(L)
    if L < 1:
        raise ValidationError("L must be a positive integer")
    q_k = cf.q(k_index)
    grid = FkGrid(
        q_k=q_k,
        L=L,
        eps_inverse=eps_inverse,
        t_count=L * q_k * eps_inverse,
        fiber_count=q_k * q_k * L,
        budget=budget,
    )
    assert grid.cardinality == eps_inverse * L**4 * q_k**7
    return grid


def lipschitz(f: FourierSeries, eps_inverse: float = 100.0) -> float:
    """2*pi*sum |m||f^(m)|, floored at the configured 1/eps."""
    return max(f.lipschitz_sum(), float(eps_inverse))


@dataclass(frozen=True)
class ShadowingResult:
    q_k: int
    n_k: int
    epsilon: float
    L: int
    max_pointwise: float
    max_dbar: float
    per_trial: tuple
    grid_cardinality: int

    @property
    def max_observed(self) -> float:
        return self.max_dbar


def verify_shadowing(flow: FlowSpec, cf: ContinuedFraction,
                     cls: DenominatorClassification, k_index: int, B,
                     epsilon: float, L: int, trial_points,
                     window: int = 3, step_budget: int = 10**8) -> ShadowingResult:
    """Track trial points against their nearest grid points for n_k steps.

    The flow must be the purely resonant (equal-slot) form with a mean-zero
    first component; success means every pointwise distance stays below
    20*epsilon for all steps up to n_k = q_k^(B-1).
    """
    if flow.kind not in ("T", "T1"):
        raise ValidationError("verify_shadowing expects the resonant equal-slot form")
    if abs(flow.fiber_series()[0].coeff(0)) > 1e-12:
        raise ValidationError("the first cocycle component must have zero mean")
    q_k = cf.q(k_index)
    if q_k not in cls.q_sharp:
        raise ValidationError(f"q_{k_index} = {q_k} is not a sharp denominator")
    B_frac = Fraction(B)
    exponent = B_frac - 1
    if exponent.denominator != 1:
        raise ValidationError("B - 1 must be an integer for the step count q_k^(B-1)")
    n_k = q_k ** int(exponent)
    trials = list(trial_points)
    if 2 * n_k * len(trials) > step_budget:
        raise ResourceBudgetError(
            f"{2 * n_k * len(trials)} orbit steps exceed the budget {step_budget}"
        )
    grid = build_Fk(cf, cls, k_index, epsilon, L)
    per_trial = []
    worst_point = 0.0
    worst_avg = 0.0
    for P in trials:
        Pg = grid.nearest(P)
        orbit_p = iterate(flow, P, n_k, collect=True)
        orbit_g = iterate(flow, Pg, n_k, collect=True)
        dists = [d_prod(a, b, window) for a, b in zip(orbit_p, orbit_g)]
        avg = math.fsum(dists[:n_k]) / n_k
        peak = max(dists)
        per_trial.append((peak, avg))
        worst_point = max(worst_point, peak)
        worst_avg = max(worst_avg, avg)
    return ShadowingResult(
        q_k=q_k,
        n_k=n_k,
        epsilon=epsilon,
        L=int(L),
        max_pointwise=worst_point,
        max_dbar=worst_avg,
        per_trial=tuple(per_trial),
        grid_cardinality=grid.cardinality,
    )


def distality_probe(flow: FlowSpec, P: ProductPoint, Q: ProductPoint, N: int,
                    window: int = 3, n_min: int = 0):
    """(min over n_min <= n <= N of d_prod along the orbits, argmin).

    The t-separation is rotation-invariant, so d_prod at step n equals
    max(dt, fiber_n); the scan refines the fiber distance only where a cheap
    lower bound undercuts the running minimum, and stops as soon as the
    fiber has dipped to dt, which pins both outputs.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    dt = circle_dist(P.t, Q.t)
    start_p, start_q = P, Q
    if n_min > 0:
        start_p = iterate(flow, P, n_min)
        start_q = iterate(flow, Q, n_min)
    rp, rq = start_p.p.rep, start_q.p.rep
    best_fiber = float(
        nil_distance_arrays((rp.x, rp.y, rp.z), (rq.x, rq.y, rq.z), window)
    )
    best_n = n_min
    count = N - n_min
    if count > 0 and best_fiber > dt:
        gen_p = orbit_coords(flow, start_p, count)
        gen_q = orbit_coords(flow, start_q, count)
        for (n0p, _, xp, yp, zp), (_, _, xq, yq, zq) in zip(gen_p, gen_q):
            cheap = nil_distance_lower_bound((xp, yp, zp), (xq, yq, zq))
            cand = np.flatnonzero(cheap < best_fiber)
            if len(cand):
                vals = nil_distance_arrays(
                    (xp[cand], yp[cand], zp[cand]),
                    (xq[cand], yq[cand], zq[cand]),
                    window,
                )
                for i, v in zip(cand, vals):
                    if v < best_fiber:
                        best_fiber = float(v)
                        best_n = n_min + n0p + int(i) + 1
                        if best_fiber <= dt:
                            break
            if best_fiber <= dt:
                break
    return max(dt, best_fiber), best_n
