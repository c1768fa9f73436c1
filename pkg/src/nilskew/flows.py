"""Skew products over a circle rotation with a nilmanifold fiber.

Flow kinds:

  T       (t, p) -> (t + alpha, p * (phi(t), phi(t), psi(t)))   with mean-zero phi
  S       (t, p) -> (t + alpha, p * (phi(t), phi_b(t), psi(t))) two independent slots
  T1      (t, p) -> (t + alpha, p * (phi1(t), phi1(t), c(t))),  c = phi1^2/2 - eta1/2 + psi1
  torus2  (x, y) -> (x + alpha, y + h(x))
  torus3  (t, x, y) -> (t + alpha, x + phi(t), y + phi(t))

The t-coordinate after n steps is always computed as t0 + n*alpha mod 1 by
multiplication (through the exact rational carried by Alpha), never by
repeated addition.  Orbits of the both-slots kinds admit a closed form in
the three ergodic sums S1 = sum phi, S2 = sum psi, S3 = sum phi^2:

    x_n = x0 + S1,  y_n = y0 + S1,
    z_n = z0 + S1^2/2 - S3/2 + S2 + y0*S1,

which `orbit_closed_form` evaluates either by direct compensated
accumulation or by per-mode geometric series (two independent paths).

`build_conjugation` solves the three cobounding problems for the
non-resonant parts of phi, phi^2 and psi, and packages the change of
variables that fixes t and right-multiplies the fiber by

    (g_phi(t), g_phi(t), g_phi^2(t)/2 - g_eta(t)/2 + g_psi(t)).

Conjugating T by it leaves the purely resonant flow T1; with no sharp
denominators at all, every nonzero mode cobounds and T1 degenerates to the
affine center translation by psi^(0) - eta^(0)/2.

FlowSpec is immutable and stepping is pure; orbit sampling parallelizes
over starting points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import Alpha, ContinuedFraction, classify
from .errors import ValidationError
from .fourier import (
    BirkhoffCache,
    FourierSeries,
    TailProfile,
    birkhoff,
    cobound,
    constant_series,
    decompose,
    square,
    zero_series,
)
from .heisenberg import (
    HeisElement,
    NilPoint,
    ProductPoint,
    d_prod,
    inv,
    mul,
    reduce,
)

__all__ = [
    "FlowSpec",
    "skew_T",
    "skew_S",
    "skew_T1",
    "torus2_flow",
    "torus3_flow",
    "cocycle",
    "step",
    "iterate",
    "orbit_coords",
    "orbit_closed_form",
    "torus_factor",
    "torus2_step",
    "torus3_step",
    "Conjugation",
    "build_conjugation",
    "conjugator",
    "conjugacy_residual",
]

PRODUCT_KINDS = ("T", "S", "T1")


@dataclass(frozen=True)
class FlowSpec:
    kind: str
    alpha: Alpha
    phi: FourierSeries | None = None
    phi_b: FourierSeries | None = None
    psi: FourierSeries | None = None
    center: FourierSeries | None = None

    def fiber_series(self):
        """(first-slot, second-slot, center-slot) series for product kinds."""
        if self.kind == "T":
            return self.phi, self.phi, self.psi
        if self.kind == "S":
            return self.phi, self.phi_b, self.psi
        if self.kind == "T1":
            return self.phi, self.phi, self.center
        raise ValidationError(f"flow kind {self.kind!r} has no fiber cocycle")


def skew_T(alpha: Alpha, phi: FourierSeries, psi: FourierSeries) -> FlowSpec:
    if abs(phi.coeff(0)) > 1e-12:
        raise ValidationError("kind T requires a mean-zero first cocycle component")
    if not (phi.real_valued and psi.real_valued):
        raise ValidationError("cocycle components must be real-valued")
    return FlowSpec("T", alpha, phi=phi, psi=psi)


def skew_S(alpha: Alpha, phi1: FourierSeries, phi2: FourierSeries,
           psi: FourierSeries) -> FlowSpec:
    if not (phi1.real_valued and phi2.real_valued and psi.real_valued):
        raise ValidationError("cocycle components must be real-valued")
    return FlowSpec("S", alpha, phi=phi1, phi_b=phi2, psi=psi)


def skew_T1(alpha: Alpha, phi1: FourierSeries, eta1: FourierSeries,
            psi1: FourierSeries) -> FlowSpec:
    center = 0.5 * square(phi1) - 0.5 * eta1 + psi1
    return FlowSpec("T1", alpha, phi=phi1, center=center)


def torus2_flow(alpha: Alpha, h: FourierSeries) -> FlowSpec:
    return FlowSpec("torus2", alpha, phi=h)


def torus3_flow(alpha: Alpha, phi: FourierSeries) -> FlowSpec:
    return FlowSpec("torus3", alpha, phi=phi)


def cocycle(flow: FlowSpec, t: float) -> HeisElement:
    a_s, b_s, c_s = flow.fiber_series()
    return HeisElement(float(a_s.eval(t)), float(b_s.eval(t)), float(c_s.eval(t)))


def step(flow: FlowSpec, P: ProductPoint) -> ProductPoint:
    """One application of the skew product."""
    if flow.kind not in PRODUCT_KINDS:
        raise ValidationError(f"step() expects a product-space flow, got {flow.kind!r}")
    t_next = flow.alpha.rotate(P.t, 1)
    moved = mul(P.p.rep, cocycle(flow, P.t))
    return ProductPoint(t_next, reduce(moved)[0])


def iterate(flow: FlowSpec, P0: ProductPoint, n: int, collect: bool = False):
    """n-fold stepping with drift-free t bookkeeping.

    Returns the final point, or the full list [P0, T(P0), ..., T^n(P0)] when
    collect is True.
    """
    if flow.kind not in PRODUCT_KINDS:
        raise ValidationError(f"iterate() expects a product-space flow, got {flow.kind!r}")
    pts = [P0] if collect else None
    rep = P0.p.rep
    for l in range(n):
        t_l = flow.alpha.rotate(P0.t, l)
        rep = reduce(mul(rep, cocycle(flow, t_l)))[0].rep
        if collect:
            pts.append(ProductPoint(flow.alpha.rotate(P0.t, l + 1), NilPoint(rep)))
    if collect:
        return pts
    return ProductPoint(flow.alpha.rotate(P0.t, n), NilPoint(rep))


def orbit_coords(flow: FlowSpec, P0: ProductPoint, N: int, block: int = 1 << 16):
    """Stream reduced orbit coordinates for n = 1..N in blocks.

    Yields (n0, t, x, y, z) arrays covering steps n0+1 .. n0+len; a single
    pass of O(N) cocycle evaluations with compensated cross-block carries.
    """
    if flow.kind not in PRODUCT_KINDS:
        raise ValidationError("orbit_coords expects a product-space flow")
    alpha = flow.alpha
    a_s, b_s, c_s = flow.fiber_series()
    t0 = P0.t
    rep0 = P0.p.rep
    x0, y0, z0 = rep0.x, rep0.y, rep0.z
    two_slot = flow.kind in ("T", "T1")
    # running exact-as-possible partial sums, carried across blocks
    s1 = s2 = s3 = 0.0     # two-slot kinds: sum a, sum c, sum a^2
    xr = yr = zr = 0.0     # general kind: raw coordinate offsets
    done = 0
    while done < N:
        count = min(block, N - done)
        ts = alpha.rotate_block(t0, done, count)
        a_vals = np.asarray(a_s.eval_array(ts), dtype=float)
        c_vals = np.asarray(c_s.eval_array(ts), dtype=float)
        if two_slot:
            s1_arr = s1 + np.cumsum(a_vals)
            s2_arr = s2 + np.cumsum(c_vals)
            s3_arr = s3 + np.cumsum(a_vals * a_vals)
            x_raw = x0 + s1_arr
            y_raw = y0 + s1_arr
            z_raw = z0 + 0.5 * s1_arr**2 - 0.5 * s3_arr + s2_arr + y0 * s1_arr
            s1 = math.fsum([s1] + list(a_vals))
            s2 = math.fsum([s2] + list(c_vals))
            s3 = math.fsum([s3] + list(a_vals * a_vals))
        else:
            b_vals = np.asarray(b_s.eval_array(ts), dtype=float)
            y_before = y0 + yr + np.concatenate(([0.0], np.cumsum(b_vals)[:-1]))
            z_inc = c_vals + y_before * a_vals
            x_raw = x0 + xr + np.cumsum(a_vals)
            y_raw = y0 + yr + np.cumsum(b_vals)
            z_raw = z0 + zr + np.cumsum(z_inc)
            xr = math.fsum([xr] + list(a_vals))
            yr = math.fsum([yr] + list(b_vals))
            zr = math.fsum([zr] + list(z_inc))
        # reduce to fundamental-domain representatives
        x_red = x_raw % 1.0
        y_red = y_raw % 1.0
        z_red = (z_raw - np.floor(y_raw) * x_raw) % 1.0
        t_out = alpha.rotate_block(t0, done + 1, count)
        yield done, t_out, x_red, y_red, z_red
        done += count


def orbit_closed_form(flow: FlowSpec, P0: ProductPoint, n: int,
                      method: str = "direct") -> ProductPoint:
    """T^n(P0) from the ergodic-sum closed form, no group multiplications.

    method='direct' accumulates the three sums with compensated summation;
    method='geometric' uses per-mode closed forms, an independent second
    evaluation path.
    """
    if flow.kind not in ("T", "T1"):
        raise ValidationError("orbit_closed_form applies to the equal-slot kinds")
    alpha = flow.alpha
    a_s, _, c_s = flow.fiber_series()
    t0 = P0.t
    if n == 0:
        return P0
    if method == "direct":
        s1 = birkhoff(a_s, alpha, t0, n)
        s2 = birkhoff(c_s, alpha, t0, n)
        s3 = birkhoff(square(a_s), alpha, t0, n)
    elif method == "geometric":
        s1 = BirkhoffCache(a_s, alpha).query(n, t0)
        s2 = BirkhoffCache(c_s, alpha).query(n, t0)
        s3 = BirkhoffCache(square(a_s), alpha).query(n, t0)
    else:
        raise ValidationError(f"unknown closed-form method {method!r}")
    rep = P0.p.rep
    x_n = rep.x + s1
    y_n = rep.y + s1
    z_n = rep.z + 0.5 * s1 * s1 - 0.5 * s3 + s2 + rep.y * s1
    return ProductPoint(alpha.rotate(t0, n), reduce(HeisElement(x_n, y_n, z_n))[0])


def torus_factor(P: ProductPoint):
    """Projection (t, coset of (x, y, z)) -> (t, x, y)."""
    rep = P.p.rep
    return (P.t, rep.x, rep.y)


def torus3_step(flow: FlowSpec, txy):
    if flow.kind != "torus3":
        raise ValidationError("torus3_step expects a torus3 flow")
    t, x, y = txy
    inc = float(flow.phi.eval(t))
    return (flow.alpha.rotate(t, 1), (x + inc) % 1.0, (y + inc) % 1.0)


def torus2_step(flow: FlowSpec, xy):
    if flow.kind != "torus2":
        raise ValidationError("torus2_step expects a torus2 flow")
    x, y = xy
    return (flow.alpha.rotate(x, 1), (y + float(flow.phi.eval(x))) % 1.0)


# ----------------------------------------------------------------------------
# Conjugation


@dataclass(frozen=True)
class Conjugation:
    """Fiber change of variables built from the three cobounding solutions."""

    alpha: Alpha
    g_phi: FourierSeries
    g_eta: FourierSeries
    g_psi: FourierSeries
    center: FourierSeries
    t1: FlowSpec
    tail_bounds: dict
    mode: str

    def total_tail_bound(self) -> float:
        return self.tail_bounds["phi"] + self.tail_bounds["eta"] + self.tail_bounds["psi"]


def build_conjugation(alpha: Alpha, phi: FourierSeries, psi: FourierSeries, B,
                      cf: ContinuedFraction | None = None, mode: str = "resonant",
                      divisor_floor: float = 1e-12) -> Conjugation:
    """Solve the cobounding problems for phi, eta = phi^2 and psi.

    mode='resonant' cobounds exactly the non-resonant parts under the
    B-classification of alpha's convergents; mode='tilde' cobounds every
    nonzero mode (the right object when only finitely many denominators are
    sharp), leaving the affine flow.
    """
    if abs(phi.coeff(0)) > 1e-12:
        raise ValidationError("the first cocycle component must have zero mean")
    if cf is None:
        cf = alpha.continued_fraction()
    eta = square(phi)
    if mode == "resonant":
        cls = classify(cf, B)
        phi1, phi2 = decompose(phi, cls, cf)
        eta1, eta2 = decompose(eta, cls, cf)
        psi1, psi2 = decompose(psi, cls, cf)
    elif mode == "tilde":
        def split_all(f):
            non = {m: c for m, c in f.coeffs.items() if m != 0}
            return (constant_series(f.coeff(0).real if f.real_valued else f.coeff(0)),
                    FourierSeries(non, real_valued=f.real_valued))

        phi1, phi2 = split_all(phi)
        eta1, eta2 = split_all(eta)
        psi1, psi2 = split_all(psi)
    else:
        raise ValidationError(f"unknown conjugation mode {mode!r}")
    g_phi, tail_phi = cobound(phi2, alpha, TailProfile.fit(phi, B), divisor_floor)
    g_eta, tail_eta = cobound(eta2, alpha, TailProfile.fit(eta, B), divisor_floor)
    g_psi, tail_psi = cobound(psi2, alpha, TailProfile.fit(psi, B), divisor_floor)
    center = 0.5 * square(g_phi) - 0.5 * g_eta + g_psi
    t1 = skew_T1(alpha, phi1, eta1, psi1)
    return Conjugation(
        alpha, g_phi, g_eta, g_psi, center, t1,
        {"phi": tail_phi, "eta": tail_eta, "psi": tail_psi},
        mode,
    )


def conjugator(conj: Conjugation, P: ProductPoint, direction: str = "forward") -> ProductPoint:
    """Apply the change of variables (or its inverse); the t-coordinate is fixed."""
    a = float(conj.g_phi.eval(P.t))
    c = float(conj.center.eval(P.t))
    el = HeisElement(a, a, c)
    if direction == "inverse":
        el = inv(el)
    elif direction != "forward":
        raise ValidationError("direction must be 'forward' or 'inverse'")
    return ProductPoint(P.t, reduce(mul(P.p.rep, el))[0])


def conjugacy_residual(flow: FlowSpec, conj: Conjugation, sample, window: int = 3) -> float:
    """sup over the sample of d_prod(S^-1(T(S(P))), T1(P))."""
    worst = 0.0
    for P in sample:
        lhs = conjugator(conj, step(flow, conjugator(conj, P, "forward")), "inverse")
        rhs = step(conj.t1, P)
        worst = max(worst, d_prod(lhs, rhs, window))
    return worst
