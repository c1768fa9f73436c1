"""Arithmetic on the 3-D Heisenberg group and its integer-lattice quotient.

Group elements are coordinate triples (x, y, z) with product

    (x1, y1, z1) * (x2, y2, z2) = (x1 + x2, y1 + y2, z1 + z2 + y1*x2),

identity (0, 0, 0) and inverse (-x, -y, x*y - z).  This is the composition
law of unipotent upper-triangular 3x3 matrices in the chart that puts the
second coordinate in the top-middle entry and the first in the middle-right
entry.  The integer triples form a cocompact lattice; the quotient is a
compact nilmanifold whose points we represent by the unique left-lattice
translate with all three coordinates in [0, 1).

The coordinate chart kappa(x, y, z) = (x, y, z - x*y) maps the lattice onto
Z^3 and drives every metric here: segment costs are sup-norms of kappa of a
difference, quotient distances minimize over a window of lattice moves, and
the product-space metric is the max of a circle distance and the quotient
distance.  All metric routines return certified upper bounds of the chain
infimum, never the infimum itself.

Coordinates are ordinarily floats; every operation also works verbatim on
fractions.Fraction, which the exactness tests rely on.  All types are
immutable and all functions pure, so values can be shared freely across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iterproduct

import numpy as np

__all__ = [
    "HeisElement",
    "LatticeElement",
    "NilPoint",
    "ProductPoint",
    "IDENTITY",
    "mul",
    "inv",
    "malcev_kappa",
    "kappa_norm",
    "kappa_inverse",
    "reduce",
    "product_point",
    "circle_dist",
    "d_G_upper",
    "d_nil",
    "d_prod",
    "nil_distance_arrays",
    "nil_distance_lower_bound",
]


@dataclass(frozen=True, slots=True)
class HeisElement:
    """A point of the continuous Heisenberg group."""

    x: float
    y: float
    z: float

    def coords(self):
        return (self.x, self.y, self.z)


@dataclass(frozen=True, slots=True)
class LatticeElement:
    """An integer-coordinate group element."""

    a: int
    b: int
    c: int

    def embed(self) -> HeisElement:
        return HeisElement(self.a, self.b, self.c)

    def mul(self, other: "LatticeElement") -> "LatticeElement":
        return LatticeElement(
            self.a + other.a,
            self.b + other.b,
            self.c + other.c + self.b * other.a,
        )

    def inv(self) -> "LatticeElement":
        return LatticeElement(-self.a, -self.b, self.a * self.b - self.c)


@dataclass(frozen=True, slots=True)
class NilPoint:
    """Canonical representative of a lattice coset, coordinates in [0, 1)."""

    rep: HeisElement


@dataclass(frozen=True, slots=True)
class ProductPoint:
    """A point (t, coset) of the circle times the nilmanifold."""

    t: float
    p: NilPoint


IDENTITY = HeisElement(0, 0, 0)
IDENTITY_LATTICE = LatticeElement(0, 0, 0)


def mul(g: HeisElement, h: HeisElement) -> HeisElement:
    return HeisElement(g.x + h.x, g.y + h.y, g.z + h.z + g.y * h.x)


def inv(g: HeisElement) -> HeisElement:
    return HeisElement(-g.x, -g.y, g.x * g.y - g.z)


def malcev_kappa(g: HeisElement):
    """Lattice-adapted coordinates (x, y, z - x*y)."""
    return (g.x, g.y, g.z - g.x * g.y)


def kappa_inverse(t) -> HeisElement:
    t1, t2, t3 = t
    return HeisElement(t1, t2, t3 + t1 * t2)


def kappa_norm(g: HeisElement) -> float:
    k1, k2, k3 = malcev_kappa(g)
    return max(abs(k1), abs(k2), abs(k3))


def _floor_rem(v):
    # Guard against the float edge where v - floor(v) rounds up to exactly 1.0.
    f = math.floor(v)
    r = v - f
    if r >= 1:
        f += 1
        r = v - f
        if r < 0:
            r = 0.0
    return f, r


def reduce(g: HeisElement) -> tuple[NilPoint, LatticeElement]:
    """Left-translate g into the unit cube; returns (point, lattice move).

    The lattice element gamma is the unique one with mul(gamma, g) in
    [0,1)^3; reduction order is a, then b, then c.  The representative is
    evaluated with the same floating-point expression as mul(gamma, g), so
    the postcondition holds bit-for-bit.
    """
    a, x = _floor_rem(g.x)
    b, y = _floor_rem(g.y)
    cross = (-b) * g.x
    c = math.floor(g.z + cross)
    z = (-c + g.z) + cross
    while z >= 1:
        c += 1
        z = (-c + g.z) + cross
    while z < 0:
        c -= 1
        z = (-c + g.z) + cross
    return NilPoint(HeisElement(x, y, z)), LatticeElement(-a, -b, -c)


def product_point(t: float, x: float = 0.0, y: float = 0.0, z: float = 0.0) -> ProductPoint:
    return ProductPoint(t % 1.0, reduce(HeisElement(x, y, z))[0])


def circle_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _segment(g: HeisElement, h: HeisElement) -> float:
    """One-segment chain cost: min of the two kappa sup-norms."""
    if g == h:
        return 0.0
    return min(kappa_norm(mul(inv(g), h)), kappa_norm(mul(inv(h), g)))


def _midpoint_candidates(g: HeisElement, h: HeisElement):
    mids = []
    for a, b, c in _iterproduct((-1, 0, 1), repeat=3):
        if a == b == c == 0:
            mids.append(g)
            mids.append(h)
            continue
        gamma = HeisElement(a, b, c)
        mids.append(mul(gamma, g))
        mids.append(mul(gamma, h))
    k1, k2, k3 = malcev_kappa(mul(inv(g), h))
    mids.append(mul(g, kappa_inverse((k1 / 2, k2 / 2, k3 / 2))))
    return mids


def d_G_upper(g: HeisElement, h: HeisElement, depth: int = 1) -> float:
    """Certified upper bound on the chain metric, via chains of <= depth
    segments threaded through lattice translates of the endpoints."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    best = _segment(g, h)
    if depth == 1 or best == 0:
        return best
    mids = _midpoint_candidates(g, h)
    # dist[i] = best cost of a chain g -> mids[i] with at most `level` segments
    dist = [_segment(g, m) for m in mids]
    for _ in range(depth - 2):
        relaxed = list(dist)
        for i, mi in enumerate(mids):
            di = dist[i]
            if di >= best:
                continue
            for jj, mj in enumerate(mids):
                cand = di + _segment(mi, mj)
                if cand < relaxed[jj]:
                    relaxed[jj] = cand
        dist = relaxed
    for i, mi in enumerate(mids):
        if dist[i] < best:
            cand = dist[i] + _segment(mi, h)
            if cand < best:
                best = cand
    return best


def d_nil(p: NilPoint, q: NilPoint, window: int = 3) -> float:
    """Upper bound on the quotient metric: minimize the one-segment cost over
    lattice moves with entries in [-window, window], in both orders so the
    result is symmetric in (p, q)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    best = math.inf
    rng = range(-window, window + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                gamma = HeisElement(a, b, c)
                cand = _segment(p.rep, mul(gamma, q.rep))
                if cand < best:
                    best = cand
                cand = _segment(q.rep, mul(gamma, p.rep))
                if cand < best:
                    best = cand
    return best


def d_prod(P: ProductPoint, Q: ProductPoint, window: int = 3) -> float:
    """Sup-product metric: max of circle distance and quotient distance."""
    return max(circle_dist(P.t, Q.t), d_nil(P.p, Q.p, window))


def nil_distance_arrays(p_coords, q_coords, window: int = 3) -> np.ndarray:
    """Vectorized d_nil over parallel arrays of reduced coordinates.

    p_coords and q_coords are (x, y, z) triples of equal-shape arrays holding
    unit-cube representatives.  Matches d_nil exactly: same lattice window,
    both kappa orders, both (p, q) orders.
    """
    px, py, pz = (np.asarray(v, dtype=float) for v in p_coords)
    qx, qy, qz = (np.asarray(v, dtype=float) for v in q_coords)
    best = np.full(np.broadcast(px, qx).shape, np.inf)
    rng = range(-window, window + 1)
    for a in rng:
        for b in rng:
            for c in rng:
                for (x1, y1, z1, x2, y2, z2) in (
                    (px, py, pz, qx, qy, qz),
                    (qx, qy, qz, px, py, pz),
                ):
                    # X = inv(p) * gamma * q, with gamma = (a, b, c)
                    u1 = a + x2 - x1
                    u2 = b + y2 - y1
                    raw3 = c + x1 * y1 - z1 - y1 * a + z2 + (b - y1) * x2
                    k3 = raw3 - u1 * u2
                    au1 = np.abs(u1)
                    au2 = np.abs(u2)
                    np.minimum(best, np.maximum(au1, np.maximum(au2, np.abs(k3))), out=best)
                    # |kappa(X^{-1})| differs only in the third slot
                    np.minimum(best, np.maximum(au1, np.maximum(au2, np.abs(raw3))), out=best)
    return best


def nil_distance_lower_bound(p_coords, q_coords) -> np.ndarray:
    """Cheap elementwise lower bound on d_nil: circle distances of the first
    two coordinates (valid because |kappa| dominates both)."""
    px, py, _ = p_coords
    qx, qy, _ = q_coords
    dx = np.abs(np.asarray(px) - np.asarray(qx)) % 1.0
    dy = np.abs(np.asarray(py) - np.asarray(qy)) % 1.0
    return np.maximum(np.minimum(dx, 1.0 - dx), np.minimum(dy, 1.0 - dy))
