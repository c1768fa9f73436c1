"""Lattice-invariant theta-type observables and the center-fiber projection.

The basic building block evaluates, at a group point (x, y, z),

    e(m*z + j*x) * sum_k exp(-pi*(y + k + j/m)^2) * e(m*k*x)

and its starred companion with the half-shifted Gaussian and the extra
e((y + k + j/m)/2) factor.  Both are invariant under left lattice
translations of the argument (for the full k-sum; the truncated sum reports
its Gaussian tail).  Class-A observables multiply a theta value by a torus
character e(xi1*t + xi2*x + xi3*y); class-B observables are products
f1(t) * f2(x, y) that never read the center coordinate.

`project_pm` integrates a function over the center fiber against e(-m*t)
with a trapezoidal rule (the integrand is 1-periodic, so this is the
rectangle rule on quadrature points), which isolates the weight-m part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import ValidationError
from .fourier import FourierSeries, TWO_PI, e
from .heisenberg import HeisElement, NilPoint, ProductPoint

__all__ = [
    "ThetaObservable",
    "ClassAObservable",
    "ClassBObservable",
    "ConstantObservable",
    "Fourier2D",
    "eval_theta",
    "eval_classA",
    "eval_classB",
    "project_pm",
    "ProjectedFunction",
    "fA_observable",
    "observable_from_spec",
]

DEFAULT_K_TRUNC = 12


@dataclass(frozen=True)
class ThetaObservable:
    """Weight-m theta function on the nilmanifold, truncated at |k| <= k_trunc."""

    m: int
    j: int
    starred: bool = False
    k_trunc: int = DEFAULT_K_TRUNC

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("m must be a positive integer")
        if not 0 <= self.j <= self.m - 1:
            raise ValidationError("j must lie in [0, m-1]")
        if self.k_trunc < 1:
            raise ValidationError("k_trunc must be >= 1")

    def truncation_tail(self) -> float:
        """Reported bound sum_{|k| > K} exp(-pi*(|k| - 2)^2) on the discarded
        Gaussian terms (valid for arguments with y in [0, 1))."""
        K = self.k_trunc
        return 2.0 * sum(math.exp(-math.pi * (k - 2) ** 2) for k in range(K + 1, K + 40))

    def gauss_factor_arrays(self, x, y) -> np.ndarray:
        """The k-sum alone, without the e(m*z + j*x) prefactor."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ks = np.arange(-self.k_trunc, self.k_trunc + 1, dtype=float)
        shift = self.j / self.m
        u = y[..., None] + ks + shift
        if self.starred:
            amp = np.exp(-math.pi * (u + 0.5) ** 2)
            phase = 0.5 * u + np.multiply.outer(self.m * x, ks)
        else:
            amp = np.exp(-math.pi * u**2)
            phase = np.multiply.outer(self.m * x, ks)
        return np.sum(amp * np.exp(TWO_PI * 1j * phase), axis=-1)

    def eval_arrays(self, x, y, z) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        pref = np.exp(TWO_PI * 1j * (self.m * z + self.j * x))
        if self.starred:
            pref = 1j * pref
        return pref * self.gauss_factor_arrays(x, y)

    def eval_raw(self, x: float, y: float, z: float) -> complex:
        return complex(self.eval_arrays(np.float64(x), np.float64(y), np.float64(z)))

    def eval(self, p: NilPoint) -> complex:
        rep = p.rep
        return self.eval_raw(rep.x, rep.y, rep.z)


def eval_theta(obs: ThetaObservable, p: NilPoint) -> complex:
    return obs.eval(p)


@dataclass(frozen=True)
class ClassAObservable:
    """e(xi1*t + xi2*x + xi3*y) times a (possibly conjugated) theta value."""

    xi1: int
    xi2: int
    xi3: int
    theta: ThetaObservable
    conjugated: bool = False

    def eval_coords(self, t, x, y, z) -> np.ndarray:
        char = np.exp(
            TWO_PI * 1j * (self.xi1 * np.asarray(t, dtype=float)
                           + self.xi2 * np.asarray(x, dtype=float)
                           + self.xi3 * np.asarray(y, dtype=float))
        )
        val = char * self.theta.eval_arrays(x, y, z)
        return np.conjugate(val) if self.conjugated else val

    def eval_point(self, P: ProductPoint) -> complex:
        rep = P.p.rep
        return complex(self.eval_coords(P.t, rep.x, rep.y, rep.z))

    def sup_bound(self) -> float:
        # unimodular prefactor: the Gaussian sum dominates
        K = self.theta.k_trunc
        return sum(math.exp(-math.pi * max(abs(k) - 1, 0) ** 2) for k in range(-K, K + 1))


def eval_classA(obs: ClassAObservable, P: ProductPoint) -> complex:
    return obs.eval_point(P)


class Fourier2D:
    """Finitely supported Fourier series on the 2-torus."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cleaned = {}
        for (m1, m2), c in dict(coeffs).items():
            c = complex(c)
            if c != 0:
                cleaned[(int(m1), int(m2))] = c
        self.coeffs = MappingProxyType(cleaned)

    def eval_array(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        acc = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for (m1, m2), c in self.coeffs.items():
            acc += c * np.exp(TWO_PI * 1j * (m1 * x + m2 * y))
        return acc

    def eval(self, x: float, y: float) -> complex:
        return complex(self.eval_array(np.float64(x), np.float64(y)))


@dataclass(frozen=True)
class ClassBObservable:
    """f1(t) * f2(x, y); independent of the center coordinate by construction."""

    f1: FourierSeries
    f2: Fourier2D

    def eval_coords(self, t, x, y, z) -> np.ndarray:
        vals = np.asarray(self.f1.eval_array(t), dtype=complex)
        return vals * self.f2.eval_array(x, y)

    def eval_point(self, P: ProductPoint) -> complex:
        rep = P.p.rep
        return complex(self.f1.eval(P.t)) * self.f2.eval(rep.x, rep.y)


def eval_classB(obs: ClassBObservable, P: ProductPoint) -> complex:
    return obs.eval_point(P)


@dataclass(frozen=True)
class ConstantObservable:
    value: complex = 1.0 + 0j

    def eval_coords(self, t, x, y, z) -> np.ndarray:
        return np.full(np.asarray(t, dtype=float).shape, complex(self.value))

    def eval_point(self, P: ProductPoint) -> complex:
        return complex(self.value)


def fA_observable(k_trunc: int = DEFAULT_K_TRUNC) -> ClassAObservable:
    """The standard full-character observable e(t+x+y+z) * theta_{1,0}."""
    return ClassAObservable(1, 1, 1, ThetaObservable(1, 0, k_trunc=k_trunc))


def observable_from_spec(spec) -> object:
    """Presets 'fA' and 'one', or a JSON object {"class": "A"|"B", ...}."""
    if isinstance(spec, str):
        name = spec.strip()
        if name == "fA":
            return fA_observable()
        if name == "one":
            return ConstantObservable()
        import json

        try:
            spec = json.loads(name)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"unknown observable spec {name!r}") from exc
    if not isinstance(spec, dict) or "class" not in spec:
        raise ValidationError("observable spec must carry a 'class' field")
    if spec["class"] == "A":
        theta = ThetaObservable(
            int(spec.get("m", 1)),
            int(spec.get("j", 0)),
            starred=bool(spec.get("starred", False)),
            k_trunc=int(spec.get("k_trunc", DEFAULT_K_TRUNC)),
        )
        return ClassAObservable(
            int(spec.get("xi1", 0)), int(spec.get("xi2", 0)), int(spec.get("xi3", 0)),
            theta, conjugated=bool(spec.get("conjugated", False)),
        )
    if spec["class"] == "B":
        from .fourier import series_from_spec

        f1 = series_from_spec(spec.get("f1", "one"))
        f2 = Fourier2D({(int(m1), int(m2)): complex(re, im)
                        for m1, m2, re, im in spec.get("f2", [[0, 0, 1.0, 0.0]])})
        return ClassBObservable(f1, f2)
    raise ValidationError(f"unknown observable class {spec['class']!r}")


class ProjectedFunction:
    """Quadrature projection of a function onto a center-fiber weight."""

    def __init__(self, func, m: int, quad_points: int, func_arrays=None):
        if quad_points < max(4, 4 * abs(m)):
            raise ValidationError("quad_points must be at least 4*|m| (and >= 4)")
        self.func = func
        self.m = m
        self.quad_points = quad_points
        self.func_arrays = func_arrays
        self._ts = np.arange(quad_points) / quad_points
        self._weights = np.exp(-TWO_PI * 1j * m * self._ts) / quad_points

    def __call__(self, p: NilPoint) -> complex:
        rep = p.rep
        if self.func_arrays is not None:
            zs = (rep.z + self._ts) % 1.0
            vals = self.func_arrays(np.full_like(zs, rep.x), np.full_like(zs, rep.y), zs)
            return complex(np.sum(vals * self._weights))
        acc = 0j
        for tq, w in zip(self._ts, self._weights):
            shifted = NilPoint(HeisElement(rep.x, rep.y, (rep.z + tq) % 1.0))
            acc += w * self.func(shifted)
        return acc

    def eval_arrays(self, x, y, z) -> np.ndarray:
        if self.func_arrays is None:
            raise ValidationError("no array-capable integrand was supplied")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        zs = (z[..., None] + self._ts) % 1.0
        vals = self.func_arrays(
            np.broadcast_to(x[..., None], zs.shape),
            np.broadcast_to(y[..., None], zs.shape),
            zs,
        )
        return np.sum(vals * self._weights, axis=-1)


def project_pm(func, m: int, quad_points: int, func_arrays=None) -> ProjectedFunction:
    """Project a sampled function on the nilmanifold onto its weight-m part.

    `func` maps a NilPoint to a complex value; `func_arrays`, when given,
    must map coordinate arrays (x, y, z) to values and is used to vectorize
    the quadrature.
    """
    return ProjectedFunction(func, m, quad_points, func_arrays=func_arrays)
