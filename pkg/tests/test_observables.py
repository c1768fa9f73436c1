"""Theta observables: lattice invariance, weight relation, projections."""

import cmath
import math

import numpy as np
import pytest

from nilskew import observables as ob
from nilskew.errors import ValidationError
from nilskew.fourier import FourierSeries, e
from nilskew.heisenberg import HeisElement, NilPoint, ProductPoint, mul, product_point, reduce

THETA_AT_ID = sum(math.exp(-math.pi * k * k) for k in range(-25, 26))


def test_theta_value_at_identity():
    th = ob.ThetaObservable(1, 0, k_trunc=8)
    val = th.eval(reduce(HeisElement(0, 0, 0))[0])
    assert val == pytest.approx(THETA_AT_ID, abs=1e-9)
    assert round(val.real, 6) == 1.086435


def test_theta_parameter_validation():
    with pytest.raises(ValidationError):
        ob.ThetaObservable(0, 0)
    with pytest.raises(ValidationError):
        ob.ThetaObservable(2, 2)


def test_theta_reduction_invariance_is_exact():
    # reduction canonicalizes exactly in exact arithmetic, so coset-equal
    # inputs produce identical values
    from fractions import Fraction

    th = ob.ThetaObservable(2, 1)
    g = HeisElement(Fraction(37, 100), Fraction(81, 100), Fraction(55, 100))
    moved = mul(HeisElement(1, -2, 3), g)
    assert reduce(g)[0] == reduce(moved)[0]
    assert th.eval(reduce(g)[0]) == th.eval(reduce(moved)[0])


def test_theta_raw_representative_invariance():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(200):
        g = HeisElement(*rng.random(3))
        gamma = HeisElement(*(int(v) for v in rng.integers(-3, 4, 3)))
        moved = mul(gamma, g)
        for m in (1, 2, 3):
            for j in range(m):
                for starred in (False, True):
                    th = ob.ThetaObservable(m, j, starred=starred, k_trunc=12)
                    diff = abs(th.eval_raw(*g.coords()) - th.eval_raw(*moved.coords()))
                    worst = max(worst, diff)
    assert worst < 1e-9


def test_theta_weight_relation():
    # central translation by z' multiplies a weight-m value by e(m z')
    rng = np.random.default_rng(18)
    for m in (1, 2, 3, 4):
        th = ob.ThetaObservable(m, min(1, m - 1))
        for _ in range(20):
            x, y, z = rng.random(3)
            zp = rng.random()
            lhs = th.eval_raw(x, y, z + zp)
            rhs = e(m * zp) * th.eval_raw(x, y, z)
            assert abs(lhs - rhs) < 1e-9


def test_theta_truncation_monotone():
    p = reduce(HeisElement(0.3, 0.9, 0.2))[0]
    vals = {}
    for K in (6, 9, 12, 16):
        th = ob.ThetaObservable(1, 0, k_trunc=K)
        vals[K] = th.eval(p)
    for K1, K2 in ((6, 9), (9, 12), (12, 16)):
        bound = ob.ThetaObservable(1, 0, k_trunc=K1).truncation_tail()
        assert abs(vals[K1] - vals[K2]) <= bound


def test_classA_examples():
    fa = ob.fA_observable()
    P = ProductPoint(0.0, reduce(HeisElement(0, 0, 0))[0])
    assert fa.eval_point(P) == pytest.approx(THETA_AT_ID, abs=1e-9)
    # xi = 0 and unconjugated theta: value independent of t
    obs = ob.ClassAObservable(0, 0, 0, ob.ThetaObservable(1, 0))
    p = reduce(HeisElement(0.2, 0.4, 0.6))[0]
    v1 = obs.eval_point(ProductPoint(0.1, p))
    v2 = obs.eval_point(ProductPoint(0.9, p))
    assert v1 == v2
    # unimodular character: |value| bounded by the Gaussian sum bound
    rng = np.random.default_rng(19)
    cap = fa.sup_bound()
    for _ in range(200):
        P = product_point(*rng.random(4))
        assert abs(fa.eval_point(P)) <= cap


def test_classA_conjugate_pairing():
    rng = np.random.default_rng(20)
    base = ob.ClassAObservable(1, -2, 3, ob.ThetaObservable(2, 1, starred=True))
    conj = ob.ClassAObservable(1, -2, 3, ob.ThetaObservable(2, 1, starred=True),
                               conjugated=True)
    for _ in range(50):
        P = product_point(*rng.random(4))
        assert conj.eval_point(P) == pytest.approx(
            base.eval_point(P).conjugate(), abs=1e-14
        )


def test_classB_examples():
    one = ob.ClassBObservable(FourierSeries({0: 1.0}), ob.Fourier2D({(0, 0): 1.0}))
    rng = np.random.default_rng(21)
    for _ in range(20):
        assert one.eval_point(product_point(*rng.random(4))) == pytest.approx(1.0)
    # z never read: changing the representative center leaves values fixed
    obs = ob.ClassBObservable(
        FourierSeries({1: 1.0}, real_valued=False),
        ob.Fourier2D({(1, 0): 1.0}),
    )
    for _ in range(100):
        t, x, y, z1, z2 = rng.random(5)
        a = obs.eval_point(ProductPoint(t, NilPoint(HeisElement(x, y, z1))))
        b = obs.eval_point(ProductPoint(t, NilPoint(HeisElement(x, y, z2))))
        assert a == b
    val = obs.eval_point(ProductPoint(0.25, NilPoint(HeisElement(0.5, 0.0, 0.9))))
    assert val == pytest.approx(e(0.25) * e(0.5), abs=1e-15)


def test_observable_specs():
    fa = ob.observable_from_spec("fA")
    assert isinstance(fa, ob.ClassAObservable)
    one = ob.observable_from_spec("one")
    assert one.eval_point(product_point(0.1)) == 1.0
    spec = {"class": "A", "xi1": 1, "m": 2, "j": 1, "starred": True}
    obs = ob.observable_from_spec(spec)
    assert obs.theta.starred and obs.theta.m == 2
    with pytest.raises(ValidationError):
        ob.observable_from_spec("bogus")


def test_projection_reproduces_weight_one():
    th = ob.ThetaObservable(1, 0)
    proj = ob.project_pm(th.eval, 1, 256, func_arrays=th.eval_arrays)
    rng = np.random.default_rng(22)
    for _ in range(50):
        p = product_point(*rng.random(4)).p
        assert abs(proj(p) - th.eval(p)) < 1e-10


def test_projection_annihilates_other_weights():
    th = ob.ThetaObservable(1, 0)
    proj0 = ob.project_pm(th.eval, 0, 256, func_arrays=th.eval_arrays)
    rng = np.random.default_rng(23)
    for _ in range(50):
        p = product_point(*rng.random(4)).p
        assert abs(proj0(p)) < 1e-10


def test_projection_fixes_center_free_functions():
    # a function that never reads z is already of weight zero
    def flat(p):
        rep = p.rep
        return cmath.exp(2j * math.pi * (rep.x + 2 * rep.y))

    def flat_arrays(x, y, z):
        return np.exp(2j * np.pi * (x + 2 * y))

    proj0 = ob.project_pm(flat, 0, 64, func_arrays=flat_arrays)
    rng = np.random.default_rng(24)
    for _ in range(20):
        p = product_point(*rng.random(4)).p
        assert abs(proj0(p) - flat(p)) < 1e-12


def test_projection_quadrature_validation():
    th = ob.ThetaObservable(1, 0)
    with pytest.raises(ValidationError):
        ob.project_pm(th.eval, 3, 8)


def test_projection_idempotent():
    th = ob.ThetaObservable(1, 0)
    proj = ob.project_pm(th.eval, 1, 128, func_arrays=th.eval_arrays)
    proj2 = ob.project_pm(proj, 1, 128, func_arrays=proj.eval_arrays)
    rng = np.random.default_rng(25)
    for _ in range(5):
        p = product_point(*rng.random(4)).p
        assert abs(proj2(p) - proj(p)) < 1e-9
