import numpy as np
import pytest

from nilskew import arith, fourier


@pytest.fixture(scope="session")
def golden_alpha():
    return arith.Alpha.parse("cf:" + ",".join(["1"] * 40))


@pytest.fixture(scope="session")
def liouville3():
    cf = arith.liouville_alpha(3, 2)
    cls = arith.classify(cf, 3)
    return cf, cls, arith.Alpha.from_cf(cf)


@pytest.fixture(scope="session")
def mu_million():
    return arith.mobius_sieve(10**6)


def random_real_series(rng, max_freq=8, scale=0.2, zero_mean=True):
    """Random real-valued trigonometric polynomial fixture."""
    coeffs = {}
    for m in range(1, max_freq + 1):
        c = scale * (rng.standard_normal() + 1j * rng.standard_normal()) / m**2
        coeffs[m] = c
        coeffs[-m] = np.conj(c)
    if not zero_mean:
        coeffs[0] = scale * rng.standard_normal()
    return fourier.FourierSeries(coeffs, real_valued=True)


def resonant_series(rng, cf, cls, decay=6.0, zero_mean=True, amp=1.0):
    """Series supported on the divisible bands of the sharp denominators.

    Coefficient magnitudes are the deterministic profile amp * |m|^(-decay);
    only the phases are random, so fitted bound constants are comparable
    across seeds.
    """
    coeffs = {}
    for k in range(1, cls.classified_upto + 1):
        if cls.kinds[k - 1] != "sharp":
            continue
        qk, qn = cf.q(k), cf.q(k + 1)
        m = qk
        while m < min(qn, 64):
            c = amp * m**-decay * np.exp(2j * np.pi * rng.random())
            coeffs[m] = c
            coeffs[-m] = np.conj(c)
            m += qk
    if not zero_mean:
        coeffs[0] = 0.25
    return fourier.FourierSeries(coeffs, real_valued=True)
