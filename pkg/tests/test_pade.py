import math

import numpy as np
import pytest

import mpmath as mp

from clutterforge import pade
from clutterforge.cumseries import (
    CUMULANT,
    MOMENT,
    CumulantVector,
    PowerSeries,
    build_series,
)
from clutterforge.errors import (
    AllPolesDiscarded,
    ComplexPoleStructure,
    DegreeMismatch,
    InsufficientOrders,
)


def taylor_of_rational(p, q, n):
    # Long division p/q in ascending powers; independent of the Hankel solve.
    t = []
    for k in range(n):
        acc = p[k] if k < len(p) else 0.0
        for j in range(1, min(k, len(q) - 1) + 1):
            acc -= q[j] * t[k - j]
        t.append(acc / q[0])
    return np.array(t)


def component_cumulants(pairs, n_max, mirror=True):
    # kappa_n = sum_j lam_j n! / a_j^n for a product of exponential factors.
    kap = [
        sum(lam * math.factorial(n) / a**n for a, lam in pairs)
        for n in range(1, n_max + 1)
    ]
    hp = None
    if mirror:
        with mp.workdps(50):
            hp = [
                mp.fsum(mp.mpf(lam) * mp.factorial(n) / mp.mpf(a) ** n for a, lam in pairs)
                for n in range(1, n_max + 1)
            ]
    return CumulantVector(kap, hp=hp)


def test_fit_recovers_exact_low_order_rational():
    q_true = np.polynomial.polynomial.polymul([1.0, 1.0], [1.0, 1.0 / 3.0])
    c = taylor_of_rational([1.0], q_true, 8)
    pa = pade.fit(PowerSeries(c, MOMENT), 1, 2)
    s = np.linspace(0.0, 10.0, 50)
    expect = 1.0 / ((1.0 + s) * (1.0 + s / 3.0))
    assert np.max(np.abs(pa.eval(s) - expect) / expect) < 1e-9


def test_fit_taylor_reproduces_input_series():
    rng = np.random.default_rng(3)
    kap = CumulantVector(rng.uniform(0.5, 1.5, 12))
    ser = build_series(kap, CUMULANT)
    pa = pade.fit(ser, 5, 6)
    recon = pa.taylor(12)
    assert np.max(np.abs(recon - ser.c)) < 1e-8 * np.max(np.abs(ser.c))


def test_fit_balances_widely_scaled_coefficients():
    # (1 + 100 s)^{-1}: coefficients grow like 100^n.
    c = (-100.0) ** np.arange(10.0)
    pa = pade.fit(PowerSeries(c, MOMENT), 0, 1)
    s = np.linspace(0.0, 0.5, 20)
    assert np.max(np.abs(pa.eval(s) - 1.0 / (1.0 + 100.0 * s))) < 1e-10


def test_fit_deflates_exactly_rational_series():
    # Moment series of (1+s)^{-2} is rational of type [0,2]; a [16,17]
    # request must land on the minimal entry instead of failing.
    n = 36
    with mp.workdps(50):
        hp = [(-1) ** k * mp.mpf(k + 1) for k in range(n)]
    c = np.array([float(x) for x in hp])
    pa = pade.fit(PowerSeries(c, MOMENT, hp=hp), 16, 17)
    assert pa.L <= 2 and pa.K <= pa.L
    s = np.linspace(0.0, 8.0, 40)
    assert np.max(np.abs(pa.eval(s) - (1.0 + s) ** -2.0)) < 1e-12


def test_sum_of_poles_handles_double_pole_via_split_pair():
    with mp.workdps(50):
        hp = [(-1) ** k * mp.mpf(k + 1) for k in range(36)]
    c = np.array([float(x) for x in hp])
    pa = pade.fit(PowerSeries(c, MOMENT, hp=hp), 16, 17)
    prf = pade.to_pole_residue(pa, pade.SUM_OF_POLES)
    s = np.linspace(0.0, 8.0, 40)
    got = prf.constant + np.sum(prf.lam[None, :] / (s[:, None] + prf.a[None, :]), axis=1)
    assert np.max(np.abs(got.real - (1.0 + s) ** -2.0)) < 1e-9
    assert np.max(np.abs(got.imag)) < 1e-9


def test_product_form_round_trip_three_components():
    pairs = [(0.6, 0.8), (1.7, 1.1), (4.0, 2.5)]
    kap = component_cumulants(pairs, 35)
    ser = build_series(kap, CUMULANT)
    prf = pade.product_form_scan(ser, 16, 17)
    assert prf.form == pade.PRODUCT_OF_EXPONENTIALS
    assert prf.n_terms == 3
    order = np.argsort(prf.a.real)
    for (a_true, lam_true), a_got, lam_got in zip(pairs, prf.a[order], prf.lam[order]):
        assert abs(a_got - a_true) < 1e-8
        assert abs(lam_got - lam_true) < 1e-8


def test_product_scan_rejects_structurally_complex_poles():
    # A genuine conjugate pole pair cannot be consolidated to real factors.
    with mp.workdps(50):
        hp = [
            2 * mp.re(mp.mpf(1.0) * mp.factorial(n) / mp.mpc(1.0, 1.0) ** n)
            for n in range(1, 36)
        ]
    kap = CumulantVector([float(x) for x in hp], hp=hp)
    ser = build_series(kap, CUMULANT)
    with pytest.raises(ComplexPoleStructure):
        with pytest.warns(UserWarning):
            pade.product_form_scan(ser, 16, 17)


def test_product_form_requires_strictly_proper_part():
    c = taylor_of_rational([1.0], [1.0, 2.0], 8)
    pa = pade.fit(PowerSeries(c, MOMENT), 1, 1)
    with pytest.raises(DegreeMismatch):
        pade.to_pole_residue(pa, pade.PRODUCT_OF_EXPONENTIALS)


def test_filter_poles_drops_right_half_plane_terms():
    prf = pade.PoleResidueForm(
        np.array([1.5 + 0j, -0.2 + 0j]), np.array([0.5 + 0j, 0.01 + 0j]), pade.SUM_OF_POLES, 0.0
    )
    with pytest.warns(UserWarning):
        kept = pade.filter_poles(prf)
    assert kept.n_terms == 1
    assert kept.discarded_count == 1
    assert kept.a[0] == 1.5


def test_filter_poles_raises_when_nothing_survives():
    prf = pade.PoleResidueForm(
        np.array([-1.0 + 0j]), np.array([1.0 + 0j]), pade.SUM_OF_POLES, 0.0
    )
    with pytest.raises(AllPolesDiscarded):
        with pytest.warns(UserWarning):
            pade.filter_poles(prf)


def test_fit_needs_enough_coefficients():
    with pytest.raises(InsufficientOrders):
        pade.fit(PowerSeries([1.0, -1.0, 0.5], MOMENT), 4, 5)


def test_hankel_condition_reported():
    c = taylor_of_rational([1.0], [1.0, 1.0], 8)
    pa = pade.fit(PowerSeries(c, MOMENT), 1, 2)
    assert np.isfinite(pa.hankel_cond) and pa.hankel_cond >= 1.0
