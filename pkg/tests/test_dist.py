import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from clutterforge.dist import (
    DistributionSpec,
    amplitude_pdf,
    closed_form_lt,
    cumulants,
    reference_pdf,
)


def test_gamma_lt_matches_analytic_form():
    spec = DistributionSpec.gamma(2.0, 1.0)
    s = np.array([0.0, 0.5, 1.0, 3.0 + 2.0j])
    expect = (1.0 + 1.0 * s) ** -2.0
    assert np.max(np.abs(closed_form_lt(spec, s) - expect)) < 1e-14


def test_ptas_lt_matches_independent_evaluation():
    # exp((g / (a e^a)) (1 - (e s + 1)^a)) evaluated with mpmath at 60 digits.
    spec = DistributionSpec.ptas(0.95, 2.0, 4.0)
    s = np.array([0.5, 2.0, 1.0j, 3.0 + 1.0j])
    expect = np.array(
        [
            0.35425724642100421,
            0.01860118438885036,
            -0.42752139488821810 - 0.79796202798693388j,
            -0.00084350599108700 - 0.00260430997374838j,
        ]
    )
    got = closed_form_lt(spec, s)
    assert np.max(np.abs(got - expect)) < 1e-13


def test_lt_is_one_at_zero():
    for spec in (DistributionSpec.gamma(0.7, 2.5), DistributionSpec.ptas(0.5, 1.0, 2.0)):
        assert abs(closed_form_lt(spec, np.array([0.0]))[0] - 1.0) < 1e-15


def test_gamma_cumulants_closed_form():
    al, lam = 2.0, 1.5
    kap = cumulants(DistributionSpec.gamma(al, lam), 8).kappa
    n = np.arange(1, 9)
    expect = al * lam**n * np.array([math.factorial(k - 1) for k in n], dtype=float)
    assert np.max(np.abs(kap - expect) / expect) < 1e-13


@pytest.mark.parametrize(
    "spec",
    [DistributionSpec.gamma(2.0, 1.0), DistributionSpec.ptas(0.95, 2.0, 4.0)],
)
def test_low_order_cumulants_match_log_lt_derivatives(spec):
    # kappa_n = (-1)^n d^n/ds^n log L(s) at 0, by central differences.
    kap = cumulants(spec, 3).kappa
    h = 1e-3

    def loglt(x):
        return np.log(closed_form_lt(spec, np.array([x], dtype=complex))[0].real)

    d1 = (loglt(h) - loglt(-h)) / (2 * h)
    d2 = (loglt(h) - 2 * loglt(0.0) + loglt(-h)) / h**2
    d3 = (loglt(2 * h) - 2 * loglt(h) + 2 * loglt(-h) - loglt(-2 * h)) / (2 * h**3)
    assert abs(kap[0] + d1) < 1e-6 * abs(kap[0])
    assert abs(kap[1] - d2) < 1e-5 * abs(kap[1])
    assert abs(kap[2] + d3) < 1e-3 * abs(kap[2])


def test_ptas_alpha_one_collapses_to_point_mass():
    # At a = 1 every cumulant beyond the first vanishes: V = gamma exactly.
    kap = cumulants(DistributionSpec.ptas(1.0, 3.0, 2.0), 6).kappa
    assert abs(kap[0] - 3.0) < 1e-14
    assert np.max(np.abs(kap[1:])) < 1e-14


def test_cumulants_carry_extended_precision_mirror():
    kap = cumulants(DistributionSpec.ptas(0.95, 2.0, 4.0), 12)
    assert kap.hp is not None and len(kap.hp) == 12
    mirror = np.array([float(x) for x in kap.hp])
    assert np.max(np.abs(mirror - kap.kappa) / np.abs(kap.kappa)) < 4e-15


def test_reference_pdf_gamma_closed_form():
    spec = DistributionSpec.gamma(2.0, 1.0)
    grid = np.linspace(1e-6, 12.0, 800)
    f = reference_pdf(spec, grid)
    assert np.max(np.abs(f - grid * np.exp(-grid))) < 1e-12


def test_reference_pdf_ptas_integrates_to_one():
    spec = DistributionSpec.ptas(0.95, 2.0, 4.0)
    grid = np.linspace(1e-4, 12.0, 6000)
    f = reference_pdf(spec, grid)
    mass = trapezoid(f, grid)
    assert f.min() >= 0.0
    assert abs(mass - 1.0) < 5e-3


def test_amplitude_pdf_rayleigh_for_unit_texture():
    # V = 1 makes |X| Rayleigh with E[R^2] = 4: p(r) = (r/2) exp(-r^2/4).
    v = np.linspace(1e-4, 3.0, 4000)
    delta = np.zeros_like(v)
    delta[np.argmin(np.abs(v - 1.0))] = 1.0 / (v[1] - v[0])
    r = np.linspace(0.05, 6.0, 300)
    got = amplitude_pdf(v, delta, r)
    expect = (r / 2.0) * np.exp(-(r**2) / 4.0)
    assert np.max(np.abs(got - expect)) < 2e-3


def test_amplitude_pdf_gamma_texture_against_quadrature():
    spec = DistributionSpec.gamma(2.0, 1.0)
    v = np.linspace(1e-5, 40.0, 20000)
    fv = v * np.exp(-v)
    r = np.linspace(0.1, 8.0, 150)
    got = amplitude_pdf(v, fv, r)
    # Independent midpoint quadrature of the Rayleigh mixture.
    vm = 0.5 * (v[1:] + v[:-1])
    dv = np.diff(v)
    fvm = vm * np.exp(-vm)
    expect = np.array(
        [np.sum((rr / (2 * vm)) * np.exp(-(rr**2) / (4 * vm)) * fvm * dv) for rr in r]
    )
    assert np.max(np.abs(got - expect)) < 5e-6


def test_spec_validation_errors():
    with pytest.raises(ValueError):
        DistributionSpec("weibull", 1.0, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec.gamma(-1.0, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec.ptas(0.5, 1.0, -2.0)
    with pytest.raises(ValueError):
        DistributionSpec.ptas(2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec("gamma", 1.0, 1.0, eta=3.0)


def test_ptas_alpha_above_one_warns():
    with pytest.warns(UserWarning):
        DistributionSpec.ptas(1.3, 1.0, 1.0)


def test_spec_json_round_trip():
    for spec in (DistributionSpec.gamma(1.5, 0.5), DistributionSpec.ptas(0.9, 2.0, 4.0)):
        back = DistributionSpec.from_json(spec.to_json())
        assert back.family == spec.family
        assert back.alpha == spec.alpha
        assert back.scale == spec.scale
        assert back.eta == spec.eta
    with pytest.raises(ValueError):
        DistributionSpec.from_json({"family": "gamma", "alpha": 1.0, "lambda": 1.0, "x": 2})
