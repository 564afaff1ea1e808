import math

import numpy as np
import pytest

import mpmath as mp
from scipy.integrate import trapezoid

from clutterforge import pade
from clutterforge.continuation import (
    ILTParams,
    RecoveredLT,
    ar_output_lt,
    ar_output_pdf,
    component_convolution_pdf,
    component_pdf_zj,
    eval_lt,
    pdf_moment_path,
    pdf_via_fft_ilt,
    recover_lt,
)
from clutterforge.cumseries import (
    CUMULANT,
    MOMENT,
    CumulantVector,
    PowerSeries,
    build_series,
    cumulants_to_moments,
)
from clutterforge.dist import DistributionSpec, cumulants
from clutterforge.errors import NonDecayingLT, PoleHit, WrongForm, WrongPath


def product_cumulants(pairs, n_max):
    kap = [
        sum(lam * math.factorial(n) / a**n for a, lam in pairs)
        for n in range(1, n_max + 1)
    ]
    with mp.workdps(50):
        hp = [
            mp.fsum(mp.mpf(lam) * mp.factorial(n) / mp.mpf(a) ** n for a, lam in pairs)
            for n in range(1, n_max + 1)
        ]
    return CumulantVector(kap, hp=hp)


def test_ilt_exponential_density_body():
    u = np.linspace(1e-3, 12.0, 600)
    f = pdf_via_fft_ilt(lambda s: 1.0 / (1.0 + s), u)
    body = u >= 0.02
    assert np.max(np.abs(f - np.exp(-u))[body]) < 3e-5


def test_ilt_gamma_density_body():
    u = np.linspace(1e-3, 12.0, 600)
    f = pdf_via_fft_ilt(lambda s: (1.0 + s) ** -2.0, u)
    body = u >= 0.02
    assert np.max(np.abs(f - u * np.exp(-u))[body]) < 2e-5


def test_ilt_detects_and_returns_atom():
    # 0.3 point mass at zero plus 0.7 exponential.
    u = np.linspace(1e-3, 10.0, 400)
    f, atom = pdf_via_fft_ilt(
        lambda s: 0.3 + 0.7 / (1.0 + s), u, return_atom=True
    )
    assert abs(atom - 0.3) < 1e-9
    assert np.max(np.abs(f - 0.7 * np.exp(-u))[u >= 0.02]) < 2e-5


def test_ilt_rejects_non_decaying_transform():
    # Spectrum growing along the contour (support on u < 0) outruns the
    # window; capped to stay finite so the failure is the tail check.
    with pytest.raises(NonDecayingLT):
        pdf_via_fft_ilt(
            lambda s: np.exp(np.minimum(0.2 * np.abs(np.imag(s)), 600.0)),
            np.linspace(0.1, 5.0, 50),
            ILTParams(ls=2048),
        )


def test_ilt_params_validation_and_json():
    with pytest.raises(ValueError):
        ILTParams(ls=1000)  # not a power of two
    p = ILTParams(ls=4096, sigma=0.5, decay_threshold=1e-6)
    back = ILTParams.from_json(p.to_json())
    assert back.ls == 4096 and back.sigma == 0.5 and back.decay_threshold == 1e-6


def test_component_pdf_matches_quadrature_transform():
    # Forward-transform the closed-form density and compare against the
    # factor exp(-lam s / (s + a)) it came from.
    a, lam = 0.7, 1.3
    u = np.linspace(1e-9, 80.0, 200001)
    atom, dens = component_pdf_zj(a, lam, u)
    assert abs(atom - math.exp(-lam)) < 1e-15
    for s in (0.3, 1.0, 2.7):
        lhs = atom + trapezoid(dens * np.exp(-s * u), u)
        rhs = math.exp(-lam * s / (s + a))
        assert abs(lhs - rhs) < 1e-4


def test_component_pdf_total_mass():
    a, lam = 2.0, 0.5
    u = np.linspace(1e-9, 60.0, 200001)
    atom, dens = component_pdf_zj(a, lam, u)
    assert abs(atom + trapezoid(dens, u) - 1.0) < 1e-4


def test_recovered_lt_cumulant_path():
    kap = product_cumulants([(0.6, 0.8), (1.7, 1.1)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    assert rlt.path == "cumulant"
    s = np.linspace(0.0, 5.0, 30) * 1j + 0.2
    expect = np.exp(-0.8 * s / (s + 0.6)) * np.exp(-1.1 * s / (s + 1.7))
    assert np.max(np.abs(eval_lt(rlt, s) - expect)) < 1e-10
    # Atom is the s -> infinity limit exp(-sum lam).
    assert abs(rlt.atom_mass() - math.exp(-1.9)) < 1e-10


def test_recovered_lt_moment_path():
    spec = DistributionSpec.gamma(2.0, 1.0)
    series = build_series(cumulants_to_moments(cumulants(spec, 35)), MOMENT)
    rlt = recover_lt(series, 16, 17)
    assert rlt.path == "moment"
    assert rlt.atom_mass() == 0.0
    s = np.linspace(0.0, 5.0, 30) * 1j + 0.2
    assert np.max(np.abs(eval_lt(rlt, s) - (1.0 + s) ** -2.0)) < 1e-9


def test_eval_lt_reports_pole_hits():
    kap = product_cumulants([(0.6, 0.8)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    with pytest.raises(PoleHit):
        eval_lt(rlt, -rlt.prf.a[0])


def test_moment_path_pdf_combines_conjugates_to_real():
    spec = DistributionSpec.gamma(2.0, 1.0)
    kap = cumulants(spec, 35)
    rlt = recover_lt(build_series(cumulants_to_moments(kap), MOMENT), 16, 17)
    u = np.linspace(0.05, 10.0, 300)
    f = pdf_moment_path(rlt, u)
    assert f.dtype == np.float64
    assert np.max(np.abs(f - u * np.exp(-u))) < 1e-7


def test_moment_path_rejects_product_form():
    kap = product_cumulants([(0.6, 0.8)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    with pytest.raises(WrongPath):
        pdf_moment_path(rlt, np.linspace(0.1, 5.0, 10))


def test_convolution_pdf_matches_single_component_closed_form():
    kap = product_cumulants([(0.7, 1.3)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    u = np.linspace(0.05, 12.0, 500)
    f_conv, atom = component_convolution_pdf(rlt.prf, u, return_atom=True)
    atom_ref, dens_ref = component_pdf_zj(0.7, 1.3, u)
    assert abs(atom - atom_ref) < 1e-12
    assert np.max(np.abs(f_conv - dens_ref)) < 2e-3


def test_convolution_pdf_agrees_with_direct_inversion():
    kap = product_cumulants([(0.6, 0.8), (1.7, 1.1), (4.0, 2.5)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    u = np.linspace(1e-3, 15.0, 700)
    f_conv = component_convolution_pdf(rlt.prf, u)
    f_ilt = pdf_via_fft_ilt(lambda s: eval_lt(rlt, s), u)
    body = (f_ilt > 1e-3 * f_ilt.max()) & (u >= 0.05)
    assert np.max(np.abs(f_conv - f_ilt)[body]) < 1e-3


def test_convolution_pdf_requires_product_form():
    prf = pade.PoleResidueForm(
        np.array([1.0 + 0j]), np.array([0.5 + 0j]), pade.SUM_OF_POLES, 0.5
    )
    with pytest.raises(WrongForm):
        component_convolution_pdf(prf, np.linspace(0.1, 5.0, 20))


def test_ar_output_lt_is_product_over_taps():
    kap = product_cumulants([(0.6, 0.8), (1.7, 1.1)], 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    h = np.array([1.0, 0.5, 0.25])
    s = np.linspace(0.0, 4.0, 20) * 1j + 0.1
    got = ar_output_lt(rlt, h, s)
    expect = np.ones_like(s)
    for hi in h:
        expect *= eval_lt(rlt, hi * s)
    assert np.max(np.abs(got - expect)) < 1e-12


def test_ar_output_pdf_matches_closed_form_for_identity_filter():
    spec = DistributionSpec.ptas(0.95, 2.0, 4.0)
    kap = cumulants(spec, 35)
    rlt = recover_lt(build_series(kap, CUMULANT), 16, 17)
    u = np.linspace(1e-3, 10.0, 400)
    f_id = ar_output_pdf(rlt, np.array([1.0]), u)
    f_direct = pdf_via_fft_ilt(lambda s: eval_lt(rlt, s), u)
    assert np.max(np.abs(f_id - f_direct)) < 1e-10


def test_recovered_lt_warns_on_mass_defect():
    # Sum-poles form whose value at s = 0 is 0.9 rather than 1.
    prf = pade.PoleResidueForm(
        np.array([1.0 + 0j]), np.array([0.9 + 0j]), pade.SUM_OF_POLES, 0.0
    )
    with pytest.warns(UserWarning):
        RecoveredLT(prf, "moment")
