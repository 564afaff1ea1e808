import math

import numpy as np
import pytest

from clutterforge import pade
from clutterforge.dist import DistributionSpec, cumulants
from clutterforge.errors import PipelineError, WrongForm
from clutterforge.sampler import (
    PipelineConfig,
    RngStream,
    assemble_cg,
    run_pipeline,
    sample_u,
    sample_zj,
)

PTAS_SPEC = DistributionSpec.ptas(0.95, 2.0, 4.0)
# Regression coefficients (0.9, -0.1) in difference-equation sign.
AR_A = [-0.9, 0.1]


def product_prf(pairs):
    a = np.array([p[0] for p in pairs], dtype=complex)
    lam = np.array([p[1] for p in pairs], dtype=complex)
    return pade.PoleResidueForm(a, lam, pade.PRODUCT_OF_EXPONENTIALS, 0.0)


def test_rng_stream_is_deterministic_and_splittable():
    a = RngStream(123).gen.standard_normal(8)
    b = RngStream(123).gen.standard_normal(8)
    assert np.array_equal(a, b)
    parent = RngStream(123)
    kids = parent.split(3)
    draws = [k.gen.standard_normal(4) for k in kids] + [parent.gen.standard_normal(4)]
    for i in range(len(draws)):
        for j in range(i + 1, len(draws)):
            assert not np.array_equal(draws[i], draws[j])
    assert RngStream(77).entropy == 77


def test_sample_zj_moments_and_point_mass():
    a_j, lam_j, n = 0.7, 1.3, 200_000
    z = sample_zj(a_j, lam_j, n, RngStream(5))
    # kappa_n = lam n! / a^n.
    mean, var = lam_j / a_j, 2.0 * lam_j / a_j**2
    assert abs(z.mean() - mean) < 4.0 * math.sqrt(var / n)
    kap4 = 24.0 * lam_j / a_j**4
    assert abs(z.var() - var) < 4.0 * math.sqrt((kap4 + 2 * var**2) / n)
    p0 = np.mean(z == 0.0)
    assert abs(p0 - math.exp(-lam_j)) < 4.0 * math.sqrt(math.exp(-lam_j) / n)
    with pytest.raises(ValueError):
        sample_zj(-1.0, 1.0, 10, RngStream(0))


def test_sample_u_sums_component_cumulants():
    pairs = [(0.6, 0.8), (1.7, 1.1)]
    u = sample_u(product_prf(pairs), 200_000, RngStream(9))
    mean = sum(lam / a for a, lam in pairs)
    var = sum(2.0 * lam / a**2 for a, lam in pairs)
    assert abs(u.mean() - mean) < 4.0 * math.sqrt(var / u.size)
    # Exact zeros require every component Poisson count to vanish.
    p0 = math.exp(-sum(lam for _, lam in pairs))
    assert abs(np.mean(u == 0.0) - p0) < 4.0 * math.sqrt(p0 / u.size)


def test_sample_u_rejects_wrong_forms():
    prf_sum = pade.PoleResidueForm(
        np.array([1.0 + 0j]), np.array([1.0 + 0j]), pade.SUM_OF_POLES, 0.0
    )
    with pytest.raises(WrongForm):
        sample_u(prf_sum, 10, RngStream(0))
    prf_cplx = pade.PoleResidueForm(
        np.array([1.0 + 0.5j, 1.0 - 0.5j]),
        np.array([0.5 + 0j, 0.5 + 0j]),
        pade.PRODUCT_OF_EXPONENTIALS,
        0.0,
    )
    with pytest.raises(WrongForm):
        sample_u(prf_cplx, 10, RngStream(0))


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(length=0, ar_coeffs=AR_A)
    with pytest.raises(ValueError):
        PipelineConfig(length=10)
    cfg = PipelineConfig(length=10, ar_coeffs=AR_A, seed=3)
    assert cfg.to_json()["ar_coeffs"] == AR_A


def test_run_pipeline_diagnostics_are_coherent():
    cfg = PipelineConfig(length=5000, ar_coeffs=AR_A, seed=42)
    tex = run_pipeline(PTAS_SPEC, None, cfg)
    d = tex.diagnostics
    kap = cumulants(PTAS_SPEC, 35)
    assert len(d["kappa_y"]) == 35
    assert d["kappa_y"][0] == pytest.approx(kap.kappa[0])
    assert d["warmup"] == 5 * d["L_IR"]
    assert len(tex) == 5000
    assert d["discarded_poles"] == 0
    # The sampler mean is the first input cumulant up to recovery error.
    assert abs(d["sampler_mean"] - d["kappa_u"][0]) < 1e-8
    assert tex.negative_count == int(np.sum(tex.samples < 0))
    j = tex.to_json()
    assert j["distribution"]["family"] == "ptas"
    assert j["transform"]["form"] == "product_exp"


def test_run_pipeline_is_seed_deterministic():
    cfg = PipelineConfig(length=400, ar_coeffs=AR_A, seed=7)
    t1 = run_pipeline(PTAS_SPEC, None, cfg)
    t2 = run_pipeline(PTAS_SPEC, None, cfg)
    assert np.array_equal(t1.samples, t2.samples)
    t3 = run_pipeline(PTAS_SPEC, None, PipelineConfig(length=400, ar_coeffs=AR_A, seed=8))
    assert not np.array_equal(t1.samples, t3.samples)


def test_run_pipeline_anchors_the_mean():
    cfg = PipelineConfig(length=60_000, ar_coeffs=AR_A, seed=11)
    tex = run_pipeline(PTAS_SPEC, None, cfg)
    kap = cumulants(PTAS_SPEC, 2)
    # Loose band: the filtered texture is correlated, so the sample mean
    # wanders more than iid kappa_2/n would suggest.
    assert abs(tex.samples.mean() - kap.kappa[0]) < 10.0 * math.sqrt(kap.kappa[1] / 60_000)


def test_run_pipeline_names_the_failing_stage():
    cfg = PipelineConfig(length=100, ar_coeffs=[-1.0], seed=0)  # root on the unit circle
    with pytest.raises(PipelineError) as exc:
        run_pipeline(PTAS_SPEC, None, cfg)
    assert exc.value.stage == "ar_model"


def test_assemble_cg_rayleigh_for_unit_texture():
    n = 100_000
    seq = assemble_cg(np.ones(n), RngStream(13))
    a2 = np.abs(seq.x) ** 2
    # |X|^2 is 2 Exp(1/2): mean 4, variance 16.
    assert abs(a2.mean() - 4.0) < 4.0 * math.sqrt(16.0 / n)
    assert seq.clamped_count == 0
    assert np.array_equal(seq.amplitude(), np.abs(seq.x))


def test_assemble_cg_clamps_and_counts_negatives():
    seq = assemble_cg(np.array([-1.0, 2.0, -3.0, 0.5]), RngStream(1))
    assert seq.clamped_count == 2
    assert seq.x[0] == 0.0 and seq.x[2] == 0.0
    assert np.all(seq.v >= 0.0)


def test_assemble_cg_power_follows_texture():
    cfg = PipelineConfig(length=50_000, ar_coeffs=AR_A, seed=21)
    tex = run_pipeline(PTAS_SPEC, None, cfg)
    seq = assemble_cg(tex, RngStream(22))
    ratio = np.mean(np.abs(seq.x) ** 2) / np.mean(seq.v)
    assert abs(ratio - 4.0) < 0.1
    assert seq.texture is tex


def test_assemble_cg_speckle_shaping_preserves_power():
    n = 200_000
    plain = assemble_cg(np.ones(n), RngStream(31))
    shaped = assemble_cg(np.ones(n), RngStream(31), speckle_a=[-0.5])
    p_plain = np.mean(np.abs(plain.x) ** 2)
    p_shaped = np.mean(np.abs(shaped.x) ** 2)
    assert abs(p_shaped / p_plain - 1.0) < 0.02
    # Shaping correlates consecutive speckle draws.
    z = shaped.x
    lag1 = np.mean(z[1:] * np.conj(z[:-1])).real / np.mean(np.abs(z) ** 2)
    assert lag1 > 0.3
