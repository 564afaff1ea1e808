"""Correlated non-Gaussian radar clutter synthesis.

Generates compound-Gaussian sequences whose texture has a prescribed
marginal distribution (gamma or positive tempered alpha-stable) and a
prescribed autocorrelation, by driving an AR filter with an exactly
sampled non-Gaussian input recovered from the target's cumulants.
"""

__version__ = "0.1.0"

from .armodel import ACFSpec, ARModel, exp_cosine_acf, yule_walker
from .continuation import (
    ILTParams,
    RecoveredLT,
    ar_output_lt,
    ar_output_pdf,
    component_pdf_zj,
    eval_lt,
    pdf_via_fft_ilt,
    recover_lt,
)
from .cumseries import (
    CumulantVector,
    MomentVector,
    PowerSeries,
    backsolve_input_cumulants,
    build_series,
    convergence_radius_estimate,
    cumulants_to_moments,
    moments_to_cumulants,
)
from .dist import DistributionSpec, amplitude_pdf, closed_form_lt, cumulants, reference_pdf
from .errors import ClutterForgeError
from .pade import PadeApproximant, PoleResidueForm, filter_poles, fit, to_pole_residue
from .sampler import (
    ClutterSequence,
    PipelineConfig,
    RngStream,
    TextureSequence,
    assemble_cg,
    run_pipeline,
    sample_u,
    sample_zj,
)
from .validate import ValidationReport, empirical_acf, empirical_lt, empirical_pdf, mae, monte_carlo

__all__ = [
    "ACFSpec",
    "ARModel",
    "ClutterForgeError",
    "ClutterSequence",
    "CumulantVector",
    "DistributionSpec",
    "ILTParams",
    "MomentVector",
    "PadeApproximant",
    "PipelineConfig",
    "PoleResidueForm",
    "PowerSeries",
    "RecoveredLT",
    "RngStream",
    "TextureSequence",
    "ValidationReport",
    "amplitude_pdf",
    "ar_output_lt",
    "ar_output_pdf",
    "assemble_cg",
    "backsolve_input_cumulants",
    "build_series",
    "closed_form_lt",
    "component_pdf_zj",
    "convergence_radius_estimate",
    "cumulants",
    "cumulants_to_moments",
    "empirical_acf",
    "empirical_lt",
    "empirical_pdf",
    "eval_lt",
    "exp_cosine_acf",
    "filter_poles",
    "fit",
    "mae",
    "moments_to_cumulants",
    "monte_carlo",
    "pdf_via_fft_ilt",
    "recover_lt",
    "reference_pdf",
    "run_pipeline",
    "sample_u",
    "sample_zj",
    "to_pole_residue",
    "yule_walker",
]
