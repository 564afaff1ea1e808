"""Texture synthesis: exact product-form sampling driven through an AR filter.

The driving noise of the texture filter has transform
L_U(s) = prod_j exp(-lambda_j s / (s + a_j)); each factor is a compound
Poisson sum of exponentials, so one draw is Gamma(N_j, 1/a_j) with
N_j ~ Poisson(lambda_j), summed over j.  The filter then imposes the
prescribed autocorrelation, and the compound-Gaussian sequence follows as
sqrt(V) times circular Gaussian speckle.
"""

import numpy as np
from scipy.signal import lfilter

from . import pade
from .armodel import TRUNCATION_THRESHOLD, ACFSpec, ARModel, yule_walker
from .continuation import recover_lt
from .cumseries import CUMULANT, backsolve_input_cumulants, build_series
from .dist import cumulants
from .errors import ClutterForgeError, PipelineError, WrongForm

WARMUP_MULT = 5


class RngStream:
    """Splittable deterministic random stream (Philox counter generator)."""

    __slots__ = ("seed_seq", "gen")

    def __init__(self, seed=None, _ss=None):
        self.seed_seq = _ss if _ss is not None else np.random.SeedSequence(seed)
        self.gen = np.random.Generator(np.random.Philox(self.seed_seq))

    def split(self, n):
        """n independent child streams; parent stays usable."""
        return [RngStream(_ss=child) for child in self.seed_seq.spawn(int(n))]

    @property
    def entropy(self):
        return self.seed_seq.entropy

    def __repr__(self):
        return f"RngStream(entropy={self.entropy})"


def sample_zj(a_j, lam_j, n, rng):
    """Draws of one product-form component: Gamma(N, 1/a_j), N ~ Poisson(lam_j).

    N = 0 yields an exact zero, reproducing the component's point mass
    exp(-lam_j) at the origin.
    """
    if a_j <= 0 or lam_j <= 0:
        raise ValueError("a_j and lam_j must be positive")
    k = rng.gen.poisson(lam_j, size=int(n))
    z = np.zeros(int(n))
    pos = k > 0
    if np.any(pos):
        z[pos] = rng.gen.standard_gamma(k[pos]) / a_j
    return z


def sample_u(prf, n, rng):
    """Exact draws of the filter input U = sum_j Z_j from a product form."""
    if prf.form != pade.PRODUCT_OF_EXPONENTIALS:
        raise WrongForm("exact sampling needs the product_exp form")
    if not prf.is_real_positive():
        raise WrongForm("exact sampling needs real positive poles and weights")
    u = np.zeros(int(n))
    for a_j, lam_j in zip(prf.a.real, prf.lam.real):
        u += sample_zj(a_j, lam_j, n, rng)
    return u


class PipelineConfig:
    """Run parameters for texture synthesis.

    ``ar_coeffs`` (difference-equation sign, y = -sum a_k y_[m-k] + u) takes
    precedence over fitting an AR(``ar_order``) model to the prescribed
    autocorrelation.  ``warmup_mult`` sets the discarded transient length in
    units of the impulse-response truncation lag.
    """

    __slots__ = (
        "length",
        "seed",
        "ar_order",
        "ar_coeffs",
        "trunc_threshold",
        "pade_k",
        "pade_l",
        "scan_min",
        "warmup_mult",
    )

    def __init__(
        self,
        length,
        seed=None,
        ar_order=None,
        ar_coeffs=None,
        trunc_threshold=TRUNCATION_THRESHOLD,
        pade_k=16,
        pade_l=17,
        scan_min=8,
        warmup_mult=WARMUP_MULT,
    ):
        self.length = int(length)
        if self.length < 1:
            raise ValueError("length must be positive")
        if ar_coeffs is None and ar_order is None:
            raise ValueError("either ar_coeffs or ar_order is required")
        self.seed = seed
        self.ar_order = None if ar_order is None else int(ar_order)
        self.ar_coeffs = None if ar_coeffs is None else np.asarray(ar_coeffs, dtype=float)
        self.trunc_threshold = float(trunc_threshold)
        self.pade_k = int(pade_k)
        self.pade_l = int(pade_l)
        self.scan_min = int(scan_min)
        self.warmup_mult = int(warmup_mult)

    def to_json(self):
        return {
            "length": self.length,
            "seed": self.seed,
            "ar_order": self.ar_order,
            "ar_coeffs": None if self.ar_coeffs is None else [float(x) for x in self.ar_coeffs],
            "trunc_threshold": self.trunc_threshold,
            "pade_k": self.pade_k,
            "pade_l": self.pade_l,
            "scan_min": self.scan_min,
            "warmup_mult": self.warmup_mult,
        }


class TextureSequence:
    """Synthesized texture with everything needed to audit the run."""

    __slots__ = ("samples", "model", "rlt", "spec", "config", "negative_count", "diagnostics")

    def __init__(self, samples, model, rlt, spec, config, negative_count, diagnostics):
        self.samples = samples
        self.model = model
        self.rlt = rlt
        self.spec = spec
        self.config = config
        self.negative_count = negative_count
        self.diagnostics = diagnostics

    def __len__(self):
        return self.samples.size

    def to_json(self):
        return {
            "distribution": self.spec.to_json(),
            "config": self.config.to_json(),
            "transform": self.rlt.to_json(),
            "negative_count": self.negative_count,
            "diagnostics": self.diagnostics,
        }


def run_pipeline(spec, acf, config, rng=None):
    """Full texture synthesis: cumulants -> filter -> backsolve -> sample.

    Stages raise :class:`PipelineError` naming the failing step with the
    underlying error chained, so a bad configuration is attributable.
    """
    if rng is None:
        rng = RngStream(config.seed)
    n_orders = config.pade_k + config.pade_l + 2

    def stage(name, fn):
        try:
            return fn()
        except ClutterForgeError as exc:
            raise PipelineError(name, exc) from exc

    kap_y = stage("target_cumulants", lambda: cumulants(spec, n_orders))

    def build_model():
        if config.ar_coeffs is not None:
            return ARModel(config.ar_coeffs, config.trunc_threshold)
        return yule_walker(acf, config.ar_order, config.trunc_threshold)

    model = stage("ar_model", build_model)
    iota = model.power_sums(n_orders)
    kap_u = stage("backsolve", lambda: backsolve_input_cumulants(kap_y, model.h))
    series = stage("series", lambda: build_series(kap_u, CUMULANT))
    rlt = stage(
        "recover_lt",
        lambda: recover_lt(series, config.pade_k, config.pade_l, config.scan_min),
    )

    warmup = config.warmup_mult * model.L_IR
    u = stage("sample", lambda: sample_u(rlt.prf, config.length + warmup, rng))
    # Center the input with the sampler's own mean so the filtered output
    # can be re-anchored exactly at the target first cumulant.
    m_u = float(np.sum(rlt.prf.lam.real / rlt.prf.a.real))
    y = lfilter([1.0], np.concatenate([[1.0], model.a]), u - m_u)[warmup:]
    v = y + kap_y.kappa[0]
    negative_count = int(np.sum(v < 0))

    diagnostics = {
        "kappa_y": [float(x) for x in kap_y.kappa],
        "kappa_u": [float(x) for x in kap_u.kappa],
        "iota": [float(x) for x in iota],
        "ar_a": [float(x) for x in model.a],
        "L_IR": model.L_IR,
        "warmup": warmup,
        "sampler_mean": m_u,
        "n_poles": int(rlt.prf.a.size),
        "discarded_poles": rlt.prf.discarded_count,
    }
    return TextureSequence(v, model, rlt, spec, config, negative_count, diagnostics)


class ClutterSequence:
    """Complex compound-Gaussian sequence plus the texture that drove it."""

    __slots__ = ("x", "v", "texture", "clamped_count")

    def __init__(self, x, v, texture, clamped_count):
        self.x = x
        self.v = v
        self.texture = texture
        self.clamped_count = clamped_count

    def __len__(self):
        return self.x.size

    def amplitude(self):
        return np.abs(self.x)


def assemble_cg(texture, rng, speckle_a=None):
    """Compound-Gaussian samples X = sqrt(V) (Z_I + j Z_Q), Z ~ N(0, 2).

    ``texture`` is a :class:`TextureSequence` or a plain texture array.
    Negative texture excursions (possible after filtering) are clamped to
    zero and counted.  ``speckle_a`` optionally shapes the speckle spectrum
    with an all-pole filter (difference-equation sign), renormalized to
    keep unit speckle power per quadrature pair.
    """
    if isinstance(texture, TextureSequence):
        v_raw = texture.samples
        tex = texture
    else:
        v_raw = np.asarray(texture, dtype=float)
        tex = None
    clamped = int(np.sum(v_raw < 0))
    v = np.clip(v_raw, 0.0, None)
    n = v.size
    z = rng.gen.normal(0.0, np.sqrt(2.0), size=n) + 1j * rng.gen.normal(
        0.0, np.sqrt(2.0), size=n
    )
    if speckle_a is not None:
        model = ARModel(speckle_a)
        z = lfilter([1.0], np.concatenate([[1.0], model.a]), z)
        z /= np.sqrt(model.power_sums(2)[1])
    x = np.sqrt(v) * z
    return ClutterSequence(x, v, tex, clamped)
