"""Target marginal distributions for clutter textures.

Two families: gamma, and the positive tempered alpha-stable (PTaS) law
defined through its Laplace transform

    L_V(s) = exp[(gamma / (alpha eta^alpha)) (1 - (eta s + 1)^alpha)].

Closed-form transforms and cumulants, reference densities (numerical
inversion for PTaS), and the compound-Gaussian amplitude mixing integral.
"""

import math
import warnings

import mpmath as mp
import numpy as np
from scipy.special import gammaln, gammasgn

from .cumseries import HP_DPS, CumulantVector

__all__ = [
    "DistributionSpec",
    "closed_form_lt",
    "cumulants",
    "reference_pdf",
    "amplitude_pdf",
]


class DistributionSpec:
    """Texture marginal: family plus parameters.

    ``gamma``: alpha = shape, scale = the scale parameter lambda.
    ``ptas``: alpha = characteristic exponent, scale = the scale parameter
    gamma, eta = truncation parameter.  alpha is accepted on (0, 2) but a
    warning is emitted outside (0, 1], where the defining transform is no
    longer a completely monotone exponent; values there are kept for
    exploratory use, never remapped.
    """

    __slots__ = ("family", "alpha", "scale", "eta")

    def __init__(self, family, alpha, scale, eta=None):
        if family not in ("gamma", "ptas"):
            raise ValueError(f"family must be 'gamma' or 'ptas', got {family!r}")
        alpha = float(alpha)
        scale = float(scale)
        if not (alpha > 0 and scale > 0):
            raise ValueError("alpha and scale must be positive")
        if family == "gamma":
            if eta is not None:
                raise ValueError("eta is a ptas parameter")
        else:
            if eta is None or float(eta) <= 0:
                raise ValueError("ptas requires eta > 0")
            eta = float(eta)
            if alpha >= 2:
                raise ValueError("ptas alpha must lie in (0, 2)")
            if alpha > 1:
                warnings.warn(
                    f"ptas alpha = {alpha} lies outside (0, 1]; the transform "
                    "is not a valid Laplace transform there",
                    stacklevel=2,
                )
        self.family = family
        self.alpha = alpha
        self.scale = scale
        self.eta = eta

    @classmethod
    def gamma(cls, alpha, scale):
        return cls("gamma", alpha, scale)

    @classmethod
    def ptas(cls, alpha, scale, eta):
        return cls("ptas", alpha, scale, eta)

    def to_json(self):
        if self.family == "gamma":
            return {"family": "gamma", "alpha": self.alpha, "lambda": self.scale}
        return {"family": "ptas", "alpha": self.alpha, "gamma": self.scale, "eta": self.eta}

    @classmethod
    def from_json(cls, obj):
        family = obj.get("family")
        if family == "gamma":
            extra = set(obj) - {"family", "alpha", "lambda"}
            if extra:
                raise ValueError(f"unknown distribution keys: {sorted(extra)}")
            return cls("gamma", obj["alpha"], obj["lambda"])
        if family == "ptas":
            extra = set(obj) - {"family", "alpha", "gamma", "eta"}
            if extra:
                raise ValueError(f"unknown distribution keys: {sorted(extra)}")
            return cls("ptas", obj["alpha"], obj["gamma"], obj["eta"])
        raise ValueError(f"unknown distribution family {family!r}")

    def __repr__(self):
        if self.family == "gamma":
            return f"DistributionSpec.gamma(alpha={self.alpha}, scale={self.scale})"
        return f"DistributionSpec.ptas(alpha={self.alpha}, scale={self.scale}, eta={self.eta})"


def closed_form_lt(spec, s):
    """Laplace transform L_V(s) of the texture marginal, Re(s) >= 0.

    gamma: (1 + lambda s)^(-alpha).  ptas: see the module docstring; the
    complex power uses the principal branch, which Re(s) >= 0 keeps away
    from the cut.  Accepts scalars or arrays.
    """
    arr = np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("s must be finite")
    if spec.family == "gamma":
        out = (1.0 + spec.scale * arr) ** (-spec.alpha)
    else:
        a = spec.alpha
        coef = spec.scale / (a * spec.eta**a)
        out = np.exp(coef * (1.0 - (spec.eta * arr + 1.0) ** a))
    if np.ndim(s) == 0:
        return complex(out)
    return out


def cumulants(spec, n_max):
    """First ``n_max`` cumulants of the texture marginal.

    gamma: kappa_n = alpha lambda^n Gamma(n).
    ptas:  kappa_n = gamma eta^(n - alpha) Gamma(n - alpha) / Gamma(1 - alpha).

    Gamma factors are evaluated in log space with sign tracking so large
    orders do not overflow intermediates; a result outside float range
    raises OverflowError.  The returned vector also carries the
    extended-precision mirror the continuation fit needs (its Hankel
    systems lose ~16 digits, so double-rounded cumulants are not enough).
    """
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(1, n_max + 1, dtype=float)
    if spec.family == "gamma":
        logk = math.log(spec.alpha) + n * math.log(spec.scale) + gammaln(n)
        kap = np.exp(logk)
        with mp.workdps(HP_DPS):
            al, lam = mp.mpf(spec.alpha), mp.mpf(spec.scale)
            hp = [al * lam**k * mp.factorial(k - 1) for k in range(1, n_max + 1)]
    else:
        a, g, eta = spec.alpha, spec.scale, spec.eta
        with np.errstate(over="ignore", invalid="ignore"):
            sign = gammasgn(n - a) * gammasgn(1.0 - a)
            logk = (
                math.log(g)
                + (n - a) * math.log(eta)
                + gammaln(n - a)
                - gammaln(1.0 - a)
            )
            kap = sign * np.exp(logk)
        # n = 1 has Gamma(1-alpha)/Gamma(1-alpha) = 1 identically; evaluating
        # it directly also covers alpha = 1, where the ratio is 0/0 above.
        kap[0] = g * eta ** (1.0 - a)
        with mp.workdps(HP_DPS):
            am, gm, em = mp.mpf(a), mp.mpf(g), mp.mpf(eta)
            # gammaprod handles the alpha = 1 pole of Gamma(1 - alpha)
            # (ratio -> 0 for k >= 2) without special-casing.
            hp = [gm * em ** (1 - am)]
            hp += [
                gm * em ** (k - am) * mp.gammaprod([k - am], [1 - am])
                for k in range(2, n_max + 1)
            ]
    if not np.all(np.isfinite(kap)):
        bad = int(np.flatnonzero(~np.isfinite(kap))[0]) + 1
        raise OverflowError(f"cumulant kappa_{bad} exceeds float range")
    return CumulantVector(kap, hp=hp)


def reference_pdf(spec, grid, ilt_params=None):
    """Marginal density on a strictly positive, ascending grid.

    The gamma branch is closed form.  The ptas branch inverts the
    closed-form transform numerically; inversion ringing (order 1e-9 on
    these transforms) is clamped to zero so the result is a density.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly positive and ascending")
    if spec.family == "gamma":
        a, lam = spec.alpha, spec.scale
        logf = (a - 1.0) * np.log(grid) - grid / lam - a * math.log(lam) - gammaln(a)
        return np.exp(logf)
    from .continuation import pdf_via_fft_ilt

    f = pdf_via_fft_ilt(lambda s: closed_form_lt(spec, s), grid, ilt_params)
    return np.clip(f, 0.0, None)


def amplitude_pdf(v_grid, texture_pdf, r_grid):
    """Compound-Gaussian amplitude density from a texture density.

    f_R(r) = integral (r / 2v) exp(-r^2 / 4v) f_V(v) dv, evaluated by
    trapezoidal quadrature over ``v_grid`` (log-spaced grids recommended
    for heavy-tailed textures).  The texture density must carry at least
    99 percent of its mass on the grid.
    """
    v = np.asarray(v_grid, dtype=float)
    fv = np.asarray(texture_pdf, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    if v.shape != fv.shape or v.ndim != 1:
        raise ValueError("texture grid and density must be matching 1-d arrays")
    if np.any(v <= 0) or np.any(np.diff(v) <= 0):
        raise ValueError("v_grid must be strictly positive and ascending")
    mass = np.trapezoid(fv, v)
    if not 0.99 <= mass <= 1.01:
        raise ValueError(
            f"texture grid captures mass {mass:.4f}; need [0.99, 1.01] "
            "(widen the grid or renormalize)"
        )
    rr = r[:, None]
    integrand = (rr / (2.0 * v[None, :])) * np.exp(-(rr**2) / (4.0 * v[None, :])) * fv[None, :]
    return np.trapezoid(integrand, v, axis=1)
