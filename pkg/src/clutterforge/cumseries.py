"""Cumulant and moment algebra.

Bell-polynomial conversion between cumulants and raw moments, back-solving
the cumulants of a filter's white input from those of its output, and
construction of the two power series handed to the rational continuation:
the Taylor expansion of the Laplace transform (moment kind) and the
re-indexed expansion of its logarithm (cumulant kind).

Vectors and series optionally carry an extended-precision mirror (``hp``,
a tuple of mpmath values).  The Hankel systems of the continuation step
run at condition numbers around 1e16, where double-rounded coefficients
alone cap the recovered-transform accuracy near 1e-2; every operation here
propagates the mirror so the precision decision stays at the fit.
"""

import math

import mpmath as mp
import numpy as np

from .errors import InsufficientOrders, NearSingularFilterPowerSum

MOMENT = "moment"
CUMULANT = "cumulant"

# Relative degeneracy threshold for filter power sums: iota_n is rejected
# when |iota_n| < IOTA_RTOL * (sum |h_i|)^n.
IOTA_RTOL = 1e-8

# Working precision (decimal digits) for the extended mirror; chosen to
# leave ~30 digits of headroom over the worst observed Hankel conditioning.
HP_DPS = 50


class CumulantVector:
    """Ordered cumulants kappa_1..kappa_N of a scalar random variable."""

    __slots__ = ("kappa", "hp")

    def __init__(self, kappa, hp=None):
        k = np.atleast_1d(np.asarray(kappa, dtype=float))
        if k.ndim != 1 or k.size < 1:
            raise ValueError("cumulant vector must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(k)):
            raise ValueError("cumulants must be finite")
        if hp is not None and len(hp) != k.size:
            raise ValueError("extended-precision mirror length mismatch")
        self.kappa = k
        self.hp = None if hp is None else tuple(hp)

    @property
    def order(self):
        return self.kappa.size

    def __len__(self):
        return self.kappa.size

    def __repr__(self):
        return f"CumulantVector({np.array2string(self.kappa, max_line_width=70)})"


class MomentVector:
    """Raw moments M_0..M_N, with M_0 = 1."""

    __slots__ = ("m", "hp")

    def __init__(self, m, hp=None):
        v = np.atleast_1d(np.asarray(m, dtype=float))
        if v.ndim != 1 or v.size < 1:
            raise ValueError("moment vector must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("moments must be finite")
        if abs(v[0] - 1.0) > 1e-12:
            raise ValueError(f"M_0 must equal 1, got {v[0]!r}")
        if v.size >= 3 and v[2] < v[1] ** 2 - 1e-9 * max(1.0, v[1] ** 2):
            raise ValueError("M_2 < M_1^2: negative variance")
        if hp is not None and len(hp) != v.size:
            raise ValueError("extended-precision mirror length mismatch")
        self.m = v
        self.hp = None if hp is None else tuple(hp)

    @property
    def order(self):
        return self.m.size - 1

    def __len__(self):
        return self.m.size

    def __repr__(self):
        return f"MomentVector({np.array2string(self.m, max_line_width=70)})"


class PowerSeries:
    """Coefficients c_0..c_N of one of the two expansions around s = 0.

    ``kind = "moment"``: L(s) = sum_n c_n s^n with c_n = (-1)^n M_n / n!.
    ``kind = "cumulant"``: log L(s) = -s * g(s) where g(s) = sum_n c_n s^n
    and c_n = (-1)^n kappa_{n+1} / (n+1)!.  The leading -s factor is not
    stored; evaluation code reattaches it.
    """

    __slots__ = ("c", "kind", "hp")

    def __init__(self, c, kind, hp=None):
        if kind not in (MOMENT, CUMULANT):
            raise ValueError(f"kind must be '{MOMENT}' or '{CUMULANT}', got {kind!r}")
        v = np.atleast_1d(np.asarray(c, dtype=float))
        if v.ndim != 1 or v.size < 1:
            raise ValueError("coefficient list must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValueError("coefficients must be finite")
        if kind == MOMENT and abs(v[0] - 1.0) > 1e-12:
            raise ValueError("moment-kind series must start with c_0 = 1")
        if hp is not None and len(hp) != v.size:
            raise ValueError("extended-precision mirror length mismatch")
        self.c = v
        self.kind = kind
        self.hp = None if hp is None else tuple(hp)

    def __len__(self):
        return self.c.size

    def __repr__(self):
        return f"PowerSeries(kind={self.kind!r}, n={self.c.size})"


def cumulants_to_moments(k):
    """Raw moments from cumulants via the complete Bell recurrence.

    M_0 = 1 and M_{n+1} = sum_{i=0}^{n} C(n, i) M_{n-i} kappa_{i+1}.
    """
    kv = k if isinstance(k, CumulantVector) else CumulantVector(k)
    if kv.hp is not None:
        with mp.workdps(HP_DPS):
            m = [mp.mpf(1)]
            for n in range(len(kv.hp)):
                m.append(
                    mp.fsum(math.comb(n, i) * m[n - i] * kv.hp[i] for i in range(n + 1))
                )
        return MomentVector([float(x) for x in m], hp=m)
    kap = kv.kappa
    m = np.empty(kap.size + 1)
    m[0] = 1.0
    for n in range(kap.size):
        m[n + 1] = sum(math.comb(n, i) * m[n - i] * kap[i] for i in range(n + 1))
    return MomentVector(m)


def moments_to_cumulants(m):
    """Exact inverse of :func:`cumulants_to_moments`.

    Solves the same recurrence for kappa_{n+1}, peeling off the i = n term.
    """
    mo = m if isinstance(m, MomentVector) else MomentVector(m)
    if mo.hp is not None:
        with mp.workdps(HP_DPS):
            kap = []
            for n in range(len(mo.hp) - 1):
                acc = mo.hp[n + 1]
                for i in range(n):
                    acc -= math.comb(n, i) * mo.hp[n - i] * kap[i]
                kap.append(acc)
        return CumulantVector([float(x) for x in kap], hp=kap)
    mv = mo.m
    n_ord = mv.size - 1
    kap = np.empty(n_ord)
    for n in range(n_ord):
        acc = mv[n + 1]
        for i in range(n):
            acc -= math.comb(n, i) * mv[n - i] * kap[i]
        kap[n] = acc
    return CumulantVector(kap)


def filter_power_sums(h, n_max):
    """iota_n = sum_i h_i^n for n = 1..n_max."""
    h = np.asarray(h, dtype=float)
    n = np.arange(1, n_max + 1)
    return np.sum(h[None, :] ** n[:, None], axis=1)


def backsolve_input_cumulants(k_out, h):
    """Cumulants of the white input of an all-pole filter from the output's.

    For y(m) = sum_i h_i u(m - i) the cumulants relate order by order as
    kappa_{Y,n} = iota_n kappa_{U,n}, so the input is recovered by division.
    Raises :class:`NearSingularFilterPowerSum` when some |iota_n| falls below
    ``IOTA_RTOL * sum_i |h_i|^n``, the cancellation measure for
    sign-alternating impulse responses (even orders can never trip it).
    """
    kv = k_out if isinstance(k_out, CumulantVector) else CumulantVector(k_out)
    h = np.asarray(h, dtype=float)
    iota = filter_power_sums(h, kv.order)
    iota_abs = filter_power_sums(np.abs(h), kv.order)
    for n, (val, scale_n) in enumerate(zip(iota, iota_abs), start=1):
        if abs(val) < IOTA_RTOL * scale_n:
            raise NearSingularFilterPowerSum(n, val)
    if kv.hp is not None:
        # float -> mpf casts are exact, so the mirror loses nothing here.
        with mp.workdps(HP_DPS):
            hm = [mp.mpf(float(x)) for x in h]
            hp = [
                kv.hp[n - 1] / mp.fsum(x**n for x in hm)
                for n in range(1, kv.order + 1)
            ]
        return CumulantVector([float(x) for x in hp], hp=hp)
    return CumulantVector(kv.kappa / iota)


def build_series(vec, kind):
    """Series coefficients for the requested continuation kind.

    ``vec`` is a :class:`MomentVector` (or raw M_0.. sequence) for the moment
    kind, a :class:`CumulantVector` (or raw kappa_1.. sequence) otherwise.
    """
    hp = None
    if kind == MOMENT:
        mo = vec if isinstance(vec, MomentVector) else MomentVector(vec)
        m = mo.m
        if m.size < 1:
            raise InsufficientOrders("moment series needs at least M_0")
        c = np.array([(-1.0) ** n * m[n] / math.factorial(n) for n in range(m.size)])
        if mo.hp is not None:
            with mp.workdps(HP_DPS):
                hp = [(-1) ** n * mo.hp[n] / math.factorial(n) for n in range(len(mo.hp))]
    elif kind == CUMULANT:
        kv = vec if isinstance(vec, CumulantVector) else CumulantVector(vec)
        kap = kv.kappa
        if kap.size < 1:
            raise InsufficientOrders("cumulant series needs at least kappa_1")
        c = np.array(
            [(-1.0) ** n * kap[n] / math.factorial(n + 1) for n in range(kap.size)]
        )
        if kv.hp is not None:
            with mp.workdps(HP_DPS):
                hp = [
                    (-1) ** n * kv.hp[n] / math.factorial(n + 1)
                    for n in range(len(kv.hp))
                ]
    else:
        raise ValueError(f"unknown series kind {kind!r}")
    return PowerSeries(c, kind, hp=hp)


def convergence_radius_estimate(series):
    """Estimate of 1 / limsup |c_n|^(1/n) from the tail half of the series.

    Least-squares slope of log |c_n| against n over the tail; diagnostic
    only.  Returns +inf when the tail decays superexponentially (slope keeps
    steepening) or is identically zero.
    """
    c = series.c if isinstance(series, PowerSeries) else np.asarray(series, float)
    if c.size < 8:
        raise ValueError("radius estimate needs at least 8 coefficients")
    start = c.size // 2
    idx = np.array([n for n in range(start, c.size) if c[n] != 0.0])
    if idx.size < 4:
        return math.inf
    logc = np.log(np.abs(c[idx]))
    slope = np.polyfit(idx, logc, 1)[0]
    # Superexponential decay shows as a steepening slope between the two
    # halves of the tail window; a geometric tail keeps it flat.
    half = idx.size // 2
    if half >= 2 and idx.size - half >= 2:
        s1 = np.polyfit(idx[:half], logc[:half], 1)[0]
        s2 = np.polyfit(idx[half:], logc[half:], 1)[0]
        if s2 - s1 < -0.1:
            return math.inf
    return float(np.exp(-slope))
