"""Autoregressive model construction from a prescribed autocorrelation.

The difference-equation convention throughout is

    y(m) = -sum_{k=1}^{p} a_k y(m - k) + u(m),

so the transfer function is 1 / (1 + sum_k a_k z^-k) and the impulse
response obeys h_0 = 1, h_i = -sum_k a_k h_{i-k}.  Configuration files use
the opposite (regression) sign, y(m) = sum_k c_k y(m-k) + u(m); converters
negate on the way in and out.
"""

import numpy as np

from .cumseries import CumulantVector
from .errors import (
    NotPositiveDefinite,
    SingularCumulantSystem,
    TruncationCapExceeded,
    UnstableModel,
)

TRUNCATION_THRESHOLD = 1e-3
TRUNCATION_CAP = 10**6


def exp_cosine_acf(t0, T0, d_mod, f_a, n_lags):
    """Exponentially attenuated cosine autocorrelation, sampled at lags k/f_a.

    r(tau) = exp(-tau / t0) [d_mod cos(2 pi tau / T0) + (1 - d_mod)]
    with decorrelation time t0, variation period T0, and modulation depth
    d_mod in (0, 1).
    """
    if not 0 < d_mod < 1:
        raise ValueError("d_mod must lie in (0, 1)")
    if t0 <= 0 or T0 <= 0 or f_a <= 0:
        raise ValueError("t0, T0 and f_a must be positive")
    tau = np.arange(int(n_lags)) / f_a
    return np.exp(-tau / t0) * (d_mod * np.cos(2.0 * np.pi * tau / T0) + (1.0 - d_mod))


class ACFSpec:
    """Prescribed normalized autocorrelation.

    Either explicit values r_0..r_P (r_0 = 1) or the exp-cosine family
    sampled at the pulse repetition frequency ``f_a``.
    """

    __slots__ = ("kind", "_lags", "t0", "T0", "d_mod", "f_a")

    def __init__(self, kind, lags=None, t0=None, T0=None, d_mod=None, f_a=None):
        if kind == "lags":
            v = np.asarray(lags, dtype=float)
            if v.ndim != 1 or v.size < 1:
                raise ValueError("explicit ACF must be a nonempty 1-d sequence")
            if abs(v[0] - 1.0) > 1e-12:
                raise ValueError("r_0 must equal 1")
            if np.any(np.abs(v) > 1.0 + 1e-12):
                raise ValueError("|r_k| must not exceed 1")
            self._lags = v
            self.t0 = self.T0 = self.d_mod = self.f_a = None
        elif kind == "exp_cosine":
            if f_a is None:
                raise ValueError("exp_cosine ACF needs the sampling rate f_a")
            # Parameter validation happens in exp_cosine_acf.
            exp_cosine_acf(t0, T0, d_mod, f_a, 1)
            self._lags = None
            self.t0, self.T0, self.d_mod, self.f_a = float(t0), float(T0), float(d_mod), float(f_a)
        else:
            raise ValueError(f"unknown ACF kind {kind!r}")
        self.kind = kind

    @classmethod
    def from_lags(cls, values):
        return cls("lags", lags=values)

    @classmethod
    def exp_cosine(cls, t0, T0, d_mod, f_a):
        return cls("exp_cosine", t0=t0, T0=T0, d_mod=d_mod, f_a=f_a)

    def lags(self, n):
        """First ``n`` lags r_0..r_{n-1}."""
        n = int(n)
        if self.kind == "lags":
            if n > self._lags.size:
                raise ValueError(
                    f"prescribed ACF supplies {self._lags.size} lags, {n} requested"
                )
            return self._lags[:n].copy()
        return exp_cosine_acf(self.t0, self.T0, self.d_mod, self.f_a, n)

    def to_json(self):
        if self.kind == "lags":
            return {"lags": [float(x) for x in self._lags]}
        return {"model": "exp_cosine", "t0": self.t0, "T0": self.T0, "d": self.d_mod}

    @classmethod
    def from_json(cls, obj, f_a=None):
        if "lags" in obj:
            extra = set(obj) - {"lags"}
            if extra:
                raise ValueError(f"unknown acf keys: {sorted(extra)}")
            return cls.from_lags(obj["lags"])
        if obj.get("model") == "exp_cosine":
            extra = set(obj) - {"model", "t0", "T0", "d"}
            if extra:
                raise ValueError(f"unknown acf keys: {sorted(extra)}")
            return cls.exp_cosine(obj["t0"], obj["T0"], obj["d"], f_a)
        raise ValueError("acf must supply either 'lags' or model 'exp_cosine'")

    def __repr__(self):
        if self.kind == "lags":
            return f"ACFSpec.from_lags(<{self._lags.size} lags>)"
        return (
            f"ACFSpec.exp_cosine(t0={self.t0}, T0={self.T0}, "
            f"d_mod={self.d_mod}, f_a={self.f_a})"
        )


def impulse_response(a, threshold=TRUNCATION_THRESHOLD, cap=TRUNCATION_CAP):
    """Truncated impulse response of a stable all-pole filter.

    h_0 = 1, h_i = -sum_k a_k h_{i-k}.  Truncation keeps everything up to
    and including the lag at which |h_i| has stayed below ``threshold`` for
    p consecutive lags; the hold-down avoids cutting an oscillatory
    response at an early envelope dip.  Returns (h, L_IR).
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.array([1.0]), 0
    roots = np.roots(np.concatenate([[1.0], a]))
    if np.any(np.abs(roots) >= 1.0 - 1e-12):
        raise UnstableModel(
            f"characteristic root of modulus {np.max(np.abs(roots)):.6f} >= 1"
        )
    p = a.size
    h = [1.0]
    run = 0
    i = 0
    while run < p:
        i += 1
        if i > cap:
            raise TruncationCapExceeded(f"impulse response exceeds {cap} lags")
        hi = -float(np.dot(a[: min(i, p)], h[-1 : -min(i, p) - 1 : -1]))
        h.append(hi)
        run = run + 1 if abs(hi) < threshold else 0
    return np.asarray(h), i


class ARModel:
    """Stable AR(p) model: coefficients, truncated impulse response, power sums."""

    __slots__ = ("a", "h", "_iota")

    def __init__(self, a, threshold=TRUNCATION_THRESHOLD):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.h, _ = impulse_response(self.a, threshold)
        self._iota = {}

    @classmethod
    def from_regression_coeffs(cls, coeffs, threshold=TRUNCATION_THRESHOLD):
        """Build from coefficients of y(m) = sum_k c_k y(m-k) + u(m)."""
        return cls(-np.atleast_1d(np.asarray(coeffs, dtype=float)), threshold)

    @property
    def order(self):
        return self.a.size

    @property
    def L_IR(self):
        return self.h.size - 1

    def regression_coeffs(self):
        return -self.a

    def power_sums(self, n_max):
        """iota_1..iota_n_max, cached."""
        key = int(n_max)
        if key not in self._iota:
            n = np.arange(1, key + 1)
            self._iota[key] = np.sum(self.h[None, :] ** n[:, None], axis=1)
        return self._iota[key]

    def theoretical_acf(self, n_lags):
        """Normalized stationary autocorrelation r_0..r_{n_lags-1}."""
        n_lags = int(n_lags)
        p = self.order
        phi = -self.a
        r = np.zeros(max(n_lags, p + 1))
        r[0] = 1.0
        if p > 0:
            # Stationary lags satisfy r_m = sum_k phi_k r_{|m-k|}; solve the
            # p x p system for r_1..r_p with r_0 = 1 known.
            M = np.zeros((p, p))
            rhs = np.zeros(p)
            for m in range(1, p + 1):
                for k in range(1, p + 1):
                    d = abs(m - k)
                    if d == 0:
                        rhs[m - 1] += phi[k - 1]
                    else:
                        M[m - 1, d - 1] += phi[k - 1]
            r[1 : p + 1] = np.linalg.solve(np.eye(p) - M, rhs)
            for m in range(p + 1, r.size):
                r[m] = np.dot(phi, r[m - 1 : m - p - 1 : -1] if p > 1 else r[m - 1 : m])
        return r[:n_lags].copy()

    def __repr__(self):
        return f"ARModel(order={self.order}, L_IR={self.L_IR})"


def yule_walker(acf, p, threshold=TRUNCATION_THRESHOLD):
    """Fit a stable AR(p) model to prescribed autocorrelation lags.

    ``acf`` is an :class:`ACFSpec` or an array r_0..r_{>=p}.  The Toeplitz
    system is solved by the Levinson-Durbin recursion; reflection
    coefficients outside (-1, 1) mean the autocorrelation matrix is not
    positive definite.
    """
    p = int(p)
    if p < 1:
        raise ValueError("order p must be >= 1")
    r = acf.lags(p + 1) if isinstance(acf, ACFSpec) else np.asarray(acf, dtype=float)[: p + 1]
    if r.size < p + 1:
        raise ValueError(f"need lags 0..{p}, got {r.size}")
    if r[0] <= 0:
        raise NotPositiveDefinite("r_0 must be positive")
    r = r / r[0]
    phi = np.zeros(p + 1)
    err = 1.0
    for m in range(1, p + 1):
        k = (r[m] - np.dot(phi[1:m], r[m - 1 : 0 : -1])) / err
        if not abs(k) < 1.0:
            raise NotPositiveDefinite(
                f"reflection coefficient {m} has magnitude {abs(k):.6f} >= 1"
            )
        phi[1:m], phi[m] = phi[1:m] - k * phi[m - 1 : 0 : -1], k
        err *= 1.0 - k * k
        if err <= 0:
            raise NotPositiveDefinite(f"prediction error became {err:.3e} at order {m}")
    # impulse_response re-checks the characteristic roots; positive definite
    # input makes UnstableModel unreachable here.
    return ARModel(-phi[1:], threshold)


def mv_impulse_tensor(A, threshold=TRUNCATION_THRESHOLD, cap=TRUNCATION_CAP):
    """Matrix impulse response H_0 = I, H_i = -sum_k A_k H_{i-k}.

    ``A`` stacks the coefficient matrices A_1..A_p as shape (p, M, M).
    Truncates once the max-abs entry has stayed below ``threshold`` for p
    consecutive lags.  Returns the tensor of shape (L_IR + 1, M, M).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError("A must have shape (p, M, M)")
    p, M, _ = A.shape
    # Stability via the companion form of the stacked system.
    comp = np.zeros((p * M, p * M))
    comp[:M, :] = -A.transpose(1, 0, 2).reshape(M, p * M)
    if p > 1:
        comp[M:, : (p - 1) * M] = np.eye((p - 1) * M)
    if np.max(np.abs(np.linalg.eigvals(comp))) >= 1.0 - 1e-12:
        raise UnstableModel("companion spectral radius >= 1")
    H = [np.eye(M)]
    run = 0
    i = 0
    while run < p:
        i += 1
        if i > cap:
            raise TruncationCapExceeded(f"matrix impulse response exceeds {cap} lags")
        Hi = -sum(A[k] @ H[i - 1 - k] for k in range(min(i, p)))
        H.append(Hi)
        run = run + 1 if np.max(np.abs(Hi)) < threshold else 0
    return np.asarray(H)


class MultivariateARModel:
    """Coupled AR model with user-supplied coefficient matrices."""

    __slots__ = ("A", "H")

    def __init__(self, A, threshold=TRUNCATION_THRESHOLD):
        self.A = np.asarray(A, dtype=float)
        self.H = mv_impulse_tensor(self.A, threshold)

    @property
    def n_channels(self):
        return self.A.shape[1]

    @property
    def L_IR(self):
        return self.H.shape[0] - 1

    def __repr__(self):
        return f"MultivariateARModel(M={self.n_channels}, L_IR={self.L_IR})"


def mv_backsolve_cumulants(k_out, H, cond_cap=1e10):
    """Per-channel input cumulants of a coupled filter bank.

    For each order n the output cumulants satisfy
    kappa_{y_p, n} = sum_q G_n[p, q] kappa_{u_q, n} with
    G_n[p, q] = sum_i h_{i,p,q}^n; this solves the M x M system per order.
    ``k_out`` is a sequence of per-channel :class:`CumulantVector` (equal
    orders) or an (M, N) array.  Returns a list of CumulantVector.
    """
    if isinstance(k_out, np.ndarray):
        ky = np.asarray(k_out, dtype=float)
    else:
        ky = np.vstack([k.kappa if isinstance(k, CumulantVector) else np.asarray(k, float) for k in k_out])
    H = np.asarray(H, dtype=float)
    M = H.shape[1]
    if ky.shape[0] != M:
        raise ValueError(f"expected {M} channels, got {ky.shape[0]}")
    n_ord = ky.shape[1]
    ku = np.empty_like(ky)
    for n in range(1, n_ord + 1):
        G = np.sum(H**n, axis=0)
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond > cond_cap:
            raise SingularCumulantSystem(n, cond)
        ku[:, n - 1] = np.linalg.solve(G, ky[:, n - 1])
    return [CumulantVector(row) for row in ku]
