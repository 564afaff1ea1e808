"""Rational approximation of a power series and pole-residue structure.

A [K, L] approximant P(s)/Q(s) matches the series through order K + L.
The denominator solves the L x L Hankel-structured system

    sum_{j=1}^{L} Q_j c_{K+m-j} = -c_{K+m},   m = 1..L,  Q_0 = 1,

with c_i = 0 for i < 0, and the numerator follows from

    P_n = sum_{j=0}^{min(n, L)} c_{n-j} Q_j,   n = 0..K.

Partial-fraction decompositions feed either the exponential-mixture
density (sum-of-poles) or the exact compound Poisson-Erlang sampler
(product-of-exponentials), with hygiene filtering of unusable poles.
"""

import math
import warnings

import mpmath as mp
import numpy as np
import scipy.linalg

from .cumseries import HP_DPS, PowerSeries
from .errors import (
    AllPolesDiscarded,
    ClutterForgeError,
    ComplexPoleStructure,
    DegreeMismatch,
    InsufficientOrders,
    RepeatedRoots,
    SingularHankel,
    UnsupportedOrder,
)

SUM_OF_POLES = "sum_poles"
PRODUCT_OF_EXPONENTIALS = "product_exp"

# Imaginary parts below IM_SNAP_RTOL (relative) are rounding noise: snap real.
IM_SNAP_RTOL = 1e-6
# Conjugate pairs within PAIR_RTOL of each other may be consolidated into one
# real term, subject to probe verification at PAIR_PROBE_TOL absolute.
PAIR_RTOL = 1e-1
PAIR_PROBE_TOL = 1e-3
# Root clusters tighter than this (relative) count as repeated roots when the
# decomposition fails verification.
REPEATED_ROOT_RTOL = 1e-6


def _polyval_ascending(coeffs, s):
    """Evaluate sum_n coeffs[n] * s**n by Horner's rule."""
    out = np.zeros_like(np.asarray(s, dtype=complex))
    for c in coeffs[::-1]:
        out = out * s + c
    return out


class PadeApproximant:
    """Rational fit P/Q with Q_0 = 1; ``hankel_cond`` records conditioning."""

    __slots__ = ("p", "q", "hankel_cond")

    def __init__(self, p, q, hankel_cond=np.nan):
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        if self.q[0] != 1.0:
            raise ValueError("Q_0 must be 1")
        self.hankel_cond = float(hankel_cond)

    @property
    def K(self):
        return self.p.size - 1

    @property
    def L(self):
        return self.q.size - 1

    def eval(self, s):
        return _polyval_ascending(self.p, s) / _polyval_ascending(self.q, s)

    def taylor(self, n_terms):
        """First ``n_terms`` Taylor coefficients of P/Q by long division."""
        t = np.empty(n_terms)
        p, q = self.p, self.q
        for n in range(n_terms):
            acc = p[n] if n <= self.K else 0.0
            for j in range(1, min(n, self.L) + 1):
                acc -= q[j] * t[n - j]
            t[n] = acc  # q[0] = 1
        return t

    def __repr__(self):
        return f"PadeApproximant(K={self.K}, L={self.L}, cond={self.hankel_cond:.2e})"


class PoleResidueForm:
    """Terms (a_j, lam_j) of a partial-fraction structure.

    ``sum_poles``: the rational part is sum_j lam_j / (s + a_j) plus
    ``constant``.  ``product_exp``: the transform is the product of factors
    exp(-lam_j s / (s + a_j)).  ``discard_log`` keeps (reason, a, lam)
    records for every term removed by :func:`filter_poles`.
    """

    __slots__ = ("a", "lam", "form", "constant", "discarded_count", "discard_log")

    def __init__(self, a, lam, form, constant=0.0, discarded_count=0, discard_log=()):
        if form not in (SUM_OF_POLES, PRODUCT_OF_EXPONENTIALS):
            raise ValueError(f"unknown form {form!r}")
        self.a = np.atleast_1d(np.asarray(a))
        self.lam = np.atleast_1d(np.asarray(lam))
        if self.a.shape != self.lam.shape:
            raise ValueError("a and lam must have equal length")
        self.form = form
        self.constant = float(constant)
        self.discarded_count = int(discarded_count)
        self.discard_log = tuple(discard_log)

    @property
    def n_terms(self):
        return self.a.size

    def rational(self, s):
        """constant + sum_j lam_j / (s + a_j)."""
        s = np.asarray(s, dtype=complex)
        return self.constant + np.sum(
            self.lam[:, None] / (s.ravel()[None, :] + self.a[:, None]), axis=0
        ).reshape(s.shape)

    def is_real_positive(self):
        return bool(
            np.all(np.isreal(self.a))
            and np.all(np.isreal(self.lam))
            and np.all(self.a.real > 0)
            and np.all(self.lam.real > 0)
        )

    def complex_discards(self):
        return sum(1 for reason, _, _ in self.discard_log if reason == "complex")

    def to_json(self):
        def num(z):
            z = complex(z)
            return z.real if z.imag == 0.0 else [z.real, z.imag]

        return {
            "form": self.form,
            "terms": [{"a": num(a), "lambda": num(l)} for a, l in zip(self.a, self.lam)],
            "discarded": self.discarded_count,
        }

    def __repr__(self):
        return (
            f"PoleResidueForm(form={self.form!r}, n_terms={self.n_terms}, "
            f"discarded={self.discarded_count})"
        )


def _balance_scale(c):
    """Scale rho such that c_n rho^n has roughly flat magnitude."""
    mags = np.abs(c)
    nz = np.flatnonzero(mags > 0)
    if nz.size < 2:
        return 1.0
    slope = (np.log(mags[nz[-1]]) - np.log(mags[nz[0]])) / (nz[-1] - nz[0])
    rho = math.exp(-slope)
    if not np.isfinite(rho) or rho <= 0:
        return 1.0
    return rho


def _solve_denominator(A, b):
    """Return candidate Q_1..Q_L solutions: LU with one refinement, and
    min-norm least squares as fallback for (near-)singular systems."""
    candidates = []
    try:
        with warnings.catch_warnings():
            # Singular pivots are an expected outcome here; the long-division
            # verification decides which candidates survive.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(A)
            q = scipy.linalg.lu_solve(lu, b)
            q = q + scipy.linalg.lu_solve(lu, b - A @ q)
        if np.all(np.isfinite(q)):
            candidates.append(q)
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    q, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.all(np.isfinite(q)):
        candidates.append(q)
    return candidates


def _fit_mp(c_hp, K, L, cond):
    """Solve the [K, L] system at extended precision and downcast.

    Used whenever the series carries its high-precision mirror: around
    cond ~ 1e16 the double-precision solution is only backward-accurate,
    and the resulting approximant can sit ~5x off the true one where it is
    evaluated far outside the series' convergence disk.  The working
    precision escalates as needed: some of these systems (the gamma
    family's logarithmic series gives a Hilbert-like matrix) run to
    cond ~ 1e30, where dps-50 pivots trip the library's singularity check
    even though the 50-digit inputs determine the approximant to spare.
    """
    # A series that is exactly rational of lower type makes the [K, L]
    # system exactly rank-deficient (Pade block degeneracy); the block's
    # entries all equal the minimal-type function, so the correct move is
    # to deflate to [K - d, L - d] where d is the rank deficiency.
    def rank_deficiency(A):
        try:
            S = mp.svd_r(A, compute_uv=False)
        except (RuntimeError, ValueError):
            return 0
        smax = max(abs(x) for x in S)
        if smax == 0:
            return L
        return sum(1 for x in S if abs(x) <= smax * mp.mpf(10) ** (10 - HP_DPS))

    for dps in (HP_DPS, 2 * HP_DPS, 4 * HP_DPS):
        with mp.workdps(dps):
            A = mp.matrix(L, L)
            for m in range(1, L + 1):
                for j in range(1, L + 1):
                    idx = K + m - j
                    if idx >= 0:
                        A[m - 1, j - 1] = c_hp[idx]
            b = mp.matrix([-c_hp[K + m] for m in range(1, L + 1)])
            failed = False
            try:
                q = mp.lu_solve(A, b)
            except (ZeroDivisionError, ValueError):
                failed = True
            if not failed:
                qfull = [mp.mpf(1)] + list(q)
                p = [
                    mp.fsum(qfull[j] * c_hp[n - j] for j in range(min(n, L) + 1))
                    for n in range(K + 1)
                ]
                # Long-division verification; tolerance is set by the input
                # mirror's precision, not the (higher) solve precision.
                t = []
                for n in range(K + L + 1):
                    acc = p[n] if n <= K else mp.mpf(0)
                    for j in range(1, min(n, L) + 1):
                        acc -= qfull[j] * t[n - j]
                    t.append(acc)
                cmax = max(abs(x) for x in c_hp[: K + L + 1])
                err = max(abs(t[n] - c_hp[n]) for n in range(K + L + 1))
                failed = err > mp.mpf(10) ** (15 - HP_DPS) * cmax
            if failed:
                d = rank_deficiency(A)
                if d > 0:
                    if K - d < 0:
                        raise SingularHankel(
                            f"[{K}, {L}] series is rational of numerator degree "
                            f"below 0 after deflation by {d}",
                            cond=cond,
                        )
                    return _fit_mp(c_hp[: K + L + 1 - 2 * d], K - d, L - d, cond)
                continue
        p_d = np.array([float(x) for x in p])
        q_d = np.array([float(x) for x in qfull])
        if not (np.all(np.isfinite(p_d)) and np.all(np.isfinite(q_d))):
            raise SingularHankel(
                f"[{K}, {L}] coefficients exceed float range", cond=cond
            )
        return PadeApproximant(p_d, q_d, cond)
    raise SingularHankel(
        f"[{K}, {L}] Hankel solve failed at extended precision "
        f"(condition estimate {cond:.2e})",
        cond=cond,
    )


def fit(series, K, L):
    """[K, L] rational approximant of a power series.

    Only diagonal (K = L) and sub-diagonal (K = L - 1) orders are accepted.
    Series carrying an extended-precision mirror are solved at that
    precision (see :func:`_fit_mp`); plain double series are solved in
    double and verified by long division against the input coefficients,
    with fits whose backward error cannot be explained by the solve
    rejected as :class:`SingularHankel`.  The condition estimate of the
    (possibly very ill-conditioned) Hankel system is recorded on the
    returned approximant rather than being a hard gate, because the series
    of heavy-tailed laws produce Hilbert-like systems whose solutions are
    still usable after verification.
    """
    if not (K == L or K == L - 1):
        raise UnsupportedOrder(f"[{K}, {L}] is neither diagonal nor sub-diagonal")
    if K < 0 or L < 0:
        raise UnsupportedOrder("orders must be nonnegative")
    c = series.c if isinstance(series, PowerSeries) else np.asarray(series, float)
    if c.size < K + L + 1:
        raise InsufficientOrders(
            f"[{K}, {L}] needs {K + L + 1} coefficients, series has {c.size}"
        )
    c = c[: K + L + 1]
    rho = _balance_scale(c)
    ch = c * rho ** np.arange(c.size)
    cmax = np.max(np.abs(ch))

    if L == 0:
        return PadeApproximant(ch[: K + 1] / rho ** np.arange(K + 1), [1.0], 1.0)

    # A[m-1, j-1] = c_{K+m-j}, negative indices zero.
    A = np.zeros((L, L))
    for m in range(1, L + 1):
        for j in range(1, L + 1):
            idx = K + m - j
            if idx >= 0:
                A[m - 1, j - 1] = ch[idx]
    b = -ch[K + 1 : K + L + 1]

    if not np.any(A):
        raise SingularHankel(
            "Hankel system is identically zero: the series is a polynomial "
            f"of degree <= {K}",
            cond=math.inf,
        )
    cond = float(np.linalg.cond(A))

    hp = getattr(series, "hp", None)
    if hp is not None:
        return _fit_mp(hp[: K + L + 1], K, L, cond)

    eps = np.finfo(float).eps
    best = None
    for q in _solve_denominator(A, b):
        qfull = np.concatenate([[1.0], q])
        ph = np.convolve(ch[: K + 1], qfull)[: K + 1]
        pa = PadeApproximant(ph, qfull, cond)
        recon = pa.taylor(K + L + 1)
        err = float(np.max(np.abs(recon - ch)))
        qmax = float(np.max(np.abs(qfull)))
        # Long division amplifies rounding by the growth of 1/Q's own Taylor
        # coefficients, which has no cheap a-priori bound; the floor admits
        # condition-limited but structurally correct fits (observed ~5e-8 on
        # heavy-tail series) while still rejecting rank-collapsed solutions,
        # which reconstruct at 1e-3 cmax or worse.
        tol = max(1e-5 * cmax, 200.0 * (K + L) * eps * (1.0 + qmax) * cmax)
        if err <= tol and (best is None or err < best[0]):
            best = (err, pa)
    if best is None:
        raise SingularHankel(
            f"[{K}, {L}] fit failed verification against the input series "
            f"(condition estimate {cond:.2e})",
            cond=cond,
        )
    pa = best[1]
    powers = rho ** np.arange(max(K, L) + 1)
    return PadeApproximant(pa.p / powers[: K + 1], pa.q / powers[: L + 1], cond)


def _probe_points(a, rng, n_probes=10, exclusion=0.05):
    """Deterministic probe points on the right half-plane, away from poles."""
    scale = float(np.median(np.abs(a))) if a.size else 1.0
    if scale == 0 or not np.isfinite(scale):
        scale = 1.0
    probes = []
    for _ in range(400):
        if len(probes) >= n_probes:
            break
        z = scale * complex(0.2 + 1.3 * rng.random(), 1.6 * rng.random() - 0.8)
        if a.size == 0 or np.min(np.abs(z + a)) > exclusion * scale:
            probes.append(z)
    return np.asarray(probes)


def _respace_coincident(roots, tight=1e-9, spread=1e-6):
    """Separate eigenvalue-identical root clusters by a tiny real offset.

    An exactly repeated root zeroes the factored-denominator product and
    the residue formula degenerates.  Respacing by ``spread`` changes the
    represented function by O(spread^2) relative, far below the probe
    tolerance, while restoring finite residues; rounding-split pairs wider
    than ``tight`` are left alone because the formula handles them.
    """
    n = roots.size
    scale = np.maximum(np.abs(roots), 1.0)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) < tight * max(scale[i], scale[j]):
                parent[find(i)] = find(j)
    clusters = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    out = roots.copy()
    for members in clusters.values():
        if len(members) < 2:
            continue
        members.sort(key=lambda i: (roots[i].real, roots[i].imag))
        center = np.mean(roots[members])
        step = spread * max(abs(center), 1.0)
        for k, i in enumerate(members):
            out[i] = center + step * (k - (len(members) - 1) / 2.0)
    return out


def to_pole_residue(pa, form):
    """Decompose P/Q into simple-pole terms.

    Roots come from the companion-matrix eigenproblem; residues use the
    factored denominator lam_j = R(root_j) / (q_L prod_{k != j}(root_j -
    root_k)), which keeps nearly coincident root pairs consistent with each
    other.  The decomposition is verified at probe points against P/Q; only
    when that fails is a tight root cluster reported as RepeatedRoots.
    """
    K, L = pa.K, pa.L
    if form == SUM_OF_POLES:
        if K > L:
            raise DegreeMismatch("sum-of-poles needs K <= L")
    elif form == PRODUCT_OF_EXPONENTIALS:
        if K >= L:
            raise DegreeMismatch(
                "product-of-exponentials needs a strictly proper rational part (K < L)"
            )
    else:
        raise ValueError(f"unknown form {form!r}")
    if L == 0:
        raise DegreeMismatch("no poles to decompose at L = 0")

    roots = _respace_coincident(np.roots(pa.q[::-1]))
    constant = pa.p[-1] / pa.q[-1] if K == L else 0.0
    # R = P - constant * Q has degree <= L - 1 and R/Q is strictly proper.
    r_coeffs = pa.p.astype(complex).copy()
    if K == L:
        r_coeffs = r_coeffs - constant * pa.q

    lam = np.empty(L, dtype=complex)
    qlead = pa.q[-1]
    for j in range(L):
        diffs = roots[j] - np.delete(roots, j)
        lam[j] = _polyval_ascending(r_coeffs, roots[j]) / (qlead * np.prod(diffs))
    a = -roots

    rng = np.random.default_rng(177)
    probes = _probe_points(a, rng)
    lhs = constant + np.sum(lam[None, :] / (probes[:, None] + a[None, :]), axis=1)
    rhs = pa.eval(probes)
    rel = np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)
    if np.max(rel) > 1e-7:
        sep = np.abs(roots[:, None] - roots[None, :]) + np.diag(np.full(L, np.inf))
        tight = np.min(sep, axis=1) < REPEATED_ROOT_RTOL * np.maximum(np.abs(roots), 1.0)
        if np.any(tight):
            raise RepeatedRoots(
                f"{int(np.sum(tight))} denominator roots coincide within "
                f"{REPEATED_ROOT_RTOL:g} and the residue decomposition fails "
                f"probe verification (max rel err {np.max(rel):.2e})"
            )
        raise ClutterForgeError(
            f"pole-residue decomposition failed probe verification "
            f"(max rel err {np.max(rel):.2e})"
        )
    return PoleResidueForm(a, lam, form, constant)


def _product_factor(a, lam, s):
    return np.exp(-lam * s / (s + a))


def filter_poles(prf):
    """Drop unusable terms; returns a new form with updated discard records.

    sum-of-poles: terms with Re(a_j) <= 0 put a pole in the right half-plane
    and are discarded.  product-of-exponentials: near-real terms are snapped
    real, conjugate pairs are consolidated into a single real term when the
    consolidated factor reproduces the pair's product at probe points, and
    anything left that is not real and strictly positive in both a and lam
    is discarded.  Raises :class:`AllPolesDiscarded` when nothing survives.
    """
    log = list(prf.discard_log)
    if prf.form == SUM_OF_POLES:
        keep = prf.a.real > 0
        for a, lam in zip(prf.a[~keep], prf.lam[~keep]):
            log.append(("right-half-plane", complex(a), complex(lam)))
            warnings.warn(
                f"discarding pole term a = {a:.6g} (pole not in the left half-plane)",
                stacklevel=2,
            )
        if not np.any(keep):
            raise AllPolesDiscarded("every sum-of-poles term was discarded")
        return PoleResidueForm(
            prf.a[keep],
            prf.lam[keep],
            prf.form,
            prf.constant,
            prf.discarded_count + int(np.sum(~keep)),
            log,
        )

    a = np.asarray(prf.a, dtype=complex).copy()
    lam = np.asarray(prf.lam, dtype=complex).copy()
    # Snap rounding-level imaginary parts to the real axis.
    snap = (np.abs(a.imag) <= IM_SNAP_RTOL * np.abs(a)) & (
        np.abs(lam.imag) <= IM_SNAP_RTOL * np.maximum(np.abs(lam), 1e-300)
    )
    a[snap] = a[snap].real
    lam[snap] = lam[snap].real

    scale = float(np.median(np.abs(a))) if a.size else 1.0
    probes = scale * np.array([0.3, 1.0, 2.7, 0.6 + 0.9j, 1.4 + 2.2j])

    kept_a, kept_lam = [], []
    used = np.zeros(a.size, dtype=bool)
    for i in range(a.size):
        if used[i]:
            continue
        if a[i].imag == 0.0 and lam[i].imag == 0.0:
            used[i] = True
            kept_a.append(a[i].real)
            kept_lam.append(lam[i].real)
            continue
        # Look for the conjugate partner of a genuinely complex term.
        partner = None
        for j in range(i + 1, a.size):
            if used[j] or a[j].imag == 0.0:
                continue
            if (
                abs(a[i] - np.conj(a[j])) <= PAIR_RTOL * abs(a[i])
                and abs(lam[i] - np.conj(lam[j])) <= PAIR_RTOL * max(abs(lam[i]), 1e-300)
            ):
                partner = j
                break
        if partner is not None:
            j = partner
            a_c = 0.5 * (a[i] + a[j]).real
            lam_c = (lam[i] + lam[j]).real
            pair = _product_factor(a[i], lam[i], probes) * _product_factor(a[j], lam[j], probes)
            consolidated = _product_factor(a_c, lam_c, probes)
            if np.max(np.abs(pair - consolidated)) <= PAIR_PROBE_TOL:
                used[i] = used[j] = True
                kept_a.append(a_c)
                kept_lam.append(lam_c)
                continue
        used[i] = True
        log.append(("complex", complex(a[i]), complex(lam[i])))
        warnings.warn(
            f"discarding complex exponential-product term a = {a[i]:.6g}",
            stacklevel=2,
        )

    a_f = np.asarray(kept_a, dtype=float)
    lam_f = np.asarray(kept_lam, dtype=float)
    pos = (a_f > 0) & (lam_f > 0)
    for av, lv in zip(a_f[~pos], lam_f[~pos]):
        log.append(("sign", complex(av), complex(lv)))
        warnings.warn(
            f"discarding exponential-product term (a = {av:.6g}, lambda = {lv:.6g}): "
            "both must be strictly positive for exact sampling",
            stacklevel=2,
        )
    a_f, lam_f = a_f[pos], lam_f[pos]
    if a_f.size == 0:
        raise AllPolesDiscarded("every exponential-product term was discarded")
    n_disc = len(log) - len(prf.discard_log)
    return PoleResidueForm(
        a_f, lam_f, prf.form, prf.constant, prf.discarded_count + n_disc, log
    )


def product_form_scan(series, K, L, l_min=8):
    """Filtered product-of-exponentials form, scanning down in order.

    Tries sub-diagonal orders [L'-1, L'] from the requested L down to
    ``l_min`` and returns the first form whose terms are all real positive
    without any complex-pair discard (small right-half-plane or negative
    artifacts may still be dropped and are recorded).  Raises
    :class:`ComplexPoleStructure` when no order qualifies.
    """
    attempts = []
    for lp in range(L, l_min - 1, -1):
        kp = lp - 1
        try:
            pa = fit(series, kp, lp)
            prf = to_pole_residue(pa, PRODUCT_OF_EXPONENTIALS)
            filt = filter_poles(prf)
        except (SingularHankel, RepeatedRoots, AllPolesDiscarded, ClutterForgeError) as exc:
            attempts.append(f"[{kp},{lp}]: {type(exc).__name__}: {exc}")
            continue
        if filt.complex_discards() == 0:
            return filt
        attempts.append(
            f"[{kp},{lp}]: {filt.complex_discards()} complex term(s) discarded"
        )
    raise ComplexPoleStructure(
        "no order down to L = {} yields an all-real-positive product form; "
        "attempts: {}".format(l_min, "; ".join(attempts))
    )
