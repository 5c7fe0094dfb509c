"""Exact finite-size gap probability and smallest-eigenvalue density.

For a p x n correlated Wishart ensemble (Dyson index beta, empirical
eigenvalues Lambda_1..Lambda_p of the correlation matrix) the probability
that no eigenvalue of W W^dagger lies in [0, t] is, up to the exponential
exp(-beta t tr Lambda^-1 / 2), a determinant (beta = 2, dimension gamma)
or a Pfaffian (beta = 1, dimension 2 gamma) of polynomial kernel entries

    Theta(alpha) * q_ij * sum_k e_k(Lambda) t^(p-k) / (alpha - k)!

with alpha = p + gamma + 1 - i - j (beta = 2) or p + 2 gamma + 2 - i - j
(beta = 1).  Two kernel variants exist: the "hs" exponents t^(p-k) above
and the "sb" exponents t^(alpha-k); they give identical probabilities
(for beta = 1 the sb assembly carries an extra overall factor t^-gamma).

Everything is normalized by the same assembly evaluated at t = 0, which
realizes E(0) = 1 exactly and absorbs both det^gamma(Lambda) and the
overall Pfaffian sign.  The smallest-eigenvalue density is -dE/dt,
evaluated through the row-differentiated kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import log_det_batch, pfaffian_batch, signed_add
from .special_functions import NEG_INF, LogSignedValue, log_factorial
from .spectrum import CorrelationSpectrum

VARIANT_HS = "hs"
VARIANT_SB = "sb"


@dataclass(frozen=True)
class EnsembleParams:
    """Ensemble identity (beta, p, n) with the derived kernel size.

    beta = 1 supports odd n - p only; even rectangularity makes gamma
    half-integer, which the exact determinant/Pfaffian formulas do not
    cover.
    """

    beta: int
    p: int
    n: int

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta}")
        if self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if self.n < self.p:
            raise ValueError(f"n must satisfy n >= p, got n={self.n}, p={self.p}")
        if self.beta == 1 and (self.n - self.p) % 2 == 0:
            raise ValueError(
                "half-integer gamma requires the supermatrix model (out of scope): "
                f"beta=1 needs odd n - p, got n - p = {self.n - self.p}"
            )

    @property
    def gamma(self) -> int:
        if self.beta == 2:
            return self.n - self.p
        return (self.n - self.p - 1) // 2

    @property
    def kernel_dim(self) -> int:
        return self.gamma if self.beta == 2 else 2 * self.gamma


@dataclass(frozen=True)
class KernelSpec:
    """Kernel variant and derivative-row selector (0 = no derivative)."""

    variant: str = VARIANT_HS
    derivative_row: int = 0

    def __post_init__(self):
        if self.variant not in (VARIANT_HS, VARIANT_SB):
            raise ValueError(f"variant must be '{VARIANT_HS}' or '{VARIANT_SB}', got {self.variant!r}")
        if self.derivative_row < 0:
            raise ValueError(f"derivative_row must be >= 0, got {self.derivative_row}")


def _alpha_offset(params: EnsembleParams) -> int:
    # alpha = offset - i - j
    if params.beta == 2:
        return params.p + params.gamma + 1
    return params.p + 2 * params.gamma + 2


def _prefactor(beta: int, i: int, j: int) -> tuple[int, float]:
    """Sign and log-magnitude of q_ij: (-1)^(i+1) or (j-i)(-1)^(i+j)."""
    if beta == 2:
        return (1 if i % 2 == 1 else -1), 0.0
    if i == j:
        return 0, NEG_INF
    sign = 1 if j > i else -1
    if (i + j) % 2 == 1:
        sign = -sign
    return sign, math.log(abs(j - i))


def _entry_terms(params: EnsembleParams, spectrum: CorrelationSpectrum, variant: str,
                 i: int, j: int, derivative: bool):
    """Term table of one kernel entry: (exponents of t, log coefficients).

    Returns None for an entry that is exactly zero (Heaviside cutoff or an
    empty sum).  All coefficients are positive; signs live in the
    prefactor.
    """
    p = params.p
    alpha = _alpha_offset(params) - i - j
    if alpha < 0:
        return None
    log_e = spectrum.log_e
    if not derivative:
        upper = min(p, alpha)
        ks = np.arange(upper + 1)
        wlog = log_e[: upper + 1] - np.array([log_factorial(alpha - k) for k in ks])
        exps = (p - ks) if variant == VARIANT_HS else (alpha - ks)
    elif variant == VARIANT_HS:
        upper = min(p - 1, alpha)
        if upper < 0:
            return None
        ks = np.arange(upper + 1)
        wlog = (
            log_e[: upper + 1]
            + np.log(p - ks)
            - np.array([log_factorial(alpha - k) for k in ks])
        )
        exps = p - ks - 1
    else:
        upper = min(p, alpha - 1)
        if upper < 0:
            return None
        ks = np.arange(upper + 1)
        wlog = log_e[: upper + 1] - np.array([log_factorial(alpha - k - 1) for k in ks])
        exps = alpha - ks - 1
    return exps.astype(float), wlog


def _sum_terms_at(exps: np.ndarray, wlog: np.ndarray, log_ts: np.ndarray) -> np.ndarray:
    """log of sum_k exp(wlog_k) * t^exps_k, for log t in log_ts (t > 0)."""
    m = wlog[None, :] + log_ts[:, None] * exps[None, :]
    peak = m.max(axis=1)
    return peak + np.log(np.exp(m - peak[:, None]).sum(axis=1))


def _sum_terms_at_zero(exps: np.ndarray, wlog: np.ndarray) -> float:
    at0 = exps == 0.0
    if not at0.any():
        return NEG_INF
    return float(wlog[at0][0])


def kernel_entry(params: EnsembleParams, spec: KernelSpec, spectrum: CorrelationSpectrum,
                 i: int, j: int, t: float) -> LogSignedValue:
    """Single kernel entry at row i, column j (1-based), argument t >= 0."""
    _check_spectrum(params, spectrum)
    d = params.kernel_dim
    if not (1 <= i <= d and 1 <= j <= d):
        raise ValueError(f"indices must lie in 1..{d}, got ({i}, {j})")
    if spec.derivative_row > d:
        raise ValueError(f"derivative_row must be <= {d}, got {spec.derivative_row}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    sign, pref_log = _prefactor(params.beta, i, j)
    if sign == 0:
        return LogSignedValue.zero()
    table = _entry_terms(params, spectrum, spec.variant, i, j, spec.derivative_row == i)
    if table is None:
        return LogSignedValue.zero()
    exps, wlog = table
    if t == 0.0:
        mag = _sum_terms_at_zero(exps, wlog)
    else:
        mag = float(_sum_terms_at(exps, wlog, np.array([math.log(t)]))[0])
    return LogSignedValue.from_log(sign, pref_log + mag)


def _kernel_matrices(params: EnsembleParams, spectrum: CorrelationSpectrum, variant: str,
                     log_ts: np.ndarray, derivative_rows: bool):
    """Assemble (B, d, d) sign/log arrays of the kernel at positive t.

    With derivative_rows=True every row is the term-wise t-derivative;
    callers splice single rows out of it to form the G^(l) matrices.
    """
    d = params.kernel_dim
    B = log_ts.size
    signs = np.zeros((B, d, d), dtype=np.int8)
    logs = np.full((B, d, d), NEG_INF)
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            sign, pref_log = _prefactor(params.beta, i, j)
            if sign == 0:
                continue
            table = _entry_terms(params, spectrum, variant, i, j, derivative_rows)
            if table is None:
                continue
            exps, wlog = table
            signs[:, i - 1, j - 1] = sign
            logs[:, i - 1, j - 1] = pref_log + _sum_terms_at(exps, wlog, log_ts)
    return signs, logs


def _norm_assembly(params: EnsembleParams, spectrum: CorrelationSpectrum):
    """(sign, log) of the hs assembly at t = 0; the E(0) = 1 normalizer.

    At t = 0 only the k = p term survives, and only where alpha >= p; the
    matrix value is +-det^gamma(Lambda) times combinatorial factors, with
    the Pfaffian sign left to the algorithm rather than guessed.
    """
    d = params.kernel_dim
    signs = np.zeros((1, d, d), dtype=np.int8)
    logs = np.full((1, d, d), NEG_INF)
    offset = _alpha_offset(params)
    log_ep = spectrum.log_e[params.p]
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            alpha = offset - i - j
            if alpha < params.p:
                continue
            sign, pref_log = _prefactor(params.beta, i, j)
            if sign == 0:
                continue
            signs[0, i - 1, j - 1] = sign
            logs[0, i - 1, j - 1] = pref_log + log_ep - log_factorial(alpha - params.p)
    if params.beta == 2:
        ds, dl = log_det_batch(signs, logs)
    else:
        ds, dl = pfaffian_batch(signs, logs)
    if ds[0] == 0:
        raise ArithmeticError("t = 0 kernel assembly is singular; cannot normalize")
    return int(ds[0]), float(dl[0])


def _check_spectrum(params: EnsembleParams, spectrum: CorrelationSpectrum):
    if spectrum.p != params.p:
        raise ValueError(
            f"spectrum has {spectrum.p} eigenvalues but params require p = {params.p}"
        )


def _validated_grid(ts, positive: bool) -> np.ndarray:
    arr = np.asarray(ts, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("t grid must be finite")
    if positive:
        if np.any(arr <= 0.0):
            raise ValueError("t must be > 0")
    elif np.any(arr < 0.0):
        raise ValueError("t must be >= 0")
    return arr


def gap_exact_curve(params: EnsembleParams, spectrum: CorrelationSpectrum, ts,
                    variant: str = VARIANT_HS) -> np.ndarray:
    """Gap probability E(t) on a grid of t >= 0."""
    _check_spectrum(params, spectrum)
    if variant not in (VARIANT_HS, VARIANT_SB):
        raise ValueError(f"variant must be '{VARIANT_HS}' or '{VARIANT_SB}', got {variant!r}")
    arr = _validated_grid(ts, positive=False)
    decay = 0.5 * params.beta * spectrum.trace_inv
    if params.kernel_dim == 0:
        return np.exp(-decay * arr)
    out = np.ones(arr.size)
    pos = arr > 0.0
    if pos.any():
        n_s, n_l = _norm_assembly(params, spectrum)
        log_ts = np.log(arr[pos])
        signs, logs = _kernel_matrices(params, spectrum, variant, log_ts, derivative_rows=False)
        if params.beta == 2:
            a_s, a_l = log_det_batch(signs, logs)
        else:
            a_s, a_l = pfaffian_batch(signs, logs)
            if variant == VARIANT_SB:
                a_l = a_l - params.gamma * log_ts
        out[pos] = (a_s * n_s) * np.exp(-decay * arr[pos] + a_l - n_l)
    return out


def gap_exact(params: EnsembleParams, spectrum: CorrelationSpectrum, t: float,
              variant: str = VARIANT_HS) -> float:
    """Gap probability E(t): no eigenvalue of W W^dagger in [0, t]."""
    return float(gap_exact_curve(params, spectrum, [t], variant=variant)[0])


def pmin_exact_curve(params: EnsembleParams, spectrum: CorrelationSpectrum, ts) -> np.ndarray:
    """Smallest-eigenvalue density -dE/dt on a grid of t > 0.

    Row-differentiated kernels: d/dt of the assembly is the sum over rows
    of the determinant with that single row differentiated; for beta = 1
    the Pfaffian chain rule divides the sum by twice the Pfaffian itself.
    Values are returned unclamped; deep cancellation may leave a tiny
    negative number where the true density vanishes.
    """
    _check_spectrum(params, spectrum)
    arr = _validated_grid(ts, positive=True)
    trinv = spectrum.trace_inv
    decay = 0.5 * params.beta * trinv
    d = params.kernel_dim
    if d == 0:
        return decay * np.exp(-decay * arr)
    n_s, n_l = _norm_assembly(params, spectrum)
    log_ts = np.log(arr)
    g_s, g_l = _kernel_matrices(params, spectrum, VARIANT_HS, log_ts, derivative_rows=False)
    gd_s, gd_l = _kernel_matrices(params, spectrum, VARIANT_HS, log_ts, derivative_rows=True)
    if params.beta == 2:
        a_s, a_l = log_det_batch(g_s, g_l)
    else:
        a_s, a_l = pfaffian_batch(g_s, g_l)
    gap = (a_s * n_s) * np.exp(-decay * arr + a_l - n_l)

    sum_s = np.zeros(arr.size, dtype=np.int8)
    sum_l = np.full(arr.size, NEG_INF)
    for row in range(d):
        m_s = g_s.copy()
        m_l = g_l.copy()
        m_s[:, row, :] = gd_s[:, row, :]
        m_l[:, row, :] = gd_l[:, row, :]
        d_s, d_l = log_det_batch(m_s, m_l)
        sum_s, sum_l = signed_add(sum_s, sum_l, d_s, d_l)

    if params.beta == 2:
        kernel_term = (sum_s * n_s) * np.exp(-decay * arr + sum_l - n_l)
        return trinv * gap - kernel_term
    kernel_term = 0.5 * (sum_s * a_s * n_s) * np.exp(-decay * arr + sum_l - a_l - n_l)
    return 0.5 * trinv * gap - kernel_term


def pmin_exact(params: EnsembleParams, spectrum: CorrelationSpectrum, t: float) -> float:
    """Smallest-eigenvalue density at a single t > 0."""
    return float(pmin_exact_curve(params, spectrum, [t])[0])
