"""Hard-edge universal limit: Bessel-kernel gap probability and density.

On the local scale u = 4 p eta t with eta = tr Lambda^-1 / p, the gap
probability of any admissible correlated Wishart ensemble converges to

    E(u) = exp(-beta u / 8) * det^(beta/2)[ q_ij L_ij(u) ] / N0,

where L_ij(u) = sqrt(u/4)^(i+j-kappa) I_(kappa - i - j)(sqrt(u)) with
kappa = 2 (gamma + 1) / beta, q_ij = (-1)^(i+1) for beta = 2 and (j - i)
for beta = 1, and det^(beta/2) is a gamma x gamma determinant (beta = 2)
or a 2 gamma x 2 gamma Pfaffian (beta = 1).  N0 is the analytic u -> 0
limit of the assembly, obtained from the leading Bessel orders (entries
tend to q_ij / (kappa - i - j)! with 1/m! = 0 for negative m), so the
origin is never evaluated numerically.

The density is the exact u-derivative of the normalized assembly.  The
Bessel identity d/dx [x^-m I_m(x)] = x^-m I_(m+1)(x) shifts the order in
one row at a time (the L^(l) kernels); the chain rule u = x^2 then gives

    p(u) = (beta/8) E(u) - exp(-beta u/8) sum_l det[q L^(l)] / (c(u) N0)

with c(u) = 2 sqrt(u) for beta = 2 and c(u) = 4 sqrt(u) pf[q L^(0)](u)
for beta = 1.  These constants are fixed by -dE/du and by the density
normalization (both are enforced in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import log_det_batch, pfaffian_batch, signed_add
from .special_functions import NEG_INF, log_factorial
from .spectrum import CorrelationSpectrum

_LOG4 = math.log(4.0)


@dataclass(frozen=True)
class MicroParams:
    """Symmetry class and rectangularity of the limit law."""

    beta: int
    gamma: int

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def kappa_prime(self) -> int:
        # 2 (gamma + 1) / beta; integer for both symmetry classes.
        return 2 * (self.gamma + 1) // self.beta

    @property
    def kernel_dim(self) -> int:
        return self.gamma if self.beta == 2 else 2 * self.gamma


@dataclass(frozen=True)
class LocalScale:
    """The map between raw t and the microscopic variable u = 4 p eta t."""

    eta: float
    p: int

    def u_of_t(self, t):
        return 4.0 * self.p * self.eta * np.asarray(t, dtype=float)

    def t_of_u(self, u):
        return np.asarray(u, dtype=float) / (4.0 * self.p * self.eta)


def local_scale(spectrum: CorrelationSpectrum, p: int) -> LocalScale:
    """eta = tr Lambda^-1 / p for a spectrum of exactly p eigenvalues."""
    if spectrum.p != p:
        raise ValueError(f"spectrum has {spectrum.p} eigenvalues, expected p = {p}")
    return LocalScale(eta=spectrum.trace_inv / p, p=p)


def _log_bessel_grid(order: int, x: np.ndarray) -> np.ndarray:
    """ln I_|order|(x) over an array, series in scaled form (see bessel_i)."""
    m = abs(int(order))
    out = np.full(x.shape, NEG_INF)
    pos = x > 0.0
    if m == 0:
        out[~pos] = 0.0
    if not pos.any():
        return out
    xp = x[pos]
    q = 0.25 * xp * xp
    term = np.ones_like(xp)
    total = np.ones_like(xp)
    for k in range(1, 500):
        term = term * (q / (k * (k + m)))
        total += term
        if term.max() < 1e-17 * total.min():
            break
    out[pos] = m * np.log(0.5 * xp) - log_factorial(m) + np.log(total)
    return out


def _q_factor(beta: int, i: int, j: int) -> tuple[int, float]:
    if beta == 2:
        return (1 if i % 2 == 1 else -1), 0.0
    if i == j:
        return 0, NEG_INF
    return (1 if j > i else -1), math.log(abs(j - i))


def _micro_mats(mp: MicroParams, us: np.ndarray, deriv_row: int = 0):
    """Assemble (B, d, d) sign/log arrays of q_ij L^(l)_ij at u > 0."""
    d = mp.kernel_dim
    kappa = mp.kappa_prime
    B = us.size
    x = np.sqrt(us)
    log_u = np.log(us)
    signs = np.zeros((B, d, d), dtype=np.int8)
    logs = np.full((B, d, d), NEG_INF)
    bessel_cache: dict[int, np.ndarray] = {}
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            sign, pref_log = _q_factor(mp.beta, i, j)
            if sign == 0:
                continue
            order = kappa + (1 if i == deriv_row else 0) - i - j
            m = abs(order)
            if m not in bessel_cache:
                bessel_cache[m] = _log_bessel_grid(m, x)
            signs[:, i - 1, j - 1] = sign
            logs[:, i - 1, j - 1] = (
                pref_log + 0.5 * (i + j - kappa) * (log_u - _LOG4) + bessel_cache[m]
            )
    return signs, logs


def _micro_norm(mp: MicroParams):
    """(sign, log) of the u -> 0 limit of the kernel assembly."""
    d = mp.kernel_dim
    kappa = mp.kappa_prime
    signs = np.zeros((1, d, d), dtype=np.int8)
    logs = np.full((1, d, d), NEG_INF)
    for i in range(1, d + 1):
        for j in range(1, d + 1):
            m = kappa - i - j
            if m < 0:
                continue
            sign, pref_log = _q_factor(mp.beta, i, j)
            if sign == 0:
                continue
            signs[0, i - 1, j - 1] = sign
            logs[0, i - 1, j - 1] = pref_log - log_factorial(m)
    if mp.beta == 2:
        n_s, n_l = log_det_batch(signs, logs)
    else:
        n_s, n_l = pfaffian_batch(signs, logs)
    if n_s[0] == 0:
        raise ArithmeticError("u -> 0 limit of the microscopic kernel is singular")
    return int(n_s[0]), float(n_l[0])


def _validated_grid(us, positive: bool) -> np.ndarray:
    arr = np.asarray(us, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("u grid must be finite")
    if positive:
        if np.any(arr <= 0.0):
            raise ValueError("u must be > 0")
    elif np.any(arr < 0.0):
        raise ValueError("u must be >= 0")
    return arr


def micro_gap_curve(mp: MicroParams, us) -> np.ndarray:
    """Universal gap probability on a grid of u >= 0."""
    arr = _validated_grid(us, positive=False)
    decay = mp.beta / 8.0
    if mp.kernel_dim == 0:
        return np.exp(-decay * arr)
    out = np.ones(arr.size)
    pos = arr > 0.0
    if pos.any():
        n_s, n_l = _micro_norm(mp)
        signs, logs = _micro_mats(mp, arr[pos])
        if mp.beta == 2:
            a_s, a_l = log_det_batch(signs, logs)
        else:
            a_s, a_l = pfaffian_batch(signs, logs)
        out[pos] = (a_s * n_s) * np.exp(-decay * arr[pos] + a_l - n_l)
    return out


def micro_gap(mp: MicroParams, u: float) -> float:
    """Universal gap probability at a single u >= 0; exactly 1 at u = 0."""
    return float(micro_gap_curve(mp, [u])[0])


def micro_pmin_curve(mp: MicroParams, us) -> np.ndarray:
    """Universal smallest-eigenvalue density -dE/du on a grid of u > 0."""
    arr = _validated_grid(us, positive=True)
    decay = mp.beta / 8.0
    d = mp.kernel_dim
    if d == 0:
        return decay * np.exp(-decay * arr)
    n_s, n_l = _micro_norm(mp)
    g_s, g_l = _micro_mats(mp, arr)
    if mp.beta == 2:
        a_s, a_l = log_det_batch(g_s, g_l)
    else:
        a_s, a_l = pfaffian_batch(g_s, g_l)
    gap = (a_s * n_s) * np.exp(-decay * arr + a_l - n_l)

    sum_s = np.zeros(arr.size, dtype=np.int8)
    sum_l = np.full(arr.size, NEG_INF)
    for row in range(1, d + 1):
        m_signs, m_logs = _micro_mats(mp, arr, deriv_row=row)
        d_s, d_l = log_det_batch(m_signs, m_logs)
        sum_s, sum_l = signed_add(sum_s, sum_l, d_s, d_l)

    sqrt_u = np.sqrt(arr)
    if mp.beta == 2:
        kernel_term = (sum_s * n_s) * np.exp(-decay * arr + sum_l - n_l) / (2.0 * sqrt_u)
        return 0.25 * gap - kernel_term
    kernel_term = (sum_s * a_s * n_s) * np.exp(-decay * arr + sum_l - a_l - n_l) / (4.0 * sqrt_u)
    return 0.125 * gap - kernel_term


def micro_pmin(mp: MicroParams, u: float) -> float:
    """Universal smallest-eigenvalue density at a single u > 0."""
    return float(micro_pmin_curve(mp, [u])[0])
