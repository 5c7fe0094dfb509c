"""Monte Carlo verification oracles for the analytic formulas.

Sampling is counter-based: sample s of a run seeded with `seed` always
draws from Philox(key=seed, counter=s * 2^128), so serial and chunked or
threaded execution produce bit-identical output for any worker count.
Identical (config, seed) therefore reproduce identical runs on any
machine with the same floating-point behavior.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.random import Generator, Philox

from .exact import EnsembleParams
from .linalg import cholesky
from .spectrum import CorrelationSpectrum

_SQRT_HALF = np.sqrt(0.5)

# distinct 64-bit stream tags, baked into the counter's top bits
_STREAM_SMALLEST = 0
_STREAM_DUAL = 1
_STREAM_DUALITY_LHS = 2
_STREAM_DUALITY_RHS = 3


def thread_count() -> int:
    """Worker count: WISHART_EDGE_THREADS, with 0 or unset meaning auto."""
    raw = os.environ.get("WISHART_EDGE_THREADS", "0").strip()
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"WISHART_EDGE_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"WISHART_EDGE_THREADS must be >= 0, got {value}")
    return value if value > 0 else (os.cpu_count() or 1)


def _rng(seed: int, stream: int, index: int) -> Generator:
    counter = (int(stream) << 192) | (int(index) << 128)
    return Generator(Philox(key=int(seed), counter=counter))


def _draw_w(beta: int, p: int, n: int, rng: Generator) -> np.ndarray:
    """p x n standard Gaussian block with E|W_ij|^2 = 1.

    beta = 2 draws the real parts first, then the imaginary parts, each
    with variance 1/2; the order is part of the reproducibility contract.
    """
    if beta == 1:
        return rng.standard_normal((p, n))
    re = rng.standard_normal((p, n))
    im = rng.standard_normal((p, n))
    return (re + 1j * im) * _SQRT_HALF


@dataclass(frozen=True)
class McConfig:
    """One sampling campaign of smallest eigenvalues."""

    params: EnsembleParams
    spectrum: CorrelationSpectrum
    samples: int
    seed: int = 0
    corr: np.ndarray | None = None  # full C; None means C = diag(lambdas)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        if self.spectrum.p != self.params.p:
            raise ValueError("spectrum size does not match params.p")
        if self.corr is not None:
            c = np.asarray(self.corr)
            if c.ndim != 2 or c.shape != (self.params.p, self.params.p):
                raise ValueError(f"corr must be {self.params.p} x {self.params.p}")


@dataclass(frozen=True)
class McRun:
    """Sorted smallest-eigenvalue draws plus the config that produced them."""

    config: McConfig
    draws: np.ndarray
    wall_time: float

    @property
    def samples(self) -> int:
        return self.draws.size

    def empirical_survival(self, ts) -> np.ndarray:
        """Fraction of draws strictly greater than each t."""
        ts = np.asarray(ts, dtype=float)
        return 1.0 - np.searchsorted(self.draws, ts, side="right") / self.draws.size

    def ecdf(self, ts) -> np.ndarray:
        return 1.0 - self.empirical_survival(ts)


def _coloring(config: McConfig) -> np.ndarray:
    if config.corr is not None:
        return cholesky(np.asarray(config.corr, dtype=complex if config.params.beta == 2 else float))
    return np.diag(np.sqrt(config.spectrum.lambdas))


def _chunk_size(p: int) -> int:
    # keep each stacked chunk of p x p matrices around 64 MB
    return max(8, min(512, (1 << 22) // max(1, p * p)))


def sample_smallest(config: McConfig) -> McRun:
    """Draw `samples` correlated Wishart matrices, record min eigenvalues."""
    params = config.params
    p, n, beta = params.p, params.n, params.beta
    seed = config.seed
    coloring = _coloring(config)
    is_complex = beta == 2
    chunk = _chunk_size(p)
    scale = float(n * config.spectrum.lambdas.max())
    tol = 1e-12 * max(1.0, scale)

    def run_chunk(start: int) -> np.ndarray:
        stop = min(start + chunk, config.samples)
        mats = np.empty((stop - start, p, p), dtype=complex if is_complex else float)
        for idx in range(start, stop):
            w = coloring @ _draw_w(beta, p, n, _rng(seed, _STREAM_SMALLEST, idx))
            mats[idx - start] = w @ w.conj().T
        return np.linalg.eigvalsh(mats)[:, 0]

    begin = time.perf_counter()
    starts = range(0, config.samples, chunk)
    workers = thread_count()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, starts))
    else:
        parts = [run_chunk(s) for s in starts]
    draws = np.concatenate(parts) if parts else np.empty(0)
    low = draws.min() if draws.size else 0.0
    if low < -tol:
        raise RuntimeError(
            f"smallest-eigenvalue draw {low} below round-off tolerance -{tol}"
        )
    draws = np.maximum(draws, 0.0)
    draws.sort()
    draws.setflags(write=False)
    return McRun(config=config, draws=draws, wall_time=time.perf_counter() - begin)


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int


def _ratio_estimate(num: np.ndarray, den: np.ndarray, prefactor: float = 1.0) -> McEstimate:
    """Delta-method mean and stderr of prefactor * mean(num)/mean(den)."""
    n = num.size
    nbar = float(num.mean())
    dbar = float(den.mean())
    ratio = nbar / dbar
    resid = num - ratio * den
    se = float(np.sqrt(np.mean(resid * resid) / n) / abs(dbar))
    return McEstimate(value=prefactor * ratio, stderr=abs(prefactor) * se, samples=n)


def gap_dual_mc(params: EnsembleParams, spectrum: CorrelationSpectrum, t: float,
                samples: int, seed: int = 0) -> McEstimate:
    """Gap probability from the dual p x (p+2-beta) ensemble.

    E(t) = exp(-beta t tr Lambda^-1 / 2) <det^gamma(V V^dagger + t)> over
    Lambda-colored p x (p+2-beta) Gaussian blocks V, normalized by the
    same average at t = 0 so that E(0) = 1 holds exactly.  A test oracle:
    cost grows steeply with p, keep p small.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if spectrum.p != params.p:
        raise ValueError("spectrum size does not match params.p")
    p, beta, gamma = params.p, params.beta, params.gamma
    nbar = p + 2 - beta
    sqrt_lam = np.sqrt(spectrum.lambdas)
    eye = np.eye(p)
    chunk = 4096
    at_t = np.empty(samples)
    at_0 = np.empty(samples)
    for start in range(0, samples, chunk):
        stop = min(start + chunk, samples)
        mats = np.empty((stop - start, p, p), dtype=complex if beta == 2 else float)
        for idx in range(start, stop):
            w = sqrt_lam[:, None] * _draw_w(beta, p, nbar, _rng(seed, _STREAM_DUAL, idx))
            mats[idx - start] = w @ w.conj().T
        at_0[start:stop] = np.linalg.det(mats).real ** gamma
        at_t[start:stop] = np.linalg.det(mats + t * eye).real ** gamma
    prefactor = float(np.exp(-0.5 * beta * t * spectrum.trace_inv))
    return _ratio_estimate(at_t, at_0, prefactor)


@dataclass(frozen=True)
class DualityCheck:
    lhs: float
    rhs: float
    pooled_stderr: float
    n_hat: int


def duality_check(beta: int, p: int, n: int, l: int, m: int, z: float,
                  spectrum: CorrelationSpectrum, samples: int, seed: int = 0) -> DualityCheck:
    """Two-sided MC test of the column-reduction duality.

    Averages det^m(W W^dagger + z) / det^l(W W^dagger) over p x n blocks
    against det^m(V V^dagger + z) over p x n_hat blocks, n_hat = n - 2l/beta,
    both normalized at z = 0 so the volume constants drop out.  With l = 0
    the two sides are the same estimator and are computed from the same
    stream, hence agree identically.
    """
    if beta not in (1, 2):
        raise ValueError(f"beta must be 1 or 2, got {beta}")
    if l < 0 or m < 0:
        raise ValueError("l and m must be non-negative integers")
    n_hat = n - (2 * l) // beta  # 2l/beta is integral for beta in {1, 2}
    if n_hat < p:
        raise ValueError(f"duality requires n - 2l/beta >= p, got {n_hat} < {p}")
    if z < 0:
        raise ValueError(f"z must be >= 0, got {z}")
    if spectrum.p != p:
        raise ValueError("spectrum size does not match p")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    sqrt_lam = np.sqrt(spectrum.lambdas)
    eye = np.eye(p)
    chunk = 4096

    def side(cols: int, det_den_power: int, stream: int) -> McEstimate:
        num = np.empty(samples)
        den = np.empty(samples)
        for start in range(0, samples, chunk):
            stop = min(start + chunk, samples)
            mats = np.empty((stop - start, p, p), dtype=complex if beta == 2 else float)
            for idx in range(start, stop):
                w = sqrt_lam[:, None] * _draw_w(beta, p, cols, _rng(seed, stream, idx))
                mats[idx - start] = w @ w.conj().T
            d0 = np.linalg.det(mats).real
            dz = np.linalg.det(mats + z * eye).real
            weight = d0 ** (-det_den_power) if det_den_power else np.ones_like(d0)
            num[start:stop] = dz**m * weight
            den[start:stop] = d0**m * weight
        return _ratio_estimate(num, den)

    lhs = side(n, l, _STREAM_DUALITY_LHS)
    rhs_stream = _STREAM_DUALITY_LHS if l == 0 else _STREAM_DUALITY_RHS
    rhs = side(n_hat, 0, rhs_stream)
    pooled = float(np.hypot(lhs.stderr, rhs.stderr))
    return DualityCheck(lhs=lhs.value, rhs=rhs.value, pooled_stderr=pooled, n_hat=n_hat)


def ks_distance(run: McRun, model_survival: Callable[[np.ndarray], Sequence[float]]) -> float:
    """Sup distance between the empirical and model survival functions.

    Evaluated at the order statistics with both one-sided jumps of the
    empirical step function considered.  `model_survival` is called once
    with the full sorted draw array; a scalar-only callable is looped.
    """
    xs = run.draws
    if xs.size == 0:
        raise ValueError("run contains no draws")
    try:
        model = np.asarray(model_survival(xs), dtype=float)
        if model.shape != xs.shape:
            raise TypeError
    except TypeError:
        model = np.array([float(model_survival(float(x))) for x in xs])
    n = xs.size
    above = 1.0 - np.arange(n) / n        # empirical survival just left of x_i
    below = 1.0 - np.arange(1, n + 1) / n  # at and right of x_i
    return float(np.maximum(np.abs(above - model), np.abs(below - model)).max())


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS statistic between draw sets a and b."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(fa - fb).max())
