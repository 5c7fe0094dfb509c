"""Empirical correlation spectra and their cached invariants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .special_functions import LogSignedValue


@dataclass(frozen=True)
class CorrelationSpectrum:
    """Positive eigenvalues of the empirical correlation matrix.

    Carries the elementary symmetric polynomials e_0..e_p of the
    eigenvalues (log domain; e_100 of a 200-dim spectrum has no linear
    representation), plus tr Lambda^-1 and log det Lambda.  Immutable and
    freely shareable.
    """

    lambdas: np.ndarray
    e: tuple[LogSignedValue, ...]
    trace_inv: float
    log_det: float
    log_e: np.ndarray = field(repr=False)

    @property
    def p(self) -> int:
        return self.lambdas.size


def build_spectrum(lambdas: Sequence[float]) -> CorrelationSpectrum:
    """Validate eigenvalues and compute e_k by the stable recurrence.

    e_k after adjoining eigenvalue L is e_k + L * e_{k-1}; every term is
    positive, so the log-domain recurrence has no cancellation.
    """
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.size == 0:
        raise ValueError("spectrum must contain at least one eigenvalue")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise ValueError("C must be positive definite")
    log_lam = np.log(lam)
    log_e = np.zeros(1)
    for ln in log_lam:
        nxt = np.empty(log_e.size + 1)
        nxt[0] = 0.0
        if log_e.size > 1:
            nxt[1:-1] = np.logaddexp(log_e[1:], ln + log_e[:-1])
        nxt[-1] = ln + log_e[-1]
        log_e = nxt
    lam = lam.copy()
    lam.setflags(write=False)
    log_e.setflags(write=False)
    return CorrelationSpectrum(
        lambdas=lam,
        e=tuple(LogSignedValue(1, float(v)) for v in log_e),
        trace_inv=float(np.sum(1.0 / lam)),
        log_det=float(np.sum(log_lam)),
        log_e=log_e,
    )
