"""Dense linear algebra for kernel assembly and sampling.

Determinants and Pfaffians run entirely in (sign, ln|value|) arithmetic so
that kernel matrices whose entries span hundreds of orders of magnitude
stay computable.  The float-valued helpers (eigensolver, Cholesky) back the
Monte Carlo side, where inputs are O(1)-conditioned.

The log-domain algorithms are written over batches of matrices, shape
(B, d, d), carried as a pair of arrays (signs in {-1, 0, +1}, logs with
-inf marking exact zeros).  The scalar operations on LogSignedValue
matrices delegate to the batch of size one.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .special_functions import NEG_INF, LogSignedValue

_ANTISYMMETRY_RTOL = 1e-10

# Elimination accumulates in extended precision where the platform has it
# (x86-64 long double); the kernel matrices are ill-conditioned enough that
# pure float64 Gaussian elimination loses ~6 digits on gamma = 4 Pfaffians.
_ACC_DTYPE = np.longdouble


def signed_add(s1, l1, s2, l2):
    """Elementwise a + b on (sign, log) arrays; returns (sign, log).

    Exact cancellation and zero operands come out as (0, -inf).
    """
    s1 = np.asarray(s1)
    s2 = np.asarray(s2)
    l1 = np.where(s1 == 0, NEG_INF, l1)
    l2 = np.where(s2 == 0, NEG_INF, l2)
    take1 = l1 >= l2
    lmax = np.where(take1, l1, l2)
    lmin = np.where(take1, l2, l1)
    smax = np.where(take1, s1, s2)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        ratio = np.exp(lmin - lmax)  # in [0, 1]; NaN when both zero
        adj = np.where(s1 == s2, np.log1p(ratio), np.log1p(-ratio))
        out_l = lmax + adj
    dead = ~(out_l > NEG_INF)  # catches -inf and NaN
    out_l = np.where(dead, NEG_INF, out_l)
    out_s = np.where(dead, 0, smax).astype(np.int8)
    return out_s, out_l


def log_det_batch(signs: np.ndarray, logs: np.ndarray):
    """Determinants of a (B, d, d) batch in log-signed arithmetic.

    LU with partial pivoting after per-row magnitude extraction: each row's
    max log-magnitude is factored out up front and re-added at the end, so
    rows spanning 10^+-300 do not skew pivot selection.
    """
    s = np.array(signs, dtype=np.int8)
    L = np.array(logs, dtype=float)
    if s.shape != L.shape or L.ndim != 3 or L.shape[1] != L.shape[2]:
        raise ValueError("log_det_batch expects matching (B, d, d) arrays")
    B, d, _ = L.shape
    det_s = np.ones(B, dtype=np.int8)
    det_l = np.zeros(B)
    if d == 0:
        return det_s, det_l
    L = np.where(s == 0, NEG_INF, L)

    rowmax = L.max(axis=2)
    dead_row = ~np.isfinite(rowmax)
    det_s[dead_row.any(axis=1)] = 0
    rm = np.where(dead_row, 0.0, rowmax)
    det_l += rm.sum(axis=1)
    L = L - rm[:, :, None]

    bi = np.arange(B)
    for k in range(d):
        piv = k + np.argmax(L[:, k:, k], axis=1)
        piv_l = L[bi, piv, k]
        singular = ~np.isfinite(piv_l)
        det_s[singular] = 0
        piv = np.where(singular, k, piv)
        swap = piv != k
        if swap.any():
            tmp_s = s[bi, k, :].copy()
            tmp_l = L[bi, k, :].copy()
            s[bi, k, :] = s[bi, piv, :]
            L[bi, k, :] = L[bi, piv, :]
            s[bi, piv, :] = tmp_s
            L[bi, piv, :] = tmp_l
            det_s = np.where(swap, -det_s, det_s).astype(np.int8)
        pk_s = s[:, k, k]
        pk_l = L[:, k, k]
        det_s = (det_s * pk_s).astype(np.int8)
        det_l += np.where(np.isfinite(pk_l), pk_l, 0.0)
        if k + 1 < d:
            safe_pl = np.where(np.isfinite(pk_l), pk_l, 0.0)
            f_s = (s[:, k + 1 :, k] * pk_s[:, None]).astype(np.int8)
            f_l = np.where(f_s == 0, NEG_INF, L[:, k + 1 :, k] - safe_pl[:, None])
            t_s = (f_s[:, :, None] * s[:, k, None, k + 1 :]).astype(np.int8)
            t_l = np.where(t_s == 0, NEG_INF, f_l[:, :, None] + L[:, k, None, k + 1 :])
            blk_s, blk_l = signed_add(
                s[:, k + 1 :, k + 1 :], L[:, k + 1 :, k + 1 :], (-t_s).astype(np.int8), t_l
            )
            s[:, k + 1 :, k + 1 :] = blk_s
            L[:, k + 1 :, k + 1 :] = blk_l
    det_l = np.where(det_s == 0, NEG_INF, det_l)
    return det_s, det_l


def pfaffian_batch(signs: np.ndarray, logs: np.ndarray):
    """Pfaffians of a (B, d, d) batch of antisymmetric matrices, d even.

    Parlett-Reid tridiagonalization: skew-symmetric Gaussian elimination
    with symmetric row+column pivoting, accumulating the product of
    super-diagonal pivots and the permutation sign.  Antisymmetry of the
    input is the caller's responsibility (checked in :func:`pfaffian`).

    Entries are first equilibrated symmetrically, D M D with
    D_i = exp(-rowmax_i / 2): this keeps the matrix antisymmetric, undoes
    any separable row/column scaling (kernel variants differ by exactly
    such factors spanning many decades), and is repaid through
    pf(M) = pf(D M D) / det(D).
    """
    s = np.array(signs, dtype=np.int8)
    L = np.array(logs, dtype=float)
    if s.shape != L.shape or L.ndim != 3 or L.shape[1] != L.shape[2]:
        raise ValueError("pfaffian_batch expects matching (B, d, d) arrays")
    B, d, _ = L.shape
    if d % 2 != 0:
        raise ValueError(f"pfaffian requires even dimension, got {d}")
    pf_s = np.ones(B, dtype=np.int8)
    pf_l = np.zeros(B)
    if d == 0:
        return pf_s, pf_l
    L = np.where(s == 0, NEG_INF, L)

    rowmax = L.max(axis=2)
    dead_row = ~np.isfinite(rowmax)  # an all-zero row makes the Pfaffian zero
    pf_s[dead_row.any(axis=1)] = 0
    rm = np.where(dead_row, 0.0, rowmax)
    pf_l += rm.sum(axis=1) / 2.0
    L = L - 0.5 * (rm[:, :, None] + rm[:, None, :])

    bi = np.arange(B)
    for k in range(0, d - 1, 2):
        piv = (k + 1) + np.argmax(L[:, k + 1 :, k], axis=1)
        piv_l = L[bi, piv, k]
        singular = ~np.isfinite(piv_l)
        pf_s[singular] = 0
        piv = np.where(singular, k + 1, piv)
        swap = piv != k + 1
        if swap.any():
            tmp_s = s[bi, k + 1, :].copy()
            tmp_l = L[bi, k + 1, :].copy()
            s[bi, k + 1, :] = s[bi, piv, :]
            L[bi, k + 1, :] = L[bi, piv, :]
            s[bi, piv, :] = tmp_s
            L[bi, piv, :] = tmp_l
            tmp_s = s[bi, :, k + 1].copy()
            tmp_l = L[bi, :, k + 1].copy()
            s[bi, :, k + 1] = s[bi, :, piv]
            L[bi, :, k + 1] = L[bi, :, piv]
            s[bi, :, piv] = tmp_s
            L[bi, :, piv] = tmp_l
            pf_s = np.where(swap, -pf_s, pf_s).astype(np.int8)
        a_s = s[:, k, k + 1]
        a_l = L[:, k, k + 1]
        pf_s = (pf_s * a_s).astype(np.int8)
        pf_l += np.where(np.isfinite(a_l), a_l, 0.0)
        if k + 2 < d:
            safe_al = np.where(np.isfinite(a_l), a_l, 0.0)
            # Gauss vector tau_j = A[k, k+2+j] / A[k, k+1]
            tau_s = (s[:, k, k + 2 :] * a_s[:, None]).astype(np.int8)
            tau_l = np.where(tau_s == 0, NEG_INF, L[:, k, k + 2 :] - safe_al[:, None])
            v_s = s[:, k + 2 :, k + 1]
            v_l = L[:, k + 2 :, k + 1]
            # rank-2 skew update: A_ij += tau_i v_j - v_i tau_j
            d1_s = (tau_s[:, :, None] * v_s[:, None, :]).astype(np.int8)
            d1_l = np.where(d1_s == 0, NEG_INF, tau_l[:, :, None] + v_l[:, None, :])
            blk_s, blk_l = signed_add(s[:, k + 2 :, k + 2 :], L[:, k + 2 :, k + 2 :], d1_s, d1_l)
            d2_s = (-(v_s[:, :, None] * tau_s[:, None, :])).astype(np.int8)
            d2_l = np.where(d2_s == 0, NEG_INF, v_l[:, :, None] + tau_l[:, None, :])
            blk_s, blk_l = signed_add(blk_s, blk_l, d2_s, d2_l)
            s[:, k + 2 :, k + 2 :] = blk_s
            L[:, k + 2 :, k + 2 :] = blk_l
    pf_l = np.where(pf_s == 0, NEG_INF, pf_l)
    return pf_s, pf_l


def _to_sign_log(matrix: Sequence[Sequence[LogSignedValue]]):
    rows = list(matrix)
    d = len(rows)
    signs = np.zeros((1, d, d), dtype=np.int8)
    logs = np.full((1, d, d), NEG_INF)
    for i, row in enumerate(rows):
        if len(row) != d:
            raise ValueError(f"matrix is not square: row {i} has {len(row)} entries, expected {d}")
        for j, v in enumerate(row):
            if not isinstance(v, LogSignedValue):
                raise ValueError(f"entry ({i}, {j}) is not a LogSignedValue")
            if v.sign != 0 and not np.isfinite(v.log_abs):
                raise ValueError(f"entry ({i}, {j}) has non-finite log magnitude")
            signs[0, i, j] = v.sign
            logs[0, i, j] = v.log_abs if v.sign != 0 else NEG_INF
    return signs, logs


def log_det(matrix: Sequence[Sequence[LogSignedValue]]) -> LogSignedValue:
    """Determinant of a square matrix of LogSignedValue entries."""
    signs, logs = _to_sign_log(matrix)
    ds, dl = log_det_batch(signs, logs)
    return LogSignedValue.from_log(int(ds[0]), float(dl[0]))


def pfaffian(matrix: Sequence[Sequence[LogSignedValue]]) -> LogSignedValue:
    """Pfaffian of an even-dimensional antisymmetric LogSignedValue matrix.

    Checks M = -M^T to within 1e-10 relative to the largest entry
    magnitude before running Parlett-Reid, and satisfies pf(M)^2 = det(M).
    """
    signs, logs = _to_sign_log(matrix)
    d = signs.shape[1]
    if d % 2 != 0:
        raise ValueError(f"pfaffian requires even dimension, got {d}")
    if d > 0:
        finite = logs[np.asarray(signs) != 0]
        max_log = float(finite.max()) if finite.size else NEG_INF
        sum_s, sum_l = signed_add(
            signs, logs, signs.transpose(0, 2, 1), logs.transpose(0, 2, 1)
        )
        bound = max_log + np.log(_ANTISYMMETRY_RTOL)
        if max_log > NEG_INF and np.any((sum_s != 0) & (sum_l > bound)):
            raise ValueError("matrix is not antisymmetric within 1e-10 relative tolerance")
    ps, pl = pfaffian_batch(signs, logs)
    return LogSignedValue.from_log(int(ps[0]), float(pl[0]))


def smallest_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a real symmetric or complex Hermitian matrix.

    Backed by LAPACK's symmetric eigensolver (Householder reduction plus
    the implicit-shift family); full spectrum, smallest returned.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"smallest_eigenvalue requires a square matrix, got shape {m.shape}")
    scale = float(np.abs(m).max()) if m.size else 0.0
    if not np.allclose(m, m.conj().T, atol=1e-10 * max(scale, 1.0), rtol=0.0):
        raise ValueError("matrix is not symmetric/Hermitian within tolerance")
    try:
        eigs = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise RuntimeError(f"eigensolver did not converge for dim {m.shape[0]}: {exc}") from exc
    return float(eigs[0])


def cholesky(matrix: np.ndarray) -> np.ndarray:
    """Lower-triangular A with A A^dagger = C, for positive-definite C."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"cholesky requires a square matrix, got shape {m.shape}")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix is not positive definite") from exc
