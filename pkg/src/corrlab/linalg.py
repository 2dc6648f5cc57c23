"""Small dense linear algebra for Hermitian operators.

Eigenvalues come from cyclic Jacobi rotations on the real symmetric embedding
[[Re A, -Im A], [Im A, Re A]], whose spectrum is that of ``A`` with every
eigenvalue doubled.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

EPS_EIG = 1e-12
EPS_HERM = 1e-12
MAX_SWEEPS = 100


class ConvergenceError(ArithmeticError):
    pass


def is_hermitian(m: np.ndarray, rel_tol: float = EPS_HERM) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(np.abs(m).max(initial=0.0), 1.0) if m.size else 1.0
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= rel_tol * scale)


def _require_hermitian(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian")
    return m


def jacobi_symmetric(a: np.ndarray, tol: float = EPS_EIG, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, ascending."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.reshape(1).copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def hermitian_eigenvalues(m: np.ndarray, tol: float = EPS_EIG) -> list[float]:
    """Sorted real eigenvalues of a Hermitian matrix."""
    m = _require_hermitian(m)
    re, im = m.real, m.imag
    if not im.any():
        return [float(v) for v in jacobi_symmetric((re + re.T) / 2, tol)]
    emb = np.block([[re, -im], [im, re]])
    vals = jacobi_symmetric((emb + emb.T) / 2, tol)
    return [float((vals[2 * i] + vals[2 * i + 1]) / 2) for i in range(m.shape[0])]


def min_eigenvalue(m: np.ndarray) -> float:
    return hermitian_eigenvalues(m)[0]


def operator_norm(m: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    vals = hermitian_eigenvalues(m)
    return max(abs(vals[0]), abs(vals[-1]))


def tensor(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product, first factor most significant."""
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, np.asarray(m))
    return out


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    m = np.asarray(m)
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(f"matrix of shape {m.shape} does not match subsystem dims {list(dims)}")
    return m


def partial_trace(m: np.ndarray, dims: Sequence[int], traced: Sequence[int]) -> np.ndarray:
    """Trace out the listed subsystems (0-based) of an operator on prod(dims)."""
    dims = list(dims)
    m = _check_dims(m, dims)
    traced = sorted(set(traced))
    if not traced:
        raise ValueError("no subsystems to trace out")
    if traced[0] < 0 or traced[-1] >= len(dims):
        raise ValueError(f"subsystem index out of range in {traced}")
    t = m.reshape(dims + dims)
    n = len(dims)
    for k in reversed(traced):
        t = np.trace(t, axis1=k, axis2=k + n)
        n -= 1
    kept = [d for i, d in enumerate(dims) if i not in traced]
    size = int(np.prod(kept)) if kept else 1
    return t.reshape(size, size)


def partial_transpose(m: np.ndarray, dims: Sequence[int], subsystem: int) -> np.ndarray:
    dims = list(dims)
    m = _check_dims(m, dims)
    n = len(dims)
    if not 0 <= subsystem < n:
        raise ValueError(f"subsystem {subsystem} out of range")
    perm = list(range(2 * n))
    perm[subsystem], perm[subsystem + n] = perm[subsystem + n], perm[subsystem]
    total = int(np.prod(dims))
    return m.reshape(dims + dims).transpose(perm).reshape(total, total)


def permute_subsystems(m: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``i`` is input factor ``order[i]``."""
    dims = list(dims)
    m = _check_dims(m, dims)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} subsystems")
    total = int(np.prod(dims))
    return m.reshape(dims + dims).transpose(order + [o + n for o in order]).reshape(total, total)
