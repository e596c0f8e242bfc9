"""Cyclic Jacobi eigensolver for real symmetric and complex Hermitian matrices."""

from __future__ import annotations

import math

import numpy as np

JACOBI_RTOL = 1e-13
MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    pass


def _off(a: np.ndarray) -> float:
    # direct sum; subtracting the diagonal from the total loses the small residual
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def jacobi_eigh(a: np.ndarray, rtol: float = JACOBI_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real symmetric matrix.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm is at
    most ``rtol * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("matrix must be square")
    a = (a + a.T) / 2
    v = np.eye(n)
    target = rtol * max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(MAX_SWEEPS):
        if _off(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        if _off(a) > target:
            raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigh(h: np.ndarray, rtol: float = JACOBI_RTOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix through its real symmetric embedding.

    ``A + iB`` becomes ``[[A, -B], [B, A]]``; every eigenvalue shows up twice
    there, and an embedded eigenvector ``(x, y)`` gives the complex
    eigenvector ``x + iy``. Within each repeated eigenvalue the complex
    candidates are orthonormalized to recover a full basis.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    re, im = h.real, h.imag
    big = np.block([[re, -im], [im, re]])
    w2, v2 = jacobi_eigh(big, rtol)
    scale = max(float(np.max(np.abs(w2))), 1.0)
    gap = 1e-8 * scale

    values = w2[::2].copy()
    vectors: list[np.ndarray] = []
    i = 0
    while i < 2 * n:
        j = i + 1
        while j < 2 * n and w2[j] - w2[j - 1] <= gap:
            j += 1
        want = (j - i) // 2
        found: list[np.ndarray] = []
        for k in range(i, j):
            z = v2[:n, k] + 1j * v2[n:, k]
            for f in found:
                z = z - np.vdot(f, z) * f
            nz = np.linalg.norm(z)
            if nz > 1e-6:
                found.append(z / nz)
            if len(found) == want:
                break
        vectors.extend(found)
        i = j
    if len(vectors) != n:
        raise ConvergenceError("could not recover a complete complex eigenbasis")
    return values, np.column_stack(vectors)
