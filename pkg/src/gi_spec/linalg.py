"""Dense linear-algebra kernel.

Thin wrappers around LAPACK (through numpy/scipy) that add the input checks
and residual bookkeeping the rest of the package relies on.  Every matrix in
this package is small (at most a few thousand rows), so everything is dense.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

MAX_DIM = 2048
RANK_TOL = 1e-10


class LinAlgError(ValueError):
    """Invalid input to one of the kernel routines."""


class ConvergenceError(LinAlgError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class NotPositiveDefiniteError(LinAlgError):
    pass


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residual_bound: float

    def __len__(self):
        return len(self.eigenvalues)


def as_matrix(A, name="A", square=True) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2:
        raise LinAlgError(f"{name} must be two-dimensional, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise LinAlgError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise LinAlgError(f"{name} has non-finite entries")
    return A


def _relative_residuals(A, w, V):
    normA = np.linalg.norm(A, 2) if A.size else 0.0
    R = A @ V - V * w
    num = np.linalg.norm(R, axis=0)
    den = max(normA, np.finfo(float).tiny) * np.linalg.norm(V, axis=0)
    return num / den


def eig_complex(A) -> EigenResult:
    """All eigenvalues (with multiplicity) and right eigenvectors of ``A``.

    ``residual_bound`` is the largest ``|Av - mu v| / (|A| |v|)`` over the
    returned pairs, plus ``n * eps``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if n > MAX_DIM:
        raise LinAlgError(f"dimension {n} exceeds {MAX_DIM}")
    if n == 0:
        return EigenResult(np.zeros(0, complex), np.zeros((0, 0), complex), 0.0)
    try:
        w, V = np.linalg.eig(A.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration failed: {exc}") from exc
    res = _relative_residuals(A, w, V)
    # n * eps absorbs the rounding of re-evaluating the residual itself
    bound = float(res.max()) + n * np.finfo(float).eps if res.size else 0.0
    if not np.isfinite(bound):
        raise ConvergenceError("eigensolver returned non-finite pairs", bound)
    return EigenResult(w, V, bound)


def eigvals_complex(A) -> np.ndarray:
    return eig_complex(A).eigenvalues


def singular_values(A) -> np.ndarray:
    A = as_matrix(A, square=False)
    return np.linalg.svd(A, compute_uv=False)


def numerical_rank(A, tol=RANK_TOL) -> int:
    s = singular_values(A)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def nullspace(A, tol=RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical nullspace of ``A``.

    A right singular vector belongs to the nullspace when its singular value
    is at most ``tol * sigma_max``.  Returns an ``n x 0`` array when the
    nullspace is trivial.
    """
    if tol <= 0:
        raise LinAlgError("tol must be positive")
    A = as_matrix(A, square=False)
    m, n = A.shape
    if n == 0:
        return np.zeros((0, 0), dtype=A.dtype)
    if m == 0:
        return np.eye(n, dtype=A.dtype)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return Vh[rank:].conj().T.copy()


def eig_sym_generalized(A, B) -> EigenResult:
    """Solve ``A v = mu B v`` for Hermitian ``A`` and Hermitian positive definite ``B``.

    Eigenvalues are real and ascending, eigenvectors are B-orthonormal.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise LinAlgError(f"shape mismatch {A.shape} vs {B.shape}")
    A = 0.5 * (A + A.conj().T)
    B = 0.5 * (B + B.conj().T)
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("B is not positive definite") from exc
    Li = sla.solve_triangular(L, np.eye(len(B)), lower=True)
    At = Li @ A @ Li.conj().T
    w, Y = np.linalg.eigh(0.5 * (At + At.conj().T))
    V = Li.conj().T @ Y
    R = A @ V - (B @ V) * w
    scale = np.linalg.norm(A, 2) + np.abs(w) * np.linalg.norm(B, 2)
    scale = np.maximum(scale, np.finfo(float).tiny)
    res = np.linalg.norm(R, axis=0) / (scale * np.linalg.norm(V, axis=0)) if len(w) else np.zeros(0)
    return EigenResult(w, V, float(res.max()) if res.size else 0.0)


def _cholesky_factor(M):
    M = 0.5 * (M + M.conj().T)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("mass matrix is not positive definite") from exc


def reduced_pencil(M, C, K):
    """Congruence by the Cholesky factor of ``M``: returns ``(L, C~, K~)``.

    With ``M = L L^H`` the pencil ``l^2 M + 2 l C + K`` becomes
    ``l^2 I + 2 l C~ + K~`` acting on ``y = L^H v``.  Hermitian and
    skew-Hermitian parts of ``C`` and ``K`` are preserved exactly.
    """
    M = as_matrix(M, "M")
    C = as_matrix(C, "C")
    K = as_matrix(K, "K")
    if not (M.shape == C.shape == K.shape):
        raise LinAlgError("M, C, K must share one square shape")
    L = _cholesky_factor(M)
    Li = sla.solve_triangular(L, np.eye(len(M)), lower=True)
    Ct = Li @ C @ Li.conj().T
    Kt = Li @ K @ Li.conj().T
    if np.array_equal(C, -C.conj().T):
        Ct = 0.5 * (Ct - Ct.conj().T)
    if np.array_equal(K, K.conj().T):
        Kt = 0.5 * (Kt + Kt.conj().T)
    return L, Ct, Kt


def companion(M, C, K):
    """Companion linearization ``[[0, I], [-K~, -2 C~]]`` of the reduced pencil.

    Returns ``(A, L)``; an eigenvector ``(y, l y)`` of ``A`` maps back to the
    pencil eigenvector ``v = L^{-H} y``.
    """
    L, Ct, Kt = reduced_pencil(M, C, K)
    n = len(Ct)
    A = np.zeros((2 * n, 2 * n), dtype=np.result_type(Ct, Kt, float))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Kt
    A[n:, n:] = -2.0 * Ct
    return A, L


def pencil_residuals(M, C, K, lam, V):
    """Relative residuals ``|(l^2 M + 2 l C + K) v| / ((|M||l|^2 + 2|C||l| + |K|) |v|)``."""
    nM, nC, nK = (np.linalg.norm(X, 2) if X.size else 0.0 for X in (M, C, K))
    out = np.empty(len(lam))
    for j, (l, v) in enumerate(zip(lam, V.T)):
        r = (l * l) * (M @ v) + 2 * l * (C @ v) + K @ v
        scale = (nM * abs(l) ** 2 + 2 * nC * abs(l) + nK) * np.linalg.norm(v)
        out[j] = np.linalg.norm(r) / scale if scale > 0 else np.linalg.norm(r)
    return out


def gyroscopic_linearization(M, C, K, rank_tol=1e-12):
    """Size ``n + r`` linearization for Hermitian ``K`` and skew-Hermitian ``C``.

    With ``K~ = F J F^H`` (``r = rank K~``, ``J = diag(+-1)``) the nonzero
    pencil eigenvalues are those of ``S = [[-2 C~, -F J], [F^H, 0]]`` acting on
    ``(y, F^H y / l)``; the remaining ``n - r`` roots are zero with
    eigenvectors spanning ``ker K~``.  For ``J = I`` the matrix ``S`` is
    skew-Hermitian, so its spectrum is exactly imaginary; this avoids the
    spurious real parts a companion form produces around a large defective
    zero eigenvalue.

    Returns ``(S, L, kernel, definite)`` where ``kernel`` holds the ``n - r``
    reduced-coordinate kernel vectors and ``definite`` is True when ``J = I``.
    """
    L, Ct, _ = reduced_pencil(M, C, K)
    # rank and signature are read off K itself: the congruence by L^-1
    # amplifies rounding in ker K by cond(M)
    d, Q = np.linalg.eigh(as_matrix(K, "K"))
    top = np.abs(d).max() if d.size else 0.0
    keep = np.abs(d) > rank_tol * top if top > 0 else np.zeros(len(d), bool)
    G = Q[:, keep] * np.sqrt(np.abs(d[keep]))
    F = sla.solve_triangular(L, G, lower=True)
    J = np.sign(d[keep])
    n, r = len(Ct), int(keep.sum())
    S = np.zeros((n + r, n + r), dtype=np.result_type(Ct, F, float))
    S[:n, :n] = -2.0 * Ct
    S[:n, n:] = -F * J
    S[n:, :n] = F.conj().T
    kernel = np.linalg.qr(L.conj().T @ Q[:, ~keep])[0] if r < n else np.zeros((n, 0))
    return S, L, kernel, bool(np.all(J > 0))


def _structured_ok(M, C, K):
    C, K = as_matrix(C, "C"), as_matrix(K, "K")
    return np.array_equal(C, -C.conj().T) and np.array_equal(K, K.conj().T)


def solve_quadratic_pencil(M, C, K, method="auto") -> EigenResult:
    """The ``2n`` eigenvalues of ``l^2 M + 2 l C + K`` for Hermitian positive definite ``M``.

    ``method`` is ``"structured"`` (see :func:`gyroscopic_linearization`),
    ``"companion"``, or ``"auto"``, which picks the structured form whenever
    ``C`` is exactly skew-Hermitian and ``K`` exactly Hermitian.

    Eigenvectors returned are those of the pencil (``n x 2n``), not of the
    linearization.
    """
    if method not in ("auto", "structured", "companion"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "structured" if _structured_ok(M, C, K) else "companion"
    M, C, K = as_matrix(M, "M"), as_matrix(C, "C"), as_matrix(K, "K")
    n = len(M)
    if n == 0:
        _cholesky_factor(M) if M.size else None
        return EigenResult(np.zeros(0, complex), np.zeros((0, 0), complex), 0.0)
    if method == "companion":
        A, L = companion(M, C, K)
        lin = eig_complex(A)
        Y = lin.eigenvectors
        # the better-conditioned half of (y, l y) carries the direction
        top, bot = Y[:n], Y[n:]
        use_top = np.linalg.norm(top, axis=0) >= np.linalg.norm(bot, axis=0)
        Yp = np.where(use_top, top, bot)
        lam = lin.eigenvalues
    else:
        if not _structured_ok(M, C, K):
            raise LinAlgError("structured solve needs skew-Hermitian C and Hermitian K")
        S, L, kernel, definite = gyroscopic_linearization(M, C, K)
        r = S.shape[0] - n
        if definite:
            # i S is Hermitian: real spectrum mu gives l = -i mu exactly on the axis
            mu, Z = np.linalg.eigh(1j * S)
            w = -1j * mu
        elif not np.any(S[:n, :n]) and np.all(np.isclose(S[:n, n:], S[n:, :n].conj().T, rtol=0, atol=0)) and r:
            # C = 0 and K <= 0: S is Hermitian, real spectrum
            mu, Z = np.linalg.eigh(S)
            w = mu.astype(complex)
        else:
            w, Z = np.linalg.eig(S)
        lam = np.concatenate([w, np.zeros(kernel.shape[1], complex)])
        Yp = np.hstack([Z[:n], kernel]).astype(complex)
    V = sla.solve_triangular(L.conj().T, Yp, lower=False)
    nv = np.linalg.norm(V, axis=0)
    V = V / np.where(nv > 0, nv, 1.0)
    res = pencil_residuals(M, C, K, lam, V)
    return EigenResult(np.asarray(lam, complex), V, float(res.max()))
