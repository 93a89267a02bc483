"""Frozen-coefficient symbol algebra of the inertia-gravity operator.

At a point ``x`` and covector ``xi`` the interior operator reduces to the
3x3 matrix

    P (lam^2 I + 2 lam [Omega x] + N^2 g^ g^T) P,    P = I - xi xi^T / |xi|^2,

whose rank can drop below two only at ``lam = 0`` or
``lam^2 = -(4 Omega_xi^2 + N^2 |P g^|^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PlanetModel, eval_background

RANK_TOL = 1e-9


def cross_matrix(v) -> np.ndarray:
    """Matrix of ``w -> v x w``."""
    a, b, c = np.asarray(v).reshape(3)
    return np.array([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]], dtype=np.result_type(v, float))


def projector_perp(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).reshape(3)
    s = xi @ xi
    if s == 0:
        raise ValueError("xi must be nonzero")
    return np.eye(3) - np.outer(xi, xi) / s


def projector_along(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float).reshape(3)
    return np.outer(xi, xi) / (xi @ xi)


def v_matrix(lam, omega, nsq, ghat) -> np.ndarray:
    """``V(lam) = lam^2 I + 2 lam [Omega x] + N^2 g^ g^T``."""
    ghat = np.asarray(ghat, dtype=float)
    return (lam * lam) * np.eye(3) + 2 * lam * cross_matrix(omega) + nsq * np.outer(ghat, ghat)


@dataclass(frozen=True)
class PointSymbol:
    x: np.ndarray
    xi: np.ndarray
    lam: complex
    matrix: np.ndarray


@dataclass(frozen=True)
class PointSpectrum:
    values: tuple
    betas: tuple

    def contains(self, lam, tol=1e-9):
        return any(abs(lam - v) <= tol for v in self.values)


def _local(model, x):
    b = eval_background(model, x)
    return model.omega_vec, b.nsq, b.ghat


def symbol_matrix_local(omega, nsq, ghat, xi, lam) -> np.ndarray:
    P = projector_perp(xi)
    return P @ v_matrix(lam, omega, nsq, ghat) @ P


def symbol_matrix(model: PlanetModel, x, xi, lam) -> PointSymbol:
    omega, nsq, ghat = _local(model, x)
    xi = np.asarray(xi, dtype=float)
    return PointSymbol(np.asarray(x, float), xi, complex(lam), symbol_matrix_local(omega, nsq, ghat, xi, lam))


def pointwise_radicand(omega, nsq, ghat, xi) -> float:
    """``4 Omega_xi^2 + N^2 |P_xi g^|^2``."""
    xi = np.asarray(xi, dtype=float)
    xh = xi / np.linalg.norm(xi)
    om_xi = float(np.dot(omega, xh))
    pg = np.asarray(ghat, float) - np.dot(ghat, xh) * xh
    return 4.0 * om_xi**2 + nsq * float(pg @ pg)


def sigma_pt_local(omega, nsq, ghat, xi):
    R = pointwise_radicand(omega, nsq, ghat, xi)
    if R > 0:
        mu = np.sqrt(R)
        vals = (0j, 1j * mu, -1j * mu)
    elif R < 0:
        mu = np.sqrt(-R)
        vals = (0j, complex(mu), complex(-mu))
    else:
        vals = (0j,)
    return vals


def sigma_pt(model: PlanetModel, x, xi) -> PointSpectrum:
    """Values of ``lam`` where the projected symbol has rank below two."""
    if not np.any(np.asarray(xi, dtype=float)):
        raise ValueError("xi must be nonzero")
    omega, nsq, ghat = _local(model, x)
    return PointSpectrum(sigma_pt_local(omega, nsq, ghat, xi), beta_pm_local(omega, nsq, ghat))


def beta_pm_local(omega, nsq, ghat):
    omega = np.asarray(omega, dtype=float)
    om2 = float(omega @ omega)
    og = float(omega @ np.asarray(ghat, float))
    s = nsq + 4.0 * om2
    disc = max(s * s - 16.0 * og * og * nsq, 0.0)
    root = np.sqrt(disc)
    return 0.5 * (s - root), 0.5 * (s + root)


def beta_pm_arrays(omega, nsq, ghat):
    """Vectorized ``beta_pm_local`` over arrays of ``nsq`` and ``ghat`` rows."""
    omega = np.asarray(omega, dtype=float)
    om2 = float(omega @ omega)
    og = np.asarray(ghat) @ omega
    s = np.asarray(nsq) + 4.0 * om2
    root = np.sqrt(np.maximum(s * s - 16.0 * og * og * nsq, 0.0))
    return 0.5 * (s - root), 0.5 * (s + root)


def beta_pm(model: PlanetModel, x):
    """Extreme eigenvalues (other than N^2) of ``4 Omega Omega^T + N^2 (I - g^ g^T)``."""
    omega, nsq, ghat = _local(model, x)
    return beta_pm_local(omega, nsq, ghat)


def envelope_matrix(omega, nsq, ghat) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    ghat = np.asarray(ghat, dtype=float)
    return 4.0 * np.outer(omega, omega) + nsq * (np.eye(3) - np.outer(ghat, ghat))


def scalar_poincare_symbol(model: PlanetModel, x, xi, lam) -> complex:
    """``-i lam |xi|^2 (lam^2 + 4 Omega_xi^2 + N^2 |P_xi g^|^2)``."""
    omega, nsq, ghat = _local(model, x)
    xi = np.asarray(xi, dtype=float)
    R = pointwise_radicand(omega, nsq, ghat, xi)
    return complex(-1j * lam * float(xi @ xi) * (lam * lam + R))


def rank_deficient(matrix, tol=RANK_TOL) -> bool:
    """True when the second singular value is at most ``tol * sigma_max``."""
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0.0:
        return True
    return bool(s[1] <= tol * s[0])


def random_domain_points(model: PlanetModel, n: int, rng) -> np.ndarray:
    """Uniform points in the ellipsoid, kept off the centre and the boundary."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    r = rng.uniform(0.05, 0.95, n) ** (1 / 3)
    return v * r[:, None] * np.asarray(model.semi_axes)


@dataclass(frozen=True)
class OracleSweep:
    checked: int
    mismatches: int
    members: int


def oracle_sweep(model: PlanetModel, samples: int, rng, tol=RANK_TOL) -> OracleSweep:
    """Compare the closed-form point spectrum with SVD rank deficiency of the symbol.

    Each ``(x, xi)`` contributes its closed-form values (expected members),
    the same values shifted by a relative ``1e-3`` and one random complex
    candidate (expected non-members).
    """
    from .model import sample_background

    X = random_domain_points(model, samples, rng)
    bg = sample_background(model, X)
    Xi = rng.standard_normal((samples, 3))
    omega = model.omega_vec
    checked = bad = members = 0
    for k in range(samples):
        nsq, ghat, xi = float(bg.nsq[k]), bg.ghat[k], Xi[k]
        vals = sigma_pt_local(omega, nsq, ghat, xi)
        scale = 1.0 + np.sqrt(abs(pointwise_radicand(omega, nsq, ghat, xi))) + 2 * np.linalg.norm(omega) + np.sqrt(abs(nsq))
        cands = list(vals) + [v + 1e-3 * scale * np.exp(2j * np.pi * rng.uniform()) for v in vals]
        cands.append(scale * complex(*rng.uniform(-1.5, 1.5, 2)))
        for lam in cands:
            closed = any(abs(lam - v) <= tol * scale for v in vals)
            oracle = rank_deficient(symbol_matrix_local(omega, nsq, ghat, xi, lam), tol)
            checked += 1
            members += closed
            bad += closed != oracle
    return OracleSweep(checked, bad, members)
