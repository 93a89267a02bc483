"""Boundary ellipticity (Lopatinskii) checks for the inertia-gravity system.

The 16-component first-order system couples the potentials
``(w_u, z_u, psi_u, w_v, z_v, psi_v, phi_v, phi~)`` (sizes 3,3,1,3,3,1,1,1);
its principal symbol, divided by ``i rho0``, is linear in ``xi``.  Row blocks
have sizes 1,3,1,1,3,1,3,3.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .model import PlanetModel, boundary_normal, eval_background
from .symbol import cross_matrix, projector_along, projector_perp, v_matrix

ROW_SIZES = (1, 3, 1, 1, 3, 1, 3, 3)
COL_SIZES = (3, 3, 1, 3, 3, 1, 1, 1)
DEN_TOL = 1e-12
INDICATOR_TOL = 1e-10


class DegenerateSymbolError(ValueError):
    """The boundary-normal symbol is not invertible at this ``lam``."""


@dataclass(frozen=True)
class BoundaryFrame:
    x: np.ndarray
    n: np.ndarray
    xihat: np.ndarray
    nperp: np.ndarray


@dataclass(frozen=True)
class BigSymbol:
    frame: BoundaryFrame
    xi: np.ndarray
    lam: complex
    forward: np.ndarray
    inverse: Optional[np.ndarray]

    @property
    def invertible(self):
        return self.inverse is not None


@dataclass(frozen=True)
class LopatinskiiReport:
    vtilde_inv: Optional[np.ndarray]
    indicator: complex
    alphas: tuple
    interior_elliptic: bool
    boundary_elliptic: bool


@dataclass(frozen=True)
class OdeEigs:
    eigenvalues: np.ndarray
    plus_minus_xi_multiplicity: tuple
    alphas: tuple
    alphas_closed_form: tuple
    alpha_error: float
    degenerate: bool
    clustered: bool


def make_frame(model: PlanetModel, x, xihat=None) -> BoundaryFrame:
    """Boundary frame at ``x``; ``xihat`` defaults to a fixed tangent direction."""
    x = np.asarray(x, dtype=float)
    n = boundary_normal(model, x)
    if xihat is None:
        trial = np.eye(3)[np.argmin(np.abs(n))]
        xihat = trial - (trial @ n) * n
    xihat = np.asarray(xihat, dtype=float)
    xihat = xihat - (xihat @ n) * n
    nrm = np.linalg.norm(xihat)
    if nrm == 0:
        raise ValueError("tangential direction is parallel to the normal")
    xihat = xihat / nrm
    return BoundaryFrame(x, n, xihat, np.cross(xihat, n))


def _local(model, x):
    b = eval_background(model, x)
    return model.omega_vec, b.nsq, b.ghat, b


# --- V~_n and its inverse ----------------------------------------------------------

def vtilde(omega, nsq, ghat, n, lam) -> np.ndarray:
    """``P_n^perp V(lam) P_n^perp + P_n`` assembled directly."""
    P = projector_perp(n)
    return P @ v_matrix(lam, omega, nsq, ghat) @ P + projector_along(n)


def _normal_data(omega, nsq, ghat, n):
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    om_n = float(np.dot(omega, n))
    pg = np.asarray(ghat, float) - np.dot(ghat, n) * n
    return n, om_n, pg, float(pg @ pg)


def _denominator(lam, nsq, pg2, om_n):
    lam2 = lam * lam
    den = lam2 * lam2 + lam2 * (nsq * pg2 + 4.0 * om_n**2)
    scale = abs(lam2) ** 2 + abs(lam2) * abs(nsq * pg2 + 4.0 * om_n**2)
    return den, scale


def vtilde_inverse_local(omega, nsq, ghat, n, lam) -> np.ndarray:
    n, om_n, pg, pg2 = _normal_data(omega, nsq, ghat, n)
    den, scale = _denominator(lam, nsq, pg2, om_n)
    if scale == 0 or abs(den) <= DEN_TOL * scale:
        raise DegenerateSymbolError(f"lam={lam} lies in the pointwise set at xi = n")
    Pn = np.outer(n, n)
    Pperp = np.eye(3) - Pn
    if pg2 > 0:
        inner = Pperp @ projector_perp(pg) @ Pperp
    else:
        inner = Pperp
    num = (lam * lam) * Pperp - 2 * lam * om_n * cross_matrix(n) + nsq * pg2 * inner
    return Pn + num / den


def vtilde_inverse(model: PlanetModel, x, lam) -> np.ndarray:
    omega, nsq, ghat, _ = _local(model, x)
    return vtilde_inverse_local(omega, nsq, ghat, boundary_normal(model, x), lam)


def indicator_parts(omega, nsq, ghat, n, xihat, lam):
    """Numerator and denominator of ``xihat^T V~_n^{-1} xihat``."""
    n, om_n, pg, pg2 = _normal_data(omega, nsq, ghat, n)
    xihat = np.asarray(xihat, dtype=float)
    if pg2 > 0:
        proj = float(xihat @ projector_perp(pg) @ xihat)
    else:
        proj = float(xihat @ xihat)
    num = lam * lam + nsq * pg2 * proj
    den, _ = _denominator(lam, nsq, pg2, om_n)
    return num, den


def lopatinskii_indicator_local(omega, nsq, ghat, n, xihat, lam) -> complex:
    n_, om_n, pg, pg2 = _normal_data(omega, nsq, ghat, n)
    den, scale = _denominator(lam, nsq, pg2, om_n)
    if scale == 0 or abs(den) <= DEN_TOL * scale:
        raise DegenerateSymbolError(f"lam={lam} lies in the pointwise set at xi = n")
    num, den = indicator_parts(omega, nsq, ghat, n_, xihat, lam)
    return complex(num / den)


def _check_tangent(n, xihat):
    xihat = np.asarray(xihat, dtype=float)
    if abs(xihat @ n) > 1e-10 or abs(np.linalg.norm(xihat) - 1) > 1e-10:
        raise ValueError("xihat must be a unit vector tangent to the boundary")
    return xihat


def lopatinskii_indicator(model: PlanetModel, x, xihat, lam) -> complex:
    omega, nsq, ghat, _ = _local(model, x)
    n = boundary_normal(model, x)
    return lopatinskii_indicator_local(omega, nsq, ghat, n, _check_tangent(n, xihat), lam)


def boundary_failure_halfwidth(model: PlanetModel, x) -> float:
    omega, nsq, ghat, _ = _local(model, x)
    n = boundary_normal(model, x)
    pg = ghat - (ghat @ n) * n
    return float(np.linalg.norm(pg) * np.sqrt(max(0.0, nsq)))


def boundary_failure_interval(model: PlanetModel, x):
    """Imaginary-axis interval ``i [-h, h]`` returned as ``(-h, h)``."""
    h = boundary_failure_halfwidth(model, x)
    return (-h, h)


# --- 16 x 16 symbol ------------------------------------------------------------------

def _assemble(row_sizes, col_sizes, blocks):
    ro = np.concatenate([[0], np.cumsum(row_sizes)])
    co = np.concatenate([[0], np.cumsum(col_sizes)])
    A = np.zeros((ro[-1], co[-1]), dtype=complex)
    for (i, j), b in blocks.items():
        A[ro[i]:ro[i + 1], co[j]:co[j + 1]] = np.asarray(b).reshape(row_sizes[i], col_sizes[j])
    return A


def big_symbol_forward(xi, V, g_over_csq) -> np.ndarray:
    """Principal symbol of the 16-component system divided by ``i rho0``."""
    xi = np.asarray(xi, dtype=complex)
    X = cross_matrix(xi)
    col = xi.reshape(3, 1)
    gX = np.asarray(g_over_csq, dtype=float) @ X
    blocks = {
        (0, 0): gX, (0, 1): xi, (1, 1): X, (1, 2): col, (2, 0): xi,
        (3, 3): gX, (3, 4): xi, (4, 4): X, (4, 5): col, (5, 3): xi,
        (6, 0): V @ X, (6, 3): -X, (6, 6): col,
        (7, 3): X, (7, 7): col,
    }
    return _assemble(ROW_SIZES, COL_SIZES, blocks)


def big_symbol_inverse(xi, V, g_over_csq) -> np.ndarray:
    """Closed-form inverse of :func:`big_symbol_forward` (real ``xi`` only)."""
    xi = np.asarray(xi, dtype=float)
    s = float(xi @ xi)
    X = cross_matrix(xi)
    col = xi.reshape(3, 1)
    P = projector_perp(xi)
    Pxi = projector_along(xi)
    Vt = P @ V @ P + Pxi
    Vti = np.linalg.inv(Vt)
    Vxx = Pxi @ V @ P
    gP = (np.asarray(g_over_csq, dtype=float) @ P).reshape(1, 3)
    blocks = {
        (0, 2): col, (0, 6): -X @ Vti, (0, 7): -X @ Vti,
        (1, 0): col, (1, 1): -X, (1, 6): -col @ gP @ Vti, (1, 7): -col @ gP @ Vti,
        (2, 1): xi,
        (3, 5): col, (3, 7): -X,
        (4, 3): col, (4, 4): -X, (4, 7): -col @ gP,
        (5, 4): xi,
        (6, 6): xi @ (np.eye(3) - Vxx) @ Vti, (6, 7): -xi @ Vxx @ Vti @ P,
        (7, 7): xi,
    }
    return _assemble(COL_SIZES, ROW_SIZES, blocks) / s


def vtilde_xi_singular(V, xi, tol=1e-10) -> bool:
    """Rank test of ``P V P`` restricted to the plane orthogonal to ``xi``."""
    xi = np.asarray(xi, dtype=float)
    xh = xi / np.linalg.norm(xi)
    trial = np.eye(3)[np.argmin(np.abs(xh))]
    e1 = trial - (trial @ xh) * xh
    e1 /= np.linalg.norm(e1)
    E = np.column_stack([e1, np.cross(xh, e1)])
    s = np.linalg.svd(E.T @ V @ E, compute_uv=False)
    return bool(s[0] == 0 or s[-1] <= tol * s[0])


def assemble_big_symbol(model: PlanetModel, frame: BoundaryFrame, xi, lam) -> BigSymbol:
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        raise ValueError("xi must be nonzero")
    omega, nsq, ghat, b = _local(model, frame.x)
    V = v_matrix(lam, omega, nsq, ghat)
    gc = b.g / b.csq
    fwd = big_symbol_forward(xi, V, gc)
    inv = None if vtilde_xi_singular(V, xi) else big_symbol_inverse(xi, V, gc)
    return BigSymbol(frame, xi, complex(lam), fwd, inv)


# --- the boundary ODE matrix --------------------------------------------------------

def alphas_closed_form(omega, nsq, ghat, n, xi_tilde, lam):
    """The two non-trivial eigenvalues of the boundary ODE matrix (unordered)."""
    xi_tilde = np.asarray(xi_tilde, dtype=float)
    L = float(np.linalg.norm(xi_tilde))
    xh = xi_tilde / L
    n = np.asarray(n, dtype=float)
    V = v_matrix(lam, omega, nsq, ghat)
    Pn = np.outer(n, n)
    Pp = np.eye(3) - Pn
    Vi = vtilde_inverse_local(omega, nsq, ghat, n, lam)
    V_n_np = Pn @ V @ Pp
    V_np_n = Pp @ V @ Pn
    a = n @ V_n_np @ Vi @ xh
    b = xh @ Vi @ V_np_n @ n
    d = xh @ Vi @ xh
    e = n @ (Pn @ V @ Pn - V_n_np @ Vi @ V_np_n) @ n
    root = np.sqrt(complex((a - b) ** 2 - 4 * d * e))
    return (1j * L * (a + b - root) / 2, 1j * L * (a + b + root) / 2)


def alphas_quadratic_form(omega, nsq, ghat, n, xi_tilde, lam):
    """Roots ``alpha`` of ``Q(xi~ - i alpha n) = 0`` with
    ``Q = lam^2 I + 4 Omega Omega^T + N^2 (I - g^ g^T)`` (requires ``lam != 0``)."""
    omega = np.asarray(omega, dtype=float)
    ghat = np.asarray(ghat, dtype=float)
    W = lam * lam * np.eye(3) + 4 * np.outer(omega, omega) + nsq * (np.eye(3) - np.outer(ghat, ghat))
    qa = n @ W @ n
    qb = 2 * n @ W @ xi_tilde
    qc = xi_tilde @ W @ xi_tilde
    disc = np.sqrt(complex(qb * qb - 4 * qa * qc))
    taus = ((-qb + disc) / (2 * qa), (-qb - disc) / (2 * qa))
    return tuple(1j * t for t in taus)


def ode_matrix(model: PlanetModel, frame: BoundaryFrame, lam, xi_tilde=None) -> np.ndarray:
    """``K = -sigma(n/i)^{-1} sigma(xi~)`` assembled and inverted numerically."""
    omega, nsq, ghat, b = _local(model, frame.x)
    xi_tilde = frame.xihat if xi_tilde is None else np.asarray(xi_tilde, dtype=float)
    V = v_matrix(lam, omega, nsq, ghat)
    gc = b.g / b.csq
    Fn = big_symbol_forward(frame.n, V, gc)
    Ft = big_symbol_forward(xi_tilde, V, gc)
    return -1j * np.linalg.solve(Fn, Ft)


def _match_pair(found, expected):
    a, b = found
    e1, e2 = expected
    d1 = max(abs(a - e1), abs(b - e2))
    d2 = max(abs(a - e2), abs(b - e1))
    return (tuple(found) if d1 <= d2 else (b, a)), min(d1, d2)


def ode_matrix_eigs(model: PlanetModel, frame: BoundaryFrame, lam, xi_tilde=None, tol=1e-6) -> OdeEigs:
    """Eigen-structure of the boundary ODE matrix against the closed form.

    In generic position the spectrum is ``+|xi~|`` and ``-|xi~|`` seven times
    each plus the pair ``alpha_pm``; when ``alpha_pm`` coincide with
    ``pm |xi~|`` the counts become eight and eight.
    """
    omega, nsq, ghat, _ = _local(model, frame.x)
    xi_tilde = frame.xihat if xi_tilde is None else np.asarray(xi_tilde, dtype=float)
    L = float(np.linalg.norm(xi_tilde))
    K = ode_matrix(model, frame, lam, xi_tilde)
    ev = linalg.eigvals_complex(K)
    closed = alphas_closed_form(omega, nsq, ghat, frame.n, xi_tilde, lam)
    gap = min(abs(a - s * L) for a in closed for s in (1, -1))
    degenerate = gap <= tol * L
    near_p = np.abs(ev - L) <= tol * L
    near_m = np.abs(ev + L) <= tol * L
    counts = (int(near_p.sum()), int(near_m.sum()))
    rest = ev[~(near_p | near_m)]
    if degenerate:
        clustered = counts == (8, 8)
        alphas, err = closed, 0.0 if clustered else float("inf")
    else:
        clustered = counts == (7, 7) and len(rest) == 2
        if len(rest) == 2:
            alphas, err = _match_pair(tuple(rest), closed)
            err = float(err)
        else:
            alphas, err = tuple(rest), float("inf")
    return OdeEigs(ev, counts, tuple(alphas), tuple(closed), err, degenerate, clustered)


# --- report --------------------------------------------------------------------------

def pointwise_union_contains(omega, nsq, ghat, lam, tol=1e-9) -> bool:
    """Membership of ``lam`` in the union over ``xi`` of the pointwise sets at one point."""
    from .symbol import beta_pm_local

    bm, bp = beta_pm_local(omega, nsq, ghat)
    lam = complex(lam)
    real_half = np.sqrt(max(0.0, -nsq))
    if abs(lam.imag) <= tol and abs(lam.real) <= real_half + tol:
        return True
    if abs(lam.real) <= tol:
        w = abs(lam.imag)
        return np.sqrt(max(0.0, bm)) - tol <= w <= np.sqrt(max(0.0, bp)) + tol
    return False


def lopatinskii_report(model: PlanetModel, x, xihat, lam) -> LopatinskiiReport:
    omega, nsq, ghat, _ = _local(model, x)
    frame = make_frame(model, x, xihat)
    interior = not pointwise_union_contains(omega, nsq, ghat, lam)
    try:
        Vi = vtilde_inverse_local(omega, nsq, ghat, frame.n, lam)
    except DegenerateSymbolError:
        return LopatinskiiReport(None, complex("nan"), (), False, False)
    num, den = indicator_parts(omega, nsq, ghat, frame.n, frame.xihat, lam)
    ind = complex(num / den)
    pg = ghat - (ghat @ frame.n) * frame.n
    scale = abs(lam) ** 2 + abs(nsq) * float(pg @ pg)
    nonzero = abs(num) > INDICATOR_TOL * scale
    alphas = alphas_closed_form(omega, nsq, ghat, frame.n, frame.xihat, lam)
    return LopatinskiiReport(Vi, ind, alphas, interior, bool(interior and nonzero))
