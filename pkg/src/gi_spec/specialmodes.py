"""Quasi-rigid modes ``u = t + k x x`` and geostrophic flows ``u = rho0^{-1} grad(phi) x s~``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .model import PlanetModel, ModelError, normalized_radius

KINDS = (
    "axial_translation",
    "axial_spin",
    "equatorial_translation_plus",
    "equatorial_translation_minus",
    "tiltover_plus",
    "tiltover_minus",
)


@dataclass(frozen=True)
class RigidMode:
    kind: str
    t: np.ndarray
    k: np.ndarray
    lam: complex

    def field(self, x):
        x = np.asarray(x)
        return self.t + np.cross(self.k, x)


def rigid_mode(omega, kind: str, a=None) -> RigidMode:
    """Quasi-rigid eigenpair for rotation ``omega``.

    Equatorial and tilt-over modes need a vector ``a`` orthogonal to
    ``omega``; axial modes ignore it.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown mode kind {kind!r}")
    omega = np.asarray(omega, dtype=float)
    w = float(np.linalg.norm(omega))
    zero = np.zeros(3, dtype=complex)
    if kind == "axial_translation":
        return RigidMode(kind, omega.astype(complex), zero, 0j)
    if kind == "axial_spin":
        return RigidMode(kind, zero, omega.astype(complex), 0j)
    if w == 0:
        raise ValueError(f"{kind} requires a nonzero rotation vector")
    if a is None:
        raise ValueError(f"{kind} requires a vector a orthogonal to omega")
    a = np.asarray(a, dtype=float)
    if np.linalg.norm(a) == 0 or abs(a @ omega) > 1e-12 * w * np.linalg.norm(a):
        raise ValueError("a must be nonzero and orthogonal to omega")
    sign = 1 if kind.endswith("plus") else -1
    vec = a + sign * 1j * np.cross(omega, a) / w
    lam = sign * 1j * w
    if kind.startswith("equatorial"):
        return RigidMode(kind, vec, zero, lam)
    return RigidMode(kind, zero, vec, lam)


def centrifugal_a2(omega, t, k, x):
    """``(Omega.t) Omega + Omega.(k x x) Omega - |Omega|^2 t - (Omega.x) k x Omega``."""
    omega = np.asarray(omega, dtype=float)
    x = np.asarray(x, dtype=float)
    return (omega @ t) * omega + (omega @ np.cross(k, x)) * omega - (omega @ omega) * t \
        - (omega @ x) * np.cross(k, omega)


def rigid_residual(omega, mode: RigidMode, x, lam=None) -> np.ndarray:
    """``lam^2 u + 2 lam Omega x u + A2 u`` at ``x`` (``lam`` overrides the mode's eigenvalue)."""
    omega = np.asarray(omega, dtype=float)
    lam = mode.lam if lam is None else lam
    u = mode.field(x)
    return lam * lam * u + 2 * lam * np.cross(omega, u) + centrifugal_a2(omega, mode.t, mode.k, x)


def rigid_scale(omega, mode: RigidMode, x) -> float:
    w2 = float(np.dot(omega, omega))
    return w2 * (np.linalg.norm(mode.t) + np.linalg.norm(mode.k) * np.linalg.norm(x))


# --- geostrophic modes -----------------------------------------------------------------

class Poly3:
    """Sparse trivariate polynomial ``{(a, b, c): coeff}``."""

    def __init__(self, terms: Mapping):
        self.terms = {tuple(int(e) for e in k): float(v) for k, v in terms.items() if v != 0}

    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c * x[0] ** a * x[1] ** b * x[2] ** e for (a, b, e), c in self.terms.items())

    def diff(self, i):
        out = {}
        for k, c in self.terms.items():
            if k[i] > 0:
                kk = list(k)
                kk[i] -= 1
                out[tuple(kk)] = out.get(tuple(kk), 0.0) + c * k[i]
        return Poly3(out)

    def grad(self, x):
        return np.array([self.diff(i)(x) for i in range(3)])

    def hessian(self, x):
        return np.array([[self.diff(i).diff(j)(x) for j in range(3)] for i in range(3)])


@dataclass(frozen=True)
class GeostrophicResidual:
    divergence_rho_u: float
    stilde_dot_u: float
    boundary_div_u: Optional[float]


def _radial_parts(model, x, h=1e-5):
    """Values and radial derivatives of rho0 and f(r) = rho0 N^2 / |g| at ``x``."""
    r = float(normalized_radius(model, x))
    prof = model.gravity.profile
    if model.rho0.is_polynomial and model.nsq.is_polynomial and prof.is_polynomial:
        rho, drho = float(model.rho0(r)), float(model.rho0.derivative(r))
        n2, dn2 = float(model.nsq(r)), float(model.nsq.derivative(r))
        gm, dgm = float(prof(r)), float(prof.derivative(r))
        if gm == 0:
            if n2 != 0:
                raise ModelError("gravity vanishes where N^2 != 0")
            return rho, drho, 0.0, 0.0
        f = rho * n2 / gm
        df = (drho * n2 + rho * dn2) / gm - rho * n2 * dgm / gm**2
        return rho, drho, f, df

    def fval(t):
        n2 = float(model.nsq(t))
        return float(model.rho0(t)) * n2 / float(prof(t)) if n2 != 0 else 0.0

    rp, rm = min(r + h, 1.0), max(r - h, 0.0)
    rho = float(model.rho0(r))
    drho = float((model.rho0(rp) - model.rho0(rm)) / (rp - rm))
    return rho, drho, fval(r), (fval(rp) - fval(rm)) / (rp - rm)


def geostrophic_field(model: PlanetModel, phi: Poly3, x):
    """``u = rho0^{-1} grad(phi) x s~`` with ``s~ = -f(r) x/|x|``."""
    _require_radial(model)
    x = np.asarray(x, dtype=float)
    rho, _, f, _ = _radial_parts(model, x)
    r = np.linalg.norm(x)
    st = -f * x / r if r > 0 else np.zeros(3)
    return np.cross(phi.grad(x), st) / rho


def _require_radial(model):
    if model.gravity.mode != "radial":
        raise ModelError("geostrophic construction needs radial gravity")
    if not model.is_ball:
        raise ModelError("geostrophic construction is implemented on the unit ball only")


def geostrophic_residual(model: PlanetModel, phi: Poly3, x, boundary_tol=1e-12) -> GeostrophicResidual:
    """Residuals of ``s~.u = 0``, ``div(rho0 u) = 0`` and (on the boundary) ``div u = 0``.

    Derivatives of ``phi`` are exact; radial profile derivatives are exact
    for polynomial profiles and central differences otherwise.
    """
    _require_radial(model)
    if phi.degree > 8:
        raise ValueError("potential degree must be <= 8")
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    rho, drho, f, df = _radial_parts(model, x)
    if r == 0:
        return GeostrophicResidual(0.0, 0.0, None)
    xh = x / r
    st = -f * xh
    # Jacobian J[k, i] = d s~_k / d x_i of s~ = -f(r) x^
    J = -(df * np.outer(xh, xh) + f * (np.eye(3) - np.outer(xh, xh)) / r)
    gp = phi.grad(x)
    H = phi.hessian(x)
    w = np.cross(gp, st)  # rho0 u
    u = w / rho
    eps = _levi_civita()
    # div(grad(phi) x s~) = sum_ijk eps_ijk (H_ij s~_k + d_j phi J_ki)
    div_w = float(np.einsum("ijk,ij,k->", eps, H, st) + np.einsum("ijk,j,ki->", eps, gp, J))
    st_u = float(st @ u)
    bdiv = None
    if abs(r - 1.0) <= boundary_tol:
        grad_inv_rho = -drho / rho**2 * xh
        bdiv = float(grad_inv_rho @ w + div_w / rho)
    return GeostrophicResidual(div_w, st_u, bdiv)


def _levi_civita():
    e = np.zeros((3, 3, 3))
    e[0, 1, 2] = e[1, 2, 0] = e[2, 0, 1] = 1.0
    e[0, 2, 1] = e[2, 1, 0] = e[1, 0, 2] = -1.0
    return e


def geostrophic_divergence_fd(model: PlanetModel, phi: Poly3, x, h=1e-4):
    """Central-difference ``div(rho0 u)``; an independent check of the exact route."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        fp = geostrophic_field(model, phi, x + e) * float(model.rho0(np.linalg.norm(x + e)))
        fm = geostrophic_field(model, phi, x - e) * float(model.rho0(np.linalg.norm(x - e)))
        total += (fp[i] - fm[i]) / (2 * h)
    return total
