"""Polynomial Galerkin discretization of the inertia-gravity pencil on the unit ball.

Trial space ``V_d``: polynomial vector fields of total degree ``<= d`` that are
divergence free and tangent to the unit sphere.  Tangency is imposed exactly
through ``x . u = (1 - |x|^2) q`` with an auxiliary polynomial ``q`` of degree
``<= d - 1``.  On ``V_d`` the pencil ``lam^2 M + 2 lam C + K`` has

    M_ij = int u_i . u_j,   C_ij = int u_i . (Omega x u_j),
    K_ij = N^2 int (g^ . u_i)(g^ . u_j),

with ``g^`` either a constant unit vector or ``x / |x|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import linalg

MAX_DEGREE = 10


class ContourError(ValueError):
    pass


@lru_cache(maxsize=None)
def monomials(d: int):
    """Exponent triples of total degree ``<= d``, graded then lexicographic."""
    if d < 0:
        return ()
    out = []
    for t in range(d + 1):
        for a in range(t, -1, -1):
            for b in range(t - a, -1, -1):
                out.append((a, b, t - a - b))
    return tuple(out)


@lru_cache(maxsize=None)
def _index(d: int):
    return {m: i for i, m in enumerate(monomials(d))}


def _odd_double_factorial(k):
    """(2k - 1)!! for k >= 0."""
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


@lru_cache(maxsize=None)
def ball_monomial_integral_exact(a: int, b: int, c: int, weight: str = "one") -> Fraction:
    """Rational ``q`` with ``int_B x^a y^b z^c w(r) dV = q * pi``."""
    if min(a, b, c) < 0:
        raise ValueError("exponents must be nonnegative")
    if weight not in ("one", "inv_r2"):
        raise ValueError(f"unknown weight {weight!r}")
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    p, q, s = a // 2, b // 2, c // 2
    # sphere integral 2 G((a+1)/2) G((b+1)/2) G((c+1)/2) / G((a+b+c+3)/2), over pi
    sphere = Fraction(4 * _odd_double_factorial(p) * _odd_double_factorial(q) * _odd_double_factorial(s),
                      _odd_double_factorial(p + q + s + 1))
    n = a + b + c
    return sphere / (n + 3 if weight == "one" else n + 1)


def ball_monomial_integral(a: int, b: int, c: int, weight: str = "one") -> float:
    return float(ball_monomial_integral_exact(a, b, c, weight)) * math.pi


@lru_cache(maxsize=None)
def gram(d: int, weight: str = "one") -> np.ndarray:
    mons = monomials(d)
    G = np.empty((len(mons), len(mons)))
    for i, m in enumerate(mons):
        for j in range(i, len(mons)):
            n = mons[j]
            G[i, j] = G[j, i] = ball_monomial_integral(m[0] + n[0], m[1] + n[1], m[2] + n[2], weight)
    G.flags.writeable = False
    return G


def divergence_matrix(d: int) -> np.ndarray:
    """Coefficients of ``div u`` (degree ``d-1``) from those of ``u`` (3 blocks of degree ``d``)."""
    mons, out_idx = monomials(d), _index(d - 1)
    N = len(mons)
    D = np.zeros((len(out_idx), 3 * N))
    for i in range(3):
        for j, m in enumerate(mons):
            if m[i] > 0:
                mm = list(m)
                mm[i] -= 1
                D[out_idx[tuple(mm)], i * N + j] += m[i]
    return D


def radial_component_matrix(d: int) -> np.ndarray:
    """Coefficients of ``x . u`` (degree ``d+1``) from those of ``u``."""
    mons, out_idx = monomials(d), _index(d + 1)
    N = len(mons)
    X = np.zeros((len(out_idx), 3 * N))
    for i in range(3):
        for j, m in enumerate(mons):
            mm = list(m)
            mm[i] += 1
            X[out_idx[tuple(mm)], i * N + j] = 1.0
    return X


def bubble_matrix(d: int) -> np.ndarray:
    """Coefficients of ``(1 - |x|^2) q`` (degree ``d+1``) from ``q`` (degree ``d-1``)."""
    mons, out_idx = monomials(d - 1), _index(d + 1)
    Q = np.zeros((len(out_idx), len(mons)))
    for j, m in enumerate(mons):
        Q[out_idx[m], j] += 1.0
        for i in range(3):
            mm = list(m)
            mm[i] += 2
            Q[out_idx[tuple(mm)], j] -= 1.0
    return Q


def constraint_matrix(d: int) -> np.ndarray:
    """Stacked linear constraints on ``(u, q)``: ``div u = 0`` and ``x.u - (1-|x|^2) q = 0``."""
    D = divergence_matrix(d)
    X = radial_component_matrix(d)
    Q = bubble_matrix(d)
    top = np.hstack([D, np.zeros((D.shape[0], Q.shape[1]))])
    bot = np.hstack([X, -Q])
    return np.vstack([top, bot])


@dataclass(frozen=True)
class PolyBasis:
    degree: int
    basis_matrix: np.ndarray

    @property
    def dim(self):
        return self.basis_matrix.shape[1]

    @property
    def n_monomials(self):
        return len(monomials(self.degree))

    def component_blocks(self):
        N = self.n_monomials
        return [self.basis_matrix[i * N:(i + 1) * N] for i in range(3)]

    def evaluate(self, X) -> np.ndarray:
        """Field values, shape ``(npoints, 3, dim)``."""
        X = np.atleast_2d(X)
        mons = np.array(monomials(self.degree))
        V = np.prod(X[:, None, :] ** mons[None, :, :], axis=2)  # (npts, N)
        return np.stack([V @ B for B in self.component_blocks()], axis=1)


def build_basis(degree: int, tol: float = linalg.RANK_TOL) -> PolyBasis:
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
    N = len(monomials(degree))
    if degree == 0:
        return PolyBasis(0, np.zeros((3 * N, 0)))
    Z = linalg.nullspace(constraint_matrix(degree), tol)
    U = Z[:3 * N]
    if U.shape[1] == 0:
        return PolyBasis(degree, U)
    Uo, s, _ = np.linalg.svd(U, full_matrices=False)
    Uo = Uo[:, s > tol * s[0]]
    return PolyBasis(degree, Uo)


def basis_dimension_oracle(degree: int) -> int:
    """Dimension of V_d from a rank count: ``#unknowns - rank(constraints)``.

    ``q`` is determined by ``u``, so the nullspace of the stacked system has
    the same dimension as V_d.
    """
    if degree == 0:
        return 0
    A = constraint_matrix(degree)
    return A.shape[1] - linalg.numerical_rank(A)


def divergence_coeffs(basis: PolyBasis) -> np.ndarray:
    return divergence_matrix(basis.degree) @ basis.basis_matrix


@dataclass(frozen=True)
class GalerkinPencil:
    mass: np.ndarray
    coriolis: np.ndarray
    buoyancy: np.ndarray
    omega: tuple
    nsq: float
    ghat_mode: str
    ghat: tuple
    degree: int

    @property
    def n(self):
        return len(self.mass)


def assemble_pencil(basis: PolyBasis, omega, nsq: float, ghat_mode="constant", ghat=(0.0, 0.0, 1.0)) -> GalerkinPencil:
    """Exact mass, Coriolis and buoyancy matrices on ``basis``."""
    from .symbol import cross_matrix

    d = basis.degree
    G = gram(d)
    U = basis.component_blocks()
    omega = np.asarray(omega, dtype=float)
    Wx = cross_matrix(omega)
    mass = sum(Uk.T @ G @ Uk for Uk in U)
    cor = sum(U[k].T @ G @ sum(Wx[k, j] * U[j] for j in range(3)) for k in range(3))
    if ghat_mode == "constant":
        gh = np.asarray(ghat, dtype=float)
        gh = gh / np.linalg.norm(gh)
        Ug = sum(gh[k] * U[k] for k in range(3))
        buo = nsq * (Ug.T @ G @ Ug)
        gh_t = tuple(gh)
    elif ghat_mode == "radial":
        XU = radial_component_matrix(d) @ basis.basis_matrix
        buo = nsq * (XU.T @ gram(d + 1, "inv_r2") @ XU)
        gh_t = ()
    else:
        raise ValueError(f"unknown ghat_mode {ghat_mode!r}")
    n = basis.dim
    if n == 0:
        mass = cor = buo = np.zeros((0, 0))
    mass = 0.5 * (mass + mass.T)
    cor = 0.5 * (cor - cor.T)
    buo = 0.5 * (buo + buo.T)
    return GalerkinPencil(mass, cor, buo, tuple(omega), float(nsq), ghat_mode, gh_t, d)


def solve_modes(pencil: GalerkinPencil) -> linalg.EigenResult:
    return linalg.solve_quadratic_pencil(pencil.mass, pencil.coriolis, pencil.buoyancy)


def discrete_gamma(pencil: GalerkinPencil) -> float:
    """Smallest eigenvalue of ``K v = mu M v``: discrete lower bound of the potential energy."""
    return float(linalg.eig_sym_generalized(pencil.buoyancy, pencil.mass).eigenvalues[0])


def linearization(pencil: GalerkinPencil):
    A, _ = linalg.companion(pencil.mass, pencil.coriolis, pencil.buoyancy)
    return A


def quadrature_points_needed(eigenvalues, center, radius, tol=1e-13, floor=16, cap=1 << 15) -> int:
    """Trapezoid points on the circle for geometric error ``rho^N <= tol``.

    ``rho`` is the largest of ``|l - c| / r`` (inside) and ``r / |l - c|``
    (outside) over the eigenvalues ``l``.
    """
    d = np.abs(np.asarray(eigenvalues) - center) / radius
    d = d[d > 0]
    rho = np.max(np.where(d < 1, d, 1 / d)) if d.size else 0.0
    if rho <= 0:
        return floor
    n = int(np.ceil(np.log(tol) / np.log(rho)))
    return int(min(max(floor, n), cap))


def riesz_projector(pencil: GalerkinPencil, center: complex, radius: float, quad_points: int = 64) -> np.ndarray:
    """Trapezoid-rule contour integral ``(2 pi i)^{-1} oint (mu - A)^{-1} dmu`` of the linearization.

    The circle must stay at least ``1e-3 * radius`` away from every eigenvalue.
    ``quad_points`` is a floor; more points are used when an eigenvalue sits
    close enough to the circle to spoil geometric convergence.
    """
    if quad_points < 16:
        raise ValueError("quad_points must be >= 16")
    if radius <= 0:
        raise ValueError("radius must be positive")
    A = linearization(pencil)
    ev = linalg.eigvals_complex(A)
    dist = np.abs(np.abs(ev - center) - radius)
    if dist.size and dist.min() < 1e-3 * radius:
        raise ContourError(f"eigenvalue within {dist.min():.3g} of the contour")
    npts = quadrature_points_needed(ev, center, radius, floor=quad_points)
    # Schur form makes each resolvent a triangular solve
    T, Z = sla.schur(A.astype(complex), output="complex")
    m = len(A)
    I = np.eye(m)
    acc = np.zeros((m, m), dtype=complex)
    for k in range(npts):
        e = np.exp(2j * np.pi * k / npts)
        acc += e * sla.solve_triangular((center + radius * e) * I - T, I)
    acc *= radius / npts
    return Z @ acc @ Z.conj().T


def spectral_projector_oracle(pencil: GalerkinPencil, center: complex, radius: float) -> np.ndarray:
    """Spectral projector for the eigenvalues inside the circle, from an ordered Schur form.

    With ``T = [[T11, T12], [0, T22]]`` the projector is ``[[I, Y], [0, 0]]``
    where ``T11 Y - Y T22 = T12``; this stays valid for defective eigenvalues.
    """
    A = linearization(pencil).astype(complex)
    T, Z, k = sla.schur(A, output="complex", sort=lambda w: abs(w - center) < radius)
    m = len(A)
    if k == 0:
        return np.zeros((m, m), complex)
    Y = sla.solve_sylvester(T[:k, :k], -T[k:, k:], T[:k, k:])
    P = np.zeros((m, m), complex)
    P[:k, :k] = np.eye(k)
    P[:k, k:] = Y
    return Z @ P @ Z.conj().T


def count_enclosed(pencil: GalerkinPencil, center: complex, radius: float) -> int:
    ev = linalg.eigvals_complex(linearization(pencil))
    return int(np.sum(np.abs(ev - center) < radius))


def pencil_matrix(pencil: GalerkinPencil, lam: complex) -> np.ndarray:
    return lam * lam * pencil.mass + 2 * lam * pencil.coriolis + pencil.buoyancy


def whitened(pencil: GalerkinPencil) -> GalerkinPencil:
    """The congruent pencil with identity mass (``L^-1 (.) L^-H``, ``M = L L^H``)."""
    _, Ct, Kt = linalg.reduced_pencil(pencil.mass, pencil.coriolis, pencil.buoyancy)
    return GalerkinPencil(np.eye(pencil.n), Ct, Kt, pencil.omega, pencil.nsq, pencil.ghat_mode,
                          pencil.ghat, pencil.degree)


def pencil_norms(pencil: GalerkinPencil):
    return tuple(float(np.linalg.norm(X, 2)) if X.size else 0.0
                 for X in (pencil.mass, pencil.coriolis, pencil.buoyancy))


def pseudospectrum_value(pencil: GalerkinPencil, lam: complex, norms=None) -> float:
    """``sigma_min(l^2 M + 2 l C + K) / (|l|^2 |M| + |l| |C| + |K|)``."""
    nM, nC, nK = norms or pencil_norms(pencil)
    smin = np.linalg.svd(pencil_matrix(pencil, lam), compute_uv=False)[-1]
    scale = abs(lam) ** 2 * nM + abs(lam) * nC + nK
    return float(smin / scale) if scale > 0 else float(smin)


def pseudospectrum_scan(pencil: GalerkinPencil, re_range, im_range, n_re: int, n_im: int, whiten=False):
    """Normalized ``sigma_min`` on a rectangular grid; returns ``(re, im, values[n_im, n_re])``.

    In the monomial-derived basis ``M`` is badly conditioned at high degree,
    which drags the raw values toward ``1/cond(M)`` far from the spectrum;
    ``whiten=True`` scans the identity-mass pencil instead.
    """
    if n_re < 1 or n_im < 1:
        raise ValueError("grid resolution must be positive")
    vals_in = (re_range[0], re_range[1], im_range[0], im_range[1])
    if not np.all(np.isfinite(vals_in)):
        raise ValueError("grid must be finite")
    if whiten:
        pencil = whitened(pencil)
    re = np.linspace(re_range[0], re_range[1], n_re)
    im = np.linspace(im_range[0], im_range[1], n_im)
    norms = pencil_norms(pencil)
    vals = np.empty((n_im, n_re))
    for i, y in enumerate(im):
        for j, x in enumerate(re):
            vals[i, j] = pseudospectrum_value(pencil, complex(x, y), norms)
    return re, im, vals


def max_gap(eigenvalues, halfwidth: float, tol: float = 1e-8) -> float:
    """Largest gap between sorted imaginary parts inside ``i[-h, h]`` (endpoints included)."""
    ev = np.asarray(eigenvalues)
    on_axis = ev[np.abs(ev.real) <= tol * max(1.0, halfwidth)]
    pts = np.sort(np.concatenate([[-halfwidth, halfwidth], on_axis.imag[np.abs(on_axis.imag) <= halfwidth]]))
    return float(np.diff(pts).max())


def matching_model(pencil: GalerkinPencil):
    """Unit-ball background with the same rotation, constant ``N^2`` and gravity direction."""
    from .model import ball_model

    if pencil.ghat_mode == "radial":
        return ball_model(omega=pencil.omega, nsq=pencil.nsq, gravity="radial")
    return ball_model(omega=pencil.omega, nsq=pencil.nsq, gravity="constant", ghat=pencil.ghat)


def rigid_values(omega) -> np.ndarray:
    w = float(np.linalg.norm(omega))
    return np.array([0.0, 1j * w, -1j * w])


def containment_violations(pencil: GalerkinPencil, eigenvalues, tol: float, sset=None) -> np.ndarray:
    """Eigenvalues farther than ``tol`` from the essential spectrum and the rigid values."""
    from . import specsets

    if sset is None:
        sset = specsets.essential_spectrum(matching_model(pencil))
    rig = rigid_values(pencil.omega)
    bad = [l for l in np.asarray(eigenvalues)
           if not specsets.contains(sset, l, tol) and np.min(np.abs(rig - l)) > tol]
    return np.array(bad, dtype=complex)
