import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gi_spec import specialmodes as SM
from gi_spec import specsets
from gi_spec.model import ModelError, Profile, ball_model


def test_mode_examples():
    om = np.array([0, 0, 1.0])
    m = SM.rigid_mode(om, "axial_spin")
    assert np.allclose(m.t, 0) and np.allclose(m.k, [0, 0, 1]) and m.lam == 0
    m = SM.rigid_mode(om, "equatorial_translation_plus", [1, 0, 0])
    assert np.allclose(m.t, [1, 1j, 0]) and m.lam == 1j
    m = SM.rigid_mode(om, "tiltover_minus", [1, 0, 0])
    assert np.allclose(m.k, [1, -1j, 0]) and m.lam == -1j
    m = SM.rigid_mode(om, "tiltover_plus", [1, 0, 0])
    assert np.allclose(m.t, 0) and np.allclose(m.k, [1, 1j, 0]) and m.lam == 1j


def test_mode_argument_errors():
    with pytest.raises(ValueError):
        SM.rigid_mode([0, 0, 1], "tiltover_plus", [1, 0, 1])
    with pytest.raises(ValueError):
        SM.rigid_mode([0, 0, 1], "tiltover_plus")
    with pytest.raises(ValueError):
        SM.rigid_mode([0, 0, 0], "tiltover_plus", [1, 0, 0])
    with pytest.raises(ValueError):
        SM.rigid_mode([0, 0, 1], "wobble")


def random_ball_points(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1)[:, None] * rng.uniform(0, 1, n)[:, None] ** (1 / 3)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.integers(0, 2**31 - 1))
def test_all_modes_annihilated(omega, seed):
    om = np.array(omega)
    if np.linalg.norm(om) < 1e-3:
        return
    rng = np.random.default_rng(seed)
    a = np.cross(om, rng.standard_normal(3))
    for kind in SM.KINDS:
        mode = SM.rigid_mode(om, kind, a)
        for x in random_ball_points(rng, 100):
            r = SM.rigid_residual(om, mode, x)
            assert np.linalg.norm(r) <= 1e-12 * SM.rigid_scale(om, mode, x) + 1e-300


def test_eigenvalue_pattern():
    om = np.array([0.3, -0.4, 1.2])
    a = np.cross(om, [1, 0, 0])
    vals = sorted((SM.rigid_mode(om, k, a).lam for k in SM.KINDS), key=lambda z: (z.imag, z.real))
    w = np.linalg.norm(om)
    assert vals == [-1j * w, -1j * w, 0, 0, 1j * w, 1j * w]


def test_nonrotating_axial_translation_vanishes():
    mode = SM.rigid_mode(np.zeros(3), "axial_translation")
    assert np.all(SM.rigid_residual(np.zeros(3), mode, [0.1, 0.2, 0.3]) == 0)


def test_perturbed_lambda_negative_control(rng):
    om = np.array([0, 0, 1.0])
    mode = SM.rigid_mode(om, "tiltover_plus", [1, 0, 0])
    x = np.array([0.3, -0.5, 0.4])
    r = SM.rigid_residual(om, mode, x, lam=mode.lam + 0.1)
    assert np.linalg.norm(r) >= 0.01 * SM.rigid_scale(om, mode, x)


def test_rigid_values_in_essential_spectrum():
    for nsq in (0.0, 1.0, 4.0):
        m = ball_model(omega=(0, 0.4, 1), nsq=nsq)
        s = specsets.essential_spectrum(m)
        w = m.omega_norm
        for lam in (0, 1j * w, -1j * w):
            assert specsets.contains(s, lam, 1e-9)


def test_poly3_derivatives():
    p = SM.Poly3({(2, 1, 0): 3.0, (0, 0, 3): -1.0})
    x = np.array([0.5, -1.0, 2.0])
    assert p(x) == pytest.approx(3 * 0.25 * -1 - 8)
    assert np.allclose(p.grad(x), [3 * 2 * 0.5 * -1, 3 * 0.25, -3 * 4])
    assert np.allclose(p.hessian(x), [[-6, 3, 0], [3, 0, 0], [0, 0, -12]])


STRATIFIED = ball_model(omega=(0, 0, 1), nsq=Profile.polynomial([1.0, 0.5, -0.3]),
                        rho0=Profile.polynomial([2.0, 0.0, -1.0]), gnorm=Profile.polynomial([0.0, 1.0]))


@pytest.mark.parametrize("model", [ball_model(nsq=2.0), STRATIFIED])
def test_geostrophic_phi_z(model, rng):
    phi = SM.Poly3({(0, 0, 1): 1.0})
    pts = random_ball_points(rng, 50)
    for x in np.vstack([pts, pts / np.linalg.norm(pts, axis=1)[:, None]]):
        r = SM.geostrophic_residual(model, phi, x)
        assert abs(r.divergence_rho_u) <= 1e-10 and abs(r.stilde_dot_u) <= 1e-10
        if r.boundary_div_u is not None:
            assert abs(r.boundary_div_u) <= 1e-10


def test_geostrophic_axisymmetric_potential(rng):
    phi = SM.Poly3({(2, 0, 0): 1.0, (0, 2, 0): 1.0})
    for x in random_ball_points(rng, 50):
        r = SM.geostrophic_residual(STRATIFIED, phi, x)
        assert abs(r.divergence_rho_u) <= 1e-10 and abs(r.stilde_dot_u) <= 1e-10


def test_geostrophic_neutral_model_is_trivial():
    m = ball_model(nsq=0.0)
    phi = SM.Poly3({(1, 1, 1): 1.0})
    x = np.array([0.2, 0.3, 0.1])
    assert np.all(SM.geostrophic_field(m, phi, x) == 0)
    r = SM.geostrophic_residual(m, phi, x)
    assert r.divergence_rho_u == 0 and r.stilde_dot_u == 0


def test_geostrophic_exact_matches_finite_differences(rng):
    tab = ball_model(nsq=Profile.table([0, 0.5, 1.0], [1.0, 1.5, 1.2]), gnorm=Profile.polynomial([0.0, 1.0]))
    phi = SM.Poly3({(1, 2, 0): 0.7, (0, 1, 1): -1.2, (3, 0, 0): 0.4})
    for model in (STRATIFIED,):
        for x in random_ball_points(rng, 10) * 0.9 + 0.05:
            exact = SM.geostrophic_residual(model, phi, x).divergence_rho_u
            fd = SM.geostrophic_divergence_fd(model, phi, x)
            assert abs(exact - fd) <= 1e-6
    # tabulated profiles route through central differences; s~.u is still exact
    x = np.array([0.1, 0.2, 0.3])
    assert abs(SM.geostrophic_residual(tab, phi, x).stilde_dot_u) <= 1e-12


def test_geostrophic_rejects_constant_gravity():
    m = ball_model(nsq=1.0, gravity="constant", ghat=(0, 0, 1))
    with pytest.raises(ModelError):
        SM.geostrophic_residual(m, SM.Poly3({(0, 0, 1): 1.0}), [0.1, 0, 0])
