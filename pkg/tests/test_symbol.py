import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gi_spec import symbol as S
from gi_spec.model import ball_model

vec3 = st.lists(st.floats(-2, 2), min_size=3, max_size=3).map(np.array)
nonzero3 = vec3.filter(lambda v: np.linalg.norm(v) > 1e-2)


def test_projector_examples():
    assert np.allclose(S.projector_perp([0, 0, 1]), np.diag([1, 1, 0]))
    xi = np.array([1, 1, 0]) / np.sqrt(2)
    assert np.allclose(S.projector_perp(xi), np.eye(3) - 0.5 * np.array([[1, 1, 0], [1, 1, 0], [0, 0, 0]]))
    with pytest.raises(ValueError):
        S.projector_perp([0, 0, 0])


@settings(max_examples=50, deadline=None)
@given(nonzero3)
def test_projector_identities(xi):
    P = S.projector_perp(xi)
    assert np.allclose(P @ P, P, atol=1e-14)
    assert np.allclose(P, P.T)
    assert np.allclose(P @ xi, 0, atol=1e-14 * np.linalg.norm(xi))
    assert np.linalg.matrix_rank(P) == 2


@settings(max_examples=50, deadline=None)
@given(vec3, st.floats(-4, 4), nonzero3, nonzero3, st.complex_numbers(max_magnitude=3))
def test_symbol_factors_through_projection(omega, nsq, g, xi, lam):
    A = S.symbol_matrix_local(omega, nsq, g / np.linalg.norm(g), xi, lam)
    # size of the unprojected symbol; A itself can cancel down to rounding level
    w = np.linalg.norm(omega)
    scale = abs(lam) ** 2 + 2 * abs(lam) * w + 4 * w * w + abs(nsq)
    assert np.linalg.norm(A @ xi) <= 1e-12 * scale * np.linalg.norm(xi)
    assert np.linalg.norm(xi @ A) <= 1e-12 * scale * np.linalg.norm(xi)


def test_symbol_zero_at_rest():
    m = ball_model(omega=(0, 0, 1), nsq=0.0)
    assert np.all(S.symbol_matrix(m, [0.3, 0, 0], [1, 2, 3], 0).matrix == 0)


def test_symbol_rank_examples():
    m = ball_model(omega=(0, 0, 1), nsq=0.0)
    assert not S.rank_deficient(S.symbol_matrix(m, [0.2, 0, 0], [0, 0, 1], 1j).matrix)
    assert S.rank_deficient(S.symbol_matrix(m, [0.2, 0, 0], [0, 0, 1], 2j).matrix)


def _close_sets(a, b, tol=1e-12):
    return len(a) == len(b) and all(min(abs(x - y) for y in b) <= tol for x in a)


@pytest.mark.parametrize("omega, nsq, ghat, xi, want", [
    ((0, 0, 1), 0.0, (0, 0, 1), (0, 0, 1), (0, 2j, -2j)),
    ((0, 0, 1), 0.0, (0, 0, 1), (1, 0, 0), (0,)),
    ((0, 0, 0), 4.0, (0, 0, 1), (1, 0, 0), (0, 2j, -2j)),
    ((0, 0, 0), -4.0, (0, 0, 1), (1, 0, 0), (0, 2, -2)),
])
def test_sigma_pt_examples(omega, nsq, ghat, xi, want):
    vals = S.sigma_pt_local(np.array(omega, float), nsq, np.array(ghat, float), xi)
    assert _close_sets(vals, want)
    for v in vals:
        A = S.symbol_matrix_local(np.array(omega, float), nsq, np.array(ghat, float), xi, v)
        assert S.rank_deficient(A)


def test_sigma_pt_via_model_constant_gravity():
    m = ball_model(nsq=4.0, gravity="constant", ghat=(0, 0, 1))
    sp = S.sigma_pt(m, [0.1, 0.1, 0.1], [1, 0, 0])
    assert _close_sets(sp.values, (0, 2j, -2j))
    assert sp.contains(2j) and not sp.contains(1j)


@settings(max_examples=60, deadline=None)
@given(vec3, st.floats(-4, 4), nonzero3, nonzero3, st.floats(0.1, 10) | st.floats(-10, -0.1))
def test_sigma_pt_homogeneous_and_symmetric(omega, nsq, g, xi, c):
    g = g / np.linalg.norm(g)
    a = S.sigma_pt_local(omega, nsq, g, xi)
    b = S.sigma_pt_local(omega, nsq, g, c * xi)
    assert _close_sets(a, b, 1e-9 * (1 + max(abs(v) for v in a)))
    assert _close_sets(a, [-v for v in a], 0.0)


@pytest.mark.parametrize("omega, nsq, ghat, want", [
    ((0, 0, 1), 1.0, (1, 0, 0), (0.0, 5.0)),
    ((0, 0, 1), 1.0, (0, 0, 1), (1.0, 4.0)),
    ((0, 0, 1), 0.0, (0, 0, 1), (0.0, 4.0)),
])
def test_beta_examples(omega, nsq, ghat, want):
    assert np.allclose(S.beta_pm_local(np.array(omega, float), nsq, np.array(ghat, float)), want, atol=1e-14)


def _beta_oracle(omega, nsq, g):
    """Two of the three eigenvalues of the envelope matrix, after removing one copy of N^2."""
    ev = list(np.linalg.eigvalsh(S.envelope_matrix(omega, nsq, g)))
    ev.pop(int(np.argmin(np.abs(np.array(ev) - nsq))))
    return sorted(ev)


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(-4, 4), nonzero3)
def test_beta_matches_envelope_eigenvalues(omega, nsq, g):
    g = g / np.linalg.norm(g)
    b = S.beta_pm_local(omega, nsq, g)
    scale = 1 + 4 * omega @ omega + abs(nsq)
    assert np.allclose(b, _beta_oracle(omega, nsq, g), atol=1e-10 * scale)


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(-4, 4), nonzero3, nonzero3)
def test_sigma_pt_inside_envelope(omega, nsq, g, xi):
    g = g / np.linalg.norm(g)
    ev = np.linalg.eigvalsh(S.envelope_matrix(omega, nsq, g))
    tol = 1e-10 * (1 + ev.max() - ev.min())
    for v in S.sigma_pt_local(omega, nsq, g, xi):
        w = -(v * v).real
        assert ev.min() - tol <= w <= ev.max() + tol or v == 0


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(0, 4), nonzero3)
def test_sqrt_nsq_between_betas(omega, nsq, g):
    bm, bp = S.beta_pm_local(omega, nsq, g / np.linalg.norm(g))
    tol = 1e-9 * (1 + bp)
    assert np.sqrt(max(bm, 0)) - tol <= np.sqrt(nsq) <= np.sqrt(bp) + tol


def test_real_values_for_negative_nsq():
    vals = S.sigma_pt_local(np.zeros(3), -2.0, np.array([0, 0, 1.0]), np.array([1.0, 0, 0]))
    assert max(abs(v) for v in vals) == pytest.approx(np.sqrt(2.0))


def test_scalar_symbol():
    m = ball_model(omega=(0, 0, 1), nsq=0.0)
    assert S.scalar_poincare_symbol(m, [0.1, 0, 0], [1, 2, 3], 0) == 0
    assert S.scalar_poincare_symbol(m, [0.1, 0, 0], [0, 0, 1], 1j) == pytest.approx(3.0)


@settings(max_examples=40, deadline=None)
@given(vec3, st.floats(-4, 4), nonzero3)
def test_scalar_symbol_zeros_are_sigma_pt(omega, nsq, xi):
    m = ball_model(omega=omega, nsq=nsq)
    x = [0.3, -0.2, 0.1]
    for v in S.sigma_pt(m, x, xi).values:
        scale = (1 + abs(v)) ** 3 * (xi @ xi)
        assert abs(S.scalar_poincare_symbol(m, x, xi, v)) <= 1e-12 * scale


def test_oracle_sweep_no_mismatch():
    m = ball_model(omega=(0.2, -0.4, 1.0), nsq=-1.0)
    sw = S.oracle_sweep(m, 300, np.random.default_rng(7))
    assert sw.mismatches == 0 and sw.members > 0
