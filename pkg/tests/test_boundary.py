import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gi_spec import boundary as B
from gi_spec.model import ball_model
from gi_spec.symbol import v_matrix


def random_unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_case(rng):
    omega = rng.standard_normal(3)
    nsq = float(rng.uniform(-3, 3))
    g = random_unit(rng)
    n = random_unit(rng)
    lam = complex(*rng.uniform(-2, 2, 2))
    return omega, nsq, g, n, lam


def tangent(n, rng):
    t = rng.standard_normal(3)
    t -= (t @ n) * n
    return t / np.linalg.norm(t)


def test_vtilde_inverse_trivial():
    assert np.allclose(B.vtilde_inverse_local(np.zeros(3), 0.0, np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), 1.0),
                       np.eye(3))


def test_vtilde_inverse_poincare_example():
    om, n = np.array([0, 0, 1.0]), np.array([0, 0, 1.0])
    num, den = B.indicator_parts(om, 0.0, n, n, np.array([1.0, 0, 0]), 1j)
    assert den == pytest.approx(-3.0)
    Vi = B.vtilde_inverse_local(om, 0.0, n, n, 1j)
    assert np.allclose(Vi @ B.vtilde(om, 0.0, n, n, 1j), np.eye(3))


def test_vtilde_inverse_matches_direct(rng):
    for _ in range(300):
        om, nsq, g, n, lam = random_case(rng)
        Vi = B.vtilde_inverse_local(om, nsq, g, n, lam)
        direct = np.linalg.inv(B.vtilde(om, nsq, g, n, lam))
        assert np.linalg.norm(Vi - direct) <= 1e-10 * np.linalg.norm(direct)


def test_vtilde_inverse_degenerate_raises():
    n = np.array([0, 0, 1.0])
    with pytest.raises(B.DegenerateSymbolError):
        B.vtilde_inverse_local(np.zeros(3), 4.0, np.array([1.0, 0, 0]), n, 2j)
    with pytest.raises(B.DegenerateSymbolError):
        B.vtilde_inverse_local(np.zeros(3), 1.0, n, n, 0.0)


def test_indicator_matches_quadratic_form(rng):
    for _ in range(300):
        om, nsq, g, n, lam = random_case(rng)
        xh = tangent(n, rng)
        ind = B.lopatinskii_indicator_local(om, nsq, g, n, xh, lam)
        ref = xh @ np.linalg.inv(B.vtilde(om, nsq, g, n, lam)) @ xh
        assert abs(ind - ref) <= 1e-10 * max(1.0, abs(ref))


def test_indicator_nonzero_without_stratification(rng):
    for _ in range(20):
        om = rng.standard_normal(3)
        n = random_unit(rng)
        num, _ = B.indicator_parts(om, 0.0, np.array([0, 0, 1.0]), n, tangent(n, rng), 1j)
        assert num == pytest.approx(-1.0)


def test_indicator_failure_example():
    # lam = 2i also zeroes the denominator: the report must mark the point non-elliptic
    n, g = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    num, den = B.indicator_parts(np.zeros(3), 4.0, g, n, np.array([0, 1.0, 0]), 2j)
    assert abs(num) <= 1e-14 and abs(den) <= 1e-12
    m = ball_model(nsq=4.0, gravity="constant", ghat=g)
    rep = B.lopatinskii_report(m, [0, 0, -1], [0, 1, 0], 2j)
    assert not rep.boundary_elliptic


def test_indicator_aligned_direction_only_fails_at_zero():
    n, g = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    for lam in (0.5j, 1j, 3j, 0.7):
        num, _ = B.indicator_parts(np.zeros(3), 4.0, g, n, np.array([1.0, 0, 0]), lam)
        assert abs(num - lam * lam) <= 1e-14


def test_indicator_zero_set_sweeps_interval(rng):
    nsq = 2.5
    g, n = random_unit(rng), random_unit(rng)
    pg = g - (g @ n) * n
    e1 = tangent(n, rng)
    e2 = np.cross(n, e1)
    ts = []
    for th in np.linspace(0, np.pi, 721):
        xh = np.cos(th) * e1 + np.sin(th) * e2
        pgp = pg / np.linalg.norm(pg)
        t = 1 - (xh @ pgp) ** 2
        # zero of the numerator in lam^2 is -nsq |pg|^2 t
        num, _ = B.indicator_parts(np.zeros(3), nsq, g, n, xh, np.sqrt(complex(-nsq * (pg @ pg) * t)))
        assert abs(num) <= 1e-12
        ts.append(t)
    assert min(ts) <= 1e-5 and max(ts) >= 1 - 1e-5


def test_large_real_lambda_is_elliptic(rng):
    m = ball_model(omega=(0.3, 0.2, 1.0), nsq=2.0)
    for _ in range(20):
        x = random_unit(rng)
        n = -x
        rep = B.lopatinskii_report(m, x, tangent(n, rng), 10.0)
        assert rep.interior_elliptic and rep.boundary_elliptic


@pytest.mark.parametrize("nsq, g, x, want", [
    (0.0, (0, 0, 1), (1, 0, 0), 0.0),
    (4.0, (0, 0, 1), (1, 0, 0), 2.0),
    (4.0, (1, 0, 0), (1, 0, 0), 0.0),
])
def test_boundary_failure_interval(nsq, g, x, want):
    m = ball_model(nsq=nsq, gravity="constant", ghat=g)
    lo, hi = B.boundary_failure_interval(m, x)
    assert hi == pytest.approx(want, abs=1e-14) and lo == -hi


def big_case(rng):
    om, nsq, g, _, lam = random_case(rng)
    V = v_matrix(lam, om, nsq, g)
    xi = rng.standard_normal(3)
    gc = rng.standard_normal(3)
    return xi, V, gc


def test_big_symbol_inverse(rng):
    done = 0
    while done < 100:
        xi, V, gc = big_case(rng)
        if B.vtilde_xi_singular(V, xi):
            continue
        F = B.big_symbol_forward(xi, V, gc)
        G = B.big_symbol_inverse(xi, V, gc)
        assert np.linalg.norm(F @ G - np.eye(16)) <= 1e-9
        done += 1


def test_big_symbol_full_rank_when_elliptic():
    m = ball_model(omega=(0, 0, 1), nsq=1.0)
    fr = B.make_frame(m, [0, 0, 1])
    bs = B.assemble_big_symbol(m, fr, [0, 0, 1], 3.0)
    assert bs.invertible
    assert np.linalg.matrix_rank(bs.forward, tol=1e-10 * np.linalg.norm(bs.forward)) == 16


def test_big_symbol_flags_pointwise_values():
    m = ball_model(omega=(0, 0, 1), nsq=0.0)
    fr = B.make_frame(m, [0, 0, 1])
    bs = B.assemble_big_symbol(m, fr, [0, 0, 1], 2j)
    assert not bs.invertible
    s = np.linalg.svd(bs.forward, compute_uv=False)
    assert s[-1] <= 1e-10 * s[0]


def test_alpha_closed_form_matches_quadratic_oracle(rng):
    for _ in range(200):
        om, nsq, g, n, lam = random_case(rng)
        xt = 0.5 * tangent(n, rng)
        a = B.alphas_closed_form(om, nsq, g, n, xt, lam)
        b = B.alphas_quadratic_form(om, nsq, g, n, xt, lam)
        d = min(max(abs(a[0] - b[0]), abs(a[1] - b[1])), max(abs(a[0] - b[1]), abs(a[1] - b[0])))
        assert d <= 1e-8 * (1 + max(map(abs, b)))


def test_ode_matrix_clusters(rng):
    m = ball_model(omega=(0.2, 0.5, 1.0), nsq=1.5)
    ok = 0
    for _ in range(30):
        x = random_unit(rng)
        fr = B.make_frame(m, x, tangent(-x, rng))
        lam = complex(*rng.uniform(0.3, 2, 2))
        r = B.ode_matrix_eigs(m, fr, lam, 0.7 * fr.xihat)
        if not r.degenerate:
            assert r.clustered and r.plus_minus_xi_multiplicity == (7, 7)
            assert r.alpha_error <= 1e-6 * 0.7
            ok += 1
    assert ok >= 25


def test_ode_matrix_poincare_free_case():
    m = ball_model(omega=(0, 0, 0), nsq=0.0)
    fr = B.make_frame(m, [1, 0, 0], [0, 1, 0])
    r = B.ode_matrix_eigs(m, fr, 0.8 + 0.3j)
    assert r.clustered


def test_ode_matrix_homogeneous(rng):
    m = ball_model(omega=(0.2, 0.5, 1.0), nsq=1.5)
    fr = B.make_frame(m, [0, 0, 1], [1, 0, 0])
    e1 = B.ode_matrix_eigs(m, fr, 0.9 + 0.4j, fr.xihat).eigenvalues
    e2 = B.ode_matrix_eigs(m, fr, 0.9 + 0.4j, 2 * fr.xihat).eigenvalues
    from conftest import multiset_distance
    assert multiset_distance(2 * e1, e2) <= 1e-6


def test_ode_matrix_elliptic_no_imaginary_eigs():
    m = ball_model(omega=(0, 0, 1), nsq=1.0)
    fr = B.make_frame(m, [0.6, 0, 0.8], [0.8, 0, -0.6])
    ev = B.ode_matrix_eigs(m, fr, 5.0).eigenvalues
    assert np.min(np.abs(ev.real)) > 1e-3


def test_ode_matrix_trace_matches_clusters(rng):
    m = ball_model(omega=(0.2, 0.5, 1.0), nsq=1.5)
    fr = B.make_frame(m, [0, 1, 0], [1, 0, 0])
    lam = 0.7 + 0.9j
    K = B.ode_matrix(m, fr, lam)
    r = B.ode_matrix_eigs(m, fr, lam)
    assert abs(np.trace(K) - sum(r.alphas)) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_report_indicator_consistency(re, im):
    m = ball_model(omega=(0, 0.3, 1), nsq=2.0)
    lam = complex(re, im)
    rep = B.lopatinskii_report(m, [0, 0, 1], [1, 0, 0], lam)
    if rep.vtilde_inv is not None:
        assert abs(rep.indicator - np.array([1, 0, 0]) @ rep.vtilde_inv @ np.array([1, 0, 0])) <= 1e-10 * (1 + abs(rep.indicator))


def test_tangent_check():
    m = ball_model(nsq=1.0)
    with pytest.raises(ValueError):
        B.lopatinskii_indicator(m, [0, 0, 1], [0, 0, 1], 1j)
