import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equizero.geometry import from_chart, normalize, uniform_fs_sample
from equizero.potentials import (
    ChartBoundaryError,
    GridSpec,
    complex_hessian_fd,
    constant_potential,
    fs_chart_hessian,
    holder_modulus_estimate,
    maxlog_class_f,
    maxlog_potential,
    pairing_log_potential,
    parse_potential,
    prop211_epsilon_threshold,
    qpsh_margin,
    scaled_potential,
    softmax_potential,
    theorem11_c_threshold,
)


def test_maxlog_examples():
    v = maxlog_potential(1)
    assert v([1, 0]) == 0.0
    assert v(normalize([1, 1])) == pytest.approx(-0.5 * math.log(2))
    for k in (2, 5):
        assert maxlog_potential(k)(normalize(np.ones(k + 1))) == pytest.approx(-0.5 * math.log(k + 1))


def test_maxlog_permutation_invariant():
    rng = np.random.default_rng(0)
    z = uniform_fs_sample(rng, 4, 200)
    v = maxlog_potential(4)
    assert np.array_equal(v(z), v(z[:, rng.permutation(5)]))


def test_pairing_log_examples():
    a = normalize([1, 2j, -1])
    phi = pairing_log_potential(a)
    assert phi(a) == pytest.approx(0.0, abs=1e-15)
    assert phi(normalize([1, 0, 1])) == -np.inf
    assert phi.alpha_limit == 2.0


def test_pairing_log_chart_formula():
    phi = pairing_log_potential([1, 0])
    w = np.array([0.3 + 0.1j, -2.0, 5j])
    expected = -0.5 * np.log1p(np.abs(w) ** 2)
    assert np.allclose(phi(from_chart(w[:, None])), expected)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_class_f_max_is_zero(N):
    rng = np.random.default_rng(N)
    z = uniform_fs_sample(rng, N, 100_000)
    for phi in (maxlog_class_f(N), pairing_log_potential(uniform_fs_sample(rng, N))):
        vals = phi(z)
        assert np.max(vals) <= 1e-9
        near = normalize(phi.maximizer + 1e-4 * uniform_fs_sample(rng, N))
        assert phi(near) >= -1e-3


@pytest.mark.parametrize("tau", [0.2, 0.1, 0.05])
@pytest.mark.parametrize("N", [1, 4])
def test_softmax_uniform_gap(N, tau):
    z = uniform_fs_sample(np.random.default_rng(5), N, 10_000)
    gap = np.abs(softmax_potential(N, tau)(z) - maxlog_potential(N)(z))
    assert np.max(gap) <= tau * math.log(N + 1) + 1e-12


def test_softmax_examples():
    assert softmax_potential(1, 0.1)([1, 0]) == pytest.approx(0.0, abs=1e-15)
    gap = softmax_potential(1, 0.05)(normalize([1, 1])) - maxlog_potential(1)(normalize([1, 1]))
    assert abs(gap) <= 0.05 * math.log(2) + 1e-15


@pytest.mark.parametrize("N,tau", [(1, 0.1), (2, 0.2), (3, 0.05)])
def test_softmax_analytic_hessian_matches_fd(N, tau):
    u = softmax_potential(N, tau)
    rng = np.random.default_rng(7)
    w = 0.8 * (rng.standard_normal((20, N)) + 1j * rng.standard_normal((20, N)))
    fd = complex_hessian_fd(lambda wc: u(from_chart(wc)), w, 1e-4)
    assert np.allclose(u.chart_hessian(w), fd, atol=1e-5)


def test_fs_chart_hessian_matches_fd():
    w = np.array([[0.3 - 0.2j, 1.5j], [0.0, 0.0]])
    fd = complex_hessian_fd(lambda wc: 0.5 * np.log1p(np.sum(np.abs(wc) ** 2, axis=-1)), w)
    assert np.allclose(fs_chart_hessian(w), fd, atol=1e-6)


def test_complex_hessian_fd_on_quadratic():
    # f = |w1|^2 + Re(w1 conj(w2)) has complex Hessian [[1, 1/2], [1/2, 0]]
    f = lambda w: np.abs(w[..., 0]) ** 2 + (w[..., 0] * np.conj(w[..., 1])).real
    H = complex_hessian_fd(f, np.array([0.4 + 1j, -2.0]))
    assert np.allclose(H, [[1, 0.5], [0.5, 0]], atol=1e-8)


def test_parse_potential_labels():
    assert parse_potential("maxlog", 2).label == "maxlog"
    assert parse_potential("zero", 2).label == "zero"
    assert parse_potential("softmax:0.1", 3).label == "softmax:0.1"
    assert parse_potential("pairing:1", 2).label == "pairing"
    u = parse_potential("scaled:0.5:softmax:0.1", 1)
    z = normalize([1, 0.3])
    assert u(z) == pytest.approx(0.5 * softmax_potential(1, 0.1)(z))
    for bad in ("nope", "pairing:9", "scaled:2", "softmax"):
        with pytest.raises(ValueError):
            parse_potential(bad, 2)


def test_holder_constant_is_zero():
    assert holder_modulus_estimate(constant_potential(2, 3.0), 0.5, 1000, np.random.default_rng(0)) == 0.0


def test_holder_scales_linearly():
    v = maxlog_potential(1)
    a = holder_modulus_estimate(v, 0.9, 5000, np.random.default_rng(1), refine=False)
    b = holder_modulus_estimate(scaled_potential(3.0, v), 0.9, 5000, np.random.default_rng(1), refine=False)
    assert b == pytest.approx(3.0 * a, rel=1e-12)


def test_holder_monotone_in_pairs():
    v = maxlog_potential(2)
    ests = [holder_modulus_estimate(v, 0.9, p, np.random.default_rng(4), refine=False) for p in (100, 20_000, 60_000)]
    assert ests[0] <= ests[1] <= ests[2]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_holder_maxlog_p1_below_sqrt_pi(seed):
    est = holder_modulus_estimate(maxlog_potential(1), 0.99, 100_000, np.random.default_rng(seed))
    assert est <= math.sqrt(math.pi) * (1 + 1e-3)


def test_qpsh_margin_examples():
    assert abs(qpsh_margin(constant_potential(1), 0.0)) <= 1e-9
    assert qpsh_margin(maxlog_potential(1), 1.0) >= -1e-6
    neg = scaled_potential(-1.0, maxlog_potential(1))
    assert qpsh_margin(neg, 0.01) < 0


def test_qpsh_margin_fd_consistency():
    v = maxlog_potential(1)
    coarse = qpsh_margin(v, 1.0, GridSpec(h=1e-2))
    fine = qpsh_margin(v, 1.0, GridSpec(h=5e-3))
    assert coarse >= -1e-4 and fine >= -1e-4
    assert min(fine, 0.0) >= min(coarse, 0.0)


def test_qpsh_margin_rejects_boundary_grid():
    with pytest.raises(ChartBoundaryError):
        qpsh_margin(maxlog_potential(1), 1.0, GridSpec(radius=1e5))


def test_thresholds():
    assert theorem11_c_threshold(12 / math.sqrt(145), 1, 1) == pytest.approx(145.0, rel=1e-12)
    assert theorem11_c_threshold(0.5, 1, 1) == pytest.approx(576.0)
    rhos = np.linspace(0.1, 0.9, 9)
    vals = [theorem11_c_threshold(r, 1, 1) for r in rhos]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert prop211_epsilon_threshold(1, 0.5, 1.0) == pytest.approx(1 / 576)
    assert prop211_epsilon_threshold(2, 0.5, 3.0) == pytest.approx(3 * prop211_epsilon_threshold(2, 0.5, 1.0))
    with pytest.raises(ValueError):
        theorem11_c_threshold(1.0, 1, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.floats(0.05, 0.95), st.floats(0.1, 10))
def test_prop211_threshold_formula(k, rho, beta0):
    t = prop211_epsilon_threshold(k, rho, beta0)
    assert t == pytest.approx(beta0 * k**-3 * (rho / 12) ** (2 * k), rel=1e-12)
    assert prop211_epsilon_threshold(2 * k, rho, beta0) < t
