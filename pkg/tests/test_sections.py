import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from equizero.geometry import random_unitary
from equizero.sections import (
    MAX_DEGREE,
    Section,
    SectionSpace,
    basis_weights,
    degrees,
    eval_section,
    kodaira_density,
    random_section,
    rotate_section,
)


def _monomial_norm_sq(n, j):
    # int |w^j|^2 / (1+|w|^2)^n * omega_FS, omega_FS = dA / (pi (1+|w|^2)^2), in polar form
    f = lambda r, th: r ** (2 * j) / (1 + r * r) ** (n + 2) * r / math.pi
    return dblquad(f, 0, 2 * math.pi, 0, np.inf, epsabs=0, epsrel=1e-10)[0]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_weights_match_quadrature(n):
    # the unit-norm monomial has weight 1/||w^j||; the quadrature norm is 1/((n+1) binom(n,j))
    w = basis_weights(n)
    for j in range(n + 1):
        norm_sq = _monomial_norm_sq(n, j) * (n + 1)
        assert w[j] == pytest.approx(1 / math.sqrt(norm_sq), rel=1e-8)


def test_basis_weights_examples():
    assert np.allclose(basis_weights(1), [1, 1])
    assert np.allclose(basis_weights(2), [1, math.sqrt(2), 1])
    assert SectionSpace(4).bergman(1.0) == pytest.approx(16.0)


@pytest.mark.parametrize("n", [1, 7, 33, 64])
def test_bergman_identity(n):
    w = np.linspace(0, 3, 100) * np.exp(0.7j)
    ratio = SectionSpace(n).bergman(w) / (1 + np.abs(w) ** 2) ** n
    assert np.max(np.abs(ratio - 1)) < 1e-10


def test_eval_section_examples():
    n = 5
    e = np.eye(n + 1)
    w = np.array([0.5, -1 + 2j, 3j])
    assert np.allclose(eval_section(Section.from_coeffs(e[0]), w), 1.0)
    assert np.allclose(eval_section(Section.from_coeffs(e[n]), w), w**n)


def test_eval_section_bergman_bound():
    rng = np.random.default_rng(0)
    s = random_section(rng, 12)
    r = np.linspace(0, 4, 60)
    w = (r[:, None] * np.exp(1j * np.linspace(0, 2 * np.pi, 30))[None, :]).ravel()
    val = np.abs(eval_section(s, w)) ** 2 / ((1 + np.abs(w) ** 2) ** 12 * np.sum(np.abs(s.coeffs) ** 2))
    assert np.max(val) <= 1 + 1e-12


def test_section_validation():
    with pytest.raises(ValueError):
        Section(SectionSpace(2), np.zeros(3))
    with pytest.raises(ValueError):
        Section(SectionSpace(2), np.ones(4))
    with pytest.raises(ValueError):
        SectionSpace(MAX_DEGREE + 1)


def test_section_record_round_trip():
    s = random_section(np.random.default_rng(1), 6)
    assert np.array_equal(Section.from_record(s.to_record()).coeffs, s.coeffs)


def test_random_section_unit_norm():
    s = random_section(np.random.default_rng(2), 10)
    assert np.linalg.norm(s.coeffs) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 5, 20, 50])
def test_kodaira_density_is_one(n):
    w = np.linspace(0, 3, 100) * np.exp(0.3j)
    assert np.max(np.abs(kodaira_density(n, w) - 1)) < 1e-9


def test_kodaira_density_negative_control():
    n = 5
    wt = basis_weights(n).copy()
    wt[-1] = 0.0
    w = np.linspace(0, 3, 100)
    assert np.max(np.abs(kodaira_density(n, w, wt) - 1)) > 1e-2


def test_degrees():
    assert degrees(5, 1)[0] == 5
    assert degrees(7, 2)[0] == 14


def test_rotate_section_unitary_on_coefficients():
    rng = np.random.default_rng(3)
    s = random_section(rng, 9)
    U = random_unitary(rng, 2)
    assert np.linalg.norm(rotate_section(s, U).coeffs) == pytest.approx(1.0, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 40), st.floats(0.0, 5.0), st.floats(0.0, 2 * math.pi))
def test_kodaira_density_property(n, r, th):
    assert abs(kodaira_density(n, r * np.exp(1j * th)) - 1) < 1e-9
