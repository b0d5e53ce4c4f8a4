"""Holomorphic sections of O(n) on P^1.

A section is a coefficient vector in the orthonormal basis
``sqrt(binom(n, j)) z_0^(n-j) z_1^j``; in the chart w = z_1/z_0 it is the
polynomial ``sum_j c_j sqrt(binom(n, j)) w^j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import comb

from .geometry import normalize

MAX_DEGREE = 256


@lru_cache(maxsize=None)
def _weights(n: int) -> np.ndarray:
    w = np.sqrt(comb(n, np.arange(n + 1), exact=False))
    w.setflags(write=False)
    return w


def basis_weights(n: int) -> np.ndarray:
    """Chart-monomial weights of the orthonormal basis: weights[j]**2 = binom(n, j)."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    return _weights(n)


@dataclass(frozen=True)
class SectionSpace:
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DEGREE:
            raise ValueError(f"degree must lie in [1, {MAX_DEGREE}]")

    @property
    def k_n(self) -> int:
        return self.n

    @property
    def weights(self) -> np.ndarray:
        return basis_weights(self.n)

    def bergman(self, w) -> np.ndarray:
        """sum_j weights[j]^2 |w|^(2j); equals (1 + |w|^2)^n."""
        t = np.abs(np.asarray(w)) ** 2
        return P.polyval(t, self.weights**2)


@dataclass(frozen=True)
class Section:
    space: SectionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.space.n + 1,):
            raise ValueError(f"expected {self.space.n + 1} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("section coefficients must be finite")
        if not np.any(c != 0):
            raise ValueError("the zero vector is not a section of projective space")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs) -> "Section":
        c = np.asarray(coeffs, dtype=complex)
        return cls(SectionSpace(len(c) - 1), c)

    @property
    def n(self) -> int:
        return self.space.n

    def monomial_coeffs(self) -> np.ndarray:
        """Coefficients a_j of w^j in the chart polynomial (ascending)."""
        return self.coeffs * self.space.weights

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Section":
        c = np.array([complex(re, im) for re, im in rec["coeffs"]])
        return cls(SectionSpace(int(rec["n"])), c)


def eval_section(s: Section, w) -> np.ndarray:
    """Chart value p(w) = sum_j coeffs[j] weights[j] w^j."""
    return P.polyval(np.asarray(w, dtype=complex), s.monomial_coeffs())


def random_section(rng: np.random.Generator, n: int) -> Section:
    """A section drawn from the Fubini-Study probability measure on PH^0."""
    g = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    return Section(SectionSpace(n), normalize(g))


def rotate_section(s: Section, U) -> Section:
    """The section s o U^{-1}, whose zeros are U applied to the zeros of s.

    Coefficients are re-expanded in the orthonormal basis, so the map is the
    (unitary) action of U on PH^0(P^1, O(n)).
    """
    U = np.asarray(U, dtype=complex)
    Ui = np.linalg.inv(U)
    n = s.n
    a = s.monomial_coeffs()
    # z_0 -> Ui[0,0] z_0 + Ui[0,1] z_1, z_1 -> Ui[1,0] z_0 + Ui[1,1] z_1; set z_0 = 1
    l0 = np.array([Ui[0, 0], Ui[0, 1]])
    l1 = np.array([Ui[1, 0], Ui[1, 1]])
    out = np.zeros(n + 1, dtype=complex)
    for j in range(n + 1):
        if a[j] == 0:
            continue
        term = P.polymul(P.polypow(l0, n - j), P.polypow(l1, j))
        out[: len(term)] += a[j] * term
    return Section(s.space, out / s.space.weights)


def kodaira_density(n: int, w, weights=None) -> np.ndarray:
    """Density of (1/n) Phi_n^* omega_FS against omega_FS at chart points w.

    With t = |w|^2 and B(t) = sum_j weights[j]^2 t^j, the pullback potential is
    (1/2) log B, whose complex Laplacian is (1/2) (t B'/B)'. Dividing by the
    omega_FS density 1/(2 (1+t)^2) and by n gives the returned ratio. With the
    orthonormal weights B = (1+t)^n and the ratio is identically 1.
    """
    wt = basis_weights(n) if weights is None else np.asarray(weights, dtype=float)
    c = wt**2
    t = np.abs(np.asarray(w)) ** 2
    B = P.polyval(t, c)
    dB = P.polyval(t, P.polyder(c))
    d2B = P.polyval(t, P.polyder(c, 2))
    g1 = dB / B
    lap = g1 + t * (d2B / B - g1**2)
    return (1.0 + t) ** 2 * lap / n


def degrees(n: int, chern_top: int = 1) -> tuple[int, str]:
    """Top intermediate degree d_n = n c_1(L)^k; delta_n is only known to be bounded."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    return n * chern_top, "bounded (not computed)"
