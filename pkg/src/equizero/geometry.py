"""Primitives on complex projective space P^N.

Points are complex arrays whose last axis holds unit-norm homogeneous
coordinates ``(z_0, ..., z_N)``; leading axes are batch axes. Chart points
are complex arrays of length N holding affine coordinates in the chart
``U_0 = {z_0 != 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

# Mass-normalized Fubini-Study distance = METRIC_SCALE * round distance.
METRIC_SCALE = 1.0 / math.sqrt(math.pi)

NORM_TOL = 1e-12
CHART_TOL = 1e-12


class ProjectiveError(ValueError):
    """Raised for inputs that do not define a point of projective space."""


def normalize(raw) -> np.ndarray:
    """Scale homogeneous coordinates to unit Euclidean norm.

    Works on a single vector or a batch ``(..., N+1)``.
    """
    z = np.asarray(raw, dtype=complex)
    if z.ndim == 0 or z.shape[-1] < 2:
        raise ProjectiveError("not a projective point")
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise ProjectiveError("not a projective point")
    return z / norm


def is_unit(z, tol: float = NORM_TOL) -> bool:
    return bool(np.all(np.abs(np.linalg.norm(z, axis=-1) - 1.0) <= tol))


def overlap(p, q) -> np.ndarray:
    """|<p, q>| for unit vectors, clamped into [0, 1]."""
    p = np.asarray(p)
    q = np.asarray(q)
    return np.clip(np.abs(np.sum(p * np.conj(q), axis=-1)), 0.0, 1.0)


def same_point(p, q, tol: float = 1e-12) -> np.ndarray:
    return np.abs(overlap(p, q) - 1.0) <= tol


def fs_distance(p, q) -> np.ndarray:
    """Round Fubini-Study distance arccos|<p,q>| (diameter pi/2).

    Multiply by :data:`METRIC_SCALE` for the mass-normalized metric.
    """
    return np.arccos(overlap(p, q))


def to_chart(p) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    z0 = p[..., :1]
    if np.any(np.abs(z0) <= CHART_TOL):
        raise ProjectiveError("point at infinity of chart U_0")
    return p[..., 1:] / z0


def from_chart(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.ndim == 0:
        w = w[None]
    ones = np.ones(w.shape[:-1] + (1,), dtype=complex)
    return normalize(np.concatenate([ones, w], axis=-1))


def best_chart(z) -> tuple[np.ndarray, np.ndarray]:
    """Affine coordinates of ``z`` in the chart of its largest coordinate.

    Returns ``(perm, w)`` where ``perm`` moves the dominant coordinate to the
    front (so ``z[..., perm]`` lies in U_0) and ``w = to_chart(z[..., perm])``.
    """
    z = np.asarray(z, dtype=complex)
    lead = np.argmax(np.abs(z), axis=-1)
    size = z.shape[-1]
    base = np.arange(size)
    perm = np.broadcast_to(base, z.shape).copy()
    # swap 0 <-> lead, keeping everything else in place
    perm[..., 0] = lead
    np.put_along_axis(perm, lead[..., None], 0, axis=-1)
    zp = np.take_along_axis(z, perm, axis=-1)
    return perm, zp[..., 1:] / zp[..., :1]


def uniform_fs_sample(rng: np.random.Generator, N: int, size=None) -> np.ndarray:
    """Draw from the unitarily invariant probability measure on P^N."""
    if N < 1:
        raise ValueError("dimension must be >= 1")
    shape = (N + 1,) if size is None else tuple(np.atleast_1d(size)) + (N + 1,)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return normalize(g)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def apply_unitary(U, z) -> np.ndarray:
    return np.einsum("ij,...j->...i", U, z)


def sin_power_integral(m: int, a: float, b: float) -> float:
    """Integral of sin(t)**m over [a, b] for even m, by the reduction formula.

    Uses I_m = [-sin^(m-1) cos / m]_a^b + (m-1)/m I_{m-2} down to I_0 = b - a.
    On short intervals every step cancels about one digit, so the recurrence
    runs in extended precision.
    """
    if m < 0 or m % 2:
        raise ValueError("sin_power_integral: exponent must be even and non-negative")
    if not (0.0 <= a < b <= math.pi):
        raise ValueError("sin_power_integral: need 0 <= a < b <= pi")
    with mpmath.workdps(30 + m):
        a_ = mpmath.mpf(a)
        b_ = mpmath.mpf(b)
        sa, ca = mpmath.sin(a_), mpmath.cos(a_)
        sb, cb = mpmath.sin(b_), mpmath.cos(b_)
        total = b_ - a_
        for j in range(2, m + 1, 2):
            boundary = -(sb ** (j - 1) * cb - sa ** (j - 1) * ca) / j
            total = boundary + mpmath.mpf(j - 1) / j * total
        return float(total)


@dataclass(frozen=True)
class CoveringReport:
    k: int
    ratio: float
    bound: float
    satisfied: bool


def covering_ratio(k: int) -> CoveringReport:
    """Volume ratio of S^{2k+1} to a great-circle cap of radius pi/8.

    Only the polar-angle integrals differ between the two volumes, so the
    ratio is int_0^pi sin^{2k} / int_0^{pi/8} sin^{2k}, compared with 8^{k+1}.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    whole = sin_power_integral(2 * k, 0.0, math.pi)
    cap = sin_power_integral(2 * k, 0.0, math.pi / 8)
    ratio = whole / cap
    bound = 8.0 ** (k + 1)
    return CoveringReport(k=k, ratio=ratio, bound=bound, satisfied=ratio <= bound)
