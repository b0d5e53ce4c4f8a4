"""Potentials on P^N: the max-log Green function, pairing-log members of the
class F, smooth soft-max surrogates, Hoelder and positivity diagnostics, and
the hypothesis thresholds attached to them.

A potential is evaluated on batches of unit homogeneous coordinates
``(..., N+1)`` and returns a real array ``(...)``. ``-inf`` is the sentinel on
the polar locus of the pairing-log functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .geometry import METRIC_SCALE, fs_distance, from_chart, normalize, uniform_fs_sample

CHART_RADIUS_LIMIT = 1e4
DEFAULT_FD_STEP = 1e-3


class ChartBoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """A real function on P^N with declared regularity data.

    ``chart_hessian`` (optional) maps chart coordinates ``w`` to the complex
    Hessian of ``u o from_chart``. It is only provided for potentials that are
    symmetric under coordinate permutations, so it is valid in every
    coordinate chart.
    """

    func: Callable[[np.ndarray], np.ndarray]
    dim: int
    label: str
    holder_exponent: Optional[float] = None
    claimed_modulus: Optional[float] = None
    claimed_epsilon: Optional[float] = None
    smooth: bool = False
    chart_hessian: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, z) -> np.ndarray:
        return self.func(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class ClassFFunction:
    """A quasi-psh function with dd^c phi >= -omega_FS and max phi = 0.

    ``alpha_limit`` is the exponent at which int exp(-alpha phi) omega_FS^N
    stops being finite; ``maximizer`` is a point where the max 0 is attained.
    """

    base: Potential
    normalization_offset: float = 0.0
    alpha_limit: float = math.inf
    maximizer: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def label(self) -> str:
        return self.base.label

    def __call__(self, z) -> np.ndarray:
        return self.base(z) - self.normalization_offset


def _abs_ratio(z: np.ndarray) -> np.ndarray:
    return np.abs(z) / np.linalg.norm(z, axis=-1, keepdims=True)


def maxlog_potential(N: int) -> Potential:
    """v(z) = max_i log(|z_i| / |z|); omega_FS-psh, zero exactly at coordinate points."""
    if N < 1:
        raise ValueError("dimension must be >= 1")

    def func(z):
        # summing sorted squares keeps the value exactly permutation invariant
        a = np.abs(z)
        sq = np.sum(np.sort(a * a, axis=-1), axis=-1)
        with np.errstate(divide="ignore"):
            return np.log(np.max(a, axis=-1)) - 0.5 * np.log(sq)

    return Potential(
        func=func,
        dim=N,
        label="maxlog",
        holder_exponent=0.99,
        claimed_modulus=math.sqrt(math.pi) * N,
        claimed_epsilon=1.0,
        smooth=False,
    )


def maxlog_class_f(N: int) -> ClassFFunction:
    e0 = np.zeros(N + 1, dtype=complex)
    e0[0] = 1.0
    return ClassFFunction(base=maxlog_potential(N), maximizer=e0)


def pairing_log_potential(a) -> ClassFFunction:
    """phi_a(z) = log|<z, a>|, a member of F with polar hyperplane a^perp."""
    a = normalize(a)
    if a.ndim != 1:
        raise ValueError("pairing_log_potential expects a single point")
    N = a.shape[0] - 1

    def func(z):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.sum(z * np.conj(a), axis=-1)) / np.linalg.norm(z, axis=-1))

    base = Potential(func=func, dim=N, label="pairing", claimed_epsilon=1.0, smooth=False)
    return ClassFFunction(base=base, alpha_limit=2.0, maximizer=a)


def _softmax_shift(N: int, tau: float) -> float:
    # sup of sum_i x_i^(1/tau) on the unit sphere of |z_i| values
    p = 1.0 / tau
    if p >= 2.0:
        return 0.0
    return tau * (1.0 - p / 2.0) * math.log(N + 1)


def softmax_potential(N: int, tau: float) -> Potential:
    """Smooth surrogate tau * log sum_i (|z_i|/|z|)^(1/tau), shifted so sup = 0.

    Uniformly within tau*log(N+1) of the max-log potential.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if N < 1:
        raise ValueError("dimension must be >= 1")
    p = 1.0 / tau
    shift = _softmax_shift(N, tau)

    def func(z):
        with np.errstate(divide="ignore"):
            logs = np.log(_abs_ratio(z))
        return tau * logsumexp(p * logs, axis=-1) - shift

    hessian = None
    if p >= 2.0:

        def hessian(w):
            w = np.asarray(w, dtype=complex)
            aw = np.abs(w)
            a = aw**p
            s_a = 1.0 + a.sum(axis=-1)
            b = (p / 2.0) * aw ** (p - 2.0) * np.conj(w)
            diag = (p / 2.0) ** 2 * aw ** (p - 2.0)
            hg = tau * (
                _diag_embed(diag / s_a[..., None])
                - b[..., :, None] * np.conj(b)[..., None, :] / (s_a**2)[..., None, None]
            )
            return hg - fs_chart_hessian(w)

    return Potential(
        func=func,
        dim=N,
        label=f"softmax:{tau:g}",
        holder_exponent=0.99,
        claimed_modulus=None,
        claimed_epsilon=1.0,
        smooth=True,
        chart_hessian=hessian,
    )


def constant_potential(N: int, value: float = 0.0) -> Potential:
    def func(z):
        return np.full(np.shape(z)[:-1], float(value))

    def hessian(w):
        w = np.asarray(w)
        n = w.shape[-1]
        return np.zeros(w.shape[:-1] + (n, n), dtype=complex)

    return Potential(
        func=func,
        dim=N,
        label="zero" if value == 0 else f"const:{value:g}",
        claimed_modulus=0.0,
        claimed_epsilon=0.0,
        smooth=True,
        chart_hessian=hessian,
    )


def scaled_potential(c: float, inner: Potential) -> Potential:
    """c * inner, carrying the regularity claims along."""

    def func(z):
        return c * inner.func(z)

    hessian = None
    if inner.chart_hessian is not None:
        inner_h = inner.chart_hessian

        def hessian(w):
            return c * inner_h(w)

    def scale(x):
        return None if x is None else abs(c) * x

    return Potential(
        func=func,
        dim=inner.dim,
        label=f"scaled:{c:g}:{inner.label}",
        holder_exponent=inner.holder_exponent,
        claimed_modulus=scale(inner.claimed_modulus),
        claimed_epsilon=scale(inner.claimed_epsilon) if c >= 0 else None,
        smooth=inner.smooth,
        chart_hessian=hessian,
    )


def parse_potential(label: str, N: int) -> Potential:
    """Build a potential from a config label.

    ``maxlog``, ``softmax:<tau>``, ``pairing:<index>``, ``scaled:<c>:<inner>``
    and ``zero`` are understood.
    """
    head, _, rest = label.partition(":")
    if head == "maxlog" and not rest:
        return maxlog_potential(N)
    if head == "zero" and not rest:
        return constant_potential(N)
    if head == "softmax" and rest:
        return softmax_potential(N, float(rest))
    if head == "pairing" and rest:
        idx = int(rest)
        if not 0 <= idx <= N:
            raise ValueError(f"pairing index {idx} out of range for P^{N}")
        a = np.zeros(N + 1, dtype=complex)
        a[idx] = 1.0
        return pairing_log_potential(a).base
    if head == "scaled":
        c, _, inner = rest.partition(":")
        if inner:
            return scaled_potential(float(c), parse_potential(inner, N))
    raise ValueError(f"unknown potential label {label!r}")


# -- complex Hessians -------------------------------------------------------


def _diag_embed(d: np.ndarray) -> np.ndarray:
    n = d.shape[-1]
    out = np.zeros(d.shape + (n,), dtype=complex)
    idx = np.arange(n)
    out[..., idx, idx] = d
    return out


def fs_chart_hessian(w) -> np.ndarray:
    """Complex Hessian of (1/2) log(1 + |w|^2), the chart potential of omega_FS."""
    w = np.asarray(w, dtype=complex)
    s = 1.0 + np.sum(np.abs(w) ** 2, axis=-1)
    eye = _diag_embed(np.ones(w.shape, dtype=complex) / s[..., None])
    outer = np.conj(w)[..., :, None] * w[..., None, :] / (s**2)[..., None, None]
    return 0.5 * (eye - outer)


def complex_hessian_fd(f: Callable[[np.ndarray], np.ndarray], w, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Finite-difference complex Hessian d^2 f / dw_i dw-bar_j.

    Central second differences on the 2N real coordinates, assembled as
    H = ((R_xx + R_yy) + i (R_xy - R_yx)) / 4.
    """
    w = np.asarray(w, dtype=complex)
    N = w.shape[-1]
    batch = w.shape[:-1]
    m = 2 * N
    x = np.concatenate([w.real, w.imag], axis=-1)

    pairs = [(i, j) for i in range(m) for j in range(i, m)]
    offsets = [np.zeros(m)]
    for i, j in pairs:
        if i == j:
            for s in (1.0, -1.0):
                e = np.zeros(m)
                e[i] = s * h
                offsets.append(e)
        else:
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                e = np.zeros(m)
                e[i] = si * h
                e[j] = sj * h
                offsets.append(e)
    offsets = np.array(offsets)
    pts = x[..., None, :] + offsets
    vals = f(pts[..., :N] + 1j * pts[..., N:])

    R = np.zeros(batch + (m, m))
    center = vals[..., 0]
    k = 1
    for i, j in pairs:
        if i == j:
            R[..., i, i] = (vals[..., k] - 2 * center + vals[..., k + 1]) / h**2
            k += 2
        else:
            d = (vals[..., k] - vals[..., k + 1] - vals[..., k + 2] + vals[..., k + 3]) / (4 * h**2)
            R[..., i, j] = d
            R[..., j, i] = d
            k += 4

    rxx = R[..., :N, :N]
    ryy = R[..., N:, N:]
    rxy = R[..., :N, N:]
    ryx = R[..., N:, :N]
    return 0.25 * ((rxx + ryy) + 1j * (rxy - ryx))


# -- diagnostics -------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Square grid of side 2*radius in each real coordinate of chart U_0."""

    radius: float = 2.0
    points: int = 41
    h: float = DEFAULT_FD_STEP

    def chart_points(self, N: int) -> np.ndarray:
        if not math.isfinite(self.radius) or self.radius + self.h >= CHART_RADIUS_LIMIT:
            raise ChartBoundaryError("grid touches the boundary of chart U_0")
        axis = np.linspace(-self.radius, self.radius, self.points)
        mesh = np.meshgrid(*([axis] * (2 * N)), indexing="ij")
        x = np.stack([g.ravel() for g in mesh], axis=-1)
        return x[:, :N] + 1j * x[:, N:]


def qpsh_margin(u: Potential, epsilon: float, grid: GridSpec = GridSpec()) -> float:
    """Smallest eigenvalue over ``grid`` of the complex Hessian of
    u o from_chart + epsilon * (1/2) log(1 + |w|^2).

    A margin >= -tol means u is numerically epsilon*omega_FS-psh there.
    """
    N = u.dim
    w = grid.chart_points(N)

    def f(wc):
        vals = u(from_chart(wc)) + 0.5 * epsilon * np.log1p(np.sum(np.abs(wc) ** 2, axis=-1))
        if not np.all(np.isfinite(vals)):
            raise ChartBoundaryError("potential is not finite on the grid stencil")
        return vals

    H = complex_hessian_fd(f, w, grid.h)
    return float(np.min(np.linalg.eigvalsh(H)))


_HOLDER_CHUNK = 1 << 14


def _holder_ratio(u: Potential, x, y, rho: float) -> np.ndarray:
    d = METRIC_SCALE * fs_distance(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(u(x) - u(y)) / d**rho
    return np.where((d > 0) & np.isfinite(r), r, 0.0)


def _refine_on_geodesic(u: Potential, x, y, rho: float, rounds: int = 4, grid: int = 33) -> float:
    # phase-align so that real interpolation runs along the geodesic x -> y
    ph = np.sum(y * np.conj(x))
    y = y * (np.conj(ph) / abs(ph)) if abs(ph) > 0 else y
    lo, hi = 0.0, 1.0
    best = 0.0
    for _ in range(rounds):
        t = np.linspace(lo, hi, grid)
        pts = normalize((1 - t)[:, None] * x + t[:, None] * y)
        i, j = np.triu_indices(grid, k=1)
        r = _holder_ratio(u, pts[i], pts[j], rho)
        k = int(np.argmax(r))
        if r[k] <= best:
            break
        best = float(r[k])
        span = (hi - lo) / (grid - 1)
        lo, hi = max(0.0, t[i[k]] - span), min(1.0, t[j[k]] + span)
    return best


def holder_modulus_estimate(
    u: Potential,
    rho: float,
    pairs: int,
    rng: np.random.Generator,
    refine: bool = True,
) -> float:
    """Lower bound on sup |u(x)-u(y)| / d(x,y)^rho over sampled pairs.

    ``d`` is the mass-normalized Fubini-Study distance. Pairs come in fixed
    chunks, alternately independent uniform and local perturbations at
    log-uniform scales; a larger ``pairs`` with the same seed therefore sees a
    superset of the smaller sample. With ``refine`` the best pair is pushed
    further by a deterministic search along its geodesic.
    """
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    N = u.dim
    best = 0.0
    best_pair = None
    remaining = pairs
    while remaining > 0:
        x = uniform_fs_sample(rng, N, _HOLDER_CHUNK)
        y_far = uniform_fs_sample(rng, N, _HOLDER_CHUNK)
        xi = rng.standard_normal((_HOLDER_CHUNK, N + 1)) + 1j * rng.standard_normal((_HOLDER_CHUNK, N + 1))
        scale = 10.0 ** rng.uniform(-4.0, 0.0, size=_HOLDER_CHUNK)
        y_near = normalize(x + scale[:, None] * xi)
        y = np.where((np.arange(_HOLDER_CHUNK) % 2 == 0)[:, None], y_far, y_near)
        take = min(remaining, _HOLDER_CHUNK)
        r = _holder_ratio(u, x[:take], y[:take], rho)
        k = int(np.argmax(r))
        if r[k] > best:
            best = float(r[k])
            best_pair = (x[k], y[k])
        remaining -= take
    if refine and best_pair is not None:
        best = max(best, _refine_on_geodesic(u, *best_pair, rho))
    return best


# -- hypothesis thresholds ----------------------------------------------------


def theorem11_c_threshold(rho: float, chern_top: int, k: int) -> float:
    """(12/rho)^(2 c_1(L)^k / k!): the base c must exceed this."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if chern_top < 1:
        raise ValueError("chern_top must be >= 1")
    return (12.0 / rho) ** (2.0 * chern_top / math.factorial(k))


def prop211_epsilon_threshold(k: int, rho: float, beta0: float) -> float:
    """beta0 * k^-3 * (rho/12)^(2k): perturbation size below which the
    perturbed Monge-Ampere measure stays moderate."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if beta0 <= 0:
        raise ValueError("beta0 must be positive")
    return beta0 * k**-3 * (rho / 12.0) ** (2 * k)
