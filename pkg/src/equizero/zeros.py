"""Zero sets of sections on P^1 and their pairing with smooth test functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import lapack

from .geometry import from_chart, normalize
from .sections import MAX_DEGREE, Section

LEADING_ZERO_TOL = 1e-13
RESIDUAL_TOL = 1e-6
NEWTON_STEPS = 6


class RootExtractionError(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"ill-conditioned root extraction (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ZeroSet:
    """Zeros of a degree-n section as unit points of P^1, repeated by multiplicity.

    Only the point at infinity [0:1] carries an explicit multiplicity; finite
    roots are listed as the eigenvalue solver returns them.
    """

    points: np.ndarray
    n: int
    at_infinity: int = 0
    residual: float = 0.0

    @property
    def total(self) -> int:
        return int(self.points.shape[0])

    @property
    def flagged(self) -> bool:
        return not self.residual <= RESIDUAL_TOL


def _horner(a: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p(x), p'(x) and sum_j |a_j| |x|^j for ascending coefficients a."""
    p = np.zeros_like(x)
    dp = np.zeros_like(x)
    scale = np.zeros(x.shape)
    ax = np.abs(x)
    for c in a[::-1]:
        dp = dp * x + p
        p = p * x + c
        scale = scale * ax + abs(c)
    return p, dp, scale


def _residual_and_step(a: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Relative residual |p(r)| / sum_j |a_j| |r|^j and the Newton step at r.

    Roots outside the unit disk are handled through the reversed polynomial
    in 1/r, which keeps every power bounded by 1.
    """
    outer = np.abs(r) > 1.0
    x = np.where(outer, 1.0 / np.where(outer, r, 1.0), r)
    res = np.empty(r.shape)
    step = np.zeros(r.shape, dtype=complex)
    for mask, coeffs in ((~outer, a), (outer, a[::-1])):
        if not np.any(mask):
            continue
        xm = x[mask]
        p, dp, scale = _horner(coeffs, xm)
        with np.errstate(invalid="ignore", divide="ignore"):
            res[mask] = np.where(scale > 0, np.abs(p) / scale, 0.0)
            dx = np.where(dp != 0, p / dp, 0.0)
        if coeffs is a:
            step[mask] = dx
        else:
            # Newton in u = 1/r, mapped back to a step in r
            u_new = xm - dx
            with np.errstate(invalid="ignore", divide="ignore"):
                step[mask] = r[mask] - 1.0 / u_new
    return res, step


def _companion_roots(a: np.ndarray) -> np.ndarray:
    d = len(a) - 1
    monic = a[:-1] / a[-1]
    C = np.zeros((d, d), dtype=complex)
    C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -monic
    # diagonal balancing only, so the companion stays upper Hessenberg
    B, _, _, _, info = lapack.zgebal(C, scale=1, permute=0)
    if info != 0:
        raise RootExtractionError(float("inf"))
    return np.linalg.eigvals(B)


def _newton_polish(a: np.ndarray, r: np.ndarray, target: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    res, step = _residual_and_step(a, r)
    for _ in range(NEWTON_STEPS):
        todo = res > target
        if not np.any(todo):
            break
        cand = r[todo] - step[todo]
        cres, cstep = _residual_and_step(a, cand)
        better = np.isfinite(cand) & (cres < res[todo])
        if not np.any(better):
            break
        idx = np.flatnonzero(todo)[better]
        r[idx] = cand[better]
        res[idx] = cres[better]
        step[idx] = cstep[better]
    return r, res


def roots(s: Section, strict: bool = True) -> ZeroSet:
    """Zeros of ``s`` via balanced companion-matrix eigenvalues plus Newton polishing.

    Leading coefficients below LEADING_ZERO_TOL * |coeffs| count as zero and
    move multiplicity to [0:1]. Raises RootExtractionError when the polished
    relative residual exceeds RESIDUAL_TOL, unless ``strict`` is False.
    """
    n = s.n
    if n > MAX_DEGREE:
        raise ValueError(f"degree cap is {MAX_DEGREE}")
    c = s.coeffs
    big = np.abs(c) >= LEADING_ZERO_TOL * np.linalg.norm(c)
    d = int(np.flatnonzero(big)[-1])
    a = s.monomial_coeffs()[: d + 1]

    if d > 0:
        r = _companion_roots(a)
        r, res = _newton_polish(a, r)
        residual = float(np.max(res))
        finite = normalize(np.stack([np.ones_like(r), r], axis=-1))
    else:
        residual = 0.0
        finite = np.zeros((0, 2), dtype=complex)
    inf_pts = np.tile(np.array([0.0, 1.0], dtype=complex), (n - d, 1))
    z = ZeroSet(points=np.concatenate([finite, inf_pts]), n=n, at_infinity=n - d, residual=residual)
    if strict and z.flagged:
        raise RootExtractionError(residual)
    return z


# -- test functions -------------------------------------------------------------


@lru_cache(maxsize=None)
def _sphere_rule(order: int = 64):
    # omega_FS on P^1 is dt dphi / 2pi with t = |z_1|^2 / |z|^2 in [0, 1]
    x, wx = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * wx
    phi = 2 * np.pi * np.arange(order) / order
    T, PHI = np.meshgrid(t, phi, indexing="ij")
    z = np.stack([np.sqrt(1 - T), np.sqrt(T) * np.exp(1j * PHI)], axis=-1)
    weights = np.repeat(wt[:, None], order, axis=1) / order
    return z, weights


def fs_integral(func: Callable[[np.ndarray], np.ndarray], order: int = 64) -> float:
    """Integral of a function on P^1 against omega_FS (total mass 1).

    Gauss-Legendre in t = |z_1|^2 times the periodic trapezoid rule in arg z_1.
    """
    z, w = _sphere_rule(order)
    return float(np.sum(func(z) * w))


@dataclass(frozen=True)
class C2Grid:
    points: int = 41
    h: float = 1e-3


def _chart_grid(points: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, points)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    w = (X + 1j * Y).ravel()
    return w[np.abs(w) <= 1.0]


def c2_norm(func: Callable[[np.ndarray], np.ndarray], grid: C2Grid = C2Grid()) -> float:
    """sup|psi| + sup|grad psi| + sup|Hess psi| in the round Fubini-Study metric.

    Both standard charts are sampled on the closed unit disk. In a chart the
    metric is lambda^2 |dw|^2 with lambda = 1/(1+|w|^2); derivatives come from
    central differences and the covariant Hessian carries the conformal
    Christoffel correction.
    """
    w = _chart_grid(grid.points)
    h = grid.h
    x, y = w.real, w.imag
    sup_val = sup_grad = sup_hess = 0.0
    for swap in (False, True):

        def f(wc):
            z = from_chart(wc[..., None])
            return func(z[..., ::-1] if swap else z)

        f0 = f(w)
        fxp, fxm = f(w + h), f(w - h)
        fyp, fym = f(w + 1j * h), f(w - 1j * h)
        fx = (fxp - fxm) / (2 * h)
        fy = (fyp - fym) / (2 * h)
        fxx = (fxp - 2 * f0 + fxm) / h**2
        fyy = (fyp - 2 * f0 + fym) / h**2
        fxy = (f(w + h + 1j * h) - f(w + h - 1j * h) - f(w - h + 1j * h) + f(w - h - 1j * h)) / (4 * h**2)

        s = 1.0 + x**2 + y**2
        lam = 1.0 / s
        sx, sy = -2 * x / s, -2 * y / s  # gradient of log lambda
        dot = sx * fx + sy * fy
        hxx = fxx - 2 * sx * fx + dot
        hyy = fyy - 2 * sy * fy + dot
        hxy = fxy - (sx * fy + sy * fx)
        # operator norm of the symmetric 2x2 block
        mean = 0.5 * (hxx + hyy)
        rad = np.sqrt((0.5 * (hxx - hyy)) ** 2 + hxy**2)
        op = np.abs(mean) + rad

        sup_val = max(sup_val, float(np.max(np.abs(f0))))
        sup_grad = max(sup_grad, float(np.max(np.hypot(fx, fy) / lam)))
        sup_hess = max(sup_hess, float(np.max(op / lam**2)))
    return sup_val + sup_grad + sup_hess


@dataclass(frozen=True)
class TestFunction:
    """A smooth function on P^1 with its C^2 norm and omega_FS integral."""

    __test__ = False  # not a pytest class

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    label: str
    c2_norm: float
    fs_integral: float

    def __call__(self, z) -> np.ndarray:
        return self.func(np.asarray(z, dtype=complex))


def make_test_function(func, label: str, grid: C2Grid = C2Grid()) -> TestFunction:
    return TestFunction(func=func, label=label, c2_norm=c2_norm(func, grid), fs_integral=fs_integral(func))


def _sq(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


def _one(z):
    return np.ones(np.shape(z)[:-1])


def _height(z):
    return np.abs(z[..., 1]) ** 2 / _sq(z)


def _re_cross(z):
    return (z[..., 1] * np.conj(z[..., 0])).real / _sq(z)


def _im_cross(z):
    return (z[..., 1] * np.conj(z[..., 0])).imag / _sq(z)


def _product(z):
    return np.abs(z[..., 0] * z[..., 1]) ** 2 / _sq(z) ** 2


BATTERY_FUNCS = {
    "one": _one,
    "height": _height,
    "re_cross": _re_cross,
    "im_cross": _im_cross,
    "product": _product,
}


@lru_cache(maxsize=None)
def default_battery() -> tuple[TestFunction, ...]:
    return tuple(make_test_function(f, label) for label, f in BATTERY_FUNCS.items())


def pair_zero_current(Z: ZeroSet, psi: TestFunction, n: Optional[int] = None) -> float:
    """<(1/n)[Z] - omega_FS, psi> = (1/n) sum_roots psi - int psi omega_FS."""
    n = Z.n if n is None else n
    if Z.total != n:
        raise ValueError(f"zero set has {Z.total} points, expected {n}")
    return float(np.sum(psi(Z.points)) / n - psi.fs_integral)


@dataclass(frozen=True)
class DiscrepancyRecord:
    n: int
    sample_id: int
    labels: tuple[str, ...]
    pairings: tuple[float, ...]
    discrepancy: float
    seed: Optional[int] = None
    flagged: bool = False
    residual: float = 0.0


def discrepancy(
    s: Section,
    battery: Sequence[TestFunction],
    sample_id: int = 0,
    seed: Optional[int] = None,
) -> DiscrepancyRecord:
    """Max over the battery of |<(1/n)[Z_s] - omega_FS, psi>| / |psi|_C2."""
    if not battery:
        raise ValueError("battery must be nonempty")
    if any(not psi.c2_norm > 0 for psi in battery):
        raise ValueError("battery functions need positive C^2 norms")
    labels = tuple(psi.label for psi in battery)
    try:
        Z = roots(s)
    except RootExtractionError as err:
        nan = float("nan")
        return DiscrepancyRecord(
            n=s.n,
            sample_id=sample_id,
            labels=labels,
            pairings=tuple(nan for _ in battery),
            discrepancy=nan,
            seed=seed,
            flagged=True,
            residual=err.residual,
        )
    pairings = tuple(pair_zero_current(Z, psi, s.n) for psi in battery)
    disc = max(abs(p) / psi.c2_norm for p, psi in zip(pairings, battery))
    return DiscrepancyRecord(
        n=s.n,
        sample_id=sample_id,
        labels=labels,
        pairings=pairings,
        discrepancy=float(disc),
        seed=seed,
        residual=Z.residual,
    )
