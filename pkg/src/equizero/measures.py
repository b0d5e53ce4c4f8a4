"""Moderate measures on P^N.

Monte Carlo estimators for exponential integrals and tails of class-F
functions, Monge-Ampere densities of smooth perturbations of omega_FS, a
Metropolis sampler for the perturbed measures, and numerical checks of the
moderateness bounds for omega_FS^k and its perturbations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import best_chart, from_chart, normalize, uniform_fs_sample
from .potentials import (
    DEFAULT_FD_STEP,
    ClassFFunction,
    GridSpec,
    Potential,
    complex_hessian_fd,
    fs_chart_hessian,
    holder_modulus_estimate,
    maxlog_class_f,
    pairing_log_potential,
    prop211_epsilon_threshold,
    qpsh_margin,
    scaled_potential,
    softmax_potential,
)

PHI_CLAMP = -50.0
CLAMP_FLAG_FRACTION = 1e-3
MIN_MODERATE_SAMPLES = 1000


class DivergentIntegralError(ValueError):
    pass


class NonSmoothPotentialError(ValueError):
    pass


class ProposalScaleError(RuntimeError):
    pass


class HypothesisError(ValueError):
    """A hypothesis of the moderateness estimate fails; the message names it."""


@dataclass(frozen=True)
class Constants:
    """Constants of the moderateness estimates. The defaults are desk choices."""

    alpha0: float = 0.5
    c0: float = 4.0
    beta0: float = 1.0
    c5: float = 4.0

    def __post_init__(self):
        for name in ("alpha0", "c0", "beta0", "c5"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")


@dataclass
class MeasureSampler:
    """A probability measure on P^N that can be sampled.

    ``draw(rng, size)`` returns ``(size, N+1)`` unit vectors. ``density_vs_fs``
    is the Radon-Nikodym derivative against omega_FS^N when known.
    """

    dim: int
    draw: Callable[[np.random.Generator, int], np.ndarray]
    label: str
    density_vs_fs: Optional[Callable[[np.ndarray], np.ndarray]] = None
    diagnostics: dict = field(default_factory=dict)


def uniform_sampler(N: int) -> MeasureSampler:
    return MeasureSampler(
        dim=N,
        draw=lambda rng, size: uniform_fs_sample(rng, N, size),
        label="uniform",
        density_vs_fs=lambda z: np.ones(np.shape(z)[:-1]),
    )


# -- exponential integrals and tails --------------------------------------------


@dataclass(frozen=True)
class ModerateReport:
    alpha: float
    integral_estimate: float
    std_error: float
    samples: int
    clamp_count: int
    tail_table: tuple[tuple[float, float, float], ...] = ()
    claim: Optional[tuple[float, float]] = None
    verdict: Optional[bool] = None

    @property
    def clamp_flagged(self) -> bool:
        return self.clamp_count > CLAMP_FLAG_FRACTION * self.samples


def _clamped(phi_vals: np.ndarray) -> tuple[np.ndarray, int]:
    low = ~(phi_vals >= PHI_CLAMP)
    return np.where(low, PHI_CLAMP, phi_vals), int(np.count_nonzero(low))


def exp_integral_estimate(
    mu: MeasureSampler,
    phi: ClassFFunction,
    alpha: float,
    m: int,
    rng: np.random.Generator,
    tail_levels: Sequence[float] = (),
    claim: Optional[tuple[float, float]] = None,
) -> ModerateReport:
    """Monte Carlo estimate of int exp(-alpha phi) d mu with its standard error.

    phi is clamped at PHI_CLAMP near its polar set and the clamps are counted.
    ``tail_levels`` adds (M, mu{phi < -M}, se) rows computed on the same draws.
    With ``claim=(c, a)`` the verdict compares the estimate at alpha=a with c.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha >= phi.alpha_limit:
        raise DivergentIntegralError("divergent integral for this battery")
    if m < MIN_MODERATE_SAMPLES:
        raise ValueError(f"need at least {MIN_MODERATE_SAMPLES} samples")
    z = mu.draw(rng, m)
    raw = phi(z)
    vals, clamps = _clamped(raw)
    f = np.exp(-alpha * vals)
    est = float(np.mean(f))
    se = float(np.std(f, ddof=1) / math.sqrt(m))
    table = tuple((float(M), *_tail_from_values(raw, M)) for M in tail_levels)
    verdict = None if claim is None else bool(est <= claim[0])
    return ModerateReport(
        alpha=alpha,
        integral_estimate=est,
        std_error=se,
        samples=m,
        clamp_count=clamps,
        tail_table=table,
        claim=claim,
        verdict=verdict,
    )


def _tail_from_values(vals: np.ndarray, M: float) -> tuple[float, float]:
    frac = float(np.mean(vals < -M))
    return frac, math.sqrt(frac * (1 - frac) / len(vals))


def tail_probability(
    mu: MeasureSampler, phi: ClassFFunction, M: float, m: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Empirical mu{phi < -M} and its binomial standard error."""
    if M < 0:
        raise ValueError("M must be non-negative")
    return _tail_from_values(phi(mu.draw(rng, m)), M)


def integral_constants_from_tail(c_tail: float, alpha_tail: float) -> tuple[float, float]:
    """Tail bound c' e^{-alpha' M} gives the integral bound (2c', alpha'/2)."""
    if c_tail <= 0 or alpha_tail <= 0:
        raise ValueError("constants must be positive")
    return 2.0 * c_tail, alpha_tail / 2.0


def tail_constants_from_integral(c: float, alpha: float) -> tuple[float, float]:
    """An integral bound (c, alpha) gives the tail bound with the same constants."""
    if c <= 0 or alpha <= 0:
        raise ValueError("constants must be positive")
    return c, alpha


def constants_roundtrip(c: float, alpha: float, direction: str = "tail_to_integral") -> tuple[float, float]:
    if direction == "tail_to_integral":
        return integral_constants_from_tail(c, alpha)
    if direction == "integral_to_tail":
        return tail_constants_from_integral(c, alpha)
    raise ValueError(f"unknown direction {direction!r}")


# -- Monge-Ampere densities -------------------------------------------------------


def chart_density(hess_u: np.ndarray, w: np.ndarray, extra_fs: float = 0.0) -> np.ndarray:
    """det((1 + extra_fs) G + H) / det(G), clamped below at 0.

    G is the complex Hessian of the omega_FS chart potential at w and H the
    complex Hessian of the potential; the ratio is the density of
    (dd^c u + (1+extra_fs) omega_FS)^N against omega_FS^N.
    """
    G = fs_chart_hessian(w)
    M = np.linalg.solve(G, (1.0 + extra_fs) * G + hess_u)
    d = np.linalg.det(M).real
    return np.maximum(d, 0.0)


def chart_density_fd(f: Callable[[np.ndarray], np.ndarray], w, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """chart_density with H from finite differences of a chart function f."""
    w = np.asarray(w, dtype=complex)
    return chart_density(complex_hessian_fd(f, w, h), w)


_DENSITY_CHUNK_ENTRIES = 1 << 22


def ma_density(u: Potential, z, h: float = DEFAULT_FD_STEP, extra_fs: float = 0.0) -> np.ndarray:
    """Density of (dd^c u + (1+extra_fs) omega_FS)^N with respect to omega_FS^N.

    Evaluated in the chart of the largest coordinate of each point. Uses the
    potential's analytic chart Hessian when it has one, finite differences
    otherwise. Large batches are processed in chunks to bound memory.
    """
    if not u.smooth:
        raise NonSmoothPotentialError(
            f"potential {u.label!r} is not smooth; use a softmax surrogate"
        )
    z = np.asarray(z, dtype=complex)
    batch = z.shape[:-1]
    flat = z.reshape(-1, z.shape[-1])
    N = z.shape[-1] - 1
    step = max(1, _DENSITY_CHUNK_ENTRIES // (N * N * (1 if u.chart_hessian else 4 * N + 1)))
    out = np.empty(len(flat))
    for i in range(0, len(flat), step):
        out[i : i + step] = _ma_density_flat(u, flat[i : i + step], h, extra_fs)
    return out.reshape(batch)


def _ma_density_flat(u: Potential, z: np.ndarray, h: float, extra_fs: float) -> np.ndarray:
    perm, w = best_chart(z)
    if u.chart_hessian is not None:
        H = u.chart_hessian(w)
    else:
        inv = np.argsort(perm, axis=-1)

        def f(wc):
            zc = from_chart(wc)
            idx = np.broadcast_to(inv[..., None, :], zc.shape)
            return u(np.take_along_axis(zc, idx, axis=-1))

        H = complex_hessian_fd(f, w, h)
    return chart_density(H, w, extra_fs)


def density_mass_check(u: Potential, m: int, rng: np.random.Generator) -> tuple[float, float]:
    """MC mean (and standard error) of ma_density under uniform draws; should be 1."""
    z = uniform_fs_sample(rng, u.dim, m)
    d = ma_density(u, z)
    return float(np.mean(d)), float(np.std(d, ddof=1) / math.sqrt(m))


# -- exact sampling for the scaled softmax family ------------------------------------
#
# u = epsilon * softmax_tau depends only on the moduli t_i = |z_i|^2. In the
# chart coordinates x_i = log |w_i|^2 the potential of dd^c u + omega_FS is
#   phi(x) = (1 - epsilon)/2 * log(1 + sum e^x) + epsilon tau log(1 + sum e^(x/(2 tau)))
# and the gradient map 2 grad phi pushes (dd^c u + omega_FS)^N forward to the
# uniform measure on the standard simplex, as it does for omega_FS^N itself.


def _softmax0(x: np.ndarray) -> np.ndarray:
    """e^x / (1 + sum e^x) over the last axis (the implicit coordinate is 0)."""
    m = np.maximum(np.max(x, axis=-1, keepdims=True), 0.0)
    e = np.exp(x - m)
    return e / (np.exp(-m) + e.sum(axis=-1, keepdims=True))


def _jac(s: np.ndarray) -> np.ndarray:
    return np.eye(s.shape[-1]) * s[..., None, :] - s[..., :, None] * s[..., None, :]


def _lse0(x: np.ndarray) -> np.ndarray:
    m = np.maximum(np.max(x, axis=-1), 0.0)
    return m + np.log(np.exp(-m) + np.exp(x - m[..., None]).sum(axis=-1))


def toric_gradient_inverse(y: np.ndarray, epsilon: float, tau: float, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Solve (1-epsilon) softmax0(x) + epsilon softmax0(x/(2 tau)) = y by damped Newton.

    ``y`` has shape (..., N) with positive entries summing to less than 1.
    """
    y = np.asarray(y, dtype=float)
    y0 = 1.0 - y.sum(axis=-1, keepdims=True)
    x = np.log(y) - np.log(y0)
    q = 1.0 / (2.0 * tau)

    def objective(x):
        return (1 - epsilon) * _lse0(x) + epsilon * _lse0(q * x) / q - np.sum(y * x, axis=-1)

    for _ in range(max_iter):
        s, r = _softmax0(x), _softmax0(q * x)
        g = (1 - epsilon) * s + epsilon * r - y
        if np.max(np.abs(g)) <= tol:
            break
        J = (1 - epsilon) * _jac(s) + epsilon * q * _jac(r)
        step = np.linalg.solve(J, g[..., None])[..., 0]
        # backtrack only where the full step increases the objective beyond roundoff
        f0 = objective(x)
        slack = 1e-13 * (1.0 + np.abs(f0))
        lam = np.ones(x.shape[:-1])
        for _ in range(40):
            bad = objective(x - lam[..., None] * step) > f0 + slack
            if not np.any(bad):
                break
            lam = np.where(bad, lam / 2, lam)
        x = x - lam[..., None] * step
    else:
        raise RuntimeError("gradient inversion did not converge")
    return x


def toric_density(z, epsilon: float, tau: float) -> np.ndarray:
    """Density of (dd^c u + omega_FS)^N against omega_FS^N for u = epsilon * softmax_tau,
    computed from real Hessians in logarithmic chart coordinates."""
    z = np.asarray(z, dtype=complex)
    perm, w = best_chart(z)
    x = np.log(np.abs(w) ** 2)
    q = 1.0 / (2.0 * tau)
    Js = _jac(_softmax0(x))
    Jr = _jac(_softmax0(q * x))
    M = np.linalg.solve(Js, (1 - epsilon) * Js + epsilon * q * Jr)
    return np.linalg.det(M)


def toric_softmax_sampler(N: int, epsilon: float, tau: float) -> MeasureSampler:
    """Exact sampler for (dd^c u + omega_FS)^N with u = epsilon * softmax_tau, 0 <= epsilon <= 1."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if tau <= 0:
        raise ValueError("tau must be positive")

    def draw(rng, size):
        y = rng.dirichlet(np.ones(N + 1), size)
        x = toric_gradient_inverse(y[:, 1:], epsilon, tau)
        t = np.concatenate([np.ones((size, 1)), np.exp(x)], axis=1)
        t /= t.sum(axis=1, keepdims=True)
        phase = np.exp(2j * np.pi * rng.uniform(size=(size, N + 1)))
        return np.sqrt(t) * phase

    return MeasureSampler(
        dim=N,
        draw=draw,
        label=f"toric:{epsilon:g}:softmax:{tau:g}",
        density_vs_fs=lambda z: toric_density(z, epsilon, tau),
    )


def mass_importance_check(
    u: Potential, proposal: MeasureSampler, m: int, rng: np.random.Generator, mix: float = 0.5
) -> tuple[float, float]:
    """Importance-sampled int ma_density(u) omega_FS^N with a defensive mixture.

    Draws come from ``mix`` * uniform + (1 - mix) * proposal, whose density is
    known from ``proposal.density_vs_fs``; when the proposal matches the
    Monge-Ampere measure the weights are bounded by 1/(1 - mix).
    """
    if not 0 < mix < 1:
        raise ValueError("mix must lie in (0, 1)")
    N = u.dim
    pick = rng.uniform(size=m) < mix
    z = np.empty((m, N + 1), dtype=complex)
    k = int(np.count_nonzero(pick))
    z[pick] = uniform_fs_sample(rng, N, k)
    z[~pick] = proposal.draw(rng, m - k)
    q = mix + (1 - mix) * proposal.density_vs_fs(z)
    ratio = ma_density(u, z) / q
    return float(ratio.mean()), float(ratio.std(ddof=1) / math.sqrt(m))


# -- Metropolis sampling of perturbed measures --------------------------------------------


@dataclass(frozen=True)
class ChainParams:
    """burn_in steps before the first recorded state, ``steps`` between
    recorded states, and the proposal scale ``sigma``."""

    burn_in: int = 200
    steps: int = 10
    sigma: float = 0.3


@dataclass(frozen=True)
class ChainResult:
    states: np.ndarray
    acceptance: float


def run_chains(
    u: Potential,
    chains: int,
    params: ChainParams,
    rng: np.random.Generator,
    per_chain: int = 1,
    start: Optional[np.ndarray] = None,
) -> ChainResult:
    """Vectorized Metropolis chains targeting ma_density(u) * omega_FS^N.

    Proposals perturb the unit lift by a complex Gaussian of scale sigma and
    renormalize; the kernel depends only on |<z, z'>|, so it is symmetric
    with respect to omega_FS^N.
    """
    N = u.dim
    z = uniform_fs_sample(rng, N, chains) if start is None else normalize(start).reshape(chains, N + 1)
    dens = ma_density(u, z)
    accepted = 0
    proposed = 0
    out = []
    total = params.burn_in + params.steps * (per_chain - 1)
    record_at = {params.burn_in + params.steps * j for j in range(per_chain)}
    for t in range(total + 1):
        if t in record_at:
            out.append(z.copy())
        if t == total:
            break
        xi = rng.standard_normal((chains, N + 1)) + 1j * rng.standard_normal((chains, N + 1))
        prop = normalize(z + params.sigma * xi / math.sqrt(2))
        pd = ma_density(u, prop)
        uni = rng.uniform(size=chains)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dens > 0, pd / dens, 1.0)
        acc = uni < ratio
        z = np.where(acc[:, None], prop, z)
        dens = np.where(acc, pd, dens)
        accepted += int(np.count_nonzero(acc))
        proposed += chains
    states = np.stack(out, axis=1).reshape(chains * per_chain, N + 1)
    return ChainResult(states=states, acceptance=accepted / proposed if proposed else 1.0)


def tune_sigma(
    u: Potential,
    rng: np.random.Generator,
    target: float = 0.4,
    chains: int = 32,
    steps: int = 60,
    rounds: int = 8,
) -> float:
    """Pilot-run search for the proposal scale giving ~``target`` acceptance."""
    lo, hi = -4.0, 1.0  # log10 sigma bracket
    sigma = 10 ** ((lo + hi) / 2)
    for _ in range(rounds):
        sigma = 10 ** ((lo + hi) / 2)
        acc = run_chains(u, chains, ChainParams(burn_in=steps, steps=1, sigma=sigma), rng).acceptance
        if acc > target:
            lo = math.log10(sigma)
        else:
            hi = math.log10(sigma)
    return sigma


def mh_sample_perturbed(
    u: Potential,
    N: int,
    params: ChainParams,
    rng: np.random.Generator,
    pilot_chains: int = 16,
) -> MeasureSampler:
    """A sampler for (dd^c u + omega_FS)^N built on Metropolis chains.

    A pilot run measures the acceptance rate: below 0.01 the proposal scale is
    rejected, outside (0.1, 0.9) a warning is issued. Each draw of the
    returned sampler is an independent chain unless ``chains`` is given.
    """
    if u.dim != N:
        raise ValueError(f"potential lives on P^{u.dim}, not P^{N}")
    if not u.smooth:
        raise NonSmoothPotentialError(f"potential {u.label!r} is not smooth; use a softmax surrogate")
    if params.sigma <= 0:
        raise ValueError("proposal sigma must be positive")
    pilot = run_chains(u, pilot_chains, params, rng)
    if pilot.acceptance < 0.01:
        raise ProposalScaleError(f"proposal scale unusable (acceptance {pilot.acceptance:.4f})")
    if not 0.1 < pilot.acceptance < 0.9:
        warnings.warn(f"MCMC acceptance rate {pilot.acceptance:.3f} outside (0.1, 0.9)", stacklevel=2)

    def draw(rng, size, chains=None):
        chains = size if chains is None else chains
        per_chain = -(-size // chains)
        return run_chains(u, chains, params, rng, per_chain=per_chain).states[:size]

    return MeasureSampler(
        dim=N,
        draw=draw,
        label=f"perturbed:{u.label}",
        density_vs_fs=lambda z: ma_density(u, z),
        diagnostics={"pilot_acceptance": pilot.acceptance, "sigma": params.sigma},
    )


# -- moderateness checks -------------------------------------------------------------


def class_f_battery(N: int, extra_points: int = 2, seed: int = 0) -> list[ClassFFunction]:
    """Pairing-log functions at e_0 and a few fixed random points, plus max-log."""
    e0 = np.zeros(N + 1, dtype=complex)
    e0[0] = 1.0
    pts = [e0]
    if extra_points:
        pts.extend(uniform_fs_sample(np.random.default_rng([seed, N]), N, extra_points))
    battery = [pairing_log_potential(a) for a in pts]
    battery.append(maxlog_class_f(N))
    return battery


@dataclass(frozen=True)
class BoundCheck:
    k: int
    label: str
    alpha: float
    integral: float
    std_error: float
    bound: float
    in_hypothesis: bool = True

    @property
    def ratio(self) -> float:
        return self.integral / self.bound

    @property
    def holds(self) -> bool:
        return self.integral <= self.bound


@dataclass(frozen=True)
class ModerateSuiteReport:
    checks: tuple[BoundCheck, ...]
    notes: tuple[str, ...] = ()

    @property
    def max_ratio(self) -> float:
        rel = [c.ratio for c in self.checks if c.in_hypothesis]
        return max(rel) if rel else 0.0

    @property
    def passed(self) -> bool:
        return all(c.holds for c in self.checks if c.in_hypothesis)


def verify_prop_2_2(
    ks: Sequence[int] = (1, 2, 3),
    constants: Constants = Constants(),
    m: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    battery: Optional[Callable[[int], Sequence[ClassFFunction]]] = None,
    alpha0: Optional[float] = None,
) -> ModerateSuiteReport:
    """int exp(-alpha0 phi) omega_FS^k <= c0 k over a class-F battery, per k."""
    rng = np.random.default_rng() if rng is None else rng
    alpha = constants.alpha0 if alpha0 is None else alpha0
    battery = class_f_battery if battery is None else battery
    checks = []
    for k in ks:
        mu = uniform_sampler(k)
        for phi in battery(k):
            rep = exp_integral_estimate(mu, phi, alpha, m, rng)
            checks.append(
                BoundCheck(
                    k=k,
                    label=phi.label,
                    alpha=alpha,
                    integral=rep.integral_estimate,
                    std_error=rep.std_error,
                    bound=constants.c0 * k,
                )
            )
    return ModerateSuiteReport(checks=tuple(checks))


def _margin_grid(k: int) -> GridSpec:
    return GridSpec(radius=1.5, points={1: 41, 2: 9}.get(k, 5))


def prop211_potential(k: int, rho: float, epsilon: float, tau: float = 0.1, pairs: int = 20_000, seed: int = 0) -> Potential:
    """A scaled softmax potential meeting the Hoelder and positivity hypotheses at epsilon.

    The scale is epsilon / (2 * max(1, estimated C^rho modulus of softmax)).
    """
    base = softmax_potential(k, tau)
    modulus = holder_modulus_estimate(base, rho, pairs, np.random.default_rng([seed, k]))
    s = epsilon / (2.0 * max(1.0, modulus))
    return scaled_potential(s, base)


def verify_prop_2_11(
    k: int,
    rho: float,
    u: Potential,
    epsilon: float,
    alphas: Optional[Sequence[float]] = None,
    m: int = 100_000,
    rng: Optional[np.random.Generator] = None,
    constants: Constants = Constants(),
    margin_tol: float = 1e-6,
    holder_pairs: int = 20_000,
) -> ModerateSuiteReport:
    """Moderateness of the perturbed Monge-Ampere measures on P^k.

    Checks the hypotheses first (epsilon below threshold, u epsilon*omega_FS-psh,
    C^rho modulus <= epsilon) and refuses with the failing predicate named.
    For every alpha and battery member it then estimates, by importance
    weighting uniform draws,

    * int exp(-alpha phi) d[(dd^c u + (1+eps) omega_FS)^k - omega_FS^k] against c5 (rho/4)^k,
    * int exp(-alpha phi) (dd^c u + omega_FS)^k against c0 k + c5.

    Only alpha <= alpha0 (rho/4)^k is within the hypotheses; larger alphas are
    reported with ``in_hypothesis=False`` and do not affect ``passed``.
    """
    rng = np.random.default_rng() if rng is None else rng
    if u.dim != k:
        raise ValueError(f"potential lives on P^{u.dim}, not P^{k}")
    threshold = prop211_epsilon_threshold(k, rho, constants.beta0)
    if not epsilon < threshold:
        raise HypothesisError(
            f"epsilon < beta0 k^-3 (rho/12)^(2k) violated: {epsilon:.3e} >= {threshold:.3e}"
        )
    if not u.smooth:
        raise HypothesisError(f"u smooth violated: {u.label}")
    margin = qpsh_margin(u, epsilon, _margin_grid(k))
    if margin < -margin_tol:
        raise HypothesisError(f"u is epsilon*omega_FS-psh violated: margin {margin:.3e}")
    modulus = holder_modulus_estimate(u, rho, holder_pairs, rng)
    if modulus > epsilon:
        raise HypothesisError(f"u of class C^rho with modulus epsilon violated: {modulus:.3e} > {epsilon:.3e}")

    alpha_hyp = constants.alpha0 * (rho / 4.0) ** k
    alphas = [alpha_hyp, 10.0 * alpha_hyp] if alphas is None else list(alphas)
    z = uniform_fs_sample(rng, k, m)
    d_sigma = ma_density(u, z)
    d_plus = ma_density(u, z, extra_fs=epsilon)
    checks = []
    for phi in class_f_battery(k):
        vals, _ = _clamped(phi(z))
        for alpha in alphas:
            if alpha >= phi.alpha_limit:
                continue
            e = np.exp(-alpha * vals)
            inside = alpha <= alpha_hyp * (1 + 1e-12)
            diff = e * (d_plus - 1.0)
            full = e * d_sigma
            checks.append(
                BoundCheck(k, f"{phi.label}:difference", alpha, float(diff.mean()),
                           float(diff.std(ddof=1) / math.sqrt(m)), constants.c5 * (rho / 4.0) ** k, inside)
            )
            checks.append(
                BoundCheck(k, f"{phi.label}:perturbed", alpha, float(full.mean()),
                           float(full.std(ddof=1) / math.sqrt(m)), constants.c0 * k + constants.c5, inside)
            )
    notes = (
        f"epsilon threshold {threshold:.3e}",
        f"psh margin {margin:.3e}",
        f"C^rho modulus estimate {modulus:.3e}",
        f"alpha within hypotheses <= {alpha_hyp:.3e}",
    )
    return ModerateSuiteReport(checks=tuple(checks), notes=notes)
