"""Acceptance gate: one test (or test group) per criterion, summarized by conftest."""

import math
import time

import numpy as np
import pytest
from scipy.stats import ks_2samp

from equizero.geometry import covering_ratio, from_chart, normalize, uniform_fs_sample
from equizero.lab.config import ExperimentConfig
from equizero.lab.experiments import perturbing_potential, run_equidistribution
from equizero.lab.fitting import estimate_exceptional, fit_rate
from equizero.measures import constants_roundtrip, exp_integral_estimate, ma_density, uniform_sampler
from equizero.potentials import holder_modulus_estimate, maxlog_potential, pairing_log_potential
from equizero.sections import kodaira_density, random_section
from equizero.zeros import roots

# Beta-function oracle k Gamma(k) Gamma(1 - a/2) / Gamma(k + 1 - a/2) at a = 1, frozen
EXP_INTEGRAL_ORACLE = {1: 2.0, 2: 8.0 / 3.0}
COVERING_K1 = 80.2538559129533
RATE_WINDOW = (-1.4, -0.6)

criterion = pytest.mark.criterion


def _beta_oracle(k, a):
    return k * math.gamma(k) * math.gamma(1 - a / 2) / math.gamma(k + 1 - a / 2)


@pytest.fixture(scope="module")
def uniform_run(tmp_path_factory):
    cfg = ExperimentConfig(samples=200, out=str(tmp_path_factory.mktemp("uniform")))
    t0 = time.perf_counter()
    res = run_equidistribution(cfg)
    return res, time.perf_counter() - t0


@criterion(1, "Bergman density exactness")
def test_c01_kodaira_exact(note):
    t0 = time.perf_counter()
    w = np.linspace(0.0, 5.0, 100) * np.exp(0.37j)
    worst = max(float(np.max(np.abs(kodaira_density(n, w) - 1))) for n in range(1, 51))
    elapsed = time.perf_counter() - t0
    note(f"max dev {worst:.1e}, {elapsed:.2f}s")
    assert worst < 1e-9 and elapsed < 5.0


@criterion(2, "moderate-integral oracle")
@pytest.mark.parametrize("k", [1, 2])
def test_c02_exp_integral(k, note):
    assert _beta_oracle(k, 1.0) == pytest.approx(EXP_INTEGRAL_ORACLE[k], rel=1e-14)
    rng = np.random.default_rng(20 + k)
    phi = pairing_log_potential(uniform_fs_sample(rng, k))
    t0 = time.perf_counter()
    rep = exp_integral_estimate(uniform_sampler(k), phi, 1.0, 100_000, rng)
    elapsed = time.perf_counter() - t0
    z = (rep.integral_estimate - EXP_INTEGRAL_ORACLE[k]) / rep.std_error
    note(f"P{k}: {rep.integral_estimate:.4f} ({z:+.2f} se)")
    assert abs(z) <= 3.0 and elapsed < 30.0


@criterion(3, "tail / integral consistency")
@pytest.mark.parametrize("k", [1, 2])
def test_c03_tail_consistency(k, note):
    rng = np.random.default_rng(30 + k)
    phi = pairing_log_potential(uniform_fs_sample(rng, k))
    alpha = 1.0
    rep = exp_integral_estimate(uniform_sampler(k), phi, alpha, 100_000, rng, tail_levels=(1.0, 2.0, 3.0))
    for M, frac, se in rep.tail_table:
        markov = rep.integral_estimate * math.exp(-alpha * M)
        assert frac <= markov + 3 * (se + rep.std_error * math.exp(-alpha * M))
        if k == 1:
            # on P^1, mu{log|<z,a>| < -M} = e^{-2M} exactly
            assert abs(frac - math.exp(-2 * M)) <= 3 * math.sqrt(math.exp(-2 * M) * (1 - math.exp(-2 * M)) / rep.samples)
    if k == 1:
        note("exact e^{-2M} tail reproduced")


@criterion(4, "constant conversion arithmetic")
def test_c04_constants_roundtrip():
    for c, a in [(1.0, 1.0), (3.5, 0.25), (1e-3, 7.0)]:
        assert constants_roundtrip(c, a, "tail_to_integral") == (2 * c, a / 2)
        assert constants_roundtrip(c, a, "integral_to_tail") == (c, a)


@criterion(5, "covering volume ratios")
def test_c05_covering(note):
    t0 = time.perf_counter()
    reports = [covering_ratio(k) for k in range(7, 31)]
    first = covering_ratio(1)
    elapsed = time.perf_counter() - t0
    note(f"k=1 ratio {first.ratio:.2f} vs {first.bound:.0f}")
    assert all(r.satisfied for r in reports)
    assert not first.satisfied and first.ratio == pytest.approx(COVERING_K1, rel=1e-10)
    assert elapsed < 1.0


@criterion(6, "Hoelder modulus of max-log")
@pytest.mark.parametrize("k", [1, 2])
def test_c06_holder(k, note):
    t0 = time.perf_counter()
    est = holder_modulus_estimate(maxlog_potential(k), 0.99, 1_000_000, np.random.default_rng(60 + k))
    elapsed = time.perf_counter() - t0
    note(f"P{k}: {est:.4f} <= {k * math.sqrt(math.pi):.4f}")
    assert est <= k * math.sqrt(math.pi) and elapsed < 60.0


@criterion(7, "root-finder robustness")
@pytest.mark.parametrize("n", [32, 128])
def test_c07_roots(n, note):
    rng = np.random.default_rng(70 + n)
    flagged, worst = 0, 0.0
    for _ in range(10_000):
        Z = roots(random_section(rng, n), strict=False)
        flagged += Z.flagged
        worst = max(worst, Z.residual)
    note(f"n={n}: flagged {flagged}, residual {worst:.1e}")
    assert flagged / 10_000 < 1e-3 and worst < 1e-8


@criterion(8, "equidistribution rate window")
def test_c08_rate(uniform_run, note):
    res, elapsed = uniform_run
    fit = fit_rate(res.medians())
    note(f"slope {fit.slope:.3f}, r2 {fit.r2:.3f}, {elapsed:.0f}s")
    assert fit.strictly_decreasing
    assert fit.r2 > 0.9
    assert elapsed < 300.0
    assert RATE_WINDOW[0] <= fit.slope <= RATE_WINDOW[1]


@criterion(9, "exceptional-set decay")
def test_c09_exceptional(uniform_run, note):
    res, _ = uniform_run
    d = res.discrepancies()
    rep = estimate_exceptional({8: d[8], 128: d[128]})
    first, last = rep.rows
    note(f"fraction {first.fraction:.3f} -> {last.fraction:.3f}")
    assert rep.calibrated
    assert last.fraction < first.fraction and last.ci_high < first.ci_low


@criterion(10, "tiny perturbation matches uniform")
def test_c10_tiny_perturbation(tmp_path, note):
    eps, n = 1e-8, 16
    pert = run_equidistribution(
        ExperimentConfig(degrees=(n,), samples=200, measure="perturbed", epsilon=eps, out=str(tmp_path / "p"))
    )
    unif = run_equidistribution(ExperimentConfig(degrees=(n,), samples=200, seed=1, out=str(tmp_path / "u")))
    p = ks_2samp(pert.discrepancies()[n], unif.discrepancies()[n]).pvalue
    u = perturbing_potential("softmax:0.1", n, eps)
    rng = np.random.default_rng(10)
    dirs = [np.eye(n)[0], np.ones(n) / math.sqrt(n), normalize(rng.standard_normal(n) + 1j * rng.standard_normal(n))]
    dirs.append(np.exp(1j * np.pi * np.arange(n) / 3) / math.sqrt(n))
    t = np.linspace(0.0, 3.0, 25)
    w = np.concatenate([t[:, None] * d[None, :] for d in dirs])
    dev = float(np.max(np.abs(ma_density(u, from_chart(w)) - 1)))
    note(f"KS p {p:.3f}, density dev {dev:.1e}")
    assert p > 0.01 and dev < 1e-6


@criterion(11, "exaggerated perturbation sanity")
def test_c11_exaggerated_perturbation(tmp_path, note):
    cfg = ExperimentConfig(degrees=(8, 16, 32), samples=100, measure="perturbed", epsilon=0.5, out=str(tmp_path))
    res = run_equidistribution(cfg)
    diag = res.summary["diagnostics"]
    for n in cfg.degrees:
        dg = diag[str(n)]
        note(
            f"n={n} mass {dg['mass_importance_mean']:.3f}+-{dg['mass_importance_std_error']:.3f}"
            f" (uniform draws {dg['mass_uniform_mean']:.3f}+-{dg['mass_uniform_std_error']:.3f})"
        )
        assert dg["regime"] == "exploratory"
    med = res.medians()
    assert all(diag[str(n)]["mass_ok"] for n in cfg.degrees)
    assert med[8] > med[16] > med[32]


@criterion(12, "determinism across worker counts")
def test_c12_determinism(tmp_path):
    configs = [
        ExperimentConfig(degrees=(8, 16), samples=40, seed=12),
        ExperimentConfig(degrees=(4,), samples=8, measure="perturbed", epsilon=0.3, burn_in=100, mass_samples=2000, seed=12),
    ]
    for i, cfg in enumerate(configs):
        blobs = []
        for workers in (1, 8):
            out = tmp_path / f"{i}-{workers}"
            run_equidistribution(cfg.replace(workers=workers, out=str(out)))
            blobs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        assert blobs[0] == blobs[1]
