"""Equidistribution runs and the moderate, covering and Hoelder suites."""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from ..geometry import METRIC_SCALE, covering_ratio
from ..measures import (
    ChainParams,
    density_mass_check,
    mass_importance_check,
    mh_sample_perturbed,
    prop211_epsilon_threshold,
    prop211_potential,
    run_chains,
    toric_softmax_sampler,
    tune_sigma,
    verify_prop_2_11,
    verify_prop_2_2,
)
from ..potentials import (
    holder_modulus_estimate,
    maxlog_potential,
    parse_potential,
    scaled_potential,
    theorem11_c_threshold,
)
from ..sections import Section, SectionSpace, random_section
from ..zeros import DiscrepancyRecord, default_battery, discrepancy
from .config import ExperimentConfig

SCHEMA_VERSION = 1
SAMPLE_STREAM = 0
DIAGNOSTIC_STREAM = 1
# Hoelder exponent used to place epsilon relative to the proven range.
REGIME_RHO = 0.99


def sample_rng(seed: int, n: int, sample_id: int) -> np.random.Generator:
    """Counter-based stream for one section: independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([seed, SAMPLE_STREAM, n, sample_id]))


def diagnostic_rng(seed: int, n: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, DIAGNOSTIC_STREAM, n]))


@lru_cache(maxsize=None)
def perturbing_potential(label: str, n: int, epsilon: float):
    """u = epsilon * potential on the projectivized section space P^n."""
    return scaled_potential(epsilon, parse_potential(label, n))


def exact_sampler(label: str, n: int, epsilon: float):
    """Exact sampler of the perturbed measure when the potential is a plain softmax."""
    kind, _, arg = label.partition(":")
    if kind != "softmax" or not 0 <= epsilon <= 1:
        return None
    return toric_softmax_sampler(n, epsilon, float(arg))


def _battery(labels: tuple[str, ...]):
    by_label = {psi.label: psi for psi in default_battery()}
    return tuple(by_label[b] for b in labels)


@dataclass(frozen=True)
class _Task:
    seed: int
    n: int
    sample_id: int
    battery: tuple[str, ...]
    measure: str
    potential: str = ""
    epsilon: float = 0.0
    chain: Optional[ChainParams] = None


def _draw_section(task: _Task, rng: np.random.Generator) -> tuple[Section, float]:
    if task.measure == "uniform":
        return random_section(rng, task.n), float("nan")
    u = perturbing_potential(task.potential, task.n, task.epsilon)
    res = run_chains(u, 1, task.chain, rng)
    return Section(SectionSpace(task.n), res.states[0]), res.acceptance


def _run_task(task: _Task) -> tuple[DiscrepancyRecord, float]:
    rng = sample_rng(task.seed, task.n, task.sample_id)
    s, acceptance = _draw_section(task, rng)
    rec = discrepancy(s, _battery(task.battery), sample_id=task.sample_id, seed=task.seed)
    return rec, acceptance


def _init_worker():
    threadpool_limits(1)


def _map_tasks(tasks: list[_Task], workers: int) -> list[tuple[DiscrepancyRecord, float]]:
    if workers == 1:
        with threadpool_limits(1):
            return [_run_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker) as ex:
        return list(ex.map(_run_task, tasks, chunksize=chunk))


def _perturbed_diagnostics(cfg: ExperimentConfig, n: int) -> tuple[dict, ChainParams]:
    """Proposal tuning, pilot acceptance, total-mass check and regime for degree n."""
    u = perturbing_potential(cfg.potential, n, cfg.epsilon)
    rng = diagnostic_rng(cfg.seed, n)
    with threadpool_limits(1):
        sigma = tune_sigma(u, rng) if cfg.sigma == "auto" else float(cfg.sigma)
        params = ChainParams(burn_in=cfg.burn_in, steps=cfg.thin, sigma=sigma)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sampler = mh_sample_perturbed(u, n, params, rng)
        mass, mass_se = density_mass_check(u, cfg.mass_samples, rng)
        exact = exact_sampler(cfg.potential, n, cfg.epsilon)
        if exact is not None:
            is_mass, is_se = mass_importance_check(u, exact, cfg.mass_samples, rng)
    c = theorem11_c_threshold(REGIME_RHO, 1, 1)
    within = cfg.epsilon <= c ** (-float(n))
    diag = {
        "sigma": sigma,
        "pilot_acceptance": sampler.diagnostics["pilot_acceptance"],
        "acceptance_warning": bool(caught),
        "mass_uniform_mean": mass,
        "mass_uniform_std_error": mass_se,
        "mass_uniform_ok": bool(abs(mass - 1.0) <= 3.0 * mass_se),
        "regime": "within proven range" if within else "exploratory",
    }
    if exact is not None:
        diag["mass_importance_mean"] = is_mass
        diag["mass_importance_std_error"] = is_se
        diag["mass_ok"] = bool(abs(is_mass - 1.0) <= 3.0 * is_se)
    else:
        diag["mass_ok"] = diag["mass_uniform_ok"]
    return diag, params


def _quantile(x: np.ndarray, q: float) -> Optional[float]:
    return float(np.quantile(x, q)) if len(x) else None


def summarize(records: list[DiscrepancyRecord], degrees) -> dict:
    out = {}
    for n in degrees:
        recs = [r for r in records if r.n == n]
        good = np.array([r.discrepancy for r in recs if not r.flagged], dtype=float)
        out[str(n)] = {
            "count": len(recs),
            "flagged": sum(r.flagged for r in recs),
            "median": _quantile(good, 0.5),
            "mean": float(good.mean()) if len(good) else None,
            "p90": _quantile(good, 0.9),
        }
    return out


def csv_text(records: list[DiscrepancyRecord], battery: tuple[str, ...]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "sample_id", "stream"] + [f"pair_{b}" for b in battery] + ["discrepancy", "flagged", "residual"])
    for r in records:
        w.writerow(
            [r.n, r.sample_id, f"{r.seed}:{r.n}:{r.sample_id}"]
            + [repr(p) for p in r.pairings]
            + [repr(r.discrepancy), int(r.flagged), repr(r.residual)]
        )
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass(frozen=True)
class EquidistResult:
    records: tuple[DiscrepancyRecord, ...]
    summary: dict
    out_dir: Optional[Path]

    def discrepancies(self) -> dict[int, np.ndarray]:
        out: dict[int, list] = {}
        for r in self.records:
            out.setdefault(r.n, [])
            if not r.flagged:
                out[r.n].append(r.discrepancy)
        return {n: np.array(v) for n, v in out.items()}

    def medians(self) -> dict[int, float]:
        return {int(n): s["median"] for n, s in self.summary["degrees"].items()}


def run_equidistribution(cfg: ExperimentConfig, write: bool = True) -> EquidistResult:
    """Draw ``cfg.samples`` sections per degree, record discrepancies, write reports.

    Files written under ``cfg.out``: samples.csv (one row per section),
    summary.json (per-degree statistics and measure diagnostics) and
    medians.dat (two columns: n, median discrepancy).
    """
    diagnostics = {}
    tasks = []
    for n in cfg.degrees:
        chain = None
        if cfg.measure == "perturbed":
            diag, chain = _perturbed_diagnostics(cfg, n)
            diagnostics[str(n)] = diag
        tasks.extend(
            _Task(cfg.seed, n, i, cfg.battery, cfg.measure, cfg.potential, cfg.epsilon, chain)
            for i in range(cfg.samples)
        )
    results = _map_tasks(tasks, cfg.workers)
    records = [r for r, _ in results]
    if cfg.measure == "perturbed":
        for n in cfg.degrees:
            acc = [a for (r, a) in results if r.n == n]
            diagnostics[str(n)]["chain_acceptance"] = float(np.mean(acc))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "measure": cfg.measure,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "battery": list(cfg.battery),
        "rows": len(records),
        "degrees": summarize(records, cfg.degrees),
    }
    if cfg.measure == "perturbed":
        summary["perturbation"] = {"potential": cfg.potential, "epsilon": cfg.epsilon}
        summary["diagnostics"] = diagnostics
    out_dir = None
    if write:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "samples.csv").write_text(csv_text(records, cfg.battery), encoding="utf-8")
        (out_dir / "summary.json").write_text(json_text(summary), encoding="utf-8")
        lines = [f"{n} {s['median']!r}" for n, s in ((n, summary["degrees"][str(n)]) for n in cfg.degrees)]
        (out_dir / "medians.dat").write_text("# n median_discrepancy\n" + "\n".join(lines) + "\n", encoding="utf-8")
    return EquidistResult(records=tuple(records), summary=summary, out_dir=out_dir)


# -- suites -------------------------------------------------------------------------


def _check_dict(c) -> dict:
    return {
        "k": c.k,
        "label": c.label,
        "alpha": c.alpha,
        "integral": c.integral,
        "std_error": c.std_error,
        "bound": c.bound,
        "ratio": c.ratio,
        "in_hypothesis": c.in_hypothesis,
        "holds": c.holds,
    }


def run_moderate_suite(cfg: ExperimentConfig) -> dict:
    """Moderateness of omega_FS^k and of a perturbed Monge-Ampere measure, per k."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    consts = cfg.constants
    base = verify_prop_2_2(cfg.moderate_ks, consts, cfg.moderate_samples, rng)
    perturbed = []
    for k in cfg.moderate_ks:
        eps = 0.5 * prop211_epsilon_threshold(k, cfg.moderate_rho, consts.beta0)
        u = prop211_potential(k, cfg.moderate_rho, eps, cfg.moderate_tau)
        rep = verify_prop_2_11(k, cfg.moderate_rho, u, eps, m=cfg.moderate_samples, rng=rng, constants=consts)
        perturbed.append({"k": k, "epsilon": eps, "passed": rep.passed, "max_ratio": rep.max_ratio,
                          "notes": list(rep.notes), "checks": [_check_dict(c) for c in rep.checks]})
    return {
        "suite": "moderate",
        "constants": {"alpha0": consts.alpha0, "c0": consts.c0, "beta0": consts.beta0, "c5": consts.c5},
        "fubini_study": {"passed": base.passed, "max_ratio": base.max_ratio,
                         "checks": [_check_dict(c) for c in base.checks]},
        "perturbed": perturbed,
        "passed": base.passed and all(p["passed"] for p in perturbed),
    }


def run_covering_suite(k_min: int = 7, k_max: int = 30) -> dict:
    reports = [covering_ratio(k) for k in range(k_min, k_max + 1)]
    return {
        "suite": "covering",
        "reports": [{"k": r.k, "ratio": r.ratio, "bound": r.bound, "satisfied": r.satisfied} for r in reports],
        "passed": all(r.satisfied for r in reports),
    }


def run_holder_suite(rho: float = 0.99, pairs: int = 1_000_000, dims=(1, 2), seed: int = 0) -> dict:
    """Sampled C^rho modulus of the max-log potential against sqrt(pi) k."""
    rows = []
    for k in dims:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 3, k]))
        est = holder_modulus_estimate(maxlog_potential(k), rho, pairs, rng)
        bound = k / METRIC_SCALE
        rows.append({"k": k, "estimate": est, "bound": bound, "satisfied": est <= bound})
    return {"suite": "holder", "rho": rho, "pairs": pairs, "reports": rows, "passed": all(r["satisfied"] for r in rows)}


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj), encoding="utf-8")
