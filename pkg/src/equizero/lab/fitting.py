"""Rate fitting and exceptional-fraction estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

RATE_MODEL = "log-log linear on median discrepancy vs n"


@dataclass(frozen=True)
class RateFitResult:
    slope: float
    intercept: float
    r2: float
    medians: dict[int, float]
    C: float
    model: str = RATE_MODEL

    @property
    def strictly_decreasing(self) -> bool:
        m = [self.medians[n] for n in sorted(self.medians)]
        return all(a > b for a, b in zip(m, m[1:]))

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "C": self.C,
            "model": self.model,
            "strictly_decreasing": self.strictly_decreasing,
            "medians": {str(n): v for n, v in sorted(self.medians.items())},
        }


def fit_rate(medians: Mapping[int, float]) -> RateFitResult:
    """Least squares of log median on log n, plus the one-parameter fit median ~ C log n / n."""
    ns = sorted(int(n) for n in medians)
    if len(ns) < 4:
        raise ValueError("rate fit needs at least 4 degrees")
    y = np.array([medians[n] for n in ns], dtype=float)
    if not np.all(y > 0):
        raise ValueError("medians must be positive for a log-log fit")
    n = np.array(ns, dtype=float)
    lr = stats.linregress(np.log(n), np.log(y))
    x = np.log(n) / n
    C = float(np.dot(x, y) / np.dot(x, x))
    return RateFitResult(
        slope=float(lr.slope),
        intercept=float(lr.intercept),
        r2=float(lr.rvalue**2),
        medians={k: float(v) for k, v in zip(ns, y)},
        C=C,
    )


@dataclass(frozen=True)
class ExceedanceRow:
    n: int
    threshold: float
    exceed: int
    count: int
    ci_low: float
    ci_high: float

    @property
    def fraction(self) -> float:
        return self.exceed / self.count if self.count else float("nan")


@dataclass(frozen=True)
class ExceptionalReport:
    A: float
    calibrated: bool
    rows: tuple[ExceedanceRow, ...]

    @property
    def verdict(self) -> str:
        first, last = self.rows[0], self.rows[-1]
        if last.fraction < first.fraction and last.ci_high < first.ci_low:
            return "decaying"
        return "not decaying"

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "calibrated": self.calibrated,
            "verdict": self.verdict,
            "rows": [
                {"n": r.n, "threshold": r.threshold, "exceed": r.exceed, "count": r.count,
                 "fraction": r.fraction, "ci95": [r.ci_low, r.ci_high]}
                for r in self.rows
            ],
        }


def calibrate_A(discrepancies: Sequence[float], n: int) -> float:
    """A with A log n / n equal to the median discrepancy, so at most half exceed."""
    if n < 2:
        raise ValueError("calibration degree must be >= 2")
    return float(np.median(discrepancies)) * n / math.log(n)


def estimate_exceptional(discrepancies: Mapping[int, Sequence[float]], A: Optional[float] = None) -> ExceptionalReport:
    """Per-degree fraction of samples with discrepancy > A log n / n, with Wilson 95% CIs.

    With ``A=None`` the constant is calibrated at the smallest degree and then
    held fixed.
    """
    ns = sorted(int(n) for n in discrepancies)
    if len(ns) < 2:
        raise ValueError("need at least two degrees")
    calibrated = A is None
    if calibrated:
        A = calibrate_A(discrepancies[ns[0]], ns[0])
    if not A > 0:
        raise ValueError("A must be positive")
    rows = []
    for n in ns:
        d = np.asarray(discrepancies[n], dtype=float)
        thr = A * math.log(n) / n
        k = int(np.count_nonzero(d > thr))
        ci = stats.binomtest(k, len(d)).proportion_ci(confidence_level=0.95, method="wilson")
        rows.append(ExceedanceRow(n, thr, k, len(d), float(ci.low), float(ci.high)))
    return ExceptionalReport(A=float(A), calibrated=calibrated, rows=tuple(rows))
