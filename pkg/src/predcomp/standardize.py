"""Poisson standardization of monotone-rate count streams.

The rate is modelled as lam(t) = b * t^nu.  With 1-based times s and the
cumulative count L(t0, t) = sum of X_s for s in (t0, t], the exponent is
estimated as

    nu_hat = ln(L(t0, t)) / ln(t) - 1

and the slope b_hat by no-intercept least squares of X_s on U_s = s^nu_hat.
Scores are Z(s) = (X_s - lam_hat(s)) / sqrt(lam_hat(s)); for a Poisson
stream with that rate they are approximately standard.

Offline mode fits once on the whole series; online mode re-estimates the
pair (nu_hat, b_hat) at every step from the data seen so far, so the two
modes coincide at the final step.  Natural logarithms throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import LabeledSeries

#: lam_hat below this is treated as zero: the score is clamped to 0 and flagged.
LAM_FLOOR = 1e-9


class TrendNotEstimable(ValueError):
    """Raised when (nu_hat, b_hat) cannot be computed from the prefix."""


@dataclass(frozen=True)
class TrendFit:
    nu: float
    slope: float
    t0: int
    t: int

    def lam(self, s):
        """lam_hat(s) = slope * s^nu for 1-based times s."""
        return self.slope * np.asarray(s, dtype=float) ** self.nu


@dataclass
class StandardizeResult:
    scores: LabeledSeries
    fit: TrendFit | None
    mode: str
    #: indices where the score is a fallback (identity or clamped zero)
    flagged: list[int] = field(default_factory=list)


def estimate_trend(values, t0: int = 0, t: int | None = None) -> TrendFit:
    """Fit (nu_hat, b_hat) on the 1-based time range (t0, t].

    Raises TrendNotEstimable when t <= max(t0, 1), when the cumulative
    count is not positive, or when the regressor is degenerate.
    """
    values = np.asarray(values, dtype=float)
    if t is None:
        t = len(values)
    if t > len(values):
        raise ValueError("t beyond the end of the series")
    if t0 < 0:
        raise ValueError("t0 must be non-negative")
    if t <= t0 + 1 or t < 2:
        raise TrendNotEstimable(f"need at least two observations past t0, got (t0={t0}, t={t})")
    x = values[t0:t]
    cum = float(np.sum(x))
    if cum <= 0:
        raise TrendNotEstimable("cumulative count is not positive")
    nu = np.log(cum) / np.log(float(t)) - 1.0
    s = np.arange(t0 + 1, t + 1, dtype=float)
    u = s ** nu
    denom = float(np.dot(u, u))
    if denom <= 0 or not np.isfinite(denom):
        raise TrendNotEstimable("degenerate regressor")
    slope = float(np.dot(x, u)) / denom
    return TrendFit(float(nu), slope, t0, t)


def _score_one(x: float, lam: float, flags: list[int], idx: int) -> float:
    if not np.isfinite(lam) or lam < LAM_FLOOR:
        flags.append(idx)
        return 0.0
    return (x - lam) / np.sqrt(lam)


def standardize(series: LabeledSeries | np.ndarray, t0: int = 0,
                mode: str = "offline") -> StandardizeResult:
    """Standardized scores for a count series; labels are carried through.

    Indices where no trend is estimable keep the raw value (identity
    fallback) and are flagged; indices with lam_hat below the floor get a
    zero score and are flagged.
    """
    if mode not in ("offline", "online"):
        raise ValueError("mode must be 'offline' or 'online'")
    if isinstance(series, LabeledSeries):
        values, wrap = series.values, series
    else:
        values = np.asarray(series, dtype=float)
        wrap = LabeledSeries(values)
    n = len(values)
    flags: list[int] = []
    scores = np.empty(n)
    if mode == "offline":
        try:
            fit = estimate_trend(values, t0=t0, t=n)
        except TrendNotEstimable:
            flags.extend(range(n))
            return StandardizeResult(wrap.with_values(values.copy()), None, mode, flags)
        lam = fit.lam(np.arange(1, n + 1))
        for i in range(n):
            scores[i] = _score_one(values[i], lam[i], flags, i)
        return StandardizeResult(wrap.with_values(scores), fit, mode, flags)
    fit = None
    for i in range(n):
        s = i + 1
        try:
            fit = estimate_trend(values, t0=t0, t=s)
        except TrendNotEstimable:
            scores[i] = values[i]
            flags.append(i)
            continue
        scores[i] = _score_one(values[i], float(fit.lam(s)), flags, i)
    return StandardizeResult(wrap.with_values(scores), fit, mode, flags)


class OnlineStandardizer:
    """Streaming wrapper around the online mode: push one count, get one score.

    Re-estimates the trend from all data seen so far at each step (the
    estimate of nu changes every step, so the regression sums cannot be
    carried over exactly; the per-step cost is linear in the history).
    """

    def __init__(self, t0: int = 0):
        self.t0 = t0
        self._buf: list[float] = []
        self.fit: TrendFit | None = None
        self.flagged: list[int] = []

    def push(self, x: float) -> float:
        self._buf.append(float(x))
        i = len(self._buf) - 1
        try:
            self.fit = estimate_trend(np.asarray(self._buf), t0=self.t0, t=i + 1)
        except TrendNotEstimable:
            self.flagged.append(i)
            return float(x)
        return _score_one(float(x), float(self.fit.lam(i + 1)), self.flagged, i)
