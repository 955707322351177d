"""Bayesian online change point detection, Gaussian model.

Run-length recursion with a constant hazard H: at every step each run
either grows (weight 1-H) or breaks (weight H, pooled into run length
zero).  Observations follow a Normal with unknown mean and variance under
a Normal-Inverse-Gamma prior, so the one-step predictive is Student-t.
All bookkeeping is in log space; the posterior over run lengths is
normalized at every step and the per-step normalizers accumulate into the
log evidence.

Run length convention: r = 0 means the current observation opens a new
segment, matching P(r_t > r_{t-1}) = 1 - H for the growth move.  The
detector alarms when the posterior mass on run lengths <= r_min exceeds
the threshold; it restarts from the prior after each alarm, and alarms
are suppressed for the first r_min + 1 steps of each segment where short
runs hold all the mass by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from ..series import Detection, LabeledSeries


@dataclass(frozen=True)
class NigPrior:
    mu0: float = 0.0
    kappa0: float = 1.0
    alpha0: float = 1.0
    beta0: float = 1.0

    def __post_init__(self) -> None:
        if self.kappa0 <= 0 or self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError("kappa0, alpha0, beta0 must be positive")


def student_t_logpdf(x, df, loc, scale2):
    """log density of the location-scale Student-t (scale2 = squared scale)."""
    z2 = (x - loc) ** 2 / scale2
    return (gammaln((df + 1) / 2) - gammaln(df / 2)
            - 0.5 * np.log(df * np.pi * scale2)
            - (df + 1) / 2 * np.log1p(z2 / df))


class BocpdState:
    """Posterior over run lengths with per-run NIG sufficient statistics."""

    def __init__(self, prior: NigPrior):
        self.prior = prior
        self.log_post = np.array([0.0])  # starts at r = 0 before any data
        self.mu = np.array([prior.mu0])
        self.kappa = np.array([prior.kappa0])
        self.alpha = np.array([prior.alpha0])
        self.beta = np.array([prior.beta0])
        self.steps = 0
        self.log_evidence = 0.0

    def predictive_logpdf(self, x: float) -> np.ndarray:
        df = 2.0 * self.alpha
        scale2 = self.beta * (self.kappa + 1.0) / (self.alpha * self.kappa)
        return student_t_logpdf(x, df, self.mu, scale2)

    def step(self, x: float, hazard: float) -> None:
        pred = self.predictive_logpdf(x)
        if self.steps == 0:
            # the first observation opens the first run; no transition yet
            log_grow = pred + self.log_post
            log_cp = np.array([-np.inf])
        else:
            joint = self.log_post + pred
            log_grow = joint + np.log1p(-hazard) if hazard < 1.0 else np.full_like(joint, -np.inf)
            # a break makes x the first observation of a fresh segment, so
            # its likelihood is the prior predictive
            p = self.prior
            prior_pred = student_t_logpdf(x, 2.0 * p.alpha0, p.mu0,
                                          p.beta0 * (p.kappa0 + 1.0) / (p.alpha0 * p.kappa0))
            log_cp = np.array([logsumexp(self.log_post) + np.log(hazard) + prior_pred]) \
                if hazard > 0 else np.array([-np.inf])
        new_log_post = np.concatenate((log_cp, log_grow)) if self.steps else log_grow
        norm = logsumexp(new_log_post)
        self.log_evidence += norm
        self.log_post = new_log_post - norm
        # r = 0 entry restarts from the prior, grown entries absorb x
        p = self.prior
        mu_new = (self.kappa * self.mu + x) / (self.kappa + 1.0)
        beta_new = self.beta + self.kappa * (x - self.mu) ** 2 / (2.0 * (self.kappa + 1.0))
        if self.steps == 0:
            self.mu, self.kappa = mu_new, self.kappa + 1.0
            self.alpha, self.beta = self.alpha + 0.5, beta_new
        else:
            self.mu = np.concatenate(([p.mu0 * p.kappa0 / (p.kappa0 + 1) + x / (p.kappa0 + 1)], mu_new))
            self.kappa = np.concatenate(([p.kappa0 + 1.0], self.kappa + 1.0))
            self.alpha = np.concatenate(([p.alpha0 + 0.5], self.alpha + 0.5))
            self.beta = np.concatenate(
                ([p.beta0 + p.kappa0 * (x - p.mu0) ** 2 / (2.0 * (p.kappa0 + 1.0))], beta_new))
        self.steps += 1

    def run_length_posterior(self) -> np.ndarray:
        """P(r_t = r), r = 0..steps-1; sums to one."""
        return np.exp(self.log_post)

    def map_run_length(self) -> int:
        return int(np.argmax(self.log_post))


def bocpd_detect(series, hazard: float, prior: NigPrior | None = None,
                 r_min: int = 5, threshold: float = 0.5,
                 keep_posterior: bool = False):
    """Detections plus per-step diagnostics.

    Returns (detections, info) where info holds the cumulative log
    evidence per segment and, when requested, the short-run probability
    path.  ``located_time`` of a detection is the start of the MAP run.
    """
    if not 0.0 < hazard <= 1.0:
        raise ValueError("hazard must be in (0, 1]")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    prior = prior or NigPrior()
    values = series.values if isinstance(series, LabeledSeries) else np.asarray(series, dtype=float)
    detections = []
    info = {"segment_log_evidence": [], "short_run_prob": []}
    state = BocpdState(prior)
    seg_start = 0
    for i, x in enumerate(values):
        state.step(float(x), hazard)
        post = state.run_length_posterior()
        p_short = float(post[:r_min + 1].sum())
        if keep_posterior:
            info["short_run_prob"].append((i, p_short))
        if state.steps <= r_min + 1:
            continue  # all mass is on short runs this early, by construction
        if p_short > threshold:
            located = i - state.map_run_length()
            detections.append(Detection(detect_time=i, located_time=max(located, seg_start),
                                        detector="bocpd", stat_value=p_short))
            info["segment_log_evidence"].append((seg_start, i, state.log_evidence))
            state = BocpdState(prior)
            seg_start = i + 1
    info["segment_log_evidence"].append((seg_start, len(values) - 1, state.log_evidence))
    return detections, info
