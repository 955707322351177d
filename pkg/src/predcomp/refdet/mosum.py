"""Moving-sum monitoring of season-trend residuals (simplified).

A linear trend plus optional harmonic terms,

    y_t = a1 + a2*t + sum_j [ g_j * sin(2*pi*j*t/period + s_j) ] + e_t,

is fitted by least squares on a stable history window (each sinusoid is
expanded into a sin/cos pair, keeping the fit linear).  Monitoring then
tracks the moving sum of out-of-sample residuals over a bandwidth of
ceil(h_band * L) points, L being the history length, and alarms when

    |MOSUM_t| > c(level) * sd * sqrt(L) * (1 + steps_into_monitoring / L).

The critical constants c(level) come from a Monte-Carlo table computed
once under the null (see tools/calibrate_mosum_boundary.py) and shipped
with the package; lookups match the level exactly and take the nearest
tabulated bandwidth fraction.

History protocol: at the initial segment the history is the
``monitor_from`` leading points, of which the stable tail of length
clamp(ceil(hist_fact * monitor_from), min_hist, cap * min_hist) is fitted.
After each detection the model refits once ``min_hist`` fresh points have
accumulated, then monitoring resumes.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from ..series import Detection, LabeledSeries

_TABLE = None


def boundary_constant(h_band: float, level: float) -> float:
    """c(level) for the scaled boundary; exact level, nearest h."""
    global _TABLE
    if _TABLE is None:
        with resources.files("predcomp.refdet").joinpath("mosum_boundary.json").open() as fh:
            _TABLE = json.load(fh)
    levels = _TABLE["levels"]
    if level not in levels:
        raise ValueError(f"level {level} not calibrated; available: {levels}")
    hs = _TABLE["h_bands"]
    jh = min(range(len(hs)), key=lambda j: abs(hs[j] - h_band))
    return _TABLE["c"][jh][levels.index(level)]


def _design(t: np.ndarray, harmonics: int, period: float) -> np.ndarray:
    cols = [np.ones_like(t), t]
    for j in range(1, harmonics + 1):
        w = 2.0 * np.pi * j * t / period
        cols.append(np.sin(w))
        cols.append(np.cos(w))
    return np.column_stack(cols)


def mosum_detect(series, min_hist: int = 100, hist_fact: float = 0.5,
                 h_band: float = 0.25, level: float = 0.05,
                 harmonics: int = 0, period: float = 0.0,
                 monitor_from: int | None = None, cap_factor: int = 4,
                 keep_trace: bool = False):
    """Returns (detections, trace rows (index, mosum, bound))."""
    if not 0 < hist_fact <= 1:
        raise ValueError("hist_fact must be in (0, 1]")
    if not 0 < h_band <= 1:
        raise ValueError("h_band must be in (0, 1]")
    if harmonics > 0 and period <= 0:
        raise ValueError("harmonic terms need a positive period")
    values = series.values if isinstance(series, LabeledSeries) else np.asarray(series, dtype=float)
    n = len(values)
    if monitor_from is None:
        monitor_from = 2 * min_hist
    c = boundary_constant(h_band, level)
    detections = []
    trace = []
    seg_start = 0
    mon_start = min(monitor_from, n)
    while mon_start < n:
        avail = mon_start - seg_start
        if avail < min_hist:
            break
        length = int(min(max(min_hist, math.ceil(hist_fact * avail)),
                         cap_factor * min_hist, avail))
        hist_lo = mon_start - length
        t_hist = np.arange(hist_lo, mon_start, dtype=float)
        X = _design(t_hist, harmonics, period)
        beta, *_ = np.linalg.lstsq(X, values[hist_lo:mon_start], rcond=None)
        resid_hist = values[hist_lo:mon_start] - X @ beta
        dof = max(length - X.shape[1], 1)
        sd = float(np.sqrt(np.dot(resid_hist, resid_hist) / dof))
        band = max(int(math.ceil(h_band * length)), 1)
        t_mon = np.arange(mon_start, n, dtype=float)
        resid_mon = values[mon_start:] - _design(t_mon, harmonics, period) @ beta
        resid = np.concatenate((resid_hist, resid_mon))
        csum = np.concatenate(([0.0], np.cumsum(resid)))
        alarm_at = -1
        for j in range(len(t_mon)):
            pos = length + j  # position in the residual vector
            lo = max(pos + 1 - band, 0)
            mosum = csum[pos + 1] - csum[lo]
            bound = c * sd * np.sqrt(length) * (1.0 + (j + 1) / length)
            idx = mon_start + j
            if keep_trace:
                trace.append((idx, float(mosum), float(bound)))
            if abs(mosum) > bound:
                detections.append(Detection(detect_time=idx, located_time=None,
                                            detector="mosum", stat_value=float(mosum)))
                alarm_at = idx
                break
        if alarm_at < 0:
            break
        seg_start = alarm_at + 1
        mon_start = seg_start + min_hist
    return detections, trace
