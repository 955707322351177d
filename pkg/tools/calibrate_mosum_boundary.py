"""Monte-Carlo calibration of the moving-sum boundary constants.

Under the null (iid Gaussian noise around a linear trend) we fit the
trend on a history of length L, then monitor 4L further points with the
scaled moving-sum statistic

    |MOSUM_j| / (sd * sqrt(L) * (1 + (j + 1) / L)),

exactly as refdet/mosum.py computes it (band = ceil(h * L), moving sums
spanning back into in-sample residuals, sd with dof correction).  The
critical constant c(h, level) is the (1 - level) quantile of the run
maximum, so that the monitor crosses its boundary during the horizon
with probability `level` when nothing changed.

The statistic is self-normalized, so c depends on L only through the
discreteness of the band; L = 250 sits in the middle of the range the
detector clamps to.  Output goes to src/predcomp/refdet/mosum_boundary.json.

Run time: ~1 minute for 20000 replications.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

L = 250
HORIZON = 4 * L
REPS = 20000
CHUNK = 2000
H_BANDS = [0.25, 0.5, 1.0]
LEVELS = [0.01, 0.05, 0.10, 0.20]
SEED = 20240915


def run_maxima(rng: np.ndarray) -> dict[float, np.ndarray]:
    """Max scaled statistic per replication, one array per bandwidth."""
    t_hist = np.arange(L, dtype=float)
    X = np.column_stack([np.ones(L), t_hist])
    # hat matrix pieces shared across replications
    XtX_inv = np.linalg.inv(X.T @ X)
    proj = X @ XtX_inv @ X.T

    t_mon = np.arange(L, L + HORIZON, dtype=float)
    X_mon = np.column_stack([np.ones(HORIZON), t_mon])

    growth = 1.0 + (np.arange(HORIZON) + 1.0) / L  # boundary growth term
    maxima = {h: [] for h in H_BANDS}

    done = 0
    while done < REPS:
        m = min(CHUNK, REPS - done)
        y = rng.standard_normal((m, L + HORIZON))
        y_hist = y[:, :L]
        beta = y_hist @ X @ XtX_inv.T                      # (m, 2)
        resid_hist = y_hist - y_hist @ proj.T
        dof = L - 2
        sd = np.sqrt(np.einsum("ij,ij->i", resid_hist, resid_hist) / dof)
        resid_mon = y[:, L:] - beta @ X_mon.T
        resid = np.concatenate((resid_hist, resid_mon), axis=1)
        csum = np.concatenate((np.zeros((m, 1)), np.cumsum(resid, axis=1)), axis=1)
        for h in H_BANDS:
            band = max(int(math.ceil(h * L)), 1)
            pos = L + np.arange(HORIZON)
            lo = np.maximum(pos + 1 - band, 0)
            mosum = csum[:, pos + 1] - csum[:, lo]
            stat = np.abs(mosum) / (sd[:, None] * math.sqrt(L) * growth[None, :])
            maxima[h].append(stat.max(axis=1))
        done += m
        print(f"  {done}/{REPS}", file=sys.stderr)
    return {h: np.concatenate(v) for h, v in maxima.items()}


def main() -> None:
    rng = np.random.default_rng(SEED)
    maxima = run_maxima(rng)
    table = []
    for h in H_BANDS:
        row = [round(float(np.quantile(maxima[h], 1.0 - lv)), 4) for lv in LEVELS]
        table.append(row)
        print(f"h={h}: " + "  ".join(f"c({lv})={c}" for lv, c in zip(LEVELS, row)))
    out = {
        "h_bands": H_BANDS,
        "levels": LEVELS,
        "c": table,
        "calibration": {
            "history_len": L,
            "horizon": HORIZON,
            "replications": REPS,
            "seed": SEED,
            "model": "intercept + linear trend, iid standard normal noise",
        },
    }
    dest = Path(__file__).resolve().parents[1] / "src" / "predcomp" / "refdet" / "mosum_boundary.json"
    dest.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main()
