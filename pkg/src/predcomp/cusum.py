"""Decision-interval CUSUM with a change locator.

The upward chart tracks S_j = max(0, S_{j-1} + x_j - target_j - k) and
alarms when S_j exceeds the decision interval.  The located change point
is the step after the last time the statistic sat at zero.  A downward
variant (min form, allowance added) is provided for completeness but the
wear experiments only use the upward chart.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class CusumChart:
    """One-sided CUSUM chart consuming (observation, target) pairs.

    Args:
        threshold: decision interval, must be positive.
        allowance: slack k subtracted from (added to, downward) each
            deviation; default half of the unit step.
        direction: "up" or "down".
        start: index of the first observation the chart will see.  Time
            bookkeeping is what makes the locator meaningful: ``located()``
            returns the step after the last zero of the statistic, and an
            alarm on the very first step locates the change at ``start``.
    """

    threshold: float
    allowance: float = 0.5
    direction: str = "up"
    start: int = 0

    def __post_init__(self) -> None:
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.allowance < 0:
            raise ValueError("allowance must be non-negative")
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        self.value = 0.0
        self.time = self.start - 1
        self._last_zero = self.start - 1

    def step(self, x: float, target: float) -> bool:
        """Consume one observation against its target; True on alarm."""
        self.time += 1
        if self.direction == "up":
            self.value = max(0.0, self.value + x - target - self.allowance)
            if self.value == 0.0:
                self._last_zero = self.time
            return self.value > self.threshold
        self.value = min(0.0, self.value + x - target + self.allowance)
        if self.value == 0.0:
            self._last_zero = self.time
        return self.value < -self.threshold

    def located(self) -> int:
        """Estimated first out-of-control index (last zero + 1)."""
        return self._last_zero + 1

    def reset(self, at: int | None = None) -> None:
        """Zero the statistic; the locator restarts at ``at`` (default: next index)."""
        nxt = self.time + 1 if at is None else at
        self.value = 0.0
        self.time = nxt - 1
        self._last_zero = nxt - 1


def run_chart(values, targets, threshold: float, allowance: float = 0.5,
              direction: str = "up", start: int = 0):
    """Run a chart over aligned value/target arrays.

    Returns (detections, trajectory) where detections are (detect_index,
    located_index) pairs and trajectory is the list of S_j values.  The
    chart resets after each alarm and keeps going.
    """
    chart = CusumChart(threshold, allowance, direction, start=start)
    detections = []
    path = []
    for i, (x, tgt) in enumerate(zip(values, targets)):
        alarm = chart.step(float(x), float(tgt))
        path.append(chart.value)
        if alarm:
            detections.append((start + i, chart.located()))
            chart.reset()
    return detections, path
