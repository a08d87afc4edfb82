"""Summary statistics over logged training curves and evaluation runs."""

from __future__ import annotations

import numpy as np

SMOOTH_WINDOW = 1000
PLATEAU_FRACTION = 0.1
THRESHOLD_FACTOR = 1.5


def smooth(values, window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Trailing moving average; the first ``window - 1`` points average what exists."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v
    c = np.cumsum(np.insert(v, 0, 0.0))
    idx = np.arange(1, v.size + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def steps_to_threshold(steps, losses, window: int = SMOOTH_WINDOW,
                       plateau_fraction: float = PLATEAU_FRACTION,
                       factor: float = THRESHOLD_FACTOR) -> float:
    """First step at which the smoothed loss drops below ``factor`` times its final plateau.

    The plateau is the mean smoothed loss over the last ``plateau_fraction``
    of the record. Returns ``nan`` for an empty record.
    """
    steps = np.asarray(steps, dtype=float)
    s = smooth(losses, window)
    if s.size == 0:
        return float("nan")
    tail = max(1, int(round(plateau_fraction * s.size)))
    plateau = float(np.mean(s[-tail:]))
    below = np.flatnonzero(s < factor * plateau)
    return float(steps[below[0]]) if below.size else float(steps[-1])


def mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def trend_slope(values) -> float:
    """Least-squares slope of ``values`` against their index."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(np.polyfit(np.arange(v.size), v, 1)[0])
