"""Run metrics: noise reduction in dB, convergence curves, crossing times."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .signals import SignalBuffer

DB_CAP = 120.0
DB_FLOOR = -120.0


@dataclass
class MetricSeries:
    """A named sequence of metric values.

    ``undefined`` lists indices where the defining ratio was ill-posed;
    those entries hold the saturation cap rather than a silent zero.
    """

    name: str
    values: np.ndarray
    window: int = 1
    stride: int = 1  # samples covered by one entry
    undefined: list[int] = field(default_factory=list)
    overall: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)


def _reduction_db(e_power: float, d_power: float) -> tuple[float, bool]:
    """-10 log10 of the error-to-primary power ratio, saturated at +/-DB_CAP."""
    if d_power == 0.0:
        return DB_CAP, True
    if e_power == 0.0:
        return DB_CAP, True
    r = -10.0 * np.log10(e_power / d_power)
    return float(np.clip(r, -DB_CAP, DB_CAP)), False


def noise_reduction_db(e: SignalBuffer, d: SignalBuffer, window: int) -> MetricSeries:
    """Noise reduction R over non-overlapping windows, plus a whole-run scalar.

    Positive R means the residual is quieter than the primary noise.
    """
    if len(e) != len(d):
        raise ValidationError(f"e and d must have equal length ({len(e)} vs {len(d)})")
    if not 1 <= window <= len(e):
        raise ValidationError(f"window must lie in [1, {len(e)}], got {window}")

    n_windows = len(e) // window
    values = np.empty(n_windows)
    undefined = []
    for i in range(n_windows):
        sl = slice(i * window, (i + 1) * window)
        values[i], bad = _reduction_db(float(np.sum(e.samples[sl] ** 2)), float(np.sum(d.samples[sl] ** 2)))
        if bad:
            undefined.append(i)
    overall, _ = _reduction_db(float(np.sum(e.samples**2)), float(np.sum(d.samples**2)))
    return MetricSeries(
        "noise_reduction_db", values, window=window, stride=window, undefined=undefined, overall=overall
    )


def convergence_curve(e: SignalBuffer, smoothing: int) -> MetricSeries:
    """20 log10 of the trailing-RMS error envelope, one value per sample."""
    if smoothing < 1:
        raise ValidationError(f"smoothing must be >= 1, got {smoothing}")
    sq = e.samples**2
    csum = np.concatenate(([0.0], np.cumsum(sq)))
    n = len(e)
    idx = np.arange(1, n + 1)
    start = np.maximum(0, idx - smoothing)
    counts = idx - start
    rms = np.sqrt((csum[idx] - csum[start]) / counts)
    values = np.full(n, DB_FLOOR)
    nz = rms > 0
    values[nz] = np.maximum(20.0 * np.log10(rms[nz]), DB_FLOOR)
    undefined = list(np.flatnonzero(~nz))
    return MetricSeries("convergence_db", values, window=smoothing, undefined=undefined)


def iterations_to_threshold(series: MetricSeries, target: float) -> int | None:
    """First index where the series reaches ``target`` and stays there.

    "Stays" means every value from the crossing through one further
    window's worth of entries (or to the end) remains at or above the
    target. Returns None if the series never settles above it.
    """
    values = series.values
    n = values.size
    hold = max(1, series.window // max(1, series.stride))
    for i in range(n):
        if values[i] >= target and np.all(values[i : min(n, i + hold)] >= target):
            return i
    return None
