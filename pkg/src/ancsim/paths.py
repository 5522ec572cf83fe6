"""Acoustic plant modelling: FIR paths, delay lines, and offline path identification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DivergenceError, ValidationError
from .signals import SignalBuffer

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class FirFilter:
    """Immutable FIR filter given by its impulse response."""

    taps: np.ndarray
    label: str = ""

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=np.float64))
        object.__setattr__(self, "taps", taps)
        if taps.size == 0:
            raise ValidationError("FirFilter needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise ValidationError("FirFilter taps must be finite")

    def __len__(self):
        return self.taps.size

    def delay(self) -> int:
        """Index of the first nonzero tap (pure transport delay)."""
        nz = np.flatnonzero(self.taps)
        return int(nz[0]) if nz.size else self.taps.size


class DelayLine:
    """Most-recent-first sample window, zero-initialized.

    ``values[0]`` is the newest sample; a fresh line reads as all zeros.
    """

    __slots__ = ("capacity", "values")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValidationError(f"DelayLine capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.values = np.zeros(capacity)

    def push(self, x: float) -> None:
        self.values[1:] = self.values[:-1]
        self.values[0] = x

    def chronological(self) -> np.ndarray:
        """Oldest-first copy of the window."""
        return self.values[::-1].copy()


def filter_sample(f: FirFilter, line: DelayLine, x_n: float) -> float:
    """Push ``x_n`` into ``line`` and return the FIR output for this sample."""
    if line.capacity != len(f):
        raise ValidationError(
            f"delay line capacity {line.capacity} does not match tap count {len(f)}"
        )
    line.push(x_n)
    return float(np.dot(f.taps, line.values))


def filter_buffer(f: FirFilter, input: SignalBuffer) -> SignalBuffer:
    """Zero-state convolution of the whole buffer, same length as the input."""
    out = lfilter(f.taps, [1.0], input.samples)
    return SignalBuffer(out, input.sample_rate_hz)


def identify_secondary_path(
    true_s: FirFilter,
    model_order: int,
    excitation_length: int,
    step_size: float,
    seed: int,
) -> tuple[FirFilter, float]:
    """Offline LMS identification of a secondary path.

    Excites ``true_s`` with unit-variance white noise and adapts a
    ``model_order``-tap FIR model. Returns the model and the mean error
    power over the final 10% of the run.
    """
    if model_order < 1:
        raise ValidationError("model_order must be positive")
    if excitation_length < model_order:
        raise ValidationError("excitation_length must be at least model_order")
    if step_size <= 0:
        raise ValidationError("step_size must be positive")

    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, excitation_length)
    desired = lfilter(true_s.taps, [1.0], x)
    input_power = float(np.mean(x * x))

    w = np.zeros(model_order)
    window = np.zeros(model_order)
    err = np.zeros(excitation_length)
    for n in range(excitation_length):
        window[1:] = window[:-1]
        window[0] = x[n]
        e = desired[n] - np.dot(w, window)
        err[n] = e
        if not np.isfinite(e) or e * e > DIVERGENCE_FACTOR * input_power:
            raise DivergenceError(
                f"secondary-path identification diverged with step size {step_size}",
                iteration=n,
            )
        w += step_size * e * window

    tail = max(1, excitation_length // 10)
    final_error_power = float(np.mean(err[-tail:] ** 2))
    return FirFilter(w, label=f"identified({true_s.label or 's'})"), final_error_power


def load_coefficients(path, label: str = "") -> FirFilter:
    """Read a plain-text coefficient file: one tap per line, ``#`` comments allowed."""
    taps = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                taps.append(float(text))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: not a coefficient: {text!r}") from None
    if not taps:
        raise ValidationError(f"{path}: no coefficients found")
    return FirFilter(np.array(taps), label=label or str(path))


def _geometric_response(length: int, delay: int, gain: float, ratio: float) -> np.ndarray:
    taps = np.zeros(length)
    k = np.arange(length - delay)
    taps[delay:] = gain * ratio**k
    return taps


# Built-in plants for the bundled scenarios. The source paper reports no
# plant coefficients, so these are artifact-defined: short decaying FIR
# responses with the primary delay exceeding the secondary delay.
BUILTIN_FILTERS = {
    "duct-primary": lambda: FirFilter(
        _geometric_response(32, delay=8, gain=1.0, ratio=-0.55), label="duct-primary"
    ),
    "duct-secondary": lambda: FirFilter(
        _geometric_response(16, delay=4, gain=1.0, ratio=-0.5), label="duct-secondary"
    ),
    "identity": lambda: FirFilter(np.array([1.0]), label="identity"),
}


def builtin_filter(name: str) -> FirFilter:
    try:
        factory = BUILTIN_FILTERS[name]
    except KeyError:
        raise ValidationError(
            f"unknown built-in filter {name!r}; available: {sorted(BUILTIN_FILTERS)}"
        ) from None
    return factory()


def resolve_filter(ref: str, label: str = "") -> FirFilter:
    """Resolve ``builtin:<name>`` or a coefficient file path to a FirFilter."""
    if ref.startswith("builtin:"):
        f = builtin_filter(ref[len("builtin:"):])
        return FirFilter(f.taps, label=label or f.label)
    return load_coefficients(ref, label=label)
