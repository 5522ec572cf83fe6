"""Signal generation and WAV file I/O.

Everything a scenario needs to drive a simulation: deterministic tonal and
noise sources plus 16-bit / float32 PCM WAV reading and writing.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import ValidationError

SOURCE_KINDS = ("sinusoid", "multi-tone", "white-noise", "sinusoid-plus-noise", "file")

INT16_FULL_SCALE = 32768.0


@dataclass(frozen=True)
class SignalBuffer:
    """A finite sequence of samples with sample-rate metadata."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("SignalBuffer requires a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("SignalBuffer samples must be finite (no NaN/Inf)")
        if not self.sample_rate_hz > 0:
            raise ValidationError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class SourceSpec:
    """Declarative description of a signal source.

    ``frequency_hz`` and ``amplitude`` are per-component for tonal kinds;
    ``noise_variance`` applies to the Gaussian component; ``path`` is used
    only by the ``file`` kind.
    """

    kind: str
    frequency_hz: tuple[float, ...] = ()
    amplitude: tuple[float, ...] = ()
    noise_variance: float = 0.0
    seed: int = 0
    length_samples: int = 0
    path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "frequency_hz", tuple(float(f) for f in self.frequency_hz))
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))

    def validate(self, sample_rate_hz: float) -> None:
        if self.kind not in SOURCE_KINDS:
            raise ValidationError(f"unknown source kind {self.kind!r}; expected one of {SOURCE_KINDS}")
        if self.kind != "file" and self.length_samples <= 0:
            raise ValidationError(f"length_samples must be positive, got {self.length_samples}")
        if self.noise_variance < 0:
            raise ValidationError("noise_variance must be non-negative")
        tonal = self.kind in ("sinusoid", "multi-tone", "sinusoid-plus-noise")
        if tonal:
            if not self.frequency_hz:
                raise ValidationError(f"source kind {self.kind!r} needs at least one frequency")
            nyquist = sample_rate_hz / 2.0
            for f in self.frequency_hz:
                if not 0 < f < nyquist:
                    raise ValidationError(
                        f"tonal frequency {f} Hz must lie strictly between 0 and Nyquist ({nyquist} Hz)"
                    )
            if self.amplitude and len(self.amplitude) != len(self.frequency_hz):
                raise ValidationError("amplitude list must match frequency list length")
            for a in self.amplitudes():
                if a <= 0:
                    raise ValidationError("amplitudes must be positive")
        if self.kind == "file" and not self.path:
            raise ValidationError("file source needs a path")

    def amplitudes(self) -> tuple[float, ...]:
        if self.amplitude:
            return self.amplitude
        return tuple(1.0 for _ in self.frequency_hz)


def generate(spec: SourceSpec, sample_rate_hz: float) -> SignalBuffer:
    """Generate the signal described by ``spec``, deterministically in its seed."""
    spec.validate(sample_rate_hz)
    if spec.kind == "file":
        buf = load_wav(spec.path)
        if spec.length_samples:
            if len(buf) < spec.length_samples:
                raise ValidationError(
                    f"{spec.path}: file holds {len(buf)} samples, scenario needs {spec.length_samples}"
                )
            buf = SignalBuffer(buf.samples[: spec.length_samples], buf.sample_rate_hz)
        return buf

    n = spec.length_samples
    out = np.zeros(n)
    if spec.kind in ("sinusoid", "multi-tone", "sinusoid-plus-noise"):
        k = np.arange(n)
        for f, a in zip(spec.frequency_hz, spec.amplitudes()):
            out += a * np.sin(2.0 * np.pi * f * k / sample_rate_hz)
    if spec.kind in ("white-noise", "sinusoid-plus-noise") and spec.noise_variance > 0:
        rng = np.random.default_rng(spec.seed)
        out += rng.normal(0.0, np.sqrt(spec.noise_variance), n)
    return SignalBuffer(out, sample_rate_hz)


def load_wav(path) -> SignalBuffer:
    """Load a WAV file as a mono SignalBuffer normalized to [-1, 1].

    int16 data is divided by 32768; float32 is taken as-is. Multi-channel
    files contribute channel 0 only (with a warning).
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # noqa: BLE001 - scipy raises plain ValueError for bad RIFF
        raise ValidationError(f"{path}: not a readable WAV file ({exc})") from exc
    if data.size == 0:
        raise ValidationError(f"{path}: WAV file contains no audio data")
    if data.ndim > 1:
        warnings.warn(f"{path}: multi-channel WAV, taking channel 0", stacklevel=2)
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / INT16_FULL_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValidationError(
            f"{path}: unsupported WAV encoding {data.dtype}; expected int16 or float32 PCM"
        )
    return SignalBuffer(samples, float(rate))


def save_wav(buffer: SignalBuffer, path) -> int:
    """Write ``buffer`` as 16-bit PCM mono WAV. Returns the number of clipped samples."""
    clipped = int(np.count_nonzero(np.abs(buffer.samples) > 1.0))
    scaled = np.round(buffer.samples * INT16_FULL_SCALE)
    if clipped:
        warnings.warn(f"{path}: clipped {clipped} samples outside [-1, 1]", stacklevel=2)
    data = np.clip(scaled, -32768.0, 32767.0).astype(np.int16)
    try:
        wavfile.write(path, int(round(buffer.sample_rate_hz)), data)
    except OSError as exc:
        raise OSError(f"failed writing WAV to {path}: {exc}") from exc
    return clipped
