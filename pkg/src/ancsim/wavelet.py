"""Discrete wavelet transform and hard/soft/variable thresholding.

Orthogonal families (haar, db2, db4) with periodic boundary extension, so
the analysis/synthesis pair is perfectly reconstructing on power-of-two
blocks. Per-level operators are cached as small matrices, which keeps the
per-sample denoising loop of the controllers cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError

_SQRT3 = math.sqrt(3.0)
_SQRT2 = math.sqrt(2.0)

# Orthonormal lowpass (scaling) filters; highpass follows by alternation.
FAMILIES = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db2": np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * _SQRT2),
    "db4": np.array(
        [
            0.23037781330885523,
            0.7148465705525415,
            0.6308807679295904,
            -0.02798376941698385,
            -0.18703481171888114,
            0.030841381835986965,
            0.032883011666982945,
            -0.010597401784997278,
        ]
    ),
}


@dataclass(frozen=True)
class WaveletSpec:
    """Transform configuration: family, decomposition depth, block length."""

    family: str = "haar"
    levels: int = 2
    block_length: int = 64

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown wavelet family {self.family!r}; available: {sorted(FAMILIES)}")
        n = self.block_length
        if n < 2 or n & (n - 1):
            raise ValidationError(f"block_length must be a power of two >= 2, got {n}")
        if not 1 <= self.levels <= int(math.log2(n)):
            raise ValidationError(
                f"levels must be in [1, log2(block_length)] = [1, {int(math.log2(n))}], got {self.levels}"
            )


@dataclass
class CoefficientSet:
    """Multi-level DWT coefficients: final approximation plus per-level details.

    ``details[0]`` is the finest level; lengths halve toward ``approximation``.
    """

    approximation: np.ndarray
    details: list[np.ndarray]

    def total_count(self) -> int:
        return self.approximation.size + sum(d.size for d in self.details)


@dataclass(frozen=True)
class ThresholdPolicy:
    """Thresholding rule: kind, base value, and error-driven adaptation."""

    kind: str = "soft"
    base_lambda: float = 0.45
    adaptation: str = "fixed"
    error_clamp: float = 0.95
    lambda_max: float | None = None

    def __post_init__(self):
        if self.kind not in ("hard", "soft"):
            raise ValidationError(f"threshold kind must be 'hard' or 'soft', got {self.kind!r}")
        if self.adaptation not in ("fixed", "variable"):
            raise ValidationError(f"adaptation must be 'fixed' or 'variable', got {self.adaptation!r}")
        if self.base_lambda < 0:
            raise ValidationError("base_lambda must be non-negative")
        if not 0 <= self.error_clamp < 1:
            raise ValidationError("error_clamp must lie in [0, 1)")
        if self.lambda_max is not None and self.lambda_max <= 0:
            raise ValidationError("lambda_max must be positive when given")

    def cap(self) -> float:
        if self.lambda_max is not None:
            return self.lambda_max
        return 10.0 * self.base_lambda if self.base_lambda > 0 else 0.0


@lru_cache(maxsize=32)
def _level_matrices(family: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Analysis matrices (A, D) for one level on a length-``n`` signal, periodized."""
    h = FAMILIES[family]
    g = ((-1) ** np.arange(h.size)) * h[::-1]
    half = n // 2
    A = np.zeros((half, n))
    D = np.zeros((half, n))
    for k in range(half):
        for m, (hm, gm) in enumerate(zip(h, g)):
            j = (2 * k + m) % n
            A[k, j] += hm
            D[k, j] += gm
    return A, D


def dwt(block, spec: WaveletSpec) -> CoefficientSet:
    """Multi-level periodized DWT of one block."""
    x = np.asarray(block, dtype=np.float64)
    if x.size != spec.block_length:
        raise ValidationError(f"block length {x.size} does not match spec.block_length {spec.block_length}")
    approx = x
    details: list[np.ndarray] = []
    for _ in range(spec.levels):
        A, D = _level_matrices(spec.family, approx.size)
        details.append(D @ approx)
        approx = A @ approx
    return CoefficientSet(approximation=approx, details=details)


def idwt(coeffs: CoefficientSet, spec: WaveletSpec) -> np.ndarray:
    """Inverse of :func:`dwt`; exact reconstruction for untouched coefficients."""
    expected = spec.block_length >> spec.levels
    if coeffs.approximation.size != expected or len(coeffs.details) != spec.levels:
        raise ValidationError(
            f"coefficient shape does not match spec: approximation {coeffs.approximation.size} "
            f"(expected {expected}), {len(coeffs.details)} detail levels (expected {spec.levels})"
        )
    approx = coeffs.approximation
    for level in range(spec.levels - 1, -1, -1):
        d = coeffs.details[level]
        if d.size != approx.size:
            raise ValidationError(
                f"detail level {level} has {d.size} coefficients, expected {approx.size}"
            )
        A, D = _level_matrices(spec.family, 2 * approx.size)
        approx = A.T @ approx + D.T @ d
    return approx


def threshold_hard(y, lam):
    """Zero everything with |y| <= lam, pass the rest unchanged."""
    if np.any(np.asarray(lam) < 0):
        raise ValidationError("threshold must be non-negative")
    y_arr = np.asarray(y, dtype=np.float64)
    out = np.where(np.abs(y_arr) <= lam, 0.0, y_arr)
    return float(out) if np.isscalar(y) else out


def threshold_soft(y, lam):
    """Shrink toward zero by lam: sign(y) * (|y| - lam) above the threshold, else 0."""
    if np.any(np.asarray(lam) < 0):
        raise ValidationError("threshold must be non-negative")
    y_arr = np.asarray(y, dtype=np.float64)
    out = np.sign(y_arr) * np.maximum(np.abs(y_arr) - lam, 0.0)
    return float(out) if np.isscalar(y) else out


def apply_threshold(y, lam, kind: str):
    return threshold_hard(y, lam) if kind == "hard" else threshold_soft(y, lam)


def effective_lambda(policy: ThresholdPolicy, e_n: float) -> float:
    """Threshold in effect for the current sample.

    Fixed adaptation returns the base value. Variable adaptation scales it
    by 1 / (1 - |e|), with |e| clamped below 1 and the result capped.
    """
    if policy.adaptation == "fixed":
        return policy.base_lambda
    mag = min(abs(e_n), policy.error_clamp)
    return min(policy.base_lambda / (1.0 - mag), policy.cap())


def denoise_with_lambda(block, spec: WaveletSpec, lam: float, kind: str = "soft") -> np.ndarray:
    """DWT -> threshold detail coefficients only -> inverse DWT, at a given threshold."""
    coeffs = dwt(block, spec)
    coeffs.details = [apply_threshold(d, lam, kind) for d in coeffs.details]
    return idwt(coeffs, spec)


def denoise_block(block, spec: WaveletSpec, policy: ThresholdPolicy, e_n: float = 0.0) -> np.ndarray:
    """Denoise one block with the policy's effective threshold at error ``e_n``.

    The approximation band is never touched; only detail coefficients are
    shrunk.
    """
    return denoise_with_lambda(block, spec, effective_lambda(policy, e_n), policy.kind)
