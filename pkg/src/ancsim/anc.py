"""Adaptive controllers and the closed-loop simulation.

Implements the LMS baseline, classic FxLMS, and the modified FxLMS
variants that soft-threshold the secondary signal in the wavelet domain,
optionally with an error-driven variable threshold and step size.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConditioningError, DivergenceError, InfeasibleError, ValidationError
from .paths import DelayLine, FirFilter, filter_buffer, filter_sample
from .signals import SignalBuffer
from .wavelet import ThresholdPolicy, WaveletSpec, apply_threshold, denoise_with_lambda, effective_lambda

DIVERGENCE_FACTOR = 1e6
CONDITION_LIMIT = 1e12

CONTROLLER_NAMES = ("lms-direct", "fxlms", "fxlms-fixed-threshold", "fxlms-variable")


@dataclass(frozen=True)
class ControllerKind:
    """Controller family plus its feature flags.

    ``filter_reference`` distinguishes FxLMS (reference filtered through
    the secondary-path model) from the direct LMS baseline.
    """

    name: str
    filter_reference: bool = True
    use_wavelet_threshold: bool = False
    variable_threshold: bool = False
    variable_step: bool = False
    threshold_domain: str = "wavelet"

    def __post_init__(self):
        if self.threshold_domain not in ("wavelet", "sample"):
            raise ValidationError(f"threshold_domain must be 'wavelet' or 'sample', got {self.threshold_domain!r}")
        if self.name == "fxlms-variable" and not (self.variable_threshold and self.variable_step):
            raise ValidationError("fxlms-variable requires variable_threshold and variable_step")


def controller_kind(name: str, threshold_domain: str = "wavelet") -> ControllerKind:
    """Build the named preset controller kind."""
    presets = {
        "lms-direct": dict(filter_reference=False),
        "fxlms": dict(),
        "fxlms-fixed-threshold": dict(use_wavelet_threshold=True),
        "fxlms-variable": dict(use_wavelet_threshold=True, variable_threshold=True, variable_step=True),
    }
    if name not in presets:
        raise ValidationError(f"unknown controller kind {name!r}; expected one of {CONTROLLER_NAMES}")
    return ControllerKind(name=name, threshold_domain=threshold_domain, **presets[name])


@dataclass
class ControllerState:
    """Mutable per-run adaptation state.

    One instance per simulation run; never shared between runs.
    """

    w: np.ndarray
    mu_base: float
    mu_max: float = 0.2
    error_clamp: float = 0.95
    mu_current: float = 0.0
    x_line: DelayLine = None
    xprime_line: DelayLine = None
    xhat_line: DelayLine = None
    y_line: DelayLine = None
    yprime_line: DelayLine | None = None
    e_prev: float = 0.0
    lambda_current: float = 0.0
    last_y: float = 0.0
    last_y_prime: float = 0.0
    n: int = 0

    @classmethod
    def create(
        cls,
        taps: int,
        mu_base: float,
        s_len: int,
        s_hat_len: int,
        block_length: int | None = None,
        mu_max: float = 0.2,
        error_clamp: float = 0.95,
        w0: np.ndarray | None = None,
    ) -> "ControllerState":
        if taps < 1:
            raise ValidationError("controller needs at least one tap")
        if mu_base < 0:
            raise ValidationError("mu_base must be non-negative")
        w = np.zeros(taps) if w0 is None else np.array(w0, dtype=np.float64)
        if w.size != taps:
            raise ValidationError("w0 length must equal the tap count")
        return cls(
            w=w,
            mu_base=mu_base,
            mu_max=mu_max,
            error_clamp=error_clamp,
            mu_current=mu_base,
            x_line=DelayLine(taps),
            xprime_line=DelayLine(taps),
            xhat_line=DelayLine(s_hat_len),
            y_line=DelayLine(s_len),
            yprime_line=DelayLine(block_length) if block_length else None,
        )


@dataclass
class RunTrace:
    """Per-iteration record of one simulation run plus the final controller."""

    e: np.ndarray
    y: np.ndarray
    y_prime: np.ndarray
    lambda_eff: np.ndarray
    mu_eff: np.ndarray
    final_taps: np.ndarray
    metadata: dict = field(default_factory=dict)
    diverged_at: int | None = None

    def __len__(self):
        return self.e.size


def mu_effective(mu_base: float, e_n: float, clamp: float = 0.95, mu_max: float = 0.2) -> float:
    """Error-driven step size: mu_base / (1 - |e|), clamped and capped.

    Equals mu_base at zero error; grows with |e| up to mu_max.
    """
    mag = min(abs(e_n), clamp)
    return min(mu_base / (1.0 - mag), mu_max)


def fxlms_step(
    state: ControllerState,
    kind: ControllerKind,
    x_n: float,
    d_n: float,
    plant_s: FirFilter,
    model_s_hat: FirFilter,
    wav: WaveletSpec | None = None,
    policy: ThresholdPolicy | None = None,
) -> tuple[float, ControllerState]:
    """Advance the closed loop by one sample and return the residual error.

    Order of operations: controller output, secondary-path filtering,
    optional thresholding of the secondary signal (driven by the previous
    iteration's error), residual error, filtered reference, weight update.
    """
    state.x_line.push(x_n)
    y = float(np.dot(state.w, state.x_line.values))

    y_prime = filter_sample(plant_s, state.y_line, y)

    lam = 0.0
    if kind.use_wavelet_threshold:
        if policy is None:
            raise ValidationError("thresholding controllers need a ThresholdPolicy")
        lam = effective_lambda(policy, state.e_prev)
        if kind.threshold_domain == "wavelet":
            if wav is None or state.yprime_line is None:
                raise ValidationError("wavelet-domain thresholding needs a WaveletSpec and block buffer")
            state.yprime_line.push(y_prime)
            block = state.yprime_line.chronological()
            denoised = denoise_with_lambda(block, wav, lam, policy.kind)
            y_prime = float(denoised[block.size // 2])
        else:
            y_prime = float(apply_threshold(y_prime, lam, policy.kind))
    state.lambda_current = lam

    e = d_n - y_prime

    if kind.filter_reference:
        x_update = filter_sample(model_s_hat, state.xhat_line, x_n)
    else:
        x_update = x_n
    state.xprime_line.push(x_update)

    if kind.variable_step:
        mu = mu_effective(state.mu_base, state.e_prev, state.error_clamp, state.mu_max)
    else:
        mu = state.mu_base
    state.w = state.w + mu * e * state.xprime_line.values

    if not np.isfinite(e) or not np.all(np.isfinite(state.w)):
        raise DivergenceError(
            f"controller {kind.name} produced non-finite values", iteration=state.n
        )

    state.mu_current = mu
    state.e_prev = e
    state.last_y = y
    state.last_y_prime = y_prime
    state.n += 1
    return e, state


@dataclass
class SimulationSetup:
    """Everything a single controller run needs, fully resolved."""

    x: SignalBuffer
    primary: FirFilter
    secondary: FirFilter
    s_hat: FirFilter
    d: SignalBuffer | None = None  # measured primary noise; computed from `primary` when None
    taps: int = 32
    mu_base: float = 0.01
    mu_max: float = 0.2
    error_clamp: float = 0.95
    wav: WaveletSpec = field(default_factory=WaveletSpec)
    policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)

    def primary_noise(self) -> SignalBuffer:
        return filter_buffer(self.primary, self.x)


def run_simulation(setup: SimulationSetup, kind: ControllerKind) -> RunTrace:
    """Run the full closed loop for one controller over the whole input.

    Deterministic given the setup. On divergence raises DivergenceError
    carrying the partial trace.
    """
    x = setup.x.samples
    d = (setup.d if setup.d is not None else setup.primary_noise()).samples
    if d.size != x.size:
        raise ValidationError("measured primary noise and reference must share one length")
    n_total = x.size
    e_limit = DIVERGENCE_FACTOR * max(np.max(np.abs(d)), 1e-30)

    block = setup.wav.block_length if kind.use_wavelet_threshold and kind.threshold_domain == "wavelet" else None
    state = ControllerState.create(
        taps=setup.taps,
        mu_base=setup.mu_base,
        s_len=len(setup.secondary),
        s_hat_len=len(setup.s_hat),
        block_length=block,
        mu_max=setup.mu_max,
        error_clamp=setup.error_clamp,
    )

    e_arr = np.zeros(n_total)
    y_arr = np.zeros(n_total)
    yp_arr = np.zeros(n_total)
    lam_arr = np.zeros(n_total)
    mu_arr = np.zeros(n_total)

    def partial(upto: int, diverged: int | None) -> RunTrace:
        return RunTrace(
            e=e_arr[:upto].copy(),
            y=y_arr[:upto].copy(),
            y_prime=yp_arr[:upto].copy(),
            lambda_eff=lam_arr[:upto].copy(),
            mu_eff=mu_arr[:upto].copy(),
            final_taps=state.w.copy(),
            metadata={"controller": kind.name, "iterations": upto},
            diverged_at=diverged,
        )

    for n in range(n_total):
        try:
            e, _ = fxlms_step(
                state, kind, float(x[n]), float(d[n]), setup.secondary, setup.s_hat, setup.wav, setup.policy
            )
        except DivergenceError as exc:
            exc.partial_trace = partial(n, n)
            raise
        e_arr[n] = e
        y_arr[n] = state.last_y
        yp_arr[n] = state.last_y_prime
        lam_arr[n] = state.lambda_current
        mu_arr[n] = state.mu_current
        if abs(e) > e_limit:
            err = DivergenceError(
                f"controller {kind.name} diverged: |e({n})| exceeds {DIVERGENCE_FACTOR:g} x max|d|",
                iteration=n,
            )
            err.partial_trace = partial(n + 1, n)
            raise err
    return partial(n_total, None)


def wiener_oracle(
    p: FirFilter,
    s: FirFilter,
    order: int,
    excitation_length: int = 30000,
    seed: int = 1729,
) -> FirFilter:
    """Least-squares FIR approximation of the optimal controller P(z)/S(z).

    Solves the normal equations for w minimizing E[(p*x - s*(w*x))^2] on a
    long white-noise realization. Raises InfeasibleError when the primary
    path carries less delay than the secondary path, and ConditioningError
    when the normal equations are numerically unusable.
    """
    if order < 1:
        raise ValidationError("oracle order must be positive")
    if p.delay() < s.delay():
        raise InfeasibleError(
            f"primary path delay ({p.delay()}) is shorter than secondary path delay "
            f"({s.delay()}); a causal optimal controller cannot exist"
        )
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, excitation_length)
    target = lfilter(p.taps, [1.0], x)
    u = lfilter(s.taps, [1.0], x)

    # Design matrix of delayed copies of the secondary-filtered excitation.
    X = np.zeros((excitation_length, order))
    for k in range(order):
        X[k:, k] = u[: excitation_length - k]

    R = X.T @ X
    r = X.T @ target
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise ConditioningError(
            f"normal equations ill-conditioned (condition number {cond:.3e})", condition_number=cond
        )
    w = np.linalg.solve(R, r)
    return FirFilter(w, label=f"wiener({p.label or 'p'}/{s.label or 's'})")
