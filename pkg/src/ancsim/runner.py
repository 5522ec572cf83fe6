"""Scenario execution: one shared realization, every configured controller."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import anc, metrics, paths, signals
from .errors import DivergenceError
from .scenario import ControllerConfig, ScenarioConfig
from .wavelet import ThresholdPolicy, WaveletSpec


@dataclass
class ControllerResult:
    label: str
    kind: str
    status: str  # "ok" or "diverged"
    trace: anc.RunTrace
    r_series: metrics.MetricSeries | None = None
    convergence: metrics.MetricSeries | None = None
    diverged_at: int | None = None
    error: str | None = None


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    scenario_hash: str
    x: signals.SignalBuffer
    d: signals.SignalBuffer
    s_hat_taps: np.ndarray
    s_hat_error_power: float | None
    controllers: list[ControllerResult] = field(default_factory=list)


def build_setup(
    config: ScenarioConfig,
    controller: ControllerConfig,
    x: signals.SignalBuffer,
    primary: paths.FirFilter,
    secondary: paths.FirFilter,
    s_hat: paths.FirFilter,
    d: signals.SignalBuffer | None = None,
) -> tuple[anc.SimulationSetup, anc.ControllerKind]:
    kind = anc.controller_kind(controller.kind, threshold_domain=controller.threshold_domain)
    policy = ThresholdPolicy(
        kind=controller.threshold_kind,
        base_lambda=controller.lambda_base,
        adaptation="variable" if kind.variable_threshold else "fixed",
        error_clamp=controller.error_clamp,
        lambda_max=controller.lambda_max,
    )
    setup = anc.SimulationSetup(
        x=x,
        primary=primary,
        secondary=secondary,
        s_hat=s_hat,
        d=d,
        taps=controller.taps,
        mu_base=controller.mu_base,
        mu_max=controller.mu_max,
        error_clamp=controller.error_clamp,
        wav=WaveletSpec(
            family=controller.wavelet.family,
            levels=controller.wavelet.levels,
            block_length=controller.wavelet.block_length,
        ),
        policy=policy,
    )
    return setup, kind


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Run every controller of the scenario on the identical realization.

    A diverged controller is recorded with its partial trace; siblings
    still run.
    """
    primary, secondary = config.resolve_filters()

    source = signals.SourceSpec(
        kind=config.source.kind,
        frequency_hz=tuple(config.source.frequency_hz),
        amplitude=tuple(config.source.amplitude),
        noise_variance=config.source.noise_variance,
        seed=config.source.seed if config.source.seed else config.seed,
        length_samples=config.iterations,
        path=config.source.path,
    )
    x = signals.generate(source, config.sample_rate_hz)
    d = paths.filter_buffer(primary, x)
    if config.sensor_noise_variance > 0:
        rng = np.random.default_rng(config.seed + 1000003)
        noise = rng.normal(0.0, np.sqrt(config.sensor_noise_variance), len(d))
        d = signals.SignalBuffer(d.samples + noise, config.sample_rate_hz)

    if config.s_hat_mode == "perfect":
        s_hat = paths.FirFilter(secondary.taps, label="s_hat(perfect)")
        s_hat_err = None
    else:
        ident = config.identification
        s_hat, s_hat_err = paths.identify_secondary_path(
            secondary,
            model_order=ident.model_order,
            excitation_length=ident.excitation_length,
            step_size=ident.step_size,
            seed=ident.seed,
        )

    result = ScenarioResult(
        config=config,
        scenario_hash=config.scenario_hash(),
        x=x,
        d=d,
        s_hat_taps=s_hat.taps,
        s_hat_error_power=s_hat_err,
    )

    for controller in config.controllers:
        setup, kind = build_setup(config, controller, x, primary, secondary, s_hat, d=d)
        label = controller.resolved_label()
        try:
            trace = anc.run_simulation(setup, kind)
            status, diverged_at, error = "ok", None, None
        except DivergenceError as exc:
            trace = exc.partial_trace
            status, diverged_at, error = "diverged", exc.iteration, str(exc)
        cr = ControllerResult(
            label=label,
            kind=controller.kind,
            status=status,
            trace=trace,
            diverged_at=diverged_at,
            error=error,
        )
        if len(trace):
            e_buf = signals.SignalBuffer(trace.e, config.sample_rate_hz)
            d_buf = signals.SignalBuffer(d.samples[: len(trace)], config.sample_rate_hz)
            window = min(config.metrics.window, len(trace))
            cr.r_series = metrics.noise_reduction_db(e_buf, d_buf, window)
            cr.convergence = metrics.convergence_curve(e_buf, config.metrics.smoothing)
        result.controllers.append(cr)
    return result
