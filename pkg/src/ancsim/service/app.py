"""FastAPI service exposing the simulation lab over HTTP."""
from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, paths, runner
from ..errors import AncError
from ..metrics import MetricSeries, iterations_to_threshold
from . import schemas

app = FastAPI(title="ancsim", version=__version__)


def _metric_model(series) -> schemas.MetricSeriesModel | None:
    if series is None:
        return None
    return schemas.MetricSeriesModel(
        name=series.name,
        values=[float(v) for v in series.values],
        window=series.window,
        stride=series.stride,
        undefined=list(series.undefined),
        overall=None if series.overall is None else float(series.overall),
    )


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(request: schemas.SimulateRequest):
    try:
        result = runner.run_scenario(request)
    except AncError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except FileNotFoundError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc

    controllers = []
    for cr in result.controllers:
        t = cr.trace
        controllers.append(
            schemas.ControllerReport(
                label=cr.label,
                kind=cr.kind,
                status=cr.status,
                diverged_at=cr.diverged_at,
                error=cr.error,
                final_taps=[float(v) for v in t.final_taps],
                trace=schemas.TraceSeries(
                    e=[float(v) for v in t.e],
                    y=[float(v) for v in t.y],
                    y_prime=[float(v) for v in t.y_prime],
                    lambda_eff=[float(v) for v in t.lambda_eff],
                    mu_eff=[float(v) for v in t.mu_eff],
                ),
                noise_reduction=_metric_model(cr.r_series),
                convergence=_metric_model(cr.convergence),
            )
        )
    return schemas.SimulateResponse(
        scenario_hash=result.scenario_hash,
        config=result.config,
        sample_rate_hz=result.config.sample_rate_hz,
        d=[float(v) for v in result.d.samples],
        s_hat_taps=[float(v) for v in result.s_hat_taps],
        s_hat_error_power=result.s_hat_error_power,
        controllers=controllers,
    )


@app.post("/identify", response_model=schemas.IdentifyResponse)
def identify(request: schemas.IdentifyRequest):
    if (request.secondary_path is None) == (request.taps is None):
        raise HTTPException(status_code=422, detail="give exactly one of secondary_path or taps")
    try:
        if request.taps is not None:
            true_s = paths.FirFilter(np.array(request.taps), label="explicit")
        else:
            true_s = paths.resolve_filter(request.secondary_path, label="secondary")
        model, err_power = paths.identify_secondary_path(
            true_s,
            model_order=request.model_order,
            excitation_length=request.excitation_length,
            step_size=request.step_size,
            seed=request.seed,
        )
    except (AncError, FileNotFoundError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return schemas.IdentifyResponse(taps=[float(v) for v in model.taps], final_error_power=err_power)


@app.post("/compare", response_model=schemas.CompareResponse)
def compare(request: schemas.CompareRequest):
    target = request.target_db
    if target is None:
        target = min(e.r_overall for e in request.entries) - 3.0

    rows = []
    for entry in request.entries:
        series = MetricSeries(
            name="noise_reduction_db",
            values=np.array(entry.r_window),
            window=entry.window,
            stride=entry.stride,
        )
        idx = iterations_to_threshold(series, target)
        rows.append(
            schemas.CompareRow(
                label=entry.label,
                final_r_db=entry.r_overall,
                iterations_to_target=None if idx is None else (idx + 1) * entry.stride,
                rank=0,
            )
        )
    order = sorted(
        range(len(rows)),
        key=lambda i: (
            math.inf if rows[i].iterations_to_target is None else rows[i].iterations_to_target,
            -rows[i].final_r_db,
        ),
    )
    for rank, i in enumerate(order, start=1):
        rows[i].rank = rank
    return schemas.CompareResponse(target_db=target, rows=rows)
