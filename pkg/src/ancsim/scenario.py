"""Scenario configuration schema and resolution.

A scenario describes one experiment: the source signal, the acoustic
plant, how the secondary-path model is obtained, and the list of
controllers to run against the identical realization.
"""
from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import paths as paths_mod
from .anc import CONTROLLER_NAMES
from .signals import SOURCE_KINDS
from .wavelet import FAMILIES


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SourceConfig(StrictModel):
    kind: str = "sinusoid"
    frequency_hz: list[float] = Field(default_factory=list)
    amplitude: list[float] = Field(default_factory=list)
    noise_variance: float = 0.0
    seed: int = 0
    path: str | None = None

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v):
        if v not in SOURCE_KINDS:
            raise ValueError(f"source kind must be one of {SOURCE_KINDS}")
        return v


class WaveletConfig(StrictModel):
    family: str = "haar"
    levels: int = Field(default=2, ge=1)
    block_length: int = Field(default=64, ge=2)

    @field_validator("family")
    @classmethod
    def _known_family(cls, v):
        if v not in FAMILIES:
            raise ValueError(f"wavelet family must be one of {sorted(FAMILIES)}")
        return v


class ControllerConfig(StrictModel):
    kind: str
    label: str | None = None
    taps: int = Field(default=32, ge=1)
    mu_base: float = Field(default=0.01, ge=0)
    mu_max: float = Field(default=0.2, gt=0)
    error_clamp: float = Field(default=0.95, ge=0, lt=1)
    threshold_kind: str = "soft"
    lambda_base: float = Field(default=0.45, ge=0)
    lambda_max: float | None = Field(default=None, gt=0)
    threshold_domain: str = "wavelet"
    wavelet: WaveletConfig = Field(default_factory=WaveletConfig)

    @field_validator("kind")
    @classmethod
    def _known_controller(cls, v):
        if v not in CONTROLLER_NAMES:
            raise ValueError(f"controller kind must be one of {CONTROLLER_NAMES}")
        return v

    @field_validator("threshold_kind")
    @classmethod
    def _known_threshold(cls, v):
        if v not in ("hard", "soft"):
            raise ValueError("threshold_kind must be 'hard' or 'soft'")
        return v

    @field_validator("threshold_domain")
    @classmethod
    def _known_domain(cls, v):
        if v not in ("wavelet", "sample"):
            raise ValueError("threshold_domain must be 'wavelet' or 'sample'")
        return v

    def resolved_label(self) -> str:
        return self.label or self.kind


class IdentificationConfig(StrictModel):
    model_order: int = Field(default=16, ge=1)
    excitation_length: int = Field(default=20000, ge=1)
    step_size: float = Field(default=0.01, gt=0)
    seed: int = 1234


class MetricsConfig(StrictModel):
    window: int = Field(default=1000, ge=1)
    smoothing: int = Field(default=200, ge=1)


class ScenarioConfig(StrictModel):
    name: str = "scenario"
    seed: int = 0
    sample_rate_hz: float = Field(default=8000.0, gt=0)
    iterations: int = Field(default=10000, ge=1)
    source: SourceConfig = Field(default_factory=SourceConfig)
    primary_path: str = "builtin:duct-primary"
    secondary_path: str = "builtin:duct-secondary"
    s_hat_mode: str = "identified"
    # Uncancellable sensor noise added to d(n) at the error microphone; sets the
    # noise-reduction floor shared by every controller.
    sensor_noise_variance: float = Field(default=0.0, ge=0)
    identification: IdentificationConfig = Field(default_factory=IdentificationConfig)
    controllers: list[ControllerConfig] = Field(min_length=1)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    output_dir: str | None = None

    @field_validator("s_hat_mode")
    @classmethod
    def _known_mode(cls, v):
        if v not in ("perfect", "identified"):
            raise ValueError("s_hat_mode must be 'perfect' or 'identified'")
        return v

    @model_validator(mode="after")
    def _unique_labels(self):
        labels = [c.resolved_label() for c in self.controllers]
        if len(set(labels)) != len(labels):
            raise ValueError(f"controller labels must be unique, got {labels}")
        return self

    def resolve_filters(self):
        """Resolve both plant references, failing before any simulation starts."""
        p = paths_mod.resolve_filter(self.primary_path, label="primary")
        s = paths_mod.resolve_filter(self.secondary_path, label="secondary")
        return p, s

    def scenario_hash(self) -> str:
        """Stable hash of everything that influences the computed traces.

        Filter references are hashed by their resolved coefficients, so two
        configs naming different files with identical taps collide on purpose.
        """
        payload = self.model_dump(mode="json", exclude={"output_dir", "primary_path", "secondary_path"})
        p, s = self.resolve_filters()
        payload["_primary_taps"] = [repr(t) for t in p.taps]
        payload["_secondary_taps"] = [repr(t) for t in s.taps]
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_scenario(path_or_name: str) -> ScenarioConfig:
    """Load a scenario from a YAML/JSON file, or a bundled scenario by name."""
    import yaml

    p = Path(path_or_name)
    if p.is_file():
        text = p.read_text()
    else:
        res = resources.files("ancsim").joinpath(f"data/{path_or_name}.yaml")
        if not res.is_file():
            raise FileNotFoundError(
                f"{path_or_name!r} is neither a config file nor a bundled scenario "
                f"(bundled: {bundled_scenarios()})"
            )
        text = res.read_text()
    return ScenarioConfig.model_validate(yaml.safe_load(text))


def bundled_scenarios() -> list[str]:
    data = resources.files("ancsim").joinpath("data")
    return sorted(f.name[: -len(".yaml")] for f in data.iterdir() if f.name.endswith(".yaml"))


def apply_overrides(config: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply ``key=value`` overrides with dotted paths (lists indexed numerically)."""
    import yaml

    data = config.model_dump(mode="json")
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            target = target[int(part)] if isinstance(target, list) else target[part]
        leaf = parts[-1]
        if isinstance(target, list):
            target[int(leaf)] = value
        else:
            target[leaf] = value
    return ScenarioConfig.model_validate(data)
