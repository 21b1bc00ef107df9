"""Scenario configuration: defaults, validation, file loading, overrides.

A scenario is a flat key set mirroring the JSON config schema. Regime
selection fills atmospheric attenuation and fading defaults unless the
fields are pinned explicitly. Unknown keys are rejected by name so
typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources

from .channel import REGIME_DEFAULTS, ChannelParams, LossModel


class ConfigError(ValueError):
    """Invalid, unknown or inconsistent configuration input."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameter set of one simulation scenario."""

    n_nodes: int = 50
    altitude_km: float = 500.0
    inclination_deg: float = 53.0
    planes: int | None = None  # None -> round(sqrt(n_nodes))
    min_spacing_km: float = 100.0
    regime: str = "standard"
    loss_model: str = "composite"
    atm_loss_db: float | None = None  # None -> regime default
    sigma_fade: float | None = None  # None -> regime default
    d_max_km: float = 9200.0
    f_min: float = 0.60
    t_min: float = 0.50
    q_max: float = 0.05
    eps_f: float = 0.05
    eps_r: float = 0.10
    window: int = 10
    t_sim_s: float = 400.0
    step_s: float = 1.0
    n_mc: int = 5
    pairs_per_step: int = 5
    base_seed: int = 12345
    wavelength_m: float = 810e-9
    fidelity_base: float = 0.98
    rate_base_bps: float = 1e6
    fidelity_decay_per_db: float = 6.5e-4
    pointing_error_rad: float = 1.2e-6
    divergence_rad: float = 8.1e-6
    system_loss_db: float = 3.7
    exclusion_s: float = 10.0
    shell_thickness_km: float = 50.0
    trust_sigma: float = 0.01
    trust_init_low: float = 0.7
    trust_init_high: float = 1.0
    rate_cost_cap: float = 10.0
    second_path_edge_disjoint: bool = False
    db_power_convention: bool = False
    record_link_snapshots: bool = False
    # aperture/detector values are carried as metadata: no loss term
    # consumes them directly, the divergence default derives from them
    receiver_aperture_m: float = 0.20
    transmitter_aperture_m: float = 0.10
    detector_efficiency: float = 0.85

    def __post_init__(self) -> None:
        if not 2 <= self.n_nodes <= 1000:
            raise ConfigError(f"n_nodes must be in 2..1000, got {self.n_nodes}")
        if self.regime not in REGIME_DEFAULTS:
            raise ConfigError(
                f"regime must be one of {sorted(REGIME_DEFAULTS)}, got {self.regime!r}"
            )
        try:
            LossModel(self.loss_model)
        except ValueError:
            raise ConfigError(
                f"loss_model must be one of {[m.value for m in LossModel]}, "
                f"got {self.loss_model!r}"
            ) from None
        if self.sigma_fade is not None and not 0 <= self.sigma_fade <= 1:
            raise ConfigError(f"sigma_fade must be in [0, 1], got {self.sigma_fade}")
        if self.atm_loss_db is not None and self.atm_loss_db < 0:
            raise ConfigError("atm_loss_db must be >= 0")
        for name in ("f_min", "t_min"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if not 0 <= self.q_max <= 0.5:
            raise ConfigError(f"q_max must be in [0, 0.5], got {self.q_max}")
        for name in ("altitude_km", "d_max_km", "t_sim_s", "step_s", "rate_base_bps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if not 0 < self.fidelity_base <= 1:
            raise ConfigError("fidelity_base must be in (0, 1]")
        steps = self.t_sim_s / self.step_s
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigError("t_sim_s must be an integral multiple of step_s")
        if self.n_mc < 1:
            raise ConfigError("n_mc must be >= 1")
        if self.pairs_per_step < 1:
            raise ConfigError("pairs_per_step must be >= 1")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.planes is not None and self.planes < 1:
            raise ConfigError("planes must be >= 1")
        if not 0 <= self.trust_init_low <= self.trust_init_high <= 1:
            raise ConfigError("trust init range must satisfy 0 <= low <= high <= 1")
        if self.trust_sigma < 0:
            raise ConfigError("trust_sigma must be >= 0")
        if self.eps_f < 0 or self.eps_r < 0:
            raise ConfigError("deviation thresholds must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_sim_s / self.step_s))

    @property
    def inclination_rad(self) -> float:
        return math.radians(self.inclination_deg)

    @property
    def resolved_planes(self) -> int:
        if self.planes is not None:
            return self.planes
        return max(1, round(math.sqrt(self.n_nodes)))

    @property
    def resolved_atm_loss_db(self) -> float:
        if self.atm_loss_db is not None:
            return self.atm_loss_db
        return REGIME_DEFAULTS[self.regime][0]

    @property
    def resolved_sigma_fade(self) -> float:
        if self.sigma_fade is not None:
            return self.sigma_fade
        return REGIME_DEFAULTS[self.regime][1]

    def channel_params(self) -> ChannelParams:
        return ChannelParams(
            wavelength_m=self.wavelength_m,
            atm_loss_db=self.resolved_atm_loss_db,
            sigma_fade=self.resolved_sigma_fade,
            pointing_error_rad=self.pointing_error_rad,
            divergence_rad=self.divergence_rad,
            system_loss_db=self.system_loss_db,
            fidelity_base=self.fidelity_base,
            rate_base_bps=self.rate_base_bps,
            fidelity_decay_per_db=self.fidelity_decay_per_db,
            loss_model=LossModel(self.loss_model),
            db_power_convention=self.db_power_convention,
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def resolved_dict(self) -> dict:
        d = self.to_dict()
        d["planes"] = self.resolved_planes
        d["atm_loss_db"] = self.resolved_atm_loss_db
        d["sigma_fade"] = self.resolved_sigma_fade
        return d


_FIELD_NAMES = {f.name for f in dataclasses.fields(ScenarioConfig)}
_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Build a config from a mapping, rejecting unknown keys by name."""
    unknown = sorted(set(raw) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return ScenarioConfig(**raw)


def load_config_file(path: str) -> ScenarioConfig:
    """Load a JSON config file (flat object of ScenarioConfig keys)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    return config_from_dict(raw)


def default_config() -> ScenarioConfig:
    """The shipped default scenario (packaged JSON)."""
    text = resources.files("satqnet.data").joinpath("default_config.json").read_text()
    return config_from_dict(json.loads(text))


_BOOL_STRINGS = {"true": True, "false": False, "1": True, "0": False}


def _coerce(key: str, text: str):
    """Parse an override string to the key's field type."""
    hint = str(_FIELD_TYPES[key])
    if "bool" in hint:
        try:
            return _BOOL_STRINGS[text.lower()]
        except KeyError:
            raise ConfigError(f"{key} expects true/false, got {text!r}") from None
    if "int" in hint and "float" not in hint:
        try:
            return int(text)
        except ValueError:
            if text.lower() in ("none", "null"):
                return None
            raise ConfigError(f"{key} expects an integer, got {text!r}") from None
    if "float" in hint:
        try:
            return float(text)
        except ValueError:
            if text.lower() in ("none", "null"):
                return None
            raise ConfigError(f"{key} expects a number, got {text!r}") from None
    return text


def apply_overrides(config: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply repeatable ``key=value`` overrides; flags win over the file."""
    changes: dict = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown config key(s): {key}")
        changes[key] = _coerce(key, value.strip())
    if not changes:
        return config
    merged = config.to_dict()
    merged.update(changes)
    return config_from_dict(merged)
