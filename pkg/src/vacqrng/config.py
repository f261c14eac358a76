"""Run configuration: dataclass sections, flat dotted-key text format.

A config file looks like::

    modulator.S = 3
    detection.s1 = 0.87
    run.seed = 1

Unknown keys are rejected; omitted keys keep their defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from . import kvtext
from .entropy import ExtractorParams
from .errors import ConfigError, DomainError
from .optics import DetectionConfig, ModulatorConfig
from .signal import KAPPA_REF, LO_POWER_REF_MW, SIGMA_E2_REF, AdcConfig, NoiseModel

# Photons per 10 ns window of a 40 mW, 1550 nm carrier.
_PLANCK = 6.62607015e-34
_C = 299792458.0
MU0_DEFAULT = 40e-3 * 1e-8 / (_PLANCK * _C / 1550e-9)


@dataclass(frozen=True)
class RunSettings:
    seed: int = 1
    sample_count: int = 1_000_000
    lo_power_mw: float = LO_POWER_REF_MW
    e_bound_multiplier: float = 5.0

    def __post_init__(self):
        if self.sample_count < 1:
            raise DomainError(f"sample_count must be >= 1, got {self.sample_count}",
                              "sample_count")
        if self.lo_power_mw < 0:
            raise DomainError(f"lo_power_mw must be >= 0, got {self.lo_power_mw}",
                              "lo_power_mw")
        if self.e_bound_multiplier < 0:
            raise DomainError("e_bound_multiplier must be >= 0", "e_bound_multiplier")


@dataclass(frozen=True)
class DriftScenario:
    """Linear DC-offset walk used by the rebalance loop.

    ``rate`` is the offset change per window (V); ``deadband_sigmas`` sets the
    correction threshold in standard errors of a window mean.
    """

    rate: float = 0.0
    initial_offset: float = 0.0
    windows: int = 20
    window_samples: int = 10_000
    deadband_sigmas: float = 4.0

    def __post_init__(self):
        if self.windows < 1:
            raise DomainError(f"windows must be >= 1, got {self.windows}", "windows")
        if self.window_samples < 2:
            raise DomainError(f"window_samples must be >= 2, got {self.window_samples}",
                              "window_samples")
        if self.deadband_sigmas < 0:
            raise DomainError("deadband_sigmas must be >= 0", "deadband_sigmas")


def _default_noise() -> NoiseModel:
    return NoiseModel.from_power(KAPPA_REF, LO_POWER_REF_MW, SIGMA_E2_REF)


@dataclass(frozen=True)
class RunConfig:
    modulator: ModulatorConfig = field(default_factory=lambda: ModulatorConfig(mu0=MU0_DEFAULT))
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    noise: NoiseModel = field(default_factory=_default_noise)
    adc: AdcConfig = field(default_factory=AdcConfig)
    extractor: ExtractorParams = field(default_factory=ExtractorParams)
    run: RunSettings = field(default_factory=RunSettings)
    drift: DriftScenario = field(default_factory=DriftScenario)

    def __post_init__(self):
        if self.extractor.n_bits != self.adc.n_bits:
            raise ConfigError("extractor.n_bits",
                              f"{self.extractor.n_bits} differs from adc.n_bits {self.adc.n_bits}")
        if self.extractor.k % self.adc.n_bits:
            raise ConfigError("extractor.k",
                              f"{self.extractor.k} is not divisible by adc.n_bits {self.adc.n_bits}")

    @property
    def seed(self) -> int:
        return self.run.seed

    @property
    def sample_count(self) -> int:
        return self.run.sample_count


_SECTIONS = tuple(f.name for f in dataclasses.fields(RunConfig))


def _coerce(key: str, raw, like):
    """Convert ``raw`` to the type of the default value ``like``."""
    try:
        if isinstance(like, bool):
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text not in ("true", "false"):
                raise ValueError(text)
            return text == "true"
        if isinstance(like, int):
            if isinstance(raw, float) and raw.is_integer():
                return int(raw)
            return int(str(raw).strip())
        if isinstance(like, float):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"cannot parse {raw!r} as {type(like).__name__}") from None


def to_items(cfg: RunConfig) -> List[Tuple[str, kvtext.Scalar]]:
    items = []
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            items.append((f"{section}.{f.name}", getattr(obj, f.name)))
    return items


def serialize(cfg: RunConfig) -> str:
    return kvtext.dumps(to_items(cfg))


def from_mapping(values: Mapping[str, object], base: Optional[RunConfig] = None) -> RunConfig:
    """Apply dotted-key values on top of ``base`` (defaults if omitted)."""
    base = base or RunConfig()
    grouped: Dict[str, Dict[str, object]] = {}
    for key, raw in values.items():
        section, _, name = key.partition(".")
        if section not in _SECTIONS or not name:
            raise ConfigError(key, "unknown configuration key")
        current = getattr(base, section)
        names = {f.name for f in dataclasses.fields(current)}
        if name not in names:
            raise ConfigError(key, "unknown configuration key")
        grouped.setdefault(section, {})[name] = _coerce(key, raw, getattr(current, name))

    # LO power drives the quantum variance unless sigma_q2 is given explicitly
    noise_vals = grouped.setdefault("noise", {})
    run_vals = grouped.get("run", {})
    if "sigma_q2" not in noise_vals and ({"kappa"} & noise_vals.keys() or "lo_power_mw" in run_vals):
        kappa = noise_vals.get("kappa", base.noise.kappa)
        power = run_vals.get("lo_power_mw", base.run.lo_power_mw)
        noise_vals["sigma_q2"] = kappa * power

    sections = {}
    for section in _SECTIONS:
        current = getattr(base, section)
        changes = grouped.get(section)
        if not changes:
            sections[section] = current
            continue
        try:
            sections[section] = dataclasses.replace(current, **changes)
        except DomainError as exc:
            raise ConfigError(f"{section}.{exc.field or '?'}", str(exc)) from None
    return RunConfig(**sections)


def parse(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    try:
        values = kvtext.loads(text)
    except ValueError as exc:
        raise ConfigError("<file>", str(exc)) from None
    return from_mapping(values, base)


def load(path: Union[str, Path, None], overrides: Iterable[str] = ()) -> RunConfig:
    """Read a config file (optional) and apply ``key=value`` overrides."""
    cfg = parse(Path(path).read_text()) if path else RunConfig()
    values = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    return from_mapping(values, cfg) if values else cfg


def bits_per_second(cfg: RunConfig) -> float:
    """Nominal extracted output rate for the configured ADC and extractor."""
    return cfg.adc.sample_rate * cfg.adc.n_bits * cfg.extractor.l / cfg.extractor.k


def mu0_from_power(power_w: float, wavelength_m: float, window_s: float) -> float:
    return power_w * window_s / (_PLANCK * _C / wavelength_m)

