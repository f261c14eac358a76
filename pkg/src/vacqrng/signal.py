"""Measured-voltage model, ADC digitisation and noise calibration.

The detector output is a Gaussian voltage whose variance is the sum of a
quantum part (linear in LO power) and a classical part, shifted by a DC
offset. Traces are stored as headerless little-endian binaries with a
``.meta`` sidecar in :mod:`vacqrng.kvtext` format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kvtext
from .errors import CalibrationError, DomainError

# Measured at 0 mW and 40 mW LO power.
SIGMA_E2_REF = 5.49e-5
SIGMA_M2_40MW_REF = 1.06e-3
LO_POWER_REF_MW = 40.0
KAPPA_REF = (SIGMA_M2_40MW_REF - SIGMA_E2_REF) / LO_POWER_REF_MW

MIN_CALIBRATION_SAMPLES = 1000


@dataclass(frozen=True)
class NoiseModel:
    sigma_q2: float = SIGMA_M2_40MW_REF - SIGMA_E2_REF
    sigma_e2: float = SIGMA_E2_REF
    kappa: float = KAPPA_REF
    delta_dc: float = 0.0

    def __post_init__(self):
        for name in ("sigma_q2", "sigma_e2", "kappa"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}", name)

    @classmethod
    def from_power(cls, kappa: float, lo_power_mw: float, sigma_e2: float,
                   delta_dc: float = 0.0) -> "NoiseModel":
        """Quantum variance scaled linearly with LO power."""
        if lo_power_mw < 0:
            raise DomainError(f"LO power must be >= 0, got {lo_power_mw}")
        return cls(kappa * lo_power_mw, sigma_e2, kappa, delta_dc)

    @property
    def sigma_m2(self) -> float:
        return self.sigma_q2 + self.sigma_e2

    @property
    def sigma_q(self) -> float:
        return math.sqrt(self.sigma_q2)

    @property
    def sigma_e(self) -> float:
        return math.sqrt(self.sigma_e2)


@dataclass(frozen=True)
class AdcConfig:
    n_bits: int = 8
    r_half: float = 0.2
    sample_rate: float = 100e6

    def __post_init__(self):
        if int(self.n_bits) != self.n_bits or not 1 <= self.n_bits <= 16:
            raise DomainError(f"n_bits must be an integer in [1, 16], got {self.n_bits}", "n_bits")
        if not self.r_half > 0:
            raise DomainError(f"r_half must be > 0, got {self.r_half}", "r_half")
        if not self.sample_rate > 0:
            raise DomainError(f"sample_rate must be > 0, got {self.sample_rate}", "sample_rate")

    @property
    def delta(self) -> float:
        """Bin width ``R / 2**(n-1)``."""
        return self.r_half / 2 ** (self.n_bits - 1)

    @property
    def max_code(self) -> int:
        return 2 ** self.n_bits - 1

    @property
    def code_dtype(self) -> np.dtype:
        return np.dtype("<u1") if self.n_bits <= 8 else np.dtype("<u2")


@dataclass
class Trace:
    samples: np.ndarray
    kind: str = "voltage"  # or "codes"
    metadata: Dict[str, kvtext.Scalar] = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class ClipReport:
    low: int
    high: int

    @property
    def total(self) -> int:
        return self.low + self.high


def simulate_trace(noise: NoiseModel, count: int, seed: int,
                   offset: float = 0.0, stream: int = 0) -> Trace:
    """Draw ``count`` detector voltages.

    Quantum and classical contributions are drawn separately and added to the
    DC offset plus any extra mean ``offset`` (e.g. from arm imbalance).
    ``stream`` selects an independent generator for the same ``seed``.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng([int(seed), int(stream)])
    q = rng.normal(0.0, math.sqrt(noise.sigma_q2), count)
    e = rng.normal(0.0, math.sqrt(noise.sigma_e2), count)
    v = (noise.delta_dc + offset) + q + e
    meta = {
        "seed": int(seed),
        "stream": int(stream),
        "count": int(count),
        "noise.sigma_q2": noise.sigma_q2,
        "noise.sigma_e2": noise.sigma_e2,
        "noise.delta_dc": noise.delta_dc,
        "offset": float(offset),
    }
    return Trace(v, "voltage", meta)


def quantize(trace: Trace, adc: AdcConfig) -> Tuple[Trace, ClipReport]:
    """Mid-rise floor quantiser; out-of-range samples clamp to the rails."""
    if trace.kind != "voltage":
        raise ValueError("quantize expects a voltage trace")
    raw = np.floor((np.asarray(trace.samples) + adc.r_half) / adc.delta)
    low = int(np.count_nonzero(raw < 0))
    high = int(np.count_nonzero(raw > adc.max_code))
    codes = np.clip(raw, 0, adc.max_code).astype(adc.code_dtype)
    meta = dict(trace.metadata)
    meta.update({"adc.n_bits": adc.n_bits, "adc.r_half": adc.r_half,
                 "adc.sample_rate": adc.sample_rate,
                 "clip.low": low, "clip.high": high})
    return Trace(codes, "codes", meta), ClipReport(low, high)


def code_midpoints(codes: np.ndarray, adc: AdcConfig) -> np.ndarray:
    """Voltage at the centre of each code's bin."""
    return (np.asarray(codes, dtype=float) + 0.5) * adc.delta - adc.r_half


def calibrate_noise(trace_lo_on: Trace, trace_lo_off: Trace,
                    lo_power_mw: Optional[float] = None) -> NoiseModel:
    """Split the LO-on variance into classical (LO-off) and quantum parts."""
    for name, t in (("LO-on", trace_lo_on), ("LO-off", trace_lo_off)):
        if len(t) < MIN_CALIBRATION_SAMPLES:
            raise CalibrationError(
                f"{name} trace has {len(t)} samples, need >= {MIN_CALIBRATION_SAMPLES}")
    on = np.asarray(trace_lo_on.samples, dtype=float)
    off = np.asarray(trace_lo_off.samples, dtype=float)
    var_on = float(np.var(on, ddof=1))
    var_off = float(np.var(off, ddof=1))
    if var_on < var_off:
        raise CalibrationError(
            f"LO-on variance {var_on:.6g} V^2 is below LO-off variance {var_off:.6g} V^2")
    sigma_q2 = var_on - var_off
    kappa = sigma_q2 / lo_power_mw if lo_power_mw else 0.0
    return NoiseModel(sigma_q2, var_off, kappa, float(np.mean(on)))


def variance_standard_error(variance: float, count: int) -> float:
    """Standard error of a Gaussian sample variance."""
    return variance * math.sqrt(2.0 / (count - 1))


def qcnr(noise: NoiseModel) -> float:
    """Quantum-to-classical noise ratio in dB."""
    if not (noise.sigma_q2 > 0 and noise.sigma_e2 > 0):
        raise DomainError("QCNR needs strictly positive quantum and classical variances")
    return 10.0 * math.log10(noise.sigma_q2 / noise.sigma_e2)


def variance_vs_power(kappa: float, sigma_e2: float,
                      powers: Sequence[float]) -> List[Tuple[float, float]]:
    """Total variance ``kappa * P + sigma_e2`` at each LO power (mW)."""
    out = []
    for p in powers:
        if p < 0:
            raise DomainError(f"LO power must be >= 0, got {p}")
        out.append((float(p), kappa * p + sigma_e2))
    return out


# --- trace files -----------------------------------------------------------

_FORMATS = {"f64": np.dtype("<f8"), "u8": np.dtype("<u1"), "u16": np.dtype("<u2")}


def _format_of(trace: Trace) -> str:
    if trace.kind == "voltage":
        return "f64"
    return "u8" if trace.samples.dtype.itemsize == 1 else "u16"


def sidecar_path(path: Union[str, Path]) -> Path:
    return Path(str(path) + ".meta")


def write_trace(path: Union[str, Path], trace: Trace) -> None:
    fmt = _format_of(trace)
    Path(path).write_bytes(np.ascontiguousarray(trace.samples, _FORMATS[fmt]).tobytes())
    meta = {"format": fmt, "kind": trace.kind, "samples": len(trace)}
    meta.update(trace.metadata)
    sidecar_path(path).write_text(kvtext.dumps(meta))


def read_trace(path: Union[str, Path]) -> Trace:
    raw = kvtext.loads(sidecar_path(path).read_text())
    meta = {k: kvtext.parse_value(v) for k, v in raw.items()}
    fmt = meta.pop("format")
    kind = meta.pop("kind")
    count = meta.pop("samples")
    samples = np.frombuffer(Path(path).read_bytes(), dtype=_FORMATS[fmt])
    if len(samples) != count:
        raise ValueError(f"{path}: sidecar declares {count} samples, file holds {len(samples)}")
    return Trace(samples.copy(), kind, meta)
