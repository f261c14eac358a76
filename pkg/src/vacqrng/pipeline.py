"""Pipeline stages: simulate -> analyze -> extract -> test, plus modulation-index feedback."""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import entropy, extract, optics, signal, stattests
from .config import RunConfig
from .errors import ExtractionRefused, NoBalanceError, DomainError

# Seed streams derived from ``run.seed``.
STREAM_LO_ON = 0
STREAM_LO_OFF = 1
STREAM_TOEPLITZ = 2
STREAM_DRIFT = 100


def quadrature_volts(x0: float, noise: signal.NoiseModel) -> float:
    """Voltage for a normalised quadrature ``x0``; vacuum std 1/2 maps to ``sigma_q``."""
    return 2.0 * x0 * noise.sigma_q


def imbalance_offset(mod: optics.ModulatorConfig, det: optics.DetectionConfig,
                     noise: signal.NoiseModel) -> float:
    """Mean detector voltage produced by residual photocurrent imbalance."""
    arms = optics.arm_photon_numbers(mod, det)
    x0 = optics.quadrature_mean(arms, (det.s1, det.s2), mod.mu0)
    return quadrature_volts(x0, noise)


@dataclass
class BalanceResult:
    m: float
    residual: float
    x0: float
    offset_v: float


@dataclass
class SimulationResult:
    config: RunConfig
    balance: BalanceResult
    lo_on: signal.Trace
    lo_on_codes: signal.Trace
    lo_off: signal.Trace
    lo_off_codes: signal.Trace
    clip_on: signal.ClipReport
    clip_off: signal.ClipReport
    seed: extract.ToeplitzSeed


def solve_balance(cfg: RunConfig) -> BalanceResult:
    mod = cfg.modulator
    m = optics.balance_solve(cfg.detection, mod.S, mod.mu0)
    mod = dataclasses.replace(mod, m=m)
    arms = optics.arm_photon_numbers(mod, cfg.detection)
    x0 = optics.quadrature_mean(arms, (cfg.detection.s1, cfg.detection.s2), mod.mu0)
    return BalanceResult(m, optics.balance_residual(mod, cfg.detection), x0,
                         quadrature_volts(x0, cfg.noise))


def toeplitz_seed(cfg: RunConfig) -> extract.ToeplitzSeed:
    k, l = cfg.extractor.k, cfg.extractor.l
    rng = np.random.default_rng([cfg.seed, STREAM_TOEPLITZ])
    material = rng.bytes((k + l - 1 + 7) // 8)
    return extract.seed_from_entropy(material, k, l)


def simulate(cfg: RunConfig, count: Optional[int] = None) -> SimulationResult:
    """Balance the arms, then draw LO-on and LO-off traces and digitise them."""
    count = cfg.sample_count if count is None else count
    if count < 1:
        raise DomainError(f"sample count must be >= 1, got {count}", "sample_count")
    bal = solve_balance(cfg)
    on = signal.simulate_trace(cfg.noise, count, cfg.seed, offset=bal.offset_v,
                               stream=STREAM_LO_ON)
    dark = dataclasses.replace(cfg.noise, sigma_q2=0.0)
    off = signal.simulate_trace(dark, count, cfg.seed, stream=STREAM_LO_OFF)
    on.metadata.update({"lo_power_mw": cfg.run.lo_power_mw, "modulator.m": bal.m})
    off.metadata["lo_power_mw"] = 0.0
    on_codes, clip_on = signal.quantize(on, cfg.adc)
    off_codes, clip_off = signal.quantize(off, cfg.adc)
    return SimulationResult(cfg, bal, on, on_codes, off, off_codes, clip_on, clip_off,
                            toeplitz_seed(cfg))


@dataclass
class AnalysisReport:
    noise: signal.NoiseModel
    qcnr_db: float
    entropy: entropy.EntropyReport
    samples_on: int
    samples_off: int

    def to_text(self) -> str:
        head = [
            ("samples_lo_on", self.samples_on),
            ("samples_lo_off", self.samples_off),
            ("sigma_q2_V2", f"{self.noise.sigma_q2:.12g}"),
            ("sigma_e2_V2", f"{self.noise.sigma_e2:.12g}"),
            ("delta_dc_V", f"{self.noise.delta_dc:.12g}"),
            ("qcnr_dB", f"{self.qcnr_db:.12g}"),
        ]
        return "".join(f"{k}: {v}\n" for k, v in head) + self.entropy.to_text()


def _as_voltage(trace: signal.Trace, adc: signal.AdcConfig) -> signal.Trace:
    if trace.kind == "voltage":
        return trace
    return signal.Trace(signal.code_midpoints(trace.samples, adc), "voltage", trace.metadata)


def analyze(lo_on: signal.Trace, lo_off: signal.Trace, adc: signal.AdcConfig,
            lo_power_mw: Optional[float] = None,
            e_bound_multiplier: float = entropy.DEFAULT_E_MULTIPLIER) -> AnalysisReport:
    """Calibrate noise from the two traces, then audit QCNR and min-entropy."""
    on, off = _as_voltage(lo_on, adc), _as_voltage(lo_off, adc)
    noise = signal.calibrate_noise(on, off, lo_power_mw)
    q = signal.qcnr(noise)
    ent = entropy.min_entropy(entropy.EntropyInputs.from_noise(noise, adc, e_bound_multiplier))
    return AnalysisReport(noise, q, ent, len(on), len(off))


@dataclass
class ExtractionResult:
    data: np.ndarray  # packed output bytes
    nbits: int
    seconds: float
    certified: bool

    @property
    def throughput(self) -> float:
        return self.nbits / self.seconds if self.seconds > 0 else math.inf


def certify(params: entropy.ExtractorParams, h_min: Optional[float], override: bool = False) -> bool:
    """Raise :class:`ExtractionRefused` unless the leftover-hash bound holds."""
    if h_min is not None and entropy.admissible(params, h_min):
        return True
    if override:
        return False
    if h_min is None:
        raise ExtractionRefused("no min-entropy estimate supplied to certify the extractor")
    raise ExtractionRefused("leftover-hash bound violated: " + entropy.inequality_text(params, h_min))


def run_extraction(codes: np.ndarray, seed: extract.ToeplitzSeed,
                   params: entropy.ExtractorParams, h_min: Optional[float],
                   override: bool = False) -> ExtractionResult:
    certified = certify(params, h_min, override)
    ex = extract.ToeplitzExtractor(seed)
    ex.blocks(np.zeros((1, params.k // 8), np.uint8))  # JIT warm-up outside the timer
    t0 = time.perf_counter()
    out = extract.extract_stream(seed, codes, params, ex)
    dt = time.perf_counter() - t0
    return ExtractionResult(out, extract.output_bits(len(codes), params), dt, certified)


# --- modulation-index feedback ----------------------------------------------

@dataclass
class RebalanceStep:
    window: int
    detector_offset: float  # DC walk at the end of the window (V)
    measured_mean: float
    offset_before: float  # true mean offset before any correction (V)
    corrected: bool
    m: float
    offset_after: float
    tolerance: float

    def line(self) -> str:
        return (f"window={self.window} detector_offset={self.detector_offset:.6g} "
                f"measured={self.measured_mean:.6g} before={self.offset_before:.6g} "
                f"corrected={'yes' if self.corrected else 'no'} m={self.m:.12g} "
                f"after={self.offset_after:.6g} |after|<tol={abs(self.offset_after) < self.tolerance} "
                f"tolerance={self.tolerance:.6g}")


@dataclass
class RebalanceLog:
    tolerance: float
    initial_m: float
    steps: List[RebalanceStep] = field(default_factory=list)

    @property
    def corrections(self) -> int:
        return sum(s.corrected for s in self.steps)

    @property
    def solves(self) -> int:
        return 1 + self.corrections

    @property
    def max_after(self) -> float:
        return max((abs(s.offset_after) for s in self.steps), default=0.0)

    def to_text(self) -> str:
        head = (f"tolerance_V: {self.tolerance:.12g}\ninitial_m: {self.initial_m:.12g}\n"
                f"solves: {self.solves}\ncorrections: {self.corrections}\n"
                f"max_abs_offset_after_V: {self.max_after:.6g}\n")
        return head + "".join(s.line() + "\n" for s in self.steps)


class RebalanceError(RuntimeError):
    """The feedback loop lost the balance; ``log`` holds the last good state."""

    def __init__(self, message: str, log: RebalanceLog):
        super().__init__(message)
        self.log = log


def rebalance(cfg: RunConfig, feedback: bool = True) -> RebalanceLog:
    """Closed-loop compensation of a drifting detector offset.

    Each window the mean output voltage is measured. If it leaves the
    deadband, the offset is attributed to the carrier-arm sensitivity, the
    balance is re-solved with that effective sensitivity and the modulation
    index is updated. ``|offset|`` right after each correction must stay
    inside the min-entropy offset tolerance.
    """
    drift = cfg.drift
    noise, det, mod = cfg.noise, cfg.detection, cfg.modulator
    tol = entropy.delta_tolerance(
        entropy.EntropyInputs.from_noise(noise, cfg.adc, cfg.run.e_bound_multiplier))
    m = optics.balance_solve(det, mod.S, mod.mu0)
    s2_model = det.s2
    log = RebalanceLog(tol, m)
    deadband = drift.deadband_sigmas * math.sqrt(noise.sigma_m2 / drift.window_samples)
    ramp = np.arange(drift.window_samples) / drift.window_samples
    base = dataclasses.replace(noise, delta_dc=0.0)

    for w in range(drift.windows):
        last_good = m
        current = dataclasses.replace(mod, m=m)
        v_imb = imbalance_offset(current, det, noise)
        dc_start = drift.initial_offset + drift.rate * w
        dc_end = dc_start + drift.rate
        trace = signal.simulate_trace(base, drift.window_samples, cfg.seed,
                                      offset=v_imb, stream=STREAM_DRIFT + w)
        samples = trace.samples + noise.delta_dc + dc_start + drift.rate * ramp
        measured = float(np.mean(samples))
        before = noise.delta_dc + dc_end + v_imb
        corrected = feedback and abs(measured) > deadband
        if corrected:
            n2 = optics.arm_photon_numbers(current, det).n2
            s2_new = s2_model - measured * math.sqrt(mod.mu0) / (noise.sigma_q * n2)
            try:
                model = dataclasses.replace(det, s2=s2_new)
                m_new = optics.balance_solve(model, mod.S, mod.mu0)
            except (NoBalanceError, DomainError) as exc:
                raise RebalanceError(
                    f"window {w}: offset {measured:.6g} V is beyond the correctable range "
                    f"({exc}); last good m={m:.12g}", log) from None
            m, s2_model = m_new, s2_new
            v_imb = imbalance_offset(dataclasses.replace(mod, m=m), det, noise)
        after = noise.delta_dc + dc_end + v_imb
        log.steps.append(RebalanceStep(w, dc_end, measured, before, corrected, m, after, tol))
        if feedback and abs(after) >= tol:
            raise RebalanceError(
                f"window {w}: offset {after:.6g} V after correction exceeds tolerance {tol:.6g} V; "
                f"last good m={last_good:.12g}", log)
    return log


# --- full run -----------------------------------------------------------------

@dataclass
class PipelineReport:
    balance: Optional[BalanceResult] = None
    analysis: Optional[AnalysisReport] = None
    extractor: Optional[entropy.ExtractorParams] = None
    certified: Optional[bool] = None
    output_bits: Optional[int] = None
    battery: Optional[stattests.BatteryReport] = None
    throughput: Optional[float] = None

    def to_text(self) -> str:
        parts = []
        if self.balance is not None:
            b = self.balance
            parts.append("[balance]\n"
                         f"m: {b.m:.12g}\nresidual: {b.residual:.3e}\n"
                         f"x0: {b.x0:.3e}\noffset_V: {b.offset_v:.3e}\n")
        if self.analysis is not None:
            parts.append("[entropy]\n" + self.analysis.to_text())
        if self.extractor is not None:
            e = self.extractor
            h = self.analysis.entropy.h_min if self.analysis else None
            parts.append("[extractor]\n"
                         f"k: {e.k}\nl: {e.l}\nepsilon: {e.epsilon!r}\nn_bits: {e.n_bits}\n"
                         + (f"bound: {entropy.inequality_text(e, h)}\n" if h is not None else "")
                         + f"certified: {self.certified}\noutput_bits: {self.output_bits}\n")
        if self.throughput is not None:
            parts.append(f"[throughput]\noutput_bit_per_s: {self.throughput:.6g}\n")
        if self.battery is not None:
            parts.append("[battery]\n" + self.battery.to_text())
        return "\n".join(parts)


def run_pipeline(cfg: RunConfig, run_battery: bool = True) -> PipelineReport:
    sim = simulate(cfg)
    ana = analyze(sim.lo_on, sim.lo_off, cfg.adc, cfg.run.lo_power_mw, cfg.run.e_bound_multiplier)
    ext = run_extraction(sim.lo_on_codes.samples, sim.seed, cfg.extractor, ana.entropy.h_min)
    rep = PipelineReport(sim.balance, ana, cfg.extractor, ext.certified, ext.nbits,
                         throughput=ext.throughput)
    if run_battery and ext.nbits >= stattests.MIN_BATTERY_BITS:
        rep.battery = stattests.run_battery(stattests.bits_from_bytes(ext.data.tobytes()))
    return rep
