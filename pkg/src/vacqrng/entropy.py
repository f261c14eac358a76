"""Worst-case conditional min-entropy of the digitised signal and extractor sizing.

An adversary is assumed to know (or set) the classical noise within
``|e| <= e_max = multiplier * sigma_e + |delta_dc|``. The guessing probability
of an ADC code is the larger of the saturated edge bin (``A``) and the
widest inner bin at the peak of the quantum Gaussian (``B``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy import special

from .errors import DomainError, InsufficientEntropyError
from .signal import AdcConfig, NoiseModel

DEFAULT_E_MULTIPLIER = 5.0
H_MIN_QUOTED = 5.85
DELTA_TOLERANCE_QUOTED = 0.086
EPSILON_DEFAULT = 2.0 ** -100


@dataclass(frozen=True)
class EntropyInputs:
    sigma_q: float
    sigma_e: float
    delta_dc: float = 0.0
    adc: AdcConfig = AdcConfig()
    e_bound_multiplier: float = DEFAULT_E_MULTIPLIER

    @classmethod
    def from_noise(cls, noise: NoiseModel, adc: AdcConfig,
                   e_bound_multiplier: float = DEFAULT_E_MULTIPLIER) -> "EntropyInputs":
        return cls(noise.sigma_q, noise.sigma_e, noise.delta_dc, adc, e_bound_multiplier)

    @property
    def e_max(self) -> float:
        return self.e_bound_multiplier * self.sigma_e + abs(self.delta_dc)


@dataclass(frozen=True)
class EntropyReport:
    h_min: float
    a_term: float
    b_term: float
    dominant: str
    delta_tolerance: float
    e_max: float
    n_bits: int

    def to_text(self) -> str:
        rows = [
            ("h_min_bits_per_sample", f"{self.h_min:.12g}"),
            ("a_term", f"{self.a_term:.12g}"),
            ("b_term", f"{self.b_term:.12g}"),
            ("dominant", self.dominant),
            ("e_max_V", f"{self.e_max:.12g}"),
            ("delta_tolerance_V", f"{self.delta_tolerance:.12g}"),
            ("n_bits", str(self.n_bits)),
        ]
        return "".join(f"{k}: {v}\n" for k, v in rows)


def _check(inputs: EntropyInputs):
    if not inputs.sigma_q > 0:
        raise DomainError(f"sigma_q must be > 0, got {inputs.sigma_q}")
    if inputs.sigma_e < 0:
        raise DomainError(f"sigma_e must be >= 0, got {inputs.sigma_e}")


def edge_term(inputs: EntropyInputs) -> float:
    """``A = (erf[(e_max - R + 3 delta/2) / (sqrt2 sigma_q)] + 1) / 2``."""
    adc = inputs.adc
    z = (inputs.e_max - adc.r_half + 1.5 * adc.delta) / (math.sqrt(2.0) * inputs.sigma_q)
    # erfc(-z)/2 == (erf(z)+1)/2 without cancellation for negative z
    return 0.5 * float(special.erfc(-z))


def peak_term(inputs: EntropyInputs) -> float:
    """``B = erf(delta / (2 sqrt2 sigma_q))``."""
    return float(special.erf(inputs.adc.delta / (2.0 * math.sqrt(2.0) * inputs.sigma_q)))


def delta_tolerance(inputs: EntropyInputs) -> float:
    """Largest ``|delta_dc|`` for which the peak term still dominates.

    ``inputs.delta_dc`` is ignored. Returns 0 when the edge term already
    dominates at zero offset.
    """
    _check(inputs)
    base = replace(inputs, delta_dc=0.0)
    b = peak_term(base)

    def excess(dc):
        return edge_term(replace(base, delta_dc=dc)) - b

    if excess(0.0) >= 0.0:
        return 0.0
    lo, hi = 0.0, inputs.adc.r_half + 10.0 * inputs.sigma_q
    for _ in range(60):
        if excess(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        raise DomainError("edge term never reaches the peak term")
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return lo
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid


def min_entropy(inputs: EntropyInputs) -> EntropyReport:
    """Conditional min-entropy per sample, ``-log2 max(A, B)`` clamped to ``[0, n]``."""
    _check(inputs)
    a = edge_term(inputs)
    b = peak_term(inputs)
    p_guess = max(a, b)
    n = inputs.adc.n_bits
    h = -math.log2(p_guess) if p_guess > 0 else float(n)
    h = min(max(h, 0.0), float(n))
    return EntropyReport(
        h_min=h,
        a_term=a,
        b_term=b,
        dominant="A" if a > b else "B",
        delta_tolerance=delta_tolerance(inputs),
        e_max=inputs.e_max,
        n_bits=n,
    )


@dataclass(frozen=True)
class ExtractorParams:
    k: int = 1024
    l: int = 512
    epsilon: float = EPSILON_DEFAULT
    n_bits: int = 8

    def __post_init__(self):
        if self.k <= 0 or self.k % 8:
            raise DomainError(f"k must be a positive multiple of 8, got {self.k}", "k")
        if self.l <= 0 or self.l % 8:
            raise DomainError(f"l must be a positive multiple of 8, got {self.l}", "l")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}", "epsilon")

    @property
    def samples_per_block(self) -> int:
        return self.k // self.n_bits


def leftover_hash_bound(h_min: float, n_bits: int, k: int, epsilon: float) -> float:
    """Upper bound (exclusive) on output bits: ``k h_min / n - 2 log2(1/eps)``."""
    return k * h_min / n_bits + 2.0 * math.log2(epsilon)


def admissible(params: ExtractorParams, h_min: float) -> bool:
    return params.l < leftover_hash_bound(h_min, params.n_bits, params.k, params.epsilon)


def inequality_text(params: ExtractorParams, h_min: float) -> str:
    bound = leftover_hash_bound(h_min, params.n_bits, params.k, params.epsilon)
    rel = "<" if params.l < bound else ">="
    return (f"l = {params.l} {rel} k*H_min/n - 2*log2(1/eps) = "
            f"{params.k}*{h_min:.6g}/{params.n_bits} - {-2.0 * math.log2(params.epsilon):.6g}"
            f" = {bound:.6g}")


def size_extractor(h_min: float, n_bits: int, k: int = 1024,
                   epsilon: float = EPSILON_DEFAULT) -> ExtractorParams:
    """Largest byte-aligned output length strictly inside the leftover-hash bound."""
    if not 0 < h_min <= n_bits:
        raise DomainError(f"h_min must lie in (0, {n_bits}], got {h_min}")
    if k <= 0 or k % 8:
        raise DomainError(f"k must be a positive multiple of 8, got {k}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    bound = leftover_hash_bound(h_min, n_bits, k, epsilon)
    l = 8 * math.floor(bound / 8)
    if l >= bound:
        l -= 8
    if l <= 0:
        raise InsufficientEntropyError(
            f"leftover-hash bound {bound:.6g} bits leaves no byte-aligned output "
            f"(k={k}, h_min={h_min:.6g}, n={n_bits}, eps={epsilon:.3g})")
    return ExtractorParams(k, l, epsilon, n_bits)
