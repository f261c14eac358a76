"""Sideband optics of the phase-modulated carrier and the two detector arms.

Phase modulation of a carrier with ``mu0`` photons spreads it over the modes
``k = -S..S``; the fraction landing in mode ``k`` is ``d^S_{0k}(beta)**2``.
The spectral filter sends the sidebands (plus a leaked carrier fraction
``vartheta``) to arm 1 and the remaining carrier to arm 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, NoBalanceError

# Rescale threshold for the downward recurrence; values grow towards k = 0.
_BIG = 1e100


@dataclass(frozen=True)
class ModulatorConfig:
    mu0: float = 3.12e9
    S: int = 3
    m: float = 0.0
    theta: float = 0.0
    Omega: float = 4.2e9  # Hz, metadata only

    def __post_init__(self):
        if not self.mu0 > 0:
            raise DomainError(f"mu0 must be > 0, got {self.mu0}", "mu0")
        if int(self.S) != self.S or self.S < 1:
            raise DomainError(f"S must be an integer >= 1, got {self.S}", "S")
        if not 0 <= self.m <= 2 * (self.S + 0.5):
            raise DomainError(f"m must lie in [0, {2 * (self.S + 0.5)}], got {self.m}", "m")


@dataclass(frozen=True)
class DetectionConfig:
    eta_sb: float = 10 ** -0.28
    eta_c: float = 10 ** -0.33
    vartheta: float = 1e-4
    s1: float = 0.87
    s2: float = 0.88

    def __post_init__(self):
        if not 0 < self.eta_sb <= 1:
            raise DomainError(f"eta_sb must lie in (0, 1], got {self.eta_sb}", "eta_sb")
        if not 0 < self.eta_c <= 1:
            raise DomainError(f"eta_c must lie in (0, 1], got {self.eta_c}", "eta_c")
        if not 0 <= self.vartheta < 1:
            raise DomainError(f"vartheta must lie in [0, 1), got {self.vartheta}", "vartheta")
        if not self.s1 > 0:
            raise DomainError(f"s1 must be > 0, got {self.s1}", "s1")
        if not self.s2 > 0:
            raise DomainError(f"s2 must be > 0, got {self.s2}", "s2")

    @property
    def s_eff(self) -> float:
        """Single effective sensitivity, the mean of the two arms."""
        return 0.5 * (self.s1 + self.s2)


@dataclass(frozen=True)
class SidebandState:
    amplitudes: np.ndarray  # complex, index i <-> mode k = i - S

    @property
    def S(self) -> int:
        return (len(self.amplitudes) - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.S, self.S + 1)

    @property
    def photon_numbers(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, k: int) -> complex:
        if abs(k) > self.S:
            raise DomainError(f"mode {k} outside [-{self.S}, {self.S}]")
        return complex(self.amplitudes[k + self.S])


@dataclass(frozen=True)
class ArmPhotonNumbers:
    n1: float
    n2: float


def wigner_d_row(S: int, beta: float) -> np.ndarray:
    """All elements ``d^S_{0k}(beta)`` for ``k = -S..S``.

    Downward three-term recurrence in ``k`` started from ``k = S`` (where the
    upper neighbour vanishes identically), normalised by ``sum_k d**2 = 1``.
    The starting element ``d^S_{0S} = sqrt((2S)!)/S! (sin(beta)/2)**S`` is
    positive on ``(0, pi)``, which fixes the overall sign.
    """
    if S < 0 or int(S) != S:
        raise DomainError(f"S must be a non-negative integer, got {S}")
    if not 0.0 <= beta <= math.pi:
        raise DomainError(f"beta must lie in [0, pi], got {beta}")
    S = int(S)
    row = np.zeros(2 * S + 1)
    sin_b = math.sin(beta)
    if S == 0 or sin_b == 0.0:
        row[S] = 1.0 if S == 0 or beta < 1.0 else (-1.0) ** S
        return row

    cot_b = math.cos(beta) / sin_b
    d = np.zeros(S + 2)  # d[k] for k = 0..S+1, d[S+1] = 0
    d[S] = 1.0
    for k in range(S, 0, -1):
        up = math.sqrt((S - k) * (S + k + 1)) * d[k + 1]
        d[k - 1] = (2.0 * k * cot_b * d[k] - up) / math.sqrt((S + k) * (S - k + 1))
        if abs(d[k - 1]) > _BIG:
            d[k - 1 :] /= _BIG
    pos = d[: S + 1] / np.max(np.abs(d))
    norm = math.sqrt(pos[0] ** 2 + 2.0 * float(np.dot(pos[1:], pos[1:])))
    pos = pos / norm
    row[S:] = pos
    signs = np.where(np.arange(1, S + 1) % 2 == 0, 1.0, -1.0)
    row[:S] = (signs * pos[1:])[::-1]
    return row


def wigner_d(S: int, k: int, beta: float) -> float:
    """Wigner d-function element ``d^S_{0k}(beta)``."""
    if abs(k) > S:
        raise DomainError(f"|k| = {abs(k)} exceeds S = {S}")
    return float(wigner_d_row(S, beta)[k + S])


def beta_from_index(m: float, S: int) -> float:
    """Rotation angle produced by modulation index ``m`` for sideband order ``S``."""
    limit = 2.0 * (S + 0.5)
    if not 0.0 <= m <= limit:
        raise DomainError(f"modulation index {m} outside [0, {limit}]: no real beta")
    c = 1.0 - 0.5 * (m / (S + 0.5)) ** 2
    return math.acos(min(1.0, max(-1.0, c)))


def index_from_beta(beta: float, S: int) -> float:
    """Inverse of :func:`beta_from_index`."""
    if not 0.0 <= beta <= math.pi:
        raise DomainError(f"beta must lie in [0, pi], got {beta}")
    # 1 - cos(beta) = 2 sin^2(beta/2) avoids cancellation near beta = 0
    return 2.0 * (S + 0.5) * math.sin(0.5 * beta)


def sideband_state(cfg: ModulatorConfig) -> SidebandState:
    beta = beta_from_index(cfg.m, cfg.S)
    k = np.arange(-cfg.S, cfg.S + 1)
    amps = math.sqrt(cfg.mu0) * wigner_d_row(cfg.S, beta) * np.exp(-1j * k * cfg.theta)
    return SidebandState(amps)


def _carrier_fraction(S: int, beta: float) -> float:
    return wigner_d_row(S, beta)[S] ** 2


def _arms(mu0: float, det: DetectionConfig, d00_sq: float) -> ArmPhotonNumbers:
    kept = (1.0 - det.vartheta) * d00_sq
    return ArmPhotonNumbers(
        n1=mu0 * det.eta_sb * (1.0 - kept),
        n2=mu0 * det.eta_c * kept,
    )


def arm_photon_numbers(cfg: ModulatorConfig, det: DetectionConfig) -> ArmPhotonNumbers:
    """Mean photon numbers at the sideband arm (n1) and the carrier arm (n2)."""
    beta = beta_from_index(cfg.m, cfg.S)
    return _arms(cfg.mu0, det, _carrier_fraction(cfg.S, beta))


def first_carrier_zero(S: int) -> float:
    """Smallest ``beta > 0`` where ``d^S_{00}(beta)`` vanishes."""
    step = math.pi / (8 * (S + 1))
    lo = 0.0
    f_lo = 1.0
    while lo < math.pi:
        hi = min(math.pi, lo + step)
        f_hi = wigner_d_row(S, hi)[S]
        if f_hi == 0.0:
            return hi
        if f_hi < 0.0 < f_lo:
            break
        lo, f_lo = hi, f_hi
    else:  # pragma: no cover - every P_S with S >= 1 has a root in (-1, 1)
        raise DomainError(f"no zero of d00 found for S={S}")
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            return hi
        if wigner_d_row(S, mid)[S] > 0.0:
            lo = mid
        else:
            hi = mid


def balance_target(det: DetectionConfig) -> float:
    """Carrier fraction ``|d00|**2`` at which ``s1*n1 == s2*n2``."""
    a = det.s1 * det.eta_sb
    return a / ((1.0 - det.vartheta) * (a + det.s2 * det.eta_c))


def balance_solve(det: DetectionConfig, S: int, mu0: float) -> float:
    """Smallest modulation index that balances the two photocurrents.

    Bisects on ``beta`` over ``[0, first zero of d00]``, where ``d00**2``
    falls monotonically from 1 to 0, then maps ``beta`` back to ``m``.
    """
    if not mu0 > 0:
        raise DomainError(f"mu0 must be > 0, got {mu0}")
    t = balance_target(det)
    if not 0.0 < t <= 1.0:
        raise NoBalanceError(
            f"balance needs carrier fraction {t:.6g}, outside (0, 1]"
        )

    def imbalance(beta):
        arms = _arms(mu0, det, _carrier_fraction(S, beta))
        return det.s1 * arms.n1 - det.s2 * arms.n2

    lo, hi = 0.0, first_carrier_zero(S)
    if imbalance(lo) >= 0.0:
        return 0.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if imbalance(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    beta = lo if abs(imbalance(lo)) <= abs(imbalance(hi)) else hi
    return index_from_beta(beta, S)


def balance_residual(cfg: ModulatorConfig, det: DetectionConfig) -> float:
    """Relative photocurrent imbalance ``|s1 n1 - s2 n2| / (s1 n1)``."""
    arms = arm_photon_numbers(cfg, det)
    return abs(det.s1 * arms.n1 - det.s2 * arms.n2) / (det.s1 * arms.n1)


def quadrature_mean(
    n: ArmPhotonNumbers, s: Union[float, Sequence[float]], mu0: float
) -> float:
    """Normalised quadrature ``(n1 - n2) * s / (2 sqrt(mu0))``.

    ``s`` may also be a per-arm pair ``(s1, s2)``; the numerator is then the
    photocurrent difference ``s1*n1 - s2*n2``.
    """
    if not mu0 > 0:
        raise DomainError(f"mu0 must be > 0, got {mu0}")
    if np.ndim(s) == 0:
        diff = (n.n1 - n.n2) * float(s)
    else:
        s1, s2 = s
        diff = s1 * n.n1 - s2 * n.n2
    return diff / (2.0 * math.sqrt(mu0))
