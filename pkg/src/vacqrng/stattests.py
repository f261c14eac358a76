"""NIST SP 800-22 style randomness tests (eight-test subset).

Every test takes a 0/1 ``uint8`` array. Tests that produce two p-values
(cumulative sums, serial) keep both in ``p_values`` and report the one
farthest from 1/2 as ``p_value``, so the two-sided verdict band applies to
both at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import special

PASS_LOW = 0.025
PASS_HIGH = 0.975
MIN_BATTERY_BITS = 10_000
RECOMMENDED_BATTERY_BITS = 1_000_000


def in_band(p: float) -> bool:
    return PASS_LOW <= p <= PASS_HIGH


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    test_name: str
    p_value: float
    verdict: str
    statistic: float
    parameters: Dict[str, float] = field(default_factory=dict)
    p_values: Tuple[float, ...] = ()

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _result(name: str, p_values: Sequence[float], statistic: float,
            **parameters) -> TestResult:
    ps = tuple(float(min(1.0, max(0.0, p))) for p in p_values)
    worst = max(ps, key=lambda p: abs(p - 0.5))
    return TestResult(name, worst, "pass" if in_band(worst) else "fail",
                      float(statistic), dict(parameters), ps)


def as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequence must contain only 0 and 1")
    return arr


def bits_from_string(s: str) -> np.ndarray:
    return np.frombuffer("".join(s.split()).encode("ascii"), np.uint8) - ord("0")


def bits_from_bytes(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, np.uint8))


def _require(bits: np.ndarray, minimum: int, name: str):
    if len(bits) < minimum:
        raise ValueError(f"{name} needs at least {minimum} bits, got {len(bits)}")


def igamc(a: float, x: float) -> float:
    """Regularised upper incomplete gamma ``Q(a, x)``."""
    return float(special.gammaincc(a, x))


def frequency_test(bits) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "frequency test")
    n = len(x)
    s_n = 2 * int(x.sum()) - n
    s_obs = abs(s_n) / math.sqrt(n)
    return _result("Frequency", [math.erfc(s_obs / math.sqrt(2))], s_obs, n=n)


def block_frequency_test(bits, block_size: int = 128) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "block frequency test")
    if block_size < 1 or block_size > len(x):
        raise ValueError(f"block size {block_size} invalid for {len(x)} bits")
    n_blocks = len(x) // block_size
    props = x[: n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(np.sum((props - 0.5) ** 2))
    return _result("BlockFrequency", [igamc(n_blocks / 2, chi2 / 2)], chi2,
                   block_size=block_size, blocks=n_blocks)


def runs_test(bits) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "runs test")
    n = len(x)
    pi = float(x.mean())
    tau = 2.0 / math.sqrt(n)
    if abs(pi - 0.5) >= tau:
        # frequency prerequisite failed; the runs statistic is not meaningful
        return _result("Runs", [0.0], float("nan"), n=n, pi=pi, prerequisite_failed=1)
    v_obs = 1 + int(np.count_nonzero(x[1:] != x[:-1]))
    num = abs(v_obs - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    return _result("Runs", [math.erfc(num / den)], v_obs, n=n, pi=pi)


# (block length M, class lower edge, class upper edge, class probabilities)
_LONGEST_RUN_TABLES = (
    (750_000, 10_000, 10, 16,
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, 9, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, 4, (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    """Length of the longest run of ones in each row."""
    n_rows, width = blocks.shape
    padded = np.zeros((n_rows, width + 2), np.int8)
    padded[:, 1:-1] = blocks
    edges = np.diff(padded, axis=1)
    rows_s, starts = np.nonzero(edges == 1)
    rows_e, ends = np.nonzero(edges == -1)
    best = np.zeros(n_rows, np.int64)
    np.maximum.at(best, rows_s, ends - starts)
    return best


def longest_run_test(bits) -> TestResult:
    x = as_bits(bits)
    _require(x, 128, "longest run test")
    n = len(x)
    for min_n, m, lo, hi, probs in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    n_blocks = n // m
    runs = _longest_runs(x[: n_blocks * m].reshape(n_blocks, m))
    nu = np.bincount(np.clip(runs, lo, hi) - lo, minlength=hi - lo + 1)
    expected = n_blocks * np.asarray(probs)
    chi2 = float(np.sum((nu - expected) ** 2 / expected))
    k = len(probs) - 1
    return _result("LongestRun", [igamc(k / 2, chi2 / 2)], chi2,
                   block_size=m, blocks=n_blocks)


def _cdiv(a: int, b: int) -> int:
    """Integer division truncating toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _cusum_p(n: int, z: int) -> float:
    phi = special.ndtr
    rn = math.sqrt(n)
    k1 = np.arange(_cdiv(_cdiv(-n, z) + 1, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1)
    k2 = np.arange(_cdiv(_cdiv(-n, z) - 3, 4), _cdiv(_cdiv(n, z) - 1, 4) + 1)
    s1 = np.sum(phi((4 * k1 + 1) * z / rn) - phi((4 * k1 - 1) * z / rn))
    s2 = np.sum(phi((4 * k2 + 3) * z / rn) - phi((4 * k2 + 1) * z / rn))
    return float(1.0 - s1 + s2)


def cumulative_sums_test(bits) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "cumulative sums test")
    n = len(x)
    steps = 2 * x.astype(np.int64) - 1
    z_fwd = int(np.max(np.abs(np.cumsum(steps))))
    z_rev = int(np.max(np.abs(np.cumsum(steps[::-1]))))
    return _result("CumulativeSums", [_cusum_p(n, z_fwd), _cusum_p(n, z_rev)],
                   max(z_fwd, z_rev), z_forward=z_fwd, z_reverse=z_rev)


def spectral_test(bits) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "spectral test")
    n = len(x)
    modulus = np.abs(np.fft.fft(2.0 * x - 1.0))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2
    n1 = int(np.count_nonzero(modulus < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return _result("FFT", [math.erfc(abs(d) / math.sqrt(2))], d, n1=n1, n0=n0)


def _pattern_counts(x: np.ndarray, m: int) -> np.ndarray:
    """Counts of every overlapping m-bit pattern, wrapping around the end."""
    if m == 0:
        return np.array([len(x)])
    ext = np.concatenate([x, x[: m - 1]]).astype(np.int64)
    n = len(x)
    vals = np.zeros(n, np.int64)
    for t in range(m):
        vals = (vals << 1) | ext[t: t + n]
    return np.bincount(vals, minlength=1 << m)


def approximate_entropy_test(bits, m: int = 2) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "approximate entropy test")
    if m < 1:
        raise ValueError(f"block length m must be >= 1, got {m}")
    n = len(x)

    def phi(block):
        c = _pattern_counts(x, block) / n
        c = c[c > 0]
        return float(np.sum(c * np.log(c)))

    ap_en = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2) - ap_en)
    return _result("ApproximateEntropy", [igamc(2 ** (m - 1), chi2 / 2)], chi2,
                   m=m, ap_en=ap_en)


def serial_test(bits, m: int = 2) -> TestResult:
    x = as_bits(bits)
    _require(x, 100, "serial test")
    if m < 2:
        raise ValueError(f"block length m must be >= 2, got {m}")
    n = len(x)

    def psi2(block):
        if block <= 0:
            return 0.0
        counts = _pattern_counts(x, block).astype(float)
        return (2 ** block / n) * float(np.sum(counts ** 2)) - n

    p_m, p_m1, p_m2 = psi2(m), psi2(m - 1), psi2(m - 2)
    del1 = p_m - p_m1
    del2 = p_m - 2 * p_m1 + p_m2
    p1 = igamc(2 ** (m - 2), del1 / 2)
    p2 = igamc(2 ** (m - 3), del2 / 2)
    return _result("Serial", [p1, p2], del1, m=m, del2=del2)


@dataclass
class BatteryReport:
    results: List[TestResult]
    input_length: int
    notes: List[str] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.results)

    def to_text(self) -> str:
        lines = [f"input_length: {self.input_length}",
                 f"overall: {'pass' if self.overall else 'fail'}"]
        lines += [f"note: {note}" for note in self.notes]
        for r in self.results:
            ps = ", ".join(f"{p:.6f}" for p in r.p_values)
            lines.append(f"{r.test_name}: p={r.p_value:.6f} ({ps}) "
                         f"statistic={r.statistic:.6g} {r.verdict}")
        return "\n".join(lines) + "\n"

    def to_table(self, sep: str = ",") -> str:
        rows = [sep.join(("test_name", "statistic", "p_value", "verdict"))]
        for r in self.results:
            rows.append(sep.join((r.test_name, repr(r.statistic), repr(r.p_value), r.verdict)))
        return "\n".join(rows) + "\n"


def run_battery(bits) -> BatteryReport:
    """All eight tests at their default parameters."""
    x = as_bits(bits)
    if len(x) < MIN_BATTERY_BITS:
        raise ValueError(f"battery needs at least {MIN_BATTERY_BITS} bits, got {len(x)}")
    notes = []
    if len(x) < RECOMMENDED_BATTERY_BITS:
        notes.append(f"reduced power: {len(x)} bits < recommended {RECOMMENDED_BATTERY_BITS}")
    results = [
        frequency_test(x),
        block_frequency_test(x),
        runs_test(x),
        longest_run_test(x),
        cumulative_sums_test(x),
        spectral_test(x),
        approximate_entropy_test(x),
        serial_test(x),
    ]
    return BatteryReport(results, len(x), notes)
