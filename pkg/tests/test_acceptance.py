"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import mpmath
import numpy as np
import pytest

from conftest import d_sum_formula, legendre, pi_bits
from test_stattests import LONGEST_RUN_128
from vacqrng import config, entropy, extract, optics, pipeline, signal
from vacqrng import stattests as T
from vacqrng.entropy import EntropyInputs, ExtractorParams
from vacqrng.extract import BitBlock, ToeplitzSeed

SIGMA_E2 = 5.49e-5
SIGMA_Q2 = 1.0051e-3


@pytest.fixture
def verdict(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, ok, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line

    return emit


def test_01_wigner_suite(verdict):
    t0 = time.perf_counter()
    norm_err = leg_err = 0.0
    for S in range(1, 21):
        for beta in np.arange(0.0, math.pi, 1e-2):
            row = optics.wigner_d_row(S, beta)
            norm_err = max(norm_err, abs(float(np.sum(row ** 2)) - 1.0))
            leg_err = max(leg_err, abs(row[S] - legendre(S, math.cos(beta))))
    oracle_err = 0.0
    for S in range(1, 11):
        for beta in np.linspace(0.05, math.pi - 0.05, 20):
            row = optics.wigner_d_row(S, beta)
            for k in range(-S, S + 1):
                oracle_err = max(oracle_err, abs(row[k + S] - d_sum_formula(S, k, beta)))
    elapsed = time.perf_counter() - t0
    ok = norm_err < 1e-12 and leg_err < 1e-12 and oracle_err < 1e-9 and elapsed < 10
    verdict(1, ok, f"norm {norm_err:.1e}, Legendre {leg_err:.1e}, sum-formula {oracle_err:.1e}, "
                   f"{elapsed:.2f} s")


def test_02_balance(verdict):
    det = optics.DetectionConfig(eta_sb=10 ** -0.28, eta_c=10 ** -0.33, vartheta=1e-4,
                                 s1=0.87, s2=0.88)
    mu0 = config.MU0_DEFAULT
    m = optics.balance_solve(det, 3, mu0)
    cfg = optics.ModulatorConfig(mu0=mu0, S=3, m=m)
    residual = optics.balance_residual(cfg, det)
    x0 = optics.quadrature_mean(optics.arm_photon_numbers(cfg, det), (det.s1, det.s2), mu0)
    ok = residual < 1e-9 and abs(x0) < 1e-9 * math.sqrt(mu0)
    verdict(2, ok, f"m* = {m:.10f}, residual {residual:.1e}, |x0|/sqrt(mu0) = "
                   f"{abs(x0) / math.sqrt(mu0):.1e}")


def test_03_noise_closure(verdict):
    n = 10 ** 6
    on = signal.simulate_trace(signal.NoiseModel(SIGMA_Q2, SIGMA_E2), n, seed=2024, stream=0)
    off = signal.simulate_trace(signal.NoiseModel(0.0, SIGMA_E2), n, seed=2024, stream=1)
    model = signal.calibrate_noise(on, off, 40.0)
    se_e = signal.variance_standard_error(SIGMA_E2, n)
    se_q = math.hypot(signal.variance_standard_error(SIGMA_Q2 + SIGMA_E2, n), se_e)
    z_e = abs(model.sigma_e2 - SIGMA_E2) / se_e
    z_q = abs(model.sigma_q2 - SIGMA_Q2) / se_q
    q_nominal = signal.qcnr(signal.NoiseModel(SIGMA_Q2, SIGMA_E2))
    q_fit = signal.qcnr(model)
    ok = z_e < 5 and z_q < 5 and abs(q_nominal - 12.63) <= 0.3 and abs(q_fit - 12.63) <= 0.3
    verdict(3, ok, f"sigma_e2 {z_e:.2f} SE, sigma_q2 {z_q:.2f} SE, QCNR {q_nominal:.3f} dB "
                   f"(recovered {q_fit:.3f}; 12.9 dB quoted)")


def test_04_linearity(verdict):
    powers = np.arange(5.0, 40.1, 5.0)
    variances = []
    for i, p in enumerate(powers):
        noise = signal.NoiseModel.from_power(signal.KAPPA_REF, p, SIGMA_E2)
        variances.append(np.var(signal.simulate_trace(noise, 10 ** 6, seed=400 + i).samples, ddof=1))
    variances = np.array(variances)
    slope, intercept = np.polyfit(powers, variances, 1)
    fitted = slope * powers + intercept
    r2 = 1 - np.sum((variances - fitted) ** 2) / np.sum((variances - variances.mean()) ** 2)
    rel = abs(intercept - SIGMA_E2) / SIGMA_E2
    ok = r2 > 0.999 and rel < 0.05
    verdict(4, ok, f"R^2 = {r2:.6f}, intercept {intercept:.4e} V^2 ({100 * rel:.2f}% off sigma_e2), "
                   f"slope {slope:.4e} V^2/mW")


def test_05_min_entropy(verdict):
    noise = signal.NoiseModel(SIGMA_Q2, SIGMA_E2)
    adc = signal.AdcConfig()
    inp = EntropyInputs.from_noise(noise, adc)
    rep = entropy.min_entropy(inp)

    mpmath.mp.dps = 50
    sq = mpmath.sqrt(mpmath.mpf(SIGMA_Q2))
    se = mpmath.sqrt(mpmath.mpf(SIGMA_E2))
    delta = mpmath.mpf("0.2") / 128
    b = mpmath.erf(delta / (2 * mpmath.sqrt(2) * sq))

    def a_of(dc):
        return (mpmath.erf((5 * se + dc - mpmath.mpf("0.2") + 3 * delta / 2)
                           / (mpmath.sqrt(2) * sq)) + 1) / 2

    h_oracle = -mpmath.log(max(a_of(0), b), 2)
    tol_oracle = mpmath.findroot(lambda dc: a_of(dc) - b, (0.05, 0.15), solver="anderson")
    tol = entropy.delta_tolerance(inp)
    h_err = abs(rep.h_min - float(h_oracle))
    t_err = abs(tol - float(tol_oracle))
    gap = rep.h_min - entropy.H_MIN_QUOTED
    ok = h_err < 1e-9 and abs(gap) < 0.2 and t_err < 1e-6
    verdict(5, ok, f"h_min {rep.h_min:.6f} bits (oracle err {h_err:.1e}; gap to 5.85 = {gap:+.4f}), "
                   f"delta_tolerance {tol:.6f} V (oracle err {t_err:.1e}; 0.086 V quoted)")


def test_06_operating_point(verdict):
    h_rec = entropy.min_entropy(EntropyInputs.from_noise(signal.NoiseModel(SIGMA_Q2, SIGMA_E2),
                                                         signal.AdcConfig())).h_min
    params = ExtractorParams(1024, 512, 2.0 ** -100, 8)
    bound_quoted = entropy.leftover_hash_bound(5.85, 8, 1024, 2.0 ** -100)
    bound_rec = entropy.leftover_hash_bound(h_rec, 8, 1024, 2.0 ** -100)
    l_max = entropy.size_extractor(5.85, 8).l
    ok = (entropy.admissible(params, 5.85) and entropy.admissible(params, h_rec) and l_max == 544
          and abs(bound_quoted - 548.8) < 1e-9)
    verdict(6, ok, f"512 < {bound_quoted:.1f} (h=5.85), 512 < {bound_rec:.1f} (h={h_rec:.4f}), "
                   f"l_max = {l_max}")


def test_07_extractor_correctness(verdict):
    rng = np.random.default_rng(7)
    mismatches = 0
    # 1000 (seed, block) pairs against the bit loop; 25 at full size, the rest mixed
    geometries = [(1024, 512)] * 25 + [(8 * int(rng.integers(1, 65)), int(rng.integers(1, 129)))
                                       for _ in range(975)]
    for k, l in geometries:
        seed = ToeplitzSeed.random(k, l, rng)
        block = BitBlock.from_bits(rng.integers(0, 2, k))
        mismatches += extract.extract_block(seed, block) != extract.extract_block_naive(seed, block)
    # every full-size pair also against a dense GF(2) product
    dense_mismatches = 0
    for _ in range(1000):
        seed = ToeplitzSeed.random(1024, 512, rng)
        x = rng.integers(0, 2, 1024)
        y = (seed.matrix().astype(np.int64) @ x) % 2
        ex = extract.ToeplitzExtractor(seed)
        dense_mismatches += not np.array_equal(
            extract.extract_block(seed, BitBlock.from_bits(x), ex).bits(), y)
        z = rng.integers(0, 2, 1024)
        fx = extract.extract_block(seed, BitBlock.from_bits(x), ex).bits()
        fz = extract.extract_block(seed, BitBlock.from_bits(z), ex).bits()
        fxz = extract.extract_block(seed, BitBlock.from_bits(x ^ z), ex).bits()
        dense_mismatches += not np.array_equal(fxz, fx ^ fz)
    params = ExtractorParams()
    seed = ToeplitzSeed.random(1024, 512, rng)
    ex = extract.ToeplitzExtractor(seed)
    codes = rng.integers(0, 256, 10 ** 4).astype(np.uint8)
    rate_failures = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", extract.ShortStreamWarning)
        for n in range(0, 10 ** 4 + 1):
            got = extract.extract_stream(seed, codes[:n], params, ex).size * 8
            rate_failures += got != (n * 8 // 1024) * 512 or got != extract.output_bits(n, params)
    ok = mismatches == 0 and dense_mismatches == 0 and rate_failures == 0
    verdict(7, ok, f"bit-loop mismatches {mismatches}/1000, dense+linearity failures "
                   f"{dense_mismatches}/2000, rate-identity failures {rate_failures}/10001")


def test_08_throughput(verdict):
    rng = np.random.default_rng(8)
    params = ExtractorParams()
    seed = ToeplitzSeed.random(1024, 512, rng)
    ex = extract.ToeplitzExtractor(seed)
    codes = rng.integers(0, 256, 128 << 16).astype(np.uint8)
    extract.extract_stream(seed, codes[:128], params, ex)
    best = math.inf
    for _ in range(5):
        t0 = time.perf_counter()
        out = extract.extract_stream(seed, codes, params, ex)
        best = min(best, time.perf_counter() - t0)
    rate = out.size * 8 / best
    verdict(8, rate >= 400e6, f"extract_stream {rate / 1e6:.0f} Mbit/s output (target 400)")


def _extracted_bits(seed, n_bits):
    cfg = config.load(None, [f"run.seed={seed}"])
    samples = math.ceil(n_bits / 512) * 128
    sim = pipeline.simulate(cfg, count=samples)
    data = extract.extract_stream(sim.seed, sim.lo_on_codes.samples, cfg.extractor)
    return T.bits_from_bytes(data.tobytes())[:n_bits]


def test_09_statistical_battery(verdict, monkeypatch):
    pi100 = pi_bits(100)
    s = T.bits_from_string
    cases = [
        (T.frequency_test(pi100).p_value, 0.109599),
        (T.block_frequency_test(pi100, 10).p_value, 0.706438),
        (T.runs_test(pi100).p_value, 0.500798),
        (T.spectral_test(pi100).p_value, 0.646355),
        (T.approximate_entropy_test(pi100, 2).p_value, 0.235301),
        (T.cumulative_sums_test(pi100).p_values[0], 0.219194),
        (T.cumulative_sums_test(pi100).p_values[1], 0.114866),
        (T.longest_run_test(s(LONGEST_RUN_128)).p_value, 0.180598),
    ]
    with monkeypatch.context() as mp:
        mp.setattr(T, "_require", lambda *a, **k: None)
        cases += [
            (T.frequency_test(s("1011010101")).p_value, 0.527089),
            (T.block_frequency_test(s("0110011010"), 3).p_value, 0.801252),
            (T.runs_test(s("1001101011")).p_value, 0.147232),
            (T.approximate_entropy_test(s("0100110101"), 3).p_value, 0.261961),
            (T.serial_test(s("0011011101"), 3).p_values[0], 0.808792),
            (T.serial_test(s("0011011101"), 3).p_values[1], 0.670320),
            (T.cumulative_sums_test(s("1011010111")).p_values[0], 0.4116588),
        ]
    worked_err = max(abs(g - e) for g, e in cases)

    passes = np.zeros(8, int)
    names = None
    for seed in range(1, 6):
        rep = T.run_battery(_extracted_bits(seed, 10 ** 6))
        names = [r.test_name for r in rep.results]
        passes += [r.passed for r in rep.results]
    majority = bool(np.all(passes >= 3))

    zero_fails = not T.frequency_test(np.zeros(10 ** 6, np.uint8)).passed

    in_band = 0
    for run in range(200):
        in_band += T.frequency_test(_extracted_bits(10_000 + run, 100_000)).passed
    fraction = in_band / 200

    ok = worked_err <= 1e-6 and majority and zero_fails and 0.90 <= fraction <= 0.99
    detail = ", ".join(f"{n} {p}/5" for n, p in zip(names, passes))
    verdict(9, ok, f"worked examples max err {worked_err:.1e} ({len(cases)} values); {detail}; "
                   f"all-zero fails frequency: {zero_fails}; uniformity pass fraction {fraction:.3f}")


def test_10_rebalance(verdict):
    cfg = config.load(None, ["drift.rate=0.01", "drift.windows=30", "drift.window_samples=10000"])
    log = pipeline.rebalance(cfg)
    worst = max(abs(s.offset_after) for s in log.steps if s.corrected)
    open_loop = pipeline.rebalance(cfg, feedback=False).max_after
    ok = log.corrections > 0 and all(abs(s.offset_after) < log.tolerance for s in log.steps)
    verdict(10, ok, f"{log.corrections} corrections, max |offset| after correction {worst:.4f} V "
                    f"< tolerance {log.tolerance:.4f} V (open loop reaches {open_loop:.3f} V)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
