import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import pi_bits
from vacqrng import stattests as T

LONGEST_RUN_128 = ("11001100000101010110110001001100111000000000001001001101010100010001"
                   "001111010110100000001101011111001100111001101101100010110010")

PI100 = pi_bits(100)
S = T.bits_from_string


# (test, input, kwargs, expected p-values)
WORKED = [
    ("freq-10", T.frequency_test, S("1011010101"), {}, [0.527089]),
    ("freq-pi", T.frequency_test, PI100, {}, [0.109599]),
    ("block-10", T.block_frequency_test, S("0110011010"), {"block_size": 3}, [0.801252]),
    ("block-pi", T.block_frequency_test, PI100, {"block_size": 10}, [0.706438]),
    ("runs-10", T.runs_test, S("1001101011"), {}, [0.147232]),
    ("runs-pi", T.runs_test, PI100, {}, [0.500798]),
    ("longest-128", T.longest_run_test, S(LONGEST_RUN_128), {}, [0.180598]),
    ("cusum-10", T.cumulative_sums_test, S("1011010111"), {}, [0.4116588, 0.4116588]),
    ("cusum-pi", T.cumulative_sums_test, PI100, {}, [0.219194, 0.114866]),
    ("fft-pi", T.spectral_test, PI100, {}, [0.646355]),
    ("apen-10", T.approximate_entropy_test, S("0100110101"), {"m": 3}, [0.261961]),
    ("apen-pi", T.approximate_entropy_test, PI100, {"m": 2}, [0.235301]),
    ("serial-10", T.serial_test, S("0011011101"), {"m": 3}, [0.808792, 0.670320]),
]


@pytest.mark.parametrize("name,fn,bits,kwargs,expected", WORKED, ids=[w[0] for w in WORKED])
def test_worked_examples(no_length_floor, name, fn, bits, kwargs, expected):
    res = fn(bits, **kwargs)
    got = res.p_values or (res.p_value,)
    assert len(got) == len(expected)
    for g, e in zip(got, expected):
        assert abs(g - e) <= 1e-6, (g, e)


def test_pi_bits_fixture():
    assert "".join(map(str, PI100[:16])) == "1100100100001111"


def test_longest_run_statistic(no_length_floor):
    assert T.longest_run_test(S(LONGEST_RUN_128)).statistic == pytest.approx(4.882605, abs=1e-6)


def test_frequency_examples():
    assert T.frequency_test(np.tile([0, 1], 50)).p_value == pytest.approx(1.0)
    res = T.frequency_test(np.ones(100, np.uint8))
    assert res.p_value == pytest.approx(math.erfc(10 / math.sqrt(2)), rel=1e-10)
    assert res.p_value < 2e-23 and res.verdict == "fail"


def test_too_short():
    with pytest.raises(ValueError):
        T.frequency_test(np.ones(99, np.uint8))
    with pytest.raises(ValueError):
        T.longest_run_test(np.ones(127, np.uint8))


def test_bad_bits():
    with pytest.raises(ValueError):
        T.frequency_test(np.full(200, 2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(128, 3000))
def test_p_values_in_unit_interval_and_complement(seed, n):
    bits = np.random.default_rng(seed).integers(0, 2, n).astype(np.uint8)
    for fn in (T.frequency_test, T.block_frequency_test, T.runs_test, T.longest_run_test,
               T.cumulative_sums_test, T.spectral_test, T.approximate_entropy_test,
               T.serial_test):
        res = fn(bits)
        assert all(0.0 <= p <= 1.0 for p in (res.p_value,) + res.p_values)
    assert T.frequency_test(1 - bits).p_value == T.frequency_test(bits).p_value


def test_verdict_band():
    assert T.in_band(0.025) and T.in_band(0.975)
    assert not T.in_band(0.99) and not T.in_band(0.01)


def test_two_sided_reporting():
    # serial reports the p-value farthest from one half
    res = T._result("x", [0.4, 0.99], 0.0)
    assert res.p_value == 0.99 and res.verdict == "fail"


@pytest.mark.parametrize("a,x", [(0.5, 0.1), (1.0, 2.0), (2.5, 7.3), (8.0, 3.0), (64.0, 80.0),
                                 (3.0, 1e-3), (0.5, 30.0)])
def test_igamc_against_mpmath(a, x):
    mpmath.mp.dps = 40
    ref = float(mpmath.gammainc(a, x, mpmath.inf, regularized=True))
    assert abs(T.igamc(a, x) - ref) <= 1e-10 * max(1.0, ref)


def test_erfc_against_mpmath():
    mpmath.mp.dps = 40
    for x in np.linspace(0, 8, 161):
        assert abs(math.erfc(x) - float(mpmath.erfc(x))) <= 1e-10


nistrng = pytest.importorskip("nistrng.sp800_22r1a")


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_cross_check_reference_implementation(seed):
    n = 20_000
    x = np.random.default_rng(seed).integers(0, 2, n).astype(np.int8)
    u = x.astype(np.uint8)
    pairs = [
        (nistrng.MonobitTest(), T.frequency_test(u)),
        (nistrng.FrequencyWithinBlockTest(), T.block_frequency_test(u, n // 99)),
        (nistrng.RunsTest(), T.runs_test(u)),
        (nistrng.LongestRunOnesInABlockTest(), T.longest_run_test(u[:6272])),
        (nistrng.DiscreteFourierTransformTest(), T.spectral_test(u)),
        (nistrng.ApproximateEntropyTest(), T.approximate_entropy_test(u, 2)),
    ]
    for ref, ours in pairs:
        assert abs(float(ref._execute(x.copy()).score) - ours.p_value) < 1e-6, type(ref).__name__
    # the reference reports the mean of the two p-values for these tests
    wide = x.astype(np.int64)
    cus = T.cumulative_sums_test(u)
    assert abs(float(nistrng.CumulativeSumsTest()._execute(wide).score) - np.mean(cus.p_values)) < 1e-6
    ser = T.serial_test(u, 4)
    assert abs(float(nistrng.SerialTest()._execute(x.copy()).score) - np.mean(ser.p_values)) < 1e-6


def test_battery_report():
    bits = np.random.default_rng(10).integers(0, 2, 10_000).astype(np.uint8)
    rep = T.run_battery(bits)
    assert len(rep.results) == 8
    assert rep.input_length == 10_000
    assert any("reduced" in n.lower() for n in rep.notes)
    table = rep.to_table().splitlines()
    assert table[0] == "test_name,statistic,p_value,verdict"
    assert len(table) == 9
    assert rep.overall == all(r.passed for r in rep.results)
    with pytest.raises(ValueError):
        T.run_battery(bits[:9_999])


def test_battery_all_zero_fails_frequency():
    rep = T.run_battery(np.zeros(10 ** 6, np.uint8))
    freq = rep.results[0]
    assert freq.test_name == "Frequency" and freq.verdict == "fail"
    assert not rep.overall


def test_bits_from_bytes():
    assert T.bits_from_bytes(b"\xa0").tolist() == [1, 0, 1, 0, 0, 0, 0, 0]
