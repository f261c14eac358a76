"""Independent oracles and shared fixtures."""

import math
from pathlib import Path

import mpmath
import numpy as np
import pytest

from vacqrng import stattests

FIXTURES = Path(__file__).parent / "fixtures"


def d_sum_formula(S, k, beta):
    """d^S_{0k}(beta) from the explicit factorial sum, in extended precision."""
    mpmath.mp.dps = 40
    b = mpmath.mpf(beta)
    c, s = mpmath.cos(b / 2), mpmath.sin(b / 2)
    pref = mpmath.sqrt(mpmath.factorial(S) ** 2 * mpmath.factorial(S + k) * mpmath.factorial(S - k))
    total = mpmath.mpf(0)
    for j in range(max(0, k), min(S, S + k) + 1):
        den = (mpmath.factorial(S + k - j) * mpmath.factorial(j)
               * mpmath.factorial(j - k) * mpmath.factorial(S - j))
        total += (-1) ** (j - k) * c ** (2 * S + k - 2 * j) * s ** (2 * j - k) / den
    return float(pref * total)


def legendre(S, x):
    p0, p1 = 1.0, x
    if S == 0:
        return p0
    for n in range(1, S):
        p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
    return p1


def pi_bits(n=100):
    """First ``n`` binary digits of pi (the leading '11' included)."""
    mpmath.mp.dps = n // 3 + 20
    return np.array([int(c) for c in bin(int(mpmath.floor(mpmath.pi * 2 ** (n - 2))))[2:]],
                    dtype=np.uint8)


@pytest.fixture
def no_length_floor(monkeypatch):
    """Let tests run on the short hand-worked sequences."""
    monkeypatch.setattr(stattests, "_require", lambda bits, minimum=0, name="": None)


def erf_oracle(x):
    mpmath.mp.dps = 50
    return mpmath.erf(mpmath.mpf(x))


def rel(a, b):
    return abs(a - b) / abs(b)


def isclose(a, b, tol):
    return math.isclose(a, b, rel_tol=0, abs_tol=tol)
