"""Seeded Toeplitz-hash randomness extractor.

The ``l x k`` binary Toeplitz matrix is ``T[i, j] = seed[j - i + l - 1]``, so
the seed lists the first column bottom-to-top followed by the rest of the
first row. Output is ``y = T x`` over GF(2). Bits are packed MSB-first; ADC
codes enter a raw block MSB-first, oldest sample first.

The fast path precomputes, for every input byte position, the 256 possible
XOR-combinations of its eight matrix columns, so one block costs ``k/8``
table lookups of ``l`` bits each.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numba
import numpy as np

from .entropy import ExtractorParams

_CHUNK = 1024  # blocks per pass; keeps output accumulators in L2
_GROUP = 8  # byte positions folded per accumulator load


class ShortStreamWarning(UserWarning):
    """The input stream did not fill a single raw block."""


@dataclass(frozen=True)
class ToeplitzSeed:
    bits: np.ndarray  # uint8 0/1, length k + l - 1
    k: int
    l: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        object.__setattr__(self, "bits", bits)
        if self.k < 1 or self.l < 1:
            raise ValueError(f"k and l must be positive, got k={self.k}, l={self.l}")
        if bits.ndim != 1 or len(bits) != self.k + self.l - 1:
            raise ValueError(
                f"seed needs exactly k + l - 1 = {self.k + self.l - 1} bits, got {bits.size}")
        if np.any(bits > 1):
            raise ValueError("seed bits must be 0 or 1")

    @classmethod
    def from_row_col(cls, first_col: Sequence[int], first_row: Sequence[int]) -> "ToeplitzSeed":
        first_col = list(first_col)
        first_row = list(first_row)
        if first_col[0] != first_row[0]:
            raise ValueError("first row and first column disagree on T[0, 0]")
        bits = first_col[:0:-1] + first_row
        return cls(np.array(bits, np.uint8), len(first_row), len(first_col))

    @classmethod
    def random(cls, k: int, l: int, rng: np.random.Generator) -> "ToeplitzSeed":
        return cls(rng.integers(0, 2, k + l - 1, dtype=np.uint8), k, l)

    def matrix(self) -> np.ndarray:
        idx = np.arange(self.k)[None, :] - np.arange(self.l)[:, None] + self.l - 1
        return self.bits[idx]

    def packed(self) -> bytes:
        return np.packbits(self.bits).tobytes()


@dataclass(frozen=True)
class BitBlock:
    data: bytes  # packed MSB-first, zero padding in the last byte
    nbits: int

    def __post_init__(self):
        if len(self.data) != (self.nbits + 7) // 8:
            raise ValueError(
                f"{self.nbits} bits need {(self.nbits + 7) // 8} bytes, got {len(self.data)}")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "BitBlock":
        arr = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(arr).tobytes(), len(arr))

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, np.uint8))[: self.nbits]


@numba.njit(cache=True)
def _toeplitz_kernel(blocks, table, out):
    n_blocks, kb = blocks.shape
    n_words = table.shape[2]
    acc = np.empty(n_words, np.uint64)
    for c0 in range(0, n_blocks, _CHUNK):
        c1 = min(n_blocks, c0 + _CHUNK)
        for n in range(c0, c1):
            for w in range(n_words):
                out[n, w] = 0
        for g0 in range(0, kb, _GROUP):
            g1 = min(kb, g0 + _GROUP)
            for n in range(c0, c1):
                for w in range(n_words):
                    acc[w] = out[n, w]
                for p in range(g0, g1):
                    v = blocks[n, p]
                    for w in range(n_words):
                        acc[w] ^= table[p, v, w]
                for w in range(n_words):
                    out[n, w] = acc[w]


class ToeplitzExtractor:
    """Byte-table evaluation of ``T x`` for a fixed seed; needs ``k % 8 == 0``."""

    def __init__(self, seed: ToeplitzSeed):
        if seed.k % 8:
            raise ValueError(f"k must be a multiple of 8, got {seed.k}")
        self.seed = seed
        self.k, self.l = seed.k, seed.l
        self.out_bytes = (self.l + 7) // 8
        n_words = (self.l + 63) // 64
        # packed column j of T, padded to whole 64-bit words
        cols = np.zeros((self.k, n_words * 8), np.uint8)
        cols[:, : self.out_bytes] = np.packbits(seed.matrix().T, axis=1)
        cols = cols.view(np.uint64).reshape(self.k // 8, 8, n_words)
        values = np.arange(256)
        table = np.zeros((self.k // 8, 256, n_words), np.uint64)
        for b in range(8):
            mask = ((values >> (7 - b)) & 1).astype(bool)
            table[:, mask, :] ^= cols[:, b, None, :]
        self.table = table

    def blocks(self, raw: np.ndarray) -> np.ndarray:
        """Map raw blocks ``(N, k/8)`` uint8 to packed outputs ``(N, ceil(l/8))``."""
        raw = np.ascontiguousarray(raw, dtype=np.uint8)
        if raw.ndim != 2 or raw.shape[1] != self.k // 8:
            raise ValueError(f"expected raw blocks of shape (N, {self.k // 8}), got {raw.shape}")
        out = np.empty((raw.shape[0], self.table.shape[2]), np.uint64)
        _toeplitz_kernel(raw, self.table, out)
        return out.view(np.uint8)[:, : self.out_bytes]


def extract_block_naive(seed: ToeplitzSeed, block: BitBlock) -> BitBlock:
    """Bit-by-bit matrix-vector product; the reference for the fast path."""
    if block.nbits != seed.k:
        raise ValueError(f"input block has {block.nbits} bits, seed expects k = {seed.k}")
    s = seed.bits.tolist()
    x = block.bits().tolist()
    k, l = seed.k, seed.l
    y = []
    for i in range(l):
        acc = 0
        for j in range(k):
            acc ^= s[j - i + l - 1] & x[j]
        y.append(acc)
    return BitBlock.from_bits(y)


def extract_block(seed: ToeplitzSeed, block: BitBlock,
                  extractor: Optional[ToeplitzExtractor] = None) -> BitBlock:
    if block.nbits != seed.k:
        raise ValueError(f"input block has {block.nbits} bits, seed expects k = {seed.k}")
    if seed.k % 8:
        return extract_block_naive(seed, block)
    ex = extractor if extractor is not None else ToeplitzExtractor(seed)
    raw = np.frombuffer(block.data, np.uint8)[None, :]
    out = ex.blocks(raw)[0]
    if seed.l % 8:
        out = out.copy()
        out[-1] &= (0xFF << (8 - seed.l % 8)) & 0xFF
    return BitBlock(out.tobytes(), seed.l)


def pack_samples(codes: np.ndarray, n_bits: int) -> np.ndarray:
    """Concatenate ``n_bits``-wide codes MSB-first into packed bytes."""
    codes = np.asarray(codes)
    if n_bits == 8:
        return np.ascontiguousarray(codes, dtype=np.uint8)
    wide = codes.astype(">u2").view(np.uint8)
    bits = np.unpackbits(wide).reshape(-1, 16)[:, 16 - n_bits:]
    return np.packbits(bits.ravel())


def output_bits(samples: int, params: ExtractorParams) -> int:
    return (samples * params.n_bits // params.k) * params.l


def extract_stream(seed: ToeplitzSeed, samples: np.ndarray, params: ExtractorParams,
                   extractor: Optional[ToeplitzExtractor] = None) -> np.ndarray:
    """Hash consecutive ``k``-bit raw blocks of ADC codes; returns packed output bytes.

    Output holds ``floor(samples * n / k) * l`` bits; a trailing partial block
    is dropped.
    """
    if (seed.k, seed.l) != (params.k, params.l):
        raise ValueError(f"seed is {seed.k}->{seed.l}, params are {params.k}->{params.l}")
    if params.k % params.n_bits:
        raise ValueError(f"k = {params.k} is not a multiple of n_bits = {params.n_bits}")
    if params.l % 8:
        raise ValueError("stream output needs l to be a multiple of 8")
    samples = np.asarray(samples)
    per_block = params.k // params.n_bits
    n_blocks = len(samples) // per_block
    if n_blocks == 0:
        warnings.warn(
            f"{len(samples)} samples do not fill one {per_block}-sample block; no output",
            ShortStreamWarning, stacklevel=2)
        return np.zeros(0, np.uint8)
    raw = pack_samples(samples[: n_blocks * per_block], params.n_bits)
    ex = extractor if extractor is not None else ToeplitzExtractor(seed)
    return ex.blocks(raw.reshape(n_blocks, params.k // 8)).reshape(-1)


def measure_throughput(extractor: ToeplitzExtractor, n_blocks: int = 1 << 16,
                       repeats: int = 5, rng_seed: int = 0) -> float:
    """Best-of-``repeats`` output rate of :meth:`ToeplitzExtractor.blocks` in bit/s."""
    rng = np.random.default_rng(rng_seed)
    raw = rng.integers(0, 256, (n_blocks, extractor.k // 8), dtype=np.uint8)
    extractor.blocks(raw[:1])  # JIT warm-up
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        extractor.blocks(raw)
        best = min(best, time.perf_counter() - t0)
    return n_blocks * extractor.l / best


# --- seeds -----------------------------------------------------------------

def seed_from_entropy(material: bytes, k: int, l: int) -> ToeplitzSeed:
    """Take the first ``k + l - 1`` bits of ``material`` (MSB-first) as the seed."""
    nbits = k + l - 1
    need = (nbits + 7) // 8
    if len(material) < need:
        raise ValueError(f"seed material has {len(material)} bytes, need >= {need}")
    bits = np.unpackbits(np.frombuffer(bytes(material[:need]), np.uint8))[:nbits]
    return ToeplitzSeed(bits, k, l)


def _parse_seed_header(line: str) -> Tuple[int, int]:
    fields = dict(tok.split("=", 1) for tok in line.split()[1:])
    return int(fields["k"]), int(fields["l"])


def write_seed(path: Union[str, Path], seed: ToeplitzSeed) -> None:
    header = f"toeplitz k={seed.k} l={seed.l}\n".encode("ascii")
    Path(path).write_bytes(header + seed.packed())


def read_seed(path: Union[str, Path]) -> ToeplitzSeed:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = data[:nl].decode("ascii")
    if not header.startswith("toeplitz "):
        raise ValueError(f"{path}: not a Toeplitz seed file")
    k, l = _parse_seed_header(header)
    return seed_from_entropy(data[nl + 1:], k, l)
