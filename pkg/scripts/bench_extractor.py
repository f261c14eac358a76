"""Toeplitz extractor throughput over a few block geometries."""

import argparse

import numpy as np

from vacqrng import extract


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=1 << 16)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--geometry", nargs="+", default=["1024x512", "1024x256", "2048x1024", "512x256"])
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'k x l':>10}  {'out Mbit/s':>10}  {'in Msample/s (n=8)':>18}")
    for geom in args.geometry:
        k, l = map(int, geom.split("x"))
        ex = extract.ToeplitzExtractor(extract.ToeplitzSeed.random(k, l, rng))
        rate = extract.measure_throughput(ex, n_blocks=args.blocks, repeats=args.repeats)
        print(f"{geom:>10}  {rate / 1e6:10.1f}  {rate * k / l / 8 / 1e6:18.1f}")


if __name__ == "__main__":
    main()
