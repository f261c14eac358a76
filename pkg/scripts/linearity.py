"""Total detector variance against LO power, with a least-squares line."""

import argparse

import numpy as np

from vacqrng import signal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=400)
    ap.add_argument("--powers", type=float, nargs="+", default=[5, 10, 15, 20, 25, 30, 35, 40])
    ap.add_argument("--csv", help="write power,variance rows here")
    args = ap.parse_args()

    powers = np.asarray(args.powers)
    var = np.array([
        np.var(signal.simulate_trace(
            signal.NoiseModel.from_power(signal.KAPPA_REF, p, signal.SIGMA_E2_REF),
            args.samples, seed=args.seed + i).samples, ddof=1)
        for i, p in enumerate(powers)])
    slope, intercept = np.polyfit(powers, var, 1)
    resid = var - (slope * powers + intercept)
    r2 = 1 - np.sum(resid ** 2) / np.sum((var - var.mean()) ** 2)

    for p, v in zip(powers, var):
        print(f"{p:6.1f} mW  {v:.6e} V^2")
    print(f"slope {slope:.5e} V^2/mW (model {signal.KAPPA_REF:.5e})")
    print(f"intercept {intercept:.5e} V^2 (sigma_e2 {signal.SIGMA_E2_REF:.5e})")
    print(f"R^2 {r2:.6f}")
    if args.csv:
        np.savetxt(args.csv, np.column_stack([powers, var]), delimiter=",",
                   header="power_mw,variance_v2", comments="")


if __name__ == "__main__":
    main()
