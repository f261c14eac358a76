"""Closed-loop vs open-loop offset under linear detector drift, across drift rates."""

import argparse

from vacqrng import config, pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rates", type=float, nargs="+",
                    default=[0.0, 0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2])
    ap.add_argument("--windows", type=int, default=30)
    args = ap.parse_args()

    print(f"{'rate V/win':>10}  {'corrections':>11}  {'closed |after|':>14}  {'open |after|':>12}  status")
    for rate in args.rates:
        cfg = config.load(None, [f"drift.rate={rate}", f"drift.windows={args.windows}"])
        open_loop = pipeline.rebalance(cfg, feedback=False).max_after
        try:
            log = pipeline.rebalance(cfg)
            closed, n, status = log.max_after, log.corrections, "ok"
        except pipeline.RebalanceError as exc:
            closed, n, status = exc.log.max_after, exc.log.corrections, f"lost: {exc}"
        print(f"{rate:10.3f}  {n:11d}  {closed:14.4g}  {open_loop:12.4g}  {status}")


if __name__ == "__main__":
    main()
