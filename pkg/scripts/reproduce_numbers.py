"""Recompute the headline operating-point numbers and print them next to the quoted ones."""

import argparse

from vacqrng import config, entropy, pipeline, signal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cfg = config.load(None, [f"run.seed={args.seed}", f"run.sample_count={args.samples}"])
    bal = pipeline.solve_balance(cfg)
    nominal = entropy.min_entropy(entropy.EntropyInputs.from_noise(cfg.noise, cfg.adc))
    sim = pipeline.simulate(cfg)
    ana = pipeline.analyze(sim.lo_on, sim.lo_off, cfg.adc, cfg.run.lo_power_mw)
    p = cfg.extractor

    rows = [
        ("balanced modulation index m*", f"{bal.m:.10f}", "-"),
        ("balance residual", f"{bal.residual:.2e}", "-"),
        ("QCNR nominal (dB)", f"{signal.qcnr(cfg.noise):.3f}", "12.9"),
        ("QCNR recovered (dB)", f"{ana.qcnr_db:.3f}", "12.9"),
        ("h_min nominal (bit/sample)", f"{nominal.h_min:.4f}", f"{entropy.H_MIN_QUOTED}"),
        ("h_min recovered (bit/sample)", f"{ana.entropy.h_min:.4f}", f"{entropy.H_MIN_QUOTED}"),
        ("dominant term", nominal.dominant, "-"),
        ("offset tolerance (V)", f"{nominal.delta_tolerance:.4f}", f"{entropy.DELTA_TOLERANCE_QUOTED}"),
        ("LHL bound at quoted h_min", f"{entropy.leftover_hash_bound(5.85, 8, p.k, p.epsilon):.1f}", "> 512"),
        ("LHL bound at nominal h_min",
         f"{entropy.leftover_hash_bound(nominal.h_min, 8, p.k, p.epsilon):.1f}", "> 512"),
        ("l_max at quoted h_min", str(entropy.size_extractor(5.85, 8).l), "-"),
        ("output rate (Mbit/s)", f"{config.bits_per_second(cfg) / 1e6:.0f}", "400"),
    ]
    width = max(len(r[0]) for r in rows)
    print(f"{'quantity':<{width}}  {'computed':>14}  {'quoted':>8}")
    for name, got, quoted in rows:
        print(f"{name:<{width}}  {got:>14}  {quoted:>8}")


if __name__ == "__main__":
    main()
