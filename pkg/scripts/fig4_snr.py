"""Estimator MSE and bounds versus the pre-imbalance SNR, with and without post-imbalance noise."""

from iqcrlb.montecarlo import RunConfig, sweep

from _common import parser, save, scale, table


def main(argv=None):
    args = parser(__doc__).parse_args(argv)
    n_dft = 4096 if args.large_scale else 256
    full = 3300 if args.large_scale else 204
    snr = tuple(float(v) for v in range(-10, 51, 5))
    cases = (("a", "contiguous_low", full // 2 - 1), ("b", "symmetric_dc", full))
    for tag, kind, l_s in cases:
        policies = ("plain", "prefiltered") if tag == "a" else ("plain",)
        for sigma_r, suffix in ((1e-3, ""), (0.0, "_noiseless_r")):
            cfg = RunConfig(**scale(args.large_scale), alloc_kind=kind, l_s=l_s, policies=policies,
                            sigma_eta_r_sq=sigma_r, runs=args.runs, seed=args.seed,
                            axis="snr-db", axis_values=snr)
            res = sweep(cfg, workers=args.workers)
            print(f"fig4{tag}{suffix} (N_DFT={n_dft}, L_s={l_s}) -> "
                  f"{save(res, args.out, f'fig4{tag}{suffix}')}")
            print(table(res, (*cfg.policies, *cfg.bounds)))


if __name__ == "__main__":
    main()
