"""Estimator MSE and bounds versus the imbalance level before compensation."""

from iqcrlb.montecarlo import RunConfig, sweep

from _common import parser, save, scale, table


def main(argv=None):
    args = parser(__doc__).parse_args(argv)
    full = 3300 if args.large_scale else 204
    ilr = tuple(float(v) for v in range(-60, -2, 3))
    for tag, kind, l_s in (("a", "contiguous_low", full // 2 - 1), ("b", "symmetric_dc", full)):
        policies = ("plain", "prefiltered") if tag == "a" else ("plain",)
        cfg = RunConfig(**scale(args.large_scale), alloc_kind=kind, l_s=l_s, policies=policies,
                        runs=args.runs, seed=args.seed, axis="ilr-db", axis_values=ilr)
        res = sweep(cfg, workers=args.workers)
        print(f"fig5{tag} -> {save(res, args.out, f'fig5{tag}')}")
        print(table(res, (*cfg.policies, *cfg.bounds)))


if __name__ == "__main__":
    main()
