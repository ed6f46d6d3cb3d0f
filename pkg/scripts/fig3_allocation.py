"""Estimator MSE and bounds versus the number of allocated subcarriers.

Contiguous allocations starting next to DC (a) and allocations growing
symmetrically around DC (b).
"""

from iqcrlb.montecarlo import RunConfig, sweep

from _common import parser, save, scale, table


def main(argv=None):
    args = parser(__doc__.splitlines()[0]).parse_args(argv)
    top = 3300 if args.large_scale else 204
    grid = tuple(float(v) for v in range(12, top + 1, 12))
    for tag, kind in (("a", "contiguous_low"), ("b", "symmetric_dc")):
        policies = ("plain", "prefiltered") if kind == "contiguous_low" else ("plain",)
        cfg = RunConfig(**scale(args.large_scale), alloc_kind=kind, runs=args.runs, seed=args.seed,
                        policies=policies, axis="alloc", axis_values=grid)
        res = sweep(cfg, workers=args.workers)
        print(f"fig3{tag} -> {save(res, args.out, f'fig3{tag}')}")
        print(table(res, (*cfg.policies, *cfg.bounds)))


if __name__ == "__main__":
    main()
