"""Total area throughput against user density, and where it saturates.

For each requested station density, sweeps user density over the grid in
configs/throughput_vs_user_density.cfg (analytic path) and reports the
first grid point after which the relative throughput increment stays
below --eps: past that density, extra users no longer buy aggregate rate.
"""

import argparse
from pathlib import Path

from rfhnet.cli import main as rfhnet_main, read_sweep_csv

ROOT = Path(__file__).resolve().parent.parent


def first_flat(values, totals, eps):
    """Last density that still helps; None if every step clears eps."""
    for i in range(len(totals) - 1):
        if (totals[i + 1] - totals[i]) / totals[i + 1] < eps:
            return values[i]
    return None


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config",
                    default=str(ROOT / "configs"
                                / "throughput_vs_user_density.cfg"))
    ap.add_argument("--lambda-b", type=float, action="append", default=None,
                    help="station density per km^2 (repeatable; "
                         "default 100 and 300)")
    ap.add_argument("--eps", type=float, default=0.02,
                    help="relative increment treated as flat")
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    args = ap.parse_args()
    densities = args.lambda_b or [100.0, 300.0]

    Path(args.outdir).mkdir(parents=True, exist_ok=True)
    print()
    for lb in densities:
        out = Path(args.outdir) / f"throughput_saturation_lb{lb:g}.csv"
        rc = rfhnet_main(["sweep", "--config", args.config,
                          "--lambda-b", str(lb), "--output", str(out)])
        if rc:
            return rc
        _, records = read_sweep_csv(str(out))
        rows = sorted((r.value, r.result) for r in records
                      if r.metric == "t_total" and r.result is not None)
        values = [v for v, _ in rows]
        totals = [t for _, t in rows]

        print(f"stations {lb:g}/km2:")
        prev = None
        for v, t in rows:
            inc = "" if prev is None else f"  (+{(t - prev) / t:.1%})"
            print(f"  lambda_u {v:7g}/km2   t_total {t:.4e} /m2{inc}")
            prev = t
        flat = first_flat(values, totals, args.eps)
        if flat is None:
            print(f"  no flattening below {args.eps:.0%} on this grid")
        else:
            print(f"  flattens at {flat:g}/km2 "
                  f"(next increment below {args.eps:.0%})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
