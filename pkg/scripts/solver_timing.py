"""Mean time per random matrix and worst duality gap of the LP and MWU solvers."""
import argparse

from nashmg.cli import bench_solvers

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--sizes", nargs="+", default=["2x2", "6x6", "10x10"])
ap.add_argument("--samples", type=int, default=1000)
ap.add_argument("--mwu-samples", type=int, default=50, help="MWU is slower; fewer samples")
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

print(f"{'size':>7} {'solver':>6} {'s/sample':>10} {'max eps':>10}")
for size in args.sizes:
    m, n = (int(v) for v in size.split("x"))
    lp = bench_solvers(m, n, args.samples, args.seed)["lp"]
    mwu = bench_solvers(m, n, args.mwu_samples, args.seed)["mwu"]
    for name, (t, eps) in (("lp", lp), ("mwu", mwu)):
        print(f"{size:>7} {name:>6} {t:10.5f} {eps:10.2e}")
