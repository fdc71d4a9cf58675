"""Exploitability-versus-episodes comparison on random tabular games.

Trains every algorithm on one random game for several seeds and writes
``compare.csv`` plus ``compare.svg`` (median curve with min-max band).

    python scripts/convergence.py --env I --out runs/env1
    python scripts/convergence.py --env II --out runs/env2 --seeds 0 1 2
"""
import argparse
import os
import time

from nashmg import harness

ENVS = {"I": (3, 3, 3, 3), "II": (6, 6, 6, 6)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--env", choices=sorted(ENVS), default="I")
    ap.add_argument("--env-seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--algorithms", nargs="+", default=["nash_vi", "nash_vi_exploiter", "nash_q", "sp", "fsp", "do"])
    ap.add_argument("--episodes", type=int, default=50_000)
    ap.add_argument("--eval-every", type=int, default=250)
    ap.add_argument("--eval-mode", choices=("exact", "approx_exploiter"), default="exact")
    ap.add_argument("--log-y", action="store_true")
    ap.add_argument("--out", default="runs/convergence")
    args = ap.parse_args()

    S, A, B, H = ENVS[args.env]
    os.makedirs(args.out, exist_ok=True)
    config = harness.parse_config(
        "",
        S=S, A=A, B=B, H=H,
        env_seed=args.env_seed,
        algorithms=",".join(args.algorithms),
        seeds=",".join(map(str, args.seeds)),
        episodes=args.episodes,
        eval_every=args.eval_every,
        eval_mode=args.eval_mode,
        log_y=args.log_y,
        output_dir=args.out,
    )
    t0 = time.perf_counter()
    _, series, paths = harness.compare(config)
    print(f"env {args.env} {ENVS[args.env]}  {time.perf_counter() - t0:.0f}s  -> {', '.join(paths)}")
    print(f"{'algorithm':>18}  {'final median':>12}  {'episodes to 0.2':>15}")
    for alg, (x, med, _, _) in series.items():
        reach = harness.episodes_to_reach(x, med, 0.2)
        print(f"{alg:>18}  {med[-1]:12.4f}  {reach:>15}")


if __name__ == "__main__":
    main()
