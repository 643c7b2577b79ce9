"""L1 distance between the Monte Carlo plug-in estimator and the normalized SPD
as the number of guesses grows.

    python3 scripts/convergence.py [--seeds 5] [--max-exp 4] [--out convergence.svg]

Prints one row per guess count (median and range over seeds). With --out, the
SPD and the plug-in estimates at each guess count are written as an envelope
(format from the file suffix).
"""

import argparse
import statistics
import time

from tempfreq.aggregation import spd
from tempfreq.calibration import calibrate
from tempfreq.grid import TimeGrid, l1_distance
from tempfreq.io_formats import ResultEnvelope, write_result
from tempfreq.montecarlo import McConfig, plugin_estimator
from tempfreq.synthetic import phase_sample, wiggly_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--max-exp", type=int, default=4, help="largest guess count is 10**max_exp")
    ap.add_argument("--n", type=int, default=20, help="dates in the synthetic sample")
    ap.add_argument("--spread", type=float, default=15.0, help="sd of true ages, years")
    ap.add_argument("--out")
    args = ap.parse_args()

    curve = wiggly_curve()
    grid = TimeGrid.from_range(1000, 2200, 1)
    posts = [calibrate(d, curve, grid) for d in phase_sample(curve, n=args.n, spread=args.spread)]
    target = spd(posts, scale="normalized").series
    series = {"spd": target}
    print(f"{'G':>7} {'median L1':>10} {'min':>8} {'max':>8} {'secs':>6}")
    for e in range(1, args.max_exp + 1):
        G = 10**e
        t0 = time.perf_counter()
        ests = [plugin_estimator(posts, McConfig(seed=s, guesses=G), grid) for s in range(1, args.seeds + 1)]
        d = [l1_distance(f, target) for f in ests]
        print(f"{G:>7} {statistics.median(d):>10.4f} {min(d):>8.4f} {max(d):>8.4f} {time.perf_counter() - t0:>6.2f}")
        series[f"G={G}"] = ests[0]
    if args.out:
        fmt = args.out.rsplit(".", 1)[-1] if "." in args.out else "csv"
        env = ResultEnvelope("plugin-convergence", {"n": args.n, "spread": args.spread, "seeds": args.seeds}, series)
        write_result(env, fmt, args.out)


if __name__ == "__main__":
    main()
