#!/usr/bin/env python3
"""Monte Carlo of Complete Scrambling against its (delta, p, q) guarantee.

    python scripts/complete_scrambling_mc.py --n 3 --t 1 2 --eps 0.01 0.05 --runs 10000 --seed 42
"""

import argparse
import json
import math

from epurify import bounds, protocols, qstate
from epurify.protocols import SampleStats
from epurify.scramble import make_multiplication_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--t", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.01, 0.05, 0.1])
    ap.add_argument("--runs", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    for t in args.t:
        perm = make_multiplication_table(args.n, t)
        p = perm.params
        s = 2 * t
        for eps in args.eps:
            state = qstate.random_state_near_target(p.N, eps, seed=args.seed)
            recs = protocols.sample_runs("complete-scrambling", state, args.runs, args.seed, workers=args.workers, perm=perm, s=s)
            stats = SampleStats.from_records(recs)
            gp = bounds.complete_scrambling_prediction(p.N, p.W, 1 << s, eps, p.K)
            good = sum(f >= 1 - gp.delta for f in stats.success_fidelities)
            succ = len(stats.success_fidelities)
            row = {
                "n": args.n, "t": t, "S": 1 << s, "epsilon": eps, "runs": stats.runs,
                "fail_rate": stats.fail_rate, "fail_ci": protocols.wilson_interval(stats.fails, stats.runs),
                "fail_bound": gp.p,
                "good_fraction": good / succ if succ else math.nan, "good_bound": 1 - gp.q,
                "fidelity_threshold": 1 - gp.delta,
                "mean_success_fidelity": sum(stats.success_fidelities) / succ if succ else math.nan,
            }
            print(json.dumps(row, sort_keys=True))


if __name__ == "__main__":
    main()
