#!/usr/bin/env python3
"""The adversarial mixture against the Random Permutation Protocol.

Enumerates all N! permutations and prints the achieved mean fidelity next
to the best any never-failing protocol can reach, for several (N, K, M).

    python scripts/tightness_demo.py --eps 0.1
"""

import argparse

from epurify import bounds, protocols, qstate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--eps", type=float, default=0.1)
    args = ap.parse_args(argv)
    print(f"{'N':>3} {'K':>3} {'M':>3} {'F_in':>10} {'F_out':>12} {'bound':>12} {'gap':>9}")
    for N, K, M in [(4, 1, 2), (4, 1, 4), (4, 2, 4), (6, 1, 2), (6, 1, 3), (6, 2, 6), (6, 3, 6)]:
        rho = qstate.adversarial_state(N, args.eps)
        dist = protocols.random_permutation_protocol(rho, M, K)
        bound = bounds.absolute_upper_bound(N, K, M, args.eps)
        f = dist.mean_fidelity()
        print(f"{N:>3} {K:>3} {M:>3} {qstate.fidelity(rho):>10.6f} {f:>12.9f} {bound:>12.9f} {f - bound:>9.1e}")


if __name__ == "__main__":
    main()
