"""Boundary ratio and T_1 bound exponent for each transversal strategy along a congruence chain.

    python3 scripts/strategy_comparison.py --family heisenberg --depth 3
"""

import argparse
import random

from torsion_growth.group_core import builtin_family
from torsion_growth.homology import reidemeister_schreier
from torsion_growth.quotients import congruence_chain
from torsion_growth.transversal import (
    connect_repair,
    local_search_boundary_min,
    random_transversal,
    schreier_tree_transversal,
    weiss_tiling,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", default="heisenberg")
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--budget", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fam = builtin_family(args.family)
    chain = congruence_chain(fam, args.depth)
    print("level,index,strategy,boundary_edges,boundary_ratio,E_surviving")
    for i, act in enumerate(chain.levels, start=1):
        rng = random.Random(args.seed * 7919 + i)
        candidates = {
            "tree": schreier_tree_transversal(act, fam),
            "weiss": weiss_tiling(chain, 1, i),
            "local_search": local_search_boundary_min(random_transversal(act, fam, rng), act, fam, args.budget),
        }
        for name, t in candidates.items():
            if not t.is_connected:
                t = connect_repair(t, act, fam)
            sp = reidemeister_schreier(fam.presentation, act, t, fam)
            print(f"{i},{act.degree},{name},{t.boundary_edges},{t.boundary_ratio:.6f},{len(sp.surviving)}")


if __name__ == "__main__":
    main()
