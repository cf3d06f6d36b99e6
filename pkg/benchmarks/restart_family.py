"""Build the reference data for the restart-regime acceptance test.

The family is ``gen_clustered(100, 10, 20.0, seed)`` for seeds 0..19.  Each
member's optimum is taken from five independent solves (folds 1..5) with the
complete candidate set and no target, each with its own budget; a member is
only accepted if all five agree.  The fixed POPMUSIC set (candidate seed 0)
is then scored against that tour.

    python3 benchmarks/restart_family.py [--budget 3] [--out tests/data/restart_family.json]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from lkcand.candidates import missing_optimal_edges, nearest_candidates
from lkcand.instance import gen_clustered
from lkcand.popmusic import popmusic_candidates
from lkcand.solver import SolverConfig, solve

N, CLUSTERS, SPREAD = 100, 10, 20.0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--budget", type=float, default=3.0)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests/data/restart_family.json"))
    args = ap.parse_args(argv)

    members = []
    for seed in range(args.seeds):
        inst = gen_clustered(N, CLUSTERS, SPREAD, seed)
        full = nearest_candidates(inst, inst.n - 1)
        runs = [solve(inst, SolverConfig(time_budget=args.budget, fold=f), candidates=full)
                for f in range(1, 6)]
        lengths = [r.best_length for r in runs]
        best = min(runs, key=lambda r: r.best_length)
        stable = max(lengths) - min(lengths) <= 1e-6 * min(lengths)
        missing = missing_optimal_edges(popmusic_candidates(inst, 0), best.tour)[0]
        print(f"seed {seed}: lengths {[round(x, 4) for x in lengths]} stable={stable} fixed_missing={missing}",
              flush=True)
        members.append({
            "seed": seed,
            "name": inst.name,
            "optimum": best.best_length,
            "tour": [int(c) for c in best.tour.order],
            "reference_lengths": lengths,
            "stable": stable,
            "fixed_missing": missing,
        })
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = {"n": N, "clusters": CLUSTERS, "spread": SPREAD, "budget": args.budget, "members": members}
    out.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
