#!/usr/bin/env python3
"""Large randomized sweep: measure (b, e, |nf|) by running the
deterministic strategy and compare against the counters of the inferred
tight derivation.  Prints a histogram of trace lengths and fails loudly
on the first mismatch."""

import argparse
import random
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from bangcalc.gen import rand_bang_term
from bangcalc.syntax import print_term, w_size
from bangcalc.reduction import FuelExhausted, classify_wcf_nf, normalize_dw
from bangcalc.system_e import DerivationE, check_derivation_e, infer_tight, is_tight


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--max-size", type=int, default=12)
    ap.add_argument("--fuel", type=int, default=500)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    lengths: Counter = Counter()
    skipped = {"fuel": 0, "clash": 0}
    done = 0
    while done < args.count:
        t = rand_bang_term(rng, rng.randint(2, args.max_size))
        try:
            trace = normalize_dw(t, args.fuel)
        except FuelExhausted:
            skipped["fuel"] += 1
            continue
        if not classify_wcf_nf(trace.final).memberships:
            skipped["clash"] += 1
            continue
        d = infer_tight(t, args.fuel)
        measured = (trace.b, trace.e, w_size(trace.final))
        if not isinstance(d, DerivationE) or d.counters != measured \
                or not is_tight(d) or check_derivation_e(d) is not None:
            print(f"MISMATCH on {print_term(t)}: derivation "
                  f"{getattr(d, 'counters', d)}, measured {measured}")
            return 1
        lengths[len(trace.steps)] += 1
        done += 1

    print(f"{done} terms exact; skipped {skipped['fuel']} fuel-exhausted, "
          f"{skipped['clash']} clash normal forms")
    print("trace length histogram:")
    for length in sorted(lengths):
        print(f"  {length:3d} steps: {lengths[length]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
