"""Construct and verify a batch of random enumerations.

Run: python3 demos/random_batch.py [first_seed] [count]
"""

import random
import sys
import time
from fractions import Fraction

from seqbet import ClopenSet, run_all, run_construction


def random_P(rng):
    while True:
        P = []
        for _ in range(rng.randint(1, 8)):
            w = "".join(rng.choice("01") for _ in range(rng.randint(10, 20)))
            if all(not w.startswith(q) and not q.startswith(w) for q in P):
                P.append(w)
        if ClopenSet(P).measure() < Fraction(1, 384):
            return P


first = int(sys.argv[1]) if len(sys.argv) > 1 else 0
count = int(sys.argv[2]) if len(sys.argv) > 2 else 5
for seed in range(first, first + count):
    P = random_P(random.Random(seed))
    t0 = time.time()
    trace = run_construction(("", ClopenSet.full(), 1), ("", ClopenSet.full(), 1), P)
    built = time.time() - t0
    reports = run_all(trace, seed=seed, selections=20)
    best = min(max(s.m_a, s.m_b) / ClopenSet.cylinder(s.cylinder).measure()
               for s in trace.spawns())
    status = "ok" if all(r.ok for r in reports) else "FAIL"
    print(f"seed {seed}: |P|={len(P)} nodes={len(trace.nodes_a)}+{len(trace.nodes_b)} "
          f"certificates={sum(1 for _ in trace.spawns())} weakest={best} "
          f"build={built:.1f}s verify={status}")
