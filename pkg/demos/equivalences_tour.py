"""Move one betting game between its equivalent representations.

Run: python3 demos/equivalences_tour.py
"""

import random

from seqbet import (SequenceOracle, mltest_from_strategy, mp_to_strategy, nm_to_seqset, play,
                    play_nonmonotonic, seqset_to_nm, strategy_to_mp, validate_strategy)
from seqbet.betting import NonmonotonicStrategy, random_sequence_set_table

rng = random.Random(11)
t = random_sequence_set_table(rng, 3, max_length=4)
print("sequence-set table:")
for w, (s, m) in t.items():
    print(f"  {w or 'ε':4} set={list(s.generators)} mass={m} capital={t.capital(w)}")

p = strategy_to_mp(t, 6)
print("martingale process is fair:", p.validate().ok)
classes = p.classes(4)
print(f"{len(classes)} capital-history classes among the 16 words of length 4")

back = mp_to_strategy(p)
print("rebuilt strategy valid:", validate_strategy(back).ok, "with", len(back), "nodes")

# a scan rule that reads bit 2 first, then bit 0, then bit 1
d = {"": 1, "0": 2, "1": 0, "00": 3, "01": 1, "10": 0, "11": 0}
scan = {"": 2, "0": 0, "1": 0}
b = NonmonotonicStrategy(d, scan)
seqset = nm_to_seqset(b, 2)
print("nonmonotonic game as a sequence-set table:")
for w, (s, m) in seqset.items():
    print(f"  {w or 'ε':3} set={list(s.generators)}")
assert seqset_to_nm(seqset) == b
alpha = SequenceOracle.from_bits("1000")
nm_caps = [str(c) for c in play_nonmonotonic(b, alpha, 2).capitals]
ss_caps = [str(c) for c in play(seqset, alpha, 2).capitals]
print("capitals on 1000:", nm_caps, "and", ss_caps)
assert nm_caps == ss_caps

test = mltest_from_strategy(random_sequence_set_table(rng, 6), 6)
print("test levels:", [str(m) for m in test.measures()], "path", test.path[-1])
