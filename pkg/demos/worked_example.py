"""Build both trees for a single enumerated cylinder and follow the winner.

Run: python3 demos/worked_example.py
"""

from fractions import Fraction

from seqbet import ClopenSet, SequenceOracle, play, run_all, run_construction

P = ["0000000000"]

trace = run_construction(("", ClopenSet.full(), 1), ("", ClopenSet.full(), 1), P)
inst = trace.instances[0]
print(f"m0={inst.params.m0} c={inst.params.c} const={inst.params.const}")

for it in trace.iterations():
    for x in it.assignments:
        print(f"iteration {it.n}: pair ({x.a_word or 'ε'}, {x.b_word or 'ε'}) "
              f"bets dA={x.dA} dB={x.dB} on {x.inter}")
    for sp in it.spawns:
        lam = ClopenSet.cylinder(sp.cylinder).measure()
        print(f"  certificate on {sp.cylinder}: m_a={sp.m_a} m_b={sp.m_b} "
              f"capital A={sp.m_a / lam} B={sp.m_b / lam}")

print(f"tree A has {len(trace.nodes_a)} nodes, tree B has {len(trace.nodes_b)}")

# a sequence inside the enumerated cylinder
alpha = SequenceOracle.eventually(P[0], "0")
for side, tree in (("A", trace.tree_a()), ("B", trace.tree_b())):
    traj = play(tree, alpha, 100)
    caps = ", ".join(str(c) for c in traj.capitals)
    print(f"play on tree {side}: {caps}")

# and one outside it: B's capital stays bounded there
traj = play(trace.tree_b(), SequenceOracle.periodic("1"), 100)
print("tree B on 111...:", ", ".join(str(c) for c in traj.capitals[:6]), "...")
assert traj.capitals[-1] < 4

for r in run_all(trace, selections=20):
    print(f"{r.check_name}: {r.status}")
assert max(sp.m_b for sp in trace.spawns()) / Fraction(1, 1024) == Fraction(17, 2)
