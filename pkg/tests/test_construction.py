from dataclasses import replace
from fractions import Fraction

import pytest

from seqbet.betting import validate_strategy
from seqbet.construction import (Limits, NodeRecord, assign_masses, init_instance,
                                 instance_params, kraft_tree, orthogonality_ratio,
                                 prep_step, run_construction, split_pieces, triplet_mass)
from seqbet.core import ClopenSet
from seqbet.errors import InputError, LimitError

FULL = ClopenSet.full()
P10 = "0000000000"


def root(word="", s=FULL, m=1):
    return NodeRecord(word, s, Fraction(m), Fraction(m), Fraction(0))


@pytest.fixture(scope="module")
def worked():
    return run_construction(("", FULL, 1), ("", FULL, 1), [P10])


def test_unit_root_parameters():
    p = instance_params(FULL, Fraction(1), Fraction(1), Fraction(1, 2))
    assert (p.m0, p.c, p.const) == (Fraction(1, 2), 4, Fraction(1, 384))
    # m0 = 1/4, c = 2*(1/2 + 3/2)/(1/4) = 16
    p = instance_params(ClopenSet(["01"]), Fraction(1, 2), Fraction(3, 2), Fraction(1, 3))
    assert p.m0 == Fraction(1, 4) and p.c == 16
    assert p.const == Fraction(1, 16) / (Fraction(1, 4) * 4 * 256 * Fraction(4, 3))


def test_init_sets_views():
    st = init_instance(root(), root(), Fraction(1, 2), [P10])
    a = st.recs_a[""]
    assert (a.ms, a.me, a.L) == (Fraction(1, 2), Fraction(1, 2), 0)
    assert st.lts_a == [""] and st.lts_b == [""] and st.n == 0


@pytest.mark.parametrize("P, msg", [
    (["00000000"], "1/384"),
    (["0000000000", "00000000001"], "prefix-free"),
    ([""], "strictly inside"),
    (["0a"], "binary word"),
])
def test_init_rejects_bad_P(P, msg):
    with pytest.raises(InputError, match=msg):
        init_instance(root(), root(), Fraction(1, 2), P)


def test_init_rejects_outside_w0_and_bad_params():
    w = ClopenSet(["01"])
    with pytest.raises(InputError, match="strictly inside"):
        init_instance(root("", w), root("", w), Fraction(1, 2), ["10" + "0" * 10])
    with pytest.raises(InputError, match="positive mass"):
        init_instance(root(m=0), root(), Fraction(1, 2), [])
    with pytest.raises(InputError, match="cs"):
        init_instance(root(), root(), Fraction(1), [])
    with pytest.raises(InputError, match="share one cylinder"):
        init_instance(root("", ClopenSet(["0", "10"])), root("", ClopenSet(["0", "10"])),
                      Fraction(1, 2), [])


def test_bound_is_strict():
    # with cs = 1/3 and unit roots, const = 3/1024, a dyadic value P can hit exactly
    at_bound = ["000000000", "0000000010"]
    assert ClopenSet(at_bound).measure() == Fraction(3, 1024)
    with pytest.raises(InputError, match="3/1024"):
        init_instance(root(), root(), Fraction(1, 3), at_bound)
    init_instance(root(), root(), Fraction(1, 3), ["000000000", "00000000100"])


def test_empty_P_gives_root_only_trees():
    tr = run_construction(("", FULL, 1), ("", FULL, 1), [])
    assert list(tr.iterations()) == [] and tr.complete
    assert tr.tree_a().words() == [""] and tr.tree_b().words() == [""]


def test_worked_example_spawn(worked):
    (it,) = worked.iterations()
    (x,) = it.assignments
    assert x.dB == Fraction(1, 128) and x.dA == 0
    assert x.inter == ClopenSet([P10])
    (sp,) = it.spawns
    assert sp.cylinder == P10
    assert sp.m_b == Fraction(1, 2048) + Fraction(1, 128)
    assert sp.m_b / Fraction(1, 1024) == Fraction(17, 2)
    assert sp.m_a == Fraction(1, 1024)
    child = worked.instances[sp.child_instance]
    assert child.P == [] and child.iterations == []


def test_worked_example_frontiers(worked):
    (it,) = worked.iterations()
    lam_p = Fraction(1, 1024)
    for side, words in (("a", it.next_lts_a), ("b", it.next_lts_b)):
        recs = worked.nodes_a if side == "a" else worked.nodes_b
        sets = [recs[w].sset for w in words]
        assert ClopenSet.union_all(sets) == FULL - ClopenSet([P10])
        assert sum(s.measure() for s in sets) == 1 - lam_p
    # the B root paid, so its new leaves carry L proportional to measure
    for w in it.next_lts_b:
        r = worked.nodes_b[w]
        assert r.L == lam_p * r.measure / (1 - lam_p)
        assert r.ms == (Fraction(1, 2) - Fraction(1, 128)) * r.measure / (1 - lam_p)
    assert sum(worked.nodes_b[w].L for w in it.next_lts_b) == lam_p


def test_worked_example_trees_are_sequence_set(worked):
    for t in (worked.tree_a(), worked.tree_b()):
        assert validate_strategy(t, require_sequence_set=True).ok


def test_two_length12_cylinders():
    P = ["000000000000", "101010101010"]
    tr = run_construction(("", FULL, 1), ("", FULL, 1), P)
    root_its = tr.instances[0].iterations
    assert [it.p for it in root_its] == P
    spawned = {sp.cylinder for sp in tr.spawns()}
    assert set(P) <= spawned
    for sp in tr.spawns():
        assert max(sp.m_a, sp.m_b) / ClopenSet.cylinder(sp.cylinder).measure() >= 4


def test_prep_purifies_intersections():
    st = init_instance(root(), root(), Fraction(1, 2), [P10])
    p = ClopenSet([P10])
    ltn, _ = prep_step(st, p)
    for a in ltn:
        s = st.recs_a[a].sset & st.recs_b[""].sset
        assert not (s & p) or s <= p
        r = st.recs_a[a]
        assert orthogonality_ratio(st.params, r, st.recs_b[""], s.measure()) < Fraction(3, 2)
    assert sum(st.recs_a[a].ms for a in ltn) == Fraction(1, 2)


def test_b_without_betting_mass_makes_a_pay():
    st = init_instance(root(), root(), Fraction(1, 2), [P10])
    b = st.recs_b[""]
    st.trace.nodes_b[""] = replace(b, ms=Fraction(0), me=b.m)
    p = ClopenSet([P10])
    # hand-built A frontier: one node exactly on p holding half the betting mass
    half = Fraction(1, 2)
    st.trace.nodes_a["0"] = NodeRecord("0", p, half, half, Fraction(0))
    st.trace.nodes_a["1"] = NodeRecord("1", FULL - p, half, Fraction(0), half)
    (x,) = assign_masses(st, ["0", "1"], p)
    assert x.dB == 0 and x.dA == Fraction(1, 128)


def test_triplet_mass_formula():
    # me share 1/2 * 2^-10, bet 2^-7 on the whole intersection, no unassigned mass
    cyl = ClopenSet([P10])
    m = triplet_mass(Fraction(1, 2), 1, Fraction(1, 128), cyl, 0, FULL, cyl)
    assert m == Fraction(17, 2048)


def test_split_pieces_exact_measures():
    pieces = [ClopenSet(["0"]), ClopenSet(["10", "110"])]
    # 14 units of 1/16 in three parts: 4, then 7 holding piece 1 whole, the rest
    specs = [(4, [], []), (7, [1], []), (3, [], [])]
    out = split_pieces(pieces, specs, 4)
    for j, (units, _, _) in enumerate(specs):
        assert sum(out[j][k].measure() for k in range(2)) == Fraction(units, 16)
    assert out[1][1] == pieces[1]
    assert split_pieces(pieces, [(4, [], []), (3, [1], []), (7, [], [])], 4) is None
    for k, piece in enumerate(pieces):
        assert ClopenSet.union_all([out[j][k] for j in range(3)]) == piece


def test_kraft_tree_merges_equal_measures():
    leaves = [(ClopenSet(["1"]), "z"), (ClopenSet(["00"]), "x"), (ClopenSet(["01"]), "y")]
    assigned, internal = kraft_tree("v", leaves)
    words = {payload: w for w, _, payload in assigned}
    # the two quarters merge first; "1" precedes "00" in length-lex order so z is 0
    assert words == {"z": "v0", "x": "v10", "y": "v11"}
    assert internal == [("v1", ClopenSet(["0"]))]


def test_limits_stop_with_partial_trace():
    P = ["000000000000", "101010101010"]
    with pytest.raises(LimitError) as info:
        run_construction(("", FULL, 1), ("", FULL, 1), P, limits=Limits(max_iterations=1))
    tr = info.value.trace
    assert not tr.complete and len(list(tr.iterations())) == 1


def test_nonroot_w0():
    w = ClopenSet(["01"])
    P = ["01" + "0" * 12]
    tr = run_construction(("", w, Fraction(1, 4)), ("", w, Fraction(1, 4)), P)
    (sp,) = [s for s in tr.spawns() if s.instance == 0]
    c = instance_params(w, Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)).c
    assert c == 4
    assert max(sp.m_a, sp.m_b) / ClopenSet([sp.cylinder]).measure() >= c
