"""Designed mutations for every verifier check.

Each mutation takes a clean trace (worked example or two-cylinder run),
breaks one thing on a deep copy and returns the report of the check that
must catch it.
"""

import copy
from dataclasses import replace
from fractions import Fraction

from seqbet.construction import NodeRecord, SpawnRecord
from seqbet.core import ClopenSet
from seqbet.verify import (OrthogonalitySnapshot, PrefixFreeSelection, check_accounting,
                           check_doubling, check_lemma1, check_orthogonality,
                           check_tree_laws, snapshots)

P10 = "0000000000"
TWO = ["000000000000", "101010101010"]


def _first_iter(tr):
    return tr.instances[0].iterations[0]


def _deep(tr):
    return copy.deepcopy(tr)


def _bump(recs, word, **fields):
    recs[word] = replace(recs[word], **fields)


# -- tree laws -------------------------------------------------------------


def tree_mass(tr):
    t = _deep(tr)
    # an inner node, so its own split no longer adds up
    w = next(w for w in sorted(t.nodes_b, key=len) if w and w + "0" in t.nodes_b)
    _bump(t.nodes_b, w, m=t.nodes_b[w].m + Fraction(1, 1 << 20))
    return check_tree_laws(t.tree_b()), f"mass@{w}"


def tree_unequal_halves(tr):
    t = _deep(tr)
    # move one generator from a node to its sibling
    w = next(w for w in sorted(t.nodes_a, key=len) if w and w.endswith("0")
             and len(t.nodes_a[w].sset) > 1)
    sib = w[:-1] + "1"
    g = t.nodes_a[w].sset.generators[-1]
    _bump(t.nodes_a, w, sset=t.nodes_a[w].sset - ClopenSet([g]))
    _bump(t.nodes_a, sib, sset=t.nodes_a[sib].sset | ClopenSet([g]))
    return check_tree_laws(t.tree_a()), w[:-1] or "ε"


def tree_missing_sibling(tr):
    t = _deep(tr)
    w = max((w for w in t.nodes_b if w.endswith("1")), key=len)
    del t.nodes_b[w]
    return check_tree_laws(t.tree_b()), w[:-1] + "0"


def tree_overlap(tr):
    t = _deep(tr)
    # node "0" also claims one cylinder of its sibling
    g = t.nodes_a["1"].sset.generators[0]
    _bump(t.nodes_a, "0", sset=t.nodes_a["0"].sset | ClopenSet([g]))
    return check_tree_laws(t.tree_a()), "partition@ε"


TREE_LAWS = [tree_mass, tree_unequal_halves, tree_missing_sibling, tree_overlap]


# -- orthogonality ---------------------------------------------------------


def _snap(params, a, b, n):
    return OrthogonalitySnapshot("injected", params, {"a": a}, {"b": b}, ["a"], ["b"], n)


def ortho_zero_SL(tr):
    s = next(s for s in snapshots(tr) if s.label.endswith(":prep"))
    recs_b = dict(s.recs_b)
    w = s.words_b[0]
    # L = -measure makes SL vanish while the set still meets the A side
    recs_b[w] = replace(recs_b[w], L=-recs_b[w].measure)
    return check_orthogonality(replace(s, recs_b=recs_b)), w or "ε"


def ortho_concentrated(tr):
    params = tr.instances[0].params
    a = NodeRecord("a", ClopenSet(["0"]), 1, Fraction(1, 4), Fraction(1, 4))
    b = NodeRecord("b", ClopenSet(["0"]), 1, Fraction(1, 4), Fraction(1, 4))
    # 1 * 1/2 against (3/2) * 1/4
    return check_orthogonality(_snap(params, a, b, 2)), "a"


def ortho_equality_late(tr):
    params = tr.instances[0].params
    a = NodeRecord("a", ClopenSet(["0"]), 1, Fraction(1, 4), Fraction(1, 4))
    b = NodeRecord("b", ClopenSet(["0"]), 1, Fraction(1, 4), Fraction(1, 4), Fraction(1, 6))
    # 1 * 1/2 == (3/2) * (1/2) * (2/3): equality is only allowed for the first root pair
    return check_orthogonality(_snap(params, a, b, 2)), "a"


def ortho_shrunk_frontier(tr):
    t = _deep(tr)
    it = _first_iter(t)
    w = it.next_lts_b[0]
    r = t.nodes_b[w]
    # pretend the node is tiny while it still meets the A side on its whole set
    _bump(t.nodes_b, w, L=-r.measure + r.measure / (1 << 12))
    s = next(s for s in snapshots(t) if s.label.endswith(":end"))
    return check_orthogonality(s), w


ORTHOGONALITY = [ortho_zero_SL, ortho_concentrated, ortho_equality_late, ortho_shrunk_frontier]


# -- remaining-mass bound --------------------------------------------------

ROOT_SEL = PrefixFreeSelection((("", 1),))


def lemma_bigger_bet(tr):
    t = _deep(tr)
    it = _first_iter(t)
    x = it.assignments[0]
    it.assignments[0] = replace(x, dB=x.dB * 2, dA=x.dA - x.dB)
    return check_lemma1(t, ROOT_SEL), "selection"


def lemma_inflated_L(tr):
    t = _deep(tr)
    _bump(t.nodes_b, "", L=Fraction(1, 1 << 12))
    return check_lemma1(t, ROOT_SEL), "selection"


def lemma_less_betting_mass(tr):
    t = _deep(tr)
    r = t.nodes_b[""]
    _bump(t.nodes_b, "", ms=r.ms - Fraction(1, 1 << 12), me=r.me + Fraction(1, 1 << 12))
    return check_lemma1(t, ROOT_SEL), "selection"


def lemma_smaller_P(tr):
    t = _deep(tr)
    _first_iter(t).p = P10 + "0"
    return check_lemma1(t, ROOT_SEL), "selection"


LEMMA1 = [lemma_bigger_bet, lemma_inflated_L, lemma_less_betting_mass, lemma_smaller_P]


# -- accounting ------------------------------------------------------------


def acct_truncated(tr):
    t = _deep(tr)
    _first_iter(t).spawns = []
    return check_accounting(t), "conservation"


def acct_fields(tr):
    t = _deep(tr)
    w = _first_iter(t).lts_a[0]
    _bump(t.nodes_a, w, m=t.nodes_a[w].m + 1)
    return check_accounting(t), "fields-A"


def acct_cover(tr):
    t = _deep(tr)
    it = t.instances[0].iterations[1]
    it.lts_a = it.lts_a[1:]
    return check_accounting(t), "cover-A"


def acct_bet_split(tr):
    t = _deep(tr)
    it = _first_iter(t)
    x = it.assignments[0]
    it.assignments[0] = replace(x, dA=x.dA + Fraction(1, 1 << 12), dB=x.dB - Fraction(1, 1 << 12))
    return check_accounting(t), ":dB"


def acct_relative_mass(tr):
    t = _deep(tr)
    it = _first_iter(t)
    w = next(w for w in it.next_lts_b if w not in it.lts_b)
    r = t.nodes_b[w]
    d = r.ms / 2
    _bump(t.nodes_b, w, ms=r.ms - d, me=r.me + d)
    return check_accounting(t), "f-distri-B"


def acct_L_bound(tr):
    t = _deep(tr)
    it = t.instances[0].iterations[1]
    w = it.lts_b[0]
    _bump(t.nodes_b, w, L=t.nodes_b[w].L + Fraction(1, 256))
    return check_accounting(t), "L-bound-B"


ACCOUNTING = [acct_truncated, acct_fields, acct_cover, acct_bet_split, acct_relative_mass,
              acct_L_bound]


# -- doubling --------------------------------------------------------------


def dbl_low_masses(tr):
    t = _deep(tr)
    it = _first_iter(t)
    s = it.spawns[0]
    it.spawns[0] = replace(s, m_a=Fraction(1, 1 << 12), m_b=Fraction(1, 1 << 12))
    return check_doubling(t), "capital"


def dbl_missing_cylinder(tr):
    t = _deep(tr)
    it = _first_iter(t)
    it.ltp = it.ltp[1:]
    return check_doubling(t), "coverage"


def dbl_zero_mass(tr):
    t = _deep(tr)
    it = _first_iter(t)
    it.spawns[0] = replace(it.spawns[0], m_a=Fraction(0))
    return check_doubling(t), "positive"


def dbl_extra_spawn(tr):
    t = _deep(tr)
    it = _first_iter(t)
    it.spawns.append(SpawnRecord("1" * 12, Fraction(1), Fraction(1), ("", ""), 0))
    return check_doubling(t), "spawn-list"


DOUBLING = [dbl_low_masses, dbl_missing_cylinder, dbl_zero_mass, dbl_extra_spawn]

# mutation lists and the trace each needs
CATALOG = {
    "tree-laws": (TREE_LAWS, "worked"),
    "orthogonality": (ORTHOGONALITY, "worked"),
    "lemma1": (LEMMA1, "worked"),
    "accounting": (ACCOUNTING, "two"),
    "doubling": (DOUBLING, "worked"),
}


def run_catalog(traces):
    """Yield ``(check, mutation name, caught, report)`` for every mutation."""
    for check, (muts, which) in CATALOG.items():
        for mut in muts:
            rep, where = mut(traces[which])
            caught = not rep.ok and any(where in str(w[0]) for w in rep.witnesses)
            yield check, mut.__name__, caught, rep
