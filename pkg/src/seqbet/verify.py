"""Independent checks over construction traces and strategy tables.

Every checker recomputes what it needs (measures, SL, relative masses,
remainders) from the raw records and never trusts derived values stored by
the construction.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .betting import validate_strategy
from .core import ClopenSet, format_rational, length_lex_key
from .errors import InputError


@dataclass
class CheckReport:
    check_name: str
    witnesses: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def status(self):
        return "fail" if self.witnesses else "pass"

    @property
    def ok(self):
        return not self.witnesses

    def fail(self, location, expected, actual):
        self.witnesses.append((location, _text(expected), _text(actual)))

    def merge(self, other):
        self.witnesses.extend(other.witnesses)
        return self


def _text(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, int) and not isinstance(x, bool):
        return format_rational(Fraction(x))
    return str(x)


@dataclass(frozen=True)
class PrefixFreeSelection:
    """B-tree nodes, each tagged with the iteration whose frontier holds it."""

    nodes: tuple = ()
    instance: int = 0

    def check(self):
        words = sorted(w for w, _ in self.nodes)
        for u, v in zip(words, words[1:]):
            if v.startswith(u):
                raise InputError(f"selection is not prefix-free: {u!r} and {v!r}")


# -- small exact helpers --------------------------------------------------


def _SL(rec):
    return rec.sset.measure() + rec.L


def _relative(lam0, m0, ms, SL):
    return lam0 / m0 * ms / SL


def _params(inst):
    """Instance constants recomputed from the raw root data."""
    p = inst.params
    lam = p.w0.measure()
    m0 = min(p.m_a0, p.m_b0) / 2
    c = 2 * (p.m_a0 + p.m_b0) / lam
    return lam, m0, c


def _pure_against(cell_gens, p):
    """Scan generators one by one: all inside ``p`` or all outside."""
    inside = outside = False
    for g in cell_gens:
        if g.startswith(p):
            inside = True
        elif p.startswith(g):
            return False
        else:
            outside = True
    return not (inside and outside)


def _cells(recs_x, words_x, recs_y, words_y):
    from .core import overlay
    return overlay({x: recs_x[x].sset for x in words_x}, {y: recs_y[y].sset for y in words_y})


# -- tree laws -----------------------------------------------------------


def check_tree_laws(t, name="tree-laws"):
    rep = CheckReport(name)
    for v in validate_strategy(t, require_sequence_set=True).violations:
        rep.fail(f"{v.law}@{v.word or 'ε'}", "law holds", v.detail)
    return rep


# -- orthogonality -------------------------------------------------------


@dataclass
class OrthogonalitySnapshot:
    label: str
    params: object
    recs_a: dict
    recs_b: dict
    words_a: list
    words_b: list
    n: int


def snapshots(trace):
    """Frontier snapshots of every iteration: start, after prep, end."""
    for inst in trace.instances:
        for it in inst.iterations:
            common = (inst.params, trace.nodes_a, trace.nodes_b)
            yield OrthogonalitySnapshot(f"i{inst.id}n{it.n}:start", *common,
                                        it.lts_a, it.lts_b, it.n)
            yield OrthogonalitySnapshot(f"i{inst.id}n{it.n}:prep", *common,
                                        it.ltn_a, it.lts_b, it.n + 1)
            yield OrthogonalitySnapshot(f"i{inst.id}n{it.n}:end", *common,
                                        it.next_lts_a, it.next_lts_b, it.n + 1)


def check_orthogonality(snapshot):
    s = snapshot
    rep = CheckReport("orthogonality")
    lam0 = s.params.w0.measure()
    cs = s.params.cs
    for (a, b), inter in _cells(s.recs_a, s.words_a, s.recs_b, s.words_b).items():
        ra, rb = s.recs_a[a], s.recs_b[b]
        lhs = lam0 * inter.measure()
        rhs = (1 + cs) * _SL(ra) * _SL(rb)
        root_pair = s.n == 1 and a == s.words_a[0] and b == s.words_b[0] and len(s.words_a) == 1
        if lhs > rhs or (lhs == rhs and not root_pair):
            rep.fail(f"{s.label}:({a or 'ε'},{b or 'ε'})", f"< {format_rational(rhs)}", lhs)
    return rep


# -- remaining-mass bound --------------------------------------------------


def lemma1_sides(trace, sel):
    sel.check()
    inst = trace.instances[sel.instance]
    lam0, m0, c = _params(inst)
    iters = {it.n: it for it in inst.iterations}
    lhs = Fraction(0)
    r = 0
    for word, n in sel.nodes:
        it = iters[n]
        if word not in it.lts_b:
            raise InputError(f"{word!r} is not in the B-frontier of iteration {n}")
        rec = trace.nodes_b[word]
        # post-assignment remaining betting mass, recomputed from the bets
        ms = rec.ms - sum(x.dB for x in it.assignments if x.b_word == word)
        SL = _SL(rec)
        f = lam0 / m0 * ms / SL
        lhs += m0 / (lam0 * 2 * c) * (1 - f) * SL
        r = max(r, n)
    rhs = ClopenSet([it.p for it in inst.iterations if it.n <= r]).measure()
    return lhs, rhs


def check_lemma1(trace, sel):
    rep = CheckReport("lemma1")
    lhs, rhs = lemma1_sides(trace, sel)
    if lhs > rhs:
        rep.fail(f"selection of {len(sel.nodes)} nodes", f"<= {format_rational(rhs)}", lhs)
    return rep


def random_selection(trace, rng, instance=0, max_size=8):
    """Random prefix-free selection across the iterations of one instance."""
    inst = trace.instances[instance]
    pool = [(w, it.n) for it in inst.iterations for w in it.lts_b]
    rng.shuffle(pool)
    chosen = []
    for w, n in pool[:max_size * 4]:
        if len(chosen) >= max_size:
            break
        if any(w.startswith(u) or u.startswith(w) for u, _ in chosen):
            continue
        chosen.append((w, n))
    return PrefixFreeSelection(tuple(chosen), instance)


def check_lemma1_random(trace, seed=0, count=100):
    rep = CheckReport("lemma1", info={"seed": seed, "selections": 0})
    rng = random.Random(seed)
    for inst in trace.instances:
        if not inst.iterations:
            continue
        for _ in range(count):
            sel = random_selection(trace, rng, inst.id, max_size=rng.randint(1, 8))
            rep.merge(check_lemma1(trace, sel))
            rep.info["selections"] += 1
    return rep


# -- accounting ----------------------------------------------------------


def _union_disjoint(sets):
    """Union of the sets, or None when two of them overlap."""
    u = ClopenSet.union_all(sets)
    if u.measure() != sum((s.measure() for s in sets), Fraction(0)):
        return None
    return u


def _replay_assignments(rep, where, it, recs_a, recs_b, p, c):
    """Recompute the betting pairs and the bets; returns remaining masses."""
    cells = _cells(recs_a, it.ltn_a, recs_b, it.lts_b)
    pairs = sorted(((a, b) for (a, b), s in cells.items() if s <= p),
                   key=lambda ab: (length_lex_key(ab[0]), length_lex_key(ab[1])))
    got = [(x.a_word, x.b_word) for x in it.assignments]
    if got != pairs:
        rep.fail(f"{where}:pairs", pairs, got)
    rem_a = {a: recs_a[a].ms for a in it.ltn_a}
    rem_b = {b: recs_b[b].ms for b in it.lts_b}
    for x in it.assignments:
        loc = f"{where}:pair{x.pair_index}"
        inter = cells.get((x.a_word, x.b_word), ClopenSet.empty())
        if x.inter != inter:
            rep.fail(f"{loc}:inter", inter, x.inter)
        need = 2 * c * inter.measure()
        if x.dA + x.dB != need:
            rep.fail(f"{loc}:total", need, x.dA + x.dB)
        if x.dA < 0 or x.dB < 0:
            rep.fail(f"{loc}:sign", ">= 0", f"{_text(x.dA)},{_text(x.dB)}")
        if x.dB != min(need, rem_b.get(x.b_word, Fraction(0))):
            rep.fail(f"{loc}:dB", min(need, rem_b.get(x.b_word, Fraction(0))), x.dB)
        rem_a[x.a_word] = rem_a.get(x.a_word, Fraction(0)) - x.dA
        rem_b[x.b_word] = rem_b.get(x.b_word, Fraction(0)) - x.dB
        if rem_a[x.a_word] < 0:
            rep.fail(f"{loc}:remaining-a", ">= 0", rem_a[x.a_word])
        if rem_b[x.b_word] < 0:
            rep.fail(f"{loc}:remaining-b", ">= 0", rem_b[x.b_word])
    for side, rec_after, rem in (("a", it.ms_after_a, rem_a), ("b", it.ms_after_b, rem_b)):
        for w, v in rec_after.items():
            if rem.get(w) != v:
                rep.fail(f"{where}:ms-after-{side}@{w or 'ε'}", rem.get(w), v)
    return rem_a, rem_b


def check_accounting(trace):
    rep = CheckReport("accounting")
    A, B = trace.nodes_a, trace.nodes_b
    for inst in trace.instances:
        lam0, m0, c = _params(inst)
        params = inst.params
        w0 = params.w0
        P_prev = ClopenSet.empty()
        spent_a = spent_b = Fraction(0)
        root_a, root_b = params.m_a0, params.m_b0
        for it in inst.iterations:
            where = f"i{inst.id}n{it.n}"
            p = ClopenSet.cylinder(it.p)
            # frontiers cover exactly what is left of w0, and L stays bounded
            for side, recs, words in (("A", A, it.lts_a), ("B", B, it.lts_b)):
                cover = _union_disjoint([recs[w].sset for w in words])
                if cover is None or cover != w0 - P_prev:
                    rep.fail(f"{where}:cover-{side}", w0 - P_prev, cover)
                Lsum = sum((recs[w].L for w in words), Fraction(0))
                if Lsum > P_prev.measure():
                    rep.fail(f"{where}:L-bound-{side}", f"<= {_text(P_prev.measure())}", Lsum)
                for w in words:
                    r = recs[w]
                    if r.ms < 0 or r.L < 0 or r.me <= 0 or r.m != r.ms + r.me:
                        rep.fail(f"{where}:fields-{side}@{w or 'ε'}", "m=ms+me, ms>=0, me>0",
                                 f"{_text(r.m)},{_text(r.ms)},{_text(r.me)}")
            # purity of the purified A-frontier
            for (a, b), s in _cells(A, it.ltn_a, B, it.lts_b).items():
                if not _pure_against(s.lex, it.p):
                    rep.fail(f"{where}:purity@({a or 'ε'},{b or 'ε'})", "pure", s)
            # relative mass is carried over by the purification split
            for a in it.ltn_a:
                r = A[a]
                if a in it.lts_a:
                    continue
                parent = A.get(r.parent)
                if parent is None or r.parent not in it.lts_a:
                    rep.fail(f"{where}:prep-parent@{a}", "frontier parent", r.parent)
                    continue
                fc, fp = _relative(lam0, m0, r.ms, _SL(r)), _relative(lam0, m0, parent.ms, _SL(parent))
                if fc != fp:
                    rep.fail(f"{where}:f-prep@{a}", fp, fc)
            rem_a, rem_b = _replay_assignments(rep, where, it, A, B, p, c)
            # relative mass after the bets is carried to the new leaves
            for side, recs, old, new, rem in (("A", A, it.ltn_a, it.next_lts_a, rem_a),
                                              ("B", B, it.lts_b, it.next_lts_b, rem_b)):
                olds = set(old)
                for w in new:
                    if w in olds:
                        continue
                    r = recs[w]
                    parent = recs.get(r.parent)
                    if parent is None or r.parent not in olds:
                        rep.fail(f"{where}:distri-parent-{side}@{w}", "frontier parent", r.parent)
                        continue
                    fp = _relative(lam0, m0, rem[r.parent], _SL(parent))
                    fc = _relative(lam0, m0, r.ms, _SL(r))
                    if fc != fp:
                        rep.fail(f"{where}:f-distri-{side}@{w}", fp, fc)
            # children of a betting pair do not meet again
            kids_a, kids_b = {}, {}
            for w in it.next_lts_a:
                kids_a.setdefault(A[w].parent, []).append(A[w].sset)
            for w in it.next_lts_b:
                kids_b.setdefault(B[w].parent, []).append(B[w].sset)
            for x in it.assignments:
                sa = ClopenSet.union_all(kids_a.get(x.a_word, []))
                sb = ClopenSet.union_all(kids_b.get(x.b_word, []))
                if not sa.isdisjoint(sb):
                    rep.fail(f"{where}:empty-inter@pair{x.pair_index}", "disjoint", sa & sb)
            # global conservation: frontier plus everything spawned so far
            spent_a += sum((s.m_a for s in it.spawns), Fraction(0))
            spent_b += sum((s.m_b for s in it.spawns), Fraction(0))
            fa = sum((A[w].m for w in it.next_lts_a), Fraction(0))
            fb = sum((B[w].m for w in it.next_lts_b), Fraction(0))
            if fa + spent_a != root_a:
                rep.fail(f"{where}:conservation-A", root_a, fa + spent_a)
            if fb + spent_b != root_b:
                rep.fail(f"{where}:conservation-B", root_b, fb + spent_b)
            P_prev = P_prev | p
    return rep


# -- doubling ------------------------------------------------------------


def check_doubling(trace):
    rep = CheckReport("doubling")
    for inst in trace.instances:
        lam0, m0, c = _params(inst)
        for it in inst.iterations:
            where = f"i{inst.id}n{it.n}"
            p = ClopenSet.cylinder(it.p)
            cyls = [ClopenSet.cylinder(g) for g, *_ in it.ltp]
            cover = _union_disjoint(cyls)
            if cover is None or cover != p:
                rep.fail(f"{where}:coverage", p, cover)
            if sorted(g for g, *_ in it.ltp) != sorted(s.cylinder for s in it.spawns):
                rep.fail(f"{where}:spawn-list", len(it.ltp), len(it.spawns))
            for s in it.spawns:
                lam = ClopenSet.cylinder(s.cylinder).measure()
                if s.m_a <= 0 or s.m_b <= 0:
                    rep.fail(f"{where}:positive@{s.cylinder}", "> 0",
                             f"{_text(s.m_a)},{_text(s.m_b)}")
                best = max(s.m_a, s.m_b) / lam
                if best < c:
                    rep.fail(f"{where}:capital@{s.cylinder}", f">= {_text(c)}", best)
    return rep


def run_all(trace, seed=0, selections=100):
    reports = [check_tree_laws(trace.tree_a(), "tree-laws-A"),
               check_tree_laws(trace.tree_b(), "tree-laws-B")]
    ortho = CheckReport("orthogonality")
    for snap in snapshots(trace):
        ortho.merge(check_orthogonality(snap))
    reports += [ortho, check_accounting(trace), check_doubling(trace),
                check_lemma1_random(trace, seed, selections)]
    return reports
