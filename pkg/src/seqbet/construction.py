"""Construction of two sequence-set strategies A and B that, on every cylinder
of an enumerated small-measure set P, at least double one instance capital.

Every node keeps bookkeeping next to its set and mass: ``ms`` (mass used for
betting), ``me`` (reserve, spread in proportion to measure), and ``L`` (share
of already enumerated measure charged to the node).  An instance runs one
iteration per enumerated cylinder ``p``:

1. ``prep_step`` splits A-leaves whose intersection with some B-leaf holds
   sequences both inside and outside ``p``;
2. ``assign_masses`` lets each pair whose intersection lies in ``p`` put
   ``2c`` times the intersection's measure on it, B paying first;
3. ``distri_step`` splits every touched leaf into single cylinders inside
   ``p`` (new instance roots) and leaves outside ``p``;
4. ``spawn_children`` computes the masses of the new instance roots.

Splitting is done on *cells*, the pairwise intersections of the two
frontiers.  A new leaf receives a share of every cell of its parent in
proportion to its measure, which keeps the cross-strategy intersections close
to a product measure; the orthogonality inequality is then verified exactly
for every candidate split, and the subdivision depth ``h`` is increased until
it holds.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .betting import StrategyTable
from .core import ClopenSet, as_clopen, carve, check_word, length_lex_key, overlay
from .errors import InputError, InsufficiencyError, InternalError, LimitError


# -- records -------------------------------------------------------------


@dataclass
class NodeRecord:
    word: str
    sset: ClopenSet
    m: Fraction
    ms: Fraction
    me: Fraction
    L: Fraction = Fraction(0)
    kind: str = "frontier"
    parent: str = None
    instance: int = 0

    @property
    def measure(self):
        return self.sset.measure()

    @property
    def SL(self):
        return self.sset.measure() + self.L


@dataclass(frozen=True)
class InstanceParams:
    w0: ClopenSet
    m_a0: Fraction
    m_b0: Fraction
    m0: Fraction
    c: Fraction
    cs: Fraction
    const: Fraction

    def relative_mass(self, ms, SL):
        return self.w0.measure() / self.m0 * ms / SL


def instance_params(w0, m_a0, m_b0, cs):
    w0 = as_clopen(w0)
    lam = w0.measure()
    m_a0, m_b0, cs = Fraction(m_a0), Fraction(m_b0), Fraction(cs)
    m0 = min(m_a0, m_b0) / 2
    c = 2 * (m_a0 + m_b0) / lam
    const = m0 ** 2 / (lam * 4 * c ** 2 * (1 + cs))
    return InstanceParams(w0, m_a0, m_b0, m0, c, cs, const)


@dataclass(frozen=True)
class GranularityParams:
    d: int
    m_split: int
    h: int


@dataclass(frozen=True)
class MassAssignment:
    pair_index: int
    a_word: str
    b_word: str
    inter: ClopenSet
    dA: Fraction
    dB: Fraction


@dataclass(frozen=True)
class SpawnRecord:
    cylinder: str
    m_a: Fraction
    m_b: Fraction
    parent_pair: tuple
    instance: int
    child_instance: int = None


@dataclass
class IterationRecord:
    instance: int
    n: int
    p: str
    lts_a: list
    lts_b: list
    ltn_a: list = field(default_factory=list)
    prep_params: dict = field(default_factory=dict)
    assignments: list = field(default_factory=list)
    ms_after_a: dict = field(default_factory=dict)
    ms_after_b: dict = field(default_factory=dict)
    distri_params: GranularityParams = None
    ltp: list = field(default_factory=list)
    spawns: list = field(default_factory=list)
    next_lts_a: list = field(default_factory=list)
    next_lts_b: list = field(default_factory=list)


@dataclass
class InstanceRecord:
    id: int
    params: InstanceParams
    a0: str
    b0: str
    P: list
    parent: int = None
    iterations: list = field(default_factory=list)


@dataclass
class ConstructionTrace:
    instances: list = field(default_factory=list)
    nodes_a: dict = field(default_factory=dict)
    nodes_b: dict = field(default_factory=dict)
    complete: bool = True
    note: str = ""

    def tree(self, side):
        recs = self.nodes_a if side == "A" else self.nodes_b
        return StrategyTable({w: (r.sset, r.m) for w, r in recs.items()})

    def tree_a(self):
        return self.tree("A")

    def tree_b(self):
        return self.tree("B")

    def iterations(self):
        for inst in self.instances:
            yield from inst.iterations

    def spawns(self):
        for it in self.iterations():
            yield from it.spawns


@dataclass
class Limits:
    max_iterations: int = 64
    max_instances: int = 100000
    max_param_search: int = 12


@dataclass
class InstanceState:
    params: InstanceParams
    record: InstanceRecord
    trace: ConstructionTrace
    n: int = 0
    P_enumerated: ClopenSet = field(default_factory=ClopenSet.empty)
    lts_a: list = field(default_factory=list)
    lts_b: list = field(default_factory=list)
    limits: Limits = field(default_factory=Limits)
    last_split: tuple = None

    @property
    def recs_a(self):
        return self.trace.nodes_a

    @property
    def recs_b(self):
        return self.trace.nodes_b


# -- initialization ------------------------------------------------------


def check_prefix_free(words):
    ws = sorted(words)
    for u, v in zip(ws, ws[1:]):
        if v.startswith(u):
            return False
    return True


def init_instance(a0, b0, cs, P, trace=None, instance_id=0, parent=None, limits=None,
                  register=True):
    """Set up an algorithm instance on the node pair ``(a0, b0)``.

    With ``register`` the instance's view of its roots (betting mass ``m0``)
    replaces the tree records; a child instance with nothing to enumerate
    leaves the records of the spawning iteration untouched.
    """
    cs = Fraction(cs)
    if not (0 < cs < 1):
        raise InputError(f"cs must lie strictly between 0 and 1, got {cs}")
    if a0.sset != b0.sset or not a0.sset.is_single_cylinder():
        raise InputError("instance nodes must share one cylinder")
    if a0.m <= 0 or b0.m <= 0:
        raise InputError("instance nodes need positive mass")
    w0 = a0.sset
    wword = w0.lex[0]
    P = [check_word(p) for p in P]
    if not check_prefix_free(P):
        raise InputError("P is not prefix-free")
    for p in P:
        if not (p.startswith(wword) and len(p) > len(wword)):
            raise InputError(f"cylinder {p!r} is not strictly inside w0={wword!r}")
    params = instance_params(w0, a0.m, b0.m, cs)
    lamP = ClopenSet(P).measure()
    if lamP >= params.const:
        raise InputError(
            f"measure of P is {lamP}, which is not below the bound const={params.const}")
    trace = trace if trace is not None else ConstructionTrace()
    m0 = params.m0
    ra = NodeRecord(a0.word, w0, a0.m, m0, a0.m - m0, Fraction(0), "instance-root",
                    a0.parent, instance_id)
    rb = NodeRecord(b0.word, w0, b0.m, m0, b0.m - m0, Fraction(0), "instance-root",
                    b0.parent, instance_id)
    if register:
        trace.nodes_a[ra.word] = ra
        trace.nodes_b[rb.word] = rb
    rec = InstanceRecord(instance_id, params, ra.word, rb.word, list(P), parent)
    trace.instances.append(rec)
    return InstanceState(params, rec, trace, 0, ClopenSet.empty(), [ra.word], [rb.word],
                         limits or Limits())


# -- generic helpers -----------------------------------------------------


def orthogonal(params, rec_a, rec_b, inter_measure, strict=True):
    lhs = params.w0.measure() * inter_measure
    rhs = (1 + params.cs) * rec_a.SL * rec_b.SL
    return lhs < rhs if strict else lhs <= rhs


def orthogonality_ratio(params, rec_a, rec_b, inter_measure):
    return params.w0.measure() * inter_measure / (rec_a.SL * rec_b.SL)


def _round_sig(x, bits):
    """Largest integer <= x that keeps only ``bits`` leading binary digits."""
    n = int(x)
    drop = n.bit_length() - bits
    return n >> drop << drop if drop > 0 else n


def _trailing_zeros(n):
    return (n & -n).bit_length() - 1 if n else 1 << 30


def _coarse_shares(need, rems, allowed, weights, bits):
    """Integer shares of ``need`` over ``allowed``, roughly in proportion to
    ``weights``.

    Each share is rounded down to ``bits`` leading binary digits so that it
    cuts a piece into few cylinders; the rounding deficit goes to the pieces
    with the most room left.
    """
    total = sum(weights[k] for k in allowed)
    if not total:
        return None if need else {}
    out = {}
    for k in allowed:
        out[k] = min(_round_sig(Fraction(need * weights[k], total), bits), rems[k])
    deficit = need - sum(out.values())
    for k in sorted(allowed, key=lambda k: (out[k] - rems[k], k)):
        if not deficit:
            break
        add = min(deficit, rems[k] - out[k])
        out[k] += add
        deficit -= add
    return None if deficit else out


def split_pieces(pieces, specs, granularity, weights=None, bits=4):
    """Distribute disjoint ``pieces`` over new parts.

    ``specs`` lists ``(units, fixed, forbidden)`` per part, sizes in units of
    ``2**-granularity``: ``fixed`` pieces go to that part whole, ``forbidden``
    ones are never touched by it.  Every part but the last draws coarse
    shares from the other pieces in proportion to ``weights`` (default: the
    piece sizes); the last part takes whatever is left.  Returns
    ``out[j][k]``, the share of piece ``k`` in part ``j``, or None when the
    parts cannot be filled.
    """
    rems = [p.units(granularity) for p in pieces]
    weights = weights or list(rems)
    alloc = [dict() for _ in specs]
    for j, (_, fixed, _) in enumerate(specs):
        for k in fixed:
            alloc[j][k] = rems[k]
            rems[k] = 0
    last = len(specs) - 1
    for j, (units, _, forbidden) in enumerate(specs):
        need = units - sum(alloc[j].values())
        if need < 0:
            return None
        allowed = [k for k in range(len(pieces)) if rems[k] and k not in forbidden]
        if j == last:
            if sum(rems) != need or len(allowed) != sum(1 for r in rems if r):
                return None
            share = {k: rems[k] for k in allowed}
        else:
            share = _coarse_shares(need, rems, allowed, weights, bits)
            if share is None:
                return None
        for k, u in share.items():
            if u:
                alloc[j][k] = alloc[j].get(k, 0) + u
                rems[k] -= u
    out = [[ClopenSet.empty()] * len(pieces) for _ in specs]
    for k, piece in enumerate(pieces):
        takers = [j for j in range(len(specs)) if alloc[j].get(k)]
        if not takers:
            continue
        # aligned shares first keep the cuts on coarse boundaries
        order = sorted((j for j in takers if j != last),
                       key=lambda j: (-_trailing_zeros(alloc[j][k]), -alloc[j][k], j))
        if last in takers:
            order.append(last)
        for j, part in zip(order, carve(piece, [alloc[j][k] for j in order], granularity)):
            out[j][k] = part
    return out


def split_groups(pieces, groups, granularity, weights=None, bits=4):
    """:func:`split_pieces` on groups, then each group cut into leaves whose
    measures are the binary expansion of the group's measure.  Returns the
    leaf sets per group, or None."""
    parts = split_pieces(pieces, groups, granularity, weights, bits)
    if parts is None:
        return None
    out = []
    for (units, _, _), row in zip(groups, parts):
        sub = [s for s in row if s]
        sizes = [1 << b for b in range(units.bit_length() - 1, -1, -1) if units >> b & 1]
        if len(sizes) == 1:
            out.append([ClopenSet.union_all(sub)])
            continue
        # the largest leaf absorbs the rounding of the others
        specs = [(u, (), ()) for u in sizes[1:] + sizes[:1]]
        leaves = split_pieces(sub, specs, granularity, None, bits)
        if leaves is None:
            return None
        sets = [ClopenSet.union_all(r) for r in leaves]
        out.append(sets[-1:] + sets[:-1])
    return out


def kraft_tree(root_word, leaves):
    """Words for a binary tree whose leaves are the given sets.

    ``leaves`` is a list of ``(ClopenSet, payload)`` whose measures are
    dyadic fractions of the parent's measure summing to it.  The two smallest
    subtrees (ties broken by least generator) are merged repeatedly; the
    subtree with the smaller least generator becomes the 0-child.  Returns
    ``(assigned, internal)``: ``[(word, set, payload)]`` for leaves and
    ``[(word, set)]`` for intermediate nodes.
    """
    def key_of(s):
        return length_lex_key(s.generators[0]) if len(s) else (1 << 30, "")

    items = [(s.measure(), key_of(s), i, ("leaf", s, payload))
             for i, (s, payload) in enumerate(leaves)]
    counter = len(items)
    while len(items) > 1:
        items.sort(key=lambda t: (t[0], t[1], t[2]))
        x, y = items[0], items[1]
        if x[0] != y[0]:
            raise InternalError("leaf measures do not form a complete binary tree")
        left, right = (x, y) if (x[1], x[2]) <= (y[1], y[2]) else (y, x)
        merged_set = ClopenSet.union_all([_node_set(left[3]), _node_set(right[3])])
        items = items[2:] + [(x[0] * 2, min(x[1], y[1]), counter,
                              ("node", merged_set, left[3], right[3]))]
        counter += 1
    assigned, internal = [], []

    def walk(node, word):
        if node[0] == "leaf":
            assigned.append((word, node[1], node[2]))
        else:
            if word != root_word:
                internal.append((word, node[1]))
            walk(node[2], word + "0")
            walk(node[3], word + "1")

    walk(items[0][3], root_word)
    return assigned, internal


def _node_set(node):
    return node[1]


def _add_internal(recs, internal, assigned_recs, instance):
    """Records for intermediate tree nodes, with sums of their leaves."""
    by_word = {r.word: r for r in assigned_recs}
    for word, s in sorted(internal, key=lambda t: -len(t[0])):
        kids = [by_word[word + "0"], by_word[word + "1"]]
        rec = NodeRecord(word, s, sum(k.m for k in kids), sum(k.ms for k in kids),
                         sum(k.me for k in kids), sum(k.L for k in kids), "internal",
                         None, instance)
        by_word[word] = rec
        recs[word] = rec


def _frontier_cells(st, words_a, words_b):
    return overlay({a: st.recs_a[a].sset for a in words_a},
                   {b: st.recs_b[b].sset for b in words_b})


def _param_sequence(limits):
    # (m, h, bits): leaf-grid exponent, subdivision depth, share precision
    return [(2 + 2 * i, 2 + 2 * i, 3 + i) for i in range(max(1, limits.max_param_search))]

def _leaf_records(parent, assigned, instance, kind):
    """Children of ``parent`` with ms, me and L split in proportion to measure."""
    lam = parent.measure
    out = []
    for word, s, _ in assigned:
        q = s.measure() / lam
        ms, me = parent.ms * q, parent.me * q
        out.append(NodeRecord(word, s, ms + me, ms, me, parent.L * q, kind, parent.word,
                              instance))
    return out


def _rows(cells, side):
    rows = {}
    for (a, b), s in sorted(cells.items(), key=lambda kv: (length_lex_key(kv[0][0]),
                                                           length_lex_key(kv[0][1]))):
        if side == "A":
            rows.setdefault(a, []).append((b, s))
        else:
            rows.setdefault(b, []).append((a, s))
    return rows


def _max_ratio(params, recs_a, recs_b, words_a, words_b):
    """Largest orthogonality ratio over all intersecting pairs (0 if none)."""
    cells = overlay({a: recs_a[a].sset for a in words_a}, {b: recs_b[b].sset for b in words_b})
    return max((orthogonality_ratio(params, recs_a[a], recs_b[b], s.measure())
                for (a, b), s in cells.items()), default=Fraction(0))


class _Best:
    """Keeps the candidate with the smallest orthogonality ratio below the bound;
    ``done`` turns true once a candidate leaves half of the slack ``cs``."""

    def __init__(self, params):
        self.bound = 1 + params.cs
        self.goal = 1 + params.cs / 2
        self.ratio = None
        self.value = None

    def offer(self, ratio, value):
        if ratio < self.bound and (self.ratio is None or ratio < self.ratio):
            self.ratio, self.value = ratio, value

    @property
    def done(self):
        return self.ratio is not None and self.ratio <= self.goal


# -- prep ----------------------------------------------------------------


def _prep_groups(rec, row, p, m, h):
    """Pieces and leaf groups for purifying one A-leaf.

    Group measures are multiples of ``2**-m`` times the leaf's measure;
    pieces are cut at ``h`` further bits below the finest generator.
    """
    pieces, impure, whole = [], [], []
    for b, cell in row:
        cp = cell & p
        if not cp or cp == cell:
            pieces.append(cell)
            whole.append(cell)
        else:
            pieces.append(cp)
            pieces.append(cell - cp)
            whole.extend((cell, cell))
            impure.append((cell, len(pieces) - 2, len(pieces) - 1))
    if not impure:
        return None, None, 0, None
    G = max(s.max_length for s in pieces) + m + h
    # draw from a split cell in proportion to the whole cell, so that every
    # group ends up with its measure-proportional share of each B-leaf
    weights = [s.units(G) for s in whole]
    total = rec.sset.units(G)
    grid = total >> m
    groups = []
    for cell, kp, kn in impure:
        x = pieces[kp].units(G)
        target = Fraction(total * x, cell.units(G))
        u = max(-(-x // grid), round(target / grid)) * grid
        groups.append((u, (kp,), frozenset((kn,))))
    rest = total - sum(g[0] for g in groups)
    if rest <= 0:
        return pieces, None, G, None
    groups.append((rest, (), frozenset()))
    return pieces, groups, G, weights


def prep_step(st, p_n):
    """Purify the A-frontier against ``p_n``; returns the new frontier words.

    Each A-leaf whose intersection with some B-leaf is split by ``p_n`` gets
    one group of leaves per such intersection, holding its part inside
    ``p_n`` and a measure-proportional share of the leaf's other cells, plus
    a group holding everything else.  The subdivision depth is searched until
    the new leaves are orthogonal to the B-frontier.
    """
    p_n = as_clopen(p_n)
    params, inst = st.params, st.record.id
    cells = _frontier_cells(st, st.lts_a, st.lts_b)
    rows = _rows(cells, "A")
    ltn, used = [], {}
    for a in st.lts_a:
        rec = st.recs_a[a]
        row = rows.get(a, [])
        if not any((s & p_n) and not s <= p_n for _, s in row):
            ltn.append(a)
            continue
        best = _Best(params)
        for m, h, bits in _param_sequence(st.limits):
            pieces, groups, G, weights = _prep_groups(rec, row, p_n, m, h)
            if groups is None:
                continue
            grouped = split_groups(pieces, groups, G, weights, bits)
            if grouped is None:
                continue
            leaves = [(s, None) for g in grouped for s in g]
            assigned, internal = kraft_tree(a, leaves)
            new = _leaf_records(rec, assigned, inst, "prep")
            lookup = _Chain({r.word: r for r in new}, st.recs_a)
            words = [r.word for r in new]
            if not _pure(lookup, st.recs_b, words, st.lts_b, p_n):
                continue
            ratio = _max_ratio(params, lookup, st.recs_b, words, st.lts_b)
            best.offer(ratio, (new, internal, words, G, m, h))
            if best.done:
                break
        if best.value is None:
            raise InternalError(
                f"no subdivision depth up to the search limit purifies A-node {a!r}")
        new, internal, words, G, m, h = best.value
        for r in new:
            st.recs_a[r.word] = r
        _add_internal(st.recs_a, internal, new, inst)
        used[a] = GranularityParams(G, m, h)
        ltn.extend(sorted(words, key=length_lex_key))
    return ltn, used


def _pure(recs_a, recs_b, words_a, words_b, p):
    cells = overlay({a: recs_a[a].sset for a in words_a}, {b: recs_b[b].sset for b in words_b})
    return all(not (s & p) or s <= p for s in cells.values())


# -- mass assignment -----------------------------------------------------


def assign_masses(st, ltn_a, p_n):
    """Bets on every pair whose intersection lies in ``p_n``; B pays first."""
    p_n = as_clopen(p_n)
    c = st.params.c
    cells = _frontier_cells(st, ltn_a, st.lts_b)
    pairs = sorted(((a, b), s) for (a, b), s in cells.items() if s <= p_n)
    pairs.sort(key=lambda kv: (length_lex_key(kv[0][0]), length_lex_key(kv[0][1])))
    rem_a = {a: st.recs_a[a].ms for a in ltn_a}
    rem_b = {b: st.recs_b[b].ms for b in st.lts_b}
    out = []
    for i, ((a, b), inter) in enumerate(pairs):
        need = 2 * c * inter.measure()
        dB = min(need, rem_b[b])
        dA = need - dB
        if dA > rem_a[a]:
            raise InsufficiencyError(
                f"A-node {a!r} has {rem_a[a]} left but pair {i} needs {dA}",
                {"instance": st.record.id, "n": st.n + 1, "pair_index": i, "a": a, "b": b,
                 "inter": inter, "demand": dA, "remaining_a": rem_a[a],
                 "remaining_b": rem_b[b], "assigned": list(out)})
        rem_a[a] -= dA
        rem_b[b] -= dB
        out.append(MassAssignment(i, a, b, inter, dA, dB))
    return out


def remaining_masses(st, ltn_a, assignments):
    rem_a = {a: st.recs_a[a].ms for a in ltn_a}
    rem_b = {b: st.recs_b[b].ms for b in st.lts_b}
    for x in assignments:
        rem_a[x.a_word] -= x.dA
        rem_b[x.b_word] -= x.dB
    return rem_a, rem_b


# -- distribution --------------------------------------------------------


def triplet_mass(me0, lam_w0, d, inter, um, node_set, cyl):
    """Mass a new instance root receives on the cylinder ``cyl``."""
    lw = cyl.measure()
    m = me0 * lw / lam_w0 + d * lw / inter.measure()
    if um:
        m += um * lw / node_set.measure()
    return m


def _distri_node(st, side, rec, row, ltp_cyls, rem, p, h, bits, staged):
    params, inst = st.params, st.record.id
    me0 = (params.m_a0 if side == "A" else params.m_b0) - params.m0
    lam0 = params.w0.measure()
    S = rec.sset
    R = S - p
    um = rem if not R else Fraction(0)
    leaves = [(ClopenSet.cylinder(g), ("ltp", g, x)) for g, x in ltp_cyls]
    if R:
        pieces = [s - p for _, s in row]
        pieces = [s for s in pieces if s]
        # the smallest leaf must still see every piece at h bits of precision
        finest = R.measure().denominator.bit_length() - 1
        G = max(s.max_length for s in pieces) + finest - (S.measure().denominator.bit_length() - 1) + h
        grouped = split_groups(pieces, [(R.units(G), (), ())], G, None, bits)
        if grouped is None:
            return None
        leaves.extend((s, ("rest",)) for s in grouped[0])
    assigned, internal = kraft_tree(rec.word, leaves)
    lamR = R.measure()
    new = []
    ltp = {}
    for word, s, payload in assigned:
        lam = s.measure()
        me = me0 * lam / lam0
        if payload[0] == "ltp":
            _, g, x = payload
            ltp[g] = (word, x)
            if word == rec.word:
                # the node is itself the cylinder; its record stays as is
                continue
            d = x.dA if side == "A" else x.dB
            m = triplet_mass(me0, lam0, d, x.inter, um, S, s)
            r = NodeRecord(word, s, m, m - me, me, Fraction(0), "ltp", rec.word, inst)
        else:
            ms = rem * lam / lamR
            L = (rec.L + (S & p).measure()) * lam / lamR
            r = NodeRecord(word, s, ms + me, ms, me, L, "distri", rec.word, inst)
        new.append(r)
        staged[word] = r
    if internal:
        _add_internal(staged, internal, new, inst)
    rest = sorted((r.word for r in new if r.kind == "distri"), key=length_lex_key)
    return rest, ltp, max((len(r.word) for r in new), default=len(rec.word)) - len(rec.word)


def distri_step(st, ltn_a, assignments, p_n):
    """Split every node touched by ``p_n`` into its single cylinders inside
    ``p_n`` and leaves covering the rest.

    Returns ``(lts_a, lts_b, ltp, params)`` where ``ltp`` lists
    ``(cylinder, a_word, b_word, pair_index)``.
    """
    p_n = as_clopen(p_n)
    rem_a, rem_b = remaining_masses(st, ltn_a, assignments)
    cyl_a, cyl_b = {}, {}
    for x in assignments:
        for g in x.inter.lex:
            cyl_a.setdefault(x.a_word, []).append((g, x))
            cyl_b.setdefault(x.b_word, []).append((g, x))
    d = max([st.recs_a[a].sset.max_length for a in ltn_a]
            + [st.recs_b[b].sset.max_length for b in st.lts_b] + [p_n.max_length])
    if not assignments:
        st.last_split = ({}, {}, rem_a, rem_b)
        return list(ltn_a), list(st.lts_b), [], GranularityParams(d, 0, 0)
    touched_a = [a for a in ltn_a if a in cyl_a]
    touched_b = [b for b in st.lts_b if b in cyl_b]
    best = _Best(st.params)
    for _, h, bits in _param_sequence(st.limits):
        staged_a, staged_b = {}, {}
        lookup_a = _Chain(staged_a, st.recs_a)
        lookup_b = _Chain(staged_b, st.recs_b)
        rows = _rows(overlay({a: st.recs_a[a].sset for a in touched_a},
                             {b: st.recs_b[b].sset for b in st.lts_b}), "A")
        lts_a, ltp_a, depth, ok = [], {}, 0, True
        for a in ltn_a:
            if a not in cyl_a:
                lts_a.append(a)
                continue
            res = _distri_node(st, "A", st.recs_a[a], rows.get(a, []), cyl_a[a], rem_a[a],
                               p_n, h, bits, staged_a)
            if res is None:
                ok = False
                break
            lts_a.extend(res[0])
            ltp_a.update(res[1])
            depth = max(depth, res[2])
        if not ok:
            continue
        rows = _rows(overlay({a: lookup_a[a].sset for a in lts_a},
                             {b: st.recs_b[b].sset for b in touched_b}), "B")
        lts_b, ltp_b = [], {}
        for b in st.lts_b:
            if b not in cyl_b:
                lts_b.append(b)
                continue
            res = _distri_node(st, "B", st.recs_b[b], rows.get(b, []), cyl_b[b], rem_b[b],
                               p_n, h, bits, staged_b)
            if res is None:
                ok = False
                break
            lts_b.extend(res[0])
            ltp_b.update(res[1])
            depth = max(depth, res[2])
        if not ok:
            continue
        ratio = _max_ratio(st.params, lookup_a, lookup_b, lts_a, lts_b)
        best.offer(ratio, (staged_a, staged_b, lts_a, lts_b, ltp_a, ltp_b, depth, h))
        if best.done:
            break
    if best.value is None:
        raise InternalError("no subdivision depth up to the search limit keeps the "
                            "frontiers orthogonal")
    staged_a, staged_b, lts_a, lts_b, ltp_a, ltp_b, depth, h = best.value
    st.last_split = ({a: st.recs_a[a] for a in touched_a}, {b: st.recs_b[b] for b in touched_b},
                     rem_a, rem_b)
    st.recs_a.update(staged_a)
    st.recs_b.update(staged_b)
    ltp = []
    for g in sorted(ltp_a, key=length_lex_key):
        wa, x = ltp_a[g]
        wb, _ = ltp_b[g]
        ltp.append((g, wa, wb, x.pair_index))
    return lts_a, lts_b, ltp, GranularityParams(d, depth, h)


class _Chain:
    # read-only view: staged records shadow committed ones
    def __init__(self, first, second):
        self.first, self.second = first, second

    def __getitem__(self, k):
        r = self.first.get(k)
        return r if r is not None else self.second[k]


# -- spawning ------------------------------------------------------------


def spawn_children(st, ltp, assignments, p_n):
    """Masses of the new instance roots on each single cylinder inside p_n."""
    p_n = as_clopen(p_n)
    params = st.params
    lam0 = params.w0.measure()
    me0_a, me0_b = params.m_a0 - params.m0, params.m_b0 - params.m0
    by_index = {x.pair_index: x for x in assignments}
    parents_a, parents_b, rem_a, rem_b = st.last_split
    out = []
    for g, wa, wb, idx in ltp:
        x = by_index[idx]
        cyl = ClopenSet.cylinder(g)
        sa, sb = parents_a[x.a_word].sset, parents_b[x.b_word].sset
        um_a = rem_a[x.a_word] if sa <= p_n else Fraction(0)
        um_b = rem_b[x.b_word] if sb <= p_n else Fraction(0)
        m_a = triplet_mass(me0_a, lam0, x.dA, x.inter, um_a, sa, cyl)
        m_b = triplet_mass(me0_b, lam0, x.dB, x.inter, um_b, sb, cyl)
        if m_a <= 0 or m_b <= 0 or max(m_a, m_b) / cyl.measure() < params.c:
            raise InternalError(f"doubling fails on cylinder {g!r}: masses {m_a}, {m_b}")
        if st.recs_a[wa].m != m_a or st.recs_b[wb].m != m_b:
            raise InternalError(f"tree mass on {g!r} disagrees with the spawned masses")
        out.append(SpawnRecord(g, m_a, m_b, (x.a_word, x.b_word), st.record.id))
    return out


# -- driver --------------------------------------------------------------


def run_iteration(st, p):
    """One iteration of an instance on the enumerated cylinder ``p``."""
    p_set = ClopenSet.cylinder(p)
    if not p_set <= st.params.w0 or not p_set.isdisjoint(st.P_enumerated):
        raise InputError(f"cylinder {p!r} is not inside the unenumerated part of w0")
    it = IterationRecord(st.record.id, st.n + 1, p, list(st.lts_a), list(st.lts_b))
    ltn, it.prep_params = prep_step(st, p_set)
    it.ltn_a = list(ltn)
    it.assignments = assign_masses(st, ltn, p_set)
    lts_a, lts_b, ltp, it.distri_params = distri_step(st, ltn, it.assignments, p_set)
    _, _, rem_a, rem_b = st.last_split
    touched_a = {x.a_word for x in it.assignments}
    touched_b = {x.b_word for x in it.assignments}
    it.ms_after_a = {a: rem_a[a] for a in sorted(touched_a, key=length_lex_key)}
    it.ms_after_b = {b: rem_b[b] for b in sorted(touched_b, key=length_lex_key)}
    it.ltp = ltp
    it.spawns = spawn_children(st, ltp, it.assignments, p_set)
    it.next_lts_a, it.next_lts_b = list(lts_a), list(lts_b)
    st.lts_a, st.lts_b = lts_a, lts_b
    st.P_enumerated = st.P_enumerated | p_set
    st.n += 1
    st.record.iterations.append(it)
    return it


def run_construction(root_a, root_b, P, cs=Fraction(1, 2), limits=None, on_iteration=None):
    """Run the root instance on ``P`` and every spawned instance, depth first.

    ``root_a``/``root_b`` are NodeRecords (or ``(word, set, mass)`` triples)
    sharing one cylinder.  ``on_iteration`` is called with each finished
    IterationRecord.  Hitting a limit raises LimitError carrying the trace
    built so far.
    """
    limits = limits or Limits()
    root_a, root_b = _as_record(root_a), _as_record(root_b)
    trace = ConstructionTrace()
    st = init_instance(root_a, root_b, cs, P, trace, 0, limits=limits)
    counters = {"iterations": 0, "instances": 1}
    try:
        _run_instance(st, counters, on_iteration)
    except LimitError as exc:
        trace.complete = False
        trace.note = str(exc)
        exc.trace = trace
        raise
    return trace


def _as_record(x):
    if isinstance(x, NodeRecord):
        return x
    word, s, m = x
    m = Fraction(m)
    return NodeRecord(word, as_clopen(s), m, m, Fraction(0))


def _run_instance(st, counters, on_iteration):
    limits = st.limits
    queue = list(st.record.P)
    while queue:
        if counters["iterations"] >= limits.max_iterations:
            raise LimitError(f"iteration limit {limits.max_iterations} reached")
        p = queue.pop(0)
        it = run_iteration(st, p)
        counters["iterations"] += 1
        if on_iteration:
            on_iteration(it)
        for i, sp in enumerate(it.spawns):
            share = [q for q in queue if q.startswith(sp.cylinder) and q != sp.cylinder]
            queue = [q for q in queue if q not in share]
            if counters["instances"] >= limits.max_instances:
                raise LimitError(f"instance limit {limits.max_instances} reached")
            child_id = len(st.trace.instances)
            counters["instances"] += 1
            wa, wb = it.ltp[i][1], it.ltp[i][2]
            child = init_instance(st.recs_a[wa], st.recs_b[wb], st.params.cs, share,
                                  st.trace, child_id, st.record.id, limits,
                                  register=bool(share))
            it.spawns[i] = SpawnRecord(sp.cylinder, sp.m_a, sp.m_b, sp.parent_pair,
                                       sp.instance, child_id)
            _run_instance(child, counters, on_iteration)
