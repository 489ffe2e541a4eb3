"""Transforms between betting strategies, martingale processes and
nonmonotonic strategies, plus Martin-Löf test extraction from a strategy."""

from dataclasses import dataclass, field
from fractions import Fraction

from .betting import (MartingaleProcessTable, NonmonotonicStrategy, StrategyTable,
                      capital)
from .core import ClopenSet, words_of_length
from .errors import BudgetError, InputError


@dataclass(frozen=True)
class StepBudget:
    max_expansion_length: int = 64
    max_nodes: int = 1 << 20

    def __post_init__(self):
        if self.max_expansion_length <= 0 or self.max_nodes <= 0:
            raise InputError("budget values must be positive")


@dataclass
class MLTestLevels:
    levels: list = field(default_factory=list)
    path: list = field(default_factory=list)
    capitals: list = field(default_factory=list)

    def measures(self):
        return [s.measure() for s in self.levels]

    def check(self):
        for i, s in enumerate(self.levels, start=1):
            if s.measure() != Fraction(1, 1 << i):
                return False
            if i > 1 and not s.issubset(self.levels[i - 2]):
                return False
        return True


# -- strategy -> martingale process --------------------------------------


def strategy_to_mp(t, depth, budget=None):
    """Martingale process on words of length <= ``depth`` from a strategy.

    Each strategy node ``r`` owns the class of words tiling its set at the
    length its value was fixed.  The words keep the parent's value until the
    split length ``max(l_r + 1, l')`` (``l'`` the longest generator among the
    children) and then take the children's capitals.
    """
    budget = budget or StepBudget()
    if (1 << (depth + 1)) - 1 > budget.max_nodes:
        raise BudgetError(f"depth {depth} needs more than {budget.max_nodes} words")
    if depth > budget.max_expansion_length:
        raise BudgetError(f"depth {depth} exceeds the expansion budget")
    if t.sset(t.root) != ClopenSet.full():
        raise InputError("strategy root must hold the full space")
    values = {"": capital(t, t.root)}
    # (node, length at which its value was set)
    pending = [(t.root, 0)]
    owner = {}
    while pending:
        r, lr = pending.pop()
        val = capital(t, r)
        split = None
        if r + "0" in t and r + "1" in t:
            lprime = max(t.sset(r + "0").max_length, t.sset(r + "1").max_length)
            split = max(lr + 1, lprime)
        for n in range(lr + 1, depth + 1):
            if split is not None and n == split:
                break
            owner.setdefault(n, []).append((t.sset(r), val))
        if split is not None and split <= depth:
            for c in (r + "0", r + "1"):
                owner.setdefault(split, []).append((t.sset(c), capital(t, c)))
                pending.append((c, split))
    for n in range(1, depth + 1):
        for s, val in owner.get(n, ()):
            for w in _tile(s, n):
                values[w] = val
    return MartingaleProcessTable(depth, values)


def _tile(s, n):
    for g in s.lex:
        for tail in words_of_length(n - len(g)):
            yield g + tail


# -- martingale process -> strategy --------------------------------------


def mp_to_strategy(p, budget=None):
    """Strategy whose class nodes carry the process's class values.

    Whenever the values of a class ``V`` first change at some length, the
    resulting classes ``V_1..V_n`` become the chain ``r1, r01, ..., r0^(n-1)``.
    """
    budget = budget or StepBudget()
    if p.validate().violations:
        raise InputError("martingale process table is invalid")
    limit = min(p.depth, budget.max_expansion_length)
    nodes = {"": (ClopenSet.full(), p[""])}
    queue = [("", [""], 0)]
    while queue:
        r, cls, length = queue.pop(0)
        value = p[cls[0]]
        n = length + 1
        found = None
        while n <= limit:
            ext = _extensions(cls, n - length)
            if any(p[w] != value for w in ext):
                found = n
                break
            n += 1
        if found is None:
            if limit < p.depth:
                raise BudgetError(
                    f"no value change below {r!r} within {limit} bits (table depth {p.depth})")
            continue
        parts = p.classes(found, within=cls)
        scale = Fraction(1, 1 << found)
        chain = r
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            word = chain if last else chain + "1"
            nodes[word] = (ClopenSet(part), sum(p[w] for w in part) * scale)
            queue.append((word, part, found))
            if not last:
                rest = [w for q in parts[i + 1:] for w in q]
                chain = chain + "0"
                nodes[chain] = (ClopenSet(rest), sum(p[w] for w in rest) * scale)
            if len(nodes) > budget.max_nodes:
                raise BudgetError(f"more than {budget.max_nodes} strategy nodes")
    return StrategyTable(nodes)


def _extensions(cls, k):
    tails = words_of_length(k)
    return [w + t for w in cls for t in tails]


# -- nonmonotonic <-> sequence-set ---------------------------------------


def nm_to_seqset(b, depth):
    """Sequence-set table splitting each node by the bit its scan rule reads."""
    nodes = {"": (ClopenSet.full(), b.martingale[""])}
    stack = [""]
    while stack:
        v = stack.pop()
        if len(v) >= depth or v not in b.scan:
            continue
        c0, c1 = v + "0", v + "1"
        if c0 not in b.martingale or c1 not in b.martingale:
            continue
        pos = b.scan[v]
        s = nodes[v][0]
        for c, bit in ((c0, 0), (c1, 1)):
            nodes[c] = (s.intersect(ClopenSet.with_bit(pos, bit)),
                        b.martingale[c] / (1 << len(c)))
            stack.append(c)
    return StrategyTable(nodes)


def split_position(s, s0, s1):
    """Position i with s0 = s ∩ {bit i = 0} and s1 = s ∩ {bit i = 1}, or None."""
    top = max(s.max_length, s0.max_length, s1.max_length)
    for i in range(top):
        if (s.intersect(ClopenSet.with_bit(i, 0)) == s0
                and s.intersect(ClopenSet.with_bit(i, 1)) == s1):
            return i
    return None


def seqset_to_nm(t):
    """Inverse of :func:`nm_to_seqset` on tables whose splits are positional."""
    martingale = {}
    scan = {}
    for w in t.words():
        martingale[w] = t.mass(w) * (1 << len(w))
        if w + "0" in t and w + "1" in t:
            pos = split_position(t.sset(w), t.sset(w + "0"), t.sset(w + "1"))
            if pos is None:
                raise InputError(f"split at node {w!r} is not positional")
            scan[w] = pos
    return NonmonotonicStrategy(martingale, scan)


# -- Martin-Löf test from a total sequence-set strategy -------------------


def mltest_from_strategy(t, levels, root=None):
    """Nested sets along a path where capital never increases.

    ``t`` is a StrategyTable or a callable ``word -> ((set0, mass0), (set1,
    mass1))`` that returns None where the strategy is undefined; for a
    callable, ``root`` is the root's ``(set, mass)`` (full space and mass 1
    by default).  The 0-child is preferred whenever its capital does not
    exceed the parent's.
    """
    expand = _expander(t, root)
    word = ""
    s, m = expand.root()
    cap = m / s.measure()
    out = MLTestLevels()
    for _ in range(levels):
        kids = expand(word)
        if kids is None:
            raise InputError(f"strategy is not total: no children at {word!r}")
        (s0, m0), (s1, m1) = kids
        if s0.measure() != s1.measure() or s0.measure() * 2 != s.measure():
            raise InputError(f"split at {word!r} is not a sequence-set split")
        c0 = m0 / s0.measure()
        if c0 <= cap:
            word, s, m, cap = word + "0", s0, m0, c0
        else:
            word, s, m = word + "1", s1, m1
            cap = m1 / s1.measure()
        out.levels.append(s)
        out.path.append(word)
        out.capitals.append(cap)
    return out


class _expander:
    def __init__(self, t, root):
        self.t = t
        self._root = root

    def root(self):
        if isinstance(self.t, StrategyTable):
            return self.t.sset(self.t.root), self.t.mass(self.t.root)
        return self._root or (ClopenSet.full(), Fraction(1))

    def __call__(self, word):
        t = self.t
        if isinstance(t, StrategyTable):
            if word + "0" in t and word + "1" in t:
                return ((t.sset(word + "0"), t.mass(word + "0")),
                        (t.sset(word + "1"), t.mass(word + "1")))
            return None
        return t(word)
