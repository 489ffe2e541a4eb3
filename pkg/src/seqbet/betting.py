"""Finite game objects: strategy tables, martingale processes and
nonmonotonic strategies, together with runners that play them against a
sequence."""

from dataclasses import dataclass, field
from fractions import Fraction

from .core import ClopenSet, as_clopen, check_word, length_lex_key, words_of_length
from .errors import InputError, OracleError


# -- sequences -----------------------------------------------------------


class SequenceOracle:
    """Deterministic access to the bits of an infinite binary sequence.

    Either wraps a finite prefix (querying beyond it raises OracleError) or a
    rule ``position -> bit``.
    """

    def __init__(self, rule=None, bits=None):
        if (rule is None) == (bits is None):
            raise InputError("give exactly one of rule or bits")
        if bits is not None:
            check_word(bits)
        self._rule = rule
        self._bits = bits

    @classmethod
    def from_bits(cls, bits):
        return cls(bits=bits)

    @classmethod
    def periodic(cls, pattern):
        check_word(pattern)
        if not pattern:
            raise InputError("empty period")
        return cls(rule=lambda i: pattern[i % len(pattern)])

    @classmethod
    def eventually(cls, prefix, tail):
        """``prefix`` followed by ``tail`` repeated forever."""
        check_word(prefix)
        check_word(tail)
        n = len(prefix)
        return cls(rule=lambda i: prefix[i] if i < n else tail[(i - n) % len(tail)])

    def bit(self, i):
        if self._bits is not None:
            if i >= len(self._bits):
                raise OracleError(f"bit {i} beyond the {len(self._bits)} known bits")
            return self._bits[i]
        b = str(self._rule(i))
        if b not in ("0", "1"):
            raise OracleError(f"oracle returned {b!r} at position {i}")
        return b

    def prefix(self, n):
        return "".join(self.bit(i) for i in range(n))


@dataclass
class CapitalTrajectory:
    steps: list = field(default_factory=list)

    @property
    def capitals(self):
        return [c for _, c in self.steps]

    @property
    def words(self):
        return [w for w, _ in self.steps]

    def __len__(self):
        return len(self.steps)


# -- strategy tables -----------------------------------------------------


@dataclass(frozen=True)
class Violation:
    law: str
    word: str
    detail: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def laws(self):
        return sorted({v.law for v in self.violations})

    def add(self, law, word, detail):
        self.violations.append(Violation(law, word, detail))


class StrategyTable:
    """Finite, prefix-closed table ``word -> (sequence set, mass)``.

    Absent words are undefined (the strategy is partial there).
    """

    def __init__(self, nodes, root=""):
        self._nodes = {}
        for w, (s, m) in nodes.items():
            self._nodes[check_word(w)] = (as_clopen(s), Fraction(m))
        self.root = root
        if root not in self._nodes:
            raise InputError(f"root word {root!r} missing from table")

    def __contains__(self, w):
        return w in self._nodes

    def __len__(self):
        return len(self._nodes)

    def __eq__(self, other):
        return (isinstance(other, StrategyTable) and self.root == other.root
                and self._nodes == other._nodes)

    def words(self):
        return sorted(self._nodes, key=length_lex_key)

    def items(self):
        for w in self.words():
            yield w, self._nodes[w]

    def sset(self, w):
        return self._nodes[w][0]

    def mass(self, w):
        return self._nodes[w][1]

    def has_children(self, w):
        return w + "0" in self._nodes or w + "1" in self._nodes

    def is_leaf(self, w):
        return not self.has_children(w)

    def leaves(self):
        return [w for w in self.words() if self.is_leaf(w)]

    def capital(self, w):
        return capital(self, w)

    def replace(self, w, sset=None, mass=None):
        """Copy of the table with one node changed (used for fault injection)."""
        nodes = dict(self._nodes)
        s, m = nodes[w]
        nodes[w] = (s if sset is None else as_clopen(sset), m if mass is None else mass)
        return StrategyTable(nodes, self.root)


def validate_strategy(t, require_sequence_set=False):
    """Check every law of a (sequence-set) betting strategy table."""
    rep = ValidationReport()
    for w in t.words():
        s, m = t.sset(w), t.mass(w)
        if m < 0:
            rep.add("nonnegative", w, f"mass {m} < 0")
        if w != t.root:
            if not w.startswith(t.root):
                rep.add("prefix-closed", w, "word does not extend the root")
                continue
            parent, sib = w[:-1], w[:-1] + ("1" if w[-1] == "0" else "0")
            if parent not in t:
                rep.add("prefix-closed", w, "parent missing")
            if sib not in t:
                rep.add("prefix-closed", w, "sibling missing")
        c0, c1 = w + "0", w + "1"
        if c0 in t and c1 in t:
            s0, s1 = t.sset(c0), t.sset(c1)
            if not s0.isdisjoint(s1):
                rep.add("partition", w, "children sets intersect")
            if s0.union(s1) != s:
                rep.add("partition", w, "children sets do not cover the parent set")
            if t.mass(c0) + t.mass(c1) != m:
                rep.add("mass", w, f"{m} != {t.mass(c0)} + {t.mass(c1)}")
            if require_sequence_set and s0.measure() != s1.measure():
                rep.add("equal-measure", w, f"{s0.measure()} != {s1.measure()}")
    return rep


def capital(t, w):
    """Capital available at node ``w``: mass divided by the set's measure."""
    if w not in t:
        raise InputError(f"word {w!r} not in strategy table")
    mu = t.sset(w).measure()
    if mu == 0:
        raise InputError(f"node {w!r} has a null sequence set")
    return t.mass(w) / mu


def _child_containing(t, v, alpha):
    s0, s1 = t.sset(v + "0"), t.sset(v + "1")
    bits = alpha.prefix(max(s0.max_length, s1.max_length))
    if s0.contains_prefix(bits):
        return v + "0"
    if s1.contains_prefix(bits):
        return v + "1"
    return None


def play(t, alpha, max_steps):
    """Follow the node chain containing ``alpha``; record capital per node."""
    v = t.root
    traj = CapitalTrajectory([(v, capital(t, v))])
    for _ in range(max_steps):
        if not (v + "0" in t and v + "1" in t):
            break
        nxt = _child_containing(t, v, alpha)
        if nxt is None:
            break
        v = nxt
        traj.steps.append((v, capital(t, v)))
    return traj


def deepest_node(t, prefix):
    """Deepest node whose set contains every extension of ``prefix``."""
    v = t.root
    if t.sset(v).contains_prefix(prefix) is not True:
        return None
    while v + "0" in t and v + "1" in t:
        for c in (v + "0", v + "1"):
            if t.sset(c).contains_prefix(prefix) is True:
                v = c
                break
        else:
            break
    return v


# -- martingale processes ------------------------------------------------


class MartingaleProcessTable:
    """Total function on all words of length at most ``depth``."""

    def __init__(self, depth, values):
        self.depth = int(depth)
        self.values = {check_word(w): Fraction(v) for w, v in values.items()}

    def __getitem__(self, w):
        return self.values[w]

    def __eq__(self, other):
        return (isinstance(other, MartingaleProcessTable) and self.depth == other.depth
                and self.values == other.values)

    def history(self, w):
        return tuple(self.values[w[:i]] for i in range(len(w) + 1))

    def classes(self, length, within=None):
        """Capital-history classes among words of ``length``.

        Classes are ordered by their least member (length-lexicographic);
        ``within`` restricts to words extending one of the given words.
        """
        words = words_of_length(length)
        if within is not None:
            words = [w for w in words if any(w.startswith(u) for u in within)]
        groups = {}
        for w in words:
            groups.setdefault(self.history(w), []).append(w)
        return sorted(groups.values(), key=lambda ws: length_lex_key(ws[0]))

    def validate(self):
        rep = ValidationReport()
        for n in range(self.depth + 1):
            for w in words_of_length(n):
                if w not in self.values:
                    rep.add("total", w, "value missing")
                elif self.values[w] < 0:
                    rep.add("nonnegative", w, f"value {self.values[w]} < 0")
        if not rep.ok:
            return rep
        for n in range(self.depth):
            for cls in self.classes(n):
                lhs = 2 * sum(self.values[v] for v in cls)
                rhs = sum(self.values[v + "0"] + self.values[v + "1"] for v in cls)
                if lhs != rhs:
                    rep.add("fairness", cls[0], f"2*sum={lhs} but children sum={rhs}")
        return rep


# -- nonmonotonic strategies --------------------------------------------


class NonmonotonicStrategy:
    """Pair of a martingale ``d`` and a scan rule ``sigma`` (word -> position)."""

    def __init__(self, martingale, scan):
        self.martingale = {check_word(w): Fraction(v) for w, v in martingale.items()}
        self.scan = {check_word(w): int(p) for w, p in scan.items()}

    def __eq__(self, other):
        return (isinstance(other, NonmonotonicStrategy) and self.martingale == other.martingale
                and self.scan == other.scan)

    def validate(self):
        rep = ValidationReport()
        d = self.martingale
        for w, v in d.items():
            if v < 0:
                rep.add("nonnegative", w, f"d={v} < 0")
            c0, c1 = w + "0", w + "1"
            if (c0 in d) != (c1 in d):
                rep.add("martingale", w, "exactly one child defined")
            elif c0 in d and 2 * v != d[c0] + d[c1]:
                rep.add("martingale", w, f"2*{v} != {d[c0]} + {d[c1]}")
        for w, pos in self.scan.items():
            if pos < 0:
                rep.add("scan", w, "negative position")
            for i in range(len(w)):
                u = w[:i]
                if u not in self.scan:
                    rep.add("scan", w, f"prefix {u!r} unscanned")
                elif self.scan[u] == pos:
                    rep.add("scan", w, f"position {pos} repeats prefix {u!r}")
        return rep


def play_nonmonotonic(b, alpha, max_steps):
    """Scan ``alpha`` at the positions chosen by the scan rule."""
    v = ""
    if v not in b.martingale:
        return CapitalTrajectory([])
    traj = CapitalTrajectory([(v, b.martingale[v])])
    for _ in range(max_steps):
        if v not in b.scan:
            break
        v = v + alpha.bit(b.scan[v])
        if v not in b.martingale:
            break
        traj.steps.append((v, b.martingale[v]))
    return traj


def mass_to_martingale(masses):
    return {w: Fraction(m) * (1 << len(w)) for w, m in masses.items()}


def martingale_to_mass(martingale):
    return {w: Fraction(d) / (1 << len(w)) for w, d in martingale.items()}


# -- generators used by tests and demos ---------------------------------


def random_sequence_set_table(rng, depth, max_length=6, mass_steps=4, total=True):
    """Random valid sequence-set table rooted at the full space.

    ``rng`` is a ``random.Random``.  Node sets use generators of length at
    most ``max(max_length, depth)``; each split hands the first child a
    fraction ``k/mass_steps`` of the parent's mass.  With ``total=False``
    some branches stop early.
    """
    max_length = max(max_length, depth)
    nodes = {"": (ClopenSet.full(), Fraction(1))}
    frontier = [""]
    while frontier:
        v = frontier.pop()
        if len(v) >= depth or (not total and v and rng.random() < 0.25):
            continue
        s, m = nodes[v]
        lo = max(s.max_length, len(v) + 1)
        g = rng.randint(lo, max(lo, max_length))
        cyl = list(_refine_words(s, g))
        rng.shuffle(cyl)
        half = len(cyl) // 2
        s0, s1 = ClopenSet(cyl[:half]), ClopenSet(cyl[half:])
        k = rng.randint(0, mass_steps)
        m0 = m * Fraction(k, mass_steps)
        nodes[v + "0"] = (s0, m0)
        nodes[v + "1"] = (s1, m - m0)
        frontier.extend([v + "1", v + "0"])
    return StrategyTable(nodes)


def _refine_words(s, g):
    for gen in s.lex:
        for tail in words_of_length(g - len(gen)):
            yield gen + tail
