"""Words, cylinders and clopen subsets of Cantor space with exact measure.

A clopen set is stored as a canonical, prefix-free tuple of generator words
in which no two siblings ``w0``/``w1`` both occur.  Internally the tuple is
kept in plain lexicographic order (a prefix sorts before its extensions, which
makes sweeps over several sets linear); ``generators`` exposes the
length-lexicographic order used for display and serialization.
"""

from bisect import bisect_left, bisect_right
from collections import deque
from fractions import Fraction
from itertools import product

from .errors import InputError, RefinementError

Rational = Fraction

_BITS = frozenset("01")


def is_word(w):
    return isinstance(w, str) and set(w) <= _BITS


def check_word(w):
    if not is_word(w):
        raise InputError(f"not a binary word: {w!r}")
    return w


def length_lex_key(w):
    return (len(w), w)


def words_of_length(n):
    """All words of length ``n`` in lexicographic order."""
    if n == 0:
        return [""]
    return [format(i, f"0{n}b") for i in range(1 << n)]


def parse_rational(text):
    """Parse ``"p/q"`` (or a plain integer string) into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"rational must be a string, got {type(text).__name__}")
    s = text.strip()
    try:
        if "/" in s:
            num, den = s.split("/")
            value = Fraction(int(num), int(den))
        else:
            value = Fraction(int(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed rational {text!r}") from exc
    return value


def format_rational(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def is_dyadic_power(q):
    """True iff ``q`` equals 2**k for some integer k."""
    q = Fraction(q)
    if q <= 0:
        return False
    n, d = q.numerator, q.denominator
    return (n & (n - 1)) == 0 and (d & (d - 1)) == 0 and (n == 1 or d == 1)


def _prune_sorted(gens):
    # gens is lexicographically sorted; drop covered words, merge siblings.
    out = []
    for g in gens:
        if out and g.startswith(out[-1]):
            continue
        out.append(g)
        while len(out) >= 2:
            a, b = out[-2], out[-1]
            if len(a) == len(b) and a and a[:-1] == b[:-1] and a[-1] == "0" and b[-1] == "1":
                out.pop()
                out[-1] = a[:-1]
            else:
                break
    return tuple(out)


class ClopenSet:
    """Finite union of disjoint cylinders, kept in canonical form."""

    __slots__ = ("_lex", "_measure", "_maxlen", "_ll", "_hash")

    def __init__(self, generators=()):
        gens = [check_word(g) for g in generators]
        gens.sort()
        self._set(_prune_sorted(gens))

    def _set(self, lex):
        self._lex = lex
        self._measure = None
        self._maxlen = None
        self._ll = None
        self._hash = None

    @classmethod
    def _from_sorted(cls, gens):
        obj = cls.__new__(cls)
        obj._set(_prune_sorted(gens))
        return obj

    @classmethod
    def _from_lex(cls, lex):
        obj = cls.__new__(cls)
        obj._set(tuple(lex))
        return obj

    @classmethod
    def cylinder(cls, word):
        return cls._from_lex((check_word(word),))

    @classmethod
    def full(cls):
        return cls._from_lex(("",))

    @classmethod
    def empty(cls):
        return cls._from_lex(())

    @classmethod
    def with_bit(cls, position, bit):
        """Sequences whose bit at ``position`` (0-based) equals ``bit``."""
        b = str(int(bit))
        return cls._from_lex(tuple(w + b for w in words_of_length(position)))

    @classmethod
    def union_all(cls, sets):
        gens = []
        for s in sets:
            gens.extend(s._lex)
        gens.sort()
        return cls._from_sorted(gens)

    # -- basic protocol -------------------------------------------------

    @property
    def lex(self):
        return self._lex

    @property
    def generators(self):
        if self._ll is None:
            self._ll = tuple(sorted(self._lex, key=length_lex_key))
        return self._ll

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self._lex)

    def __bool__(self):
        return bool(self._lex)

    def __eq__(self, other):
        return isinstance(other, ClopenSet) and self._lex == other._lex

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._lex)
        return self._hash

    def __repr__(self):
        shown = ", ".join(g or "ε" for g in self.generators[:8])
        more = ", …" if len(self._lex) > 8 else ""
        return f"ClopenSet({{{shown}{more}}})"

    @property
    def max_length(self):
        if self._maxlen is None:
            self._maxlen = max((len(g) for g in self._lex), default=0)
        return self._maxlen

    def measure(self):
        if self._measure is None:
            d = self.max_length
            num = sum(1 << (d - len(g)) for g in self._lex)
            self._measure = Fraction(num, 1 << d)
        return self._measure

    def units(self, granularity):
        """Measure in units of 2**-granularity (an exact integer)."""
        if self.max_length > granularity:
            raise RefinementError(
                f"generator of length {self.max_length} exceeds granularity {granularity}")
        return sum(1 << (granularity - len(g)) for g in self._lex)

    def is_single_cylinder(self):
        return len(self._lex) == 1

    def contains_prefix(self, bits):
        """Membership of every sequence extending ``bits``.

        Returns True/False when decided by ``bits`` and None when a longer
        prefix is needed.
        """
        lex = self._lex
        i = bisect_right(lex, bits)
        if i and bits.startswith(lex[i - 1]):
            return True
        if i < len(lex) and lex[i].startswith(bits):
            return None
        return False

    # -- set algebra ----------------------------------------------------

    def intersect(self, other):
        a, b = self._lex, other._lex
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            g, h = a[i], b[j]
            if h.startswith(g):
                out.append(h)
                j += 1
            elif g.startswith(h):
                out.append(g)
                i += 1
            elif g < h:
                i += 1
            else:
                j += 1
        return ClopenSet._from_sorted(out)

    __and__ = intersect

    def union(self, other):
        return ClopenSet.union_all((self, other))

    __or__ = union

    def difference(self, other):
        b = other._lex
        out = []
        for g in self._lex:
            k = bisect_right(b, g)
            if k and g.startswith(b[k - 1]):
                continue
            lo = bisect_left(b, g)
            hi = lo
            while hi < len(b) and b[hi].startswith(g):
                hi += 1
            if lo == hi:
                out.append(g)
            else:
                _complement_within(g, b, lo, hi, out)
        return ClopenSet._from_sorted(out)

    __sub__ = difference

    def isdisjoint(self, other):
        return not self.intersect(other)

    def issubset(self, other):
        return not self.difference(other)

    __le__ = issubset


def _complement_within(prefix, gens, lo, hi, out):
    if lo == hi:
        out.append(prefix)
        return
    if gens[lo] == prefix:
        return
    k = len(prefix)
    mid = lo
    while mid < hi and gens[mid][k] == "0":
        mid += 1
    _complement_within(prefix + "0", gens, lo, mid, out)
    _complement_within(prefix + "1", gens, mid, hi, out)


def as_clopen(x):
    if isinstance(x, ClopenSet):
        return x
    if isinstance(x, str):
        return ClopenSet.cylinder(x)
    return ClopenSet(x)


def measure(s):
    return as_clopen(s).measure()


def intersect(a, b):
    return as_clopen(a).intersect(as_clopen(b))


def difference(a, b):
    return as_clopen(a).difference(as_clopen(b))


def union(a, b):
    return as_clopen(a).union(as_clopen(b))


def refine(s, d):
    """Cylinders of length exactly ``d`` whose union is ``s``, in order."""
    s = as_clopen(s)
    if s.max_length > d:
        raise RefinementError(
            f"cannot refine a generator of length {s.max_length} to length {d}")
    out = []
    for g in s.lex:
        k = d - len(g)
        if k == 0:
            out.append(g)
        else:
            out.extend(g + "".join(t) for t in product("01", repeat=k))
    return out


def common_granularity(sets):
    """Smallest d at which every (canonicalized) set refines."""
    if not sets:
        raise InputError("common_granularity needs at least one set")
    return max(as_clopen(s).max_length for s in sets)


def overlay(left, right):
    """All nonempty pairwise intersections of two families of disjoint sets.

    ``left`` and ``right`` map keys to ClopenSets; within each family the
    sets must be pairwise disjoint.  Returns ``{(kl, kr): ClopenSet}``.
    """
    lt = sorted((g, k) for k, s in left.items() for g in s.lex)
    rt = sorted((g, k) for k, s in right.items() for g in s.lex)
    pieces = {}
    i = j = 0
    while i < len(lt) and j < len(rt):
        g, kg = lt[i]
        h, kh = rt[j]
        if h.startswith(g):
            pieces.setdefault((kg, kh), []).append(h)
            j += 1
        elif g.startswith(h):
            pieces.setdefault((kg, kh), []).append(g)
            i += 1
        elif g < h:
            i += 1
        else:
            j += 1
    return {k: ClopenSet._from_sorted(v) for k, v in pieces.items()}


def carve(s, amounts, granularity):
    """Split ``s`` into consecutive parts of the given sizes.

    ``amounts`` are integer measures in units of 2**-granularity and must sum
    to ``s.units(granularity)``.  Parts are cut from the lexicographically
    ordered generator list, halving a cylinder whenever it is larger than the
    outstanding demand, so each part is a short run of contiguous cylinders.
    """
    total = s.units(granularity)
    if sum(amounts) != total:
        raise InputError(f"carve amounts sum to {sum(amounts)}, set holds {total}")
    pool = deque(s.lex)
    parts = []
    for need in amounts:
        if need < 0:
            raise InputError("negative carve amount")
        taken = []
        while need:
            c = pool.popleft()
            size = 1 << (granularity - len(c))
            if size <= need:
                taken.append(c)
                need -= size
            else:
                pool.appendleft(c + "1")
                pool.appendleft(c + "0")
        parts.append(ClopenSet._from_sorted(sorted(taken)))
    return parts
