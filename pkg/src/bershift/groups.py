"""Countable groups backing the example constructions: Z, Z^d and Z * (Z/aZ).

Elements are plain hashable data: ints for Z, tuples of ints for Z^d, and
reduced-word tuples for the free product.  Every group carries a canonical
enumeration (identity at index 0) so reports are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import List, Sequence, Tuple


@dataclass(frozen=True)
class GroupSpec:
    kind: str  # "Z" | "Zd" | "FreeProdZ_Za"
    d: int = 1
    a: int = 2

    def __post_init__(self):
        if self.kind not in ("Z", "Zd", "FreeProdZ_Za"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "Zd" and self.d < 1:
            raise ValueError("Zd requires d >= 1")
        if self.kind == "FreeProdZ_Za" and self.a < 2:
            raise ValueError("free product requires a >= 2")

    def build(self) -> "Group":
        if self.kind == "Z":
            return IntegerGroup()
        if self.kind == "Zd":
            return LatticeGroup(self.d)
        return FreeProductGroup(self.a)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "Zd":
            out["d"] = self.d
        if self.kind == "FreeProdZ_Za":
            out["a"] = self.a
        return out

    @staticmethod
    def from_json(obj: dict) -> "GroupSpec":
        return GroupSpec(obj["kind"], d=int(obj.get("d", 1)), a=int(obj.get("a", 2)))


class Group:
    """Interface shared by the concrete groups."""

    spec: GroupSpec

    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def word_length(self, g) -> int:
        raise NotImplementedError

    def ball(self, radius: int) -> List:
        """All elements with word_length <= radius, in enumeration order."""
        raise NotImplementedError

    def element(self, index: int):
        """Canonical enumeration: bijection from {0,1,2,...}, identity first."""
        raise NotImplementedError

    def index(self, g) -> int:
        raise NotImplementedError

    def generators(self) -> List:
        raise NotImplementedError

    def label(self, g) -> str:
        return str(g)

    @property
    def amenable(self) -> bool:
        raise NotImplementedError

    def check_same_group(self, other: "Group"):
        if self.spec != other.spec:
            raise ValueError(f"mixed-group arguments: {self.spec} vs {other.spec}")


class IntegerGroup(Group):
    def __init__(self):
        self.spec = GroupSpec("Z")

    amenable = True

    def identity(self):
        return 0

    def mul(self, a, b):
        return a + b

    def inv(self, a):
        return -a

    def word_length(self, g) -> int:
        return abs(g)

    def ball(self, radius: int) -> List[int]:
        return [self.element(i) for i in range(2 * radius + 1)]

    def element(self, index: int) -> int:
        # 0, 1, -1, 2, -2, ...
        if index == 0:
            return 0
        q, r = divmod(index + 1, 2)
        return q if r == 0 else -q

    def index(self, g: int) -> int:
        if g == 0:
            return 0
        return 2 * g - 1 if g > 0 else -2 * g

    def generators(self) -> List[int]:
        return [1, -1]


class LatticeGroup(Group):
    """Z^d with l1 word length and spiral (shell-by-shell) enumeration."""

    def __init__(self, d: int):
        self.d = d
        self.spec = GroupSpec("Zd", d=d)
        self._shells: List[List[Tuple[int, ...]]] = [[tuple([0] * d)]]

    amenable = True

    def identity(self):
        return tuple([0] * self.d)

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def word_length(self, g) -> int:
        return sum(abs(x) for x in g)

    def _shell(self, r: int) -> List[Tuple[int, ...]]:
        while len(self._shells) <= r:
            rr = len(self._shells)
            shell = sorted(
                p
                for p in iproduct(range(-rr, rr + 1), repeat=self.d)
                if sum(abs(x) for x in p) == rr
            )
            self._shells.append(shell)
        return self._shells[r]

    def ball(self, radius: int) -> List[Tuple[int, ...]]:
        out: List[Tuple[int, ...]] = []
        for r in range(radius + 1):
            out.extend(self._shell(r))
        return out

    def element(self, index: int):
        r = 0
        i = index
        while True:
            shell = self._shell(r)
            if i < len(shell):
                return shell[i]
            i -= len(shell)
            r += 1

    def index(self, g) -> int:
        r = self.word_length(g)
        base = sum(len(self._shell(k)) for k in range(r))
        return base + self._shell(r).index(tuple(g))

    def generators(self) -> List[Tuple[int, ...]]:
        gens = []
        for i in range(self.d):
            for s in (1, -1):
                e = [0] * self.d
                e[i] = s
                gens.append(tuple(e))
        return gens


# --- free product Z * (Z/aZ) ------------------------------------------------
#
# Elements are reduced words stored as tuples of syllables ('s', v) with
# v in 1..a-1 and ('t', n) with n != 0, alternating in type.  The empty tuple
# is the identity.  Word length counts only the t-letters: sum |n_i|.

S = "s"
T = "t"


class FreeProductGroup(Group):
    def __init__(self, a: int):
        if a < 2:
            raise ValueError("a >= 2 required")
        self.a = a
        self.spec = GroupSpec("FreeProdZ_Za", a=a)
        self._length_classes: List[List[tuple]] = []

    amenable = False

    def identity(self):
        return ()

    def s_gen(self, v: int = 1):
        v %= self.a
        return ((S, v),) if v else ()

    def t_gen(self, n: int = 1):
        return ((T, n),) if n else ()

    def word(self, *syllables) -> tuple:
        """Build an element from alternating syllables, reducing as needed."""
        out = ()
        for kind, val in syllables:
            out = self.mul(out, ((kind, val),))
        return out

    def mul(self, x, y):
        return self._reduce(tuple(x) + tuple(y))

    def _reduce(self, word: tuple) -> tuple:
        out: list = []
        for kind, val in word:
            if kind == S:
                val %= self.a
            if val == 0:
                continue
            if out and out[-1][0] == kind:
                _, v1 = out.pop()
                v = (v1 + val) % self.a if kind == S else v1 + val
                if v:
                    out.append((kind, v))
            else:
                out.append((kind, val))
        return tuple(out)

    def inv(self, x):
        out = []
        for kind, val in reversed(x):
            out.append((kind, (-val) % self.a if kind == S else -val))
        return self._reduce(tuple(out))

    def word_length(self, g) -> int:
        return sum(abs(v) for k, v in g if k == T)

    # enumeration: by word length, then by a deterministic key of the word
    def _key(self, g) -> tuple:
        flat = []
        for kind, val in g:
            flat.append((0 if kind == S else 1, val if kind == S else (abs(val), 0 if val > 0 else 1)))
        return (len(g), tuple(flat))

    def _words_of_length(self, m: int) -> List[tuple]:
        while len(self._length_classes) <= m:
            mm = len(self._length_classes)
            if mm == 0:
                cls = [()] + [((S, v),) for v in range(1, self.a)]
            else:
                cls = []
                # words a_0 t^{n_1} a_1 ... t^{n_k} a_k with sum |n_i| = mm,
                # interior a_i nonzero.  Build recursively over syllables.
                def extend(prefix: tuple, remaining: int):
                    # prefix ends with a t-syllable or is a bare leading s/empty
                    for n in range(-remaining, remaining + 1):
                        if n == 0:
                            continue
                        rest = remaining - abs(n)
                        word_t = prefix + ((T, n),)
                        if rest == 0:
                            cls.append(word_t)
                            for v in range(1, self.a):
                                cls.append(word_t + ((S, v),))
                        else:
                            for v in range(1, self.a):
                                extend(word_t + ((S, v),), rest)

                extend((), mm)
                for v in range(1, self.a):
                    extend(((S, v),), mm)
                cls.sort(key=self._key)
            self._length_classes.append(cls)
        return self._length_classes[m]

    def ball(self, radius: int) -> List[tuple]:
        out: List[tuple] = []
        for m in range(radius + 1):
            out.extend(self._words_of_length(m))
        return out

    def element(self, index: int):
        m = 0
        i = index
        while True:
            cls = self._words_of_length(m)
            if i < len(cls):
                return cls[i]
            i -= len(cls)
            m += 1

    def index(self, g) -> int:
        m = self.word_length(g)
        base = sum(len(self._words_of_length(k)) for k in range(m))
        return base + self._words_of_length(m).index(g)

    def generators(self) -> List[tuple]:
        gens = [((T, 1),), ((T, -1),)]
        gens += [((S, v),) for v in range(1, self.a)]
        return gens

    def label(self, g) -> str:
        if not g:
            return "e"
        parts = []
        for kind, val in g:
            if kind == S:
                parts.append("s" if val == 1 else f"s^{val}")
            else:
                parts.append("t" if val == 1 else f"t^{val}")
        return "*".join(parts)

    def bfs_ball_count(self, m: int) -> int:
        """Oracle: closure of the ball under generator multiplication."""
        seen = {(): None}
        frontier = [()]
        gens = self.generators()
        while frontier:
            nxt = []
            for g in frontier:
                for h in gens:
                    w = self.mul(g, h)
                    if w not in seen and self.word_length(w) <= m:
                        seen[w] = None
                        nxt.append(w)
            frontier = nxt
        return len(seen)


def ball_count(a: int, m: int) -> int:
    """Closed-form size of {g in Z*(Z/aZ) : |g| <= m}."""
    if a < 2:
        raise ValueError("a >= 2 required")
    if m < 0:
        raise ValueError("m >= 0 required")
    if m == 0:
        return a
    num = a * (a * (2 * a - 1) ** m - 1)
    if num % (a - 1):
        raise AssertionError("closed form should be integral")
    return num // (a - 1)


@dataclass
class BoundaryReport:
    g: object
    set_size: int
    outflow: int  # |gF \ F|
    sym_diff: int  # |gF symdiff F|
    ratio: Fraction  # |gF \ F| / |F|
    sym_ratio: Fraction  # |gF symdiff F| / |F|


class FolnerBoxes:
    """Centered-box Folner sequence for Z and Z^d, radii strictly increasing."""

    def __init__(self, group: Group, radii: Sequence[int] | None = None):
        if not group.amenable:
            raise ValueError("Folner sequences require an amenable group (Z or Z^d)")
        self.group = group
        self.radii = list(radii) if radii is not None else [2 ** n for n in range(1, 11)]
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("box radii must be strictly increasing")

    def box(self, n: int) -> List:
        L = self.radii[n - 1]
        d = getattr(self.group, "d", 1)
        if isinstance(self.group, IntegerGroup):
            return list(range(-L, L + 1))
        return [p for p in iproduct(range(-L, L + 1), repeat=d)]

    def set(self, n: int) -> set:
        return set(self.box(n))

    def boundary(self, g, n: int) -> BoundaryReport:
        F = self.set(n)
        gF = {self.group.mul(g, h) for h in F}
        out = len(gF - F)
        sym = len(gF ^ F)
        return BoundaryReport(g, len(F), out, sym, Fraction(out, len(F)), Fraction(sym, len(F)))


def folner(spec: GroupSpec, n: int, radii: Sequence[int] | None = None) -> List:
    group = spec.build()
    return FolnerBoxes(group, radii).box(n)


def group_to_json(group: Group) -> str:
    return json.dumps(group.spec.to_json(), sort_keys=True)


def enumeration_is_bijective(group: Group, count: int) -> bool:
    seen = set()
    for i in range(count):
        g = group.element(i)
        if g in seen or group.index(g) != i:
            return False
        seen.add(g)
    return True
