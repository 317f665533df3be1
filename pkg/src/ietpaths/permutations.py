"""Permutation combinatorics for interval exchange transformations.

A permutation pi on the symbols 1..n is stored as the list of images of the
symbols under the *inverse* permutation.  With this convention the stored list
reads off the order of the exchanged intervals from left to right after the
IET is applied: the identity on four symbols is ``(1234)``, the transposition
of the first two symbols is ``(2134)``, and the cyclic shift sending every
symbol to the next one is ``(4123)``.

This module also houses the combinatorial side of Rauzy induction (the two
moves ``a`` and ``b`` on permutations, and Rauzy classes as labeled graphs),
restriction of a permutation to a subset of symbols, and the accessibility
relation between 4-tuples of symbols used to link small-support IETs inside a
larger one.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal, Optional, Sequence

Step = Literal["a", "b"]

STEP_A: Step = "a"
STEP_B: Step = "b"
STEPS: tuple[Step, Step] = (STEP_A, STEP_B)


class ReduciblePermutationError(ValueError):
    """Raised when an operation requires an irreducible permutation."""


@dataclass(frozen=True)
class Permutation:
    """A permutation of 1..n in the inverse-image-list convention.

    ``images[j-1]`` is the symbol whose interval occupies slot ``j`` after the
    exchange, i.e. ``images[j-1] == pi^{-1}(j)``.

    >>> p = Permutation.from_string("(4321)")
    >>> p.image(1), p.preimage(1)
    (4, 4)
    >>> str(p)
    '(4321)'
    """

    images: tuple[int, ...]
    _rank: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.images)
        if n < 2:
            raise ValueError("need at least 2 symbols, got %d" % n)
        if sorted(self.images) != list(range(1, n + 1)):
            raise ValueError("not a bijection on 1..%d: %r" % (n, self.images))
        rank = [0] * n
        for slot, symbol in enumerate(self.images, start=1):
            rank[symbol - 1] = slot
        object.__setattr__(self, "_rank", tuple(rank))

    @property
    def n(self) -> int:
        return len(self.images)

    def image(self, symbol: int) -> int:
        """pi(symbol): the slot the interval of ``symbol`` is sent to."""
        return self._rank[symbol - 1]

    def preimage(self, slot: int) -> int:
        """pi^{-1}(slot): the symbol whose interval lands in ``slot``."""
        return self.images[slot - 1]

    @classmethod
    def from_string(cls, text: str) -> "Permutation":
        return parse_permutation(text)

    def __str__(self) -> str:
        return format_permutation(self)


def parse_permutation(text: str) -> Permutation:
    """Parse ``(4321)`` or the comma form ``(10,1,2,...)`` used beyond 9 symbols.

    >>> parse_permutation("(2413)").images
    (2, 4, 1, 3)
    >>> parse_permutation("(10,1,2,3,4,5,6,7,8,9)").n
    10
    """
    s = text.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise ValueError("permutation must be parenthesized: %r" % text)
    body = s[1:-1].strip()
    if not body:
        raise ValueError("empty permutation: %r" % text)
    if "," in body:
        images = tuple(int(part) for part in body.split(","))
    else:
        if not body.isdigit():
            raise ValueError("bad permutation body: %r" % text)
        images = tuple(int(ch) for ch in body)
    return Permutation(images)


def format_permutation(p: Permutation) -> str:
    if p.n <= 9:
        return "(" + "".join(str(i) for i in p.images) + ")"
    return "(" + ",".join(str(i) for i in p.images) + ")"


def is_degenerate(p: Permutation) -> bool:
    """Whether some induced map of an IET with this permutation loses a singularity.

    The four combinatorial conditions, each quantified over j < n:

    1. pi(j+1) == pi(j) + 1
    2. pi(j) == n, pi(j+1) == 1 and pi(1) == pi(n) + 1
    3. pi(j+1) == 1 and pi(1) == pi(j) + 1
    4. pi(j+1) == pi(n) + 1 and pi(j) == n

    >>> is_degenerate(parse_permutation("(2134)"))
    True
    >>> is_degenerate(parse_permutation("(4321)"))
    False
    """
    n = p.n
    pi = p.image
    for j in range(1, n):
        if pi(j + 1) == pi(j) + 1:
            return True
        if pi(j) == n and pi(j + 1) == 1 and pi(1) == pi(n) + 1:
            return True
        if pi(j + 1) == 1 and pi(1) == pi(j) + 1:
            return True
        if pi(j + 1) == pi(n) + 1 and pi(j) == n:
            return True
    return False


def is_irreducible(p: Permutation) -> bool:
    """True iff no proper prefix {1..k} is mapped to itself.

    >>> is_irreducible(parse_permutation("(4321)"))
    True
    >>> is_irreducible(parse_permutation("(2134)"))
    False
    """
    seen_max = 0
    for k, symbol in enumerate(p.images, start=1):
        seen_max = max(seen_max, symbol)
        if seen_max == k and k < p.n:
            return False
    return True


def rauzy_move(p: Permutation, step: Step) -> Permutation:
    """Apply one combinatorial Rauzy move (type ``a`` or ``b``) to ``p``.

    >>> str(rauzy_move(parse_permutation("(4321)"), "a"))
    '(2431)'
    >>> str(rauzy_move(parse_permutation("(4321)"), "b"))
    '(4132)'
    """
    if not is_irreducible(p):
        raise ReduciblePermutationError("Rauzy moves are defined on irreducible permutations only: %s" % p)
    n = p.n
    pi = p.image
    new_rank = [0] * n
    if step == STEP_A:
        k = p.preimage(n)
        for j in range(1, n + 1):
            if j <= k:
                new_rank[j - 1] = pi(j)
            elif j == k + 1:
                new_rank[j - 1] = pi(n)
            else:
                new_rank[j - 1] = pi(j - 1)
    elif step == STEP_B:
        pin = pi(n)
        for j in range(1, n + 1):
            v = pi(j)
            if v <= pin:
                new_rank[j - 1] = v
            elif v < n:
                new_rank[j - 1] = v + 1
            else:
                new_rank[j - 1] = pin + 1
    else:
        raise ValueError("unknown step type %r" % (step,))
    images = [0] * n
    for symbol, slot in enumerate(new_rank, start=1):
        images[slot - 1] = symbol
    return Permutation(tuple(images))


@dataclass(frozen=True)
class RauzyClass:
    """The closure of a permutation under both Rauzy moves, with labeled edges."""

    vertices: frozenset[Permutation]
    edges: dict[tuple[Permutation, Step], Permutation]

    def successor(self, p: Permutation, step: Step) -> Permutation:
        return self.edges[(p, step)]

    def __contains__(self, p: Permutation) -> bool:
        return p in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)


def rauzy_class(p: Permutation) -> RauzyClass:
    """Breadth-first closure of ``p`` under both moves.

    >>> len(rauzy_class(parse_permutation("(4321)")))
    7
    >>> len(rauzy_class(parse_permutation("(21)")))
    1
    """
    if not is_irreducible(p):
        raise ReduciblePermutationError("Rauzy classes are defined for irreducible permutations: %s" % p)
    edges: dict[tuple[Permutation, Step], Permutation] = {}
    seen = {p}
    queue = deque([p])
    while queue:
        q = queue.popleft()
        for step in STEPS:
            r = rauzy_move(q, step)
            edges[(q, step)] = r
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return RauzyClass(frozenset(seen), edges)


def restrict(p: Permutation, symbols: Sequence[int]) -> Permutation:
    """The permutation on 1..k describing how ``p`` reorders the chosen symbols.

    >>> str(restrict(parse_permutation("(3142)"), (3, 4)))
    '(12)'
    >>> str(restrict(parse_permutation("(3142)"), (1, 3)))
    '(21)'
    """
    k = len(symbols)
    if k < 2 or k > p.n:
        raise ValueError("need between 2 and n symbols, got %d" % k)
    for a, b in zip(symbols, symbols[1:]):
        if a >= b:
            raise ValueError("symbols must be strictly increasing: %r" % (symbols,))
    if symbols[0] < 1 or symbols[-1] > p.n:
        raise ValueError("symbols out of range 1..%d: %r" % (p.n, symbols))
    by_image = sorted(range(k), key=lambda i: p.image(symbols[i]))
    images = tuple(i + 1 for i in by_image)
    return Permutation(images)


def acts_as_rotation(p: Permutation, pair: tuple[int, int]) -> bool:
    """True iff ``p`` restricted to the (increasing) pair is the swap (21)."""
    return p.image(pair[0]) > p.image(pair[1])


# ---------------------------------------------------------------------------
# 4-tuples and accessibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourTuple:
    """A strictly increasing 4-tuple of symbols from 1..n."""

    indices: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.indices) != 4:
            raise ValueError("need exactly 4 indices, got %r" % (self.indices,))
        for a, b in zip(self.indices, self.indices[1:]):
            if a >= b:
                raise ValueError("indices must be strictly increasing: %r" % (self.indices,))
        if self.indices[0] < 1:
            raise ValueError("indices must be >= 1: %r" % (self.indices,))

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices)

    def __getitem__(self, i: int) -> int:
        return self.indices[i]


@dataclass(frozen=True)
class AccessWitness:
    """A witness that two 4-tuples are accessible.

    ``pair1``/``pair2`` hold 1-based positions into the first/second tuple;
    ``merged`` is the sorted set of selected symbols and ``restriction`` the
    permutation induced on it.
    """

    pair1: tuple[int, int]
    pair2: tuple[int, int]
    merged: tuple[int, ...]
    restriction: Permutation


_BASE_CLASS_STRINGS = ("(4321)", "(4213)", "(4132)", "(3142)", "(2413)", "(2431)", "(3241)")
FOUR_SYMBOL_CLASS: frozenset[Permutation] = frozenset(
    parse_permutation(s) for s in _BASE_CLASS_STRINGS
)
_EXCLUDED_MERGED = parse_permutation("(4231)")

_INDEX_PAIRS: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(1, 5) for j in range(i + 1, 5)
)


def _as_tuple(t: FourTuple | Sequence[int]) -> FourTuple:
    if isinstance(t, FourTuple):
        return t
    return FourTuple(tuple(t))


def class_four_tuples(p: Permutation) -> list[FourTuple]:
    """All 4-tuples on which ``p`` restricts into the class of (4321)."""
    out = []
    for combo in itertools.combinations(range(1, p.n + 1), 4):
        if restrict(p, combo) in FOUR_SYMBOL_CLASS:
            out.append(FourTuple(combo))
    return out


def is_accessible_pair(
    p: Permutation, t1: FourTuple | Sequence[int], t2: FourTuple | Sequence[int]
) -> Optional[AccessWitness]:
    """First accessibility witness for two 4-tuples, or None.

    A witness consists of a position pair in each tuple such that ``p`` acts
    as a rotation on each selected symbol pair, acts irreducibly on the merged
    symbol set, and the merged restriction is not (4231).  Witnesses are
    searched in lexicographic order of the two position pairs, so the result
    is deterministic.
    """
    t1 = _as_tuple(t1)
    t2 = _as_tuple(t2)
    for t in (t1, t2):
        if restrict(p, tuple(t)) not in FOUR_SYMBOL_CLASS:
            raise ValueError("tuple %r does not restrict into the class of (4321)" % (tuple(t),))
    rot1 = [pr for pr in _INDEX_PAIRS if acts_as_rotation(p, (t1[pr[0] - 1], t1[pr[1] - 1]))]
    rot2 = [pr for pr in _INDEX_PAIRS if acts_as_rotation(p, (t2[pr[0] - 1], t2[pr[1] - 1]))]
    for pr1 in rot1:
        s1 = (t1[pr1[0] - 1], t1[pr1[1] - 1])
        for pr2 in rot2:
            s2 = (t2[pr2[0] - 1], t2[pr2[1] - 1])
            merged = tuple(sorted({s1[0], s1[1], s2[0], s2[1]}))
            if len(merged) < 2:
                continue
            rho = restrict(p, merged)
            if not is_irreducible(rho):
                continue
            if len(merged) == 4 and rho == _EXCLUDED_MERGED:
                continue
            return AccessWitness(pr1, pr2, merged, rho)
    return None


class ChainNotFoundError(RuntimeError):
    """No accessible chain exists; this contradicts connectivity of the
    accessibility graph and signals an internal inconsistency."""


def accessible_chain(
    p: Permutation, t1: FourTuple | Sequence[int], t2: FourTuple | Sequence[int]
) -> list[FourTuple]:
    """Shortest chain of 4-tuples from t1 to t2 with accessible consecutive pairs.

    Uses breadth-first search over all 4-tuples restricting into the class of
    (4321), with :func:`is_accessible_pair` as the edge relation.
    """
    if not is_irreducible(p):
        raise ReduciblePermutationError("accessibility requires an irreducible permutation: %s" % p)
    t1 = _as_tuple(t1)
    t2 = _as_tuple(t2)
    valid = class_four_tuples(p)
    valid_set = {t.indices for t in valid}
    for t in (t1, t2):
        if t.indices not in valid_set:
            raise ValueError("tuple %r does not restrict into the class of (4321)" % (t.indices,))
    if t1 == t2:
        return [t1]
    prev: dict[tuple[int, ...], tuple[int, ...]] = {t1.indices: t1.indices}
    queue = deque([t1])
    while queue:
        cur = queue.popleft()
        for nxt in valid:
            if nxt.indices in prev:
                continue
            if is_accessible_pair(p, cur, nxt) is not None:
                prev[nxt.indices] = cur.indices
                if nxt == t2:
                    chain = [nxt.indices]
                    while chain[-1] != t1.indices:
                        chain.append(prev[chain[-1]])
                    return [FourTuple(c) for c in reversed(chain)]
                queue.append(nxt)
    raise ChainNotFoundError(
        "no accessible chain from %r to %r under %s" % (t1.indices, t2.indices, p)
    )


def all_permutations(n: int) -> Iterable[Permutation]:
    """All permutations on 1..n (n! of them)."""
    for images in itertools.permutations(range(1, n + 1)):
        yield Permutation(images)


def irreducible_permutations(n: int) -> Iterable[Permutation]:
    for p in all_permutations(n):
        if is_irreducible(p):
            yield p
