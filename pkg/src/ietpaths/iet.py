"""Exact interval exchange transformations and Rauzy induction.

Lengths are exact nonnegative rationals (``fractions.Fraction``).  Exactness
is not a luxury here: whether an induction step is of type ``a``, of type
``b`` or undefined (a tie) is decided by comparing two rationals, and the
combinatorics downstream changes with the outcome, so no tolerance is
admissible.  Unnormalized length vectors are the canonical storage; the
normalized view divides by the 1-norm on demand.

The induction step of an IET ``T`` compares the rightmost discontinuity of
``T`` (``delta_plus``) with the rightmost discontinuity of ``T^{-1}``
(``delta_minus``) and induces on ``[0, max)``.  Each step is recorded by a
nonnegative integer matrix relating the length vectors of the map and its
successor exactly, which is asserted after every step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .conematrix import ConeMatrix
from .permutations import (
    Permutation,
    Step,
    STEP_A,
    STEP_B,
    is_irreducible,
    parse_permutation,
    rauzy_move,
)


@dataclass(frozen=True)
class LengthVector:
    """An unnormalized vector of exact nonnegative interval lengths."""

    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        for e in self.entries:
            if e < 0:
                raise ValueError("lengths must be nonnegative, got %s" % e)
        if sum(self.entries) <= 0:
            raise ValueError("total length must be positive")

    @classmethod
    def from_strings(cls, parts: Sequence[str]) -> "LengthVector":
        return cls(tuple(Fraction(p) for p in parts))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> Fraction:
        return sum(self.entries)

    def normalized(self) -> tuple[Fraction, ...]:
        t = self.total
        return tuple(e / t for e in self.entries)

    def __getitem__(self, i: int) -> Fraction:
        return self.entries[i]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class IET:
    """An interval exchange transformation: exact lengths plus a permutation."""

    lengths: LengthVector
    perm: Permutation

    def __post_init__(self) -> None:
        if self.lengths.n != self.perm.n:
            raise ValueError(
                "length count %d does not match permutation size %d"
                % (self.lengths.n, self.perm.n)
            )

    @classmethod
    def from_rationals(cls, perm: str | Permutation, lengths: Sequence) -> "IET":
        p = parse_permutation(perm) if isinstance(perm, str) else perm
        return cls(LengthVector(tuple(Fraction(x) for x in lengths)), p)

    @property
    def n(self) -> int:
        return self.perm.n

    @property
    def total(self) -> Fraction:
        return self.lengths.total

    def normalized(self) -> "IET":
        return IET(LengthVector(self.lengths.normalized()), self.perm)

    def left_endpoints(self) -> list[Fraction]:
        """Left endpoints of the domain intervals I_1..I_n."""
        out = []
        acc = Fraction(0)
        for e in self.lengths.entries:
            out.append(acc)
            acc += e
        return out

    def image_left_endpoints(self) -> list[Fraction]:
        """Left endpoints of the images T(I_1)..T(I_n)."""
        out = []
        for j in range(1, self.n + 1):
            shift = sum(
                self.lengths[k - 1]
                for k in range(1, self.n + 1)
                if self.perm.image(k) < self.perm.image(j)
            )
            out.append(shift)
        return out


def evaluate(t: IET, x: Fraction) -> Fraction:
    """Apply the exchange to a point, in exact arithmetic.

    >>> t = IET.from_rationals("(21)", ["1/3", "2/3"])
    >>> evaluate(t, Fraction(0))
    Fraction(2, 3)
    """
    x = Fraction(x)
    if not 0 <= x < t.total:
        raise ValueError("point %s outside domain [0, %s)" % (x, t.total))
    acc = Fraction(0)
    j = None
    for i in range(1, t.n + 1):
        nxt = acc + t.lengths[i - 1]
        if acc <= x < nxt:
            j = i
            break
        acc = nxt
    assert j is not None  # total length check guarantees a containing interval
    shift = sum(
        t.lengths[k - 1] for k in range(1, t.n + 1) if t.perm.image(k) < t.perm.image(j)
    )
    return x - acc + shift


class InductionDivergenceError(RuntimeError):
    """Orbit tracking exceeded its step cap; the input is likely non-minimal."""


def induce_first_return(t: IET, cut: Fraction, step_cap: int = 10**6) -> IET:
    """The first-return map of ``t`` to ``[0, cut)`` as an unnormalized IET.

    Tracks the finitely many continuity pieces of ``[0, cut)`` through the
    dynamics with exact arithmetic, splitting a piece whenever its orbit
    straddles a discontinuity or the cut point.  This is a brute-force oracle
    deliberately independent of the combinatorial induction step formulas.
    """
    cut = Fraction(cut)
    if not 0 < cut <= t.total:
        raise ValueError("cut must lie in (0, total]")
    lefts = t.left_endpoints()
    steps_used = 0
    finished: list[tuple[Fraction, Fraction, Fraction, int]] = []  # (start, len, image, time)
    work: list[tuple[Fraction, Fraction]] = [(Fraction(0), cut)]
    while work:
        start, length = work.pop()
        x = start
        time = 0
        while True:
            # locate the interval containing x and the room to its right end
            j = None
            for i in range(t.n, 0, -1):
                if lefts[i - 1] <= x and t.lengths[i - 1] > 0 and x < lefts[i - 1] + t.lengths[i - 1]:
                    j = i
                    break
            assert j is not None
            room = lefts[j - 1] + t.lengths[j - 1] - x
            if room < length:
                work.append((start, room))
                work.append((start + room, length - room))
                break
            x = evaluate(t, x)
            time += 1
            steps_used += 1
            if steps_used > step_cap:
                raise InductionDivergenceError(
                    "first-return tracking exceeded %d steps" % step_cap
                )
            if x < cut:
                if x + length <= cut:
                    finished.append((start, length, x, time))
                    break
                split = cut - x
                work.append((start, split))
                work.append((start + split, length - split))
                break
    finished.sort(key=lambda rec: rec[0])
    # the images must tile [0, cut) exactly
    by_image = sorted(finished, key=lambda rec: rec[2])
    acc = Fraction(0)
    for rec in by_image:
        if rec[2] != acc:
            raise AssertionError("return images do not tile [0, cut)")
        acc += rec[1]
    if acc != cut:
        raise AssertionError("return images do not fill [0, cut)")
    order = {rec[0]: pos + 1 for pos, rec in enumerate(by_image)}
    images = [0] * len(finished)
    for idx, rec in enumerate(finished, start=1):
        images[order[rec[0]] - 1] = idx
    lengths = LengthVector(tuple(rec[1] for rec in finished))
    return IET(lengths, Permutation(tuple(images)))


# ---------------------------------------------------------------------------
# Combinatorial induction step
# ---------------------------------------------------------------------------


def step_matrix(p: Permutation, step: Step) -> ConeMatrix:
    """The single-step induction matrix M determined by (permutation, step type).

    M relates the length vectors of an IET and its successor by
    ``lengths(T) = M * lengths(successor)`` exactly.
    """
    n = p.n
    if step == STEP_A:
        k = p.preimage(n)
        rows = []
        for i in range(1, n + 1):
            row = []
            for j in range(1, n + 1):
                if j <= k:
                    row.append(1 if i == j else 0)
                elif i == n:
                    row.append(1 if j == k + 1 else 0)
                else:
                    row.append(1 if i == j - 1 else 0)
            rows.append(tuple(row))
        return ConeMatrix(tuple(rows))
    if step == STEP_B:
        k = p.preimage(n)
        rows = [
            tuple(
                1 if (i == j or (i == n and j == k)) else 0 for j in range(1, n + 1)
            )
            for i in range(1, n + 1)
        ]
        return ConeMatrix(tuple(rows))
    raise ValueError("unknown step type %r" % (step,))


@dataclass(frozen=True)
class RauzyStep:
    """A defined induction step: its type, matrix and unnormalized successor."""

    step: Step
    matrix: ConeMatrix
    successor: IET


@dataclass(frozen=True)
class RauzyTie:
    """The induction step is undefined: both rightmost discontinuities agree."""

    delta: Fraction


InductionOutcome = Union[RauzyStep, RauzyTie]


class ZeroLengthError(ValueError):
    """Induction requires strictly positive lengths; collapse zero intervals first."""


def _successor_lengths(t: IET, step: Step) -> tuple[Fraction, ...]:
    n = t.n
    lengths = t.lengths.entries
    k = t.perm.preimage(n)
    if step == STEP_A:
        out = list(lengths[: k - 1])
        out.append(lengths[k - 1] - lengths[n - 1])
        out.append(lengths[n - 1])
        out.extend(lengths[k : n - 1])
        return tuple(out)
    out = list(lengths[: n - 1])
    out.append(lengths[n - 1] - lengths[k - 1])
    return tuple(out)


def _checked_step(t: IET, step: Step) -> RauzyStep:
    matrix = step_matrix(t.perm, step)
    successor = IET(LengthVector(_successor_lengths(t, step)), rauzy_move(t.perm, step))
    reconstructed = matrix.apply(successor.lengths.entries)
    if tuple(reconstructed) != t.lengths.entries:
        raise AssertionError("single-step matrix identity violated")
    return RauzyStep(step, matrix, successor)


def rauzy_step(t: IET) -> InductionOutcome:
    """One step of Rauzy induction, or the tie on which it is undefined.

    >>> quarter = IET.from_rationals("(4321)", ["1/4"] * 4)
    >>> rauzy_step(quarter)
    RauzyTie(delta=Fraction(3, 4))
    """
    if any(e == 0 for e in t.lengths.entries):
        raise ZeroLengthError("zero-length interval present; collapse it first")
    if not is_irreducible(t.perm):
        raise ValueError("induction requires an irreducible permutation: %s" % t.perm)
    n = t.n
    delta_plus = t.total - t.lengths[n - 1]
    delta_minus = t.total - t.lengths[t.perm.preimage(n) - 1]
    if delta_plus == delta_minus:
        return RauzyTie(delta_plus)
    step = STEP_A if delta_plus > delta_minus else STEP_B
    return _checked_step(t, step)


def formal_step(t: IET, choice: Step) -> tuple[ConeMatrix, IET]:
    """Apply a chosen case's formulas regardless of the length comparison.

    At a tie both choices are legal and the successor carries exactly one
    zero-length interval.  Off a tie, the matching choice reproduces
    :func:`rauzy_step`; the mismatched choice produces a negative length and
    is rejected by the successor's validation.
    """
    result = _checked_step(t, choice)
    return result.matrix, result.successor


class TieEncounteredError(RuntimeError):
    """Induction hit a tie before the requested number of steps."""

    def __init__(self, step_index: int, partial: ConeMatrix, at: IET):
        super().__init__("tie encountered at step %d" % step_index)
        self.step_index = step_index
        self.partial_matrix = partial
        self.iet = at


def rauzy_matrix(t: IET, steps: int) -> tuple[ConeMatrix, IET]:
    """The accumulated matrix of ``steps`` induction steps and the final map.

    ``lengths(T) = M * lengths(R^steps(T))`` holds exactly; a tie before the
    requested depth raises :class:`TieEncounteredError` carrying the partial
    product.
    """
    if steps < 0:
        raise ValueError("step count must be nonnegative")
    matrix = ConeMatrix.identity(t.n)
    current = t
    for k in range(steps):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            raise TieEncounteredError(k, matrix, current)
        matrix = matrix * outcome.matrix
        current = outcome.successor
    if tuple(matrix.apply(current.lengths.entries)) != t.lengths.entries:
        raise AssertionError("accumulated matrix identity violated")
    return matrix, current


def expansion_steps(t: IET, max_steps: int) -> list[Step]:
    """The step types of the expansion of ``t``, stopping at a tie or the cap."""
    out: list[Step] = []
    current = t
    for _ in range(max_steps):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            break
        out.append(outcome.step)
        current = outcome.successor
    return out


# ---------------------------------------------------------------------------
# Zero-length intervals: collapse and shadow tracking
# ---------------------------------------------------------------------------


def collapse_zero_interval(t: IET) -> tuple[IET, dict[int, int]]:
    """Forget the unique zero-length interval; returns the smaller IET and the
    old-symbol -> new-symbol correspondence.

    >>> t = IET.from_rationals("(321)", ["1/3", "0", "2/3"])
    >>> small, idx = collapse_zero_interval(t)
    >>> str(small.perm), idx
    ('(21)', {1: 1, 3: 2})
    """
    zeros = [i for i in range(1, t.n + 1) if t.lengths[i - 1] == 0]
    if len(zeros) != 1:
        raise ValueError("need exactly one zero-length interval, found %d" % len(zeros))
    z = zeros[0]
    index_map = {old: (old if old < z else old - 1) for old in range(1, t.n + 1) if old != z}
    new_lengths = tuple(t.lengths[i - 1] for i in range(1, t.n + 1) if i != z)
    new_images = tuple(index_map[s] for s in t.perm.images if s != z)
    return IET(LengthVector(new_lengths), Permutation(new_images)), index_map


@dataclass(frozen=True)
class ShadowStep:
    """Correspondence between induction of a d-IET with one zero interval and
    its collapsed (d-1)-IET: after ``n`` steps of the former and one more step
    of the latter, the zero sits at column ``sigma`` of the ambient map.

    ``critical`` records whether sigma is the last interval or the interval
    sent to the last slot.  ``perm`` is the ambient permutation after ``n``
    steps and ``steps_taken`` the ambient step types since the previous entry.
    """

    n: int
    sigma: int
    critical: bool
    perm: Permutation
    steps_taken: tuple[Step, ...] = ()


def _is_critical(sigma: int, p: Permutation) -> bool:
    return sigma == p.n or sigma == p.preimage(p.n)


def shadow_track(t: IET, steps: int) -> list[ShadowStep]:
    """Track the zero-length interval of ``t`` through ``steps`` induction
    steps of the collapsed map.

    Case analysis per collapsed step: if the zero column is not in critical
    position the ambient map performs the same step type and the zero index
    shifts only past the insertion point of an ``a`` step; if it is critical,
    the ambient map first performs one forced step (type ``a`` when the zero
    is the last interval, ``b`` when it is sent to the last slot) that moves
    the zero out of critical position, then the same step as the collapsed
    map.  The accumulated ambient matrix is validated against the collapsed
    matrix after every entry: deleting the zero column and the resulting
    all-zero row must recover it exactly.
    """
    collapsed, _ = collapse_zero_interval(t)
    zeros = [i for i in range(1, t.n + 1) if t.lengths[i - 1] == 0]
    sigma = zeros[0]
    perm = t.perm
    d = t.n
    ambient = ConeMatrix.identity(d)
    small_matrix = ConeMatrix.identity(d - 1)
    current = collapsed
    n = 0
    out = [ShadowStep(0, sigma, _is_critical(sigma, perm), perm)]
    _validate_shadow_matrices(ambient, small_matrix, sigma)
    for _ in range(steps):
        taken: list[Step] = []
        if _is_critical(sigma, perm):
            forced: Step = STEP_A if sigma == d else STEP_B
            new_sigma = perm.preimage(d) + 1 if sigma == d else sigma
            ambient = ambient * step_matrix(perm, forced)
            perm = rauzy_move(perm, forced)
            sigma = new_sigma
            taken.append(forced)
            n += 1
            if _is_critical(sigma, perm):
                raise AssertionError("zero column still critical after the forced step")
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            raise ValueError("collapsed map hit a tie; cannot track %d steps" % steps)
        step = outcome.step
        if step == STEP_A and sigma > perm.preimage(d):
            sigma += 1
        ambient = ambient * step_matrix(perm, step)
        perm = rauzy_move(perm, step)
        small_matrix = small_matrix * outcome.matrix
        current = outcome.successor
        taken.append(step)
        n += 1
        _validate_shadow_matrices(ambient, small_matrix, sigma)
        out.append(ShadowStep(n, sigma, _is_critical(sigma, perm), perm, tuple(taken)))
    return out


def _validate_shadow_matrices(ambient: ConeMatrix, small: ConeMatrix, sigma: int) -> None:
    d = ambient.n
    trimmed = [
        [row[j - 1] for j in range(1, d + 1) if j != sigma] for row in ambient.rows
    ]
    zero_rows = [i for i, row in enumerate(trimmed) if all(e == 0 for e in row)]
    if len(zero_rows) != 1:
        raise AssertionError(
            "expected exactly one all-zero row after deleting column %d, found %d"
            % (sigma, len(zero_rows))
        )
    del trimmed[zero_rows[0]]
    if ConeMatrix.from_rows(trimmed) != small:
        raise AssertionError("shadow matrix relation violated")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def iet_to_dict(t: IET) -> dict:
    return {
        "permutation": str(t.perm),
        "lengths": [str(e) for e in t.lengths.entries],
    }


def iet_from_dict(data: dict) -> IET:
    return IET.from_rationals(data["permutation"], data["lengths"])


def trace_records(t: IET, max_steps: int) -> list[dict]:
    """Per-step serializable records of the expansion, ending at a tie or cap."""
    records = []
    current = t
    for _ in range(max_steps):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            records.append({"tie": str(outcome.delta)})
            break
        current = outcome.successor
        records.append(
            {
                "step": outcome.step,
                "matrix": [list(row) for row in outcome.matrix.rows],
                "successor_lengths": [str(e) for e in current.lengths.entries],
            }
        )
    return records


def dumps_trace(records: list[dict]) -> str:
    return json.dumps(records, indent=1)
