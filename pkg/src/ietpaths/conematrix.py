"""Nonnegative integer matrices and cone-contraction diagnostics.

Rauzy induction tracks interval lengths through products of nonnegative
integer matrices whose entries grow exponentially, so everything here works
with exact big integers; floating point enters only at a final square root or
division, at a configurable binary precision.

Besides plain matrix algebra this module classifies the matrix shapes that
drive the certification arguments: *combining* matrices (a relaxation of
positivity organised around active/passive/idle column roles), *almost
positive* matrices (some all-positive rows, the rest identity rows) and
*weakly positive* matrices (at most one zero entry).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import mpmath


@dataclass(frozen=True)
class ConeMatrix:
    """A square matrix with nonnegative arbitrary-precision integer entries."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rows)
        for row in self.rows:
            if len(row) != n:
                raise ValueError("matrix must be square")
            for entry in row:
                if entry < 0:
                    raise ValueError("entries must be nonnegative, got %r" % (entry,))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "ConeMatrix":
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, n: int) -> "ConeMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> int:
        """1-based entry access."""
        return self.rows[i - 1][j - 1]

    def column(self, i: int) -> tuple[int, ...]:
        """The i-th column (1-based)."""
        return tuple(row[i - 1] for row in self.rows)

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(i) for i in range(1, self.n + 1)]

    def column_norm(self, i: int) -> int:
        """1-norm of the i-th column (entries are nonnegative)."""
        return sum(row[i - 1] for row in self.rows)

    def __mul__(self, other: "ConeMatrix") -> "ConeMatrix":
        if not isinstance(other, ConeMatrix):
            return NotImplemented
        return multiply(self, other)

    def __pow__(self, k: int) -> "ConeMatrix":
        if k < 0:
            raise ValueError("only nonnegative powers are defined")
        result = ConeMatrix.identity(self.n)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def apply(self, vector: Sequence) -> list:
        """Matrix-vector product; works for ints, Fractions and mpmath floats."""
        if len(vector) != self.n:
            raise ValueError("vector length %d does not match dimension %d" % (len(vector), self.n))
        return [sum(row[j] * vector[j] for j in range(self.n)) for row in self.rows]

    def transpose(self) -> "ConeMatrix":
        return ConeMatrix(tuple(zip(*self.rows)))

    def det(self) -> int:
        """Exact determinant via fraction-free elimination."""
        n = self.n
        m = [list(row) for row in self.rows]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                for r in range(k + 1, n):
                    if m[r][k] != 0:
                        m[k], m[r] = m[r], m[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
                m[i][k] = 0
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def is_positive(self) -> bool:
        return all(entry > 0 for row in self.rows for entry in row)

    def max_entry(self) -> int:
        return max(entry for row in self.rows for entry in row)

    def __str__(self) -> str:
        width = max(len(str(e)) for row in self.rows for e in row)
        return "\n".join(" ".join(str(e).rjust(width) for e in row) for row in self.rows)


def multiply(a: ConeMatrix, b: ConeMatrix) -> ConeMatrix:
    """Exact product; column i of A*B is the A-column combination given by C_i(B)."""
    if a.n != b.n:
        raise ValueError("dimension mismatch: %d vs %d" % (a.n, b.n))
    n = a.n
    bcols = list(zip(*b.rows))
    rows = tuple(
        tuple(sum(arow[k] * bcols[j][k] for k in range(n)) for j in range(n))
        for arow in a.rows
    )
    return ConeMatrix(rows)


def product(matrices: Sequence[ConeMatrix]) -> ConeMatrix:
    if not matrices:
        raise ValueError("empty product has no dimension")
    result = matrices[0]
    for m in matrices[1:]:
        result = result * m
    return result


# ---------------------------------------------------------------------------
# Column-role taxonomy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CombiningClassification:
    """Outcome of the combining test with the column role partition.

    Column i "is added to" column j when entry (i, j) is positive with j != i;
    a combining matrix has >= 2 active columns that are pairwise added to each
    other, passive columns each receiving an active column, at most one idle
    column, and no additions coming from non-active columns.
    """

    combining: bool
    active: tuple[int, ...] = ()
    passive: tuple[int, ...] = ()
    idle: Optional[int] = None
    failure_reason: Optional[str] = None


def _adds_to(a: ConeMatrix, i: int) -> list[int]:
    """Columns j != i that column i is added to (entry (i, j) > 0)."""
    return [j for j in range(1, a.n + 1) if j != i and a.entry(i, j) > 0]


def classify_combining(a: ConeMatrix) -> CombiningClassification:
    """Search all admissible role partitions in a fixed canonical order.

    Active candidate sets are enumerated by descending size and then
    lexicographically; the passive set is always taken maximal (idle only
    where no active column is received), so the classification is
    deterministic.
    """
    n = a.n
    must_active = [i for i in range(1, n + 1) if _adds_to(a, i)]
    for size in range(n, 1, -1):
        for active in itertools.combinations(range(1, n + 1), size):
            active_set = set(active)
            if not set(must_active) <= active_set:
                continue
            if any(a.entry(i, j) == 0 for i in active for j in active if i != j):
                continue
            rest = [j for j in range(1, n + 1) if j not in active_set]
            passive = tuple(j for j in rest if any(a.entry(i, j) > 0 for i in active))
            idle = tuple(j for j in rest if j not in passive)
            if len(idle) > 1:
                continue
            return CombiningClassification(
                combining=True,
                active=active,
                passive=passive,
                idle=idle[0] if idle else None,
            )
    if len(must_active) >= 2:
        for i, j in itertools.permutations(must_active, 2):
            if a.entry(i, j) == 0:
                reason = (
                    "columns %s all add to other columns and would have to be active, "
                    "but column %d is not added to column %d" % (must_active, i, j)
                )
                return CombiningClassification(combining=False, failure_reason=reason)
    return CombiningClassification(
        combining=False,
        failure_reason="no admissible partition with >= 2 active columns and <= 1 idle column",
    )


@dataclass(frozen=True)
class AlmostPositiveVerdict:
    holds: bool
    tau: Optional[int] = None
    positive_rows: tuple[int, ...] = ()


def is_almost_positive(a: ConeMatrix) -> AlmostPositiveVerdict:
    """tau > 1 all-positive rows, every other row a row of the identity matrix.

    >>> m = ConeMatrix.from_rows([(2, 5, 4, 4), (0, 0, 1, 0), (0, 0, 0, 1), (1, 3, 3, 3)])
    >>> is_almost_positive(m).tau
    2
    """
    positive_rows = tuple(
        i for i in range(1, a.n + 1) if all(e > 0 for e in a.rows[i - 1])
    )
    tau = len(positive_rows)
    if tau <= 1:
        return AlmostPositiveVerdict(False)
    for i in range(1, a.n + 1):
        if i in positive_rows:
            continue
        row = a.rows[i - 1]
        if sorted(row) != [0] * (a.n - 1) + [1]:
            return AlmostPositiveVerdict(False)
    return AlmostPositiveVerdict(True, tau, positive_rows)


def is_weakly_positive(a: ConeMatrix) -> bool:
    """At most one zero entry in the whole matrix."""
    zeros = sum(1 for row in a.rows for e in row if e == 0)
    return zeros <= 1


# ---------------------------------------------------------------------------
# Perron-Frobenius direction and contraction diagnostics
# ---------------------------------------------------------------------------


class PowerIterationError(RuntimeError):
    """The normalized column iteration failed to converge (input not primitive
    on its eventually-positive block)."""


def _normalized_column(m: ConeMatrix, prec: int) -> list[mpmath.mpf]:
    """Largest column of ``m`` normalized to 1-norm 1 at binary precision ``prec``."""
    norms = [m.column_norm(i) for i in range(1, m.n + 1)]
    best = max(range(m.n), key=lambda i: (norms[i], -i))
    col = m.column(best + 1)
    total = sum(col)
    with mpmath.workprec(prec):
        return [mpmath.mpf(c) / total for c in col]


def pf_direction(
    a: ConeMatrix, tol: float = 1e-30, precision_bits: Optional[int] = None, max_doublings: int = 16
) -> list[mpmath.mpf]:
    """Direction of the dominant eigenvector as a 1-norm-normalized vector.

    Implemented as power iteration accelerated by exact integer squaring:
    successive powers A^(2^k) are formed exactly and the dominant column is
    normalized only for the convergence test, so precision loss cannot
    accumulate.  Convergence is declared when consecutive iterates differ by
    less than ``tol`` in the 1-norm.
    """
    if precision_bits is None:
        with mpmath.workprec(64):
            precision_bits = max(96, int(-mpmath.log(mpmath.mpf(tol), 2)) + 48)
    for i in range(1, a.n + 1):
        if a.column_norm(i) == 0:
            raise PowerIterationError("zero column %d" % i)
    prec = precision_bits
    power = a
    prev = _normalized_column(power, prec)
    with mpmath.workprec(prec):
        for _ in range(max_doublings):
            power = power * power
            cur = _normalized_column(power, prec)
            if sum(abs(x - y) for x, y in zip(cur, prev)) < tol:
                return cur
            prev = cur
    raise PowerIterationError("no convergence after %d doublings" % max_doublings)


def gram_sin_squared(u: Sequence[int], v: Sequence[int]) -> Fraction:
    """Exact sin^2 of the angle between integer vectors via Gram quantities."""
    uu = sum(x * x for x in u)
    vv = sum(x * x for x in v)
    uv = sum(x * y for x, y in zip(u, v))
    if uu == 0 or vv == 0:
        raise ValueError("sin angle undefined for a zero vector")
    return 1 - Fraction(uv * uv, uu * vv)


def sin_angle(u: Sequence[int], v: Sequence[int], precision_bits: int = 128) -> mpmath.mpf:
    """|sin| of the angle between two integer vectors, rounded only at the sqrt."""
    s2 = gram_sin_squared(u, v)
    with mpmath.workprec(precision_bits):
        return mpmath.sqrt(mpmath.mpf(s2.numerator) / s2.denominator)


@dataclass(frozen=True)
class ContractionDiagnostics:
    """Measured cone-contraction quantities of a matrix.

    ``max_sin_angle`` is the largest pairwise |sin| between columns,
    ``ratio_max_to_second_smallest`` compares the largest column 1-norm with
    the second smallest, and ``projective_diameter`` is the 1-norm diameter of
    the normalized column set.  All are computed from exact integer data and
    converted at ``precision_bits``.
    """

    max_sin_angle: mpmath.mpf
    ratio_max_to_second_smallest: Fraction
    projective_diameter: mpmath.mpf
    precision_bits: int


def contraction_diagnostics(a: ConeMatrix, precision_bits: int = 128) -> ContractionDiagnostics:
    cols = a.columns()
    norms = [sum(c) for c in cols]
    if any(norm == 0 for norm in norms):
        raise ValueError("contraction diagnostics need nonzero columns")
    max_s2 = Fraction(0)
    max_diam = Fraction(0)
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            s2 = gram_sin_squared(cols[i], cols[j])
            if s2 > max_s2:
                max_s2 = s2
            diam = sum(
                abs(Fraction(cols[i][k], norms[i]) - Fraction(cols[j][k], norms[j]))
                for k in range(a.n)
            )
            if diam > max_diam:
                max_diam = diam
    by_norm = sorted(range(len(cols)), key=lambda i: (norms[i], i))
    # C_max breaks norm ties toward the smallest index; C_u is the second
    # smallest norm counted with multiplicity, same tie-break.
    max_index = max(range(len(cols)), key=lambda i: (norms[i], -i))
    ratio = Fraction(norms[max_index], norms[by_norm[1]])
    with mpmath.workprec(precision_bits):
        max_sin = mpmath.sqrt(mpmath.mpf(max_s2.numerator) / max_s2.denominator)
        diameter = mpmath.mpf(max_diam.numerator) / max_diam.denominator
    return ContractionDiagnostics(max_sin, ratio, diameter, precision_bits)


def serialize_matrix(a: ConeMatrix) -> list[list[int]]:
    return [list(row) for row in a.rows]


def matrix_from_serialized(rows: Sequence[Sequence[int]]) -> ConeMatrix:
    return ConeMatrix.from_rows(rows)
