"""Realizing building blocks as concrete IETs and assembling certified paths.

A block's left endpoint is the limit of its constant-left successor
expansion: the walk through left edges is eventually periodic, the cycle
matrix is combining, and the normalized columns of its powers converge to a
single direction, which is pulled back through the pre-cycle prefix.  The
midpoint is the image of the *opposite* endpoint of a successor under the
corresponding edge matrix; for a well-formed catalog the left and right
routes produce the same point, and that point lies on the fail plane of the
block's permutation.  Both facts are checked numerically here, not assumed.

The approximating paths are piecewise-linear curves through the simplex whose
breakpoints sit at dyadic parameters: depth ``n`` realizes the ``2^n`` leaves
of the binary successor tree below a root block.  Unique ergodicity of
individual IETs is certified by running exact induction until the columns of
the accumulated matrix are angle-close, which pins the nested simplices to a
point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal, Optional, Sequence

import mpmath

from .catalog import Catalog, CompositePath, Direction, LEFT, RIGHT, concatenate_paths
from .conematrix import ConeMatrix, ContractionDiagnostics, contraction_diagnostics, pf_direction
from .iet import (
    IET,
    LengthVector,
    RauzyStep,
    RauzyTie,
    rauzy_step,
    collapse_zero_interval,
)
from .permutations import (
    FourTuple,
    Permutation,
    Step,
    STEP_A,
    STEP_B,
    is_accessible_pair,
    is_degenerate,
    is_irreducible,
    parse_permutation,
    restrict,
    rauzy_class,
)

Vector = tuple  # tuple of mpmath.mpf, 1-norm normalized


def _normalize(v: Sequence) -> Vector:
    total = sum(v)
    return tuple(x / total for x in v)


def _dist1(u: Sequence, v: Sequence) -> mpmath.mpf:
    return sum(abs(x - y) for x, y in zip(u, v))


def mpf_to_fraction(x: mpmath.mpf) -> Fraction:
    """Exact rational value of a binary float."""
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    if man == 0:
        return Fraction(0)
    value = Fraction(man, 1)
    value = value * Fraction(2) ** exp
    return -value if sign else value


def vector_to_fractions(v: Sequence) -> tuple[Fraction, ...]:
    return tuple(mpf_to_fraction(x) for x in v)


# ---------------------------------------------------------------------------
# Endpoint and midpoint realization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndpointCertificate:
    """Evidence attached to a realized endpoint.

    ``forward_steps_verified`` counts exact induction steps of the realized
    vector (re-expressed as exact rationals, with zero coordinates replaced by
    a dust term when present) that reproduce the step sequence of the
    constant-direction block walk.
    """

    block: str
    direction: Direction
    forward_steps_verified: int
    perturbed: bool
    precision_bits: int


class RealizationError(RuntimeError):
    """Endpoint realization failed; the catalog is defective."""


class BlockRealization:
    """Memoized endpoint/midpoint realizations for one catalog."""

    def __init__(self, catalog: Catalog, precision_bits: int = 256):
        self.catalog = catalog
        self.precision_bits = precision_bits
        self._endpoints: dict[tuple[str, Direction], Vector] = {}

    def _walk(self, start: str, direction: Direction) -> tuple[list[str], int]:
        seen: dict[str, int] = {}
        order: list[str] = []
        cur = start
        while cur not in seen:
            seen[cur] = len(order)
            order.append(cur)
            cur = self.catalog.successor(cur, direction)
        return order, seen[cur]

    def expected_steps(self, start: str, direction: Direction, count: int) -> list[Step]:
        """Step types of the constant-direction expansion from ``start``."""
        steps: list[Step] = []
        cur = start
        while len(steps) < count:
            steps.extend(self.catalog.edge_path(cur, direction).steps)
            cur = self.catalog.successor(cur, direction)
        return steps[:count]

    def endpoint(self, block: str, direction: Direction) -> Vector:
        key = (block, direction)
        if key not in self._endpoints:
            order, entry = self._walk(block, direction)
            n = self.catalog.blocks[block].perm.n
            prefix = ConeMatrix.identity(n)
            for b in order[:entry]:
                prefix = prefix * self.catalog.edge_matrix(b, direction)
            cycle = ConeMatrix.identity(n)
            for b in order[entry:]:
                cycle = cycle * self.catalog.edge_matrix(b, direction)
            with mpmath.workprec(self.precision_bits + 30):
                tol = mpmath.mpf(2) ** (-(self.precision_bits + 10))
                try:
                    v = pf_direction(cycle, tol=tol, precision_bits=self.precision_bits + 30)
                except Exception as exc:
                    raise RealizationError(
                        "dominant-direction iteration failed for %s.%s: %s" % (block, direction, exc)
                    ) from exc
                self._endpoints[key] = _normalize(prefix.apply(v))
        return self._endpoints[key]

    def midpoint(self, block: str) -> tuple[Vector, mpmath.mpf, mpmath.mpf]:
        """The fail-plane midpoint with its two residuals.

        Returns ``(point, agreement_residual, plane_residual)`` where the
        first residual compares the left and right realizations of the point
        and the second measures distance from the fail plane.
        """
        with mpmath.workprec(self.precision_bits + 30):
            left = _normalize(
                self.catalog.edge_matrix(block, LEFT).apply(
                    self.endpoint(self.catalog.successor(block, LEFT), RIGHT)
                )
            )
            right = _normalize(
                self.catalog.edge_matrix(block, RIGHT).apply(
                    self.endpoint(self.catalog.successor(block, RIGHT), LEFT)
                )
            )
            agreement = _dist1(left, right)
            p = self.catalog.blocks[block].perm
            plane = abs(left[p.n - 1] - left[p.preimage(p.n) - 1])
        return left, agreement, plane

    def plane_side(self, block: str, v: Sequence) -> mpmath.mpf:
        """Signed fail-plane coordinate; negative on the type-a side."""
        p = self.catalog.blocks[block].perm
        return v[p.n - 1] - v[p.preimage(p.n) - 1]


def realize_endpoint(
    catalog: Catalog,
    block: str,
    direction: Direction,
    tol: float = 1e-30,
    precision_bits: int = 256,
    verify_steps: int = 40,
    realization: Optional[BlockRealization] = None,
) -> tuple[Vector, EndpointCertificate]:
    """Realize a block endpoint and certify it by forward re-expansion.

    The returned vector's own induction, recomputed from exact rationals,
    must follow the constant-direction step sequence for ``verify_steps``
    steps.  Zero coordinates (endpoints on simplex faces) are replaced by a
    dust term far below the working precision before re-expanding.
    """
    realization = realization or BlockRealization(catalog, precision_bits)
    v = realization.endpoint(block, direction)
    fracs = list(vector_to_fractions(v))
    perturbed = False
    dust = Fraction(1, 2 ** (precision_bits + 64))
    for i, value in enumerate(fracs):
        if value == 0:
            fracs[i] = dust
            perturbed = True
    t = IET(LengthVector(tuple(fracs)), catalog.blocks[block].perm)
    expected = realization.expected_steps(block, direction, verify_steps)
    verified = 0
    current = t
    for step in expected:
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie) or outcome.step != step:
            break
        verified += 1
        current = outcome.successor
    if verified < min(verify_steps, 10):
        raise RealizationError(
            "endpoint %s.%s re-expansion followed only %d of %d steps"
            % (block, direction, verified, verify_steps)
        )
    return v, EndpointCertificate(block, direction, verified, perturbed, precision_bits)


def realize_midpoint(
    catalog: Catalog,
    block: str,
    tol: float = 1e-30,
    precision_bits: int = 256,
    realization: Optional[BlockRealization] = None,
) -> Vector:
    """The block midpoint; raises if the two routes disagree or the point
    misses the fail plane by more than ``tol``."""
    realization = realization or BlockRealization(catalog, precision_bits)
    point, agreement, plane = realization.midpoint(block)
    if agreement > tol:
        raise RealizationError(
            "midpoint of %s: left/right realizations differ by %s" % (block, mpmath.nstr(agreement, 5))
        )
    if plane > tol:
        raise RealizationError(
            "midpoint of %s: fail-plane residual %s above tolerance" % (block, mpmath.nstr(plane, 5))
        )
    return point


@dataclass(frozen=True)
class RealizedBlock:
    """A block realized inside a cell of the induction partition."""

    block: str
    prefix: ConeMatrix
    t1: Vector
    t2: Vector
    f: Vector
    diagnostics: ContractionDiagnostics


def realize_block(
    catalog: Catalog,
    block: str,
    prefix: Optional[ConeMatrix] = None,
    precision_bits: int = 256,
    realization: Optional[BlockRealization] = None,
) -> RealizedBlock:
    realization = realization or BlockRealization(catalog, precision_bits)
    n = catalog.blocks[block].perm.n
    prefix = prefix if prefix is not None else ConeMatrix.identity(n)
    with mpmath.workprec(precision_bits + 30):
        t1 = _normalize(prefix.apply(realization.endpoint(block, LEFT)))
        t2 = _normalize(prefix.apply(realization.endpoint(block, RIGHT)))
        f = _normalize(prefix.apply(realization.midpoint(block)[0]))
    diag = contraction_diagnostics(
        prefix * catalog.edge_matrix(block, LEFT), precision_bits=min(precision_bits, 192)
    )
    return RealizedBlock(block, prefix, t1, t2, f, diag)


def realization_report(
    catalog: Catalog, precision_bits: int = 256, tol: Optional[float] = None
) -> dict:
    """Numeric validation of the whole catalog: midpoint agreement, fail-plane
    membership, and the declared fail-side flags of both endpoints."""
    realization = BlockRealization(catalog, precision_bits)
    if tol is None:
        tol = mpmath.mpf(2) ** (-precision_bits // 2)
    blocks = {}
    ok = True
    with mpmath.workprec(precision_bits + 30):
        for block_id, block in sorted(catalog.blocks.items()):
            t1 = realization.endpoint(block_id, LEFT)
            t2 = realization.endpoint(block_id, RIGHT)
            _, agreement, plane = realization.midpoint(block_id)
            s1 = realization.plane_side(block_id, t1)
            s2 = realization.plane_side(block_id, t2)
            expected_sign = -1 if block.fail_side == STEP_A else 1
            sides_ok = (
                mpmath.sign(s1) == expected_sign
                and mpmath.sign(s2) == -expected_sign
                and abs(s1) > tol
                and abs(s2) > tol
            )
            good = agreement < tol and plane < tol and sides_ok
            ok = ok and good
            blocks[block_id] = {
                "agreement_residual": float(agreement),
                "plane_residual": float(plane),
                "t1_side": float(s1),
                "t2_side": float(s2),
                "fail_side_flag": block.fail_side,
                "ok": bool(good),
            }
    return {"passed": ok, "tolerance": float(tol), "precision_bits": precision_bits, "blocks": blocks}


# ---------------------------------------------------------------------------
# Approximating paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathApproximation:
    """Piecewise-linear approximation with breakpoints at dyadic parameters."""

    depth: int
    breakpoints: tuple[tuple[Fraction, Vector], ...]
    depth_classes: tuple[int, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def value_at(self, t: Fraction) -> Vector:
        ts = [bp[0] for bp in self.breakpoints]
        if not ts[0] <= t <= ts[-1]:
            raise ValueError("parameter %s outside [%s, %s]" % (t, ts[0], ts[-1]))
        for (ta, va), (tb, vb) in zip(self.breakpoints, self.breakpoints[1:]):
            if ta <= t <= tb:
                if t == ta:
                    return va
                lam = mpmath.mpf(Fraction(t - ta, tb - ta).numerator) / Fraction(t - ta, tb - ta).denominator
                return tuple(x + lam * (y - x) for x, y in zip(va, vb))
        return self.breakpoints[-1][1]


def _tree_leaves(catalog: Catalog, root: str, depth: int) -> list[tuple[str, ConeMatrix]]:
    n = catalog.blocks[root].perm.n
    leaves = [(root, ConeMatrix.identity(n))]
    for _ in range(depth):
        nxt = []
        for block, prefix in leaves:
            nxt.append((catalog.successor(block, LEFT), prefix * catalog.edge_matrix(block, LEFT)))
            nxt.append((catalog.successor(block, RIGHT), prefix * catalog.edge_matrix(block, RIGHT)))
        leaves = nxt
    return leaves


def _dyadic_depth_classes(depth: int) -> list[int]:
    classes = {Fraction(0): 0, Fraction(1): 0}
    for level in range(1, depth + 1):
        for k in range(1, 2**level, 2):
            t = Fraction(k, 2**level)
            left = Fraction(k - 1, 2**level)
            right = Fraction(k + 1, 2**level)
            classes[t] = min(classes[left], classes[right]) + 1
    return [classes[Fraction(k, 2**depth)] for k in range(2**depth + 1)]


def build_path(
    catalog: Catalog,
    root: str,
    depth: int,
    precision_bits: int = 256,
    realization: Optional[BlockRealization] = None,
) -> PathApproximation:
    """The depth-``n`` approximating path below ``root``: 2^n + 1 breakpoints
    at parameters k/2^n, realized through the leaf prefix matrices."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    realization = realization or BlockRealization(catalog, precision_bits)
    leaves = _tree_leaves(catalog, root, depth)
    points: list[tuple[Fraction, Vector]] = []
    with mpmath.workprec(precision_bits + 30):
        for i, (block, prefix) in enumerate(leaves):
            v = _normalize(prefix.apply(realization.endpoint(block, LEFT)))
            points.append((Fraction(i, 2**depth), v))
        last_block, last_prefix = leaves[-1]
        points.append(
            (Fraction(1), _normalize(last_prefix.apply(realization.endpoint(last_block, RIGHT))))
        )
    metadata = {
        "root": root,
        "depth": depth,
        "precision_bits": precision_bits,
        "catalog_hash": catalog.content_hash(),
    }
    return PathApproximation(depth, tuple(points), tuple(_dyadic_depth_classes(depth)), metadata)


def sup_difference(coarse: PathApproximation, fine: PathApproximation) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(sup_t |fine - coarse|_1, max shared-dyadic disagreement).

    Both curves are piecewise linear and agree at the coarse breakpoints, so
    the supremum over all t is attained at the fine curve's new midpoints,
    where the coarse curve passes through the average of the flanking
    breakpoints.
    """
    if fine.depth != coarse.depth + 1:
        raise ValueError("expected consecutive depths")
    shared = mpmath.mpf(0)
    sup = mpmath.mpf(0)
    for k in range(2**coarse.depth + 1):
        d = _dist1(coarse.breakpoints[k][1], fine.breakpoints[2 * k][1])
        shared = max(shared, d)
    for k in range(2**coarse.depth):
        mid_fine = fine.breakpoints[2 * k + 1][1]
        a = coarse.breakpoints[k][1]
        b = coarse.breakpoints[k + 1][1]
        mid_coarse = tuple((x + y) / 2 for x, y in zip(a, b))
        sup = max(sup, _dist1(mid_fine, mid_coarse))
    return sup, shared


def cauchy_profile(
    catalog: Catalog, root: str, max_depth: int, precision_bits: int = 256
) -> list[dict]:
    """sup_t |c_{n+1} - c_n| and dyadic agreement for n = 0..max_depth-1."""
    realization = BlockRealization(catalog, precision_bits)
    paths = [build_path(catalog, root, d, precision_bits, realization) for d in range(max_depth + 1)]
    out = []
    for n in range(max_depth):
        sup, shared = sup_difference(paths[n], paths[n + 1])
        out.append({"depth": n, "sup": sup, "shared_dyadic_residual": shared})
    return out


# ---------------------------------------------------------------------------
# Unique ergodicity certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UECertificate:
    steps_checked: int
    final_max_sin_angle: Optional[float]
    tolerance: float
    certified: bool
    tie_step: Optional[int] = None

    @property
    def verdict(self) -> str:
        return "certified" if self.certified else "inconclusive"


def certify_unique_ergodicity(
    t: IET, max_steps: int = 500, tol: float = 1e-9, precision_bits: int = 128
) -> UECertificate:
    """Certify unique ergodicity via cone contraction of the induction matrices.

    Runs exact induction, accumulating the matrix product; the IET is
    certified once the maximal pairwise |sin| between the columns drops below
    ``tol``, which forces the nested image simplices to a single point.  A tie
    ends the check inconclusively, as does the step budget.
    """
    if any(e == 0 for e in t.lengths.entries):
        raise ValueError("certification needs strictly positive lengths")
    matrix = ConeMatrix.identity(t.n)
    current = t
    last_angle = None
    for k in range(1, max_steps + 1):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            return UECertificate(k - 1, _float_or_none(last_angle), tol, False, tie_step=k)
        matrix = matrix * outcome.matrix
        current = outcome.successor
        diag = contraction_diagnostics(matrix, precision_bits=precision_bits)
        last_angle = diag.max_sin_angle
        if last_angle < tol:
            return UECertificate(k, float(last_angle), tol, True)
    return UECertificate(max_steps, _float_or_none(last_angle), tol, False)


def _float_or_none(x) -> Optional[float]:
    return None if x is None else float(x)


def column_growth_profile(t: IET, steps: int) -> list[tuple[int, ...]]:
    """Column norms of the accumulated induction matrix after each step."""
    matrix = ConeMatrix.identity(t.n)
    current = t
    out = []
    for _ in range(steps):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            break
        matrix = matrix * outcome.matrix
        current = outcome.successor
        out.append(tuple(matrix.column_norm(i) for i in range(1, t.n + 1)))
    return out


# ---------------------------------------------------------------------------
# Connecting realized endpoints
# ---------------------------------------------------------------------------


class ConnectionError_(RuntimeError):
    """Endpoints could not be connected within the given horizon."""


def _expansion_with_matrices(t: IET, max_steps: int):
    """(steps, prefix matrices, iterates) of the expansion, tie-terminated."""
    steps: list[Step] = []
    prefixes = [ConeMatrix.identity(t.n)]
    iterates = [t]
    current = t
    for _ in range(max_steps):
        outcome = rauzy_step(current)
        if isinstance(outcome, RauzyTie):
            break
        steps.append(outcome.step)
        prefixes.append(prefixes[-1] * outcome.matrix)
        current = outcome.successor
        iterates.append(current)
    return steps, prefixes, iterates


def _matches_endpoint(
    realization: BlockRealization, candidate: IET, tol
) -> Optional[tuple[str, Direction]]:
    norm = candidate.lengths.normalized()
    with mpmath.workprec(realization.precision_bits):
        v = tuple(mpmath.mpf(x.numerator) / x.denominator for x in norm)
        for block_id, block in realization.catalog.blocks.items():
            if block.perm != candidate.perm:
                continue
            for direction in (LEFT, RIGHT):
                if _dist1(v, realization.endpoint(block_id, direction)) < tol:
                    return block_id, direction
    return None


def connect_endpoints(
    catalog: Catalog,
    s1: IET,
    s2: IET,
    horizon: int = 30,
    depth: int = 6,
    precision_bits: int = 256,
    tol: float = 1e-40,
) -> list[PathApproximation]:
    """Connect two IETs that become realized block endpoints within
    ``horizon`` induction steps.

    The expansions of the two inputs are followed to their divergence point;
    the certified path of the block anchored there is transported back
    through the shared prefix matrix.  If the divergence happens within the
    horizon the result is split at the shared fail-plane midpoint into two
    segments; if the two inputs lie in the same horizon cell a single segment
    is returned.
    """
    if s1.perm != s2.perm:
        raise ConnectionError_("endpoints carry different permutations")
    realization = BlockRealization(catalog, precision_bits)
    n1 = s1.normalized()
    n2 = s2.normalized()
    if n1.lengths.entries == n2.lengths.entries:
        with mpmath.workprec(precision_bits):
            v = tuple(mpmath.mpf(x.numerator) / x.denominator for x in n1.lengths.entries)
        return [
            PathApproximation(
                0,
                ((Fraction(0), v), (Fraction(1), v)),
                (0, 0),
                {"trivial": True},
            )
        ]
    steps1, prefixes1, _ = _expansion_with_matrices(n1, horizon)
    steps2, prefixes2, _ = _expansion_with_matrices(n2, horizon)
    m = 0
    while m < len(steps1) and m < len(steps2) and steps1[m] == steps2[m]:
        m += 1
    # both continuations must realize the two endpoints of one block at the
    # divergence permutation
    shared_prefix = prefixes1[m]
    cell_perm = _perm_after(n1, m)
    candidates = [b for b, blk in catalog.blocks.items() if blk.perm == cell_perm]
    with mpmath.workprec(precision_bits):
        r1 = _residual_vector(n1, m)
        r2 = _residual_vector(n2, m)
        for block_id in candidates:
            t1 = realization.endpoint(block_id, LEFT)
            t2 = realization.endpoint(block_id, RIGHT)
            direct = _dist1(r1, t1) < tol and _dist1(r2, t2) < tol
            swapped = _dist1(r1, t2) < tol and _dist1(r2, t1) < tol
            if not direct and not swapped:
                continue
            whole = build_path(catalog, block_id, depth, precision_bits, realization)
            transported = _transport_path(whole, shared_prefix, precision_bits)
            if swapped:
                transported = _reverse_path(transported)
            if m >= horizon:
                return [transported]
            return _split_at_midpoint(transported)
    raise ConnectionError_(
        "inputs do not realize the endpoints of a catalog block at their divergence cell (%s)"
        % cell_perm
    )


def _perm_after(t: IET, steps: int) -> Permutation:
    current = t
    for _ in range(steps):
        outcome = rauzy_step(current)
        current = outcome.successor
    return current.perm


def _residual_vector(t: IET, steps: int) -> Vector:
    current = t
    for _ in range(steps):
        outcome = rauzy_step(current)
        current = outcome.successor
    norm = current.lengths.normalized()
    return tuple(mpmath.mpf(x.numerator) / x.denominator for x in norm)


def _transport_path(path: PathApproximation, prefix: ConeMatrix, precision_bits: int) -> PathApproximation:
    with mpmath.workprec(precision_bits + 30):
        points = tuple((t, _normalize(prefix.apply(v))) for t, v in path.breakpoints)
    meta = dict(path.metadata)
    meta["transported"] = True
    return PathApproximation(path.depth, points, path.depth_classes, meta)


def _reverse_path(path: PathApproximation) -> PathApproximation:
    pts = tuple((Fraction(1) - t, v) for t, v in reversed(path.breakpoints))
    meta = dict(path.metadata)
    meta["reversed"] = True
    return PathApproximation(path.depth, pts, tuple(reversed(path.depth_classes)), meta)


def _split_at_midpoint(path: PathApproximation) -> list[PathApproximation]:
    half = len(path.breakpoints) // 2
    first = path.breakpoints[: half + 1]
    second = path.breakpoints[half:]

    def rescale(points):
        t0 = points[0][0]
        t1 = points[-1][0]
        return tuple((Fraction(t - t0, t1 - t0), v) for t, v in points)

    meta = dict(path.metadata)
    return [
        PathApproximation(path.depth - 1, rescale(first), path.depth_classes[: half + 1], meta),
        PathApproximation(path.depth - 1, rescale(second), path.depth_classes[half:], meta),
    ]


# ---------------------------------------------------------------------------
# The rotation-number segments and small-support connection plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HAlphaCase:
    """One combinatorial pattern of two interacting symbol pairs.

    ``merged_perm`` is the permutation induced on the four merged symbols;
    ``pair`` holds the two symbols acting as one interval, ``p_support`` and
    ``q_support`` the supports of the two rotations to be joined.  Cases with
    the merged pair in final position need alpha > 1/2; first-position cases
    need alpha < 1/2.
    """

    name: str
    merged_perm: Permutation
    pair: tuple[int, int]
    p_support: tuple[int, int]
    q_support: tuple[int, int]
    needs_alpha_above_half: bool


H_ALPHA_CASES: dict[str, HAlphaCase] = {
    "interleaved": HAlphaCase(
        "interleaved", parse_permutation("(3421)"), (3, 4), (1, 3), (2, 4), True
    ),
    "nested": HAlphaCase(
        "nested", parse_permutation("(3421)"), (3, 4), (1, 4), (2, 3), True
    ),
    "interleaved_flipped": HAlphaCase(
        "interleaved_flipped", parse_permutation("(4312)"), (1, 2), (1, 3), (2, 4), False
    ),
    "nested_flipped": HAlphaCase(
        "nested_flipped", parse_permutation("(4312)"), (1, 2), (1, 4), (2, 3), False
    ),
}

_EXCLUDED_MERGED = parse_permutation("(4231)")


def collapse_pair(case: HAlphaCase, point: Sequence) -> tuple:
    """Project a 4-symbol point to the 3-interval coordinates of the case."""
    if case.pair == (3, 4):
        return (point[0], point[1], point[2] + point[3])
    return (point[0] + point[1], point[2], point[3])


def rotation_number(y: Sequence):
    """Induced rotation number of a 3-IET with reversing permutation (321)."""
    return (y[1] + y[2]) / (y[0] + 2 * y[1] + y[2])


def h_alpha_segment(alpha, case: str | HAlphaCase, samples: int = 16) -> list[tuple]:
    """Polyline of constant induced rotation number joining two pair-supported
    rotations through the given combinatorial case.

    For exact (rational or Fraction) ``alpha`` every emitted point satisfies
    the rotation-number constraint exactly; the flipped cases require
    ``alpha < 1/2``, the others ``alpha > 1/2``.
    """
    if isinstance(case, str):
        if case == "(4231)" or case == "excluded":
            raise ValueError("the (4231) merged pattern is excluded from the construction")
        if case not in H_ALPHA_CASES:
            raise ValueError("unknown case %r; expected one of %s" % (case, sorted(H_ALPHA_CASES)))
        case = H_ALPHA_CASES[case]
    one = Fraction(1) if isinstance(alpha, (Fraction, int)) else mpmath.mpf(1)
    alpha = Fraction(alpha) if isinstance(alpha, (Fraction, int, str)) else alpha
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if case.needs_alpha_above_half and not alpha >= Fraction(1, 2):
        raise ValueError("case %s needs alpha >= 1/2" % case.name)
    if not case.needs_alpha_above_half and not alpha <= Fraction(1, 2):
        raise ValueError("case %s needs alpha <= 1/2" % case.name)

    pair_lo, pair_hi = case.pair
    # 3-interval walk endpoints: the canonical point and the boundary point on
    # the admissible side
    y_start = (one - alpha, alpha * 0, alpha)
    if case.needs_alpha_above_half:
        y_end = (alpha * 0, (one - alpha) / alpha, (2 * alpha - one) / alpha)
    else:
        y_end = ((one - 2 * alpha) / (one - alpha), alpha / (one - alpha), alpha * 0)

    def embed(y, pair_symbol):
        """Lift 3-interval coordinates, putting the merged mass on one symbol."""
        if case.pair == (3, 4):
            point = [y[0], y[1], 0 * one, 0 * one]
            point[pair_symbol - 1] = y[2]
        else:
            point = [0 * one, 0 * one, y[1], y[2]]
            point[pair_symbol - 1] = y[0]
        return tuple(point)

    p_member = next(s for s in case.p_support if s in case.pair)
    q_member = next(s for s in case.q_support if s in case.pair)
    walk = []
    for k in range(samples + 1):
        lam = Fraction(k, samples) if isinstance(alpha, Fraction) else mpmath.mpf(k) / samples
        y = tuple(a + lam * (b - a) for a, b in zip(y_start, y_end))
        walk.append(y)
    if case.needs_alpha_above_half:
        # mass starts on the p member of the pair, transfers to the q member,
        # then walks toward the q-supported boundary point
        points = [embed(y_start, p_member), embed(y_start, q_member)]
        points.extend(embed(y, q_member) for y in walk[1:])
    else:
        # walk first (mass riding on the p member), transfer at the far end
        points = [embed(y, p_member) for y in walk]
        points.append(embed(y_end, q_member))
    return points


@dataclass(frozen=True)
class PlanSegment:
    """One executable piece of a connection plan."""

    kind: Literal["four-iet-path", "weight-transfer", "h-alpha"]
    support: tuple[int, ...]
    detail: dict


@dataclass(frozen=True)
class ConnectionPlan:
    case: str
    merged: tuple[int, ...]
    restriction: Permutation
    segments: tuple[PlanSegment, ...]


_ROTATION_LIKE = parse_permutation("(3412)")
_THREE_CLASS = {parse_permutation("(3421)"), parse_permutation("(4312)")}


def _support_tuple(t: IET) -> tuple[int, ...]:
    return tuple(i for i in range(1, t.n + 1) if t.lengths[i - 1] > 0)


def secret4_connect(p: Permutation, t: IET, s: IET) -> ConnectionPlan:
    """Plan a path of uniquely ergodic IETs between two small-support IETs.

    Both inputs must be supported on 4-tuples restricting into the class of
    (4321), and the two tuples must be accessible.  The plan is returned as
    segment descriptors: within-subspace 4-IET paths, weight transfers across
    a merged pair, or a constant-rotation-number polyline, depending on the
    permutation induced on the merged witness symbols.
    """
    if is_degenerate(p):
        raise ValueError("the ambient permutation must be non-degenerate")
    if t.perm != p or s.perm != p:
        raise ValueError("both IETs must carry the ambient permutation")
    sup_t = _support_tuple(t)
    sup_s = _support_tuple(s)
    if len(sup_t) != 4 or len(sup_s) != 4:
        raise ValueError("both IETs must be supported on exactly 4 symbols")
    witness = is_accessible_pair(p, FourTuple(sup_t), FourTuple(sup_s))
    if witness is None:
        raise ValueError(
            "support tuples %r and %r are not accessible; build a chain first" % (sup_t, sup_s)
        )
    rho = witness.restriction
    merged = witness.merged
    pair_t = tuple(sup_t[i - 1] for i in witness.pair1)
    pair_s = tuple(sup_s[i - 1] for i in witness.pair2)
    segments: list[PlanSegment] = []
    if sup_t == sup_s:
        return ConnectionPlan(
            "same-support",
            merged,
            rho,
            (
                PlanSegment(
                    "four-iet-path",
                    sup_t,
                    {"from": [str(x) for x in t.lengths.entries], "to": [str(x) for x in s.lengths.entries]},
                ),
            ),
        )
    class_of_4321 = rauzy_class(parse_permutation("(4321)")).vertices
    if len(merged) == 4 and rho in class_of_4321:
        case = "merged-in-class"
        segments = [
            PlanSegment("four-iet-path", sup_t, {"to_rotation_pair": list(pair_t)}),
            PlanSegment("four-iet-path", merged, {"from_pair": list(pair_t), "to_pair": list(pair_s)}),
            PlanSegment("four-iet-path", sup_s, {"from_rotation_pair": list(pair_s)}),
        ]
    elif len(merged) < 4 or rho == _ROTATION_LIKE:
        case = "acts-as-rotation"
        segments = [
            PlanSegment("four-iet-path", sup_t, {"to_rotation_pair": list(pair_t)}),
            PlanSegment(
                "weight-transfer",
                merged,
                {"from_pair": list(pair_t), "to_pair": list(pair_s)},
            ),
            PlanSegment("four-iet-path", sup_s, {"from_rotation_pair": list(pair_s)}),
        ]
    elif rho in _THREE_CLASS:
        case = "three-interval"
        tag = _h_alpha_tag(rho, merged, pair_t, pair_s)
        segments = [
            PlanSegment("four-iet-path", sup_t, {"to_rotation_pair": list(pair_t)}),
            PlanSegment(
                "h-alpha",
                merged,
                {
                    "case": tag,
                    "alpha_constraint": (
                        "> 1/2" if H_ALPHA_CASES[tag].needs_alpha_above_half else "< 1/2"
                    ),
                },
            ),
            PlanSegment("four-iet-path", sup_s, {"from_rotation_pair": list(pair_s)}),
        ]
    else:
        raise AssertionError("unexpected merged restriction %s" % rho)
    return ConnectionPlan(case, merged, rho, tuple(segments))


def _h_alpha_tag(rho: Permutation, merged, pair_t, pair_s) -> str:
    """Map a concrete three-interval witness onto a canonical polyline case."""
    positions_t = tuple(sorted(merged.index(x) + 1 for x in pair_t if x in merged))
    flipped = rho == parse_permutation("(4312)")
    interleaved = positions_t in ((1, 3), (2, 4))
    if interleaved:
        return "interleaved_flipped" if flipped else "interleaved"
    return "nested_flipped" if flipped else "nested"


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def path_to_csv(path: PathApproximation, dps: Optional[int] = None) -> str:
    """Render breakpoints as CSV (columns: t, l1..ln, depth_class)."""
    prec = path.metadata.get("precision_bits", 256)
    if dps is None:
        dps = int(prec * 0.30103) + 3
    n = len(path.breakpoints[0][1])
    lines = ["t," + ",".join("l%d" % i for i in range(1, n + 1)) + ",depth_class"]
    for (t, v), cls in zip(path.breakpoints, path.depth_classes):
        coords = ",".join(mpmath.nstr(x, dps, strip_zeros=False) for x in v)
        lines.append("%s,%s,%d" % (t, coords, cls))
    return "\n".join(lines) + "\n"


# Fixed barycentric projection of the 3-simplex used for all SVG output: the
# four vertices of the simplex map to these plane points.
SVG_PROJECTION = ((0.0, 0.0), (1.0, 0.0), (0.5, 0.8660254037844386), (0.5, 0.2886751345948129))


def path_to_svg(path: PathApproximation, width: int = 600, height: int = 560) -> str:
    pts = []
    for _, v in path.breakpoints:
        x = sum(float(c) * SVG_PROJECTION[i][0] for i, c in enumerate(v))
        y = sum(float(c) * SVG_PROJECTION[i][1] for i, c in enumerate(v))
        pts.append((x, y))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    pad = 0.05
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    sx = width / (x1 - x0) if x1 > x0 else 1.0
    sy = height / (y1 - y0) if y1 > y0 else 1.0
    scale = min(sx, sy)
    poly = " ".join(
        "%.3f,%.3f" % ((x - x0) * scale, height - (y - y0) * scale) for x, y in pts
    )
    meta = json.dumps({k: str(v) for k, v in path.metadata.items()})
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">\n'
        "<!-- barycentric projection %s -->\n"
        "<!-- metadata %s -->\n"
        '<polyline points="%s" fill="none" stroke="black" stroke-width="1"/>\n'
        "</svg>\n" % (width, height, SVG_PROJECTION, meta, poly)
    )
