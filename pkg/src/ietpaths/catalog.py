"""Building-block catalogs: labeled composite induction paths between the
permutations of the 4-symbol class, and blocks wired by left/right successor
edges.

A catalog is data, not code.  The shipped default lives in
``data/default_catalog.txt``; any document in the same format is accepted as
long as it survives :func:`verify_catalog`, which machine-checks the five
structural properties the path construction relies on:

* Transitivity  - every permutation in the class of (4321) carries a block,
  with a declared fail-plane side for its left endpoint;
* Completeness  - every block has both a left and a right successor;
* Combining Loops - the matrix of every minimal constant-direction loop is
  combining;
* Isolated Idle - loops with an idle column are followed, along every leaving
  3-block sequence, by matrices whose columns all have two nonzero entries;
* Almost Positivity - every direction-swapping path reaches a positive,
  almost positive or weakly positive prefix within a bounded number of
  non-loop steps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Literal, Optional, Sequence

from .conematrix import (
    ConeMatrix,
    classify_combining,
    is_almost_positive,
    is_weakly_positive,
)
from .iet import step_matrix
from .permutations import (
    Permutation,
    Step,
    STEP_A,
    STEP_B,
    parse_permutation,
    rauzy_class,
    rauzy_move,
)

Direction = Literal["L", "R"]
LEFT: Direction = "L"
RIGHT: Direction = "R"


class CatalogError(ValueError):
    """Malformed or inconsistent catalog document."""


@dataclass(frozen=True)
class CompositePath:
    """A labeled path in the Rauzy diagram with its resolved step types."""

    label: str
    vertices: tuple[Permutation, ...]
    steps: tuple[Step, ...]

    @property
    def start(self) -> Permutation:
        return self.vertices[0]

    @property
    def end(self) -> Permutation:
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.steps)


def resolve_composite_path(
    vertices: Sequence[Permutation], label: str = "", annotations: Optional[Sequence[Step]] = None
) -> CompositePath:
    """Resolve the step type of every arrow in a vertex list.

    For each consecutive pair both move types are tried; exactly one must
    reproduce the target.  If both do, the document has to disambiguate via
    explicit step annotations, and we refuse to guess.
    """
    if len(vertices) == 0:
        raise CatalogError("empty vertex list for path %r" % label)
    steps: list[Step] = []
    for i, (u, v) in enumerate(zip(vertices, vertices[1:])):
        matches = [s for s in (STEP_A, STEP_B) if rauzy_move(u, s) == v]
        if annotations is not None:
            s = annotations[i]
            if s not in matches:
                raise CatalogError(
                    "path %r: annotated step %r does not map %s to %s" % (label, s, u, v)
                )
            steps.append(s)
        elif len(matches) == 1:
            steps.append(matches[0])
        elif not matches:
            raise CatalogError("path %r: %s -> %s is not an induction move" % (label, u, v))
        else:
            raise CatalogError(
                "path %r: both moves map %s to %s; add a step annotation" % (label, u, v)
            )
    return CompositePath(label, tuple(vertices), tuple(steps))


def path_matrix(path: CompositePath) -> ConeMatrix:
    """Ordered product of the single-step matrices along the path."""
    n = path.start.n
    m = ConeMatrix.identity(n)
    for vertex, step in zip(path.vertices, path.steps):
        m = m * step_matrix(vertex, step)
    return m


def concatenate_paths(paths: Sequence[CompositePath], label: str = "") -> CompositePath:
    vertices: list[Permutation] = list(paths[0].vertices)
    steps: list[Step] = list(paths[0].steps)
    for p in paths[1:]:
        if p.start != vertices[-1]:
            raise CatalogError(
                "path concatenation mismatch: %s ends at %s but %s starts at %s"
                % (label, vertices[-1], p.label, p.start)
            )
        vertices.extend(p.vertices[1:])
        steps.extend(p.steps)
    return CompositePath(label or "+".join(p.label for p in paths), tuple(vertices), tuple(steps))


@dataclass(frozen=True)
class BlockEdge:
    """A left or right successor edge: labeled path pieces plus the target id."""

    labels: tuple[str, ...]
    target: str


@dataclass(frozen=True)
class BuildingBlock:
    id: str
    perm: Permutation
    left: BlockEdge
    right: BlockEdge
    fail_side: Step  # side of the fail plane the left endpoint lies on


@dataclass(frozen=True)
class Catalog:
    blocks: dict[str, BuildingBlock]
    composite_paths: dict[str, CompositePath]
    source_text: str = field(repr=False, default="")

    def edge_path(self, block_id: str, direction: Direction) -> CompositePath:
        block = self.blocks[block_id]
        edge = block.left if direction == LEFT else block.right
        return concatenate_paths(
            [self.composite_paths[lbl] for lbl in edge.labels],
            label="%s.%s" % (block_id, direction),
        )

    def edge_matrix(self, block_id: str, direction: Direction) -> ConeMatrix:
        return path_matrix(self.edge_path(block_id, direction))

    def successor(self, block_id: str, direction: Direction) -> str:
        block = self.blocks[block_id]
        return (block.left if direction == LEFT else block.right).target

    def content_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Document format
# ---------------------------------------------------------------------------


def _parse_path_line(line: str) -> tuple[str, CompositePath]:
    name, _, rest = line.partition("=")
    name = name.strip()
    if not name:
        raise CatalogError("path line without a label: %r" % line)
    body, _, annot = rest.partition("|")
    vertices = [parse_permutation(tok) for tok in body.split()]
    annotations: Optional[list[Step]] = None
    annot = annot.strip()
    if annot:
        if not annot.startswith("steps="):
            raise CatalogError("unknown path annotation %r" % annot)
        annotations = list(annot[len("steps=") :].strip())  # type: ignore[arg-type]
        if len(annotations) != len(vertices) - 1:
            raise CatalogError("path %r: %d annotations for %d arrows" % (name, len(annotations), len(vertices) - 1))
    return name, resolve_composite_path(vertices, name, annotations)


def _parse_edge(token: str, block_id: str, side: str) -> BlockEdge:
    spec, arrow, target = token.partition("->")
    if not arrow:
        raise CatalogError("block %s: %s edge %r lacks '->target'" % (block_id, side, token))
    labels = tuple(lbl.strip() for lbl in spec.split(",") if lbl.strip())
    if not labels:
        raise CatalogError("block %s: %s edge has no path labels" % (block_id, side))
    return BlockEdge(labels, target.strip())


def _parse_block_line(line: str) -> BuildingBlock:
    block_id, _, rest = line.partition("=")
    block_id = block_id.strip()
    fields: dict[str, str] = {}
    for part in rest.split("|"):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition(" ")
        fields[key.strip()] = value.strip()
    missing = {"perm", "left", "right", "fail_side"} - set(fields)
    if missing:
        raise CatalogError("block %s: missing fields %s" % (block_id, sorted(missing)))
    perm = parse_permutation(fields["perm"])
    left = _parse_edge(fields["left"], block_id, "left")
    right = _parse_edge(fields["right"], block_id, "right")
    fail_side = fields["fail_side"]
    if fail_side not in (STEP_A, STEP_B):
        raise CatalogError("block %s: fail_side must be 'a' or 'b'" % block_id)
    return BuildingBlock(block_id, perm, left, right, fail_side)


def load_catalog(text: str) -> Catalog:
    """Parse and validate a catalog document.

    Validation covers: every path resolves, every referenced label exists,
    every successor exists, edge pieces chain up, class membership of every
    block permutation, and the orientation convention (the left edge starts
    with the step type of ``fail_side``, the right edge with the opposite).
    """
    paths: dict[str, CompositePath] = {}
    blocks: dict[str, BuildingBlock] = {}
    section = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").strip().lower()
            if section not in ("paths", "blocks"):
                raise CatalogError("unknown section %r" % section)
            continue
        if section == "paths":
            name, path = _parse_path_line(line)
            if name in paths:
                raise CatalogError("duplicate path label %r" % name)
            paths[name] = path
        elif section == "blocks":
            block = _parse_block_line(line)
            if block.id in blocks:
                raise CatalogError("duplicate block id %r" % block.id)
            blocks[block.id] = block
        else:
            raise CatalogError("content outside of a section: %r" % line)
    if not blocks:
        raise CatalogError("catalog has no blocks")
    catalog = Catalog(blocks, paths, source_text=text)
    class_perms = rauzy_class(parse_permutation("(4321)")).vertices
    for block in blocks.values():
        if block.perm not in class_perms:
            raise CatalogError("block %s: permutation %s outside the class of (4321)" % (block.id, block.perm))
        for side, edge, expected_first in (
            ("left", block.left, block.fail_side),
            ("right", block.right, STEP_B if block.fail_side == STEP_A else STEP_A),
        ):
            for lbl in edge.labels:
                if lbl not in paths:
                    raise CatalogError("block %s: unknown path label %r" % (block.id, lbl))
            if edge.target not in blocks:
                raise CatalogError("block %s: dangling %s successor %r" % (block.id, side, edge.target))
            path = catalog.edge_path(block.id, LEFT if side == "left" else RIGHT)
            if path.start != block.perm:
                raise CatalogError(
                    "block %s: %s edge starts at %s, not at the block permutation %s"
                    % (block.id, side, path.start, block.perm)
                )
            if path.end != blocks[edge.target].perm:
                raise CatalogError(
                    "block %s: %s edge ends at %s but target %s sits at %s"
                    % (block.id, side, path.end, edge.target, blocks[edge.target].perm)
                )
            if path.steps and path.steps[0] != expected_first:
                raise CatalogError(
                    "block %s: %s edge starts with step %r, expected %r per fail_side"
                    % (block.id, side, path.steps[0], expected_first)
                )
            if not path.steps:
                raise CatalogError("block %s: %s edge is an empty path" % (block.id, side))
    return catalog


def load_catalog_file(path) -> Catalog:
    with open(path, "r", encoding="utf-8") as fh:
        return load_catalog(fh.read())


def default_catalog() -> Catalog:
    """The shipped catalog (verified by the test suite)."""
    text = resources.files("ietpaths").joinpath("data/default_catalog.txt").read_text()
    return load_catalog(text)


# ---------------------------------------------------------------------------
# Loops
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockSequence:
    """A walk in the block graph with its accumulated matrix."""

    blocks: tuple[str, ...]
    directions: tuple[Direction, ...]
    matrix: ConeMatrix


def sequence_from_walk(catalog: Catalog, start: str, directions: Sequence[Direction]) -> BlockSequence:
    blocks = [start]
    n = catalog.blocks[start].perm.n
    m = ConeMatrix.identity(n)
    cur = start
    for d in directions:
        m = m * catalog.edge_matrix(cur, d)
        cur = catalog.successor(cur, d)
        blocks.append(cur)
    return BlockSequence(tuple(blocks), tuple(directions), m)


def enumerate_minimal_depth0_loops(catalog: Catalog) -> list[BlockSequence]:
    """All minimal constant-direction loops, via cycle detection on the left-
    and right-successor functional graphs.

    Each cycle is reported once, rotated to start at its lexicographically
    smallest block id.
    """
    out: list[BlockSequence] = []
    seen_cycles: set[tuple[Direction, tuple[str, ...]]] = set()
    for direction in (LEFT, RIGHT):
        for start in catalog.blocks:
            trail: dict[str, int] = {}
            order: list[str] = []
            cur = start
            while cur not in trail:
                trail[cur] = len(order)
                order.append(cur)
                cur = catalog.successor(cur, direction)
            cycle = order[trail[cur] :]
            k = min(range(len(cycle)), key=lambda i: cycle[i])
            rotated = tuple(cycle[k:] + cycle[:k])
            if (direction, rotated) in seen_cycles:
                continue
            seen_cycles.add((direction, rotated))
            out.append(sequence_from_walk(catalog, rotated[0], [direction] * len(rotated)))
    out.sort(key=lambda s: (s.directions[0], s.blocks))
    return out


def _loop_membership(loops: Iterable[BlockSequence]) -> dict[tuple[str, Direction], tuple[str, ...]]:
    """Map (block, direction) to the minimal loop it belongs to, if any."""
    member: dict[tuple[str, Direction], tuple[str, ...]] = {}
    for loop in loops:
        direction = loop.directions[0]
        cyc = loop.blocks[:-1]
        for b in cyc:
            member[(b, direction)] = cyc
    return member


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    certificates: list
    failures: list


@dataclass(frozen=True)
class VerificationReport:
    results: tuple[PropertyResult, ...]
    depth_bound: int
    catalog_hash: str

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_json(self) -> str:
        return json.dumps(
            {
                "catalog_hash": self.catalog_hash,
                "depth_bound": self.depth_bound,
                "passed": self.passed,
                "properties": [
                    {
                        "name": r.name,
                        "passed": r.passed,
                        "certificates": r.certificates,
                        "failures": r.failures,
                    }
                    for r in self.results
                ],
            },
            indent=1,
        )


def _verify_transitivity(catalog: Catalog) -> PropertyResult:
    class_perms = rauzy_class(parse_permutation("(4321)")).vertices
    coverage: dict[str, list[str]] = {str(p): [] for p in sorted(class_perms, key=str)}
    for block in catalog.blocks.values():
        coverage[str(block.perm)].append(block.id)
    failures = [p for p, ids in coverage.items() if not ids]
    certs = [
        {"permutation": p, "blocks": sorted(ids), "fail_sides": [catalog.blocks[i].fail_side for i in sorted(ids)]}
        for p, ids in coverage.items()
    ]
    return PropertyResult("transitivity", not failures, certs, failures)


def _verify_completeness(catalog: Catalog) -> PropertyResult:
    certs = []
    failures = []
    for block in catalog.blocks.values():
        for direction in (LEFT, RIGHT):
            target = catalog.successor(block.id, direction)
            if target not in catalog.blocks:
                failures.append({"block": block.id, "direction": direction, "target": target})
            else:
                certs.append({"block": block.id, "direction": direction, "target": target})
    return PropertyResult("completeness", not failures, certs, failures)


def _verify_combining_loops(catalog: Catalog) -> PropertyResult:
    certs = []
    failures = []
    for loop in enumerate_minimal_depth0_loops(catalog):
        cls = classify_combining(loop.matrix)
        record = {
            "loop": list(loop.blocks),
            "direction": loop.directions[0],
            "matrix": [list(r) for r in loop.matrix.rows],
            "active": list(cls.active),
            "passive": list(cls.passive),
            "idle": cls.idle,
        }
        if cls.combining:
            certs.append(record)
        else:
            record["reason"] = cls.failure_reason
            failures.append(record)
    return PropertyResult("combining-loops", not failures, certs, failures)


def _leaving_sequences(catalog: Catalog, cycle: tuple[str, ...], direction: Direction):
    """3-block continuations of the loop that neither start repeating it nor
    are an initial piece of it."""
    last = cycle[-1]
    loop_edges = []
    cur = last
    for i in range(3):
        nxt_loop = catalog.successor(cur, direction)
        loop_edges.append((cur, direction))
        cur = nxt_loop
    sequences = []
    for d1 in (LEFT, RIGHT):
        b1 = catalog.successor(last, d1)
        for d2 in (LEFT, RIGHT):
            b2 = catalog.successor(b1, d2)
            for d3 in (LEFT, RIGHT):
                b3 = catalog.successor(b2, d3)
                dirs = (d1, d2, d3)
                n = min(len(cycle), 3)
                if all(d == direction for d in dirs[:n]):
                    continue  # repeats the loop (or is contained in it)
                sequences.append(((b1, b2, b3), dirs))
    return sequences


def _verify_isolated_idle(catalog: Catalog) -> PropertyResult:
    certs = []
    failures = []
    for loop in enumerate_minimal_depth0_loops(catalog):
        direction = loop.directions[0]
        cycle = loop.blocks[:-1]
        for rot in range(len(cycle)):
            rotated = cycle[rot:] + cycle[:rot]
            seq = sequence_from_walk(catalog, rotated[0], [direction] * len(rotated))
            cls = classify_combining(seq.matrix)
            if not cls.combining or cls.idle is None:
                continue
            for (b1, b2, b3), dirs in _leaving_sequences(catalog, rotated, direction):
                tail = sequence_from_walk(catalog, rotated[0], [direction] * len(rotated) + list(dirs))
                product = tail.matrix
                cols_ok = all(
                    sum(1 for e in product.column(j) if e > 0) >= 2
                    for j in range(1, product.n + 1)
                )
                record = {
                    "loop": list(rotated),
                    "idle_column": cls.idle,
                    "leaving": [b1, b2, b3],
                    "directions": list(dirs),
                }
                if cols_ok:
                    certs.append(record)
                else:
                    record["matrix"] = [list(r) for r in product.rows]
                    failures.append(record)
    return PropertyResult("isolated-idle", not failures, certs, failures)


def _certificate_kind(m: ConeMatrix) -> Optional[str]:
    if m.is_positive():
        return "positive"
    if is_almost_positive(m).holds:
        return "almost-positive"
    if is_weakly_positive(m):
        return "weakly-positive"
    return None


def _verify_almost_positivity(catalog: Catalog, depth_bound: int, loop_cap: int = 2) -> PropertyResult:
    """Bounded certification search.

    Walks the block graph from every block.  The depth of a branch counts
    only direction-swapping (non-loop) edges; riding a minimal loop is capped
    at ``loop_cap`` full traversals, justified by the positive diagonals of
    all loop matrices (extra traversals only enlarge the support of the
    product, so they cannot destroy a positivity certificate).  A branch is
    certified once its accumulated matrix is positive, almost positive or
    weakly positive; weak positivity suffices because a weakly positive
    prefix absorbs any later almost or weakly positive factor into full
    positivity.
    """
    loops = enumerate_minimal_depth0_loops(catalog)
    member = _loop_membership(loops)
    diag_failures = []
    for loop in loops:
        if not all(loop.matrix.rows[i][i] > 0 for i in range(loop.matrix.n)):
            diag_failures.append({"loop": list(loop.blocks), "reason": "loop matrix diagonal not positive"})
    certs = []
    failures = list(diag_failures)
    n = next(iter(catalog.blocks.values())).perm.n
    for start in sorted(catalog.blocks):
        max_depth = 0
        branch_count = 0
        stack = [(start, ConeMatrix.identity(n), 0, None, 0)]
        bad = []
        while stack:
            block, m, depth, loop_id, loop_edges = stack.pop()
            kind = _certificate_kind(m)
            if kind is not None:
                branch_count += 1
                max_depth = max(max_depth, depth)
                continue
            if depth >= depth_bound:
                bad.append(block)
                continue
            for direction in (LEFT, RIGHT):
                target = catalog.successor(block, direction)
                key = member.get((block, direction))
                in_loop = key is not None and target in key
                edge_m = m * catalog.edge_matrix(block, direction)
                if in_loop:
                    count = loop_edges + 1 if (direction, key) == loop_id else 1
                    if count > loop_cap * len(key):
                        continue
                    stack.append((target, edge_m, depth, (direction, key), count))
                else:
                    stack.append((target, edge_m, depth + 1, None, 0))
        record = {"start": start, "certified_branches": branch_count, "max_depth_needed": max_depth}
        if bad:
            record["uncertified_at"] = sorted(set(bad))
            failures.append(record)
        else:
            certs.append(record)
    return PropertyResult("almost-positivity", not failures, certs, failures)


def verify_catalog(catalog: Catalog, depth_bound: int = 8) -> VerificationReport:
    """Run the five structural property checks and collect certificates."""
    results = (
        _verify_transitivity(catalog),
        _verify_completeness(catalog),
        _verify_combining_loops(catalog),
        _verify_isolated_idle(catalog),
        _verify_almost_positivity(catalog, depth_bound),
    )
    return VerificationReport(results, depth_bound, catalog.content_hash())
