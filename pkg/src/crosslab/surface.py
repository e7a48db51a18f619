"""Closed hyperbolic surfaces glued from copies of the (pi/4, pi/4, pi/4) triangle.

A surface is given by a gluing table pairing the 3F sides of F triangles.
Sides are numbered counterclockwise: side ``s`` runs from corner ``s`` to
corner ``s + 1 (mod 3)``. ``orient = -1`` glues the two sides with reversed
directions (the orientation-compatible choice); ``orient = +1`` keeps them
parallel and is only accepted if the surface can still be oriented.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hyperbolic import REFERENCE, Isometry, isometry_from_pairs

CORNERS_PER_VERTEX = 8

Slot = tuple[int, int]


class GluingFormatError(ValueError):
    """Malformed gluing document."""


class SurfaceValidationError(ValueError):
    """A gluing table that does not describe a smooth closed (4,4,4)-tiled surface."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GenerationError(RuntimeError):
    """The randomized generator ran out of attempts; retry with another seed."""

    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"no valid gluing found after {attempts} attempts")


@dataclass(frozen=True)
class GluingTable:
    faces: int
    # match[(f, s)] = (f2, s2, orient)
    match: dict = field(repr=False)

    def partner(self, f: int, s: int) -> tuple[int, int, int]:
        return self.match[(f, s)]

    def pairs(self) -> list[tuple[int, int, int, int, int]]:
        """Each gluing once, from its lexicographically smaller slot."""
        out = []
        for (f, s), (f2, s2, o) in sorted(self.match.items()):
            if (f, s) < (f2, s2):
                out.append((f, s, f2, s2, o))
        return out


def _table_problems(faces: int, match: dict) -> list[str]:
    problems = []
    for f in range(faces):
        for s in range(3):
            if (f, s) not in match:
                problems.append(f"unmatched slot ({f},{s})")
    for (f, s), (f2, s2, o) in sorted(match.items()):
        if (f, s) == (f2, s2):
            problems.append(f"fixed slot ({f},{s})")
            continue
        back = match.get((f2, s2))
        if back is None or back[:2] != (f, s):
            problems.append(f"slot ({f},{s}) -> ({f2},{s2}) is not an involution")
        elif back[2] != o:
            problems.append(f"slot ({f},{s}) orientation disagrees with its partner")
    return problems


def make_table(faces: int, pairs) -> GluingTable:
    """Build a table from ``(f, s, f2, s2, o)`` entries, listing each gluing once or twice."""
    match: dict = {}
    for entry in pairs:
        f, s, f2, s2, o = (int(x) for x in entry)
        if o not in (1, -1):
            raise GluingFormatError(f"slot ({f},{s}): orientation must be 1 or -1, got {o}")
        for a, b in (((f, s), (f2, s2)), ((f2, s2), (f, s))):
            if not (0 <= a[0] < faces and 0 <= a[1] < 3):
                raise GluingFormatError(f"slot {a} out of range")
            prev = match.get(a)
            if prev is not None and prev != (*b, o):
                raise GluingFormatError(f"slot ({a[0]},{a[1]}) matched twice")
            match[a] = (*b, o)
    problems = _table_problems(faces, match)
    if problems:
        raise GluingFormatError("; ".join(problems))
    return GluingTable(faces, match)


def parse_gluing(text: str) -> GluingTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GluingFormatError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "faces" not in doc or "match" not in doc:
        raise GluingFormatError('document must be an object with "faces" and "match"')
    faces = doc["faces"]
    if not isinstance(faces, int) or faces < 1:
        raise GluingFormatError(f'"faces" must be a positive integer, got {faces!r}')
    entries = doc["match"]
    for i, e in enumerate(entries):
        if not (isinstance(e, list) and len(e) == 5 and all(isinstance(x, int) for x in e)):
            raise GluingFormatError(f"match entry {i} must be five integers, got {e!r}")
    return make_table(faces, entries)


def serialize_gluing(table: GluingTable) -> str:
    rows = ",\n    ".join(json.dumps(list(p)) for p in table.pairs())
    return f'{{\n  "faces": {table.faces},\n  "match": [\n    {rows}\n  ]\n}}\n'


def load_gluing(path) -> GluingTable:
    with open(path, encoding="utf-8") as fh:
        return parse_gluing(fh.read())


# corners glued by the side pair: corner s / s+1 of f meet which corners of f2
def _corner_pairs(s: int, s2: int, o: int) -> tuple[tuple[int, int], tuple[int, int]]:
    if o == -1:
        return (s, (s2 + 1) % 3), ((s + 1) % 3, s2)
    return (s, s2), ((s + 1) % 3, (s2 + 1) % 3)


def _transition(s: int, s2: int, o: int) -> Isometry:
    """Isometry carrying the neighbour's chart onto this face's chart across side s."""
    v = REFERENCE.vertices
    a, b = v[s2], v[(s2 + 1) % 3]
    if o == -1:
        return isometry_from_pairs(a, b, v[(s + 1) % 3], v[s], reflect=False)
    return isometry_from_pairs(a, b, v[s], v[(s + 1) % 3], reflect=True)


_TRANSITIONS = {
    (s, s2, o): _transition(s, s2, o) for s in range(3) for s2 in range(3) for o in (-1, 1)
}


@dataclass(frozen=True, eq=False)
class CombinatorialSurface:
    """A validated gluing with its derived combinatorics."""

    table: GluingTable
    # orbit i lists (face, corner, exit side) in cyclic order around vertex i
    orbits: tuple
    corner_vertex: np.ndarray = field(repr=False)
    edge_of_slot: np.ndarray = field(repr=False)
    edges: tuple = field(repr=False)

    @property
    def F(self) -> int:
        return self.table.faces

    @property
    def V(self) -> int:
        return len(self.orbits)

    @property
    def E(self) -> int:
        return len(self.edges)

    @property
    def euler_characteristic(self) -> int:
        return self.V - self.E + self.F

    @property
    def genus(self) -> int:
        return 1 + self.F // 16

    @property
    def area(self) -> float:
        return self.F * REFERENCE.area

    def partner(self, f: int, s: int) -> tuple[int, int, int]:
        return self.table.match[(f, s)]

    def transition(self, f: int, s: int) -> Isometry:
        """Chart change carrying the neighbour across side s into the chart of face f."""
        f2, s2, o = self.table.match[(f, s)]
        return _TRANSITIONS[(s, s2, o)]

    @cached_property
    def neighbours(self) -> np.ndarray:
        nb = np.empty((self.F, 3), dtype=np.int64)
        for (f, s), (f2, _, _) in self.table.match.items():
            nb[f, s] = f2
        return nb

    def dual_graph(self) -> dict[int, list[int]]:
        return {f: [int(x) for x in self.neighbours[f]] for f in range(self.F)}

    @cached_property
    def corner_position(self) -> dict:
        """(face, corner) -> (orbit index, position in the orbit)."""
        pos = {}
        for i, orbit in enumerate(self.orbits):
            for j, (f, c, _) in enumerate(orbit):
                pos[(f, c)] = (i, j)
        return pos

    def surface_id(self) -> str:
        digest = hashlib.sha1(serialize_gluing(self.table).encode()).hexdigest()[:10]
        return f"F{self.F}-{digest}"


def _walk_orbits(table: GluingTable) -> list[list[tuple[int, int, int]]]:
    seen = set()
    orbits = []
    for f in range(table.faces):
        for c in range(3):
            if (f, c) in seen:
                continue
            orbit = []
            cur_f, cur_c, exit_side = f, c, c
            while (cur_f, cur_c) not in seen:
                seen.add((cur_f, cur_c))
                orbit.append((cur_f, cur_c, exit_side))
                f2, s2, o = table.match[(cur_f, exit_side)]
                (x0, y0), (x1, y1) = _corner_pairs(exit_side, s2, o)
                nxt_c = y0 if x0 == cur_c else y1
                # leave the new corner through its other side
                other = nxt_c if s2 == (nxt_c - 1) % 3 else (nxt_c - 1) % 3
                cur_f, cur_c, exit_side = f2, nxt_c, other
            orbits.append(orbit)
    return orbits


def _components(faces: int, table: GluingTable) -> int:
    parent = list(range(faces))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (f, _), (f2, _, _) in table.match.items():
        parent[find(f)] = find(f2)
    return len({find(f) for f in range(faces)})


def _orientable(table: GluingTable) -> bool:
    sign = {0: 1}
    stack = [0]
    while stack:
        f = stack.pop()
        for s in range(3):
            f2, _, o = table.match[(f, s)]
            want = sign[f] * (-o)
            if f2 not in sign:
                sign[f2] = want
                stack.append(f2)
            elif sign[f2] != want:
                return False
    return True


def validation_report(table: GluingTable) -> list[str]:
    """All violations preventing ``table`` from being a valid surface (empty if valid)."""
    problems = _table_problems(table.faces, table.match)
    if problems:
        return problems
    if table.faces % 16 != 0:
        problems.append(f"face count {table.faces} is not divisible by 16")
    comps = _components(table.faces, table)
    if comps > 1:
        problems.append(f"disconnected: {comps} components")
    if not _orientable(table):
        problems.append("non-orientable gluing")
    for i, orbit in enumerate(_walk_orbits(table)):
        if len(orbit) != CORNERS_PER_VERTEX:
            corners = ", ".join(f"({f},{c})" for f, c, _ in orbit)
            problems.append(f"cone point: vertex orbit {i} has {len(orbit)} corners [{corners}]")
    return problems


def validate(table: GluingTable) -> CombinatorialSurface:
    problems = validation_report(table)
    if problems:
        raise SurfaceValidationError(problems)
    orbits = _walk_orbits(table)
    corner_vertex = np.empty((table.faces, 3), dtype=np.int64)
    for i, orbit in enumerate(orbits):
        for f, c, _ in orbit:
            corner_vertex[f, c] = i
    edge_of_slot = np.empty((table.faces, 3), dtype=np.int64)
    edges = []
    for f, s, f2, s2, o in table.pairs():
        edge_of_slot[f, s] = edge_of_slot[f2, s2] = len(edges)
        edges.append((f, s, f2, s2, o))
    for arr in (corner_vertex, edge_of_slot):
        arr.flags.writeable = False
    surface = CombinatorialSurface(
        table=table,
        orbits=tuple(tuple(o) for o in orbits),
        corner_vertex=corner_vertex,
        edge_of_slot=edge_of_slot,
        edges=tuple(edges),
    )
    if surface.euler_characteristic != 2 - 2 * surface.genus:
        raise SurfaceValidationError(
            [f"Euler characteristic {surface.euler_characteristic} disagrees with genus {surface.genus}"]
        )
    return surface


class _PartialGluing:
    """Union-find over corners tracking how many corners each partial vertex has."""

    def __init__(self, faces: int):
        self.parent = list(range(3 * faces))
        self.size = [1] * (3 * faces)
        self.closed = [False] * (3 * faces)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def join_ok(self, x: int, y: int, pending=None) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return self.size[rx] == CORNERS_PER_VERTEX
        return self.size[rx] + self.size[ry] <= CORNERS_PER_VERTEX

    def join(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            self.closed[rx] = True
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]

    def snapshot(self):
        return list(self.parent), list(self.size), list(self.closed)

    def restore(self, snap):
        self.parent, self.size, self.closed = (list(s) for s in snap)


def _glue_ok(state: _PartialGluing, a: Slot, b: Slot) -> bool:
    (f, s), (f2, s2) = a, b
    (c0, d0), (c1, d1) = _corner_pairs(s, s2, -1)
    x0, y0, x1, y1 = 3 * f + c0, 3 * f2 + d0, 3 * f + c1, 3 * f2 + d1
    r = {z: state.find(z) for z in (x0, y0, x1, y1)}
    size = {root: state.size[root] for root in r.values()}
    # simulate both joins on the roots
    parent = {root: root for root in size}

    def find(z):
        while parent[z] != z:
            z = parent[z]
        return z

    for x, y in ((r[x0], r[y0]), (r[x1], r[y1])):
        rx, ry = find(x), find(y)
        if rx == ry:
            if size[rx] != CORNERS_PER_VERTEX:
                return False
        else:
            if size[rx] + size[ry] > CORNERS_PER_VERTEX:
                return False
            parent[ry] = rx
            size[rx] += size[ry]
    return True


def _glue(state: _PartialGluing, a: Slot, b: Slot) -> None:
    (f, s), (f2, s2) = a, b
    (c0, d0), (c1, d1) = _corner_pairs(s, s2, -1)
    state.join(3 * f + c0, 3 * f2 + d0)
    state.join(3 * f + c1, 3 * f2 + d1)


def _backtrack(faces: int, rng: random.Random, node_limit: int) -> list | None:
    """Depth-first search over side matchings, always branching on the slot with fewest options."""
    state = _PartialGluing(faces)
    pairs: list = []
    nodes = 0

    def rec(open_slots: list) -> bool:
        nonlocal nodes
        if not open_slots:
            return True
        nodes += 1
        if nodes > node_limit:
            return False
        best_slot, best = None, None
        for a in open_slots:
            cands = [b for b in open_slots if b != a and _glue_ok(state, a, b)]
            if best is None or len(cands) < len(best):
                best_slot, best = a, cands
                if len(cands) <= 1:
                    break
        rng.shuffle(best)
        for b in best:
            snap = state.snapshot()
            _glue(state, best_slot, b)
            pairs.append((*best_slot, *b, -1))
            if rec([x for x in open_slots if x != best_slot and x != b]):
                return True
            pairs.pop()
            state.restore(snap)
        return False

    slots = [(f, s) for f in range(faces) for s in range(3)]
    return pairs if rec(slots) else None


def _nullspace_mod_p(rows: list[list[int]], ncols: int, p: int) -> list[list[int]]:
    m = [[x % p for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                k = m[i][c]
                m[i] = [(x - k * y) % p for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = [0] * ncols
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = (-m[i][fc]) % p
        basis.append(v)
    return basis


def cyclic_cover(surface: CombinatorialSurface, p: int, rng: random.Random, max_tries: int = 100) -> CombinatorialSurface:
    """Connected p-sheeted cyclic cover given by a random mod-p cocycle.

    Edge shifts are drawn from the cocycles of the dual cell structure (zero
    holonomy around every vertex), so each vertex lifts to p smooth vertices.
    """
    F = surface.F
    rows = []
    for orbit in surface.orbits:
        row = [0] * surface.E
        for f, _, side in orbit:
            e = surface.edge_of_slot[f, side]
            ef, es = surface.edges[e][:2]
            row[e] += 1 if (f, side) == (ef, es) else -1
        rows.append(row)
    basis = _nullspace_mod_p(rows, surface.E, p)
    for _ in range(max_tries):
        coeffs = [rng.randrange(p) for _ in basis]
        shift = [sum(c * b[e] for c, b in zip(coeffs, basis)) % p for e in range(surface.E)]
        pairs = []
        for e, (f, s, f2, s2, o) in enumerate(surface.edges):
            for i in range(p):
                pairs.append((i * F + f, s, ((i + shift[e]) % p) * F + f2, s2, o))
        table = make_table(p * F, pairs)
        if _components(table.faces, table) == 1:
            return validate(table)
    raise GenerationError(max_tries)


def _prime_factors(m: int) -> list[int]:
    out, d = [], 2
    while m > 1:
        while m % d == 0:
            out.append(d)
            m //= d
        d += 1
    return out


def generate_surface(faces: int, seed: int, max_attempts: int = 200, node_limit: int = 2000) -> CombinatorialSurface:
    """Random valid surface with ``faces`` triangles, genus ``1 + faces/16``.

    A 16-triangle genus-2 base is found by randomized backtracking with
    restarts; larger surfaces are towers of random cyclic covers of it, one
    prime factor of ``faces/16`` at a time. Deterministic in (faces, seed).
    """
    if faces < 16 or faces % 16 != 0:
        raise ValueError(f"face count must be a positive multiple of 16, got {faces}")
    rng = random.Random(seed)
    base = None
    for attempt in range(max_attempts):
        pairs = _backtrack(16, rng, node_limit)
        if pairs is None:
            continue
        table = make_table(16, pairs)
        if not validation_report(table):
            base = validate(table)
            break
    if base is None:
        raise GenerationError(max_attempts)
    surface = base
    for p in _prime_factors(faces // 16):
        surface = cyclic_cover(surface, p, rng)
    return surface


SHIPPED = {2: "genus2.json", 3: "genus3.json", 5: "genus5.json"}


def shipped_surface(genus: int) -> CombinatorialSurface:
    """One of the example surfaces packaged with crosslab (genus 2, 3 or 5)."""
    from importlib.resources import files

    name = SHIPPED.get(genus)
    if name is None:
        raise ValueError(f"no shipped surface of genus {genus}; choose from {sorted(SHIPPED)}")
    return validate(parse_gluing(files("crosslab").joinpath("data", name).read_text(encoding="utf-8")))
