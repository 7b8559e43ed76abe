"""Clopen-set and castle combinatorics over odometer chains.

Clopen sets are unions of cylinder atoms at a chosen depth, encoded as
integers in mixed radix over the coset rectangle (most significant
coordinate first, so code order is lexicographic order of
representatives).  Measures are exact fractions.  Castles are families of
disjoint equal-measure levels organized into towers, optionally carrying
an internal level map given atom-by-atom as integer displacement vectors.

All "choose a clopen set" operations pick lexicographically first atoms,
so every construction here is deterministic and regression-testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product

from .odometer import OdometerChain, TruncatedPoint
from .speedup import Cone


class CastleError(ValueError):
    pass


class MeasureTooLarge(CastleError):
    pass


class MeasureMismatch(CastleError):
    pass


class EmptyConeCoset(CastleError):
    pass


class SharedColumn(CastleError):
    pass


class NotAPartition(CastleError):
    pass


class ValueGroupMismatch(CastleError):
    pass


class DepthExhausted(CastleError):
    pass


# ---------------------------------------------------------------- atom spaces

class AtomSpace:
    """Encoding of depth-`depth` cylinder atoms of a chain as integers."""

    def __init__(self, chain: OdometerChain, depth: int):
        self.chain = chain
        self.depth = depth
        self.system = chain.system(depth)
        self.rect = self.system.rectangle
        self.size = chain.index(depth)
        strides = [1] * len(self.rect)
        for i in reversed(range(len(self.rect) - 1)):
            strides[i] = strides[i + 1] * self.rect[i + 1]
        self.strides = tuple(strides)
        self._diagonal = chain.stage(depth).is_diagonal()

    def encode(self, rep) -> int:
        return sum(r * s for r, s in zip(rep, self.strides))

    def decode(self, code: int) -> tuple[int, ...]:
        out = []
        for s in self.strides:
            out.append(code // s)
            code %= s
        return tuple(out)

    def encode_vector(self, vector) -> int:
        """Atom of the orbit point reached from 0 by an integer vector."""
        return self.encode(self.system.reduce(vector))

    def translate(self, code: int, vector) -> int:
        rep = self.decode(code)
        if self._diagonal:
            return sum(((r + v) % m) * s for r, v, m, s in zip(rep, vector, self.rect, self.strides))
        return self.encode(self.system.reduce(tuple(a + b for a, b in zip(rep, vector))))

    def fibers(self, code: int, finer: "AtomSpace") -> list[int]:
        """Atom codes at the finer depth refining this atom."""
        assert finer.chain is self.chain and finer.depth >= self.depth
        if self._diagonal and finer._diagonal:
            rep = self.decode(code)
            ranges = [
                range(r, finer.rect[i], self.rect[i]) for i, r in enumerate(rep)
            ]
            return [finer.encode(t) for t in iter_product(*ranges)]
        out = []
        for c in range(finer.size):
            if self.encode(self.system.reduce(finer.decode(c))) == code:
                out.append(c)
        return out

    def refine_set(self, codes, finer: "AtomSpace") -> frozenset[int]:
        if finer.depth == self.depth:
            return frozenset(codes)
        out = set()
        for c in codes:
            out.update(self.fibers(c, finer))
        return frozenset(out)


# ---------------------------------------------------------------- clopen sets

@dataclass(frozen=True)
class ClopenSet:
    """Union of cylinder atoms at a fixed depth of one chain."""

    chain: OdometerChain
    depth: int
    atoms: frozenset[int]

    @staticmethod
    def from_reps(chain: OdometerChain, depth: int, reps) -> "ClopenSet":
        space = AtomSpace(chain, depth)
        return ClopenSet(chain, depth, frozenset(space.encode(r) for r in reps))

    @staticmethod
    def cylinder(chain: OdometerChain, depth: int, vector, at_depth: int | None = None) -> "ClopenSet":
        """The depth-`depth` cylinder through the orbit point of `vector`,
        expressed at a possibly finer working depth."""
        at_depth = depth if at_depth is None else at_depth
        coarse = AtomSpace(chain, depth)
        fine = AtomSpace(chain, at_depth)
        return ClopenSet(chain, at_depth, frozenset(coarse.fibers(coarse.encode_vector(vector), fine)))

    @property
    def space(self) -> AtomSpace:
        return AtomSpace(self.chain, self.depth)

    @property
    def measure(self) -> Fraction:
        return Fraction(len(self.atoms), self.chain.index(self.depth))

    def at_depth(self, depth: int) -> "ClopenSet":
        if depth == self.depth:
            return self
        if depth < self.depth:
            raise CastleError("clopen sets only re-express at finer depths")
        coarse = AtomSpace(self.chain, self.depth)
        fine = AtomSpace(self.chain, depth)
        return ClopenSet(self.chain, depth, coarse.refine_set(self.atoms, fine))

    def reps(self):
        space = self.space
        return [space.decode(c) for c in sorted(self.atoms)]

    def is_disjoint(self, other: "ClopenSet") -> bool:
        a, b = align(self, other)
        return not (a.atoms & b.atoms)

    def union(self, other: "ClopenSet") -> "ClopenSet":
        a, b = align(self, other)
        return ClopenSet(a.chain, a.depth, a.atoms | b.atoms)

    def difference(self, other: "ClopenSet") -> "ClopenSet":
        a, b = align(self, other)
        return ClopenSet(a.chain, a.depth, a.atoms - b.atoms)

    def intersect(self, other: "ClopenSet") -> "ClopenSet":
        a, b = align(self, other)
        return ClopenSet(a.chain, a.depth, a.atoms & b.atoms)

    def contains_point(self, vector) -> bool:
        return self.space.encode_vector(vector) in self.atoms


def align(a: ClopenSet, b: ClopenSet) -> tuple[ClopenSet, ClopenSet]:
    if a.chain is not b.chain:
        raise CastleError("clopen sets live over different chains")
    depth = max(a.depth, b.depth)
    return a.at_depth(depth), b.at_depth(depth)


# ---------------------------------------------------------------- measure transport

def equal_measure_subset(a: ClopenSet, b: ClopenSet, must_include: int | None = None) -> ClopenSet:
    """Subset of b with the measure of a: lexicographically first atoms.

    `must_include` (an atom code at the common depth) is taken first when
    given; the callers use it to keep a designated point inside the chosen
    set."""
    if not a.is_disjoint(b):
        raise CastleError("the reference and target sets must be disjoint")
    aa, bb = align(a, b)
    if aa.measure > bb.measure:
        raise MeasureTooLarge(f"reference measure {aa.measure} exceeds target {bb.measure}")
    need = len(aa.atoms)
    chosen: list[int] = []
    if must_include is not None:
        if must_include not in bb.atoms:
            raise CastleError("the atom to include is not in the target set")
        chosen.append(must_include)
    for c in sorted(bb.atoms):
        if len(chosen) >= need:
            break
        if c != must_include:
            chosen.append(c)
    return ClopenSet(bb.chain, bb.depth, frozenset(chosen[:need]))


def matched_partition(a: ClopenSet, b: ClopenSet, parts) -> list[ClopenSet]:
    """Partition of b matching the measures of a partition of a (greedy)."""
    aa, bb = align(a, b)
    if aa.measure != bb.measure:
        raise MeasureMismatch(f"measures differ: {aa.measure} vs {bb.measure}")
    depth = max([bb.depth] + [p.depth for p in parts])
    union = frozenset()
    sizes = []
    for p in parts:
        p = p.at_depth(depth)
        if p.atoms & union:
            raise NotAPartition("parts overlap")
        union |= p.atoms
        sizes.append(len(p.atoms))
    if union != aa.at_depth(depth).atoms:
        raise NotAPartition("parts do not cover the reference set")
    pool = sorted(bb.at_depth(depth).atoms)
    out = []
    start = 0
    for s in sizes:
        out.append(ClopenSet(bb.chain, depth, frozenset(pool[start : start + s])))
        start += s
    return out


# ---------------------------------------------------------------- cone transfer

def _is_inclusive_quadrant(cone: Cone) -> bool:
    if cone.ray is not None:
        return False
    normals = {tuple(n) for n, strict in cone.facets if not strict}
    if len(normals) != len(cone.facets):
        return False
    expected = {tuple(Fraction(int(i == j)) for j in range(cone.dim)) for i in range(cone.dim)}
    return normals == expected


def minimal_cone_vector(
    cone: Cone, target_rep, source_rep, lattice, second: bool = False, search_bound: int = 128
):
    """Least cone member congruent to target - source mod the lattice.

    Ordering is (l1 norm, lexicographic).  With `second`, the next one in
    that order; it induces the same atom map because the two vectors are
    congruent, which is what the pointwise-avoidance callers rely on.
    Raises EmptyConeCoset when no member shows up within the coefficient
    search bound (which cannot happen for cones with interior).
    """
    base = tuple(t - s for t, s in zip(target_rep, source_rep))
    dim = len(base)
    if _is_inclusive_quadrant(cone) and lattice.is_diagonal():
        diag = lattice.diag
        least = tuple(b % m for b, m in zip(base, diag))
        if all(x == 0 for x in least):
            least = min(
                (tuple(m if i == k else 0 for i in range(dim)) for k, m in enumerate(diag)),
                key=lambda v: (sum(v), v),
            )
        if not second:
            return least
        bumps = [tuple(least[i] + (m if i == k else 0) for i in range(dim)) for k, m in enumerate(diag)]
        return min(bumps, key=lambda v: (sum(abs(x) for x in v), v))
    cols = [lattice.column(j) for j in range(dim)]
    diag = lattice.diag
    want = 2 if second else 1

    def scan(radius):
        hits = []
        for coeffs in iter_product(range(-radius, radius + 1), repeat=dim):
            v = tuple(
                b + sum(c * col[i] for c, col in zip(coeffs, cols)) for i, b in enumerate(base)
            )
            if cone.contains(v):
                hits.append((sum(abs(x) for x in v), v))
        hits.sort()
        return hits

    radius = 2
    hits = []
    while radius <= search_bound:
        hits = scan(radius)
        if len(hits) >= want:
            break
        radius *= 4
    if len(hits) < want:
        raise EmptyConeCoset(f"no cone member found in the coset of {base}")
    # widen once so no smaller candidate can hide outside the first box:
    # any coefficient beyond the bound forces an l1 norm above the current one
    bound_l1 = hits[want - 1][0]
    reach = bound_l1 + sum(abs(b) for b in base)
    safe = 1
    for i in reversed(range(dim)):
        safe = max(safe, reach // diag[i] + safe)
    if safe > radius:
        hits = scan(min(safe, search_bound))
        if len(hits) < want:
            raise EmptyConeCoset(f"no cone member found in the coset of {base}")
    return hits[want - 1][1]


def cone_transfer_map(
    a: ClopenSet, b: ClopenSet, cone: Cone, avoid: tuple | None = None
) -> list[tuple[ClopenSet, tuple[int, ...]]]:
    """Piecewise translation carrying a onto b with cone displacements.

    Atoms are paired in lexicographic order and each pair gets the least
    cone vector in its congruence class.  `avoid` is a pair of atom codes
    (point_a, point_b) at the common depth: the piece containing point_a
    is arranged not to send it onto point_b, by re-pairing when possible
    and by the second-least vector otherwise.
    """
    aa, bb = align(a, b)
    if not aa.is_disjoint(bb):
        raise CastleError("transfer endpoints must be disjoint")
    if aa.measure != bb.measure:
        raise MeasureMismatch(f"measures differ: {aa.measure} vs {bb.measure}")
    space = aa.space
    lattice = aa.chain.stage(aa.depth)
    src = sorted(aa.atoms)
    dst = sorted(bb.atoms)
    if avoid is not None and avoid[0] in aa.atoms and len(src) > 1:
        # pair the designated source atom away from the designated target
        i = src.index(avoid[0])
        if dst[i] == avoid[1]:
            j = (i + 1) % len(dst)
            dst[i], dst[j] = dst[j], dst[i]
    pieces = []
    for s, d in zip(src, dst):
        vec = minimal_cone_vector(cone, space.decode(d), space.decode(s), lattice)
        if avoid is not None and s == avoid[0] and space.translate(s, vec) == avoid[1] and d == avoid[1]:
            vec = minimal_cone_vector(cone, space.decode(d), space.decode(s), lattice, second=True)
        pieces.append((ClopenSet(aa.chain, aa.depth, frozenset([s])), vec))
    return pieces


# ---------------------------------------------------------------- partial speedups

@dataclass(frozen=True)
class PartialSpeedup:
    """Piecewise translation: on each domain piece the map adds one vector.

    Valid when the domains are pairwise disjoint, the images are pairwise
    disjoint (the map is injective), and every vector lies in the session
    cone when one is given.
    """

    pieces: tuple[tuple[ClopenSet, tuple[int, ...]], ...]

    @staticmethod
    def from_pieces(pieces) -> "PartialSpeedup":
        return PartialSpeedup(tuple((p, tuple(v)) for p, v in pieces))

    def domain(self) -> ClopenSet:
        out = self.pieces[0][0]
        for p, _ in self.pieces[1:]:
            out = out.union(p)
        return out

    def image(self) -> ClopenSet:
        parts = []
        for p, vec in self.pieces:
            space = p.space
            parts.append(ClopenSet(p.chain, p.depth, frozenset(space.translate(c, vec) for c in p.atoms)))
        out = parts[0]
        for p in parts[1:]:
            out = out.union(p)
        return out

    def check(self, cone: Cone | None = None) -> bool:
        if cone is not None and any(not cone.contains(vec) for _, vec in self.pieces):
            return False
        depth = max(p.depth for p, _ in self.pieces)
        piece_atoms = sum(len(p.at_depth(depth).atoms) for p, _ in self.pieces)
        dom = self.domain().at_depth(depth)
        img = self.image().at_depth(depth)
        # unions lose atoms exactly when pieces (or their images) overlap
        return len(dom.atoms) == piece_atoms and len(img.atoms) == piece_atoms


@dataclass
class Tower:
    levels: list[frozenset[int]]

    @property
    def height(self) -> int:
        return len(self.levels)


@dataclass
class Castle:
    """Towers of equal-height levels with an optional internal level map.

    `steps` maps atom code -> displacement vector; it must send the atoms
    of each non-top level onto the next level up within the same tower.
    """

    chain: OdometerChain
    depth: int
    towers: list[Tower]
    steps: dict[int, tuple[int, ...]] | None = None

    @property
    def space(self) -> AtomSpace:
        return AtomSpace(self.chain, self.depth)

    def level_set(self, alpha: int, v: int) -> ClopenSet:
        return ClopenSet(self.chain, self.depth, self.towers[alpha].levels[v])

    def apply_steps(self, atoms: frozenset[int]) -> frozenset[int]:
        if self.steps is None:
            raise CastleError("castle has no level map")
        space = self.space
        return frozenset(space.translate(c, self.steps[c]) for c in atoms)

    def climb(self, atom: int, count: int) -> int:
        space = self.space
        for _ in range(count):
            atom = space.translate(atom, self.steps[atom])
        return atom

    def descend(self, atom: int, tower: int, level: int) -> int:
        """Pull an atom at (tower, level) back to the tower base."""
        space = self.space
        for v in range(level, 0, -1):
            prev = self.towers[tower].levels[v - 1]
            for c in prev:
                if space.translate(c, self.steps[c]) == atom:
                    atom = c
                    break
            else:
                raise CastleError("level map does not reach the atom")
        return atom

    def locate(self, atom: int) -> tuple[int, int]:
        for alpha, tower in enumerate(self.towers):
            for v, level in enumerate(tower.levels):
                if atom in level:
                    return alpha, v
        raise CastleError("atom not in the castle")

    def position_map(self) -> dict[int, tuple[int, int]]:
        out = {}
        for alpha, tower in enumerate(self.towers):
            for v, level in enumerate(tower.levels):
                for c in level:
                    out[c] = (alpha, v)
        return out


def castle_refinement_over(castle: Castle, base_partitions) -> Castle:
    """Split each tower over a clopen partition of its base.

    `base_partitions[alpha]` is a list of disjoint atom frozensets whose
    union is tower alpha's base; each part spawns a tower by climbing the
    level map."""
    if castle.steps is None:
        raise CastleError("refinement needs the castle's level map")
    new_towers = []
    for alpha, tower in enumerate(castle.towers):
        parts = base_partitions[alpha]
        union = set()
        for p in parts:
            if p & union:
                raise NotAPartition("base parts overlap")
            union |= p
        if union != set(tower.levels[0]):
            raise NotAPartition("base parts do not cover the base")
        for part in parts:
            if not part:
                continue
            levels = [frozenset(part)]
            for _ in range(tower.height - 1):
                levels.append(castle.apply_steps(levels[-1]))
            new_towers.append(Tower(levels))
    return Castle(castle.chain, castle.depth, new_towers, castle.steps)


def refine_pure_columns(castle: Castle, label_of) -> Castle:
    """Refine so every tower's column meets a constant label sequence.

    `label_of` maps an atom code to a partition label; an integer argument
    is shorthand for "the cylinder partition at that depth"."""
    if isinstance(label_of, int):
        coarse = AtomSpace(castle.chain, label_of)
        fine = castle.space
        cache = {}

        def label(code: int):
            if code not in cache:
                cache[code] = coarse.encode(coarse.system.reduce(fine.decode(code)))
            return cache[code]

    else:
        label = label_of
    partitions = []
    for tower in castle.towers:
        groups: dict[tuple, set[int]] = {}
        for c in sorted(tower.levels[0]):
            itinerary = []
            atom = c
            itinerary.append(label(atom))
            for _ in range(tower.height - 1):
                atom = castle.space.translate(atom, castle.steps[atom])
                itinerary.append(label(atom))
            groups.setdefault(tuple(itinerary), set()).add(c)
        partitions.append([frozenset(g) for _, g in sorted(groups.items(), key=lambda kv: min(kv[1]))])
    return castle_refinement_over(castle, partitions)


def separate_points(castle: Castle, points: list[TruncatedPoint]) -> Castle:
    """Refine bases so each point's column lies in a tower of its own."""
    if not points:
        return castle
    space = castle.space
    located = []
    for p in points:
        if p.depth < castle.depth:
            raise CastleError("points must be truncated at least to the castle depth")
        atom = space.encode(p.coords[castle.depth - 1])
        alpha, v = castle.locate(atom)
        base_atom = castle.descend(atom, alpha, v)
        located.append((alpha, base_atom))
    partitions = [[frozenset(t.levels[0])] for t in castle.towers]
    for alpha in set(a for a, _ in located):
        marks = sorted({b for a, b in located if a == alpha})
        if len(marks) != len([1 for a, _ in located if a == alpha]):
            raise SharedColumn("two points share a castle column")
        base = set(castle.towers[alpha].levels[0])
        rest = base - set(marks)
        parts = [frozenset([m]) for m in marks]
        if rest:
            parts.append(frozenset(rest))
        partitions[alpha] = parts
    return castle_refinement_over(castle, partitions)
