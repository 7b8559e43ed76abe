"""Bounded speedup cocycles constant on fixed-depth cylinders.

A cocycle is given by one table per generator of the acting group: a map
from the depth-J coset representatives of the base chain to integer
displacement vectors.  Validation checks the generator compatibility
relation and that each generator permutes the depth-J quotient; both
together are exactly what makes the generated action a homeomorphism
action on the inverse limit.

The derived chain presents a minimal bounded speedup as an odometer again:
stage j is the stabilizer of the zero representative under the induced
permutation action on the depth-j quotient, computed by orbit/stabilizer
with Schreier generators and returned in canonical lattice form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .lattice import DimensionMismatch, IntegerLattice, LatticeError
from .odometer import DerivedProvider, OdometerChain
from .valuegroup import ValueGroup


class SpeedupError(ValueError):
    """Base class for speedup-domain errors."""


class IncompatibleCocycle(SpeedupError):
    def __init__(self, rep, i, k):
        self.rep, self.i, self.k = rep, i, k
        super().__init__(f"generator relation fails at rep {rep} for generators {i} and {k}")


class NonBijectiveGenerator(SpeedupError):
    def __init__(self, generator, image, preimages):
        self.generator, self.image, self.preimages = generator, image, preimages
        super().__init__(
            f"generator {generator} maps representatives {preimages} to the same atom {image}"
        )


class NotMinimalAtDepth(SpeedupError):
    def __init__(self, depth, orbit_size, quotient_size):
        self.depth = depth
        super().__init__(f"orbit of 0 covers {orbit_size}/{quotient_size} atoms at depth {depth}")


class AntipodalValues(SpeedupError):
    """No cone can contain the given set of displacement values."""


class HypothesisFailed(SpeedupError):
    def __init__(self, clause: str):
        self.clause = clause
        super().__init__(clause)


# ---------------------------------------------------------------------- cones

def _cross(u, v) -> int:
    return u[0] * v[1] - u[1] * v[0]


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _primitive(v):
    g = 0
    for e in v:
        g = gcd(g, e)
    if g == 0:
        raise AntipodalValues("the zero vector has no direction")
    return tuple(e // g for e in v)


@dataclass(frozen=True)
class Cone:
    """Integer points of a filled cone: d half-space facets through 0.

    Stored as facet normals with an openness flag each; membership is
    "nonzero and every facet condition holds".  Plane sectors are also
    supported directly: a pair of boundary rays at most a half-plane
    apart, each inclusive or strict, normalized into facet form.  A
    degenerate sector with equal rays means the single ray itself and is
    kept with an explicit marker because no facet pair can express it.
    """

    dim: int
    facets: tuple[tuple[tuple[Fraction, ...], bool], ...]  # (normal, strict)
    ray: tuple[int, ...] | None = None
    sector_data: tuple | None = None  # (u, v, include_u, include_v) when built as a sector

    @staticmethod
    def from_facets(normals_flags) -> "Cone":
        facets = tuple(
            (tuple(Fraction(e) for e in normal), bool(strict)) for normal, strict in normals_flags
        )
        dim = len(facets[0][0])
        return Cone(dim, facets)

    @staticmethod
    def quadrant(dim: int, strict_axes=()) -> "Cone":
        """Nonnegative orthant minus 0; axes listed in `strict_axes` excluded."""
        normals = []
        for i in range(dim):
            n = tuple(Fraction(int(j == i)) for j in range(dim))
            normals.append((n, i in strict_axes))
        return Cone(dim, tuple(normals))

    @staticmethod
    def sector(u, v, include_u: bool = True, include_v: bool = True) -> "Cone":
        """Plane sector from ray u counterclockwise to ray v (span < half turn)."""
        u = _primitive(tuple(int(e) for e in u))
        v = _primitive(tuple(int(e) for e in v))
        if len(u) != 2 or len(v) != 2:
            raise SpeedupError("sector cones are two-dimensional")
        cr = _cross(u, v)
        if u == v:
            if not (include_u and include_v):
                raise SpeedupError("a degenerate sector must include its boundary ray")
            n = (Fraction(-u[1]), Fraction(u[0]))
            facets = ((n, False), (tuple(-e for e in n), False))
            return Cone(2, facets, ray=u, sector_data=(u, v, True, True))
        if cr <= 0:
            raise SpeedupError("sector spans at least a half-plane; not a valid cone here")
        n1 = (Fraction(-u[1]), Fraction(u[0]))        # n1 . x = cross(u, x)
        n2 = (Fraction(v[1]), Fraction(-v[0]))        # n2 . x = cross(x, v)
        facets = ((n1, not include_u), (n2, not include_v))
        return Cone(2, facets, sector_data=(u, v, include_u, include_v))

    def contains(self, x) -> bool:
        if len(x) != self.dim:
            raise DimensionMismatch(f"vector of length {len(x)} in dimension {self.dim}")
        if all(e == 0 for e in x):
            return False
        if self.ray is not None:
            return _cross(self.ray, x) == 0 and _dot(self.ray, x) > 0
        for normal, strict in self.facets:
            val = _dot(normal, x)
            if val < 0 or (strict and val == 0):
                return False
        return True

    def describe(self) -> str:
        if self.sector_data is not None:
            u, v, iu, iv = self.sector_data
            lu, ru = ("[" if iu else "("), ("]" if iv else ")")
            return f"sector {lu}{u} -> {v}{ru}"
        body = ", ".join(
            f"{tuple(str(e) for e in n)} {'>' if strict else '>='} 0" for n, strict in self.facets
        )
        return f"facets {body}"


# ---------------------------------------------------------------- cocycles

@dataclass
class PiecewiseCocycle:
    """Speedup cocycle generated by d2 tables on depth-J representatives."""

    chain: OdometerChain
    d2: int
    depth: int  # J: cylinders on which the tables are constant
    tables: tuple[dict, ...]  # tables[i][rep] = displacement in Z^d1

    def __post_init__(self):
        reps = set(self.chain.system(self.depth).reps)
        if len(self.tables) != self.d2:
            raise SpeedupError("one table per generator is required")
        for t in self.tables:
            if set(t) != reps:
                raise SpeedupError("tables must be total on depth-J representatives")
        self._perm_cache: dict = {}
        self._validated = False

    @property
    def d1(self) -> int:
        return self.chain.dim

    def value(self, i: int, rep) -> tuple[int, ...]:
        """Table value of generator i on the depth-J class of `rep`."""
        base = self.chain.system(self.depth).reduce(rep)
        return self.tables[i][base]

    def values(self) -> list[tuple[int, ...]]:
        out = []
        for t in self.tables:
            out.extend(t.values())
        return out

    # quotient permutations ------------------------------------------

    def permutation(self, i: int, depth: int) -> dict:
        """Induced map of generator i on depth-`depth` representatives."""
        key = (i, depth)
        if key not in self._perm_cache:
            system = self.chain.system(depth)
            perm = {}
            for rep in system.reps:
                p = self.value(i, rep)
                perm[rep] = system.reduce(tuple(a + b for a, b in zip(rep, p)))
            self._perm_cache[key] = perm
        return self._perm_cache[key]

    def inverse_permutation(self, i: int, depth: int) -> dict:
        key = ("inv", i, depth)
        if key not in self._perm_cache:
            self._perm_cache[key] = {v: k for k, v in self.permutation(i, depth).items()}
        return self._perm_cache[key]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    detail: str
    failure: tuple | None = None


def validate(cocycle: PiecewiseCocycle, raise_on_error: bool = True) -> ValidationReport:
    """Check generator compatibility and bijectivity on the depth-J quotient.

    Compatibility is the relation making the d2 generator functions extend
    to a single cocycle: for all representatives x and generator pairs
    (i, k), value_i(image under generator k of x) + value_k(x) must equal
    value_k(image under generator i of x) + value_i(x).
    """
    system = cocycle.chain.system(cocycle.depth)
    for i in range(cocycle.d2):
        images: dict = {}
        for rep in system.reps:
            img = system.reduce(tuple(a + b for a, b in zip(rep, cocycle.value(i, rep))))
            if img in images:
                err = NonBijectiveGenerator(i, img, (images[img], rep))
                if raise_on_error:
                    raise err
                return ValidationReport(False, str(err), (rep, i, i))
            images[img] = rep
    for i in range(cocycle.d2):
        for k in range(i + 1, cocycle.d2):
            pi = cocycle.permutation(i, cocycle.depth)
            pk = cocycle.permutation(k, cocycle.depth)
            for rep in system.reps:
                lhs = _vadd(cocycle.value(i, pk[rep]), cocycle.value(k, rep))
                rhs = _vadd(cocycle.value(k, pi[rep]), cocycle.value(i, rep))
                if lhs != rhs:
                    err = IncompatibleCocycle(rep, i, k)
                    if raise_on_error:
                        raise err
                    return ValidationReport(False, str(err), (rep, i, k))
    cocycle._validated = True
    return ValidationReport(True, "compatible; every generator permutes the quotient")


def _vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _require_valid(cocycle: PiecewiseCocycle) -> None:
    if not cocycle._validated:
        validate(cocycle)


# ---------------------------------------------------------------- evaluation

def step(cocycle: PiecewiseCocycle, rep, i: int, depth: int, forward: bool = True):
    """One generator step on the depth-`depth` quotient.

    Returns (new representative, displacement).  A backward step uses the
    inverse permutation; its displacement is minus the table value at the
    preimage, which is what the cocycle equation forces.
    """
    if forward:
        disp = cocycle.value(i, rep)
        return cocycle.permutation(i, depth)[rep], disp
    pre = cocycle.inverse_permutation(i, depth)[rep]
    disp = tuple(-e for e in cocycle.value(i, pre))
    return pre, disp


def walk(cocycle: PiecewiseCocycle, rep, vector, depth: int | None = None):
    """Apply the staircase path for `vector`: all first-generator steps,
    then all second-generator steps, and so on.  Compatibility makes the
    result path-independent.  Returns (end representative, displacement).
    """
    _require_valid(cocycle)
    depth = cocycle.depth if depth is None else depth
    if depth < cocycle.depth:
        raise SpeedupError("walks live at depths at least the cocycle resolution")
    if len(vector) != cocycle.d2:
        raise DimensionMismatch(f"vector of length {len(vector)}, acting rank {cocycle.d2}")
    total = (0,) * cocycle.d1
    cur = cocycle.chain.system(depth).reduce(rep)
    for i, count in enumerate(vector):
        forward = count >= 0
        for _ in range(abs(count)):
            cur, disp = step(cocycle, cur, i, depth, forward)
            total = _vadd(total, disp)
    return cur, total


def evaluate(cocycle: PiecewiseCocycle, rep, vector, depth: int | None = None):
    """Total displacement of the speedup move `vector` started at `rep`."""
    return walk(cocycle, rep, vector, depth)[1]


# ---------------------------------------------------------------- cone checks

def cone_check(cocycle: PiecewiseCocycle, cone: Cone):
    """True iff every table value lies in the cone; witnesses otherwise."""
    _require_valid(cocycle)
    witnesses = []
    for i, table in enumerate(cocycle.tables):
        for rep in sorted(table):
            if not cone.contains(table[rep]):
                witnesses.append((i, rep, table[rep]))
    return (not witnesses), witnesses


def cone_hull(cocycle: PiecewiseCocycle) -> Cone:
    """Tightest inclusive sector containing all table values (plane case).

    Raises AntipodalValues when the values positively span a line, since
    no cone is closed under addition on such a set.
    """
    _require_valid(cocycle)
    if cocycle.d1 != 2:
        raise SpeedupError("cone hulls are implemented for two-dimensional values")
    values = cocycle.values()
    if any(all(e == 0 for e in v) for v in values):
        raise AntipodalValues("a zero displacement belongs to no cone")
    dirs = sorted({_primitive(v) for v in values}, key=_angle_key)
    if len(dirs) == 1:
        return Cone.sector(dirs[0], dirs[0])
    wide = None
    for t in range(len(dirs)):
        u, v = dirs[t], dirs[(t + 1) % len(dirs)]
        if _cross(u, v) < 0 or (_cross(u, v) == 0 and _dot(u, v) < 0):
            # gap from u to v exceeds or equals a half turn
            if _cross(u, v) == 0:
                raise AntipodalValues(f"directions {u} and {v} are opposite")
            if wide is not None:
                raise AntipodalValues("directions span more than a half-plane")
            wide = (v, u)
    if wide is None:
        raise AntipodalValues("directions span more than a half-plane")
    return Cone.sector(wide[0], wide[1])


def _angle_key(v):
    """Total order of directions by angle in [0, 2pi), exactly."""
    x, y = v
    half = 0 if (y > 0 or (y == 0 and x > 0)) else 1
    return (half, _HalfAngle(x, y))


class _HalfAngle:
    """Comparator for directions within one half-turn via cross products."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x, self.y = x, y

    def __lt__(self, other):
        return _cross((self.x, self.y), (other.x, other.y)) > 0

    def __eq__(self, other):
        return _cross((self.x, self.y), (other.x, other.y)) == 0


def product_form_check(cocycle: PiecewiseCocycle) -> bool:
    """True iff each generator moves only along its own coordinate axis."""
    _require_valid(cocycle)
    if cocycle.d1 != 2 or cocycle.d2 != 2:
        raise SpeedupError("the product-form check applies to rank-2 over dimension-2")
    return all(v[1] == 0 for v in cocycle.tables[0].values()) and all(
        v[0] == 0 for v in cocycle.tables[1].values()
    )


# ---------------------------------------------------------------- minimality

def orbit_of_zero(cocycle: PiecewiseCocycle, depth: int) -> dict:
    """BFS orbit of the zero representative under the abelian generator action.

    Returns a map representative -> reaching vector in Z^d2.  Enumeration
    order is fixed (queue order, generators ascending, forward before
    backward) so results are deterministic.
    """
    _require_valid(cocycle)
    system = cocycle.chain.system(depth)
    zero = system.reduce((0,) * cocycle.d1)
    reach = {zero: (0,) * cocycle.d2}
    queue = [zero]
    perms = [cocycle.permutation(i, depth) for i in range(cocycle.d2)]
    inv_perms = [cocycle.inverse_permutation(i, depth) for i in range(cocycle.d2)]
    head = 0
    while head < len(queue):
        cur = queue[head]
        head += 1
        vec = reach[cur]
        for i in range(cocycle.d2):
            for nxt, delta in ((perms[i][cur], 1), (inv_perms[i][cur], -1)):
                if nxt not in reach:
                    new = list(vec)
                    new[i] += delta
                    reach[nxt] = tuple(new)
                    queue.append(nxt)
    return reach


def minimality_to_depth(cocycle: PiecewiseCocycle, depth: int) -> dict[int, bool]:
    """Whether the orbit of 0 covers the full quotient at each depth."""
    _require_valid(cocycle)
    if depth < cocycle.depth:
        raise SpeedupError("check at least the cocycle resolution depth")
    out = {}
    for j in range(1, depth + 1):
        # below the resolution depth the tables are still well defined on
        # the coarser quotient only through the finer one; probe from J up
        probe = max(j, cocycle.depth)
        orbit = orbit_of_zero(cocycle, probe)
        if probe == j:
            out[j] = len(orbit) == cocycle.chain.index(j)
        else:
            system = cocycle.chain.system(j)
            classes = {system.reduce(rep) for rep in orbit}
            out[j] = len(classes) == cocycle.chain.index(j)
    return out


# ---------------------------------------------------------------- derived chain

@dataclass(frozen=True)
class DerivedChainReport:
    first_depth: int
    stages: tuple[IntegerLattice, ...]
    orbit_sizes: tuple[int, ...]
    transitive: tuple[bool, ...]

    def stage(self, j: int) -> IntegerLattice:
        return self.stages[j - self.first_depth]


def derived_stage(cocycle: PiecewiseCocycle, depth: int) -> IntegerLattice:
    """Stabilizer of the zero atom at one depth, via orbit/stabilizer.

    Schreier generators reach(a) + e_i - reach(image of a) span the
    stabilizer; their canonical lattice has index equal to the orbit size,
    which is asserted.  Depths below the cocycle resolution are rejected:
    the induced atom maps only exist on quotients the tables refine.
    """
    _require_valid(cocycle)
    if depth < cocycle.depth:
        raise SpeedupError("stabilizers are defined from the cocycle resolution depth up")
    reach = orbit_of_zero(cocycle, depth)
    quotient = cocycle.chain.index(depth)
    if len(reach) != quotient:
        raise NotMinimalAtDepth(depth, len(reach), quotient)
    basis: list[tuple[int, ...]] = []
    current: IntegerLattice | None = None
    zero = (0,) * cocycle.d2
    perms = [cocycle.permutation(i, depth) for i in range(cocycle.d2)]
    for rep in sorted(reach):
        vec = reach[rep]
        for i in range(cocycle.d2):
            img = perms[i][rep]
            gen = list(vec)
            gen[i] += 1
            gen = tuple(a - b for a, b in zip(gen, reach[img]))
            if gen == zero:
                continue
            if current is not None and current.contains(gen):
                continue
            basis.append(gen)
            try:
                current = IntegerLattice.from_columns(basis)
            except LatticeError:
                current = None  # not yet full rank; keep accumulating
    if current is None:
        raise SpeedupError("stabilizer generators do not span a finite-index subgroup")
    assert current.index == len(reach), "orbit-stabilizer count mismatch"
    return current


def derived_chain(cocycle: PiecewiseCocycle, depth: int) -> DerivedChainReport:
    """Stabilizer lattices of the zero atom, stages J up to `depth`."""
    _require_valid(cocycle)
    stages = []
    sizes = []
    flags = []
    for j in range(cocycle.depth, depth + 1):
        lat = derived_stage(cocycle, j)
        stages.append(lat)
        sizes.append(lat.index)
        flags.append(lat.index == cocycle.chain.index(j))
        if len(stages) > 1 and not stages[-1].is_sublattice(stages[-2]):
            raise SpeedupError(f"derived stages fail to nest at depth {j}")
    return DerivedChainReport(cocycle.depth, tuple(stages), tuple(sizes), tuple(flags))


def derived_odometer(cocycle: PiecewiseCocycle, checked_depth: int = 3) -> OdometerChain:
    """The speedup presented as an odometer chain over its stabilizers.

    The chain's value group is taken symbolically from the base chain,
    which is justified by the orbit-stabilizer equality of indices; that
    equality is verified at every realized stage and `checked_depth`
    stages are realized eagerly here.
    """
    _require_valid(cocycle)

    def stage_fn(j: int) -> IntegerLattice:
        lat = derived_stage(cocycle, j)
        if lat.index != cocycle.chain.index(j):
            raise NotMinimalAtDepth(j, lat.index, cocycle.chain.index(j))
        return lat

    def value_group_fn() -> ValueGroup:
        return cocycle.chain.clopen_value_group()

    provider = DerivedProvider(
        cocycle.d2, stage_fn, label="derived-speedup", value_group_fn=value_group_fn
    )
    chain = OdometerChain(cocycle.d2, provider)
    for j in range(1, checked_depth + 1):
        chain.stage(j)
    return chain


# ---------------------------------------------------------------- structure

def sandwich_diagonal_check(lattice: IntegerLattice, m: int, m_tilde: int) -> bool:
    """Cross-check of the rigidity statement for index-6^j subgroups.

    Hypotheses: the index is a power of six and the group is sandwiched
    between diag(3^m, 2^m) and diag(3^m_tilde, 2^m_tilde).  Under them the
    group must be exactly diag(3^j, 2^j); a False return would expose an
    implementation bug rather than a counterexample.
    """
    if lattice.dim != 2:
        raise HypothesisFailed("the check applies to two-dimensional lattices")
    from .lattice import prime_factors

    fac = prime_factors(lattice.index)
    j = fac.get(2, 0)
    if set(fac) - {2, 3} or fac.get(3, 0) != j:
        raise HypothesisFailed(f"index {lattice.index} is not a power of 6")
    lower = IntegerLattice.diagonal([3**m, 2**m])
    upper = IntegerLattice.diagonal([3**m_tilde, 2**m_tilde])
    if not lower.is_sublattice(lattice):
        raise HypothesisFailed(f"diag(3^{m}, 2^{m}) is not inside the group")
    if not lattice.is_sublattice(upper):
        raise HypothesisFailed(f"the group is not inside diag(3^{m_tilde}, 2^{m_tilde})")
    return lattice == IntegerLattice.diagonal([3**j, 2**j])


def constant_cocycle(chain: OdometerChain, depth: int, vectors) -> PiecewiseCocycle:
    """Cocycle whose generator displacements do not depend on the point."""
    reps = chain.system(depth).reps
    tables = tuple({rep: tuple(v) for rep in reps} for v in vectors)
    return PiecewiseCocycle(chain, len(vectors), depth, tables)
