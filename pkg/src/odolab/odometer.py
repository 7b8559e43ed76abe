"""Z^d odometers as decreasing chains of finite-index sublattices.

A chain is described by a provider: an explicit finite list of lattices, a
diagonal power rule j -> diag(b_1^(a_1 j), ..., b_d^(a_d j)), or a derived
rule that computes each stage on demand (used for the stabilizer chains of
bounded speedups).  Stages are realized lazily and cached; nesting is
checked at realization time.  Realizing the same stage twice always yields
the identical lattice, so the cache behaves as a single-writer memo and the
chain presents pure semantics to concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .lattice import (
    CosetSystem,
    DimensionMismatch,
    IntegerLattice,
    LatticeError,
    RationalLattice,
    prime_factors,
)
from .valuegroup import ValueGroup


class ChainError(LatticeError):
    """Base class for odometer-chain errors."""


class NotNested(ChainError):
    """A realized stage fails to contain the next one."""

    def __init__(self, depth: int, witness):
        self.depth = depth
        self.witness = witness
        super().__init__(f"stage {depth + 1} is not inside stage {depth}; witness {witness}")


class ChainDepthError(ChainError):
    """An explicit chain was asked for a stage beyond its data."""


# ---------------------------------------------------------------- providers

@dataclass(frozen=True)
class ExplicitProvider:
    lattices: tuple[IntegerLattice, ...]

    def stage(self, j: int) -> IntegerLattice:
        if j > len(self.lattices):
            raise ChainDepthError(f"explicit chain has {len(self.lattices)} stages, asked for {j}")
        return self.lattices[j - 1]

    def describe(self) -> str:
        return f"explicit[{len(self.lattices)}]"


@dataclass(frozen=True)
class DiagonalPowerProvider:
    """Stage j is diag(b_i ** (a_i * j)): a coordinate product at every depth."""

    bases: tuple[int, ...]
    coeffs: tuple[int, ...]

    def stage(self, j: int) -> IntegerLattice:
        return IntegerLattice.diagonal([b ** (a * j) for b, a in zip(self.bases, self.coeffs)])

    def describe(self) -> str:
        rule = ",".join(f"{b}^{a}j" for b, a in zip(self.bases, self.coeffs))
        return f"diagpow({rule})"


@dataclass(frozen=True)
class DerivedProvider:
    """Stage rule supplied by a callback (stabilizer chain of a speedup)."""

    dim: int
    stage_fn: Callable[[int], IntegerLattice]
    label: str = "derived"
    value_group_fn: Optional[Callable[[], "ValueGroup"]] = None

    def stage(self, j: int) -> IntegerLattice:
        return self.stage_fn(j)

    def describe(self) -> str:
        return self.label


Provider = ExplicitProvider | DiagonalPowerProvider | DerivedProvider


class OdometerChain:
    """Lazily realized decreasing chain of finite-index sublattices of Z^d."""

    def __init__(self, dim: int, provider: Provider):
        self.dim = dim
        self.provider = provider
        self._stages: dict[int, IntegerLattice] = {}
        self._systems: dict[int, CosetSystem] = {}

    # convenience constructors ----------------------------------------

    @staticmethod
    def diagonal_power(bases, coeffs=None) -> "OdometerChain":
        bases = tuple(int(b) for b in bases)
        coeffs = tuple(1 for _ in bases) if coeffs is None else tuple(int(a) for a in coeffs)
        return OdometerChain(len(bases), DiagonalPowerProvider(bases, coeffs))

    @staticmethod
    def explicit(lattices) -> "OdometerChain":
        lattices = tuple(lattices)
        return OdometerChain(lattices[0].dim, ExplicitProvider(lattices))

    # stages ------------------------------------------------------------

    def stage(self, j: int) -> IntegerLattice:
        if j < 1:
            raise ChainError("stages are numbered from 1")
        if j not in self._stages:
            lat = self.provider.stage(j)
            if lat.dim != self.dim:
                raise DimensionMismatch("provider returned a lattice of wrong dimension")
            self._check_nested(j, lat)
            self._stages[j] = lat
        return self._stages[j]

    def _check_nested(self, j: int, lat: IntegerLattice) -> None:
        prev = self._stages.get(j - 1)
        if prev is not None and not lat.is_sublattice(prev):
            witness = next(c for c in lat.columns() if not prev.contains(c))
            raise NotNested(j - 1, witness)
        nxt = self._stages.get(j + 1)
        if nxt is not None and not nxt.is_sublattice(lat):
            witness = next(c for c in nxt.columns() if not lat.contains(c))
            raise NotNested(j, witness)

    def system(self, j: int) -> CosetSystem:
        if j not in self._systems:
            self._systems[j] = self.stage(j).coset_system()
        return self._systems[j]

    def index(self, j: int) -> int:
        return self.stage(j).index

    def describe(self) -> str:
        return f"dim={self.dim} {self.provider.describe()}"

    # dynamics ------------------------------------------------------------

    def zero_point(self, depth: int) -> "TruncatedPoint":
        return TruncatedPoint(self, tuple(self.system(j).reduce((0,) * self.dim) for j in range(1, depth + 1)))

    def point_of(self, vector, depth: int) -> "TruncatedPoint":
        """Truncation of the orbit point reached from 0 by `vector`."""
        return TruncatedPoint(self, tuple(self.system(j).reduce(vector) for j in range(1, depth + 1)))

    def act(self, point: "TruncatedPoint", vector) -> "TruncatedPoint":
        if len(vector) != self.dim:
            raise DimensionMismatch(f"vector of length {len(vector)} in dimension {self.dim}")
        coords = tuple(
            self.system(j + 1).reduce(tuple(a + b for a, b in zip(c, vector)))
            for j, c in enumerate(point.coords)
        )
        return TruncatedPoint(self, coords)

    # invariants ------------------------------------------------------------

    def kr_partition(self, j: int) -> "KRPartition":
        return KRPartition(self, j)

    def cohomology_stage(self, j: int) -> RationalLattice:
        return self.stage(j).dual()

    def freeness_evidence(self, depth: int, radius: int | None = None) -> "FreenessReport":
        lat = self.stage(depth)
        for j in range(1, depth):
            self.stage(j)  # realize for the nesting audit
        shortest = _shortest_vector(lat, radius)
        certified = None
        if isinstance(self.provider, DiagonalPowerProvider):
            certified = all(
                b > 1 and a >= 1 for b, a in zip(self.provider.bases, self.provider.coeffs)
            )
        return FreenessReport(
            depth=depth,
            intersection=lat,
            indices=tuple(self.index(j) for j in range(1, depth + 1)),
            shortest_nonzero=shortest,
            certified_free=certified,
        )

    def clopen_value_group(self, depth: int | None = None) -> "ValueGroup":
        if isinstance(self.provider, DiagonalPowerProvider):
            infinite: set[int] = set()
            for b, a in zip(self.provider.bases, self.provider.coeffs):
                if a >= 1:
                    infinite |= set(prime_factors(b)) if b > 1 else set()
            return ValueGroup(frozenset(infinite), (), exact=True, depth_checked=None)
        if isinstance(self.provider, DerivedProvider) and self.provider.value_group_fn is not None:
            return self.provider.value_group_fn()
        if isinstance(self.provider, ExplicitProvider):
            depth = len(self.provider.lattices) if depth is None else min(depth, len(self.provider.lattices))
        if depth is None:
            raise ChainError("a depth bound is required for this provider")
        sup: dict[int, int] = {}
        for j in range(1, depth + 1):
            for p, e in prime_factors(self.index(j)).items():
                sup[p] = max(sup.get(p, 0), e)
        return ValueGroup(
            frozenset(),
            tuple(sorted(sup.items())),
            exact=False,
            depth_checked=depth,
            indices=tuple(self.index(j) for j in range(1, depth + 1)),
        )

    def is_product_type_stagewise(self, depth: int) -> bool:
        """Sufficient-only check: all realized stages have a diagonal basis.

        A non-diagonal stage does not rule out product type up to
        conjugacy, so False here means "not visibly a product".
        """
        return all(self.stage(j).is_diagonal() for j in range(1, depth + 1))


@dataclass(frozen=True)
class TruncatedPoint:
    """Finite truncation of an inverse-limit point: one representative per stage."""

    chain: OdometerChain
    coords: tuple[tuple[int, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.coords)

    def is_compatible(self) -> bool:
        """Reducing coordinate j+1 into stage j must reproduce coordinate j."""
        for j in range(1, self.depth):
            if self.chain.system(j).reduce(self.coords[j]) != self.coords[j - 1]:
                return False
        return True

    def __repr__(self) -> str:
        return f"TruncatedPoint{self.coords}"


@dataclass(frozen=True)
class FreenessReport:
    """Depth-bounded evidence about triviality of the chain intersection.

    `certified_free` is True only for diagonal-power rules with every
    exponent strictly increasing; otherwise the report is evidence, not a
    theorem, since the intersection is a statement about all depths.
    """

    depth: int
    intersection: IntegerLattice
    indices: tuple[int, ...]
    shortest_nonzero: tuple[int, ...] | None
    certified_free: bool | None

    def exceeds(self, bound: int) -> bool:
        """Whether no nonzero intersection vector of norm <= bound was seen."""
        if self.shortest_nonzero is None:
            return True
        return sum(x * x for x in self.shortest_nonzero) > bound * bound


def _shortest_vector(lat: IntegerLattice, radius: int | None):
    """Shortest nonzero vector by bounded box scan (sign-normalized)."""
    if radius is None:
        radius = min(max(abs(e) for e in col) for col in lat.columns())
    best = None
    from itertools import product as iproduct

    for v in iproduct(*(range(-radius, radius + 1) for _ in range(lat.dim))):
        if all(x == 0 for x in v) or not lat.contains(v):
            continue
        lead = next(x for x in v if x != 0)
        if lead < 0:
            v = tuple(-x for x in v)
        key = (sum(x * x for x in v), v)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


class KRPartition:
    """Depth-j cylinder partition: atoms indexed by coset representatives."""

    def __init__(self, chain: OdometerChain, depth: int):
        if depth < 1:
            raise ChainError("partition depth starts at 1")
        self.chain = chain
        self.depth = depth
        self.system = chain.system(depth)

    @property
    def rectangle(self) -> tuple[int, ...]:
        return self.system.rectangle

    @property
    def atom_measure(self) -> Fraction:
        return self.system.atom_measure

    def atoms(self):
        return self.system.reps

    def atom_of(self, point: TruncatedPoint) -> tuple[int, ...]:
        if point.depth < self.depth:
            raise ChainError("point truncation is shallower than the partition")
        return point.coords[self.depth - 1]

    def boundary_measure(self) -> Fraction:
        """Base plus top measure; only meaningful for one-dimensional chains."""
        if self.chain.dim != 1:
            raise ChainError("boundary measure is defined for 1-dimensional chains here")
        h = self.system.rectangle[0]
        return Fraction(min(2, h), h)

    def __len__(self) -> int:
        return self.system.index
