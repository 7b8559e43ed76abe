"""Exact arithmetic on full-rank lattices in Z^d and Q^d.

Integer lattices are kept in a single canonical shape: the basis matrix is
upper triangular with positive diagonal, and every entry to the right of a
diagonal entry is reduced into [0, diagonal).  The *columns* of the matrix
generate the lattice.  With that convention, equality of lattices is plain
equality of matrices, the index in Z^d is the product of the diagonal, and
the rectangle spanned by the diagonal is a fundamental domain.

Rational lattices are an integer basis in the same canonical shape scaled
by 1/s for the least admissible positive s.  Everything runs on Python
ints and fractions.Fraction; there are no floats anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from math import gcd, lcm


class LatticeError(ValueError):
    """Base class for lattice-domain errors."""


class SingularBasis(LatticeError):
    """Generator matrix does not have full rank."""


class DimensionMismatch(LatticeError):
    """Operands live in different ambient dimensions."""


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) = a*x + b*y and g >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _hnf_from_columns(columns, dim: int):
    """Canonical basis of the lattice generated by `columns`, or None.

    Works for any number of generators; returns the basis as a tuple of
    rows, or None when the generators do not span a rank-`dim` lattice.
    """
    work = [list(c) for c in columns]
    placed: list[list[int]] = []
    for i in reversed(range(dim)):
        piv = None
        for col in work:
            if col[i] == 0:
                continue
            if piv is None:
                piv = col
                continue
            g, x, y = _xgcd(piv[i], col[i])
            a, b = piv[i] // g, col[i] // g
            piv[:], col[:] = (
                [x * p + y * q for p, q in zip(piv, col)],
                [a * q - b * p for p, q in zip(piv, col)],
            )
        if piv is None:
            return None
        if piv[i] < 0:
            piv[:] = [-e for e in piv]
        work = [c for c in work if c is not piv]
        placed.append(piv)
    basis = placed[::-1]  # column j now has its pivot in row j
    for j in range(dim):
        for i in reversed(range(j)):
            q = basis[j][i] // basis[i][i]
            if q:
                basis[j] = [e - q * f for e, f in zip(basis[j], basis[i])]
    return tuple(tuple(basis[j][i] for j in range(dim)) for i in range(dim))


@dataclass(frozen=True)
class IntegerLattice:
    """Finite-index sublattice of Z^d in canonical form.

    Immutable; all operations return new values, so instances are safe to
    share between threads.
    """

    dim: int
    rows: tuple[tuple[int, ...], ...]

    # -- constructors ------------------------------------------------

    @staticmethod
    def from_columns(columns) -> "IntegerLattice":
        columns = [tuple(int(e) for e in c) for c in columns]
        if not columns:
            raise SingularBasis("no generators")
        dim = len(columns[0])
        if any(len(c) != dim for c in columns):
            raise DimensionMismatch("generators of mixed dimension")
        rows = _hnf_from_columns(columns, dim)
        if rows is None:
            raise SingularBasis(f"generators do not span a rank-{dim} lattice")
        return IntegerLattice(dim, rows)

    @staticmethod
    def from_rows(matrix) -> "IntegerLattice":
        """Canonicalize a square generator matrix given row-wise."""
        matrix = [list(r) for r in matrix]
        dim = len(matrix)
        if any(len(r) != dim for r in matrix):
            raise DimensionMismatch("matrix is not square")
        cols = [[matrix[i][j] for i in range(dim)] for j in range(dim)]
        return IntegerLattice.from_columns(cols)

    @staticmethod
    def standard(dim: int) -> "IntegerLattice":
        return IntegerLattice(dim, tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)))

    @staticmethod
    def diagonal(entries) -> "IntegerLattice":
        entries = [int(e) for e in entries]
        if any(e <= 0 for e in entries):
            raise SingularBasis("diagonal entries must be positive")
        dim = len(entries)
        return IntegerLattice(dim, tuple(tuple(entries[i] if i == j else 0 for j in range(dim)) for i in range(dim)))

    # -- basic data --------------------------------------------------

    @property
    def index(self) -> int:
        """Index [Z^d : L]; equals the determinant of the basis."""
        out = 1
        for i in range(self.dim):
            out *= self.rows[i][i]
        return out

    @property
    def diag(self) -> tuple[int, ...]:
        return tuple(self.rows[i][i] for i in range(self.dim))

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(self.rows[i][j] for i in range(self.dim))

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.dim)]

    def is_diagonal(self) -> bool:
        return all(self.rows[i][j] == 0 for i in range(self.dim) for j in range(self.dim) if i != j)

    # -- membership and ordering -------------------------------------

    def coefficients(self, vector):
        """Integer coordinates of `vector` in this basis, or None."""
        if len(vector) != self.dim:
            raise DimensionMismatch(f"vector of length {len(vector)} in dimension {self.dim}")
        residual = list(vector)
        coeffs = [0] * self.dim
        for i in reversed(range(self.dim)):
            q, r = divmod(residual[i], self.rows[i][i])
            if r:
                return None
            coeffs[i] = q
            for k in range(i + 1):
                residual[k] -= q * self.rows[k][i]
        return tuple(coeffs)

    def contains(self, vector) -> bool:
        return self.coefficients(vector) is not None

    def is_sublattice(self, other: "IntegerLattice") -> bool:
        """True iff self <= other as subgroups of Z^d."""
        if self.dim != other.dim:
            raise DimensionMismatch("lattices of different dimension")
        return all(other.contains(c) for c in self.columns())

    # -- derived lattices ---------------------------------------------

    def intersect(self, other: "IntegerLattice") -> "IntegerLattice":
        """Largest common sublattice, computed through the dual sum."""
        if self.dim != other.dim:
            raise DimensionMismatch("lattices of different dimension")
        meet = RationalLattice.from_integer(self).intersect(RationalLattice.from_integer(other))
        return meet.as_integer()

    def dual(self) -> "RationalLattice":
        """All rational vectors pairing integrally with every element."""
        return RationalLattice.from_integer(self).dual()

    def scaled(self, factor: int) -> "IntegerLattice":
        if factor <= 0:
            raise SingularBasis("scale factor must be positive")
        return IntegerLattice(self.dim, tuple(tuple(factor * e for e in row) for row in self.rows))

    def coset_system(self) -> "CosetSystem":
        return CosetSystem(self)

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(e) for e in row) for row in self.rows) + "]"


def hnf(matrix) -> IntegerLattice:
    """Canonicalize a raw square basis matrix (rows given, columns generate)."""
    return IntegerLattice.from_rows(matrix)


def _fraction_inverse(rows):
    """Exact inverse of a square matrix of Fractions (Gauss-Jordan)."""
    n = len(rows)
    aug = [[Fraction(rows[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise SingularBasis("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [e * inv for e in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [e - f * g for e, g in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class RationalLattice:
    """Full-rank lattice in Q^d, stored as (1/den) * (canonical integer basis).

    `den` is minimal: no prime divides den together with every entry of the
    numerator basis.
    """

    dim: int
    den: int
    num: IntegerLattice

    # -- constructors ------------------------------------------------

    @staticmethod
    def _canonical(dim: int, den: int, num: IntegerLattice) -> "RationalLattice":
        g = den
        for row in num.rows:
            for e in row:
                g = gcd(g, e)
            if g == 1:
                break
        if g > 1:
            num = IntegerLattice(dim, tuple(tuple(e // g for e in row) for row in num.rows))
            den //= g
        return RationalLattice(dim, den, num)

    @staticmethod
    def from_integer(lattice: IntegerLattice) -> "RationalLattice":
        return RationalLattice(lattice.dim, 1, lattice)

    @staticmethod
    def from_fraction_columns(columns) -> "RationalLattice":
        cols = [[Fraction(e) for e in c] for c in columns]
        if not cols:
            raise SingularBasis("no generators")
        dim = len(cols[0])
        den = 1
        for c in cols:
            for e in c:
                den = lcm(den, e.denominator)
        int_cols = [[int(e * den) for e in c] for c in cols]
        num = IntegerLattice.from_columns(int_cols)
        return RationalLattice._canonical(dim, den, num)

    @staticmethod
    def from_scaled_rows(den: int, matrix) -> "RationalLattice":
        """Lattice (1/den) * (matrix) * Z^d for a raw square row matrix."""
        if den <= 0:
            raise SingularBasis("denominator must be positive")
        num = IntegerLattice.from_rows(matrix)
        return RationalLattice._canonical(num.dim, den, num)

    # -- basic data --------------------------------------------------

    @property
    def covolume(self) -> Fraction:
        return Fraction(self.num.index, self.den ** self.dim)

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(e, self.den) for e in self.num.column(j))

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [self.column(j) for j in range(self.dim)]

    def as_integer(self) -> IntegerLattice:
        if self.den != 1:
            raise LatticeError(f"lattice is not integral (denominator {self.den})")
        return self.num

    def is_integral(self) -> bool:
        return self.den == 1

    # -- membership and ordering -------------------------------------

    def contains(self, vector) -> bool:
        """Exact membership of a vector of rationals."""
        if len(vector) != self.dim:
            raise DimensionMismatch(f"vector of length {len(vector)} in dimension {self.dim}")
        target = [Fraction(v) * self.den for v in vector]
        # back-substitute against the triangular numerator basis
        coeffs_ok = True
        residual = target[:]
        for i in reversed(range(self.dim)):
            q = residual[i] / self.num.rows[i][i]
            if q.denominator != 1:
                coeffs_ok = False
                break
            for k in range(i + 1):
                residual[k] -= q * self.num.rows[k][i]
        return coeffs_ok

    def is_sublattice(self, other: "RationalLattice") -> bool:
        if self.dim != other.dim:
            raise DimensionMismatch("lattices of different dimension")
        return all(other.contains(c) for c in self.columns())

    # -- lattice algebra ----------------------------------------------

    def sum(self, other: "RationalLattice") -> "RationalLattice":
        """Smallest lattice containing both summands."""
        if self.dim != other.dim:
            raise DimensionMismatch("lattices of different dimension")
        den = lcm(self.den, other.den)
        cols = [[e * (den // self.den) for e in self.num.column(j)] for j in range(self.dim)]
        cols += [[e * (den // other.den) for e in other.num.column(j)] for j in range(self.dim)]
        num = IntegerLattice.from_columns(cols)
        return RationalLattice._canonical(self.dim, den, num)

    def dual(self) -> "RationalLattice":
        """Inverse-transpose lattice; dual of the dual is the original."""
        basis = [[Fraction(self.num.rows[i][j], self.den) for j in range(self.dim)] for i in range(self.dim)]
        inv = _fraction_inverse(basis)
        # columns of the dual basis are the rows of the inverse
        return RationalLattice.from_fraction_columns([list(r) for r in inv])

    def intersect_via_sum(self, other: "RationalLattice") -> "RationalLattice":
        return self.dual().sum(other.dual()).dual()

    def intersect(self, other: "RationalLattice") -> "RationalLattice":
        return self.intersect_via_sum(other)

    def __str__(self) -> str:
        return f"1/{self.den} {self.num}"


class CosetSystem:
    """Fundamental rectangle and canonical coset representatives for a lattice.

    The rectangle edge for coordinate k is the least n > 0 such that
    n*e_k is congruent mod the lattice to a vector supported on coordinates
    before k; the search is bounded by the index, which guarantees a hit.
    The rectangle turns out to be the diagonal of the canonical basis, and
    the representatives are exactly the integer points inside it.
    """

    def __init__(self, lattice: IntegerLattice):
        self.lattice = lattice
        self.rectangle = tuple(self._min_step(k) for k in range(lattice.dim))
        self._reps = None

    def _min_step(self, k: int) -> int:
        lat = self.lattice
        bound = lat.index
        for n in range(1, bound + 1):
            # is there u in the lattice with u_k = n and u_j = 0 for j > k?
            # back-substitution forces the coefficients of columns > k to 0,
            # so existence reduces to divisibility by the pivot.
            if n % lat.rows[k][k] == 0:
                return n
        raise LatticeError("no rectangle edge found below the index bound")

    @property
    def index(self) -> int:
        return self.lattice.index

    @property
    def atom_measure(self) -> Fraction:
        return Fraction(1, self.index)

    @property
    def reps(self) -> tuple[tuple[int, ...], ...]:
        if self._reps is None:
            self._reps = tuple(iter_product(*(range(m) for m in self.rectangle)))
        return self._reps

    def reduce(self, vector) -> tuple[int, ...]:
        """Unique representative of `vector` inside the rectangle."""
        lat = self.lattice
        if len(vector) != lat.dim:
            raise DimensionMismatch(f"vector of length {len(vector)} in dimension {lat.dim}")
        residual = list(vector)
        for i in reversed(range(lat.dim)):
            q = residual[i] // lat.rows[i][i]
            if q:
                for k in range(i + 1):
                    residual[k] -= q * lat.rows[k][i]
        return tuple(residual)

    def __repr__(self) -> str:
        return f"CosetSystem({self.lattice}, rectangle={self.rectangle})"


def prime_factors(n: int) -> dict[int, int]:
    """Prime factorization by trial division; fine for desk-scale inputs."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("0 has no factorization")
    out: dict[int, int] = {}
    for p in (2, 3):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 5
    while f * f <= n:
        for p in (f, f + 2):
            while n % p == 0:
                out[p] = out.get(p, 0) + 1
                n //= p
        f += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_support(q: Fraction) -> frozenset[int]:
    """Primes dividing the reduced denominator of a rational."""
    return frozenset(prime_factors(Fraction(q).denominator))
