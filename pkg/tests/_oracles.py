"""Brute-force reference computations, independent of the library's fast paths.

Every oracle here works by enumeration so it cannot share a bug with the
triangular-solve code it is used to check.
"""

from fractions import Fraction
from itertools import product


def span_in_box(generators, coeff_bound):
    """All integer combinations of `generators` with |coefficient| <= bound."""
    dim = len(generators[0])
    points = set()
    for coeffs in product(range(-coeff_bound, coeff_bound + 1), repeat=len(generators)):
        v = tuple(sum(c * g[i] for c, g in zip(coeffs, generators)) for i in range(dim))
        points.add(v)
    return points


def minimal_generators_2d(generators, coeff_bound=12):
    """Canonical-shape basis of a rank-2 lattice, found by enumeration.

    Returns rows [[a, b], [0, d]] where (a, 0) is the lattice point with the
    least positive first coordinate on the axis, d is the least positive
    second coordinate overall, and b is (a,0)-reduced.
    """
    pts = span_in_box(generators, coeff_bound)
    a = min(x for (x, y) in pts if y == 0 and x > 0)
    d = min(y for (_, y) in pts if y > 0)
    b = min(x for (x, y) in pts if y == d and 0 <= x < a)
    return ((a, b), (0, d))


def residue_classes(lattice_contains, dim, box):
    """Distinct residues of the points of [0, box)^dim under the lattice.

    `lattice_contains` decides membership of a difference vector; counting
    classes by pairwise comparison keeps this independent of any canonical
    reduction routine.
    """
    classes = []
    for v in product(*(range(b) for b in box)):
        for rep in classes:
            if lattice_contains(tuple(x - y for x, y in zip(v, rep))):
                break
        else:
            classes.append(v)
    return classes


def shortest_nonzero_in_box(lattice_contains, dim, radius):
    """Shortest nonzero lattice vector with sup-norm <= radius, by scan.

    Ties broken toward the sign-normalized (first nonzero coordinate
    positive), lexicographically smallest vector.
    """
    best = None
    for v in product(*(range(-radius, radius + 1) for _ in range(dim))):
        if all(x == 0 for x in v):
            continue
        if not lattice_contains(v):
            continue
        lead = next(x for x in v if x != 0)
        if lead < 0:
            v = tuple(-x for x in v)
        key = (sum(x * x for x in v), v)
        if best is None or key < best:
            best = key
    return None if best is None else best[1]


def pairs_integrally(vector, generators):
    """True iff `vector` (rationals) has integer dot product with every generator."""
    for g in generators:
        dot = sum(Fraction(x) * y for x, y in zip(vector, g))
        if dot.denominator != 1:
            return False
    return True


def rational_group_generated_by(denominators, probe_denominator_bound=64):
    """Subgroup of Q generated by {1/n} as the set of reduced denominators
    b <= bound with 1/b in the group (the group is a union of (1/n)Z's)."""
    from math import lcm

    acc = 1
    members = set()
    for n in denominators:
        acc = lcm(acc, n)
    for b in range(1, probe_denominator_bound + 1):
        if acc % b == 0:
            members.add(b)
    return members
