"""Random generation of valid bounded speedup cocycles.

Sampling a compatible pair of generator tables by rejection alone almost
never succeeds, so the sampler seeds one table and propagates the other
along the first generator's cycles: the compatibility relation determines
the second table on a cycle once its value at one point is chosen, and
acceptance reduces to the cycle-closure and bijectivity checks.  Samples
are deterministic for a given seed.
"""

from __future__ import annotations

import random
from itertools import product as iter_product

from .odometer import OdometerChain
from .speedup import PiecewiseCocycle, validate


def _quadrant_values(box: int, dim: int):
    return [v for v in iter_product(range(box + 1), repeat=dim) if any(v)]


def _bijective(chain, depth, table) -> bool:
    system = chain.system(depth)
    images = {system.reduce(tuple(a + b for a, b in zip(rep, vec))) for rep, vec in table.items()}
    return len(images) == len(table)


def _propagate_second(chain, depth, p_lead, seeds):
    """Second table from per-cycle seeds via the compatibility relation.

    Walking x -> image of x under the seeded generator, the relation forces
    other(next x) = other(x) + lead(x + other(x)) - lead(x).  Returns None
    when a cycle fails to close.
    """
    system = chain.system(depth)
    reduce = system.reduce
    table: dict = {}
    for start, seed in seeds:
        rep, val = start, seed
        for _ in range(len(system.reps) + 1):
            if rep in table:
                if table[rep] != val:
                    return None  # cycle closure failed
                break
            table[rep] = val
            stepped = reduce(tuple(a + b for a, b in zip(rep, val)))
            nxt = reduce(tuple(a + b for a, b in zip(rep, p_lead[rep])))
            val = tuple(
                v + l2 - l1
                for v, l2, l1 in zip(val, p_lead[stepped], p_lead[rep])
            )
            rep = nxt
    if len(table) != len(system.reps):
        return None
    return table


def _cycles(chain, depth, table):
    system = chain.system(depth)
    reduce = system.reduce
    seen = set()
    out = []
    for rep in sorted(system.reps):
        if rep in seen:
            continue
        cyc = []
        cur = rep
        while cur not in seen:
            seen.add(cur)
            cyc.append(cur)
            cur = reduce(tuple(a + b for a, b in zip(cur, table[cur])))
        out.append(cyc)
    return out


def sample_cocycles(
    chain: OdometerChain,
    count: int,
    rng: random.Random,
    depth: int = 1,
    box: int = 3,
    max_attempts: int = 20000,
):
    """Up to `count` distinct validated cocycles with quadrant values.

    The lead table is constant on a random slice of samples (where the
    propagated table is free to vary per cycle) and fully random otherwise;
    both shapes occur in the output.
    """
    dim = chain.dim
    system = chain.system(depth)
    reps = sorted(system.reps)
    values = _quadrant_values(box, dim)
    axis_values = [v for v in values if sum(1 for x in v if x) == 1]
    seen = set()
    out = []
    attempts = 0
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        mode = rng.random()
        if mode < 0.25:
            # axis-aligned slice: keeps the rigidity probe non-vacuous
            lead_axis = rng.randrange(dim)
            a = rng.randint(1, box)
            p_lead = {rep: tuple(a if i == lead_axis else 0 for i in range(dim)) for rep in reps}
            seed_pool = [v for v in axis_values if v[lead_axis] == 0] or values
        elif mode < 0.6:
            p_lead = {rep: rng.choice(values) for rep in reps}
            seed_pool = values
            if not _bijective(chain, depth, p_lead):
                continue
        else:
            vec = rng.choice(values)
            p_lead = {rep: vec for rep in reps}
            seed_pool = values
        seeds = []
        for cyc in _cycles(chain, depth, p_lead):
            seeds.append((cyc[0], rng.choice(seed_pool)))
        p_other = _propagate_second(chain, depth, p_lead, seeds)
        if p_other is None or not _bijective(chain, depth, p_other):
            continue
        # propagation can wander out of the quadrant; keep cone-valued tables
        if any(min(v) < 0 or not any(v) for v in p_other.values()):
            continue
        lead_first = rng.random() < 0.5
        tables = (p_lead, p_other) if lead_first else (p_other, p_lead)
        key = tuple(tuple(sorted(t.items())) for t in tables)
        if key in seen:
            continue
        cocycle = PiecewiseCocycle(chain, 2, depth, tables)
        report = validate(cocycle, raise_on_error=False)
        if not report.ok:
            continue
        seen.add(key)
        out.append(cocycle)
    return out
