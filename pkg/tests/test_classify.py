from fractions import Fraction

import pytest

from odolab.classify import (
    DimensionUnsupported,
    SupergroupDescriptor,
    UnsupportedDescriptor,
    conjugate_test,
    continuous_oe_test,
    fit_descriptor,
    isomorphism_test,
    orbit_equivalence_test,
)
from odolab.odometer import OdometerChain
from odolab.speedup import derived_odometer

from test_speedup import chain22, chain32, row_shear_cocycle, staircase_cocycle

H_BASE = SupergroupDescriptor.coordinate([{3}, {2}])  # Z[1/3] x Z[1/2]
H_SHEARED = SupergroupDescriptor.make([[1, 0], [Fraction(-1, 2), 1]], [{3}, {2}])
H_DYADIC = SupergroupDescriptor.coordinate([{2}, {2}])


# ---------------------------------------------------------------- membership

def test_member_separating_vector():
    v = (Fraction(1, 3), Fraction(1, 6))
    assert H_SHEARED.member(v)
    assert not H_BASE.member(v)
    assert H_BASE.member((0, 0)) and H_SHEARED.member((0, 0))


def test_member_examples_more():
    assert H_BASE.member((Fraction(5, 27), Fraction(7, 8)))
    assert not H_BASE.member((Fraction(1, 2), 0))
    assert H_SHEARED.member((Fraction(2, 9), Fraction(1, 9)))  # y - x/2 = 0


def test_descriptor_validation():
    with pytest.raises(UnsupportedDescriptor):
        SupergroupDescriptor.make([[2, 0], [0, 1]], [{3}, {2}])
    with pytest.raises(UnsupportedDescriptor):
        SupergroupDescriptor.make([[1, Fraction(1, 2)], [0, 1]], [{3}, {2}])


# ---------------------------------------------------------------- fitting

def test_fit_descriptor_coordinate_chain():
    desc = fit_descriptor(chain32(), 4)
    assert desc == H_BASE


def test_fit_descriptor_dyadic_chain():
    desc = fit_descriptor(chain22(), 4)
    assert desc == H_DYADIC


def test_fit_descriptor_derived_chain():
    chain = derived_odometer(row_shear_cocycle(), checked_depth=2)
    desc = fit_descriptor(chain, 5)
    assert desc == H_SHEARED
    # coherence: every realized stage generator is a member
    for j in range(1, 6):
        for col in chain.cohomology_stage(j).columns():
            assert desc.member(col)


def test_fit_descriptor_rejects_wrong_shear():
    # the positive half-shear admits the first stage but not the second,
    # so the stage-truncation check must reject it
    from odolab.classify import _fit_valid

    chain = derived_odometer(row_shear_cocycle(), checked_depth=2)
    duals = [chain.cohomology_stage(j) for j in range(1, 4)]
    wrong = SupergroupDescriptor.make([[1, 0], [Fraction(1, 2), 1]], [{3}, {2}])
    assert not _fit_valid(wrong, chain, duals)
    assert _fit_valid(H_SHEARED, chain, duals)


def test_sheared_dual_contains_separating_vector():
    chain = derived_odometer(row_shear_cocycle(), checked_depth=2)
    dual1 = chain.cohomology_stage(1)
    assert dual1.contains((Fraction(1, 3), Fraction(1, 6)))


def test_fit_descriptor_one_dimensional():
    desc = fit_descriptor(OdometerChain.diagonal_power([6]), 3)
    assert desc == SupergroupDescriptor.coordinate([{2, 3}])


def test_fit_descriptor_needs_two_stages():
    with pytest.raises(Exception):
        fit_descriptor(chain32(), 1)


def test_fit_descriptor_random_diagonal_chains():
    import random

    rng = random.Random(5)
    primes = [2, 3, 5, 7]
    for _ in range(10):
        bases = [rng.choice(primes) for _ in range(2)]
        chain = OdometerChain.diagonal_power(bases)
        desc = fit_descriptor(chain, 3)
        assert desc == SupergroupDescriptor.coordinate([{bases[0]}, {bases[1]}])


def test_classifier_argument_order_symmetry():
    # swapping the arguments must not change the verdicts' outcomes
    assert isomorphism_test(H_SHEARED, H_BASE).outcome == "no"
    back = continuous_oe_test(H_SHEARED, H_BASE, denom_bound=2)
    assert back.outcome == "yes"
    alpha = back.witness
    assert abs(alpha[0][0] * alpha[1][1] - alpha[0][1] * alpha[1][0]) == 1


# ---------------------------------------------------------------- conjugacy

def test_conjugate_no_for_sheared_pair():
    verdict = conjugate_test(desc_t=H_BASE, desc_s=H_SHEARED)
    assert verdict.outcome == "no"
    kind, vec = verdict.certificate
    assert kind == "separating vector"
    assert H_SHEARED.member(vec) != H_BASE.member(vec)


def test_conjugate_yes_self():
    verdict = conjugate_test(desc_t=H_BASE, desc_s=H_BASE)
    assert verdict.outcome == "yes"


def test_conjugate_yes_dyadic_derived():
    chain = derived_odometer(staircase_cocycle(), checked_depth=2)
    fitted = fit_descriptor(chain, 4)
    verdict = conjugate_test(desc_t=H_DYADIC, desc_s=fitted)
    assert verdict.outcome == "yes"


def test_conjugate_chains_only_is_depth_bounded():
    verdict = conjugate_test(chain_t=chain32(), chain_s=chain32(), depth=4)
    assert verdict.outcome == "undecided"
    verdict = conjugate_test(chain_t=chain32(), chain_s=chain22(), depth=4)
    assert verdict.outcome == "no"


def test_conjugate_rank_one_special_case():
    # for rank-one chains, equal value groups settle conjugacy exactly
    six = OdometerChain.diagonal_power([6])
    two_three = OdometerChain.diagonal_power([2], [1])
    verdict = conjugate_test(chain_t=six, chain_s=OdometerChain.diagonal_power([6]))
    assert verdict.outcome == "yes"
    assert conjugate_test(chain_t=six, chain_s=two_three).outcome == "no"


def test_conjugate_rank_mismatch():
    one = fit_descriptor(OdometerChain.diagonal_power([6]), 3)
    assert conjugate_test(desc_t=H_BASE, desc_s=one).outcome == "no"


def test_dimension_unsupported():
    big = SupergroupDescriptor.coordinate([{2}, {2}, {2}])
    with pytest.raises(DimensionUnsupported):
        conjugate_test(desc_t=big, desc_s=big)


# ---------------------------------------------------------------- isomorphism

def test_isomorphism_no_with_content_certificate():
    verdict = isomorphism_test(H_BASE, H_SHEARED)
    assert verdict.outcome == "no"
    assert "content 2" in verdict.certificate


def test_isomorphism_yes_self():
    verdict = isomorphism_test(H_BASE, H_BASE)
    assert verdict.outcome == "yes"
    assert verdict.witness == ((1, 0), (0, 1))


def test_isomorphism_finds_coordinate_swap():
    swapped = SupergroupDescriptor.coordinate([{2}, {3}])
    verdict = isomorphism_test(H_BASE, swapped)
    assert verdict.outcome == "yes"
    assert verdict.witness in (((0, 1), (1, 0)), ((0, -1), (-1, 0)), ((0, 1), (-1, 0)), ((0, -1), (1, 0)))


# ---------------------------------------------------------------- continuous OE

def test_continuous_oe_yes_with_halfshear():
    verdict = continuous_oe_test(H_BASE, H_SHEARED, denom_bound=2)
    assert verdict.outcome == "yes"
    alpha = verdict.witness
    assert abs(alpha[0][0] * alpha[1][1] - alpha[0][1] * alpha[1][0]) == 1
    # the half-shear matrix works; the search must return a verified one
    assert any(e.denominator == 2 for row in alpha for e in row)


def test_continuous_oe_yes_self():
    assert continuous_oe_test(H_BASE, H_BASE).outcome == "yes"


def test_continuous_oe_no_forced_singular():
    verdict = continuous_oe_test(H_BASE, H_DYADIC)
    assert verdict.outcome == "no"
    assert "singular" in verdict.certificate or "zero matrix" in verdict.certificate


# ---------------------------------------------------------------- orbit equivalence

def test_orbit_equivalence_cross_dimension():
    verdict = orbit_equivalence_test(chain32(), OdometerChain.diagonal_power([6]))
    assert verdict.outcome == "yes"


def test_orbit_equivalence_self():
    assert orbit_equivalence_test(chain32(), chain32()).outcome == "yes"


def test_orbit_equivalence_no_with_witness():
    verdict = orbit_equivalence_test(chain32(), chain22())
    assert verdict.outcome == "no"
    _, witness = verdict.certificate
    assert witness == Fraction(1, 3)


# ---------------------------------------------------------------- implication lattice

def _verdicts_for_pair(desc_a, desc_b, chain_a, chain_b):
    return {
        "conjugate": conjugate_test(desc_t=desc_a, desc_s=desc_b),
        "isomorphic": isomorphism_test(desc_a, desc_b) if desc_a.dim == desc_b.dim <= 2 else None,
        "coe": continuous_oe_test(desc_a, desc_b),
        "oe": orbit_equivalence_test(chain_a, chain_b),
    }


def test_implication_lattice_on_catalog():
    derived_shear = derived_odometer(row_shear_cocycle(), checked_depth=2)
    derived_stairs = derived_odometer(staircase_cocycle(), checked_depth=2)
    catalog = [
        (H_BASE, H_SHEARED, chain32(), derived_shear),
        (H_DYADIC, fit_descriptor(derived_stairs, 4), chain22(), derived_stairs),
        (H_BASE, H_DYADIC, chain32(), chain22()),
        (H_BASE, H_BASE, chain32(), chain32()),
        (H_DYADIC, H_DYADIC, chain22(), chain22()),
    ]
    order = ["conjugate", "isomorphic", "coe", "oe"]
    for a, b, ca, cb in catalog:
        verdicts = _verdicts_for_pair(a, b, ca, cb)
        seen_yes = False
        for name in reversed(order):  # weakest to strongest
            v = verdicts[name]
            if v is None:
                continue
            if v.outcome == "no":
                assert not seen_yes, f"implication violated at {name}"
            if name != "oe" and v.outcome == "yes" and verdicts["oe"].outcome != "undecided":
                assert verdicts["oe"].outcome == "yes"
        stronger_yes = verdicts["conjugate"].outcome == "yes"
        if stronger_yes:
            assert verdicts["isomorphic"].outcome == "yes"
            assert verdicts["coe"].outcome == "yes"
            assert verdicts["oe"].outcome == "yes"
