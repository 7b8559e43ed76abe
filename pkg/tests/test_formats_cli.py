import random
from fractions import Fraction

import pytest

from odolab.classify import SupergroupDescriptor
from odolab.cli import main
from odolab.formats import (
    SpecSyntaxError,
    emit_chain,
    emit_cocycle,
    emit_cone,
    emit_descriptor,
    emit_lattice,
    parse_chain,
    parse_cocycle,
    parse_cone,
    parse_descriptor,
    parse_lattice,
)
from odolab.lattice import IntegerLattice, RationalLattice, SingularBasis
from odolab.odometer import OdometerChain
from odolab.speedup import Cone

from test_speedup import row_shear_cocycle


# ---------------------------------------------------------------- round trips

def test_lattice_literal_round_trip():
    lat = IntegerLattice.from_rows([[3, 2], [0, 2]])
    assert parse_lattice(emit_lattice(lat)) == lat
    rat = RationalLattice.from_scaled_rows(6, [[2, 0], [-2, 3]])
    assert parse_lattice(emit_lattice(rat)) == rat


def test_lattice_literal_random_round_trip():
    rng = random.Random(2)
    for _ in range(40):
        while True:
            try:
                lat = IntegerLattice.from_rows(
                    [[rng.randint(-9, 9) for _ in range(2)] for _ in range(2)]
                )
                break
            except SingularBasis:
                continue
        assert parse_lattice(emit_lattice(lat)) == lat


def test_chain_round_trip():
    diag = OdometerChain.diagonal_power([3, 2])
    again = parse_chain(emit_chain(diag))
    assert again.provider == diag.provider
    expl = OdometerChain.explicit([IntegerLattice.diagonal([2, 2]), IntegerLattice.diagonal([4, 4])])
    again = parse_chain(emit_chain(expl))
    assert again.provider == expl.provider


def test_cocycle_round_trip(tmp_path):
    cocycle = row_shear_cocycle()
    (tmp_path / "mixed.chain").write_text("dim=2 provider=diagpow primes=3,2 exps=j,j")
    text = emit_cocycle(cocycle, "mixed.chain")
    again = parse_cocycle(text, base_dir=tmp_path)
    assert again.tables == cocycle.tables
    assert again.depth == cocycle.depth and again.d2 == cocycle.d2
    assert emit_cocycle(again, "mixed.chain") == text


def test_randomized_round_trips():
    rng = random.Random(44)
    primes = [2, 3, 5, 7]
    for _ in range(25):
        # chains
        d = rng.choice([1, 2, 3])
        bases = [rng.choice(primes) for _ in range(d)]
        coeffs = [rng.choice([1, 1, 2, 3]) for _ in range(d)]
        chain = OdometerChain.diagonal_power(bases, coeffs)
        assert parse_chain(emit_chain(chain)).provider == chain.provider
        # descriptors: the shear denominator must be allowed at its coordinate
        sup2 = set(rng.sample(primes, rng.randint(1, 2)))
        den = rng.choice([1] + [p for p in sup2])
        lam = Fraction(rng.randint(-3, 3), den)
        desc = SupergroupDescriptor.make(
            [[1, 0], [lam, 1]],
            [set(rng.sample(primes, rng.randint(0, 2))), sup2],
        )
        assert parse_descriptor(emit_descriptor(desc)) == desc


def test_randomized_cocycle_round_trip(tmp_path):
    import random as _random

    from odolab.sampling import sample_cocycles

    rng = _random.Random(9)
    chain = OdometerChain.diagonal_power([3, 2])
    (tmp_path / "mixed.chain").write_text("dim=2 provider=diagpow primes=3,2 exps=j,j")
    for cocycle in sample_cocycles(chain, 10, rng):
        text = emit_cocycle(cocycle, "mixed.chain")
        again = parse_cocycle(text, base_dir=tmp_path)
        assert again.tables == cocycle.tables


def test_descriptor_round_trip():
    desc = SupergroupDescriptor.make([[1, 0], [Fraction(-1, 2), 1]], [{3}, {2}])
    assert parse_descriptor(emit_descriptor(desc)) == desc
    plain = SupergroupDescriptor.coordinate([{2, 3}, set()])
    assert parse_descriptor(emit_descriptor(plain)) == plain


def test_cone_round_trip():
    for cone in (
        Cone.quadrant(2),
        Cone.quadrant(3, strict_axes=(1,)),
        Cone.sector((1, 0), (1, 1), include_v=False),
        Cone.sector((3, 1), (3, 1)),
    ):
        assert parse_cone(emit_cone(cone)) == cone


# ---------------------------------------------------------------- errors

def test_syntax_error_carries_position():
    with pytest.raises(SpecSyntaxError) as err:
        parse_lattice("2; 3 x; 0 2")
    assert err.value.line == 1 and err.value.column > 1
    with pytest.raises(SpecSyntaxError):
        parse_chain("dim=2 provider=unknown")
    with pytest.raises(SpecSyntaxError):
        parse_cocycle(
            "chain=unused J=1 d2=1\nnonsense",
            chain=OdometerChain.diagonal_power([2]),
        )


# ---------------------------------------------------------------- CLI

@pytest.fixture()
def specdir(tmp_path):
    (tmp_path / "mixed.chain").write_text("dim=2 provider=diagpow primes=3,2 exps=j,j")
    (tmp_path / "dyadic.chain").write_text("dim=2 provider=diagpow primes=2,2 exps=j,j")
    (tmp_path / "target.chain").write_text("dim=1 provider=diagpow primes=6 exps=j")
    (tmp_path / "base.desc").write_text("dim=2 shear=1,0,0,1 supports=3|2")
    (tmp_path / "sheared.desc").write_text("dim=2 shear=1,0,-1/2,1 supports=3|2")
    (tmp_path / "quad.cone").write_text("cone=quadrant dim=2")
    from odolab.formats import emit_cocycle as emit

    (tmp_path / "rowshear.cocycle").write_text(emit(row_shear_cocycle(), "mixed.chain"))
    return tmp_path


def test_cli_lattice(capsys):
    assert main(["lattice", "hnf", "2; 3 2; 0 2"]) == 0
    assert capsys.readouterr().out.strip() == "2; 3 2; 0 2"
    assert main(["lattice", "dual", "2; 3 2; 0 2"]) == 0
    assert capsys.readouterr().out.strip() == "1/6; 2; 6 2; 0 1"
    assert main(["lattice", "contains", "2; 3 2; 0 2", "--vector", "2,2"]) == 0
    capsys.readouterr()
    assert main(["lattice", "contains", "2; 3 2; 0 2", "--vector", "1,1"]) == 1


def test_cli_odometer(specdir, capsys):
    assert main(["odometer", "stage", str(specdir / "mixed.chain"), "--depth", "2"]) == 0
    assert capsys.readouterr().out.strip() == "2; 9 0; 0 4"
    assert main(["odometer", "value-group", str(specdir / "mixed.chain")]) == 0
    assert "1/2^inf" in capsys.readouterr().out


def test_cli_speedup(specdir, capsys):
    assert main(["speedup", "validate", str(specdir / "rowshear.cocycle")]) == 0
    capsys.readouterr()
    assert main(["speedup", "derive", str(specdir / "rowshear.cocycle"), "--depth", "2"]) == 0
    out = capsys.readouterr().out
    assert "stage 1: 2; 3 2; 0 2" in out
    assert "stage 2: 2; 9 7; 0 4" in out
    assert main(["speedup", "productform", str(specdir / "rowshear.cocycle")]) == 1
    capsys.readouterr()
    assert main(["speedup", "cone", str(specdir / "rowshear.cocycle")]) == 0
    assert "sector" in capsys.readouterr().out


def test_cli_classify_exit_codes(specdir, capsys):
    assert main(["classify", "conj", str(specdir / "base.desc"), str(specdir / "sheared.desc")]) == 1
    capsys.readouterr()
    assert main(["classify", "iso", str(specdir / "base.desc"), str(specdir / "sheared.desc")]) == 1
    capsys.readouterr()
    assert (
        main(["classify", "coe", str(specdir / "base.desc"), str(specdir / "sheared.desc"), "--denom", "2"]) == 0
    )
    capsys.readouterr()
    assert main(["classify", "oe", str(specdir / "mixed.chain"), str(specdir / "target.chain")]) == 0
    capsys.readouterr()
    assert main(["classify", "oe", str(specdir / "mixed.chain"), str(specdir / "dyadic.chain")]) == 1
    capsys.readouterr()
    assert main(["classify", "conj", str(specdir / "mixed.chain"), str(specdir / "mixed.chain")]) == 2
    capsys.readouterr()


def test_cli_construct(specdir, capsys):
    code = main(
        [
            "construct",
            "--source", str(specdir / "mixed.chain"),
            "--target", str(specdir / "target.chain"),
            "--cone", str(specdir / "quad.cone"),
            "--stages", "1",
            "--audit",
        ]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "stage 0" in out and "FAIL" not in out


def test_cli_repro_single(capsys):
    assert main(["repro", "sandwich-lattice-rigidity"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_cli_repro_unknown():
    from odolab.repro import UnknownCase

    with pytest.raises(UnknownCase):
        main(["repro", "no-such-case"])
