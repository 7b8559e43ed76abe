import pytest

from odolab.repro import CASES, UnknownCase, run_repro


@pytest.mark.parametrize("name", sorted(CASES))
def test_case_passes(name):
    report = run_repro(name)
    assert report.ok, "\n".join(report.lines())


def test_reports_carry_provenance():
    report = run_repro("shear-speedup-classification")
    tags = {f.provenance for f in report.facts}
    assert tags <= {"published", "derived", "trivial"}
    assert "published" in tags


def test_runs_are_deterministic():
    a = run_repro("axis-cone-obstruction", seed=7)
    b = run_repro("axis-cone-obstruction", seed=7)
    assert [f.detail for f in a.facts] == [f.detail for f in b.facts]


def test_unknown_case():
    with pytest.raises(UnknownCase):
        run_repro("definitely-not-a-case")
