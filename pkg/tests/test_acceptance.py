"""Runs every acceptance criterion at its stated size and tolerance.

Each criterion prints one PASS/FAIL line (visible with ``pytest -s`` or in the
``-v`` report via the captured stdout of failures).
"""
import pytest

from rqclab import acceptance, f2walk
from rqclab.bits import BitString


@pytest.mark.parametrize("cid", list(acceptance.CRITERIA))
def test_criterion(cid):
    res = acceptance.CRITERIA[cid](0)
    print(res.line())
    assert res.passed, res.line()


def test_conjugation_check_detects_transpose(monkeypatch):
    def transposed(m, y):
        y = f2walk.as_bitstring(y, m.n)
        return BitString(m.transpose().apply(y.value), m.n)

    monkeypatch.setattr(f2walk, "conjugate_zstring", transposed)
    res = acceptance.p1_conjugation(0)
    print(res.line())
    assert not res.passed


def test_deep_splitting_grid_shape():
    grid = acceptance.deep_splitting_grid()
    assert len(grid) == 100
    assert len({(r.inputs["n"], r.inputs["d"], r.inputs["delta"]) for r in grid}) == 100
