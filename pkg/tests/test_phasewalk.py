import math
from fractions import Fraction

import numpy as np
import pytest

from rqclab import densesim
from rqclab.bits import BitString
from rqclab.errors import InputError
from rqclab.f2walk import F2Matrix
from rqclab.phasewalk import (
    AuxStep, DiagonalRotation, PhaseVector, apply_f2_perm, apply_rotation, block_statistics,
    exact_moment_ideal, ideal_spectrum, mc_moment_aux, mc_moment_ideal, permutation_floor,
    plus_overlap, run_aux_steps, sample_aux_steps, sample_ideal_trace, trace_from_json, trace_to_json,
)
from rqclab.rng import generator


def pv(*phases):
    n = int(math.log2(len(phases)))
    return PhaseVector(n, np.array(phases, dtype=float))


def test_rotation_examples():
    s = apply_rotation(pv(0.0, 0.0), DiagonalRotation(BitString(1, 1), 0.3))
    np.testing.assert_allclose(s.phases, [0.3, -0.3])
    g = apply_rotation(pv(0.1, 0.2, 0.3, 0.4), DiagonalRotation(BitString(0, 2), 0.7))
    np.testing.assert_allclose(g.phases, [0.8, 0.9, 1.0, 1.1])
    base = pv(0.1, 0.2, 0.3, 0.4)
    assert abs(plus_overlap(g)) == pytest.approx(abs(plus_overlap(base)))
    rot = DiagonalRotation(BitString(3, 2), 1.3)
    back = apply_rotation(apply_rotation(base, rot), DiagonalRotation(rot.y, -1.3))
    np.testing.assert_allclose(back.phases, base.phases, atol=1e-15)


def test_f2_perm_examples():
    s = pv(1.0, 2.0, 3.0, 4.0)
    assert np.array_equal(apply_f2_perm(s, F2Matrix.identity(2)).phases, s.phases)
    assert np.array_equal(apply_f2_perm(s, F2Matrix.cnot(2, 1, 2)).phases, [1.0, 2.0, 4.0, 3.0])
    flat = pv(*[0.5] * 8)
    m = F2Matrix.cnot(3, 1, 3) @ F2Matrix.cnot(3, 2, 1)
    assert plus_overlap(apply_f2_perm(flat, m)) == pytest.approx(plus_overlap(flat))
    with pytest.raises(InputError):
        apply_f2_perm(s, F2Matrix.identity(3))


def test_plus_overlap():
    assert plus_overlap(PhaseVector.plus(3)) == 1
    assert plus_overlap(pv(0.4, -0.4)).real == pytest.approx(math.cos(0.4))
    g = np.random.default_rng(0)
    for _ in range(20):
        assert abs(plus_overlap(PhaseVector(4, g.uniform(0, 7, 16)))) <= 1 + 1e-15


def test_phase_vector_shape_checked():
    with pytest.raises(InputError):
        PhaseVector(2, np.zeros(3))


def test_exact_ideal_n1_closed_form():
    for m in range(12):
        assert exact_moment_ideal(1, m, 1) == Fraction(1, 2) + Fraction(1, 2 ** (m + 1))
    assert exact_moment_ideal(1, math.inf, 1) == Fraction(1, 2)
    for n, t in ((1, 2), (2, 1), (2, 3)):
        assert exact_moment_ideal(n, 0, t) == 1


def test_exact_ideal_monotone_and_floored():
    for n, t in ((2, 1), (2, 2), (3, 2)):
        vals = [exact_moment_ideal(n, m, t) for m in range(15)]
        floor = permutation_floor(n, t)
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert all(v >= floor for v in vals)
    # 2^{-8} * #permutation-related pairs vs t!/2^{nt}
    assert permutation_floor(2, 2) == Fraction(28, 256) <= Fraction(2, 16)


def test_mc_ideal_matches_exact():
    assert mc_moment_ideal(1, 1, 1, trials=4000, seed=3).within(0.75)
    assert mc_moment_ideal(2, 0, 2, trials=50, seed=0).estimate == 1.0
    for m in (1, 3, 6):
        est = mc_moment_ideal(2, m, 2, trials=6000, seed=m)
        assert est.within(float(exact_moment_ideal(2, m, 2)))


def test_spectrum_examples():
    s = ideal_spectrum(2, 1)
    assert [q for q in s.eigenvalues if q < 1] == [Fraction(1, 2)]
    s = ideal_spectrum(2, 2)
    assert s.second_highest == Fraction(3, 4) and s.achieved_by_parity
    assert s.gap == Fraction(1, 4)
    assert sum(s.eigenvalues.values()) == 2 ** 8


def test_block_statistics():
    b = block_statistics(8, 1, 3)
    assert b.p_block == pytest.approx(7 / 8, abs=1e-15)
    assert b.p_rotation == 1 - 2 ** -4
    assert not b.claim_holds  # 1/8 > 2^-4
    assert block_statistics(400, 8, 3).claim_holds
    with pytest.raises(InputError):
        block_statistics(3, 1, 2)


def test_trace_json_roundtrip():
    g = generator(4, "misc")
    steps = sample_aux_steps(3, 20, g)
    back = trace_from_json(3, trace_to_json(3, steps))
    assert back == steps
    ideal = sample_ideal_trace(2, 5, g)
    assert trace_from_json(2, trace_to_json(2, ideal)) == ideal


def test_run_aux_steps_replays_dense():
    g = generator(9, "misc")
    steps = sample_aux_steps(3, 30, g)
    ph = run_aux_steps(3, steps)
    sv = densesim.replay(3, steps, "plus")
    np.testing.assert_allclose(sv.amplitudes, ph.amplitudes(), atol=1e-12)


def test_aux_step_kind_checked():
    with pytest.raises(InputError):
        AuxStep(1, "swap")


def test_mc_aux():
    assert mc_moment_aux(3, 0, 2, trials=100, seed=0).estimate == 1.0
    with pytest.raises(InputError):
        mc_moment_aux(1, 5, 1, trials=10)
    aux = mc_moment_aux(2, 50, 1, trials=4000, seed=1)
    dense = densesim.mc_moment_rqc(2, 50, 1, "plus", trials=4000, seed=2, measure="zeta",
                                   initial="plus")
    assert abs(aux.estimate - dense.estimate) <= 3 * math.hypot(aux.stderr, dense.stderr)
    # long walks at n=2 settle near the ideal-walk limit
    limit = float(exact_moment_ideal(2, math.inf, 1))
    far = mc_moment_aux(2, 300, 1, trials=4000, seed=5)
    assert abs(far.estimate - limit) < 0.05


def test_aux_deterministic_across_workers():
    a = mc_moment_aux(3, 20, 2, trials=600, seed=8, workers=1)
    b = mc_moment_aux(3, 20, 2, trials=600, seed=8, workers=3)
    assert a == b
