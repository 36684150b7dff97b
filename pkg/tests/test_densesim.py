import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import kstest

from rqclab import bounds
from rqclab.densesim import (
    StateVector, TwoQubitGate, apply_two_qubit, cauchy_schwarz_check, export_operator, haar_exact_moment,
    haar_floor_ratio, haar_unitaries, half_trace_norm, load_operator, mc_haar_state_moment, mc_moment_operator,
    mc_moment_rqc, moment_op_haar, moment_op_zeta, psd_domination_check, random_state, replay, run_rqc,
    sample_circuit, untouched_frequency, zeta_gate,
)
from rqclab.errors import CapacityError, InputError
from rqclab.rng import generator


def test_haar_gates_unitary_special():
    u = haar_unitaries(generator(0, "haar"), 500)
    err = np.abs(u @ np.conj(np.swapaxes(u, 1, 2)) - np.eye(4)).max()
    assert err < 1e-10
    np.testing.assert_allclose(np.linalg.det(u), 1.0, atol=1e-10)


def test_haar_first_column_distribution():
    # |U_00|^2 of a Haar 4x4 unitary is Beta(1, 3)
    u = haar_unitaries(generator(1, "haar"), 20000, special=False)
    x = np.abs(u[:, 0, 0]) ** 2
    assert kstest(x, "beta", args=(1, 3)).pvalue > 1e-3


def test_gate_validation():
    with pytest.raises(InputError):
        TwoQubitGate(np.ones((4, 4)))
    with pytest.raises(InputError):
        TwoQubitGate(np.eye(2))
    with pytest.raises(InputError):
        StateVector(2, np.ones(4, dtype=complex))


def test_apply_two_qubit_against_kron():
    g = np.random.default_rng(2)
    n = 3
    u = haar_unitaries(g, 1)[0]
    psi = random_state(n, g).amplitudes
    full = np.kron(u, np.eye(2))          # qubits 0,1 (0 is the high bit)
    got = apply_two_qubit(psi[None], u[None], 0, 1, n)[0]
    np.testing.assert_allclose(got, full @ psi, atol=1e-12)
    swap = np.eye(4)[[0, 2, 1, 3]]
    full2 = np.kron(np.eye(2), swap @ u @ swap)   # ordered pair (2, 1)
    got2 = apply_two_qubit(psi[None], u[None], 2, 1, n)[0]
    np.testing.assert_allclose(got2, full2 @ psi, atol=1e-12)


def test_zeta_gates():
    for e in range(6):
        m = zeta_gate("group", e).matrix
        assert np.all((m == 0) | (m == 1))
    r = zeta_gate("rotation", phi=0.3).matrix
    np.testing.assert_allclose(np.diag(r), np.exp(0.3j * np.array([1, 1, -1, -1])))
    with pytest.raises(InputError):
        zeta_gate("other")


def test_run_rqc_basics():
    g = generator(3, "rqc")
    s = run_rqc(4, 0, g)
    assert s.overlap(StateVector.zero(4)) == 1
    long = run_rqc(3, 10_000, g)
    assert abs(np.linalg.norm(long.amplitudes) - 1) < 1e-10
    with pytest.raises(CapacityError):
        run_rqc(13, 1, g)
    with pytest.raises(CapacityError):
        run_rqc(1, 1, g)


def test_replay_reproduces_run():
    state, circuit = run_rqc(4, 40, generator(5, "rqc"), return_circuit=True)
    again = replay(4, circuit)
    np.testing.assert_allclose(again.amplitudes, state.amplitudes, atol=1e-13)
    assert len(sample_circuit(3, 0, generator(0, "rqc"))) == 0


def test_mc_rqc_small_cases():
    assert mc_moment_rqc(3, 0, 2, "zero", trials=20).estimate == 1.0
    psi = random_state(2, np.random.default_rng(4))
    assert mc_moment_rqc(2, 1, 1, psi, trials=6000, seed=1).within(0.25)
    assert mc_moment_rqc(2, 60, 2, "zero", trials=6000, seed=2).within(0.1)


def test_mc_rqc_decreasing_in_depth():
    vals = [mc_moment_rqc(3, d, 1, "zero", trials=1500, seed=6).estimate for d in (0, 2, 6, 20)]
    assert all(b <= a + 0.02 for a, b in zip(vals, vals[1:]))


def test_haar_exact_moment():
    assert haar_exact_moment(4, 1) == Fraction(1, 4)
    assert haar_exact_moment(4, 2) == Fraction(1, 10)
    assert haar_exact_moment(4, 3) == Fraction(1, 20)
    assert mc_haar_state_moment(4, 2, 20000, seed=0).within(0.1)
    ratios = [haar_floor_ratio(n, 3) for n in range(10, 21)]
    assert all(r < 1 for r in ratios)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert 1 - ratios[-1] < 1e-5


@pytest.mark.parametrize("t", [1, 2])
def test_operators(t):
    mh, mz = moment_op_haar(t).matrix, moment_op_zeta(t).matrix
    assert np.abs(mh @ mh - mh).max() < 1e-9
    assert round(np.trace(mh)) == math.factorial(t)
    assert moment_op_zeta(t).hermitian_error() < 1e-12
    ev = np.linalg.eigvalsh(mz)
    assert ev[0] > -1e-10 and abs(ev[-1] - 1) < 1e-10
    assert np.abs(mz @ mz - mz).max() > 1e-3
    assert np.abs(mz @ mh - mh).max() < 1e-8


def test_t1_invariant_vector():
    vec_id = np.eye(4).reshape(16)      # sum_i |i>|i>
    mz = moment_op_zeta(1).matrix
    np.testing.assert_allclose(mz @ vec_id, vec_id, atol=1e-14)


@pytest.mark.parametrize("t,tol", [(1, 0.08), (2, 0.3)])
def test_mc_operator_matches_exact(t, tol):
    assert np.linalg.norm(mc_moment_operator(t, 10_000, seed=1) - moment_op_haar(t).matrix) < tol
    z = mc_moment_operator(t, 10_000, seed=1, measure="zeta")
    assert np.linalg.norm(z - moment_op_zeta(t).matrix) < tol


@pytest.mark.parametrize("t", [1, 2])
def test_psd_domination(t):
    c = psd_domination_check(t)
    assert c.holds and c.haar_rank == math.factorial(t) and c.absorption_error < 1e-8


@pytest.mark.slow
def test_psd_domination_t3():
    c = psd_domination_check(3)
    assert c.holds and c.haar_rank == 6


def test_operator_capacity():
    with pytest.raises(CapacityError):
        moment_op_haar(4)


def test_export_roundtrip(tmp_path):
    op = moment_op_zeta(1)
    bin_path, json_path = export_operator(op, tmp_path / "zeta1")
    assert bin_path.stat().st_size == 256 * 16
    back = load_operator(tmp_path / "zeta1")
    assert back.t == 1 and back.measure == "zeta"
    assert np.array_equal(back.matrix, op.matrix)


def test_trace_norm_identity():
    g = np.random.default_rng(7)
    for n in (1, 2, 3):
        for _ in range(10):
            a, b = random_state(n, g), random_state(n, g)
            want = math.sqrt(1 - abs(a.overlap(b)) ** 2)
            assert abs(half_trace_norm(a, b) - want) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cauchy_schwarz(n):
    psi = random_state(n, np.random.default_rng(n))
    assert cauchy_schwarz_check(n, 6, 1, psi, trials=1500, seed=n).holds
    assert cauchy_schwarz_check(n, 6, 2, "zero", trials=1500, seed=n, measure="haar").holds


def test_coupon_consistency():
    for d in (4, 8):
        est = untouched_frequency(4, d, trials=20000, seed=d)
        cb = bounds.coupon_collector(4, d)
        assert est.within(cb.exact)
        assert est.estimate <= cb.coarse_bound + 3 * est.stderr


def test_theorem3_rhs_pieces():
    r = bounds.theorem3_rhs(4, 10, 2)
    assert r.extras["floor"] == pytest.approx(2 / 256, rel=1e-12)
    assert r.vacuous
    far = bounds.theorem3_rhs(4, 1e30, 2)
    assert far.value == pytest.approx(math.sqrt(2 / 256), rel=1e-12)
