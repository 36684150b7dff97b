
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from rqclab import rng as rngmod
from rqclab.bits import BitString
from rqclab.errors import CapacityError, InputError
from rqclab.f2walk import (
    F2Matrix, clifford_size_bound, conjugate_zstring, embed, enumerate_group, exact_walk_distribution,
    first_nonvacuous_k, generators, gl2_order, lemma1_bound, lemma1_certificate, local_group,
    sample_sigma_step, site_histogram, tv_curve, tv_distance, walk_spectral_gap, zstring_distribution,
    zstring_uniformity,
)


@pytest.fixture(scope="module")
def g3():
    return enumerate_group(3)


def test_local_group():
    grp = local_group()
    assert len(grp) == 6
    assert grp[0] == F2Matrix.identity(2)
    assert all(g.inverse() in grp for g in grp)
    assert all(a @ b in grp for a in grp for b in grp)


def test_singular_rejected():
    with pytest.raises(InputError):
        F2Matrix.from_lists([[1, 1], [1, 1]])


def test_cnot_conjugation_table():
    cx = F2Matrix.cnot(2, 1, 2)
    assert str(conjugate_zstring(cx, "10")) == "10"
    assert str(conjugate_zstring(cx, "01")) == "11"
    assert str(conjugate_zstring(F2Matrix.identity(3), "101")) == "101"
    assert conjugate_zstring(cx, "00").value == 0


def test_conjugation_against_explicit_diagonal():
    # U|x> = |Mx>, so (U Z^y U^dag)|Mx> = p_y(x)|Mx>
    g = rngmod.generator(11, "misc")
    n = 4
    xs = np.arange(1 << n)
    for _ in range(50):
        m = F2Matrix.identity(n)
        for _ in range(6):
            m = sample_sigma_step(n, g) @ m
        y = int(g.integers(0, 1 << n))
        yp = conjugate_zstring(m, y).value
        perm = m.permutation()
        lhs = np.empty(1 << n, dtype=int)
        lhs[perm] = 1 - 2 * (np.bitwise_count(xs & y) & 1)
        rhs = 1 - 2 * (np.bitwise_count(xs & yp) & 1)
        assert np.array_equal(lhs, rhs)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_conjugation_homomorphism(n, seed):
    g = np.random.default_rng(seed)
    m1 = sample_sigma_step(n, g) @ sample_sigma_step(n, g)
    m2 = sample_sigma_step(n, g) @ sample_sigma_step(n, g)
    y = int(g.integers(0, 1 << n))
    assert conjugate_zstring(m1 @ m2, y) == conjugate_zstring(m1, conjugate_zstring(m2, y))


def test_orbit_is_all_nonzero_strings():
    for n in (2, 3, 4):
        for y in range(1, 1 << n):
            seen, frontier = {y}, [y]
            while frontier:
                cur = frontier.pop()
                for s in generators(n):
                    nxt = conjugate_zstring(s, BitString(cur, n)).value
                    if nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
            assert seen == set(range(1, 1 << n))


@pytest.mark.parametrize("n,order,diam", [(2, 6, 1), (3, 168, 3)])
def test_enumerate_group(n, order, diam):
    t = enumerate_group(n)
    assert t.order == order == gl2_order(n) and t.diameter == diam
    assert t.order <= 2 ** (2 * n * n + 2 * n)


def test_group_closure(g3):
    idx = g3.index
    for a in g3.elements[:20]:
        assert a.inverse() in idx
        for b in g3.elements:
            assert a @ b in idx


@pytest.mark.slow
def test_gl4_order():
    assert enumerate_group(4).order == 20160


def test_enumerate_capacity():
    with pytest.raises(CapacityError):
        enumerate_group(5)


def test_clifford_size_bound():
    assert clifford_size_bound(3) >= 168


def test_walk_distributions(g3):
    g2 = enumerate_group(2)
    d0 = exact_walk_distribution(g3, 0)
    assert d0.probs[g3.identity_index()] == 1.0
    assert tv_distance(d0, 3).tv == pytest.approx(1 - 1 / 168)
    d1 = exact_walk_distribution(g2, 1)
    np.testing.assert_allclose(d1.probs, 1 / 6, atol=1e-15)
    assert tv_distance(exact_walk_distribution(g3, 200), 3).tv < 1e-9


def test_tv_monotone_and_bounded(g3):
    curve = tv_curve(g3, range(0, 120))
    tvs = [r.tv for r in curve]
    assert all(b <= a + 1e-15 for a, b in zip(tvs, tvs[1:]))
    assert all(r.holds for r in curve)
    assert all(r.bound_vacuous for r in curve)


def test_lemma1_bound_values():
    k0 = first_nonvacuous_k(3)
    assert lemma1_bound(3, k0) <= 1.0 < lemma1_bound(3, k0 - 1)
    assert k0 == 1010605
    assert lemma1_bound(3, 2000 * 3 ** 7) <= 2.0 ** -3


@pytest.mark.parametrize("n", [2, 3])
def test_lemma1_certificate(n):
    cert = lemma1_certificate(enumerate_group(n))
    assert cert.holds
    assert cert.tv_at_k0 <= cert.bound_at_k0


def test_spectral_gap(g3):
    g2 = walk_spectral_gap(enumerate_group(2))
    assert g2.gap == pytest.approx(1.0, abs=1e-12)
    g = walk_spectral_gap(g3)
    assert g.symmetric and g.doubly_stochastic
    assert g.gap >= 1 / (500 * 3 ** 5)
    assert 0.3 < g.gap < 0.4


def test_zstring_exact():
    n = 3
    p = zstring_distribution(n, 0)
    assert p[0b100] == 1.0
    z0 = zstring_uniformity(n, 0)
    assert z0.tv == pytest.approx(1 - 1 / 7)
    assert zstring_uniformity(n, 200).tv < 0.01
    assert z0.nonzero_vs_all == 2.0 ** -n
    assert zstring_distribution(n, 7)[0] == 0.0


def test_zstring_sampled_matches_exact():
    ex = zstring_uniformity(4, 3).tv
    sm = zstring_uniformity(4, 3, mode="sampled", trials=40000, seed=2)
    assert abs(ex - sm.tv) < 0.03


def test_site_histogram_uniform():
    h = site_histogram(5, 50_000, seed=1)
    assert chisquare(h).pvalue > 1e-4


def test_embed_matches_cnot():
    cx = F2Matrix.from_lists([[1, 0], [1, 1]])
    assert embed(cx, 0, 1, 3) == F2Matrix.cnot(3, 1, 2)
    assert embed(cx, 2, 0, 3) == F2Matrix.cnot(3, 3, 1)


def test_transpose_inverse_roundtrip(g3):
    for m in g3.elements[::7]:
        assert m @ m.inverse() == F2Matrix.identity(3)
        assert m.transpose().transpose() == m
        assert F2Matrix.from_lists(m.to_lists()) == m
        assert len(set(m.permutation())) == 8
