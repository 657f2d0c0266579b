"""Conserved operator families, covariance nullspaces, operator algebra."""

import itertools
import math

import numpy as np
import pytest

import paircond as pc
from paircond.conserved import commutator, family_span_rank, q_coefficient
from paircond.fock import BOSON, FERMION, basis
from paircond.pairs import natural_pair_matrix, random_pair_matrix, uniform_pair_matrix


def L_count(n, stat):
    return n * (n + 1) // 2 + 1 if stat is FERMION else n * (n - 1) // 2 + 1


# ----------------------------------------------------------------------
# q-operator families
# ----------------------------------------------------------------------


def test_family_sizes():
    rng = np.random.default_rng(30)
    assert len(pc.q_ops(random_pair_matrix(4, FERMION, rng))) == 10
    assert len(pc.q_ops(random_pair_matrix(4, BOSON, rng))) == 6


@pytest.mark.parametrize("stat,n,mmax", [(FERMION, 6, 3), (FERMION, 8, 4),
                                         (BOSON, 4, 3)])
def test_family_annihilates_condensates(stat, n, mmax):
    rng = np.random.default_rng(31)
    a = random_pair_matrix(n, stat, rng)
    fam = pc.q_ops(a)
    for m in range(1, mmax + 1):
        st, _ = pc.build_condensate(a, m)
        for k in range(len(fam)):
            assert fam.operator(k, st.basis).apply(st).norm() < 1e-10


def test_inverse_family_annihilates_and_spans():
    rng = np.random.default_rng(32)
    for stat, n in ((FERMION, 4), (BOSON, 4)):
        a = random_pair_matrix(n, stat, rng)
        fam = pc.q_ops(a)
        famb = pc.qbar_ops(a)
        for m in (1, 2):
            st, _ = pc.build_condensate(a, m)
            for k in range(len(famb)):
                assert famb.operator(k, st.basis).apply(st).norm() < 1e-10
        L = len(fam)
        assert family_span_rank(fam) == L
        assert family_span_rank(famb) == L
        assert family_span_rank(fam, famb) == L


def test_uniform_inverse_family_proportional():
    # the inverse matrix permutes conjugate modes, so each member of the
    # inverse family is proportional to some member of the direct family
    a0 = uniform_pair_matrix(4, FERMION)
    fam = pc.q_ops(a0)
    famb = pc.qbar_ops(a0)
    for k in range(len(famb)):
        hits = 0
        for l in range(len(fam)):
            stack = np.stack([famb.coeffs[k].reshape(-1),
                              fam.coeffs[l].reshape(-1)])
            if np.linalg.matrix_rank(stack, tol=1e-10) == 1:
                hits += 1
        assert hits == 1


def test_qbar_singular_rejected():
    from paircond.pairs import natural_pair_matrix_padded
    a = pc.PairMatrix.from_matrix(
        natural_pair_matrix_padded([1.0], 4, FERMION), FERMION)
    with pytest.raises(pc.RankError):
        pc.qbar_ops(a)


# ----------------------------------------------------------------------
# commutator algebra
# ----------------------------------------------------------------------


def test_algebra_uniform_fermion_exhaustive():
    rep = pc.verify_commutator_algebra(uniform_pair_matrix(4, FERMION))
    assert rep["checked"] == 4 ** 4
    assert rep["ok"] and rep["max_residual"] <= 1e-12


def test_algebra_random_instances():
    rng = np.random.default_rng(33)
    for stat, n in ((BOSON, 3), (FERMION, 4), (BOSON, 4), (FERMION, 6)):
        rep = pc.verify_commutator_algebra(random_pair_matrix(n, stat, rng))
        assert rep["ok"], rep


def test_algebra_diagonal_case_consistent():
    # i=j=k=l: both sides vanish identically for bosons and reduce
    # consistently for fermions
    rng = np.random.default_rng(34)
    a = random_pair_matrix(4, FERMION, rng)
    i = 2
    q = q_coefficient(a.mat, i, i, FERMION)
    lhs = commutator(q, q)
    assert np.abs(lhs).max() < 1e-14


# ----------------------------------------------------------------------
# scaled SU(2) structures
# ----------------------------------------------------------------------


def test_fermion_su2_triads():
    rng = np.random.default_rng(35)
    a = random_pair_matrix(6, FERMION, rng)
    cf = pc.canonical_decompose(a)
    ops = pc.su2_scaled_ops(cf)
    for sp, sm, sz in ops["pair"].values():
        assert np.abs(commutator(sp, sm) - 2 * sz).max() < 1e-10
        assert np.abs(commutator(sz, sp) - sp).max() < 1e-10
        assert np.abs(commutator(sz, sm) + sm).max() < 1e-10
    for sp, sm, sz in ops["bar"].values():
        assert np.abs(commutator(sp, sm) - 2 * sz).max() < 1e-10
        assert np.abs(commutator(sz, sp) - sp).max() < 1e-10
    for sp, sm, sz in ops["diagonal"].values():
        assert np.abs(commutator(sp, sm) - 2 * sz).max() < 1e-10


def test_su2_operator_identities_on_sectors():
    # commutators hold as sparse-operator identities, not only on paper
    rng = np.random.default_rng(36)
    a = random_pair_matrix(6, FERMION, rng)
    cf = pc.canonical_decompose(a)
    ops = pc.su2_scaled_ops(cf)
    sp, sm, sz = ops["pair"][(0, 1)]
    for number in (2, 3):
        b = basis(6, number, FERMION)
        op_p = pc.build_one_body(sp, b)
        op_m = pc.build_one_body(sm, b)
        op_z = pc.build_one_body(sz, b)
        lhs = (op_p @ op_m - op_m @ op_p).to_dense()
        assert np.abs(lhs - 2 * op_z.to_dense()).max() < 1e-10


def test_condensate_is_spin_zero():
    # S+ S- kills the natural-basis condensate for every level pair
    rng = np.random.default_rng(37)
    sig = np.abs(rng.standard_normal(3)) + 0.3
    sig /= np.linalg.norm(sig)
    a = natural_pair_matrix(sig, FERMION)
    cf = pc.canonical_decompose(a)
    # use the canonical sigmas directly: basis already natural
    ops = pc.su2_scaled_ops(pc.CanonicalForm(FERMION, 6, sig, np.eye(6)))
    st, _ = pc.build_condensate(a, 2)
    for sp, sm, sz in ops["pair"].values():
        v = pc.build_one_body(sm, st.basis).apply(st)
        v = pc.build_one_body(sp, st.basis).apply(v)
        assert v.norm() < 1e-10


def test_boson_triads_and_integer_spectrum():
    rng = np.random.default_rng(38)
    a = random_pair_matrix(4, BOSON, rng)
    cf = pc.canonical_decompose(a)
    ops = pc.su2_scaled_ops(cf)
    eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
           (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}
    for triad in ops["triads"].values():
        for (u, v, w), sgn in eps.items():
            lhs = commutator(triad[u], triad[v])
            assert np.abs(lhs - 1j * sgn * triad[w]).max() < 1e-10
    # integer eigenvalues on the two-boson sector
    b = basis(4, 2, BOSON)
    qt = ops["qtilde"][(0, 1)]
    evals = np.linalg.eigvals(pc.build_one_body(qt, b).to_dense())
    assert np.abs(evals.imag).max() < 1e-8
    assert np.abs(evals.real - np.round(evals.real)).max() < 1e-8
    assert set(np.round(evals.real).astype(int)) <= {-2, -1, 0, 1, 2}


def test_su2_rejects_zero_sigma():
    with pytest.raises(pc.RankError):
        pc.su2_scaled_ops(pc.CanonicalForm(FERMION, 4,
                                           np.array([0.5, 0.0]), np.eye(4)))


# ----------------------------------------------------------------------
# covariance nullspaces and conserved counts
# ----------------------------------------------------------------------


@pytest.mark.parametrize("stat", [FERMION, BOSON])
@pytest.mark.parametrize("n", [4, 6])
def test_one_body_covariance_nullspace_on_condensates(stat, n):
    rng = np.random.default_rng(39)
    mrange = range(1, n // 2) if stat is FERMION else range(1, 4)
    for m in mrange:
        a = random_pair_matrix(n, stat, rng)
        st, _ = pc.build_condensate(a, m)
        res = pc.nullspace(pc.covariance_C11(st))
        assert res.dimension == L_count(n, stat)
        assert res.gap_ratio > 1e3
        cnt = pc.conserved_count(st, "one_body")
        assert cnt.dimension == L_count(n, stat)


def test_random_state_single_conserved_operator():
    rng = np.random.default_rng(40)
    for stat, n, N in ((FERMION, 8, 4), (BOSON, 4, 4)):
        b = basis(n, N, stat)
        amp = rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim)
        st = pc.StateVector(b, amp).normalized()
        assert pc.nullspace(pc.covariance_C11(st)).dimension == 1
        assert pc.conserved_count(st, "one_body").dimension == 1


def test_joint_nullspace_recovers_condensate():
    # states annihilated by the whole family with fixed N form a line
    # through the condensate
    from paircond.conserved import common_null_states
    rng = np.random.default_rng(41)
    for stat, n, m in ((FERMION, 6, 2), (BOSON, 4, 2)):
        a = random_pair_matrix(n, stat, rng)
        fam = pc.q_ops(a)
        b = basis(n, 2 * m, stat)
        null = common_null_states(fam, b)
        assert null.shape[1] == 1
        st, _ = pc.build_condensate(a, m)
        assert abs(abs(np.vdot(null[:, 0], st.amplitudes)) - 1.0) < 1e-9


def test_pair_conservation_counts():
    rng = np.random.default_rng(42)
    # m = 1: all pair annihilators orthogonal to A survive
    for stat, n in ((FERMION, 4), (BOSON, 3)):
        a = random_pair_matrix(n, stat, rng)
        st, _ = pc.build_condensate(a, 1)
        npairs = n * (n - 1) // 2 if stat is FERMION else n * (n + 1) // 2
        assert pc.conserved_count(st, "pair_annih").dimension == npairs - 1
    # m >= 2: none survive in either class
    for stat, n, m in ((FERMION, 8, 2), (BOSON, 4, 2), (BOSON, 4, 3)):
        a = random_pair_matrix(n, stat, rng)
        st, _ = pc.build_condensate(a, m)
        assert pc.conserved_count(st, "pair_annih").dimension == 0
        assert pc.conserved_count(st, "pair_crea").dimension == 0


def test_two_body_matrix_strictly_positive_for_two_pairs():
    rng = np.random.default_rng(43)
    for stat, n, m in ((FERMION, 8, 2), (BOSON, 6, 2), (BOSON, 5, 3)):
        for _ in range(10):
            a = random_pair_matrix(n, stat, rng)
            st, _ = pc.build_condensate(a, m)
            dms = pc.reduced_dms(st)
            assert np.linalg.eigvalsh(dms.rho2).min() > 1e-12


def test_hole_side_pair_creation_count():
    # at m = n/2 - 1 the conserved pair creation operators mirror the
    # m = 1 annihilation count through the particle-hole map
    rng = np.random.default_rng(44)
    n = 6
    a = random_pair_matrix(n, FERMION, rng)
    st, _ = pc.build_condensate(a, n // 2 - 1)
    cnt = pc.conserved_count(st, "pair_crea")
    assert cnt.dimension == n * (n - 1) // 2 - 1


def test_boson_creation_covariance_positive_definite():
    rng = np.random.default_rng(45)
    for n, N in ((4, 4), (3, 5)):
        b = basis(n, N, BOSON)
        amp = rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim)
        st = pc.StateVector(b, amp).normalized()
        assert np.linalg.eigvalsh(pc.covariance_C02(st)).min() > 1e-10


# ----------------------------------------------------------------------
# structured-family counts
# ----------------------------------------------------------------------


def test_paired_state_counts():
    rng = np.random.default_rng(46)
    n, m = 8, 2
    gam = {cfg: rng.standard_normal() + 1j * rng.standard_normal()
           for cfg in itertools.product((0, 1), repeat=4) if sum(cfg) == m}
    st = pc.build_paired_state(gam, n, FERMION)
    assert pc.conserved_count(st, "one_body").dimension == 3 * n // 2 + 1
    gam_b = {cfg: rng.standard_normal() + 1j * rng.standard_normal()
             for cfg in itertools.product(range(m + 1), repeat=4)
             if sum(cfg) == m}
    st_b = pc.build_paired_state(gam_b, n, BOSON)
    assert pc.conserved_count(st_b, "one_body").dimension == n // 2 + 1


def test_ghz_counts():
    n = 8
    g_f = pc.build_ghz_state(n, 1 / math.sqrt(2), 1 / math.sqrt(2), FERMION)
    assert pc.conserved_count(g_f, "one_body").dimension == n * n // 2 - 1
    g_b = pc.build_ghz_state(n, 0.6, 0.8, BOSON)
    assert pc.conserved_count(g_b, "one_body").dimension == n - 1


def test_group_state_counts():
    rng = np.random.default_rng(47)
    # fermions: partition (2, 2, 2, 2) of n = 8, N = 4; every group's
    # occupation varies independently over the two-subset configurations
    groups = [[0, 1], [2, 3], [4, 5], [6, 7]]
    gam = {}
    for cfg in itertools.product((0, 1), repeat=4):
        if sum(2 * c for c in cfg) == 4:
            gam[cfg] = rng.standard_normal() + 1j * rng.standard_normal()
    st = pc.build_group_state(groups, gam, 8, FERMION)
    expected = 4 * (4 - 1) + 1
    assert pc.conserved_count(st, "one_body").dimension == expected
    # a two-group partition where the halves fuse reproduces the
    # generalized-GHZ count
    ghz_groups = [[0, 1, 2, 3], [4, 5, 6, 7]]
    gam2 = {(1, 0): 0.6, (0, 1): 0.8}
    st2 = pc.build_group_state(ghz_groups, gam2, 8, FERMION)
    assert pc.conserved_count(st2, "one_body").dimension == 8 * 8 // 2 - 1
    # fully occupied single group: all n^2 one-body operators conserved
    sea = pc.build_group_state([[0, 1, 2, 3]], {(1,): 1.0}, 4, FERMION)
    assert pc.conserved_count(sea, "one_body").dimension == 16
    # bosons: partition (2, 2, 4), N = 4, count n - d + 1
    bgroups = [[0, 1], [2, 3], [4, 5, 6, 7]]
    gam_b = {}
    for cfg in itertools.product(range(3), repeat=3):
        if 2 * cfg[0] + 2 * cfg[1] + 4 * cfg[2] == 4:
            gam_b[cfg] = rng.standard_normal() + 1j * rng.standard_normal()
    st_b = pc.build_group_state(bgroups, gam_b, 8, BOSON)
    assert pc.conserved_count(st_b, "one_body").dimension == 8 - 3 + 1


def test_boson_degenerate_pair_condensate_recovers_full_count():
    # sigmas in degenerate pairs: the paired bosonic condensate has the
    # full one-body count again
    sig = np.array([0.7, 0.7, 0.4, 0.4])
    sig = sig / np.linalg.norm(sig)
    a = natural_pair_matrix(sig, BOSON)
    st, _ = pc.build_condensate(a, 2)
    assert pc.conserved_count(st, "one_body").dimension == L_count(4, BOSON)
