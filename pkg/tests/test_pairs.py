"""Pair matrices, canonical forms, condensates and comparison states."""

import itertools
import math

import numpy as np
import pytest

import paircond as pc
from paircond.fock import BOSON, FERMION, basis
from paircond.pairs import (
    natural_pair_matrix,
    natural_pair_matrix_padded,
    random_pair_matrix,
    uniform_pair_matrix,
)


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ----------------------------------------------------------------------
# canonical decomposition
# ----------------------------------------------------------------------


def test_uniform_sigmas():
    for n in (4, 6, 8):
        cf = pc.canonical_decompose(uniform_pair_matrix(n, FERMION))
        assert np.allclose(cf.sigmas, 1.0 / math.sqrt(n / 2), atol=1e-12)
    for n in (2, 3, 5):
        cf = pc.canonical_decompose(uniform_pair_matrix(n, BOSON))
        assert np.allclose(cf.sigmas, 1.0 / math.sqrt(n), atol=1e-12)


@pytest.mark.parametrize("stat,sizes", [(FERMION, (4, 6, 8, 10)),
                                        (BOSON, (2, 3, 5, 7, 10))])
def test_random_reconstruction_and_singular_values(stat, sizes):
    rng = np.random.default_rng(10)
    for n in sizes:
        for _ in range(50):
            a = random_pair_matrix(n, stat, rng)
            cf = pc.canonical_decompose(a)
            assert cf.residual(a.mat) < 1e-10
            assert np.all(np.diff(cf.sigmas) <= 1e-12)
            assert abs(np.sum(cf.sigmas ** 2) - 1.0) < 1e-10
            # singular-value oracle
            sv = np.linalg.svd(a.mat, compute_uv=False)
            if stat is FERMION:
                assert np.allclose(cf.sigmas, sv[::2], atol=1e-10)
                assert np.allclose(sv[::2], sv[1::2], atol=1e-10)
            else:
                assert np.allclose(cf.sigmas, sv / math.sqrt(2.0), atol=1e-10)
            assert np.allclose(cf.unitary.conj().T @ cf.unitary,
                               np.eye(n), atol=1e-10)


def test_degenerate_sigma_blocks():
    rng = np.random.default_rng(11)
    u = random_unitary(8, rng)
    sig = np.array([0.5, 0.5, 0.4, 0.3])
    sig = sig / np.linalg.norm(sig)
    a = pc.PairMatrix.from_matrix(
        u @ natural_pair_matrix_padded(sig, 8, FERMION) @ u.T, FERMION)
    cf = pc.canonical_decompose(a)
    assert cf.residual(a.mat) < 1e-10
    assert np.allclose(np.sort(cf.sigmas), np.sort(sig), atol=1e-10)
    u = random_unitary(5, rng)
    sig = np.array([0.6, 0.6, 0.6, 0.3, 0.2])
    sig = sig / np.linalg.norm(sig)
    a = pc.PairMatrix.from_matrix(
        u @ natural_pair_matrix_padded(sig, 5, BOSON) @ u.T, BOSON)
    cf = pc.canonical_decompose(a)
    assert cf.residual(a.mat) < 1e-10


def test_rank_deficient_decomposition():
    rng = np.random.default_rng(12)
    u = random_unitary(6, rng)
    j = natural_pair_matrix_padded([0.8, 0.6], 6, FERMION)
    a = pc.PairMatrix.from_matrix(u @ j @ u.T, FERMION)
    cf = pc.canonical_decompose(a)
    assert len(cf.sigmas) == 2
    assert cf.residual(a.mat) < 1e-10


def test_real_symmetric_negative_eigenvalues():
    rng = np.random.default_rng(13)
    m = rng.standard_normal((4, 4))
    a = pc.PairMatrix.from_matrix((m + m.T) / 2 + 0j, BOSON, normalize=True)
    cf = pc.canonical_decompose(a)
    assert cf.residual(a.mat) < 1e-10


def test_zero_matrix_rejected():
    a = pc.PairMatrix.from_matrix(np.zeros((4, 4), complex), FERMION)
    with pytest.raises(ValueError):
        pc.canonical_decompose(a)


# ----------------------------------------------------------------------
# dual operator
# ----------------------------------------------------------------------


def test_dual_uniform_is_self():
    for stat, n in ((FERMION, 6), (BOSON, 4)):
        a0 = uniform_pair_matrix(n, stat)
        d = pc.dual(a0)
        assert np.allclose(d.mat, a0.mat, atol=1e-12)


def test_dual_inverts_sigmas():
    sig = np.array([0.7, 0.5, 0.3])
    sig = sig / np.linalg.norm(sig)
    a = natural_pair_matrix(sig, FERMION)
    d = pc.dual(a)
    cf = pc.canonical_decompose(pc.PairMatrix.from_matrix(
        d.mat, FERMION, normalize=True))
    inv = 1.0 / sig
    inv = inv / np.linalg.norm(inv)
    assert np.allclose(np.sort(cf.sigmas), np.sort(inv), atol=1e-10)


def test_dual_ladder_commutator():
    # [Abar, A^dag] = 1 -+ 2 N/n as a sector-operator identity
    rng = np.random.default_rng(14)
    for stat, n in ((FERMION, 4), (BOSON, 3)):
        a = random_pair_matrix(n, stat, rng)
        d = pc.dual(a)
        up = stat.upper_sign
        for number in range(0, 4):
            b = basis(n, number, stat)
            if b.dim == 0:
                continue
            adag_up = pc.build_pair_creation(a.mat, b)
            dbar_up = pc.build_pair_creation(d.mat, b)
            term1 = dbar_up.dagger() @ adag_up
            below = basis(n, number - 2, stat)
            if below.dim and number >= 2:
                adag_lo = pc.build_pair_creation(a.mat, below)
                dbar_lo = pc.build_pair_creation(d.mat, below)
                term2 = adag_lo @ dbar_lo.dagger()
                comm = term1 - term2
            else:
                comm = term1
            ref = np.eye(b.dim) - up * (2.0 * number / n) * np.eye(b.dim)
            assert np.allclose(comm.to_dense(), ref, atol=1e-10)


def test_dual_singular_rejected():
    a = pc.PairMatrix.from_matrix(
        natural_pair_matrix_padded([1.0], 4, FERMION), FERMION)
    with pytest.raises(pc.RankError):
        pc.dual(a)


# ----------------------------------------------------------------------
# condensates
# ----------------------------------------------------------------------


def test_half_filling_gives_filled_sea():
    rng = np.random.default_rng(15)
    for n in (4, 6):
        a = random_pair_matrix(n, FERMION, rng)
        st, _ = pc.build_condensate(a, n // 2)
        sea = pc.basis_state(basis(n, n, FERMION), [1] * n)
        assert abs(abs(st.overlap(sea)) - 1.0) < 1e-12


def test_uniform_norm_ladder():
    for stat, n, mmax in ((FERMION, 8, 4), (BOSON, 5, 4)):
        a0 = uniform_pair_matrix(n, stat)
        up = stat.upper_sign
        prev = 1.0
        for m in range(1, mmax + 1):
            _, norm2 = pc.build_condensate(a0, m)
            expect = m * (1.0 - up * 2.0 * (m - 1) / n)
            assert abs(norm2 / prev - expect) < 1e-9
            prev = norm2


def test_overfilled_condensate_rejected():
    a = uniform_pair_matrix(4, FERMION)
    with pytest.raises(pc.SectorError):
        pc.build_condensate(a, 3)


def test_hole_equals_particle_construction():
    rng = np.random.default_rng(16)
    for n in (4, 6, 8):
        a = random_pair_matrix(n, FERMION, rng)
        for m in range(0, n // 2 + 1):
            hole = pc.hole_condensate(a, m)
            part, _ = pc.build_condensate(a, m)
            assert abs(abs(hole.overlap(part)) - 1.0) < 1e-10


def test_hole_uniform_matches_direct_application():
    a0 = uniform_pair_matrix(8, FERMION)
    hole = pc.hole_condensate(a0, 2)
    sea = pc.basis_state(basis(8, 8, FERMION), [1] * 8)
    st = sea
    from paircond.fock import apply_pair_annihilation
    for _ in range(2):
        st = apply_pair_annihilation(a0.mat, st)
    st = st.normalized()
    assert abs(abs(hole.overlap(st)) - 1.0) < 1e-12


def test_hole_rejects_bosons():
    with pytest.raises(pc.StatisticsError):
        pc.hole_condensate(uniform_pair_matrix(4, BOSON), 1)


# ----------------------------------------------------------------------
# scaling map and conserved-operator conjugation
# ----------------------------------------------------------------------


def test_scaling_map_identity():
    rng = np.random.default_rng(17)
    sig = np.array([0.8, 0.6])
    sig = sig / np.linalg.norm(sig)
    st, _ = pc.build_condensate(natural_pair_matrix(sig, FERMION), 1)
    mapped = pc.scaling_state_map(sig, sig, st)
    assert abs(abs(mapped.overlap(st)) - 1.0) < 1e-13


@pytest.mark.parametrize("stat", [FERMION, BOSON])
def test_scaling_map_reaches_target_condensate(stat):
    rng = np.random.default_rng(18)
    n = 4
    nlev = n // 2 if stat is FERMION else n
    s_to = np.abs(rng.standard_normal(nlev)) + 0.3
    s_to /= np.linalg.norm(s_to)
    uni = uniform_pair_matrix(n, stat)
    st, _ = pc.build_condensate(uni, 2)
    mapped = pc.scaling_state_map(np.full(nlev, 1 / math.sqrt(nlev)), s_to, st)
    target, _ = pc.build_condensate(natural_pair_matrix(s_to, stat), 2)
    assert abs(abs(mapped.overlap(target)) - 1.0) < 1e-10


def test_conjugated_conserved_operators():
    # members of the q-family of a natural-basis matrix are the scaled
    # images of the uniform family: Q = e^{-h} Q0 e^{h} up to a constant
    sig = np.array([0.7, 0.5, 0.3, 0.2])
    sig = sig / np.linalg.norm(sig)
    n = 8
    a = natural_pair_matrix(sig, FERMION)
    a0 = uniform_pair_matrix(n, FERMION)
    fam = pc.q_ops(a)
    fam0 = pc.q_ops(a0)
    mode_sig = np.repeat(sig, 2)
    for k, (i, j) in enumerate(fam.labels):
        h0 = fam0.coeffs[k]
        conj = h0 * np.sqrt(np.outer(mode_sig, 1.0 / mode_sig))
        ratio_mat = fam.coeffs[k] / np.where(np.abs(conj) > 1e-14, conj, 1.0)
        vals = ratio_mat[np.abs(conj) > 1e-14]
        assert np.allclose(vals, vals[0], atol=1e-10)


def test_scaling_map_rejects_zero_sigma():
    st, _ = pc.build_condensate(uniform_pair_matrix(4, FERMION), 1)
    with pytest.raises(pc.RankError):
        pc.scaling_state_map([0.5, 0.0], [0.5, 0.5], st)


# ----------------------------------------------------------------------
# comparison families
# ----------------------------------------------------------------------


def test_paired_state_recovers_condensate():
    rng = np.random.default_rng(19)
    n, m = 6, 2
    sig = np.abs(rng.standard_normal(3)) + 0.2
    sig /= np.linalg.norm(sig)
    gam = {}
    for cfg in itertools.product((0, 1), repeat=3):
        if sum(cfg) == m:
            gam[cfg] = np.prod([s ** c for s, c in zip(sig, cfg)])
    ps = pc.build_paired_state(gam, n, FERMION)
    cond, _ = pc.build_condensate(natural_pair_matrix(sig, FERMION), m)
    assert abs(abs(ps.overlap(cond)) - 1.0) < 1e-12


def test_paired_single_configuration_is_slater():
    ps = pc.build_paired_state({(1, 1, 0): 1.0}, 6, FERMION)
    sd = pc.basis_state(basis(6, 4, FERMION), [1, 1, 1, 1, 0, 0])
    assert abs(abs(ps.overlap(sd)) - 1.0) < 1e-13


def test_paired_state_inconsistent_counts():
    with pytest.raises(pc.SectorError):
        pc.build_paired_state({(1, 0, 0): 1.0, (1, 1, 0): 0.5}, 6, FERMION)


def test_ghz_limits_and_errors():
    g = pc.build_ghz_state(8, 1.0, 0.0, FERMION)
    sd = pc.basis_state(basis(8, 4, FERMION), [1, 1, 1, 1, 0, 0, 0, 0])
    assert abs(abs(g.overlap(sd)) - 1.0) < 1e-13
    with pytest.raises(pc.SectorError):
        pc.build_ghz_state(6, 1 / math.sqrt(2), 1 / math.sqrt(2), FERMION)
    with pytest.raises(ValueError):
        pc.build_ghz_state(8, 0.9, 0.1, FERMION)  # norms do not sum to 1


def test_group_state_single_group_is_filled_sea():
    st = pc.build_group_state([[0, 1, 2, 3]], {(1,): 1.0}, 4, FERMION)
    sea = pc.basis_state(basis(4, 4, FERMION), [1, 1, 1, 1])
    assert abs(abs(st.overlap(sea)) - 1.0) < 1e-13


def test_group_state_partition_checked():
    with pytest.raises(pc.SectorError):
        pc.build_group_state([[0, 1], [1, 2]], {(1, 0): 1.0}, 3, FERMION)


# ----------------------------------------------------------------------
# mixtures
# ----------------------------------------------------------------------


def test_mixture_single_sector():
    rng = np.random.default_rng(20)
    a = random_pair_matrix(6, FERMION, rng)
    mix = pc.mixture_from_amplitudes(a, {2: 1.0})
    assert set(mix.components) == {4}
    assert abs(mix.mean_pairs - 2.0) < 1e-12


def test_exponential_mixture_components_are_condensates():
    rng = np.random.default_rng(21)
    a = random_pair_matrix(6, FERMION, rng)
    mix = pc.mixture_from_exponential(a, 0.7, 3)
    for number, (p, st) in mix.components.items():
        cond, _ = pc.build_condensate(a, number // 2)
        assert abs(abs(st.overlap(cond)) - 1.0) < 1e-12
    assert abs(sum(p for p, _ in mix.components.values()) - 1.0) < 1e-12


def test_mixture_conserved_operator_vanishes():
    # Q_ij has zero mean and zero variance in condensate mixtures
    rng = np.random.default_rng(22)
    a = random_pair_matrix(4, FERMION, rng)
    mix = pc.mixture_from_exponential(a, 0.9, 2)
    fam = pc.q_ops(a)
    for k in range(len(fam)):
        mean = 0.0
        var = 0.0
        for number, (p, st) in mix.components.items():
            op = fam.operator(k, st.basis)
            mean += p * pc.expectation(st, op)
            var += p * pc.expectation(st, op.dagger() @ op).real
        assert abs(mean) < 1e-12
        assert abs(var) < 1e-12


def test_mixture_negative_weight_rejected():
    rng = np.random.default_rng(23)
    a = random_pair_matrix(4, FERMION, rng)
    st1, _ = pc.build_condensate(a, 1)
    st2, _ = pc.build_condensate(a, 2)
    with pytest.raises(ValueError):
        pc.mixture_from_components([(-0.5, st1), (1.5, st2)])


# ----------------------------------------------------------------------
# odd states
# ----------------------------------------------------------------------


def test_odd_create_occupation_structure():
    rng = np.random.default_rng(24)
    a = random_pair_matrix(8, FERMION, rng)
    odd = pc.build_odd_state(a, 2, 1, "create")
    dm = pc.reduced_dms(odd)
    evals = np.sort(np.linalg.eigvalsh(dm.rho1))
    assert abs(evals[-1] - 1.0) < 1e-10
    assert abs(evals[0]) < 1e-10


def test_odd_annihilate_identity():
    # c_i (A^dag)^m |0> equals the A-row orbital created on (A^dag)^{m-1}|0>
    rng = np.random.default_rng(25)
    a = random_pair_matrix(8, FERMION, rng)
    i = 3
    odd = pc.build_odd_state(a, 2, i, "annihilate")
    cond, _ = pc.build_condensate(a, 1)
    out = np.zeros(basis(8, 3, FERMION).dim, complex)
    for k in range(8):
        if a.mat[i, k] != 0:
            src, tgt, amp, tb = cond.basis.crea_map(k)
            out[tgt] += a.mat[i, k] * amp * cond.amplitudes[src]
    ref = pc.StateVector(basis(8, 3, FERMION), out).normalized()
    assert abs(abs(odd.overlap(ref)) - 1.0) < 1e-10


def test_odd_vanishing_rejected():
    a = uniform_pair_matrix(4, FERMION)
    with pytest.raises(pc.SectorError):
        pc.build_odd_state(a, 2, 0, "create")  # sector already filled
