"""Hamiltonians with pair condensates as exact eigenstates or ground states.

Builders for the conserved quadratic Hamiltonian H_Q, the general
conserved two-body operator, the explicit pairing forms in the natural
basis, the pair-number operator M_A with its positive-semidefinite
partner H_A = M - M_A, the dual-operator Hamiltonian, and the attractive
pairing models whose ground state becomes an exact condensate at the
critical couplings g_c = eps_eff/(m-1) and its dual partner g'_c.

Index convention: quadratic forms in the conserved operators are summed
over *all* ordered index pairs with the prefactor 1/8, which reproduces
H_A = M - M_A exactly (sums restricted to unordered pairs absorb the
factor two into the interaction matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import (
    BOSON,
    FERMION,
    FockBasis,
    SectorError,
    SparseOperator,
    Statistics,
    basis,
    build_one_body,
    build_pair_creation,
    identity_operator,
    pair_indices,
    zero_operator,
)
from .pairs import CanonicalForm, PairMatrix, RankError, dual, natural_pair_matrix
from .conserved import q_coefficient, qbar_coefficient


# ----------------------------------------------------------------------
# commutator closed form and pair-number operator
# ----------------------------------------------------------------------


def commutator_with_adjoint(a: PairMatrix) -> tuple[float, np.ndarray]:
    """[A, A^dag] = const + one-body: returns (1.0, h) with the operator
    being 1 -+ sum_ab (A^dag A)_ab c^dag_b c_a, i.e. h = -+ (A^dag A)^T."""
    k = (a.mat.conj().T @ a.mat).T
    return 1.0, -a.statistics.upper_sign * k


def pair_ladder_product(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """A^dag A as a sparse operator on a fixed sector."""
    below = basis(sector.n, sector.number - 2, sector.statistics)
    if below.dim == 0 or sector.number < 2:
        return zero_operator(sector, sector)
    up = build_pair_creation(a.mat, below)      # N-2 -> N
    return up @ up.dagger()


def m_A_op(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """Pair-number operator A^dag A - (1/2)(M - 1)([A, A^dag] - 1).

    On every even sector its largest eigenvalue is the pair number m = N/2,
    reached exactly on the condensate built from A.
    """
    if not a.normalized:
        raise ValueError("pair-number operator expects a normalized pair matrix")
    const, h = commutator_with_adjoint(a)
    scal = 0.5 * (sector.number / 2.0 - 1.0)
    return pair_ladder_product(a, sector) - scal * build_one_body(h, sector)


def h_A(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """Positive-semidefinite M - M_A; annihilates every condensate of A."""
    m_hat = identity_operator(sector) * (sector.number / 2.0)
    return m_hat - m_A_op(a, sector)


def h_A_from_q(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """(1/8) sum over all ij of Q_ij^dag Q_ij; equals :func:`h_A` entrywise."""
    n = a.n
    acc = zero_operator(sector, sector)
    for i in range(n):
        for j in range(n):
            q = build_one_body(q_coefficient(a.mat, i, j, a.statistics), sector)
            acc = acc + q.dagger() @ q
    return 0.125 * acc


# ----------------------------------------------------------------------
# conserved quadratic Hamiltonians
# ----------------------------------------------------------------------


def pair_space_identity(n: int, statistics: Statistics) -> np.ndarray:
    """Symmetrizer Pi on the exchange symmetry of the conserved operators.

    Q_ij = +Q_ji for fermions and -Q_ji for bosons (opposite to the pair
    matrix), so valid interaction matrices are symmetric (fermions) or
    antisymmetric (bosons) in each index pair; Pi is the projector onto
    that subspace and plays the role of the identity interaction.
    """
    s = statistics.upper_sign
    eye = np.eye(n)
    t = 0.5 * (np.einsum("ik,jl->ijkl", eye, eye)
               + s * np.einsum("il,jk->ijkl", eye, eye))
    return t.reshape(n * n, n * n)


def check_interaction_symmetry(v: np.ndarray, n: int, statistics: Statistics,
                               tol: float = 1e-10) -> None:
    s = statistics.upper_sign
    t = v.reshape(n, n, n, n)
    scale = max(1.0, float(np.abs(v).max()))
    if (np.abs(t - s * t.transpose(1, 0, 2, 3)).max() > tol * scale
            or np.abs(t - s * t.transpose(0, 1, 3, 2)).max() > tol * scale
            or np.abs(v - v.conj().T).max() > tol * scale):
        raise ValueError("interaction matrix lacks the required pair symmetry")


def level_interaction(v_levels: np.ndarray, n: int,
                      statistics: Statistics) -> np.ndarray:
    """Pair-diagonal interaction whose strength depends only on levels.

    In the natural basis (fermionic conjugate pairs (2k, 2k+1), bosonic
    level = mode) this is the diagonal choice that collapses the quadratic
    Hamiltonian to the explicit pairing forms.
    """
    v_levels = np.asarray(v_levels, dtype=float)
    if statistics is FERMION:
        lev = [i // 2 for i in range(n)]
    else:
        lev = list(range(n))
    s = statistics.upper_sign
    out = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i * n + j, i * n + j] += 0.5 * v_levels[lev[i], lev[j]]
            out[i * n + j, j * n + i] += 0.5 * s * v_levels[lev[i], lev[j]]
    return out


def random_interaction(n: int, statistics: Statistics, rng, *,
                       definite: bool = True) -> np.ndarray:
    """Random Hermitian interaction with the pair symmetries.

    With ``definite=True`` the matrix is positive definite on the
    (anti)symmetric pair subspace, which makes the quadratic Hamiltonian
    positive semidefinite with the condensate as ground state.
    """
    d = n * n
    w = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if definite:
        w = w @ w.conj().T / d + np.eye(d)
    else:
        w = 0.5 * (w + w.conj().T)
    pi = pair_space_identity(n, statistics)
    return pi @ w @ pi


def h_Q(a: PairMatrix, v: np.ndarray, sector: FockBasis) -> SparseOperator:
    """Conserved quadratic Hamiltonian (1/8) sum V_{ij,i'j'} Q_ij^dag Q_i'j'.

    ``v`` is an n^2 x n^2 Hermitian matrix with the pair symmetries
    (checked).  Every condensate of A is annihilated; if V is positive
    definite on the pair subspace the condensate is the nondegenerate
    in-sector ground state.  ``v = pair_space_identity(...)`` gives H_A.
    """
    n = a.n
    v = np.asarray(v, dtype=complex)
    if v.shape != (n * n, n * n):
        raise ValueError("interaction must be n^2 x n^2")
    check_interaction_symmetry(v, n, a.statistics)
    qops = {}
    for i in range(n):
        for j in range(n):
            qops[(i, j)] = build_one_body(
                q_coefficient(a.mat, i, j, a.statistics), sector)
    acc = zero_operator(sector, sector)
    for i in range(n):
        for j in range(n):
            qd = qops[(i, j)].dagger()
            for k in range(n):
                for l in range(n):
                    coeff = v[i * n + j, k * n + l]
                    if coeff != 0:
                        acc = acc + coeff * (qd @ qops[(k, l)])
    return 0.125 * acc


def h_Q_general(a: PairMatrix, h_coeffs: np.ndarray | None,
                o_list: list[np.ndarray], v_coeffs: np.ndarray | None,
                sector: FockBasis) -> SparseOperator:
    """General conserved two-body operator sum h_ij Q_ij + sum V_{mu,ij} O_mu Q_ij.

    ``h_coeffs`` is n x n (term sum_ij h_ij Q_ij), ``o_list`` holds one-body
    coefficient matrices O_mu and ``v_coeffs`` has shape (len(o_list), n, n).
    The result annihilates every condensate of A regardless of the inputs.
    """
    n = a.n
    acc = zero_operator(sector, sector)
    if h_coeffs is not None:
        h_coeffs = np.asarray(h_coeffs, dtype=complex)
        hsum = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                if h_coeffs[i, j] != 0:
                    hsum += h_coeffs[i, j] * q_coefficient(a.mat, i, j,
                                                           a.statistics)
        acc = acc + build_one_body(hsum, sector)
    if v_coeffs is not None:
        v_coeffs = np.asarray(v_coeffs, dtype=complex)
        if v_coeffs.shape != (len(o_list), n, n):
            raise ValueError("v_coeffs must have shape (len(o_list), n, n)")
        for mu, o_mu in enumerate(o_list):
            hsum = np.zeros((n, n), dtype=complex)
            for i in range(n):
                for j in range(n):
                    if v_coeffs[mu, i, j] != 0:
                        hsum += v_coeffs[mu, i, j] * q_coefficient(
                            a.mat, i, j, a.statistics)
            o_op = build_one_body(np.asarray(o_mu, complex), sector)
            acc = acc + o_op @ build_one_body(hsum, sector)
    return acc


def h_bar(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """Dual-operator Hamiltonian, positive semidefinite with the same
    condensates as zero modes:
    (1/2)(M -+ n/2 - 1)([Abar, Abar^dag] - 1) - Abar^dag Abar,
    with the dual normalized to unit vacuum norm.
    """
    d = dual(a, normalize=True)
    _, h = commutator_with_adjoint(d)
    up = a.statistics.upper_sign
    scal = 0.5 * (sector.number / 2.0 - up * a.n / 2.0 - 1.0)
    return scal * build_one_body(h, sector) - pair_ladder_product(d, sector)


def h_bar_from_qbar(a: PairMatrix, sector: FockBasis) -> SparseOperator:
    """(1/8) sum over all ij of Qbar_ij^dag Qbar_ij with normalized scaling.

    The inverse matrix is scaled by 2/n and the dual normalization so the
    family matches the unit-vacuum-norm dual operator of :func:`h_bar`.
    """
    dmat = (2.0 / a.n) * np.linalg.inv(a.mat.conj().T)
    scale = math.sqrt(0.5 * np.sum(np.abs(dmat) ** 2))
    a_inv = (2.0 / a.n) * np.linalg.inv(a.mat) / scale
    n = a.n
    acc = zero_operator(sector, sector)
    for i in range(n):
        for j in range(n):
            q = build_one_body(qbar_coefficient(a_inv, i, j, a.statistics),
                               sector)
            acc = acc + q.dagger() @ q
    return 0.125 * acc


# ----------------------------------------------------------------------
# explicit pairing forms in the natural basis
# ----------------------------------------------------------------------


def h_pairing_fermion(sigmas, v_levels: np.ndarray,
                      sector: FockBasis) -> SparseOperator:
    """Natural-basis fermionic pairing Hamiltonian with level couplings V_kl.

    Modes (2k, 2k+1) form conjugate level pairs.  The single-particle
    energies eps_k = sum_{l != k} V_kl sigma_l^2 are assembled internally;
    the condensate with coefficients ``sigmas`` is a zero eigenstate, and
    the ground state whenever all V_kl > 0.
    """
    sig = np.asarray(sigmas, dtype=float)
    nl = sig.size
    n = 2 * nl
    if sector.n != n or sector.statistics is not FERMION:
        raise SectorError("sector does not match the level structure")
    v = np.asarray(v_levels, dtype=float)
    if v.shape != (nl, nl) or not np.allclose(v, v.T):
        raise ValueError("level couplings must be a symmetric real matrix")
    eps = np.array([sum(v[k, l] * sig[l] ** 2 for l in range(nl) if l != k)
                    for k in range(nl)])
    # diagonal part: eps_k n_k + (3/4) V_kk sigma_k^2 (n_k - n_kbar)^2
    #                - (1/2) sum_{k!=l} V_kl (sigma_k^2+sigma_l^2) n_k n_l
    occ = sector.occs.astype(float)
    nk = 0.5 * (occ[:, 0::2] + occ[:, 1::2])
    dk = occ[:, 0::2] - occ[:, 1::2]
    diag = nk @ eps + 0.75 * (dk ** 2) @ (np.diag(v) * sig ** 2)
    for k in range(nl):
        for l in range(nl):
            if k != l:
                diag -= 0.5 * v[k, l] * (sig[k] ** 2 + sig[l] ** 2) \
                    * nk[:, k] * nk[:, l]
    import scipy.sparse as sp
    acc = SparseOperator(sector, sector,
                         sp.diags(diag.astype(complex)).tocsr())
    # pair hopping: -(1/2) sum_{k != l} V_kl sigma_k sigma_l (P+_k P_l + h.c.)
    for k in range(nl):
        for l in range(nl):
            if k == l or v[k, l] == 0:
                continue
            src, tgt, amp, tb = sector.pair_ann_map(2 * l, 2 * l + 1)
            mid = tb
            src2, tgt2, amp2, _ = mid.pair_crea_map(2 * k, 2 * k + 1)
            import scipy.sparse as sp2
            low = sp2.coo_matrix((amp, (tgt, src)),
                                 shape=(mid.dim, sector.dim)).tocsr()
            up = sp2.coo_matrix((amp2, (tgt2, src2)),
                                shape=(sector.dim, mid.dim)).tocsr()
            hopop = SparseOperator(sector, sector, (up @ low).tocsr())
            acc = acc + (-1.0 * v[k, l] * sig[k] * sig[l]) * hopop
    return acc


def h_pairing_boson(sigmas, v_levels: np.ndarray,
                    sector: FockBasis) -> SparseOperator:
    """Natural-basis bosonic analogue with squared-mode pair transfer."""
    sig = np.asarray(sigmas, dtype=float)
    n = sig.size
    if sector.n != n or sector.statistics is not BOSON:
        raise SectorError("sector does not match the level structure")
    v = np.asarray(v_levels, dtype=float)
    if v.shape != (n, n) or not np.allclose(v, v.T):
        raise ValueError("level couplings must be a symmetric real matrix")
    eps = np.array([sum(v[k, l] * sig[l] ** 2 for l in range(n) if l != k)
                    for k in range(n)])
    occ = sector.occs.astype(float)
    diag = 0.5 * occ @ eps
    for k in range(n):
        for l in range(n):
            if k != l:
                diag += 0.25 * v[k, l] * (sig[k] ** 2 + sig[l] ** 2) \
                    * occ[:, k] * occ[:, l]
    import scipy.sparse as sp
    acc = SparseOperator(sector, sector,
                         sp.diags(diag.astype(complex)).tocsr())
    # -(1/4) sum_{k != l} V_kl sigma_k sigma_l (b+_k^2 b_l^2 + h.c.)
    for k in range(n):
        for l in range(n):
            if k == l or v[k, l] == 0:
                continue
            src, tgt, amp, tb = sector.pair_ann_map(l, l)
            mid = tb
            src2, tgt2, amp2, _ = mid.pair_crea_map(k, k)
            low = sp.coo_matrix((amp, (tgt, src)),
                                shape=(mid.dim, sector.dim)).tocsr()
            up = sp.coo_matrix((amp2, (tgt2, src2)),
                               shape=(sector.dim, mid.dim)).tocsr()
            acc = acc + (-0.5 * v[k, l] * sig[k] * sig[l]) \
                * SparseOperator(sector, sector, (up @ low).tocsr())
    return acc


# ----------------------------------------------------------------------
# model Hamiltonians and critical couplings
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Pairing-model data: level coefficients, energies, coupling.

    ``sigmas`` are the normalized Schmidt coefficients (n values for
    bosons, n/2 for fermions, whose sp space holds n modes in conjugate
    pairs); ``eps`` are the level energies entering the number terms and
    ``g >= 0`` multiplies the attractive pair interaction -g A^dag A.
    """

    statistics: Statistics
    n: int
    sigmas: np.ndarray
    eps: np.ndarray
    g: float
    m: int

    def __post_init__(self):
        sig = np.asarray(self.sigmas, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        nl = self.n // 2 if self.statistics is FERMION else self.n
        if sig.size != nl or eps.size != nl:
            raise ValueError(f"need {nl} level coefficients/energies")
        if abs(np.sum(sig ** 2) - 1.0) > 1e-10:
            raise ValueError("sigmas must be normalized")
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "eps", eps)


@dataclass(frozen=True)
class ModelSystem:
    """A built model: sector operator plus its generating pair matrix."""

    operator: SparseOperator
    pair_matrix: PairMatrix
    params: ModelParams


def model_boson(params: ModelParams) -> ModelSystem:
    """H = sum_k eps_k n_k - g A^dag A with A^dag = sum sigma_k b+_k^2/sqrt(2)."""
    if params.statistics is not BOSON:
        raise SectorError("bosonic model requires bosonic parameters")
    sector = basis(params.n, 2 * params.m, BOSON)
    a = natural_pair_matrix(params.sigmas, BOSON)
    h = build_one_body(np.diag(params.eps.astype(complex)), sector)
    op = h - params.g * pair_ladder_product(a, sector)
    return ModelSystem(op, a, params)


def model_fermion(params: ModelParams) -> ModelSystem:
    """H = (1/2) sum_k eps_k (n_k + n_kbar) - g A^dag A on doubled levels."""
    if params.statistics is not FERMION:
        raise SectorError("fermionic model requires fermionic parameters")
    if params.n % 2:
        raise SectorError("fermionic model needs an even number of modes")
    sector = basis(params.n, 2 * params.m, FERMION)
    a = natural_pair_matrix(params.sigmas, FERMION)
    diag = 0.5 * np.repeat(params.eps, 2)
    h = build_one_body(np.diag(diag.astype(complex)), sector)
    op = h - params.g * pair_ladder_product(a, sector)
    return ModelSystem(op, a, params)


def rotate_pair_matrix(a: PairMatrix, u: np.ndarray) -> PairMatrix:
    """Pair matrix in the original basis when modes are rotated by U."""
    return PairMatrix.from_matrix(u @ a.mat @ u.T, a.statistics)


def rotate_one_body(h: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ h @ u.conj().T


def model_fermion_rotated(params: ModelParams, u: np.ndarray) -> ModelSystem:
    """Fermionic pairing model expressed in a rotated single-particle basis."""
    if params.statistics is not FERMION:
        raise SectorError("fermionic model requires fermionic parameters")
    sector = basis(params.n, 2 * params.m, FERMION)
    u = np.asarray(u, dtype=complex)
    if u.shape != (params.n, params.n) or \
            not np.allclose(u.conj().T @ u, np.eye(params.n), atol=1e-10):
        raise ValueError("basis rotation must be an n x n unitary")
    a = rotate_pair_matrix(natural_pair_matrix(params.sigmas, FERMION), u)
    diag = np.diag(0.5 * np.repeat(params.eps, 2).astype(complex))
    h = build_one_body(rotate_one_body(diag, u), sector)
    op = h - params.g * pair_ladder_product(a, sector)
    return ModelSystem(op, a, params)


def model_mixed(p: float, h1: SparseOperator, h2: SparseOperator,
                ) -> SparseOperator:
    """(1 - p) H1 + p H2 for two pairing models on the same sector."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("mixing parameter must lie in [0, 1]")
    if h1.basis_in is not h2.basis_in or h1.basis_out is not h2.basis_out:
        raise SectorError("mixed model requires operators on the same sector")
    return (1.0 - p) * h1 + p * h2


def critical_couplings(params: ModelParams, *, rtol: float = 1e-10,
                       ) -> tuple[float, float]:
    """(g_c, g'_c) for proportional spectra eps_k = c sigma_k^2.

    g_c = |c|/(m-1) makes the condensate of A the exact ground state;
    the dual condensate appears at g'_c = g_c (m-1)/(n/2 + m - 1) for
    bosons and g'_c = g_c (m-1)/(n/2 - (m-1)) for fermions (with the
    opposite sign of the single-particle spectrum).
    """
    if params.m < 2:
        raise ValueError("critical couplings need at least two pairs")
    ratios = params.eps / params.sigmas ** 2
    spread = float(np.max(ratios) - np.min(ratios))
    if spread > rtol * max(1.0, float(np.max(np.abs(ratios)))):
        raise ValueError("level energies are not proportional to sigma^2; "
                         "critical-coupling formulas do not apply")
    eps_eff = abs(float(np.mean(ratios)))
    g_c = eps_eff / (params.m - 1)
    if params.statistics is BOSON:
        g_prime = g_c * (params.m - 1) / (params.n / 2 + params.m - 1)
    else:
        half_levels = params.n / 2
        g_prime = g_c * (params.m - 1) / (half_levels - (params.m - 1))
    return g_c, g_prime


# ----------------------------------------------------------------------
# two-body operator coefficient algebra (for span comparisons)
# ----------------------------------------------------------------------


def product_coefficients(h1: np.ndarray, h2: np.ndarray,
                         statistics: Statistics) -> tuple[np.ndarray, np.ndarray]:
    """Normal-ordered coefficients of (sum h1 c+c)(sum h2 c+c).

    Returns (one_body, packed_two_body): the product equals
    sum (h1 h2)_ij c+_i c_j -+ sum h1_ab h2_wv c+_a c+_w c_b c_v with the
    two-body part expressed over packed pair operators g_p^dag g_q.
    """
    n = h1.shape[0]
    one = h1 @ h2
    s = statistics.upper_sign
    pairs = pair_indices(n, statistics)
    pos = {pq: k for k, pq in enumerate(pairs)}
    npairs = len(pairs)
    two = np.zeros((npairs, npairs), dtype=complex)
    t = -s * np.einsum("ab,wv->awbv", h1, h2)  # coeff of c+_a c+_w c_b c_v
    for a_ in range(n):
        for w in range(n):
            if statistics is FERMION and a_ == w:
                continue
            # creation pair -> packed index and scale
            if a_ < w:
                pc, sc_c = pos[(a_, w)], 1.0
            elif a_ > w:
                pc, sc_c = pos[(w, a_)], statistics.pair_sign
            else:
                pc, sc_c = pos[(a_, a_)], math.sqrt(2.0)
            for b_ in range(n):
                for v in range(n):
                    coeff = t[a_, w, b_, v]
                    if coeff == 0:
                        continue
                    if statistics is FERMION and b_ == v:
                        continue
                    # annihilation pair c_b c_v -> packed g
                    if b_ < v:
                        pa, sc_a = pos[(b_, v)], statistics.pair_sign
                    elif b_ > v:
                        pa, sc_a = pos[(v, b_)], 1.0
                    else:
                        pa, sc_a = pos[(b_, b_)], math.sqrt(2.0)
                    two[pc, pa] += coeff * sc_c * sc_a
    return one, two


@dataclass
class TwoBodyCoefficientSpace:
    """Flat coordinates (constant, one-body, packed two-body) for
    number-conserving two-body operators on n modes."""

    n: int
    statistics: Statistics
    pairs: list[tuple[int, int]] = field(init=False)

    def __post_init__(self):
        self.pairs = pair_indices(self.n, self.statistics)

    @property
    def size(self) -> int:
        p = len(self.pairs)
        return 1 + self.n ** 2 + p * p

    def vector(self, const: complex = 0.0, one: np.ndarray | None = None,
               two: np.ndarray | None = None) -> np.ndarray:
        p = len(self.pairs)
        out = np.zeros(self.size, dtype=complex)
        out[0] = const
        if one is not None:
            out[1:1 + self.n ** 2] = np.asarray(one, complex).reshape(-1)
        if two is not None:
            out[1 + self.n ** 2:] = np.asarray(two, complex).reshape(-1)
        return out

    def apply_to_state(self, vec: np.ndarray, state) -> np.ndarray:
        """Amplitudes of (operator with these coefficients)|state>."""
        b = state.basis
        n, p = self.n, len(self.pairs)
        out = vec[0] * state.amplitudes.copy()
        one = vec[1:1 + n * n].reshape(n, n)
        for i in range(n):
            for j in range(n):
                if one[i, j] != 0:
                    src, tgt, amp, _ = b.transfer_map(i, j)
                    if src.size:
                        out[tgt] += one[i, j] * amp * state.amplitudes[src]
        two = vec[1 + n * n:].reshape(p, p)
        if np.any(two):
            below = basis(b.n, b.number - 2, b.statistics)
            phi = np.zeros((below.dim, p), dtype=complex)
            for q, (i, j) in enumerate(self.pairs):
                src, tgt, amp, _ = b.pair_ann_map(i, j)
                if src.size:
                    scale = 1.0 / math.sqrt(2.0) if i == j else 1.0
                    phi[tgt, q] = scale * amp * state.amplitudes[src]
            mixed = phi @ two.T    # column p: sum_q two[p, q] g_q |psi>
            for pidx, (i, j) in enumerate(self.pairs):
                src, tgt, amp, _ = below.pair_crea_map(i, j)
                if src.size:
                    scale = 1.0 / math.sqrt(2.0) if i == j else 1.0
                    out[tgt] += scale * amp * mixed[src, pidx]
        return out

    def number_op(self) -> np.ndarray:
        return self.vector(one=np.eye(self.n))

    def number_sq(self) -> np.ndarray:
        one, two = product_coefficients(np.eye(self.n), np.eye(self.n),
                                        self.statistics)
        return self.vector(one=one, two=two)


def _gram_rank(rows: np.ndarray, rtol: float) -> tuple[int, np.ndarray]:
    """Rank of a stack of row vectors via its Gram matrix eigenvalues.

    The cutoff is ``rtol`` relative to the top Gram eigenvalue, i.e.
    singular values below sqrt(rtol) of the largest are treated as zero;
    integer ranks of structured operator stacks show gaps of many orders
    on both sides of this line.
    """
    g = rows @ rows.conj().T
    evals = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
    top = float(evals.max(initial=0.0))
    rank = int(np.sum(evals > rtol * max(top, 1.0)))
    return rank, np.sqrt(np.clip(evals, 0.0, None))[::-1]


def _two_body_basis_matrices(sector: FockBasis) -> list[np.ndarray]:
    """Dense sector matrices of {1, c+_i c_j, g_p^dag g_q} in order."""
    import scipy.sparse as sp
    n = sector.n
    dim = sector.dim
    pairs = pair_indices(n, sector.statistics)
    mats = [np.eye(dim, dtype=complex)]
    for i in range(n):
        for j in range(n):
            src, tgt, amp, _ = sector.transfer_map(i, j)
            m = np.zeros((dim, dim), dtype=complex)
            if src.size:
                m[tgt, src] = amp
            mats.append(m)
    below = basis(n, sector.number - 2, sector.statistics)
    downs = []
    for (i, j) in pairs:
        src, tgt, amp, _ = sector.pair_ann_map(i, j)
        d = np.zeros((below.dim, dim), dtype=complex)
        if src.size:
            scale = 1.0 / math.sqrt(2.0) if i == j else 1.0
            d[tgt, src] = scale * amp
        downs.append(d)
    for p in range(len(pairs)):
        up = downs[p].conj().T
        for q in range(len(pairs)):
            mats.append(up @ downs[q])
    return mats


def annihilator_dimension_direct(a: PairMatrix, m: int, *,
                                 rtol: float = 1e-8) -> tuple[int, np.ndarray]:
    """Sector dimension of two-body annihilators of the condensate,
    modulo operators proportional to the identity on the sector.

    Works with operators *as they act on the 2m-particle sector*; the
    count is rank{sector matrices} - rank{T |psi>}.  On a fixed sector the
    span of {1, N, N^2} collapses to the identity, which never annihilates
    the state, so no further quotient remains.
    """
    from .pairs import build_condensate
    state, _ = build_condensate(a, m)
    sector = state.basis
    mats = _two_body_basis_matrices(sector)
    stack = np.stack([mm.reshape(-1) for mm in mats])
    r_mats, sv_mats = _gram_rank(stack, rtol)
    phi = np.stack([mm @ state.amplitudes for mm in mats])
    r_orbit, _ = _gram_rank(phi, rtol)
    return r_mats - r_orbit, sv_mats


def conserved_family_rank(a: PairMatrix, m: int, *, rtol: float = 1e-8,
                          ) -> tuple[int, np.ndarray]:
    """Sector rank of the conserved family span, modulo the identity.

    Stacks the 2m-sector matrices of {Q_ij} and {c+_a c_b Q_ij} together
    with the identity and returns rank - 1; by the structure theorem for
    conserved two-body operators this equals the direct annihilator count.
    """
    n = a.n
    sector = basis(n, 2 * m, a.statistics)
    dim = sector.dim
    qmats = []
    for i in range(n):
        for j in range(i, n):
            q = q_coefficient(a.mat, i, j, a.statistics)
            if np.any(q):
                qmats.append(build_one_body(q, sector).to_dense())
    hops = []
    for a_ in range(n):
        for b_ in range(n):
            src, tgt, amp, _ = sector.transfer_map(a_, b_)
            h = np.zeros((dim, dim), dtype=complex)
            if src.size:
                h[tgt, src] = amp
            hops.append(h)
    rows = [np.eye(dim, dtype=complex).reshape(-1)]
    rows.extend(q.reshape(-1) for q in qmats)
    for h in hops:
        for q in qmats:
            rows.append((h @ q).reshape(-1))
    rank, svals = _gram_rank(np.stack(rows), rtol)
    return rank - 1, svals
