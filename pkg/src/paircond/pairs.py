"""Pair-operator matrices, canonical forms, and condensate construction.

A pair creation operator ``A^dag = (1/2) sum_ij A_ij c^dag_i c^dag_j`` is
represented by its coefficient matrix, antisymmetric for fermions and
symmetric for bosons.  This module provides the Schmidt-like canonical
decompositions (Youla form for antisymmetric, Takagi form for symmetric
matrices), the dual pair operator built from the inverse matrix, and the
constructors for condensates ``(A^dag)^m |0>`` together with the
comparison families used throughout: paired states, GHZ-like
superpositions, grouped products, coherent/statistical mixtures and
odd-particle neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fock import (
    BOSON,
    FERMION,
    FockBasis,
    SectorError,
    StateVector,
    Statistics,
    apply_pair_annihilation,
    apply_pair_creation,
    basis,
    basis_state,
    pack_pair_matrix,
    vacuum_state,
)


class RankError(ValueError):
    """Pair matrix is singular where an invertible one is required."""


class StatisticsError(ValueError):
    """Operation not defined for the given statistics."""


class DecompositionError(RuntimeError):
    """Canonical decomposition failed to pair degenerate singular values."""


def _symmetrize(mat: np.ndarray, statistics: Statistics) -> np.ndarray:
    s = statistics.pair_sign
    return 0.5 * (mat + s * mat.T)


@dataclass(frozen=True)
class PairMatrix:
    """Coefficient matrix of a pair creation operator.

    The matrix is stored exactly (anti)symmetric; ``normalized`` matrices
    satisfy (1/2) Tr A^dag A = 1, which makes <0|A A^dag|0> = 1.
    """

    n: int
    statistics: Statistics
    mat: np.ndarray
    normalized: bool = False

    @staticmethod
    def from_matrix(mat, statistics: Statistics, *, normalize: bool = False,
                    atol: float = 1e-12) -> "PairMatrix":
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("pair matrix must be square")
        sym = _symmetrize(mat, statistics)
        if not np.allclose(sym, mat, atol=1e-8 * max(1.0, np.abs(mat).max())):
            raise ValueError("matrix does not have the required (anti)symmetry")
        if normalize:
            nrm = math.sqrt(0.5 * np.sum(np.abs(sym) ** 2))
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero pair matrix")
            sym = sym / nrm
        pm = PairMatrix(mat.shape[0], statistics, sym,
                        abs(0.5 * np.sum(np.abs(sym) ** 2) - 1.0) <= atol)
        pm.mat.setflags(write=False)
        return pm

    @property
    def norm2(self) -> float:
        """(1/2) Tr A^dag A."""
        return float(0.5 * np.sum(np.abs(self.mat) ** 2))

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.linalg.matrix_rank(self.mat, tol=tol))

    def is_full_rank(self, tol: float = 1e-10) -> bool:
        return self.rank(tol) == self.n

    def packed(self) -> np.ndarray:
        return pack_pair_matrix(self.mat, self.statistics)


def random_pair_matrix(n: int, statistics: Statistics, rng) -> PairMatrix:
    """Normalized full-rank-with-probability-one random pair matrix."""
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return PairMatrix.from_matrix(_symmetrize(raw, statistics), statistics,
                                  normalize=True)


def uniform_pair_matrix(n: int, statistics: Statistics) -> PairMatrix:
    """The perfect-ladder pair matrix with all Schmidt coefficients equal."""
    mat = np.zeros((n, n), dtype=complex)
    if statistics is FERMION:
        if n % 2:
            raise ValueError("uniform fermionic pair matrix needs even n")
        sigma = 1.0 / math.sqrt(n / 2)
        for k in range(n // 2):
            mat[2 * k, 2 * k + 1] = sigma
            mat[2 * k + 1, 2 * k] = -sigma
    else:
        sigma = 1.0 / math.sqrt(n)
        np.fill_diagonal(mat, math.sqrt(2.0) * sigma)
    return PairMatrix.from_matrix(mat, statistics)


def natural_pair_matrix(sigmas, statistics: Statistics) -> PairMatrix:
    """Pair matrix in its own natural basis, from Schmidt coefficients."""
    sig = np.asarray(sigmas, dtype=float)
    if statistics is FERMION:
        n = 2 * sig.size
        mat = np.zeros((n, n), dtype=complex)
        for k, s in enumerate(sig):
            mat[2 * k, 2 * k + 1] = s
            mat[2 * k + 1, 2 * k] = -s
    else:
        n = sig.size
        mat = np.diag(math.sqrt(2.0) * sig).astype(complex)
    return PairMatrix.from_matrix(mat, statistics)


# ----------------------------------------------------------------------
# canonical (Schmidt) forms
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalForm:
    """Schmidt data of a pair matrix: A = U J U^T.

    ``sigmas`` are the pair coefficients sorted descending (n/2 values for
    full-rank fermionic matrices, n for bosonic ones; rank-deficient
    matrices yield fewer).  ``unitary`` holds the mode transformation; for
    fermions its columns come in conjugate pairs (k, kbar) = (2k, 2k+1).
    For normalized pair matrices sum_k sigma_k^2 = 1.
    """

    statistics: Statistics
    n: int
    sigmas: np.ndarray
    unitary: np.ndarray

    def natural_matrix(self) -> np.ndarray:
        """The canonical (block-)diagonal coefficient matrix J."""
        return natural_pair_matrix_padded(self.sigmas, self.n, self.statistics)

    def reconstruct(self) -> np.ndarray:
        return self.unitary @ self.natural_matrix() @ self.unitary.T

    def residual(self, a_matrix: np.ndarray) -> float:
        return float(np.linalg.norm(self.reconstruct() - a_matrix))


def natural_pair_matrix_padded(sigmas, n: int, statistics: Statistics) -> np.ndarray:
    sig = np.asarray(sigmas, dtype=float)
    mat = np.zeros((n, n), dtype=complex)
    if statistics is FERMION:
        for k, s in enumerate(sig):
            mat[2 * k, 2 * k + 1] = s
            mat[2 * k + 1, 2 * k] = -s
    else:
        for k, s in enumerate(sig):
            mat[k, k] = math.sqrt(2.0) * s
    return mat


def _group_degenerate(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, current = [], [0]
    for k in range(1, values.size):
        if abs(values[k] - values[current[0]]) <= tol:
            current.append(k)
        else:
            groups.append(np.array(current))
            current = [k]
    groups.append(np.array(current))
    return groups


def _sqrt_symmetric_unitary(c: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric unitary matrix (stays symmetric)."""
    if c.shape[0] == 1:
        return np.sqrt(c.astype(complex))
    t, q = scipy.linalg.schur(c.astype(complex), output="complex")
    root = q @ np.diag(np.sqrt(np.diag(t))) @ q.conj().T
    root = 0.5 * (root + root.T)
    return root


def canonical_decompose(a: PairMatrix, *, degeneracy_rtol: float = 1e-8,
                        rank_tol: float = 1e-12,
                        residual_tol: float = 1e-10) -> CanonicalForm:
    """Schmidt-like canonical form of a pair matrix.

    Fermions: Youla form A = U J U^T with 2x2 blocks [[0, s], [-s, 0]];
    bosons: Takagi form A = U diag(sqrt(2) s) U^T.  Phases are fixed so all
    pair coefficients are real positive, sorted descending.  Raises
    :class:`DecompositionError` when the reconstruction residual exceeds
    ``residual_tol`` (with the degeneracy gap in the message).
    """
    mat = a.mat
    n = a.n
    h = mat.conj().T @ mat
    evals, evecs = np.linalg.eigh(h)
    order = np.argsort(evals)[::-1]
    evecs = evecs[:, order]
    # singular values from the SVD: accurate near zero, unlike sqrt(eigh)
    svals = np.linalg.svd(mat, compute_uv=False)
    smax = svals[0] if svals.size else 0.0
    if smax <= rank_tol:
        raise ValueError("zero pair matrix has no canonical form")
    keep = svals > rank_tol * max(1.0, smax)
    pos_vals = svals[keep]
    pos_vecs = evecs[:, keep]
    null_vecs = evecs[:, ~keep]
    gap_tol = degeneracy_rtol * smax

    sigmas: list[float] = []
    columns: list[np.ndarray] = []
    groups = _group_degenerate(pos_vals, gap_tol)
    for grp in groups:
        s = float(np.mean(pos_vals[grp]))
        p = pos_vecs[:, grp]
        d = p.shape[1]
        # restricted bilinear form; symmetric (bosons) / antisymmetric (fermions)
        m_res = p.T @ mat @ p
        m_res = _symmetrize_exact(m_res, a.statistics)
        c = m_res / s
        if a.statistics is BOSON:
            q = _sqrt_symmetric_unitary(c)
            x = p.conj() @ q
            for col in range(d):
                sigmas.append(s / math.sqrt(2.0))
                columns.append(x[:, col])
        else:
            if d % 2:
                raise DecompositionError(
                    f"odd degeneracy {d} at singular value {s:.6g} "
                    f"(grouping tolerance {gap_tol:.3g})")
            remaining = np.eye(d, dtype=complex)
            for _ in range(d // 2):
                v = remaining[:, 0]
                v = v / np.linalg.norm(v)
                u = c @ v
                ubar = np.conj(u)
                # u-bar must stay inside the block; failure means bad pairing
                proj = remaining @ remaining.conj().T
                if np.linalg.norm(proj @ ubar - ubar) > 1e-6:
                    raise DecompositionError(
                        f"defective degeneracy pairing at singular value "
                        f"{s:.6g} (grouping tolerance {gap_tol:.3g})")
                sigmas.append(s)
                columns.append(p.conj() @ u)
                columns.append(np.conj(p @ v))
                # deflate span{v, u-bar} from the working space
                blockvecs = np.stack([v, ubar], axis=1)
                qb, _ = np.linalg.qr(blockvecs)
                comp = remaining - qb @ (qb.conj().T @ remaining)
                qc, rc = np.linalg.qr(comp)
                keep_cols = np.abs(np.diag(rc)) > 1e-9
                remaining = qc[:, keep_cols]

    u_cols = columns + [np.conj(null_vecs[:, k])
                        for k in range(null_vecs.shape[1])]
    u = np.stack(u_cols, axis=1) if u_cols else np.zeros((n, 0), complex)
    # complete to a full unitary if rank-deficient null handling left gaps
    if u.shape[1] < n:
        proj = np.eye(n, dtype=complex) - u @ u.conj().T
        qc, rc = np.linalg.qr(proj)
        extra = qc[:, np.abs(np.diag(rc)) > 1e-9]
        u = np.concatenate([u, extra[:, : n - u.shape[1]]], axis=1)
    form = CanonicalForm(a.statistics, n, np.asarray(sigmas, float), u)
    resid = form.residual(mat)
    if resid > residual_tol * max(1.0, smax):
        raise DecompositionError(
            f"reconstruction residual {resid:.3e} exceeds tolerance; "
            f"degeneracy grouping tolerance was {gap_tol:.3g}")
    if not np.allclose(u.conj().T @ u, np.eye(n), atol=1e-10):
        raise DecompositionError("mode transformation is not unitary")
    return form


def _symmetrize_exact(mat: np.ndarray, statistics: Statistics) -> np.ndarray:
    s = statistics.pair_sign
    return 0.5 * (mat + s * mat.T)


# ----------------------------------------------------------------------
# dual operator
# ----------------------------------------------------------------------


def dual(a: PairMatrix, *, normalize: bool = False,
         cond_tol: float = 1e12) -> PairMatrix:
    """Pair matrix of the dual annihilation operator.

    The dual of ``A^dag`` is ``(1/n) sum_ij (A^{-1})_ij c_i c_j``; as the
    adjoint of a pair creation operator its coefficient matrix is
    ``(2/n) (A^dag)^{-1}``, which satisfies the ladder commutator
    ``[dual, A^dag] = 1 -+ 2 N/n``.  With ``normalize=True`` the result is
    rescaled to <0|dual dual^dag|0> = 1 instead.
    """
    if np.linalg.cond(a.mat) > cond_tol:
        raise RankError("dual requires a full-rank pair matrix")
    d = (2.0 / a.n) * np.linalg.inv(a.mat.conj().T)
    d = _symmetrize_exact(d, a.statistics)
    return PairMatrix.from_matrix(d, a.statistics, normalize=normalize)


# ----------------------------------------------------------------------
# condensates and comparison states
# ----------------------------------------------------------------------


def build_condensate(a: PairMatrix, m: int) -> tuple[StateVector, float]:
    """Normalized (A^dag)^m |0> and its squared norm <0|A^m A^dag^m|0>."""
    if m < 0:
        raise ValueError("pair count must be non-negative")
    if a.statistics is FERMION and m > a.n // 2:
        raise SectorError(f"(A^dag)^{m} vanishes identically for n={a.n} fermions")
    state = vacuum_state(a.n, a.statistics)
    for _ in range(m):
        state = apply_pair_creation(a.mat, state)
    norm2 = state.norm() ** 2
    if norm2 <= 0.0:
        raise SectorError("condensate construction produced the zero state")
    return state.normalized(), float(norm2)


def hole_condensate(a: PairMatrix, m: int) -> StateVector:
    """Fermionic 2m-particle condensate built as holes on the filled sea.

    Applies the dual annihilation operator n/2 - m times to the fully
    occupied state; up to phase this equals ``build_condensate(a, m)``.
    """
    if a.statistics is not FERMION:
        raise StatisticsError("hole condensates are fermionic")
    if a.n % 2:
        raise SectorError("hole construction needs even n")
    if not 0 <= m <= a.n // 2:
        raise SectorError(f"pair count {m} outside 0..{a.n // 2}")
    d = dual(a)
    full = basis_state(basis(a.n, a.n, FERMION), [1] * a.n)
    state = full
    for _ in range(a.n // 2 - m):
        state = apply_pair_annihilation(d.mat, state)
    if state.norm() == 0.0:
        raise SectorError("hole construction produced the zero state")
    return state.normalized()


def scaling_state_map(sigmas_from, sigmas_to, state: StateVector) -> StateVector:
    """Occupation-weighted rescaling between natural-basis condensates.

    Applies the diagonal similarity transformation whose mode weights are
    sqrt(sigma_to/sigma_from) per occupied particle, then renormalizes.
    Maps the condensate with coefficients ``sigmas_from`` onto the one
    with ``sigmas_to`` when both are expressed in the natural basis.
    """
    s_from = np.asarray(sigmas_from, dtype=float)
    s_to = np.asarray(sigmas_to, dtype=float)
    if np.any(s_from <= 0) or np.any(s_to <= 0):
        raise RankError("scaling map requires strictly positive coefficients")
    b = state.basis
    if b.statistics is FERMION:
        mode_ratio = np.repeat(s_to / s_from, 2)
    else:
        mode_ratio = s_to / s_from
    if mode_ratio.size != b.n:
        raise SectorError("coefficient count does not match the mode count")
    weights = np.prod(mode_ratio[None, :] ** (b.occs.astype(float) / 2.0), axis=1)
    return StateVector(b, state.amplitudes * weights).normalized()


def _ordered_creation_sign(modes: list[int]) -> int:
    """Sign of reordering c^dag_{m1} ... c^dag_{mk} into ascending order."""
    sign = 1
    modes = list(modes)
    for i in range(len(modes)):
        for j in range(i + 1, len(modes)):
            if modes[i] > modes[j]:
                sign = -sign
    return sign


def build_paired_state(gammas: dict, n: int, statistics: Statistics) -> StateVector:
    """Superposition of conjugate-pair occupancies with amplitudes Gamma.

    Keys of ``gammas`` are tuples (m_1 .. m_{n/2}) giving the pair
    occupation of each conjugate level (modes 2k, 2k+1); fermions require
    m_k in {0, 1}, bosons use squared creations on a single mode pair so
    each m_k adds two quanta split across the pair modes.  All keys must
    share the same total pair number.
    """
    if n % 2:
        raise SectorError("paired states need an even number of modes")
    d = n // 2
    totals = {sum(k) for k in gammas}
    if len(totals) != 1:
        raise SectorError("inconsistent pair count across coefficients")
    m = totals.pop()
    b = basis(n, 2 * m, statistics)
    amp = np.zeros(b.dim, dtype=complex)
    for config, coeff in gammas.items():
        if len(config) != d:
            raise SectorError("coefficient key length must be n/2")
        occ = np.zeros(n, dtype=np.uint8)
        weight = 1.0
        for k, mk in enumerate(config):
            if mk < 0 or (statistics is FERMION and mk > 1):
                raise SectorError("invalid pair occupation")
            occ[2 * k] += mk
            occ[2 * k + 1] += mk
            if statistics is BOSON:
                weight *= float(math.factorial(mk))
        amp[b.rank(occ)] += coeff * weight
    state = StateVector(b, amp)
    if state.norm() == 0.0:
        raise SectorError("paired state vanished")
    return state.normalized()


def build_ghz_state(n: int, alpha: complex, beta: complex,
                    statistics: Statistics) -> StateVector:
    """alpha c^dag_1..c^dag_{n/2}|0> + beta c^dag_{n/2+1}..c^dag_n|0>."""
    if n < 8 or n % 2:
        raise SectorError("GHZ-like states are defined for even n >= 8")
    prod = complex(alpha) * complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise ValueError("need |alpha|^2 + |beta|^2 = 1")
    if prod != 0 and (prod.real <= 0 or abs(prod.imag) > 1e-12):
        raise ValueError("alpha beta must be positive (or one coefficient "
                         "zero for the product-state limit)")
    half = n // 2
    b = basis(n, half, statistics)
    amp = np.zeros(b.dim, dtype=complex)
    left = np.array([1] * half + [0] * half, dtype=np.uint8)
    right = np.array([0] * half + [1] * half, dtype=np.uint8)
    amp[b.rank(left)] = alpha
    amp[b.rank(right)] = beta
    return StateVector(b, amp).normalized()


def build_group_state(groups: list[list[int]], gammas: dict, n: int,
                      statistics: Statistics,
                      exponents: list[list[int]] | None = None) -> StateVector:
    """Superposition of products of group creation operators.

    Each group p owns the listed modes and a macro creation operator
    ``A_p^dag = prod_i (c^dag_{p i})^{l_{p i}}`` (fermions: all l = 1,
    occupation exponents m_p in {0, 1}; bosons: integer l >= 1, m_p >= 0).
    ``gammas`` maps tuples (m_1 .. m_d) to coefficients; all keys must
    produce the same total particle number.
    """
    flat = [m for g in groups for m in g]
    if sorted(flat) != list(range(n)):
        raise SectorError("groups must partition the modes 0..n-1")
    d = len(groups)
    if exponents is None:
        exponents = [[1] * len(g) for g in groups]
    if statistics is FERMION:
        for ex in exponents:
            if any(e != 1 for e in ex):
                raise SectorError("fermionic group exponents must be 1")
    totals = set()
    for cfg in gammas:
        totals.add(sum(m * sum(ex) for m, ex in zip(cfg, exponents)))
    if len(totals) != 1:
        raise SectorError("coefficients mix particle numbers")
    number = totals.pop()
    b = basis(n, number, statistics)
    amp = np.zeros(b.dim, dtype=complex)
    for cfg, coeff in gammas.items():
        if len(cfg) != d:
            raise SectorError("coefficient key length must match group count")
        occ = np.zeros(n, dtype=np.uint8)
        weight = complex(coeff)
        if statistics is FERMION:
            modes: list[int] = []
            for p, mp in enumerate(cfg):
                if mp not in (0, 1):
                    raise SectorError("fermionic group occupations are 0/1")
                if mp:
                    modes.extend(groups[p])
            for mmode in modes:
                occ[mmode] = 1
            weight *= _ordered_creation_sign(modes)
        else:
            for p, mp in enumerate(cfg):
                if mp < 0:
                    raise SectorError("negative group occupation")
                for mode, l in zip(groups[p], exponents[p]):
                    occ[mode] += l * mp
            weight *= np.prod([math.sqrt(math.factorial(int(o))) for o in occ])
        amp[b.rank(occ)] += weight
    state = StateVector(b, amp)
    if state.norm() == 0.0:
        raise SectorError("group state vanished")
    return state.normalized()


def build_odd_state(a: PairMatrix, m: int, i: int, mode: str = "create",
                    ) -> StateVector:
    """Odd-particle neighbour of a condensate: c^dag_i (A^dag)^m |0> or
    c_i (A^dag)^m |0>.

    The annihilation variant equals (up to norm) the single-particle state
    ``sum_k A_ik c^dag_k`` created on the (m-1)-pair condensate.
    """
    if a.statistics is not FERMION:
        raise StatisticsError("odd neighbours implemented for fermions")
    cond, _ = build_condensate(a, m)
    b = cond.basis
    if mode == "create":
        src, tgt, amp, tb = b.crea_map(i)
        out = np.zeros(tb.dim, dtype=complex)
        if src.size:
            out[tgt] = amp * cond.amplitudes[src]
        state = StateVector(tb, out)
    elif mode == "annihilate":
        src, tgt, amp, tb = b.ann_map(i)
        out = np.zeros(tb.dim, dtype=complex)
        if src.size:
            out[tgt] = amp * cond.amplitudes[src]
        state = StateVector(tb, out)
    else:
        raise ValueError("mode must be 'create' or 'annihilate'")
    if state.norm() <= 1e-14:
        raise SectorError("odd construction produced the zero state")
    return state.normalized()


# ----------------------------------------------------------------------
# mixtures across particle-number sectors
# ----------------------------------------------------------------------


@dataclass
class MixtureState:
    """Sector-indexed family of normalized states with weights.

    Represents pure superpositions sum_m alpha_m |m>_2 (weights |alpha_m|^2)
    or diagonal ensembles {p_N, |psi_N>}.  Number-conserving averages only
    involve the weights, so both cases share this representation.
    """

    statistics: Statistics
    n: int
    components: dict[int, tuple[float, StateVector]] = field(default_factory=dict)

    def __post_init__(self):
        total = sum(p for p, _ in self.components.values())
        if self.components and abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {total}, expected 1")
        for p, _ in self.components.values():
            if p < 0:
                raise ValueError("negative mixture weight")

    @property
    def mean_pairs(self) -> float:
        return sum(p * (st.number / 2.0) for p, st in self.components.values())

    def rho1(self) -> np.ndarray:
        from .fock import _rho1_from_state
        out = np.zeros((self.n, self.n), dtype=complex)
        for p, st in self.components.values():
            out += p * _rho1_from_state(st)
        return out

    def rho_tilde1(self) -> np.ndarray:
        """Weighted one-body matrix <(M - 1) c^dag_j c_i>."""
        from .fock import _rho1_from_state
        out = np.zeros((self.n, self.n), dtype=complex)
        for p, st in self.components.values():
            out += p * (st.number / 2.0 - 1.0) * _rho1_from_state(st)
        return out

    def rho2(self) -> np.ndarray:
        from .fock import _pair_vectors, pair_indices
        npairs = len(pair_indices(self.n, self.statistics))
        out = np.zeros((npairs, npairs), dtype=complex)
        for p, st in self.components.values():
            phi, _ = _pair_vectors(st)
            out += p * np.conj(phi.conj().T @ phi)
        return out


def mixture_from_amplitudes(a: PairMatrix, alphas: dict[int, complex],
                            ) -> MixtureState:
    """Pure mixture f(A^dag)|0> = sum_m alpha_m |m>_2 as a sector family."""
    if not alphas:
        raise ValueError("empty mixture")
    comps = {}
    total = sum(abs(al) ** 2 for al in alphas.values())
    for m, al in alphas.items():
        if al == 0:
            continue
        state, _ = build_condensate(a, m)
        comps[2 * m] = (abs(al) ** 2 / total, state)
    return MixtureState(a.statistics, a.n, comps)


def mixture_from_exponential(a: PairMatrix, alpha: complex, max_pairs: int,
                             ) -> MixtureState:
    """Truncated exp(alpha A^dag)|0> with number-projected components.

    The 2m-particle component of the exponential is (alpha^m / m!)
    (A^dag)^m |0>; weights use the actual norms of those components.
    """
    comps = {}
    weights = {}
    for m in range(0, max_pairs + 1):
        state, norm2 = build_condensate(a, m)
        w = abs(alpha) ** (2 * m) / math.factorial(m) ** 2 * norm2
        weights[m] = w
        comps[2 * m] = state
    total = sum(weights.values())
    return MixtureState(a.statistics, a.n,
                        {2 * m: (weights[m] / total, comps[2 * m])
                         for m in weights})


def mixture_from_components(components: list[tuple[float, StateVector]],
                            ) -> MixtureState:
    if not components:
        raise ValueError("empty mixture")
    st0 = components[0][1]
    comps = {}
    for p, st in components:
        if p < 0:
            raise ValueError("negative mixture weight")
        if st.n != st0.n or st.statistics is not st0.statistics:
            raise SectorError("mixture components live on different mode spaces")
        if st.number in comps:
            raise SectorError("one component per particle-number sector")
        comps[st.number] = (p, st)
    return MixtureState(st0.statistics, st0.n, comps)
