"""Conserved one-body operator families and covariance analysis.

For a pair condensate the operators ``Q_ij = (c^dag A^t)_i c_j +-
(c^dag A^t)_j c_i`` annihilate the state exactly; together with the
particle number they exhaust its conserved one-body operators.  This
module builds that family (and the inverse-matrix variant), the SU(2)
scaled triads in the natural basis, the covariance matrices whose
nullspaces count conserved operators of each class, and the exact
coefficient-level commutator algebra check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    BOSON,
    FERMION,
    DensityMatrices,
    FockBasis,
    SparseOperator,
    StateVector,
    Statistics,
    build_one_body,
    pair_indices,
    reduced_dms,
)
from .pairs import CanonicalForm, PairMatrix, RankError


@dataclass(frozen=True)
class QFamily:
    """Conserved one-body family of a pair matrix.

    ``coeffs[k]`` is the matrix h of the k-th member sum_ij h_ij c^dag_i c_j,
    labelled by ``labels[k]`` = (i, j) with i <= j (fermions) / i < j (bosons).
    """

    statistics: Statistics
    n: int
    labels: list[tuple[int, int]]
    coeffs: np.ndarray
    generator: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def member(self, i: int, j: int) -> np.ndarray:
        return q_coefficient(self.generator, i, j, self.statistics)

    def operator(self, k: int, basis: FockBasis) -> SparseOperator:
        return build_one_body(self.coeffs[k], basis)

    def operators(self, basis: FockBasis) -> list[SparseOperator]:
        return [self.operator(k, basis) for k in range(len(self))]


def q_coefficient(a_matrix: np.ndarray, i: int, j: int,
                  statistics: Statistics) -> np.ndarray:
    """Coefficient matrix of Q_ij = sum_l c^dag_l (A_il c_j +- A_jl c_i)."""
    n = a_matrix.shape[0]
    s = statistics.upper_sign
    h = np.zeros((n, n), dtype=complex)
    h[:, j] += a_matrix[i, :]
    h[:, i] += s * a_matrix[j, :]
    return h


def q_ops(a: PairMatrix) -> QFamily:
    """The full conserved family {Q_ij} of a pair matrix."""
    n = a.n
    if a.statistics is FERMION:
        labels = [(i, j) for i in range(n) for j in range(i, n)]
    else:
        labels = [(i, j) for i in range(n) for j in range(i + 1, n)]
    coeffs = np.stack([q_coefficient(a.mat, i, j, a.statistics)
                       for i, j in labels])
    return QFamily(a.statistics, n, labels, coeffs, a.mat.copy())


def qbar_coefficient(a_inv: np.ndarray, i: int, j: int,
                     statistics: Statistics) -> np.ndarray:
    """Coefficient matrix of Qbar_ij = c^dag_i (A^{-1} c)_j +- c^dag_j (A^{-1} c)_i."""
    n = a_inv.shape[0]
    s = statistics.upper_sign
    h = np.zeros((n, n), dtype=complex)
    h[i, :] += a_inv[j, :]
    h[j, :] += s * a_inv[i, :]
    return h


def qbar_ops(a: PairMatrix, *, normalized: bool = False) -> QFamily:
    """Conserved family expressed through the inverse pair matrix.

    With ``normalized=True`` the inverse is rescaled so the associated dual
    annihilation operator has unit vacuum norm, matching the scaling used
    by the dual-operator Hamiltonian.
    """
    if np.linalg.cond(a.mat) > 1e12:
        raise RankError("inverse-matrix family requires a full-rank pair matrix")
    a_inv = np.linalg.inv(a.mat)
    if normalized:
        # scale so the dual pair matrix (2/n) (A^dag)^{-1} is normalized
        dmat = (2.0 / a.n) * np.linalg.inv(a.mat.conj().T)
        a_inv = a_inv / math.sqrt(0.5 * np.sum(np.abs(dmat) ** 2))
    n = a.n
    if a.statistics is FERMION:
        labels = [(i, j) for i in range(n) for j in range(i, n)]
    else:
        labels = [(i, j) for i in range(n) for j in range(i + 1, n)]
    coeffs = np.stack([qbar_coefficient(a_inv, i, j, a.statistics)
                       for i, j in labels])
    return QFamily(a.statistics, n, labels, coeffs, a.mat.copy())


def family_span_rank(*families: QFamily, tol: float = 1e-10) -> int:
    """Rank of the union of coefficient spans of one-body families."""
    rows = np.concatenate([f.coeffs.reshape(len(f), -1) for f in families])
    return int(np.linalg.matrix_rank(rows, tol=tol))


# ----------------------------------------------------------------------
# scaled SU(2) structures in the natural basis
# ----------------------------------------------------------------------


def su2_scaled_ops(canonical: CanonicalForm) -> dict:
    """Angular-momentum-like rescalings of the natural-basis conserved ops.

    Returns coefficient matrices (n x n, natural basis labelling: fermionic
    modes (2k, 2k+1) are the conjugate pair of level k).  Fermions get the
    ladder triads for level pairs, their cross ("bar") partners and the
    sigma-independent diagonal triads; bosons get the scaled generators
    i Q_kl / sqrt(s_k s_l) whose distinct-level triples close like angular
    momenta.
    """
    sig = np.asarray(canonical.sigmas, dtype=float)
    if np.any(sig <= 0):
        raise RankError("scaled operators require strictly positive sigmas")
    n = canonical.n
    stat = canonical.statistics

    def hop(a, b):
        h = np.zeros((n, n), dtype=complex)
        h[a, b] = 1.0
        return h

    out: dict = {}
    if stat is FERMION:
        nl = sig.size
        pair, bar, diag = {}, {}, {}
        for k in range(nl):
            kk, kb = 2 * k, 2 * k + 1
            diag[k] = (hop(kk, kb), hop(kb, kk),
                       0.5 * (hop(kk, kk) - hop(kb, kb)))
        for k in range(nl):
            for l in range(k + 1, nl):
                kk, kb = 2 * k, 2 * k + 1
                ll, lb = 2 * l, 2 * l + 1
                r = math.sqrt(sig[k] / sig[l])
                sp = r * hop(kk, lb) + (1 / r) * hop(ll, kb)
                sm = r * hop(kb, ll) + (1 / r) * hop(lb, kk)
                sz = 0.5 * (hop(kk, kk) - hop(kb, kb)
                            + hop(ll, ll) - hop(lb, lb))
                pair[(k, l)] = (sp, sm, sz)
                spb = r * hop(kk, ll) - (1 / r) * hop(lb, kb)
                smb = (1 / r) * hop(ll, kk) - r * hop(kb, lb)
                szb = 0.5 * (hop(kk, kk) - hop(ll, ll)
                             + hop(lb, lb) - hop(kb, kb))
                bar[(k, l)] = (spb, smb, szb)
        out["pair"] = pair
        out["bar"] = bar
        out["diagonal"] = diag
    else:
        qt = {}
        for k in range(n):
            for l in range(k + 1, n):
                r = math.sqrt(sig[k] / sig[l])
                qt[(k, l)] = 1j * (r * hop(k, l) - (1 / r) * hop(l, k))
        out["qtilde"] = qt
        triads = {}
        for j in range(n):
            for k in range(j + 1, n):
                for l in range(k + 1, n):
                    triads[(j, k, l)] = (qt[(j, k)], qt[(k, l)], qt[(j, l)])
        out["triads"] = triads
    return out


def commutator(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """One-body coefficient matrix of [H1, H2] for one-body H1, H2."""
    return h1 @ h2 - h2 @ h1


def verify_commutator_algebra(a: PairMatrix, *, tol: float = 1e-12) -> dict:
    """Exhaustive coefficient-level check of the closed commutator algebra.

    Verifies [Q_ij, Q_kl] = +-(A_ki Q_jl + A_lj Q_ik) -+ (A_jk Q_il
    + A_il Q_jk) for all index quadruples; the check is exact linear
    algebra on n x n matrices.
    """
    n = a.n
    s = a.statistics.upper_sign
    amat = a.mat
    q = {}
    for i in range(n):
        for j in range(n):
            q[(i, j)] = q_coefficient(amat, i, j, a.statistics)
    worst = 0.0
    checked = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    lhs = commutator(q[(i, j)], q[(k, l)])
                    rhs = s * (amat[k, i] * q[(j, l)] + amat[l, j] * q[(i, k)]) \
                        - s * (amat[j, k] * q[(i, l)] + amat[i, l] * q[(j, k)])
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
                    checked += 1
    return {"checked": checked, "max_residual": worst, "ok": worst <= tol}


# ----------------------------------------------------------------------
# covariance matrices and conserved-operator counting
# ----------------------------------------------------------------------


def covariance_C11(state: StateVector) -> np.ndarray:
    """Covariance of one-body operators: <c+_j c_i c+_i' c_j'> - <..><..>."""
    dms = reduced_dms(state)
    return covariance_C11_from_dms(dms)


def covariance_C11_from_dms(dms: DensityMatrices) -> np.ndarray:
    n = dms.n
    rho11 = dms.rho11
    v = dms.rho1.reshape(-1)               # v[(i,j)] = <c+_j c_i>
    w = dms.rho1.T.reshape(-1)             # w[(i',j')] = <c+_i' c_j'>
    return rho11 - np.outer(v, w)


def covariance_C20(state: StateVector) -> np.ndarray:
    """Packed two-body density matrix (pair annihilation covariance)."""
    return reduced_dms(state).rho2


def covariance_C02(state: StateVector) -> np.ndarray:
    """Packed <c c c^dag c^dag> matrix (pair creation covariance)."""
    return reduced_dms(state).rhobar2


@dataclass
class NullspaceResult:
    """Nullspace of a covariance-type matrix with its full spectrum."""

    dimension: int
    basis: np.ndarray
    spectrum: np.ndarray
    tolerance: float
    gap_ratio: float


def nullspace(matrix: np.ndarray, *, rtol: float = 1e-8) -> NullspaceResult:
    """Eigen-nullspace with threshold rtol * max(lambda_max, 1).

    ``gap_ratio`` is the ratio between the smallest kept eigenvalue and the
    largest discarded one; a trustworthy dimension shows a ratio >= 1e3.
    """
    matrix = 0.5 * (matrix + matrix.conj().T)
    evals, evecs = np.linalg.eigh(matrix)
    scale = max(float(evals.max(initial=0.0)), 1.0)
    tol = rtol * scale
    null_mask = evals < tol
    dim = int(null_mask.sum())
    discarded = float(evals[null_mask].max(initial=0.0))
    kept = float(evals[~null_mask].min(initial=np.inf))
    gap = math.inf if discarded <= 0 else kept / max(discarded, 1e-300)
    return NullspaceResult(dim, evecs[:, null_mask], evals, tol, gap)


def conserved_count(state: StateVector, kind: str = "one_body", *,
                    rtol: float = 1e-8) -> NullspaceResult:
    """Number of conserved operators of a class for a fixed-number state.

    ``one_body`` counts zero-eigenvalue one-body annihilators via the
    particle-hole matrix <c+_j c_i c+_i' c_j'> and adds one for the
    particle number; ``pair_annih``/``pair_crea`` count strictly conserved
    pair operators via the packed two-body covariances.
    """
    dms = reduced_dms(state)
    if kind == "one_body":
        res = nullspace(dms.rho11, rtol=rtol)
        return NullspaceResult(res.dimension + 1, res.basis, res.spectrum,
                               res.tolerance, res.gap_ratio)
    if kind == "pair_annih":
        return nullspace(dms.rho2, rtol=rtol)
    if kind == "pair_crea":
        return nullspace(dms.rhobar2, rtol=rtol)
    raise ValueError(f"unknown conserved-operator class {kind!r}")


def common_null_states(family: QFamily, basis: FockBasis, *,
                       rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of sector states annihilated by every family member.

    Computed from the zero eigenspace of sum_k Q_k^dag Q_k.
    """
    dim = basis.dim
    acc = np.zeros((dim, dim), dtype=complex)
    for k in range(len(family)):
        qop = family.operator(k, basis).matrix
        acc += (qop.conjugate().transpose() @ qop).toarray()
    res = nullspace(acc, rtol=rtol)
    return res.basis
