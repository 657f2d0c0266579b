"""Spectral detection of pair condensation from density matrices.

A 2m-particle state is an exact pair condensate iff the largest
eigenvalue of the shifted two-body matrix

    rho2_m = rho2 +- (m-1)/2 (1 (x)_s rho1 + rho1 (x)_s 1)

(packed over independent pairs, upper sign fermions) equals m; the
matching eigenvector is the coefficient vector of the pair creation
operator, enabling exact reconstruction.  The distance of the top
eigenvalue from m is simultaneously the minimal energy of the canonical
positive-semidefinite Hamiltonian over all candidate pair operators, so
it doubles as a proximity measure.  Degenerate top eigenvalues flag the
Slater-determinant and frozen-pair limiting cases, which are told apart
through the one-body density matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    BOSON,
    FERMION,
    DensityMatrices,
    SectorError,
    Statistics,
    pack_full_matrix,
    pair_indices,
    rhobar2_from_contractions,
    symmetrized_kron,
    unpack_pair_vector,
)
from .pairs import MixtureState, PairMatrix


CLASS_TRUE = "true_condensate"
CLASS_SLATER = "slater_limit"
CLASS_FROZEN = "frozen_pair_limit"
CLASS_NOT = "not_condensate"


@dataclass(frozen=True)
class ModifiedRho2:
    """Packed shifted two-body matrix whose top eigenvalue detects
    condensation; ``cross_residual`` is the disagreement between the two
    equivalent assembly routes (from rho1/rho2 and from rho2/rhobar2)."""

    statistics: Statistics
    n: int
    m: float
    matrix: np.ndarray
    cross_residual: float


@dataclass(frozen=True)
class DetectorReport:
    """Outcome of the largest-eigenvalue condensation test."""

    statistics: Statistics
    n: int
    m: float
    lambda_max: float
    gap: float
    degeneracy: int
    pair_matrix: np.ndarray
    is_condensate: bool
    d2: float
    classification: str
    spectrum: np.ndarray
    tol: float

    @property
    def lambda_over_m(self) -> float:
        return self.lambda_max / self.m if self.m else math.nan


def _shift_matrix(rho1: np.ndarray, n: int,
                  statistics: Statistics) -> np.ndarray:
    eye = np.eye(n, dtype=complex)
    full = (symmetrized_kron(eye, rho1, statistics)
            + symmetrized_kron(rho1, eye, statistics))
    return pack_full_matrix(full, n, statistics)


def modified_rho2(dms: DensityMatrices, m: float, *,
                  cross_tol: float = 1e-9) -> ModifiedRho2:
    """Assemble the packed shifted two-body matrix for the m-pair test.

    Both equivalent constructions are computed; their disagreement above
    ``cross_tol`` (scaled by m) signals inconsistent input contractions.
    """
    n = dms.n
    if dms.rho1.shape != (n, n):
        raise SectorError("one-body matrix size does not match n")
    npairs = len(pair_indices(n, dms.statistics))
    if dms.rho2.shape != (npairs, npairs):
        raise SectorError("packed two-body matrix size does not match n")
    sign = dms.statistics.upper_sign
    shift = _shift_matrix(dms.rho1, n, dms.statistics)
    route_a = dms.rho2 + sign * 0.5 * (m - 1.0) * shift
    rhobar = dms.rhobar2
    if rhobar is None:
        rhobar = rhobar2_from_contractions(dms.rho1, dms.rho2, dms.statistics)
    eye = np.eye(route_a.shape[0], dtype=complex)
    route_b = 0.5 * ((1.0 + m) * dms.rho2 + (1.0 - m) * (rhobar - eye))
    resid = float(np.max(np.abs(route_a - route_b)))
    if resid > cross_tol * max(1.0, abs(m)):
        raise SectorError(
            f"shifted two-body matrix routes disagree by {resid:.3e}; "
            "inconsistent density matrices")
    route_a = 0.5 * (route_a + route_a.conj().T)
    return ModifiedRho2(dms.statistics, n, m, route_a, resid)


def _phase_fix(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k]) if abs(vec[k]) > 0 else 1.0
    return vec / phase


def _frozen_levels(rho1: np.ndarray, occ_tol: float = 1e-7) -> int:
    """Number of unit-occupancy natural orbitals."""
    evals = np.linalg.eigvalsh(rho1)
    return int(np.sum(evals > 1.0 - occ_tol))


def detect(dms: DensityMatrices, m: int, tol: float | None = None,
           ) -> DetectorReport:
    """Largest-eigenvalue condensation test for a fixed 2m-particle state.

    ``is_condensate`` holds iff |lambda_max - m| <= tol (default
    1e-8 max(1, m)).  The reconstructed pair matrix is normalized to
    (1/2) Tr A^dag A = 1 (packed vector norm sqrt(2) in the all-indices
    convention) with the largest entry made real positive.  Fermionic
    degenerate limits are classified through the unit-occupancy count of
    the one-body matrix: 2m frozen orbitals mean a Slater determinant,
    fewer mean a frozen-pair limit.
    """
    if tol is None:
        tol = 1e-8 * max(1.0, float(m))
    number = float(np.trace(dms.rho1).real)
    if abs(number / 2.0 - m) > 1e-8 * max(1.0, m):
        raise SectorError(
            f"pair count {m} inconsistent with Tr rho1 = {number:.6f}")
    mod = modified_rho2(dms, float(m))
    evals, evecs = np.linalg.eigh(mod.matrix)
    lam = float(evals[-1])
    spectrum = evals[::-1].copy()
    group_tol = max(10.0 * tol, 1e-10 * max(1.0, abs(lam)))
    degeneracy = int(np.sum(evals > lam - group_tol))
    gap = float(lam - evals[-1 - degeneracy]) if degeneracy < evals.size \
        else math.inf
    vec = _phase_fix(evecs[:, -1])
    amat = unpack_pair_vector(vec, dms.n, dms.statistics)
    is_cond = abs(lam - m) <= tol
    d2 = float(m - lam)
    if not is_cond:
        label = CLASS_NOT
    elif dms.statistics is FERMION:
        frozen = _frozen_levels(dms.rho1)
        if frozen >= 2 * m and degeneracy == math.comb(2 * m, 2):
            label = CLASS_SLATER
        elif frozen >= 2:
            label = CLASS_FROZEN
        else:
            label = CLASS_TRUE
    else:
        label = CLASS_TRUE
    return DetectorReport(dms.statistics, dms.n, float(m), lam, gap,
                          degeneracy, amat, is_cond, d2, label, spectrum,
                          tol)


def proximity(dms: DensityMatrices, m: int) -> tuple[float, np.ndarray]:
    """Distance to the nearest m-pair condensate and its pair matrix.

    The distance m - lambda_max equals the expectation of the canonical
    positive-semidefinite Hamiltonian built from the returned matrix, and
    is minimal among all normalized pair operators.
    """
    rep = detect(dms, m, tol=math.inf)
    return rep.d2, rep.pair_matrix


def pair_energy(dms: DensityMatrices, m: float, a_matrix: np.ndarray) -> float:
    """Quadratic form m - v^dag (rho2_m/1) v of a candidate pair matrix.

    Equals the expectation of the canonical Hamiltonian of ``a_matrix``
    in the underlying state; minimized by the detector's eigenvector.
    """
    from .fock import pack_pair_matrix
    mod = modified_rho2(dms, m)
    v = pack_pair_matrix(a_matrix, dms.statistics)
    nrm = float(np.linalg.norm(v))
    v = v / nrm
    return float((m - np.real(np.vdot(v, mod.matrix @ v))))


def detect_general(mix: MixtureState, tol: float | None = None,
                   ) -> DetectorReport:
    """Condensate-family test for even-parity mixtures without fixed N.

    Builds the packed matrix (1/2)[rho2 +- (1 (x)_s rt1 + rt1 (x)_s 1)]
    with rt1 = <(M-1) c^dag c>; the family of condensate superpositions
    and ensembles is detected by lambda_max = <M>, and the eigenvector
    recovers the common pair operator.  Odd-sector contamination pushes
    the top eigenvalue strictly below <M>.
    """
    mean_m = mix.mean_pairs
    if tol is None:
        tol = 1e-8 * max(1.0, mean_m)
    rho2 = mix.rho2()
    rt1 = mix.rho_tilde1()
    sign = mix.statistics.upper_sign
    mat = rho2 + sign * 0.5 * _shift_matrix(rt1, mix.n, mix.statistics)
    mat = 0.5 * (mat + mat.conj().T)
    evals, evecs = np.linalg.eigh(mat)
    lam = float(evals[-1])
    group_tol = max(10.0 * tol, 1e-10 * max(1.0, abs(lam)))
    degeneracy = int(np.sum(evals > lam - group_tol))
    gap = float(lam - evals[-1 - degeneracy]) if degeneracy < evals.size \
        else math.inf
    vec = _phase_fix(evecs[:, -1])
    amat = unpack_pair_vector(vec, mix.n, mix.statistics)
    is_cond = abs(lam - mean_m) <= tol
    return DetectorReport(mix.statistics, mix.n, mean_m, lam, gap, degeneracy,
                          amat, is_cond, float(mean_m - lam),
                          CLASS_TRUE if is_cond else CLASS_NOT,
                          evals[::-1].copy(), tol)


@dataclass(frozen=True)
class OddDetectorReport:
    """Result of the odd-particle-number block analysis."""

    lambda_max: float
    m: int
    pair_matrix: np.ndarray
    unit_orbital: np.ndarray
    empty_orbital: np.ndarray
    is_condensate: bool
    tol: float


def detect_odd(dms: DensityMatrices, tol: float = 1e-8) -> OddDetectorReport:
    """Detect fermionic states of the form c^dag (pair condensate).

    Requires an odd fermionic particle number.  The one-body matrix must
    show a unit-occupancy orbital (the created particle) and an empty
    partner; the shifted two-body test is run on the block of pairs
    orthogonal to both, returning the reduced pair matrix embedded back
    into the original mode basis.
    """
    if dms.statistics is not FERMION:
        raise SectorError("odd-state detection is fermionic")
    number = int(round(float(np.trace(dms.rho1).real)))
    if number % 2 == 0:
        raise SectorError("odd-state detection requires an odd particle number")
    m = (number - 1) // 2
    evals, evecs = np.linalg.eigh(dms.rho1)
    if evals[-1] < 1.0 - math.sqrt(tol):
        raise SectorError("no unit-occupancy orbital: not an odd condensate")
    unit = evecs[:, -1]
    empty = evecs[:, 0]
    # rotate so columns are (unit, empty, complement), drop the first two
    n = dms.n
    cols = evecs[:, 1:-1]
    rot = np.concatenate([unit[:, None], empty[:, None], cols], axis=1)
    rho1_rot = rot.conj().T @ dms.rho1 @ rot
    from .fock import expand_packed_matrix
    big = expand_packed_matrix(dms.rho2, n, FERMION)
    kron = np.kron(rot, rot)
    big_rot = kron.conj().T @ big @ kron
    sub = n - 2
    sub_pairs = pair_indices(sub, FERMION)
    rho2_sub = np.zeros((len(sub_pairs), len(sub_pairs)), dtype=complex)
    for r_out, (i, j) in enumerate(sub_pairs):
        for c_out, (k, l) in enumerate(sub_pairs):
            rho2_sub[r_out, c_out] = big_rot[
                (i + 2) * n + (j + 2), (k + 2) * n + (l + 2)]
    rho1_sub = rho1_rot[2:, 2:]
    sign = FERMION.upper_sign
    shift = _shift_matrix(rho1_sub, sub, FERMION)
    mat = rho2_sub + sign * 0.5 * (m - 1.0) * shift
    mat = 0.5 * (mat + mat.conj().T)
    evals2, evecs2 = np.linalg.eigh(mat)
    lam = float(evals2[-1]) if evals2.size else 0.0
    vec = _phase_fix(evecs2[:, -1]) if evals2.size else np.zeros(0)
    a_sub = unpack_pair_vector(vec, sub, FERMION)
    a_full = cols @ a_sub @ cols.T
    is_cond = abs(lam - m) <= tol * max(1.0, m)
    return OddDetectorReport(lam, m, a_full, unit, empty, is_cond, tol)
