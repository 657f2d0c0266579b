"""Occupation-number bases and sparse second-quantized operators.

Fixed-particle-number sectors of ``n`` fermionic or bosonic modes are
enumerated explicitly; creation/annihilation strings act through cached
index maps so that repeated operator builds and density-matrix
contractions on the same sector cost almost nothing beyond the first
call.

Conventions
-----------
* Basis states are ordered lexicographically by their occupied-mode
  tuples, i.e. for one fermion in two modes the order is ``{10, 01}``.
* Fermionic strings carry the sign ``(-1)**(number of occupied modes
  below the acted index)``.
* The packed pair index set runs over ``i < j`` for fermions and
  ``i <= j`` for bosons, with the diagonal bosonic pair operator scaled
  as ``c_i^2 / sqrt(2)`` so that packed and full two-body spectra match
  after the usual factor-of-two bookkeeping.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SectorError(ValueError):
    """Invalid (n, N, statistics) sector or mismatched sectors."""


class InvalidDensityError(ValueError):
    """Matrix passed as a density matrix is not one."""


class SolverError(RuntimeError):
    """Eigensolver failed to reach the requested residual."""


class Statistics(enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"

    @property
    def pair_sign(self) -> float:
        """Sign s in A_ij = s * A_ji: -1 fermions, +1 bosons."""
        return -1.0 if self is Statistics.FERMION else 1.0

    @property
    def upper_sign(self) -> float:
        """+1 for fermions, -1 for bosons (the conventional upper/lower sign)."""
        return 1.0 if self is Statistics.FERMION else -1.0


FERMION = Statistics.FERMION
BOSON = Statistics.BOSON


def sector_dimension(n: int, number: int, statistics: Statistics) -> int:
    if number < 0:
        return 0
    if statistics is FERMION:
        return math.comb(n, number) if number <= n else 0
    return math.comb(n + number - 1, number)


def _occupation_rows(n: int, number: int, statistics: Statistics) -> np.ndarray:
    occs = np.zeros((sector_dimension(n, number, statistics), n), dtype=np.uint8)
    if occs.shape[0] == 0:
        return occs
    if statistics is FERMION:
        source = itertools.combinations(range(n), number)
    else:
        source = itertools.combinations_with_replacement(range(n), number)
    for row, modes in zip(occs, source):
        for m in modes:
            row[m] += 1
    return occs


class FockBasis:
    """All occupation states of a fixed (n, N, statistics) sector.

    Rows of ``occs`` are the occupation vectors; ``index`` maps an
    occupation vector (as bytes) back to its row.  Instances are cached
    and immutable; operator index maps are memoized per basis.
    """

    def __init__(self, n: int, number: int, statistics: Statistics):
        self.n = n
        self.number = number
        self.statistics = statistics
        self.occs = _occupation_rows(n, number, statistics)
        self.occs.setflags(write=False)
        self.dim = self.occs.shape[0]
        self.index = {row.tobytes(): k for k, row in enumerate(self.occs)}
        self._maps: dict = {}

    def __repr__(self):
        return (f"FockBasis(n={self.n}, N={self.number}, "
                f"{self.statistics.value}, dim={self.dim})")

    def rank(self, occupations) -> int:
        """Index of an occupation vector in this basis."""
        key = np.asarray(occupations, dtype=np.uint8).tobytes()
        try:
            return self.index[key]
        except KeyError:
            raise SectorError(f"occupation {tuple(occupations)} not in {self!r}")

    def _rank_rows(self, rows: np.ndarray) -> np.ndarray:
        idx = self.index
        return np.fromiter((idx[r.tobytes()] for r in rows), dtype=np.int64,
                           count=rows.shape[0])

    # ------------------------------------------------------------------
    # cached index maps for elementary operator strings
    # ------------------------------------------------------------------

    def _fermion_parity(self, rows: np.ndarray, i: int) -> np.ndarray:
        if i == 0:
            return np.zeros(rows.shape[0], dtype=np.int64)
        return rows[:, :i].sum(axis=1).astype(np.int64)

    def ann_map(self, i: int):
        """Index map of c_i from this sector to (N-1)."""
        key = ("ann", i)
        if key not in self._maps:
            tgt_basis = basis(self.n, self.number - 1, self.statistics)
            occ = self.occs
            if self.statistics is FERMION:
                src = np.nonzero(occ[:, i] == 1)[0]
                sgn = 1.0 - 2.0 * (self._fermion_parity(occ[src], i) % 2)
                amp = sgn.astype(complex)
            else:
                src = np.nonzero(occ[:, i] > 0)[0]
                amp = np.sqrt(occ[src, i].astype(float)).astype(complex)
            new = occ[src].astype(np.uint8)
            new[:, i] -= 1
            tgt = tgt_basis._rank_rows(new) if src.size else np.zeros(0, np.int64)
            self._maps[key] = (src, tgt, amp, tgt_basis)
        return self._maps[key]

    def crea_map(self, i: int):
        """Index map of c^dag_i from this sector to (N+1)."""
        key = ("crea", i)
        if key not in self._maps:
            tgt_basis = basis(self.n, self.number + 1, self.statistics)
            occ = self.occs
            if self.statistics is FERMION:
                src = np.nonzero(occ[:, i] == 0)[0]
                sgn = 1.0 - 2.0 * (self._fermion_parity(occ[src], i) % 2)
                amp = sgn.astype(complex)
            else:
                src = np.arange(self.dim)
                amp = np.sqrt(occ[:, i].astype(float) + 1.0).astype(complex)
            new = occ[src].astype(np.uint8)
            new[:, i] += 1
            if tgt_basis.dim and src.size:
                tgt = tgt_basis._rank_rows(new)
            else:
                src = np.zeros(0, np.int64)
                tgt = np.zeros(0, np.int64)
                amp = np.zeros(0, complex)
            self._maps[key] = (src, tgt, amp, tgt_basis)
        return self._maps[key]

    def pair_ann_map(self, i: int, j: int):
        """Index map of c_j c_i (i < j) or c_i^2 (i == j, bosons) to (N-2)."""
        if i > j:
            raise ValueError("pair map expects i <= j")
        if i == j and self.statistics is FERMION:
            raise ValueError("fermionic diagonal pair vanishes")
        key = ("pann", i, j)
        if key not in self._maps:
            tgt_basis = basis(self.n, self.number - 2, self.statistics)
            occ = self.occs
            if self.statistics is FERMION:
                src = np.nonzero((occ[:, i] == 1) & (occ[:, j] == 1))[0]
                par = (self._fermion_parity(occ[src], i)
                       + self._fermion_parity(occ[src], j) - 1) % 2
                amp = (1.0 - 2.0 * par).astype(complex)
            elif i == j:
                src = np.nonzero(occ[:, i] >= 2)[0]
                o = occ[src, i].astype(float)
                amp = np.sqrt(o * (o - 1.0)).astype(complex)
            else:
                src = np.nonzero((occ[:, i] > 0) & (occ[:, j] > 0))[0]
                amp = np.sqrt(occ[src, i].astype(float)
                              * occ[src, j].astype(float)).astype(complex)
            new = occ[src].astype(np.uint8)
            new[:, i] -= 1
            new[:, j] -= 1
            tgt = tgt_basis._rank_rows(new) if src.size else np.zeros(0, np.int64)
            self._maps[key] = (src, tgt, amp, tgt_basis)
        return self._maps[key]

    def pair_crea_map(self, i: int, j: int):
        """Index map of c^dag_i c^dag_j (i < j) or c_i^dag^2 (bosons) to (N+2)."""
        if i > j:
            raise ValueError("pair map expects i <= j")
        if i == j and self.statistics is FERMION:
            raise ValueError("fermionic diagonal pair vanishes")
        key = ("pcrea", i, j)
        if key not in self._maps:
            tgt_basis = basis(self.n, self.number + 2, self.statistics)
            occ = self.occs
            if self.statistics is FERMION:
                src = np.nonzero((occ[:, i] == 0) & (occ[:, j] == 0))[0]
                par = (self._fermion_parity(occ[src], i)
                       + self._fermion_parity(occ[src], j)) % 2
                amp = (1.0 - 2.0 * par).astype(complex)
            elif i == j:
                src = np.arange(self.dim)
                o = occ[:, i].astype(float)
                amp = np.sqrt((o + 1.0) * (o + 2.0)).astype(complex)
            else:
                src = np.arange(self.dim)
                amp = np.sqrt((occ[:, i].astype(float) + 1.0)
                              * (occ[:, j].astype(float) + 1.0)).astype(complex)
            new = occ[src].astype(np.uint8)
            new[:, i] += 1
            new[:, j] += 1
            if tgt_basis.dim and src.size:
                tgt = tgt_basis._rank_rows(new)
            else:
                src = np.zeros(0, np.int64)
                tgt = np.zeros(0, np.int64)
                amp = np.zeros(0, complex)
            self._maps[key] = (src, tgt, amp, tgt_basis)
        return self._maps[key]

    def transfer_map(self, i: int, j: int):
        """Index map of c^dag_i c_j within this sector."""
        key = ("hop", i, j)
        if key not in self._maps:
            occ = self.occs
            if i == j:
                src = np.nonzero(occ[:, i] > 0)[0]
                amp = occ[src, i].astype(complex)
                tgt = src
            elif self.statistics is FERMION:
                src = np.nonzero((occ[:, j] == 1) & (occ[:, i] == 0))[0]
                par = (self._fermion_parity(occ[src], j)
                       + self._fermion_parity(occ[src], i)
                       - (1 if j < i else 0)) % 2
                amp = (1.0 - 2.0 * par).astype(complex)
                new = occ[src].astype(np.uint8)
                new[:, j] -= 1
                new[:, i] += 1
                tgt = self._rank_rows(new) if src.size else np.zeros(0, np.int64)
            else:
                src = np.nonzero(occ[:, j] > 0)[0]
                amp = np.sqrt(occ[src, j].astype(float)
                              * (occ[src, i].astype(float) + 1.0)).astype(complex)
                new = occ[src].astype(np.uint8)
                new[:, j] -= 1
                new[:, i] += 1
                tgt = self._rank_rows(new) if src.size else np.zeros(0, np.int64)
            self._maps[key] = (src, tgt, amp, self)
        return self._maps[key]


@lru_cache(maxsize=None)
def _basis_cached(n: int, number: int, statistics: Statistics) -> FockBasis:
    return FockBasis(n, number, statistics)


def basis(n: int, number: int, statistics: Statistics) -> FockBasis:
    """Cached sector basis; empty sectors (N < 0, fermionic N > n) have dim 0."""
    if n < 1:
        raise SectorError("need at least one mode")
    return _basis_cached(n, number, statistics)


def enumerate_basis(n: int, number: int, statistics: Statistics) -> FockBasis:
    """Build the occupation basis of a sector, rejecting invalid sectors."""
    if n < 1 or number < 0:
        raise SectorError(f"invalid sector n={n}, N={number}")
    if statistics is FERMION and number > n:
        raise SectorError(f"fermionic sector N={number} > n={n}")
    return basis(n, number, statistics)


def pair_indices(n: int, statistics: Statistics) -> list[tuple[int, int]]:
    """Packed pair labels: i < j for fermions, i <= j for bosons, lex order."""
    if statistics is FERMION:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [(i, j) for i in range(n) for j in range(i, n)]


# ----------------------------------------------------------------------
# states and operators
# ----------------------------------------------------------------------


@dataclass
class StateVector:
    """Complex amplitude vector over a fixed-sector basis."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise SectorError("amplitude vector does not match basis dimension")

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def number(self) -> int:
        return self.basis.number

    @property
    def statistics(self) -> Statistics:
        return self.basis.statistics

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero state")
        return StateVector(self.basis, self.amplitudes / nrm)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def overlap(self, other: "StateVector") -> complex:
        if other.basis is not self.basis:
            raise SectorError("overlap requires states in the same sector")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def vacuum_state(n: int, statistics: Statistics) -> StateVector:
    b = basis(n, 0, statistics)
    amp = np.zeros(b.dim, dtype=complex)
    amp[0] = 1.0
    return StateVector(b, amp)


def basis_state(fock_basis: FockBasis, occupations) -> StateVector:
    amp = np.zeros(fock_basis.dim, dtype=complex)
    amp[fock_basis.rank(occupations)] = 1.0
    return StateVector(fock_basis, amp)


@dataclass(frozen=True)
class SparseOperator:
    """Sparse matrix of a second-quantized operator between two sectors."""

    basis_in: FockBasis
    basis_out: FockBasis
    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def particle_change(self) -> int:
        return self.basis_out.number - self.basis_in.number

    def apply(self, state: StateVector) -> StateVector:
        if state.basis is not self.basis_in:
            raise SectorError("operator/state sector mismatch")
        return StateVector(self.basis_out, self.matrix.dot(state.amplitudes))

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.basis_out, self.basis_in,
                              self.matrix.conjugate().transpose().tocsr())

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        if other.basis_out is not self.basis_in:
            raise SectorError("operator composition sector mismatch")
        return SparseOperator(other.basis_in, self.basis_out,
                              (self.matrix @ other.matrix).tocsr())

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if (other.basis_in is not self.basis_in
                or other.basis_out is not self.basis_out):
            raise SectorError("operator addition sector mismatch")
        return SparseOperator(self.basis_in, self.basis_out,
                              (self.matrix + other.matrix).tocsr())

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return self + (other * (-1.0))

    def __mul__(self, scalar) -> "SparseOperator":
        return SparseOperator(self.basis_in, self.basis_out,
                              (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        if self.basis_in is not self.basis_out:
            return math.inf
        d = self.matrix - self.matrix.conjugate().transpose()
        return 0.0 if d.nnz == 0 else float(np.max(np.abs(d.data)))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.matrix.data))) if self.matrix.nnz else 0.0)
        return self.hermiticity_defect() <= tol * scale


def zero_operator(basis_in: FockBasis, basis_out: FockBasis) -> SparseOperator:
    return SparseOperator(basis_in, basis_out,
                          sp.csr_matrix((basis_out.dim, basis_in.dim), dtype=complex))


def identity_operator(fock_basis: FockBasis) -> SparseOperator:
    return SparseOperator(fock_basis, fock_basis,
                          sp.identity(fock_basis.dim, dtype=complex, format="csr"))


def number_operator(fock_basis: FockBasis) -> SparseOperator:
    return identity_operator(fock_basis) * float(fock_basis.number)


def _assemble(basis_in, basis_out, entries) -> SparseOperator:
    """entries: iterable of (coeff, (src, tgt, amp)) index maps."""
    rows, cols, vals = [], [], []
    for coeff, (src, tgt, amp, tgt_basis) in entries:
        if tgt_basis is not basis_out:
            raise SectorError("map target does not match output basis")
        if coeff == 0 or src.size == 0:
            continue
        rows.append(tgt)
        cols.append(src)
        vals.append(coeff * amp)
    if not rows:
        return zero_operator(basis_in, basis_out)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis_out.dim, basis_in.dim), dtype=complex)
    return SparseOperator(basis_in, basis_out, mat.tocsr())


def build_one_body(h: np.ndarray, fock_basis: FockBasis) -> SparseOperator:
    """Matrix of sum_ij h_ij c^dag_i c_j on a fixed sector."""
    h = np.asarray(h, dtype=complex)
    n = fock_basis.n
    if h.shape != (n, n):
        raise ValueError(f"one-body coefficients must be {n}x{n}, got {h.shape}")
    entries = []
    for i in range(n):
        for j in range(n):
            if h[i, j] != 0:
                entries.append((h[i, j], fock_basis.transfer_map(i, j)))
    return _assemble(fock_basis, fock_basis, entries)


def build_pair_creation(a_matrix: np.ndarray, fock_basis: FockBasis) -> SparseOperator:
    """Matrix of the pair creation operator (1/2) sum_ij A_ij c^dag_i c^dag_j.

    Maps the sector N to N+2; the adjoint realizes the corresponding pair
    annihilation operator.  For fermions with N+2 > n the result is the
    explicit zero operator onto the empty sector.
    """
    a_matrix = np.asarray(a_matrix, dtype=complex)
    n = fock_basis.n
    if a_matrix.shape != (n, n):
        raise ValueError(f"pair matrix must be {n}x{n}, got {a_matrix.shape}")
    stat = fock_basis.statistics
    target = basis(n, fock_basis.number + 2, stat)
    if target.dim == 0:
        return zero_operator(fock_basis, target)
    entries = []
    for i in range(n):
        for j in range(i, n):
            if i == j:
                if stat is BOSON and a_matrix[i, i] != 0:
                    entries.append((0.5 * a_matrix[i, i],
                                    fock_basis.pair_crea_map(i, i)))
            elif a_matrix[i, j] != 0:
                entries.append((a_matrix[i, j], fock_basis.pair_crea_map(i, j)))
    return _assemble(fock_basis, target, entries)


def apply_pair_creation(a_matrix: np.ndarray, state: StateVector) -> StateVector:
    """Apply (1/2) sum A_ij c^dag_i c^dag_j without materializing the matrix."""
    a_matrix = np.asarray(a_matrix, dtype=complex)
    b = state.basis
    target = basis(b.n, b.number + 2, b.statistics)
    out = np.zeros(target.dim, dtype=complex)
    if target.dim == 0:
        return StateVector(target, out)
    psi = state.amplitudes
    for i in range(b.n):
        for j in range(i, b.n):
            if i == j:
                if b.statistics is BOSON and a_matrix[i, i] != 0:
                    src, tgt, amp, _ = b.pair_crea_map(i, i)
                    if src.size:
                        out[tgt] += 0.5 * a_matrix[i, i] * amp * psi[src]
            elif a_matrix[i, j] != 0:
                src, tgt, amp, _ = b.pair_crea_map(i, j)
                if src.size:
                    out[tgt] += a_matrix[i, j] * amp * psi[src]
    return StateVector(target, out)


def apply_pair_annihilation(a_matrix: np.ndarray, state: StateVector) -> StateVector:
    """Apply the adjoint of the pair creation operator built from A."""
    a_matrix = np.asarray(a_matrix, dtype=complex)
    b = state.basis
    target = basis(b.n, b.number - 2, b.statistics)
    out = np.zeros(target.dim, dtype=complex)
    if b.number < 2 or target.dim == 0:
        return StateVector(target, out)
    psi = state.amplitudes
    for i in range(b.n):
        for j in range(i, b.n):
            if i == j:
                if b.statistics is BOSON and a_matrix[i, i] != 0:
                    src, tgt, amp, _ = b.pair_ann_map(i, i)
                    if src.size:
                        out[tgt] += 0.5 * np.conj(a_matrix[i, i]) * amp * psi[src]
            elif a_matrix[i, j] != 0:
                src, tgt, amp, _ = b.pair_ann_map(i, j)
                if src.size:
                    out[tgt] += np.conj(a_matrix[i, j]) * amp * psi[src]
    return StateVector(target, out)


def expectation(state: StateVector, op: SparseOperator) -> complex:
    """<psi|O|psi> for an operator acting within the state's sector."""
    if op.basis_in is not state.basis or op.basis_out is not state.basis:
        raise SectorError("expectation requires an in-sector operator")
    return complex(np.vdot(state.amplitudes, op.matrix.dot(state.amplitudes)))


# ----------------------------------------------------------------------
# reduced density matrices
# ----------------------------------------------------------------------


@dataclass
class DensityMatrices:
    """One- and two-body contractions of a fixed-number state.

    ``rho1[i, j] = <c^dag_j c_i>``; ``rho2`` and ``rhobar2`` are packed over
    the pair index set (diagonal bosonic pairs scaled by 1/sqrt(2));
    ``rho11`` is the n^2 x n^2 matrix ``<c^dag_j c_i c^dag_i' c_j'>`` built
    lazily because it grows quickly with n.
    """

    statistics: Statistics
    n: int
    number: int
    rho1: np.ndarray
    rho2: np.ndarray
    rhobar2: np.ndarray
    pairs: list[tuple[int, int]]
    _rho11: np.ndarray | None = field(default=None, repr=False)
    _state: StateVector | None = field(default=None, repr=False)

    @property
    def rho11(self) -> np.ndarray:
        if self._rho11 is None:
            if self._state is None:
                raise ValueError("rho11 requires the source state")
            self._rho11 = _rho11_from_state(self._state)
        return self._rho11


def _pair_vectors(state: StateVector) -> tuple[np.ndarray, FockBasis]:
    """Columns g_p |psi> for every packed pair annihilation operator g_p."""
    b = state.basis
    pairs = pair_indices(b.n, b.statistics)
    target = basis(b.n, b.number - 2, b.statistics)
    phi = np.zeros((target.dim, len(pairs)), dtype=complex)
    if target.dim and b.number >= 2:
        for col, (i, j) in enumerate(pairs):
            src, tgt, amp, _ = b.pair_ann_map(i, j)
            if src.size == 0:
                continue
            scale = 1.0 / math.sqrt(2.0) if i == j else 1.0
            phi[tgt, col] = scale * amp * state.amplitudes[src]
    return phi, target


def _pair_creation_vectors(state: StateVector) -> tuple[np.ndarray, FockBasis]:
    b = state.basis
    pairs = pair_indices(b.n, b.statistics)
    target = basis(b.n, b.number + 2, b.statistics)
    chi = np.zeros((target.dim, len(pairs)), dtype=complex)
    if target.dim:
        for col, (i, j) in enumerate(pairs):
            src, tgt, amp, _ = b.pair_crea_map(i, j)
            if src.size == 0:
                continue
            scale = 1.0 / math.sqrt(2.0) if i == j else 1.0
            chi[tgt, col] = scale * amp * state.amplitudes[src]
    return chi, target


def _rho1_from_state(state: StateVector) -> np.ndarray:
    b = state.basis
    if b.number == 0:
        return np.zeros((b.n, b.n), dtype=complex)
    target = basis(b.n, b.number - 1, b.statistics)
    phi = np.zeros((target.dim, b.n), dtype=complex)
    for i in range(b.n):
        src, tgt, amp, _ = b.ann_map(i)
        if src.size:
            phi[tgt, i] = amp * state.amplitudes[src]
    return np.conj(phi.conj().T @ phi)


def _rho11_from_state(state: StateVector) -> np.ndarray:
    b = state.basis
    n = b.n
    w = np.zeros((b.dim, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            src, tgt, amp, _ = b.transfer_map(i, j)
            if src.size:
                w[tgt, i * n + j] += amp * state.amplitudes[src]
    return w.conj().T @ w


def reduced_dms(state: StateVector, *, with_rho11: bool = False) -> DensityMatrices:
    """One-body, packed two-body, and particle-hole contractions of a state.

    The state must be normalized; all returned matrices are Hermitian by
    construction (each is a Gram matrix of operator-mapped vectors).
    """
    if not state.is_normalized(1e-10):
        raise ValueError("reduced density matrices require a normalized state")
    b = state.basis
    rho1 = _rho1_from_state(state)
    phi, _ = _pair_vectors(state)
    rho2 = np.conj(phi.conj().T @ phi)
    chi, _ = _pair_creation_vectors(state)
    rhobar2 = chi.conj().T @ chi
    dms = DensityMatrices(
        statistics=b.statistics, n=b.n, number=b.number,
        rho1=rho1, rho2=rho2, rhobar2=rhobar2,
        pairs=pair_indices(b.n, b.statistics), _state=state)
    if with_rho11:
        _ = dms.rho11
    return dms


def rhobar2_from_contractions(rho1: np.ndarray, rho2_packed: np.ndarray,
                              statistics: Statistics) -> np.ndarray:
    """Packed <c c c^dag c^dag> matrix from rho1 and packed rho2.

    Uses the exact reordering identity
    ``c_j c_i c^dag_k c^dag_l = d_ik d_jl + z d_il d_jk + z d_ik r_jl
    + d_jk r_il + d_il r_jk + z d_jl r_ik + c^dag_k c^dag_l c_j c_i``
    with z = -1 (fermions) / +1 (bosons) and r the one-body matrix.
    """
    n = rho1.shape[0]
    z = 1.0 if statistics is BOSON else -1.0
    eye = np.eye(n)
    full = (np.einsum("ik,jl->ijkl", eye, eye)
            + z * np.einsum("il,jk->ijkl", eye, eye)
            + z * np.einsum("ik,jl->ijkl", eye, rho1)
            + np.einsum("jk,il->ijkl", eye, rho1)
            + np.einsum("il,jk->ijkl", eye, rho1)
            + z * np.einsum("jl,ik->ijkl", eye, rho1))
    full = full.reshape(n * n, n * n)
    full = full + expand_packed_matrix(rho2_packed, n, statistics)
    return pack_full_matrix(full, n, statistics)


# ----------------------------------------------------------------------
# packed <-> full pair-space conversion
# ----------------------------------------------------------------------


def pair_isometry(n: int, statistics: Statistics) -> np.ndarray:
    """Isometry from the packed pair space into C^n (x) C^n.

    Columns are (|ij> -+ |ji>)/sqrt(2) for i < j and |ii> for bosonic
    diagonal pairs; fermions use the antisymmetric combination.
    """
    pairs = pair_indices(n, statistics)
    iso = np.zeros((n * n, len(pairs)))
    s = statistics.pair_sign
    for col, (i, j) in enumerate(pairs):
        if i == j:
            iso[i * n + i, col] = 1.0
        else:
            iso[i * n + j, col] = 1.0 / math.sqrt(2.0)
            iso[j * n + i, col] = s / math.sqrt(2.0)
    return iso


def pack_full_matrix(m_full: np.ndarray, n: int, statistics: Statistics) -> np.ndarray:
    """Map an n^2 x n^2 pair-space matrix to the packed convention.

    Defined as (1/2) Iso^dag M Iso so that Gram-built packed matrices and
    restricted full matrices have identical spectra up to the standard
    factor of two.
    """
    iso = pair_isometry(n, statistics)
    return 0.5 * (iso.T @ m_full @ iso)


def expand_packed_matrix(m_packed: np.ndarray, n: int,
                         statistics: Statistics) -> np.ndarray:
    """Inverse of :func:`pack_full_matrix` on the (anti)symmetric subspace."""
    iso = pair_isometry(n, statistics)
    return 2.0 * (iso @ m_packed @ iso.T)


def pack_pair_matrix(a_matrix: np.ndarray, statistics: Statistics) -> np.ndarray:
    """Packed vector of an (anti)symmetric pair matrix.

    A pair matrix normalized to (1/2) Tr A^dag A = 1 packs to a unit vector.
    """
    a_matrix = np.asarray(a_matrix, dtype=complex)
    n = a_matrix.shape[0]
    iso = pair_isometry(n, statistics)
    return (iso.T @ a_matrix.reshape(-1)) / math.sqrt(2.0)


def unpack_pair_vector(v: np.ndarray, n: int, statistics: Statistics) -> np.ndarray:
    """Pair matrix of a packed vector; unit vectors give (1/2) Tr A^dag A = 1."""
    iso = pair_isometry(n, statistics)
    return (math.sqrt(2.0) * (iso @ np.asarray(v, dtype=complex))).reshape(n, n)


def symmetrized_kron(a: np.ndarray, b: np.ndarray,
                     statistics: Statistics) -> np.ndarray:
    """(A (x)_s B)_{ij,kl} = A_ik B_jl -+ A_il B_jk as an n^2 x n^2 matrix."""
    s = statistics.pair_sign
    n = a.shape[0]
    t = np.einsum("ik,jl->ijkl", a, b) + s * np.einsum("il,jk->ijkl", a, b)
    return t.reshape(n * n, n * n)


# ----------------------------------------------------------------------
# entropy and ground states
# ----------------------------------------------------------------------


def entropy(rho_normalized: np.ndarray, *, tol: float = 1e-10) -> float:
    """Von Neumann entropy -Tr rho log2 rho of a unit-trace density matrix."""
    rho = np.asarray(rho_normalized, dtype=complex)
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise InvalidDensityError("density matrix is not Hermitian")
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > tol:
        raise InvalidDensityError(f"density matrix has trace {tr}, expected 1")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -tol:
        raise InvalidDensityError(f"negative eigenvalue {evals.min():.3e}")
    evals = np.clip(evals, 0.0, None)
    nz = evals[evals > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def ground_state(op: SparseOperator, *, dense_threshold: int = 2000,
                 herm_tol: float = 1e-10, residual_tol: float = 1e-9,
                 maxiter: int | None = None, seed: int = 7,
                 ) -> tuple[float, StateVector]:
    """Lowest eigenpair of a Hermitian sector operator.

    Dense diagonalization below ``dense_threshold``, otherwise Lanczos
    (ARPACK) with a deterministic start vector; the residual
    ``|H psi - E psi| <= residual_tol * max(1, |E|)`` is always verified.
    """
    if op.basis_in is not op.basis_out:
        raise SectorError("ground state requires an in-sector operator")
    if not op.is_hermitian(herm_tol):
        raise SolverError("operator is not Hermitian within tolerance")
    dim = op.basis_in.dim
    if dim == 0:
        raise SectorError("empty sector has no ground state")
    if dim < dense_threshold:
        evals, evecs = np.linalg.eigh(op.to_dense())
        energy = float(evals[0])
        vec = evecs[:, 0]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        v0 /= np.linalg.norm(v0)
        try:
            evals, evecs = spla.eigsh(op.matrix, k=1, which="SA", v0=v0,
                                      maxiter=maxiter,
                                      ncv=min(dim - 1, 60))
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"Lanczos did not converge: {exc}") from exc
        energy = float(evals[0])
        vec = evecs[:, 0]
    state = StateVector(op.basis_in, vec).normalized()
    resid = float(np.linalg.norm(op.matrix.dot(state.amplitudes)
                                 - energy * state.amplitudes))
    bound = residual_tol * max(1.0, abs(energy))
    if resid > bound:
        raise SolverError(f"eigenpair residual {resid:.3e} exceeds {bound:.3e}")
    return energy, state
