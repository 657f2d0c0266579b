"""Coupling sweeps over pairing models and conserved-operator audits.

A sweep scans the scaled coupling g/g_c (or the mixing parameter p for
the two-basis model), solves for the ground state at every grid point,
runs the condensation detector on its density matrices and records
eigenvalue tables, proximity, overlap with the rebuilt condensate and
one-body entropy into a versioned CSV (optionally rendered to SVG).
"""

from __future__ import annotations

import concurrent.futures
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import io as pio
from .conserved import conserved_count
from .detector import detect, modified_rho2
from .fock import (
    BOSON,
    FERMION,
    SolverError,
    StateVector,
    Statistics,
    basis,
    entropy,
    ground_state,
    pair_indices,
    reduced_dms,
)
from .hamiltonians import (
    ModelParams,
    critical_couplings,
    model_boson,
    model_fermion,
    model_fermion_rotated,
    model_mixed,
)
from .pairs import (
    PairMatrix,
    build_condensate,
    build_ghz_state,
    build_group_state,
    build_paired_state,
    random_pair_matrix,
)


SCHEMA = "paircond-sweep-v1"


def sigma_rule(rule: str, nlev: int) -> np.ndarray:
    """Normalized Schmidt coefficients for a named level rule."""
    k = np.arange(1, nlev + 1, dtype=float)
    if rule == "sqrt_k":
        sig = np.sqrt(k)
    elif rule == "uniform":
        sig = np.ones(nlev)
    elif rule == "linear_k":
        sig = k
    else:
        raise ValueError(f"unknown sigma rule {rule!r}")
    return sig / np.linalg.norm(sig)


def eps_rule(rule: str, sigmas: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Level energies for a named rule (positive branch)."""
    nlev = sigmas.size
    k = np.arange(1, nlev + 1, dtype=float)
    if rule == "linear_k":
        return scale * k
    if rule == "prop_sigma2":
        return scale * sigmas ** 2
    raise ValueError(f"unknown eps rule {rule!r}")


def default_grid(model: str) -> list[float]:
    if model == "boson":
        pts = {k / 20.0 for k in range(0, 31)}
        pts.add(3.0 / 7.0)
        return sorted(pts)
    if model == "fermion":
        pts = {k / 10.0 for k in range(-30, 11)}
        pts.add(-3.0 / 5.0)
        return sorted(pts)
    if model == "mixed":
        return [k / 20.0 for k in range(0, 21)]
    raise ValueError(f"unknown model {model!r}")


@dataclass
class SweepConfig:
    """Configuration of one coupling sweep."""

    model: str                       # "boson" | "fermion" | "mixed"
    n: int
    m: int
    sigma: str = "sqrt_k"
    eps: str = "linear_k"
    eps_scale: float = 1.0
    grid: list[float] = field(default_factory=list)
    tol: float = 1e-8
    out: str = "sweep.csv"
    svg: str | None = None
    workers: int = 1
    seed: int = 0
    rotation_path: str | None = None   # mixed model second-basis unitary
    g2_over_gc: float = 0.5            # mixed model coupling of H2

    def __post_init__(self):
        if self.model not in ("boson", "fermion", "mixed"):
            raise ValueError(f"unknown model {self.model!r}")
        if not self.grid:
            self.grid = default_grid(self.model)
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        stat = FERMION if self.model in ("fermion", "mixed") else BOSON
        nlev = self.n // 2 if stat is FERMION else self.n
        if stat is FERMION and self.n % 2:
            raise ValueError("fermionic sweeps need even n")
        if self.m < 1 or (stat is FERMION and 2 * self.m > self.n):
            raise ValueError("inadmissible pair number for this sector")

    @staticmethod
    def from_json(path) -> "SweepConfig":
        with open(path) as fh:
            doc = json.load(fh)
        return SweepConfig(**doc)


@dataclass
class SweepRow:
    """One grid point of a sweep."""

    abscissa: float
    energy: float
    lambda_max: float
    lambda_over_m: float
    degeneracy: int
    d2: float
    overlap: float
    entropy: float
    delta_entropy: float
    rho1_evals: np.ndarray
    rho2_coll_evals: np.ndarray
    mod2_coll_evals: np.ndarray

    def as_list(self) -> list:
        out = [self.abscissa, self.energy, self.lambda_max,
               self.lambda_over_m, self.degeneracy, self.d2, self.overlap,
               self.entropy, self.delta_entropy]
        out += [float(x) for x in self.rho1_evals]
        out += [float(x) for x in self.rho2_coll_evals]
        out += [float(x) for x in self.mod2_coll_evals]
        return out


def _collective_indices(n: int, statistics: Statistics) -> list[int]:
    pairs = pair_indices(n, statistics)
    pos = {pq: k for k, pq in enumerate(pairs)}
    if statistics is FERMION:
        return [pos[(2 * k, 2 * k + 1)] for k in range(n // 2)]
    return [pos[(k, k)] for k in range(n)]


def analyze_state(state: StateVector, m: int, energy: float,
                  abscissa: float) -> SweepRow:
    """Detector and spectral diagnostics of one ground state."""
    dms = reduced_dms(state)
    rep = detect(dms, m)
    rebuilt = PairMatrix.from_matrix(rep.pair_matrix, state.statistics,
                                     normalize=True)
    cond, _ = build_condensate(rebuilt, m)
    overlap = abs(state.overlap(cond))
    number = state.number
    s_val = entropy(dms.rho1 / number)
    ds = s_val - math.log2(number)
    rho1_ev = np.sort(np.linalg.eigvalsh(dms.rho1))[::-1]
    coll = _collective_indices(state.n, state.statistics)
    sub2 = dms.rho2[np.ix_(coll, coll)]
    mod = modified_rho2(dms, float(m)).matrix[np.ix_(coll, coll)]
    ev2 = np.sort(np.linalg.eigvalsh(sub2))[::-1]
    evm = np.sort(np.linalg.eigvalsh(mod))[::-1]
    return SweepRow(abscissa, energy, rep.lambda_max, rep.lambda_max / m,
                    rep.degeneracy, rep.d2, overlap, s_val, ds,
                    rho1_ev, ev2, evm)


def _sweep_point_boson(cfg: SweepConfig, sig, eps, g_c, x: float) -> SweepRow:
    params = ModelParams(BOSON, cfg.n, sig, eps, x * g_c, cfg.m)
    system = model_boson(params)
    energy, gs = ground_state(system.operator, seed=cfg.seed)
    return analyze_state(gs, cfg.m, energy, x)


def _sweep_point_fermion(cfg: SweepConfig, sig, eps_pos, g_c, x: float,
                         ) -> SweepRow:
    # x >= 0: eps_k = -eps(k) with coupling x g_c; x < 0: flipped spectrum
    eps = -eps_pos if x >= 0 else eps_pos
    params = ModelParams(FERMION, cfg.n, sig, eps, abs(x) * g_c, cfg.m)
    system = model_fermion(params)
    energy, gs = ground_state(system.operator, seed=cfg.seed)
    return analyze_state(gs, cfg.m, energy, x)


def run_sweep(cfg: SweepConfig) -> list[SweepRow]:
    """Run a sweep, writing the CSV (and SVG when requested).

    Grid points evaluate independently (optionally in a thread pool);
    rows are always emitted in abscissa order.  A solver failure writes
    the completed rows and re-raises with the failing grid index.
    """
    stat = FERMION if cfg.model in ("fermion", "mixed") else BOSON
    nlev = cfg.n // 2 if stat is FERMION else cfg.n
    sig = sigma_rule(cfg.sigma, nlev)
    eps = eps_rule(cfg.eps, sig, cfg.eps_scale)
    if cfg.model == "mixed":
        return _run_mixed_sweep(cfg, sig, eps)
    ref = ModelParams(stat, cfg.n, sig, -eps if stat is FERMION else eps,
                      0.0, cfg.m)
    g_c, _ = critical_couplings(ref)
    point = _sweep_point_boson if cfg.model == "boson" else _sweep_point_fermion
    results: dict[float, SweepRow] = {}
    error: tuple[int, Exception] | None = None
    if cfg.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(cfg.workers) as pool:
            futs = {pool.submit(point, cfg, sig, eps, g_c, x): (k, x)
                    for k, x in enumerate(cfg.grid)}
            for fut in concurrent.futures.as_completed(futs):
                k, x = futs[fut]
                try:
                    results[x] = fut.result()
                except SolverError as exc:
                    error = error or (k, exc)
    else:
        for k, x in enumerate(cfg.grid):
            try:
                results[x] = point(cfg, sig, eps, g_c, x)
            except SolverError as exc:
                error = (k, exc)
                break
    rows = [results[x] for x in cfg.grid if x in results]
    _write_outputs(cfg, rows)
    if error is not None:
        raise SolverError(
            f"sweep aborted at grid index {error[0]} "
            f"(abscissa {cfg.grid[error[0]]}): {error[1]}; "
            f"partial results in {cfg.out}")
    return rows


def _run_mixed_sweep(cfg: SweepConfig, sig, eps) -> list[SweepRow]:
    if cfg.rotation_path is None:
        raise ValueError("mixed sweeps need an explicit basis rotation file")
    doc = pio.read_matrix(cfg.rotation_path)
    if doc["kind"] != "unitary" or doc["n"] != cfg.n:
        raise pio.SchemaError("rotation file must hold an n x n unitary")
    u = doc["matrix"]
    ref = ModelParams(FERMION, cfg.n, sig, -eps, 0.0, cfg.m)
    g_c, _ = critical_couplings(ref)
    p1 = ModelParams(FERMION, cfg.n, sig, -eps, g_c, cfg.m)
    h1 = model_fermion(p1).operator
    p2 = ModelParams(FERMION, cfg.n, sig, -eps, cfg.g2_over_gc * g_c, cfg.m)
    h2 = model_fermion_rotated(p2, u).operator
    rows = []
    for p in cfg.grid:
        op = model_mixed(p, h1, h2)
        energy, gs = ground_state(op, seed=cfg.seed)
        rows.append(analyze_state(gs, cfg.m, energy, p))
    _write_outputs(cfg, rows)
    return rows


def _write_outputs(cfg: SweepConfig, rows: list[SweepRow]) -> None:
    stat = FERMION if cfg.model in ("fermion", "mixed") else BOSON
    cols = pio.csv_columns(cfg.n, stat)
    pio.write_csv(cfg.out, cols, [r.as_list() for r in rows], SCHEMA)
    if cfg.svg:
        render_svg(cfg.out, cfg.svg)


def render_svg(csv_path, svg_path) -> None:
    """Line plots of the main sweep quantities (requires matplotlib)."""
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("SVG rendering requires matplotlib") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    _, cols, rows = pio.read_csv(csv_path)
    data = np.asarray(rows)
    x = data[:, cols.index("abscissa")]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, data[:, cols.index("lambda_over_m")], "-o", ms=2.5,
            label="lambda_1/m")
    ax.plot(x, data[:, cols.index("overlap")], "--", label="overlap")
    ax.set_xlabel("scaled coupling")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)


# ----------------------------------------------------------------------
# conserved-operator audits
# ----------------------------------------------------------------------


def expected_one_body_count(spec: dict) -> int | None:
    """Closed-form conserved one-body count for a known state family."""
    family = spec["family"]
    n = spec["n"]
    stat = _stat_of(spec)
    if family == "condensate":
        return n * (n + 1) // 2 + 1 if stat is FERMION else n * (n - 1) // 2 + 1
    if family == "random":
        return 1
    if family == "paired":
        return 3 * n // 2 + 1 if stat is FERMION else n // 2 + 1
    if family == "ghz":
        return n * n // 2 - 1 if stat is FERMION else n - 1
    if family == "group":
        sizes = [len(g) for g in spec["groups"]]
        if stat is FERMION:
            return sum(s * s - 1 for s in sizes) + 1
        return n - len(sizes) + 1
    return None


def _stat_of(spec: dict) -> Statistics:
    return FERMION if spec.get("statistics", "fermion") == "fermion" else BOSON


def build_family_state(spec: dict) -> StateVector:
    """Construct a state from a generator specification.

    Families: ``condensate`` (n, m, seed), ``random`` (n, N, seed),
    ``paired``/``group`` (random coefficients over valid configurations),
    ``ghz`` (alpha, beta).
    """
    stat = _stat_of(spec)
    n = spec["n"]
    rng = np.random.default_rng(spec.get("seed", 0))
    family = spec["family"]
    if family == "condensate":
        a = random_pair_matrix(n, stat, rng)
        state, _ = build_condensate(a, spec["m"])
        return state
    if family == "random":
        b = basis(n, spec["N"], stat)
        amp = rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim)
        return StateVector(b, amp).normalized()
    if family == "ghz":
        alpha = spec.get("alpha", 1.0 / math.sqrt(2.0))
        beta = spec.get("beta", math.sqrt(1.0 - alpha ** 2))
        return build_ghz_state(n, alpha, beta, stat)
    if family == "paired":
        m = spec["m"]
        d = n // 2
        gammas = {}
        for cfg in _pair_configs(d, m, stat):
            gammas[cfg] = rng.standard_normal() + 1j * rng.standard_normal()
        return build_paired_state(gammas, n, stat)
    if family == "group":
        groups = spec["groups"]
        number = spec["N"]
        gammas = {}
        for cfg in _group_configs([len(g) for g in groups], number, stat):
            gammas[cfg] = rng.standard_normal() + 1j * rng.standard_normal()
        return build_group_state(groups, gammas, n, stat)
    raise ValueError(f"unknown family {family!r}")


def _pair_configs(d: int, m: int, stat: Statistics):
    import itertools
    top = 1 if stat is FERMION else m
    for cfg in itertools.product(range(top + 1), repeat=d):
        if sum(cfg) == m:
            yield cfg


def _group_configs(sizes: list[int], number: int, stat: Statistics):
    import itertools
    top = [1 if stat is FERMION else number for _ in sizes]
    for cfg in itertools.product(*[range(t + 1) for t in top]):
        if sum(c * s for c, s in zip(cfg, sizes)) == number:
            yield cfg


def audit(spec: dict) -> dict:
    """Conserved-operator census of a generated state.

    Returns counts for one-body and pair classes, the spectral gap
    backing the one-body count, and the closed-form expectation when the
    family has one.
    """
    state = build_family_state(spec)
    one = conserved_count(state, "one_body")
    pann = conserved_count(state, "pair_annih")
    pcre = conserved_count(state, "pair_crea")
    expected = expected_one_body_count(spec)
    return {
        "family": spec["family"],
        "statistics": state.statistics.value,
        "n": state.n,
        "N": state.number,
        "one_body_count": one.dimension,
        "one_body_gap_ratio": one.gap_ratio,
        "pair_annihilation_count": pann.dimension,
        "pair_creation_count": pcre.dimension,
        "expected_one_body": expected,
        "matches_expected": (None if expected is None
                             else one.dimension == expected),
        "rho11_spectrum_tail": [float(x) for x in
                                np.sort(one.spectrum)[:12]],
    }
