"""Command-line driver: coupling sweeps, audits, file-based detection.

Subcommands
-----------
sweep-boson / sweep-fermion / sweep-mixed
    Ground-state sweeps of the pairing models over a scaled-coupling
    (or mixing-parameter) grid, written as CSV and optional SVG.
audit
    Conserved-operator census of a generated state family.
detect
    Run the condensation test on rho1/rho2 matrix files; exit status 0
    for a condensate, 1 for a non-condensate, 2 for invalid input.
build
    Build a random pair condensate and emit its density-matrix files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as pio
from .detector import detect
from .fock import BOSON, FERMION, DensityMatrices, pair_indices, reduced_dms
from .pairs import build_condensate, random_pair_matrix
from .sweep import SweepConfig, audit, run_sweep


def _parse_grid(text: str) -> list[float]:
    """Grid syntax: 'a,b,c' explicit or 'start:stop:num' linspace."""
    if ":" in text:
        start, stop, num = text.split(":")
        pts = np.linspace(float(start), float(stop), int(num))
        return [float(x) for x in pts]
    return [float(tok) for tok in text.split(",") if tok]


def _add_sweep_args(sub, model: str):
    p = sub.add_parser(f"sweep-{model}",
                       help=f"{model} pairing-model ground-state sweep")
    p.add_argument("--config", help="JSON file with SweepConfig fields")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sigma-rule", default="sqrt_k",
                   choices=["sqrt_k", "uniform", "linear_k"])
    p.add_argument("--eps-rule", default="linear_k",
                   choices=["linear_k", "prop_sigma2"])
    p.add_argument("--eps-scale", type=float, default=1.0)
    p.add_argument("--grid", help="'a,b,c' or 'start:stop:num'")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=f"sweep_{model}.csv")
    p.add_argument("--svg")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    if model == "mixed":
        p.add_argument("--rotation", help="unitary matrix file (kind=unitary)")
        p.add_argument("--g2-over-gc", type=float, default=0.5)
    return p


def _sweep_config(args, model: str) -> SweepConfig:
    if args.config:
        return SweepConfig.from_json(args.config)
    if args.n is None or args.m is None:
        raise SystemExit("sweep needs --n and --m (or --config)")
    kwargs = dict(model=model, n=args.n, m=args.m, sigma=args.sigma_rule,
                  eps=args.eps_rule, eps_scale=args.eps_scale,
                  grid=_parse_grid(args.grid) if args.grid else [],
                  tol=args.tol, out=args.out, svg=args.svg,
                  workers=args.workers, seed=args.seed)
    if model == "mixed":
        kwargs.update(rotation_path=args.rotation,
                      g2_over_gc=args.g2_over_gc)
    return SweepConfig(**kwargs)


def cmd_sweep(args, model: str) -> int:
    cfg = _sweep_config(args, model)
    rows = run_sweep(cfg)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def cmd_audit(args) -> int:
    if args.config:
        with open(args.config) as fh:
            spec = json.load(fh)
    else:
        spec = {"family": args.family, "statistics": args.statistics,
                "n": args.n, "seed": args.seed}
        if args.m is not None:
            spec["m"] = args.m
        if args.N is not None:
            spec["N"] = args.N
        if args.groups:
            spec["groups"] = json.loads(args.groups)
    report = audit(spec)
    text = json.dumps(report, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_detect(args) -> int:
    try:
        doc1 = pio.read_matrix(args.rho1)
        doc2 = pio.read_matrix(args.rho2)
        if doc1["kind"] != "rho1" or doc2["kind"] != "rho2":
            raise pio.SchemaError("expected kinds rho1 and rho2")
        if doc1["n"] != doc2["n"] or doc1["statistics"] != doc2["statistics"]:
            raise pio.SchemaError("rho1/rho2 dimension or statistics mismatch")
        if doc2["index_convention"] != "packed_lex":
            raise pio.SchemaError("rho2 must use the packed_lex convention")
        pio.check_hermitian(doc1["matrix"], args.tol, args.rho1)
        pio.check_hermitian(doc2["matrix"], args.tol, args.rho2)
        stat = doc1["statistics_enum"]
        n = doc1["n"]
        dms = DensityMatrices(stat, n, 2 * args.m, doc1["matrix"],
                              doc2["matrix"], None, pair_indices(n, stat))
        report = detect(dms, args.m)
    except (pio.SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        pio.write_report(args.out, report)
    print(f"lambda_max = {report.lambda_max!r}  (m = {args.m})")
    print(f"degeneracy = {report.degeneracy}  gap = {report.gap!r}")
    print(f"D2 = {report.d2!r}")
    print(f"classification = {report.classification}")
    return 0 if report.is_condensate else 1


def cmd_build(args) -> int:
    stat = FERMION if args.statistics == "fermion" else BOSON
    rng = np.random.default_rng(args.seed)
    a = random_pair_matrix(args.n, stat, rng)
    state, _ = build_condensate(a, args.m)
    dms = reduced_dms(state)
    prefix = args.out_prefix
    pio.write_matrix(f"{prefix}_rho1.json", dms.rho1, kind="rho1",
                     statistics=stat, n=args.n, index_convention="full")
    pio.write_matrix(f"{prefix}_rho2.json", dms.rho2, kind="rho2",
                     statistics=stat, n=args.n, index_convention="packed_lex")
    pio.write_matrix(f"{prefix}_pair.json", a.mat, kind="pair",
                     statistics=stat, n=args.n, index_convention="full")
    print(f"wrote {prefix}_rho1.json, {prefix}_rho2.json, {prefix}_pair.json")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paircond",
        description="pair-condensate construction, sweeps and detection")
    sub = parser.add_subparsers(dest="command", required=True)

    for model in ("boson", "fermion", "mixed"):
        _add_sweep_args(sub, model)

    p = sub.add_parser("audit", help="conserved-operator census")
    p.add_argument("--config", help="JSON generator spec")
    p.add_argument("--family", choices=["condensate", "random", "paired",
                                        "ghz", "group"])
    p.add_argument("--statistics", choices=["fermion", "boson"],
                   default="fermion")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--groups", help="JSON list of mode groups")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("detect", help="condensation test on matrix files")
    p.add_argument("--rho1", required=True)
    p.add_argument("--rho2", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")

    p = sub.add_parser("build", help="emit condensate density-matrix files")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--statistics", choices=["fermion", "boson"],
                   default="fermion")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", default="condensate")

    args = parser.parse_args(argv)
    if args.command and args.command.startswith("sweep-"):
        return cmd_sweep(args, args.command[len("sweep-"):])
    if args.command == "audit":
        return cmd_audit(args)
    if args.command == "detect":
        return cmd_detect(args)
    if args.command == "build":
        return cmd_build(args)
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
