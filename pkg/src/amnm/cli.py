"""Experiment harness: seeded instance generation, suites, reports.

Commands (single JSON config file plus flag overrides):

    amnm stabilize --config cfg.json [--seed N] [--out DIR]
    amnm defect    --config cfg.json [--seed N] [--out DIR]
    amnm suite     --config cfg.json [--seed N] [--out DIR]
    amnm tsirelson [norm] --vector '[1,0,2]' [--schreier '[3,4,5]']
    amnm clones --word 0110 [--word 1011 ...] --n 12 --horizon 20

Exit codes: 0 all assertions passed, 1 falsification / non-convergence /
refused precondition, 2 configuration error.  AMNM_THREADS caps suite
parallelism; reports are byte-identical for identical (config, seed)
regardless of the thread count because every row derives its randomness
from (seed, instance index) and rows are assembled in key order.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import suites
from .algebra import (
    Algebra,
    Embedding,
    build_full_matrix_algebra,
    generated_subalgebra,
)
from .diagonal import DiagonalCert, library_diagonal
from .errors import ConfigError, DomainError, FalsificationError, PreconditionError
from .jsonio import dumps, write_json
from .multilinear import LinearMap, defect, linear_map_norm
from .rng import complex_gaussian, stream
from .stabilizer import StabilizeConfig, stabilize
from .tsirelson import (
    TsirelsonVector,
    clone_family,
    clone_system_verify,
    intersection_size,
    interval_schreier_report,
    schreier_inequality,
    tsirelson_norm_levels,
)

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    """Resolved configuration for a command run."""

    command: str
    seed: int
    norm_mode: str = "spectral"
    matrix_dim: int = 2
    gamma_norm: float = 1e-3
    L: float = 2.0
    tol: float = 1e-8
    max_iter: int = 30
    restarts: int = 32
    sweeps: int = 200
    check_claim_bounds: bool = True
    instances: int = 10
    out: str = "reports"

    def validate(self) -> None:
        if self.command not in ("stabilize", "defect", "suite", "tsirelson", "clones"):
            raise ConfigError(f"unknown command {self.command!r}")
        if self.norm_mode not in ("spectral", "frobenius"):
            raise ConfigError("norm_mode must be 'spectral' or 'frobenius'")
        if not (1 <= self.matrix_dim <= 4):
            raise ConfigError("matrix_dim must be between 1 and 4")
        if not (0.0 <= self.gamma_norm <= 1.0):
            raise ConfigError("gamma_norm must lie in [0, 1]")
        if self.L < 1.0:
            raise ConfigError("L must be at least 1")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("tol must be positive and max_iter at least 1")
        if not (1 <= self.restarts <= 4096) or not (1 <= self.sweeps <= 100000):
            raise ConfigError("restart/sweep budgets out of range")
        if not (1 <= self.instances <= 10000):
            raise ConfigError("instances out of range")

    def to_json_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "command": self.command,
            "seed": self.seed,
            "norm_mode": self.norm_mode,
            "dims": {"matrix": self.matrix_dim},
            "gamma_norm": self.gamma_norm,
            "L": self.L,
            "tolerances": {"stabilize_tol": self.tol},
            "max_iter": self.max_iter,
            "restarts": self.restarts,
            "sweeps": self.sweeps,
            "check_claim_bounds": self.check_claim_bounds,
            "instances": self.instances,
        }


def load_config(path: str | None, command: str, seed_flag: int | None, out_flag: str | None) -> RunConfig:
    doc: dict = {}
    if path is not None:
        try:
            with open(path) as handle:
                doc = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {doc.get('schema')}")
    seed = seed_flag if seed_flag is not None else doc.get("seed")
    if seed is None:
        raise ConfigError("a seed is mandatory (config 'seed' or --seed)")
    dims = doc.get("dims", {})
    tolerances = doc.get("tolerances", {})
    cfg = RunConfig(
        command=command,
        seed=int(seed),
        norm_mode=doc.get("norm_mode", "spectral"),
        matrix_dim=int(dims.get("matrix", 2)),
        gamma_norm=float(doc.get("gamma_norm", 1e-3)),
        L=float(doc.get("L", 2.0)),
        tol=float(tolerances.get("stabilize_tol", doc.get("tol", 1e-8))),
        max_iter=int(doc.get("max_iter", 30)),
        restarts=int(doc.get("restarts", 32)),
        sweeps=int(doc.get("sweeps", 200)),
        check_claim_bounds=bool(doc.get("check_claim_bounds", True)),
        instances=int(doc.get("instances", 10)),
        out=out_flag if out_flag is not None else doc.get("out", "reports"),
    )
    cfg.validate()
    return cfg


@dataclass
class Instance:
    algebra: Algebra
    embedding: Embedding
    cert: DiagonalCert
    phi: LinearMap
    gamma_norm_measured: float


def generate_instance(config: RunConfig, index: int = 0) -> Instance:
    """Seeded scenario: library algebra, diagonal subalgebra with its
    diagonal, and a unit-preserving perturbation of the identity.

    The perturbation gamma kills the unit (gamma(1) = 0) and its coefficient
    matrix is rescaled so the largest singular value equals ``gamma_norm``
    exactly; fully deterministic in (seed, index).
    """
    k = config.matrix_dim
    a = build_full_matrix_algebra(k, norm_mode=config.norm_mode)
    diag_units = [a.basis_element(i * k + i) for i in range(k)]
    d, emb = generated_subalgebra(a, diag_units, unital=True)
    cert = library_diagonal(d)
    rng = stream(config.seed, index, 1)
    gamma = complex_gaussian(rng, (a.dim, a.dim))
    unit = a.unit_coords
    gamma = gamma - np.outer(gamma @ unit, unit.conj()) / np.vdot(unit, unit)
    top = np.linalg.svd(gamma, compute_uv=False)[0]
    measured = 0.0
    if config.gamma_norm > 0 and top > 0:
        gamma = gamma / top * config.gamma_norm
        measured = float(np.linalg.svd(gamma, compute_uv=False)[0])
    else:
        gamma = np.zeros_like(gamma)
    phi = LinearMap(a, a, np.eye(a.dim, dtype=complex) + gamma)
    return Instance(a, emb, cert, phi, measured)


# -- commands -----------------------------------------------------------------


def _ensure_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_stabilize(cfg: RunConfig) -> int:
    out = _ensure_out(cfg)
    inst = generate_instance(cfg)
    sconf = StabilizeConfig(
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        L=cfg.L,
        seed=cfg.seed,
        check_claim_bounds=cfg.check_claim_bounds,
        restarts=cfg.restarts,
        sweeps=cfg.sweeps,
    )
    report = stabilize(inst.phi, inst.embedding, inst.cert, sconf)
    doc = {"schema": SCHEMA_VERSION, "config": cfg.to_json_dict()}
    doc.update(report.to_json_dict())
    write_json(out / "stabilize_report.json", doc)
    with open(out / "iterates.csv", "w", newline="") as handle:
        writer = csv.DictWriter(
            handle,
            fieldnames=[
                "iter", "step_norm_lo", "step_norm_hi", "def_da_lo", "def_da_hi",
                "claim_step", "claim_defect",
            ],
        )
        writer.writeheader()
        for row in report.csv_rows():
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    ok = report.converged and report.all_claims_ok
    print(f"stabilize: converged={report.converged} iterations={len(report.iterates)} "
          f"claims={report.all_claims_ok} distance=[{report.total_distance.lower:.3e}, "
          f"{report.total_distance.upper:.3e}] bound={report.theorem_bound:.3e}")
    return 0 if ok else 1


def cmd_defect(cfg: RunConfig) -> int:
    out = _ensure_out(cfg)
    inst = generate_instance(cfg)
    emb = inst.embedding
    rows = {
        "def": defect(inst.phi, restarts=cfg.restarts, sweeps=cfg.sweeps, seed=cfg.seed),
        "def_da": defect(inst.phi, left=emb, restarts=cfg.restarts, sweeps=cfg.sweeps, seed=cfg.seed + 1),
        "def_ad": defect(inst.phi, right=emb, restarts=cfg.restarts, sweeps=cfg.sweeps, seed=cfg.seed + 2),
        "def_dd": defect(inst.phi, left=emb, right=emb, restarts=cfg.restarts, sweeps=cfg.sweeps, seed=cfg.seed + 3),
        "norm": linear_map_norm(inst.phi, cfg.restarts, cfg.sweeps, seed=cfg.seed + 4),
    }
    doc = {
        "schema": SCHEMA_VERSION,
        "config": cfg.to_json_dict(),
        "gamma_norm_measured": inst.gamma_norm_measured,
        "estimates": {k: v.to_json_dict() for k, v in rows.items()},
    }
    write_json(out / "defect_report.json", doc)
    print("defect:", ", ".join(f"{k}=[{v.lower:.6e}, {v.upper:.6e}]" for k, v in rows.items()))
    return 0


def cmd_suite(cfg: RunConfig) -> int:
    out = _ensure_out(cfg)
    threads = int(os.environ.get("AMNM_THREADS", "1") or "1")
    tasks = suites.build_suite_tasks(cfg)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda t: t(), tasks))
    else:
        rows = [t() for t in tasks]
    flat = [row for group in rows for row in group]
    flat.sort(key=lambda r: r["id"])
    passed = all(r["passed"] for r in flat)
    doc = {
        "schema": SCHEMA_VERSION,
        "config": cfg.to_json_dict(),
        "rows": flat,
        "passed": passed,
        "total": len(flat),
        "failures": sum(1 for r in flat if not r["passed"]),
    }
    write_json(out / "suite_report.json", doc)
    with open(out / "suite_rows.jsonl", "w") as handle:
        for row in flat:
            handle.write(json.dumps(row, sort_keys=True, separators=(",", ":")))
            handle.write("\n")
    print(f"suite: {len(flat) - doc['failures']}/{len(flat)} rows passed")
    if not passed:
        for r in flat:
            if not r["passed"]:
                print(f"  FAILED {r['id']} ({r['check']})")
    return 0 if passed else 1


def cmd_tsirelson(args: argparse.Namespace) -> int:
    if args.vector is None:
        raise ConfigError("--vector is required")
    try:
        values = json.loads(args.vector)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--vector must be a JSON array: {exc}") from exc
    if not isinstance(values, list):
        raise ConfigError("--vector must be a JSON array")
    vec = TsirelsonVector.from_dense([complex(v) for v in values])
    levels = tsirelson_norm_levels(vec)
    doc = {
        "schema": SCHEMA_VERSION,
        "norm": levels[-1],
        "levels": levels,
        "stabilized_at": len(levels) - 1,
        "support": vec.support,
    }
    if args.schreier is not None:
        indices = json.loads(args.schreier)
        cert = schreier_inequality(vec, indices)
        doc["schreier"] = {"J": sorted(int(i) for i in indices), "norm": cert.norm,
                           "half_sum": cert.half_sum, "ok": cert.ok}
    print(dumps(doc))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "tsirelson_report.json", doc)
    return 0


def cmd_clones(args: argparse.Namespace) -> int:
    words = args.word or []
    if not words:
        raise ConfigError("at least one --word is required")
    n, horizon = args.n, args.horizon
    if n < 1 or horizon < 1:
        raise ConfigError("--n and --horizon must be positive")
    families = [clone_family(w, n) for w in words]
    fam_docs = []
    for w, fam in zip(words, families):
        gaps = interval_schreier_report(fam, horizon)
        fam_docs.append({
            "word": w,
            "terms": fam.terms,
            "doubling_ok": all(b <= 2 * a + 2 for a, b in zip(fam.terms, fam.terms[1:])),
            "gaps_in_horizon": [[lo, hi] for lo, hi in gaps],
        })
    pair_docs = []
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            rep = intersection_size(words[i], words[j], n)
            pair_docs.append({
                "pair": [words[i], words[j]],
                "intersection": rep.count,
                "first_disagreement": rep.first_disagreement,
                "identical_within_horizon": rep.identical_within_horizon,
            })
    system = clone_system_verify(families, horizon, seed=args.seed or 0)
    doc = {
        "schema": SCHEMA_VERSION,
        "families": fam_docs,
        "pairs": pair_docs,
        "projections": {
            "idempotent_ok": system.idempotent_ok,
            "contractive_ok": system.contractive_ok,
            "attains_one_ok": system.attains_one_ok,
            "rank_ok": system.rank_ok,
            "checked_pairs": system.checked_pairs,
        },
    }
    print(dumps(doc))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_json(Path(args.out) / "clones_report.json", doc)
    return 0 if system.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amnm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("stabilize", "defect", "suite"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
    pt = sub.add_parser("tsirelson")
    pt.add_argument("action", nargs="?", default="norm", choices=["norm"])
    pt.add_argument("--vector", default=None)
    pt.add_argument("--schreier", default=None)
    pt.add_argument("--out", default=None)
    pc = sub.add_parser("clones")
    pc.add_argument("--word", action="append")
    pc.add_argument("--n", type=int, default=12)
    pc.add_argument("--horizon", type=int, default=20)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "tsirelson":
            return cmd_tsirelson(args)
        if args.command == "clones":
            return cmd_clones(args)
        cfg = load_config(args.config, args.command, args.seed, args.out)
        if args.command == "stabilize":
            return cmd_stabilize(cfg)
        if args.command == "defect":
            return cmd_defect(cfg)
        return cmd_suite(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return 1
    except FalsificationError as exc:
        print(f"falsified: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
