"""Batch command-line front end: partition, dissect, compare, exact, rerun.

Every command writes a run manifest sufficient to reproduce its outputs
byte-identically (timings live only in the manifest itself).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import build_heavy_neighbors_ansatz, full_two_layer_ansatz
from .dissect import (DissectConfig, Permutation, baseline_partition,
                      evaluate_partition_merit, graph_to_pattern,
                      nested_dissection, symbolic_factorize)
from .graph import CoarseningMap, Partition, coarsen, load_graph, project_partition
from .qubo import build_qubo, exact_solve, to_hamiltonian
from .refine import FmConfig, fm_refine
from .varqite import VarqiteConfig, run_varqite

MANIFEST_SCHEMA = "qdissect/manifest-v1"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(outdir: Path, name: str, content: str) -> str:
    (outdir / name).write_text(content)
    return name


def _write_manifest(outdir: Path, command: str, config: dict, timings: dict,
                    outputs: list) -> None:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "code_version": __version__,
        "seed": config.get("seed"),
        "config": config,
        "timings": timings,
        "outputs": sorted(outputs),
    }
    (outdir / "manifest.json").write_text(_json_dump(manifest))


def _load_input(config: dict):
    path = config["input"]
    if not path:
        raise UsageError("--input is required")
    if not os.path.exists(path):
        raise UsageError(f"input file not found: {path}")
    return load_graph(path, config["format"])


def _parse_gates(preset: str, g, layers: int):
    """Ansatz preset: 'full-2layer' or 'truncated:<g0,g1,...>'."""
    if preset == "full-2layer":
        return full_two_layer_ansatz(g)
    if preset.startswith("truncated:"):
        gvec = [int(x) for x in preset.split(":", 1)[1].split(",")]
        return build_heavy_neighbors_ansatz(g, len(gvec), gvec)
    raise UsageError(f"bad --gates preset {preset!r}; use full-2layer or truncated:g0,g1,...")


def _coarsen_to(g, target: int, seed: int) -> CoarseningMap:
    if target >= g.n_vertices:
        return CoarseningMap(g, ())
    return coarsen(g, target, seed)


def cmd_partition(config: dict) -> int:
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {}
    t0 = time.perf_counter()
    g = _load_input(config)
    timings["load_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cmap = _coarsen_to(g, config["coarse_target"], config["seed"])
    coarse = cmap.coarse_graph
    timings["coarsen_s"] = time.perf_counter() - t0

    lam = None if config["lam"] in (None, "auto") else float(config["lam"])
    q = build_qubo(coarse, lam, config["nu"])
    ansatz = _parse_gates(config["gates"], coarse, config["layers"])

    c_star = None
    if coarse.n_vertices <= 20:
        c_star, _ = exact_solve(q)

    vcfg = VarqiteConfig(d_tau=config["dtau"], max_steps=config["steps"],
                         shots=config["shots"], ridge=config["ridge"],
                         seed=config["seed"])
    t0 = time.perf_counter()
    result = run_varqite(q, ansatz, vcfg, c_star=c_star)
    timings["varqite_s"] = time.perf_counter() - t0

    fine_part = project_partition(cmap, result.best_partition)
    refined = bool(config["refine"])
    if refined:
        fine_part = fm_refine(g, fine_part, FmConfig(
            max_iterations=config["fm_iterations"], epsilon=config["fm_epsilon"],
            seed=config["seed"]))

    outputs = []
    outputs.append(_write(outdir, "partition.json", _json_dump({
        "schema": "qdissect/partition-v1",
        "bits": fine_part.to_bitstring(),
        "coarse_bits": result.best_partition.to_bitstring(),
        "cut_weight": fine_part.cut_weight,
        "part_weights": list(fine_part.part_weights),
        "imbalance": fine_part.imbalance,
        "balanced": fine_part.balanced(config["nu"]),
        "balanced_sample_found": result.best_balanced,
        "refined": refined,
        "c_star": c_star,
    })))
    outputs.append(_write(outdir, "trace.jsonl", result.trace.to_jsonl()))
    outputs.append(_write(outdir, "histogram.json", _json_dump(
        {"schema": "qdissect/histogram-v1", **result.samples.to_json_dict()})))
    outputs.append(_write(outdir, "ansatz.json", _json_dump(
        {"schema": "qdissect/ansatz-v1", **ansatz.to_json_dict()})))
    _write_manifest(outdir, "partition", config, timings, outputs)
    return EXIT_OK


def _merit_csv(rows: list) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "nodes", "levels", "partitioner", "rank",
                     "nnz_factor", "ops", "cut", "imbalance", "flag"])
    writer.writerows(rows)
    return buf.getvalue()


def cmd_dissect(config: dict) -> int:
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {}
    g = _load_input(config)
    pattern = graph_to_pattern(g)

    external_bits = None
    if config["partitioner"] == "external-bitstring":
        if not config["bitstring_file"]:
            raise UsageError("external-bitstring partitioner needs --bitstring-file")
        external_bits = Path(config["bitstring_file"]).read_text().strip()

    dcfg = DissectConfig(
        nu=config["nu"], seed=config["seed"],
        fm=FmConfig(max_iterations=config["fm_iterations"],
                    epsilon=config["fm_epsilon"], seed=config["seed"]),
        varqite=VarqiteConfig(d_tau=config["dtau"], max_steps=config["steps"],
                              shots=config["shots"], ridge=config["ridge"],
                              seed=config["seed"]),
        external_bits=external_bits)
    t0 = time.perf_counter()
    tree, perm = nested_dissection(g, config["levels"], config["partitioner"],
                                   config["coarse_target"], dcfg)
    timings["dissect_s"] = time.perf_counter() - t0
    merit = symbolic_factorize(pattern, perm)
    natural = symbolic_factorize(pattern, Permutation(np.arange(g.n_vertices)))

    instance = Path(config["input"]).name
    rows = [
        [instance, g.n_vertices, config["levels"], config["partitioner"], 0,
         merit.nnz_factor, merit.ops, "", "", ""],
        [instance, g.n_vertices, 0, "natural-order", 0,
         natural.nnz_factor, natural.ops, "", "", ""],
    ]
    outputs = []
    outputs.append(_write(outdir, "permutation.txt", perm.to_text()))
    outputs.append(_write(outdir, "merit.csv", _merit_csv(rows)))
    _write_manifest(outdir, "dissect", config, timings, outputs)
    return EXIT_OK


def cmd_compare(config: dict) -> int:
    """Sweep coarse_target; per point report the 4 best balanced VarQITE
    merits and the fm-baseline merit."""
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {}
    g = _load_input(config)
    pattern = graph_to_pattern(g)
    targets = [int(x) for x in str(config["coarse_targets"]).split(",")]
    seeds = [config["seed"] + i for i in range(config["n_seeds"])]
    instance = Path(config["input"]).name

    rows = []
    t_all = time.perf_counter()
    for target in targets:
        per_seed_best_ops = []
        for seed in seeds:
            cmap = _coarsen_to(g, target, seed)
            coarse = cmap.coarse_graph
            q = build_qubo(coarse, None, config["nu"])
            ansatz = full_two_layer_ansatz(coarse)
            vcfg = VarqiteConfig(d_tau=config["dtau"], max_steps=config["steps"],
                                 shots=config["shots"], ridge=config["ridge"], seed=seed)
            result = run_varqite(q, ansatz, vcfg)
            # distinct sampled bitstrings, lowest energy first
            h = to_hamiltonian(q)
            table = h.energy_table()
            strings = sorted(result.samples.counts,
                             key=lambda s: (float(table[int(s, 2)]), s))[:10]
            candidates = [project_partition(
                cmap, Partition.from_bits(coarse, [int(c) for c in s])) for s in strings]
            dcfg = DissectConfig(nu=config["nu"], seed=seed)
            ranking = evaluate_partition_merit(g, pattern, candidates,
                                               config["levels"], dcfg)
            if not ranking.entries:
                rows.append([instance, target, seed, "varqite", "", "", "", "", "",
                             "all-candidates-unbalanced"])
            for rank, (part, merit) in enumerate(ranking.entries[:4]):
                rows.append([instance, target, seed, "varqite", rank,
                             merit.nnz_factor, merit.ops, part.cut_weight,
                             part.imbalance, ""])
                if rank == 0:
                    per_seed_best_ops.append(merit.ops)
            base_cfg = DissectConfig(nu=config["nu"], seed=seed)
            _, base_perm = nested_dissection(g, config["levels"], "fm-baseline",
                                             target, base_cfg)
            base_merit = symbolic_factorize(pattern, base_perm)
            base_part = baseline_partition(g, config["nu"], seed)
            rows.append([instance, target, seed, "fm-baseline", 0,
                         base_merit.nnz_factor, base_merit.ops,
                         base_part.cut_weight, base_part.imbalance, ""])
        if per_seed_best_ops:
            rows.append([instance, target, "", "varqite-variance", "",
                         "", float(np.var(per_seed_best_ops)), "", "", ""])
    timings["compare_s"] = time.perf_counter() - t_all

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "nodes", "seed", "partitioner", "rank",
                     "nnz_factor", "ops", "cut", "imbalance", "flag"])
    writer.writerows(rows)
    outputs = [_write(outdir, "compare.csv", buf.getvalue())]
    _write_manifest(outdir, "compare", config, timings, outputs)
    return EXIT_OK


def cmd_exact(config: dict) -> int:
    outdir = Path(config["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {}
    g = _load_input(config)
    cmap = _coarsen_to(g, config["coarse_target"], config["seed"])
    coarse = cmap.coarse_graph
    if coarse.n_vertices > 30:
        raise UsageError(f"exact enumeration refused for n={coarse.n_vertices} > 30")
    lam = None if config["lam"] in (None, "auto") else float(config["lam"])
    q = build_qubo(coarse, lam, config["nu"])
    t0 = time.perf_counter()
    c_star, optima = exact_solve(q)
    timings["exact_s"] = time.perf_counter() - t0
    outputs = [_write(outdir, "exact.json", _json_dump({
        "schema": "qdissect/exact-v1",
        "n": coarse.n_vertices,
        "lambda": q.lam,
        "nu": q.nu,
        "c_star": c_star,
        "optima": optima,
    }))]
    _write_manifest(outdir, "exact", config, timings, outputs)
    return EXIT_OK


COMMANDS = {
    "partition": cmd_partition,
    "dissect": cmd_dissect,
    "compare": cmd_compare,
    "exact": cmd_exact,
}


def cmd_rerun(manifest_path: str, out_override: str | None) -> int:
    manifest = json.loads(Path(manifest_path).read_text())
    config = dict(manifest["config"])
    if out_override:
        config["out"] = out_override
    return COMMANDS[manifest["command"]](config)


def _read_config_file(path: str) -> dict:
    """Key-value run config: 'key = value' or 'key: value', # comments."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = line.split(sep, 1)
                values[key.strip().replace("-", "_")] = val.strip()
                break
        else:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
    return values


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", default=None, help="key-value config file; flags win")
    p.add_argument("--input", default=None)
    p.add_argument("--format", default="metis",
                   choices=["metis", "edge-list", "matrix-market"])
    p.add_argument("--coarse-target", dest="coarse_target", type=int, default=32)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--nu", type=float, default=0.05)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--gates", default="full-2layer")
    p.add_argument("--dtau", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--shots", type=int, default=0,
                   help="0 = exact expectations; 2000 = simulator preset; 128 = hardware-like")
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--partitioner", default="fm-baseline",
                   choices=["varqite", "fm-baseline", "external-bitstring"])
    p.add_argument("--bitstring-file", dest="bitstring_file", default=None)
    p.add_argument("--fm-iterations", dest="fm_iterations", type=int, default=10)
    p.add_argument("--fm-epsilon", dest="fm_epsilon", type=float, default=0.05)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="qdissect-out")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdissect")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "compare":
            p.add_argument("--coarse-targets", dest="coarse_targets", default="16,24")
            p.add_argument("--n-seeds", dest="n_seeds", type=int, default=1)
    rerun = sub.add_parser("rerun")
    rerun.add_argument("manifest")
    rerun.add_argument("--out", default=None)
    return parser


def _resolve_config(args: argparse.Namespace, argv: list) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in ("command",)}
    if config.get("config"):
        file_values = _read_config_file(config["config"])
        given = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
        for key, val in file_values.items():
            if key in config and key not in given:
                cur = config[key]
                if isinstance(cur, bool):
                    config[key] = val.lower() in ("1", "true", "yes")
                elif isinstance(cur, int):
                    config[key] = int(val)
                elif isinstance(cur, float):
                    config[key] = float(val)
                else:
                    config[key] = val
    config.pop("config", None)
    if config.get("seed") is None:
        config["seed"] = os.environ.get("QDISSECT_SEED", "0")
    config["seed"] = int(config["seed"])  # file/env values arrive as strings
    return config


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        if args.command == "rerun":
            return cmd_rerun(args.manifest, args.out)
        config = _resolve_config(args, argv)
        return COMMANDS[args.command](config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # runtime failure, stage-tagged by message
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
