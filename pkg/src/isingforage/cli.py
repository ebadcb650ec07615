"""Command line entry points: evolve, criticality, analyze, validate-config.

Runs fan out over a process pool sized by --workers (default: hardware
parallelism). Every worker owns streams derived from the master seed and
its job indices, and all files are written by the parent in a fixed order,
so outputs are byte-identical regardless of pool size. Exit codes: 0 ok,
2 invalid config or inputs, 3 I/O failure while writing.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    GeneralizabilityResult,
    gamma_from_trace,
    generalizability,
    operator_fitness_histograms,
    perturbation_sweep,
    regime_distribution_test,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    config_from_doc,
    config_to_doc,
    load_config,
    resolve_output_dir,
)
from .criticality import default_grid, find_c_crit, heat_capacity_curve, organism_delta
from .evolution import evolve
from .genome import genome_from_dict, genome_to_dict
from .io import (
    build_manifest,
    load_genome_snapshot,
    read_csv_column,
    read_jsonl,
    read_manifest,
    record_from_doc,
    record_to_doc,
    write_csv,
    write_jsonl,
    write_manifest,
)
from .seeds import derive_rng, derive_seedseq


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _pool_size(requested: int, n_jobs: int) -> int:
    workers = requested if requested > 0 else (os.cpu_count() or 1)
    return max(1, min(workers, n_jobs))


# ------------------------------------------------------------ evolve


def _job_seed(master_seed: int, beta_index: int, replicate: int) -> int:
    words = derive_seedseq(master_seed, "evolve", beta_index, replicate)
    return int(words.generate_state(1, np.uint64)[0])


def _evolve_job(config_doc: dict, beta_index: int, replicate: int):
    """One full evolution run; returns JSONL docs and genome snapshots."""
    config = config_from_doc(config_doc)
    run = config.run
    evo = dataclasses.replace(
        config.evolution,
        beta_init=float(run.beta_init[beta_index]),
        seed=_job_seed(run.master_seed, beta_index, replicate),
        delta_stride=run.delta_stride,
    )
    crit = config.criticality

    delta_fn = None
    if run.delta_stride > 0:
        def delta_fn(org, rng):
            snapshot = org.state.values[: org.genome.n_sensors].copy()
            return organism_delta(org.genome, snapshot, crit, rng).delta

    wanted = {0, evo.generations}
    snapshots = []

    def snapshot_hook(generation, genomes, record):
        take = generation in wanted or (
            run.snapshot_stride > 0 and generation % run.snapshot_stride == 0
        )
        if take:
            snapshots.append((
                generation,
                [genome_to_dict(g) for g in genomes],
                [float(f) for f in record.fitness],
            ))

    records = evolve(config.world, evo, delta_fn=delta_fn,
                     snapshot_hook=snapshot_hook)
    return [record_to_doc(r) for r in records], snapshots


def cmd_evolve(args) -> int:
    config = load_config(args.config, args.set or ())
    config_doc = config_to_doc(config)
    run = config.run
    out_dir = resolve_output_dir(config)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(bi, r) for bi in range(len(run.beta_init))
            for r in range(run.n_replicates)]
    workers = _pool_size(args.workers or run.workers, len(jobs))
    results = {}
    if workers == 1:
        for i, (bi, r) in enumerate(jobs):
            results[(bi, r)] = _evolve_job(config_doc, bi, r)
            _progress(f"evolve: beta={run.beta_init[bi]:g} replicate={r} "
                      f"done ({i + 1}/{len(jobs)})")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_evolve_job, config_doc, bi, r): (bi, r)
                for bi, r in jobs
            }
            for i, fut in enumerate(as_completed(futures)):
                bi, r = futures[fut]
                results[(bi, r)] = fut.result()
                _progress(f"evolve: beta={run.beta_init[bi]:g} replicate={r} "
                          f"done ({i + 1}/{len(jobs)})")

    files = []
    for bi, r in jobs:
        docs, snapshots = results[(bi, r)]
        log_name = f"log_b{bi:02d}_r{r:03d}.jsonl"
        write_jsonl(out_dir / log_name, docs)
        files.append((log_name, "generation-log"))
        for generation, genome_docs, fitness in snapshots:
            snap_name = f"genomes_b{bi:02d}_r{r:03d}_gen{generation:05d}.json"
            (out_dir / snap_name).write_text(
                json.dumps(
                    {
                        "schema_version": 1,
                        "generation": generation,
                        "beta_index": bi,
                        "replicate": r,
                        "fitness": fitness,
                        "genomes": genome_docs,
                    },
                    sort_keys=True, separators=(",", ":"),
                ) + "\n",
                encoding="utf-8",
            )
            files.append((snap_name, "genome-snapshot"))
    manifest = build_manifest(config_doc, run.master_seed, __version__, files)
    write_manifest(out_dir / "manifest.json", manifest)
    _progress(f"evolve: wrote {len(files)} files to {out_dir}")
    return 0


# ------------------------------------------------------------ criticality


def _criticality_job(genome_doc: dict, sensors: list, config_doc: dict, k: int):
    config = config_from_doc(config_doc)
    genome = genome_from_dict(genome_doc)
    rng = derive_rng(config.run.master_seed, "criticality", k)
    grid = default_grid(config.criticality)
    curve = heat_capacity_curve(genome, np.array(sensors), grid,
                                config.criticality, rng)
    estimate = find_c_crit(curve)
    return (k, [float(c) for c in grid], [float(v) for v in curve.values],
            float(estimate.c_beta_crit), float(estimate.delta), estimate.flag)


def cmd_criticality(args) -> int:
    config = load_config(args.config, args.set or ())
    config_doc = config_to_doc(config)
    genomes_path = Path(args.genomes)
    if not genomes_path.exists():
        raise ConfigError(f"genome file not found: {genomes_path}")
    _, genomes, _ = load_genome_snapshot(genomes_path)
    if not genomes:
        raise ConfigError(f"genome file {genomes_path} holds no genomes")

    if args.snapshot:
        snapshot_path = Path(args.snapshot)
        if not snapshot_path.exists():
            raise ConfigError(f"snapshot file not found: {snapshot_path}")
        sensor_sets = json.loads(snapshot_path.read_text(encoding="utf-8"))
        if len(sensor_sets) != len(genomes):
            raise ConfigError("snapshot file must hold one sensor row per genome")
    else:
        sensor_sets = [
            derive_rng(config.run.master_seed, "criticality-sensors", k)
            .uniform(-1.0, 1.0, genomes[k].n_sensors).tolist()
            for k in range(len(genomes))
        ]

    out_dir = Path(args.out_dir) if args.out_dir else resolve_output_dir(config) / "criticality"
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = list(range(len(genomes)))
    workers = _pool_size(args.workers or config.run.workers, len(jobs))
    rows = {}
    if workers == 1:
        for k in jobs:
            rows[k] = _criticality_job(genome_to_dict(genomes[k]),
                                       sensor_sets[k], config_doc, k)
            _progress(f"criticality: organism {k} delta={rows[k][4]:+.3f} "
                      f"flag={rows[k][5]}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_criticality_job, genome_to_dict(genomes[k]),
                            sensor_sets[k], config_doc, k): k
                for k in jobs
            }
            for fut in as_completed(futures):
                k = futures[fut]
                rows[k] = fut.result()
                _progress(f"criticality: organism {k} delta={rows[k][4]:+.3f} "
                          f"flag={rows[k][5]}")

    heatcap_rows = []
    regime_rows = []
    deltas = []
    for k in jobs:
        _, grid, values, c_crit, delta, flag = rows[k]
        heatcap_rows.extend((k, c, v) for c, v in zip(grid, values))
        regime_rows.append((k, c_crit, delta, flag))
        if not math.isnan(delta):
            deltas.append(delta)
    write_csv(out_dir / "heatcap.csv",
              ["organism", "c_beta", "heat_capacity"], heatcap_rows)
    write_csv(out_dir / "regime.csv",
              ["organism", "c_beta_crit", "delta", "flag"], regime_rows)
    summary = {
        "schema_version": 1,
        "n_organisms": len(genomes),
        "n_degenerate": sum(1 for row in regime_rows if row[3] == "degenerate"),
        "n_boundary": sum(1 for row in regime_rows if row[3] == "boundary"),
        "mean_delta": float(np.mean(deltas)) if deltas else None,
        "median_delta": float(np.median(deltas)) if deltas else None,
        "spread_delta": (float(np.std(deltas, ddof=1))
                         if len(deltas) > 1 else 0.0 if deltas else None),
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    files = [("heatcap.csv", "heat-capacity-table"),
             ("regime.csv", "regime-table"),
             ("summary.json", "regime-summary")]
    write_manifest(out_dir / "criticality_manifest.json",
                   build_manifest(config_doc, config.run.master_seed,
                                  __version__, files))
    _progress(f"criticality: wrote {len(files)} files to {out_dir}")
    return 0


# ------------------------------------------------------------ analyze


def _load_run_context(args):
    """Config doc and master seed for an analyze invocation.

    The run directory's manifest is authoritative; an explicit --config can
    stand in when the analysis does not live next to an evolve run.
    """
    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        manifest = read_manifest(manifest_path)
        return manifest["config"], int(manifest["master_seed"])
    if args.config:
        config = load_config(args.config, args.set or ())
        return config_to_doc(config), config.run.master_seed
    return None, 0


def _result_doc(result: GeneralizabilityResult) -> dict:
    return {
        "schema_version": 1,
        "gamma": result.gamma,
        "t_train": result.t_train,
        "t_extend": result.t_extend,
        "fitness_train": result.fitness_train,
        "fitness_extend": result.fitness_extend,
        "flag": result.flag,
        "cluster": result.cluster,
    }


def _require_input(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _analyze_generalize(args, out_dir, config_doc, master_seed) -> list:
    if args.trace:
        trace = read_csv_column(_require_input(args.trace, "trace file"),
                                "mean_energy")
        gamma, flag = gamma_from_trace(trace, args.t_train, args.t_extend)
        cluster = None
        if flag == "ok":
            cluster = "overfit" if gamma < 0.5 else "generalizes"
        result = GeneralizabilityResult(
            gamma=gamma, t_train=args.t_train, t_extend=args.t_extend,
            fitness_train=float(trace[args.t_train - 1]),
            fitness_extend=float(trace[args.t_extend - 1]),
            flag=flag, cluster=cluster,
        )
    elif args.genomes:
        if config_doc is None:
            raise ConfigError("generalize from genomes needs a manifest or --config")
        config = config_from_doc(config_doc)
        _, genomes, _ = load_genome_snapshot(
            _require_input(args.genomes, "genome file"))
        result = generalizability(
            genomes, config.world, args.t_train, args.t_extend,
            derive_rng(master_seed, "analyze", "generalize"),
        )
    else:
        raise ConfigError("generalize needs --trace or --genomes")
    doc = _result_doc(result)
    (out_dir / "generalize.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    header = ["gamma", "t_train", "t_extend", "fitness_train",
              "fitness_extend", "flag", "cluster"]
    write_csv(out_dir / "generalize.csv", header,
              [[doc[h] for h in header]])
    _progress(f"analyze: gamma={result.gamma:.6g} flag={result.flag}")
    return [("analysis/generalize.json", "generalizability-summary"),
            ("analysis/generalize.csv", "generalizability-table")]


def _analyze_perturb(args, out_dir, config_doc, master_seed) -> list:
    if not args.genomes:
        raise ConfigError("perturb needs --genomes")
    if config_doc is None:
        raise ConfigError("perturb needs a manifest or --config")
    config = config_from_doc(config_doc)
    _, genomes, _ = load_genome_snapshot(
        _require_input(args.genomes, "genome file"))
    f_grid = [float(x) for x in args.f_grid.split(",")]
    workers = _pool_size(args.workers or config.run.workers,
                         len(f_grid) * args.n_seeds)
    rng = derive_rng(master_seed, "analyze", "perturb")
    if workers == 1:
        curve = perturbation_sweep(genomes, config.world, f_grid,
                                   args.n_seeds, rng)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            curve = perturbation_sweep(genomes, config.world, f_grid,
                                       args.n_seeds, rng, executor=pool)
    rows = [
        (float(curve.f_grid[p]), s, float(curve.samples[p, s]))
        for p in range(curve.f_grid.size)
        for s in range(curve.samples.shape[1])
    ]
    write_csv(out_dir / "perturbation.csv",
              ["f_pert", "seed", "mean_fitness"], rows)
    doc = {
        "schema_version": 1,
        "f_grid": [float(x) for x in curve.f_grid],
        "mean_fitness": [float(x) for x in curve.mean_fitness],
        "fitness_sd": [float(x) for x in curve.fitness_sd],
        "alpha": curve.alpha,
        "amplitude": curve.amplitude,
        "fit_ok": curve.fit_ok,
        "excluded": curve.excluded,
        "n_seeds": args.n_seeds,
    }
    (out_dir / "perturbation.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    _progress(f"analyze: perturbation alpha={curve.alpha:.4g} "
              f"fit_ok={curve.fit_ok}")
    return [("analysis/perturbation.csv", "perturbation-table"),
            ("analysis/perturbation.json", "perturbation-fit")]


def _analyze_operators(args, out_dir, run_dir) -> list:
    logs = sorted(run_dir.glob("log_*.jsonl"))
    if args.log:
        logs = [_require_input(args.log, "generation log")]
    if not logs:
        raise ConfigError(f"no generation logs found under {run_dir}")
    records = [record_from_doc(doc) for log in logs for doc in read_jsonl(log)]
    hist = operator_fitness_histograms(records, args.gen_lo, args.gen_hi,
                                       n_bins=args.bins)
    rows = []
    for tag, counts in hist.counts.items():
        for b, count in enumerate(counts):
            rows.append((tag, float(hist.bin_edges[b]),
                         float(hist.bin_edges[b + 1]), int(count)))
    write_csv(out_dir / "operators.csv",
              ["operator", "bin_left", "bin_right", "count"], rows)
    doc = {
        "schema_version": 1,
        "gen_lo": hist.gen_lo,
        "gen_hi": hist.gen_hi,
        "totals": hist.totals,
        "bin_edges": [float(x) for x in hist.bin_edges],
    }
    (out_dir / "operators.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    _progress(f"analyze: operators totals={hist.totals}")
    return [("analysis/operators.csv", "operator-histograms"),
            ("analysis/operators.json", "operator-summary")]


def _analyze_regime_test(args, out_dir) -> list:
    if not args.deltas_a or not args.deltas_b:
        raise ConfigError("regime-test needs --deltas-a and --deltas-b")
    a = read_csv_column(_require_input(args.deltas_a, "delta file"), "delta")
    b = read_csv_column(_require_input(args.deltas_b, "delta file"), "delta")
    out = regime_distribution_test(a, b)
    doc = {
        "schema_version": 1,
        "p_value": out.p_value,
        "u_statistic": out.u_statistic,
        "mean_a": out.mean_a,
        "mean_b": out.mean_b,
        "n_a": out.n_a,
        "n_b": out.n_b,
        "flag": out.flag,
    }
    (out_dir / "regime_test.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    _progress(f"analyze: regime test p={out.p_value:.3g} flag={out.flag}")
    return [("analysis/regime_test.json", "regime-test")]


def cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.exists():
        raise ConfigError(f"run directory not found: {run_dir}")
    out_dir = run_dir / "analysis"
    out_dir.mkdir(parents=True, exist_ok=True)
    config_doc, master_seed = _load_run_context(args)

    if args.analysis == "generalize":
        files = _analyze_generalize(args, out_dir, config_doc, master_seed)
    elif args.analysis == "perturb":
        files = _analyze_perturb(args, out_dir, config_doc, master_seed)
    elif args.analysis == "operators":
        files = _analyze_operators(args, out_dir, run_dir)
    elif args.analysis == "regime-test":
        files = _analyze_regime_test(args, out_dir)
    else:
        raise ConfigError(f"unknown analysis {args.analysis!r}")
    write_manifest(out_dir / f"{args.analysis.replace('-', '_')}_manifest.json",
                   build_manifest(config_doc or {}, master_seed,
                                  __version__, files))
    return 0


def cmd_validate_config(args) -> int:
    config = load_config(args.config, args.set or ())
    jobs = len(config.run.beta_init) * config.run.n_replicates
    print(f"config ok: {jobs} evolution jobs, "
          f"output {resolve_output_dir(config)}")
    return 0


# ------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isingforage",
        description="Evolve and analyze Ising-network foraging agents.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML experiment config")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config field (repeatable)")
        p.add_argument("--workers", type=int, default=0,
                       help="worker pool size (default: hardware parallelism)")

    p_evolve = sub.add_parser("evolve", help="run replicated evolution experiments")
    common(p_evolve)
    p_evolve.set_defaults(handler=cmd_evolve)

    p_crit = sub.add_parser("criticality",
                            help="heat-capacity scan of saved genomes")
    common(p_crit)
    p_crit.add_argument("--genomes", required=True,
                        help="genome snapshot JSON written by evolve")
    p_crit.add_argument("--snapshot",
                        help="JSON file with one sensor row per genome")
    p_crit.add_argument("--out-dir", help="output directory (default: run dir)")
    p_crit.set_defaults(handler=cmd_criticality)

    p_an = sub.add_parser("analyze", help="post-run analyses of a run directory")
    p_an.add_argument("analysis",
                      choices=["generalize", "perturb", "operators", "regime-test"])
    p_an.add_argument("--run-dir", required=True)
    common(p_an)
    p_an.add_argument("--genomes", help="genome snapshot JSON")
    p_an.add_argument("--trace", help="CSV with a mean_energy column")
    p_an.add_argument("--t-train", type=int, default=2000)
    p_an.add_argument("--t-extend", type=int, default=50000)
    p_an.add_argument("--f-grid", default="0,0.25,0.5,1.0",
                      help="comma-separated perturbation magnitudes")
    p_an.add_argument("--n-seeds", type=int, default=3)
    p_an.add_argument("--log", help="restrict operators to one generation log")
    p_an.add_argument("--gen-lo", type=int, default=0)
    p_an.add_argument("--gen-hi", type=int, default=1)
    p_an.add_argument("--bins", type=int, default=30)
    p_an.add_argument("--deltas-a", help="CSV with a delta column")
    p_an.add_argument("--deltas-b", help="CSV with a delta column")
    p_an.set_defaults(handler=cmd_analyze)

    p_val = sub.add_parser("validate-config", help="check a config and exit")
    common(p_val)
    p_val.set_defaults(handler=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
