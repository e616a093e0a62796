"""Command-line pipeline: explore, quality, eval-tasks, predict, datasets.

The commands compose through files only: explore writes behaviour
databases, quality scores their voxel coverage, eval-tasks samples
databases into (behaviour, NMSE) pair files, and predict fits and
scores the behaviour->performance models. Every command writes a
manifest recording the config snapshot and seeds that produced its
outputs; given the same seed and inputs, databases and reports are
byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import logging
import os
import sys

import numpy as np

from . import config as config_mod
from . import learning, persistence, quality, tasks
from .exceptions import ConfigurationError, RcSpaceError
from .measures import BehaviourEvaluator
from .search import NoveltySearch, random_search

log = logging.getLogger(__name__)


def _manifest(cfg: dict, args, seed, outputs):
    return {
        "command": getattr(args, "argv", []),
        "config": cfg,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": sorted(outputs),
        "seed": seed,
    }


def _search_seed(base_seed: int, run_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(run_id),))


def explore_single_run(cfg: dict, algo: str, base_seed: int, run_id: int, out_dir: str) -> list[str]:
    """Execute one evolutionary (or random) run and persist its files."""
    substrate = config_mod.build_substrate(cfg["substrate"])
    measure_cfg = config_mod.build_measure_config(cfg["measures"], base_seed)
    evaluate = BehaviourEvaluator(substrate, measure_cfg)
    params = config_mod.build_ns_params(cfg["search"])
    rng = np.random.default_rng(_search_seed(base_seed, run_id))

    stem = os.path.join(out_dir, f"run{run_id:03d}")
    outputs = [stem + ".db.ndjson"]
    if algo == "random":
        evals = int(params.population) + int(params.generations)
        database = random_search(substrate, evaluate, evals, rng, run_id=run_id)
        persistence.save_database(stem + ".db.ndjson", database)
    else:
        search = NoveltySearch(substrate, evaluate, params, rng, run_id=run_id)
        search.run()
        persistence.save_database(stem + ".db.ndjson", search.database)
        persistence.save_archive_log(stem + ".archive.ndjson", search.archive_log)
        persistence.dump_json(stem + ".state.json", search.state_dict())
        outputs += [stem + ".archive.ndjson", stem + ".state.json"]
    return outputs


def resume_single_run(cfg: dict, base_seed: int, run_id: int, out_dir: str) -> list[str]:
    substrate = config_mod.build_substrate(cfg["substrate"])
    measure_cfg = config_mod.build_measure_config(cfg["measures"], base_seed)
    evaluate = BehaviourEvaluator(substrate, measure_cfg)
    params = config_mod.build_ns_params(cfg["search"])

    stem = os.path.join(out_dir, f"run{run_id:03d}")
    database = persistence.load_database(stem + ".db.ndjson", substrate)
    archive_log = persistence.load_archive_log(stem + ".archive.ndjson")
    state = persistence.load_json(stem + ".state.json")
    search = NoveltySearch.restore(substrate, evaluate, params, database, archive_log, state)
    search.run()
    persistence.save_database(stem + ".db.ndjson", search.database)
    persistence.save_archive_log(stem + ".archive.ndjson", search.archive_log)
    persistence.dump_json(stem + ".state.json", search.state_dict())
    return [stem + ".db.ndjson", stem + ".archive.ndjson", stem + ".state.json"]


def cmd_explore(args) -> int:
    cfg = config_mod.load_config(args.config)
    if args.substrate:
        cfg["substrate"]["kind"] = args.substrate
    if args.gens is not None:
        cfg["search"]["generations"] = args.gens
    if args.pop is not None:
        cfg["search"]["population"] = args.pop
    if args.runs is not None:
        cfg["search"]["runs"] = args.runs
    config_mod.build_substrate(cfg["substrate"])  # fail fast on bad config
    config_mod.build_ns_params(cfg["search"])

    os.makedirs(args.out, exist_ok=True)
    runs = int(cfg["search"]["runs"])
    worker = resume_single_run if args.resume else explore_single_run
    worker_args = [
        (cfg, int(args.seed), run_id, args.out) if args.resume else (cfg, args.algo, int(args.seed), run_id, args.out)
        for run_id in range(runs)
    ]
    outputs = []
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for result in pool.map(_star_worker, [(worker.__name__, wa) for wa in worker_args]):
                outputs += result
    else:
        for wa in worker_args:
            outputs += worker(*wa)
    persistence.dump_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(cfg, args, args.seed, outputs),
    )
    print(f"wrote {len(outputs)} files to {args.out}")
    return 0


def _star_worker(payload):
    name, worker_args = payload
    return {"explore_single_run": explore_single_run, "resume_single_run": resume_single_run}[name](*worker_args)


def _load_group(paths):
    """Union several database files; run ids are re-indexed per file."""
    points, gens, runs, labels = [], [], [], []
    next_run = 0
    for path in paths:
        p, g, r = persistence.load_behaviours(path)
        remap = {int(old): next_run + i for i, old in enumerate(np.unique(r))} if r.size else {}
        for old, new in sorted(remap.items()):
            labels.append((new, path, old))
        next_run += len(remap)
        points.append(p)
        gens.append(g)
        runs.append(np.asarray([remap[int(x)] for x in r], dtype=int))
    points = np.concatenate(points) if points else np.empty((0, 3))
    gens = np.concatenate(gens) if gens else np.empty(0, dtype=int)
    runs = np.concatenate(runs) if runs else np.empty(0, dtype=int)
    return points, gens, runs, labels


def cmd_quality(args) -> int:
    cfg = config_mod.load_config(args.config)
    if args.voxel is not None:
        cfg["quality"]["voxel_edge"] = args.voxel
    edge = float(cfg["quality"]["voxel_edge"])
    interval = int(cfg["quality"]["curve_interval"])
    os.makedirs(args.out, exist_ok=True)

    test_points, test_gens, test_runs, test_labels = _load_group(args.db)
    lines = [f"voxel edge: {edge} x {edge} x {edge}", ""]
    outputs = []

    if args.ref:
        ref_points, ref_gens, ref_runs, ref_labels = _load_group(args.ref)
        report = quality.compare(test_points, ref_points, edge, test_runs, ref_runs)
        bounds = (report.bounds_min, report.bounds_max)
        lines += [
            "bounds (union of both databases):",
            f"  kr [{report.bounds_min[0]!r}, {report.bounds_max[0]!r}]",
            f"  gr [{report.bounds_min[1]!r}, {report.bounds_max[1]!r}]",
            f"  mc [{report.bounds_min[2]!r}, {report.bounds_max[2]!r}]",
            "",
            f"test coverage: {report.test_total} ({test_points.shape[0]} behaviours)",
            f"ref coverage:  {report.ref_total} ({ref_points.shape[0]} behaviours)",
            f"ratio (test/ref): {'n/a' if report.ratio is None else repr(report.ratio)}",
        ]
        for side, by_run in (("test", report.test_by_run), ("ref", report.ref_by_run)):
            if by_run:
                rng_cov = report.run_range(side)
                lines.append(f"{side} per-run coverage min/max: {rng_cov[0]}/{rng_cov[1]}")
        for side, labels, pts, gens, runs in (
            ("test", test_labels, test_points, test_gens, test_runs),
            ("ref", ref_labels, ref_points, ref_gens, ref_runs),
        ):
            rows = []
            for run, _path, _old in labels:
                mask = runs == run
                for g, cov in quality.coverage_curve(pts[mask], gens[mask], edge, interval, bounds):
                    rows.append((g, cov, run))
            curve_path = os.path.join(args.out, f"coverage_{side}.csv")
            persistence.write_csv(curve_path, ("generation", "coverage", "run_id"), rows)
            outputs.append(curve_path)
        lines.append("")
        lines.append("run ids:")
        for side, labels in (("test", test_labels), ("ref", ref_labels)):
            for run, path, old in labels:
                lines.append(f"  {side} run {run} <- {os.path.basename(path)} (run_id {old})")
    else:
        if test_points.shape[0] == 0:
            raise ConfigurationError("the database is empty; nothing to measure")
        bounds = quality.bounds_of(test_points)
        total = quality.coverage(test_points, edge, bounds)
        lines += [
            f"coverage: {total} ({test_points.shape[0]} behaviours)",
            f"bounds: kr [{bounds[0][0]!r}, {bounds[1][0]!r}] gr [{bounds[0][1]!r}, {bounds[1][1]!r}] "
            f"mc [{bounds[0][2]!r}, {bounds[1][2]!r}]",
        ]
        rows = []
        for run, _path, _old in test_labels:
            mask = test_runs == run
            for g, cov in quality.coverage_curve(test_points[mask], test_gens[mask], edge, interval, bounds):
                rows.append((g, cov, run))
        curve_path = os.path.join(args.out, "coverage_test.csv")
        persistence.write_csv(curve_path, ("generation", "coverage", "run_id"), rows)
        outputs.append(curve_path)

    report_path = os.path.join(args.out, "quality_report.txt")
    with open(report_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    outputs.append(report_path)
    persistence.dump_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(cfg, args, None, outputs),
    )
    print("\n".join(lines))
    return 0


def cmd_eval_tasks(args) -> int:
    cfg = config_mod.load_config(args.config)
    if args.length is not None:
        cfg["tasks"]["length"] = args.length
    if args.laser:
        cfg["tasks"]["laser_path"] = args.laser
    substrate = config_mod.build_substrate(cfg["substrate"])
    for task_id in args.task:
        if task_id not in tasks.TASK_IDS:
            raise ConfigurationError(f"unknown task {task_id!r}; choose from {tasks.TASK_IDS}")
    os.makedirs(args.out, exist_ok=True)

    individuals = []
    for path in args.db:
        individuals += persistence.load_database(path, substrate)
    if individuals and individuals[0].genotype.genes.size != substrate.n_genes:
        raise ConfigurationError(
            "database genotypes do not match the configured substrate "
            f"({individuals[0].genotype.genes.size} genes vs {substrate.n_genes})"
        )
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(args.seed), spawn_key=(1,)))
    if args.sample is not None:
        if args.sample > len(individuals):
            raise ConfigurationError(f"cannot sample {args.sample} of {len(individuals)} individuals")
        idx = rng.choice(len(individuals), size=args.sample, replace=False) if args.sample else []
        sample = [individuals[i] for i in sorted(int(i) for i in idx)]
    else:
        sample = individuals

    ridge_grid = tuple(cfg["tasks"]["ridge_grid"])
    splits = tuple(cfg["tasks"]["splits"])
    outputs = []
    for task_id in args.task:
        dataset = tasks.make_dataset(task_id, int(cfg["tasks"]["length"]), int(args.seed), cfg["tasks"]["laser_path"], splits)
        rows = []
        for ind in sample:
            score = tasks.evaluate_task(substrate, ind.genotype, dataset, ridge_grid)
            b = ind.behaviour
            rows.append((ind.run_id, ind.generation, b.kr, b.gr, b.mc, score))
        path = os.path.join(args.out, f"pairs_{task_id}.csv")
        persistence.save_pairs(path, rows)
        outputs.append(path)
        print(f"{task_id}: evaluated {len(rows)} genotypes -> {path}")
    persistence.dump_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(cfg, args, args.seed, outputs),
    )
    return 0


def cmd_predict(args) -> int:
    cfg = config_mod.load_config(args.config)
    if args.ensemble is not None:
        cfg["learning"]["ensemble"] = args.ensemble
    if args.threshold is not None:
        cfg["learning"]["threshold"] = args.threshold
    spec = learning.TrainSpec(
        train_fraction=cfg["learning"]["train_fraction"],
        epochs=cfg["learning"]["epochs"],
        ensemble=cfg["learning"]["ensemble"],
        hidden_units=cfg["learning"]["hidden_units"],
        threshold=cfg["learning"]["threshold"],
    )
    os.makedirs(args.out, exist_ok=True)
    X, y = persistence.load_pairs(args.train_pairs)
    lines = [f"train pairs: {args.train_pairs} ({X.shape[0]} rows)"]
    outputs = []

    if args.test_pairs:
        X_f, y_f = learning.filter_pairs(X, y, spec.threshold)
        models = learning.fit_ensemble(X_f, y_f, spec, np.random.SeedSequence(int(args.seed)))
        X_test, y_test = persistence.load_pairs(args.test_pairs)
        X_test, y_test = learning.filter_pairs(X_test, y_test, spec.threshold)
        errors = [learning.prediction_error(m, X_test, y_test) for m in models]
        result = learning.ExperimentResult(models, X_f, y_f, X_test, y_test, errors)
        lines.append(f"test pairs: {args.test_pairs} ({X_test.shape[0]} rows after threshold)")
    else:
        result = learning.run_experiment(X, y, spec, int(args.seed))
        lines.append(f"internal split: {result.X_train.shape[0]} train / {result.X_test.shape[0]} test")

    if spec.threshold is not None:
        lines.append(f"threshold: {spec.threshold!r}")
    lines.append(f"ensemble size: {len(result.models)}")
    lines.append(f"prediction error per model: {[repr(e) for e in result.errors]}")
    lines.append(f"mean prediction error: {result.mean_error!r}")
    lines.append(f"best prediction error: {result.best_error!r}")

    mean_pred = np.mean([m.predict(result.X_test) for m in result.models], axis=0)
    rho, p = learning.spearman(mean_pred, result.y_test)
    lines.append(f"spearman rho (ensemble mean vs actual): {rho!r} (p = {p!r})")

    pred_path = os.path.join(args.out, "predictions.csv")
    persistence.write_csv(
        pred_path,
        ("kr", "gr", "mc", "actual", "predicted"),
        [
            (result.X_test[i, 0], result.X_test[i, 1], result.X_test[i, 2], result.y_test[i], mean_pred[i])
            for i in range(result.X_test.shape[0])
        ],
    )
    outputs.append(pred_path)
    models_path = os.path.join(args.out, "models.json")
    persistence.dump_json(models_path, {"models": [m.to_record() for m in result.models]})
    outputs.append(models_path)

    if args.transfer_pairs:
        X_b, y_b = persistence.load_pairs(args.transfer_pairs)
        transfer = learning.transfer_predict(result.models, X_b, y_b, result.mean_error, spec.threshold)
        lines += [
            f"transfer pairs: {args.transfer_pairs}",
            f"transfer prediction error: {transfer.pe!r}",
            f"delta (transfer - best self): {transfer.delta!r}",
            f"extrapolating beyond training hull: {'yes' if transfer.extrapolated else 'no'}",
        ]

    if args.sweep:
        sweep_rows = []
        for threshold in args.sweep:
            sweep_spec = learning.TrainSpec(
                train_fraction=spec.train_fraction,
                epochs=spec.epochs,
                ensemble=spec.ensemble,
                hidden_units=spec.hidden_units,
                threshold=threshold,
            )
            try:
                sweep_result = learning.run_experiment(X, y, sweep_spec, int(args.seed))
            except ConfigurationError as exc:
                lines.append(f"sweep threshold {threshold!r}: skipped ({exc})")
                continue
            sweep_rows.append((threshold, sweep_result.mean_error, sweep_result.X_train.shape[0] + sweep_result.X_test.shape[0]))
        sweep_path = os.path.join(args.out, "threshold_sweep.csv")
        persistence.write_csv(sweep_path, ("threshold", "rmse", "count"), sweep_rows)
        outputs.append(sweep_path)
        lines.append(f"threshold sweep -> {os.path.basename(sweep_path)}")

    report_path = os.path.join(args.out, "prediction_report.txt")
    with open(report_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    outputs.append(report_path)
    persistence.dump_json(
        os.path.join(args.out, "manifest.json"),
        _manifest(cfg, args, args.seed, outputs),
    )
    print("\n".join(lines))
    return 0


def cmd_datasets(args) -> int:
    cfg = config_mod.load_config(args.config)
    if args.laser:
        cfg["tasks"]["laser_path"] = args.laser
    length = args.length if args.length is not None else int(cfg["tasks"]["length"])
    dataset = tasks.make_dataset(args.task, length, int(args.seed), cfg["tasks"]["laser_path"], tuple(cfg["tasks"]["splits"]))
    persistence.write_csv(args.out, ("t", "u", "y", "split"), tasks.dataset_rows(dataset))
    print(f"{args.task}: wrote {len(dataset)} samples to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcspace",
        description="Characterise the reservoir-computing quality of dynamical substrates.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explore", help="map a substrate's behaviour space with novelty or random search")
    p.add_argument("--config", help="JSON config file (defaults used when omitted)")
    p.add_argument("--substrate", choices=["esn", "dr"], help="override substrate kind")
    p.add_argument("--algo", choices=["ns", "random"], default="ns", help="search algorithm")
    p.add_argument("--gens", type=int, help="override search.generations")
    p.add_argument("--pop", type=int, help="override search.population")
    p.add_argument("--runs", type=int, help="override search.runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker slots across runs")
    p.add_argument("--resume", action="store_true", help="continue existing runs in --out to the generation target")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("quality", help="voxel coverage of behaviour databases, optionally against a reference")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--db", action="append", required=True, help="test database file (repeatable)")
    p.add_argument("--ref", action="append", help="reference database file (repeatable)")
    p.add_argument("--voxel", type=float, help="voxel edge length (same on every axis)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("eval-tasks", help="evaluate sampled genotypes on benchmark tasks")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--db", action="append", required=True, help="database file (repeatable)")
    p.add_argument("--task", action="append", required=True, choices=list(tasks.TASK_IDS))
    p.add_argument("--sample", type=int, help="number of genotypes to sample (all when omitted)")
    p.add_argument("--length", type=int, help="override tasks.length")
    p.add_argument("--laser", help="path to the laser series file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_tasks)

    p = sub.add_parser("predict", help="fit behaviour->performance models and score prediction error")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--train-pairs", required=True, help="pairs CSV from eval-tasks")
    p.add_argument("--test-pairs", help="explicit test pairs CSV (otherwise an internal split is used)")
    p.add_argument("--transfer-pairs", help="pairs CSV of another substrate to transfer-predict")
    p.add_argument("--threshold", type=float, help="drop pairs with NMSE above this value")
    p.add_argument("--sweep", type=lambda s: [float(v) for v in s.split(",")], help="comma-separated threshold sweep")
    p.add_argument("--ensemble", type=int, help="override learning.ensemble")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("datasets", help="export a benchmark dataset as CSV (columns t, u, y, split)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--task", required=True, choices=list(tasks.TASK_IDS))
    p.add_argument("--length", type=int)
    p.add_argument("--laser", help="path to the laser series file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV file")
    p.set_defaults(func=cmd_datasets)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RcSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)


if __name__ == "__main__":
    sys.exit(main())
