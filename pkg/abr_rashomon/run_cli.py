"""The `abr-rashomon` command line."""

from __future__ import annotations

import argparse
import io
import sys
from collections.abc import Callable
from pathlib import Path
from typing import TextIO

from loguru import logger
from pydantic import ValidationError

from abr_rashomon import __version__
from abr_rashomon.consts import (
    DEFAULT_DELTA,
    DEFAULT_EPSILON,
    DEFAULT_INSTANCES,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_THRESHOLDS_PER_FEATURE,
    DEFAULT_RASHOMON_CAP,
    PIPELINE_CONFIG_FILENAME,
)
from abr_rashomon.errors import AbrRashomonError, ExternalServiceError, ValidationFailure

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_EXTERNAL = 3

_VERBOSITY_LEVELS = {1: "ERROR", 2: "WARNING", 3: "INFO"}


class LogConsoleRewriter(io.StringIO):
    """Makes the console output more readable by shortening certain strings."""

    def __init__(self, original_stream: TextIO) -> None:
        """Initialise the rewriter."""
        super().__init__()
        self.original_stream = original_stream

    def write(self, message: str) -> int:
        """Rewrite the message to make it more readable where possible."""
        replacements = [
            ("abr_rashomon.sparse_tree.solver", "[AR-SOLVER]"),
            ("abr_rashomon.", "[AR]"),
        ]

        for old, new in replacements:
            message = message.replace(old, new)

        return self.original_stream.write(message)

    def flush(self) -> None:
        """Flush the wrapped stream."""
        self.original_stream.flush()


def verbosity_to_level(count: int) -> str | None:
    """The console log level for a `-v` count; None silences the console."""
    if count <= 0:
        return None
    return _VERBOSITY_LEVELS.get(count, "DEBUG")


def setup_logging(verbosity: int, no_logging: bool, log_file: str | None) -> None:
    """Replace loguru's default sink with a leveled, rewritten console sink and an optional rotating file."""
    logger.remove()

    target_verbosity = verbosity
    if no_logging:
        target_verbosity = 0
    elif verbosity == 0:
        target_verbosity = 3

    level = verbosity_to_level(target_verbosity)
    if level is not None:
        logger.add(LogConsoleRewriter(sys.stderr), level=level, colorize=False)
    if log_file is not None:
        logger.add(log_file, level="DEBUG", rotation="10 MB", retention=5, encoding="utf-8")


def exit_code_for(error: BaseException) -> int:
    """Map an exception, or the chain of causes behind it, to the documented exit codes."""
    current: BaseException | None = error
    codes = []
    while current is not None:
        if isinstance(current, ExternalServiceError):
            return EXIT_EXTERNAL
        if isinstance(current, (ValidationFailure, ValidationError)):
            codes.append(EXIT_VALIDATION)
        elif isinstance(current, AbrRashomonError):
            codes.append(EXIT_RUNTIME)
        current = current.__cause__
    return codes[-1] if codes else EXIT_RUNTIME


def _log_validation_error(e: ValidationError, source: str) -> None:
    logger.error(f"The following fields in {source} failed validation:")
    for error in e.errors():
        logger.error(f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}")


def _manifest(path: str | None):  # noqa: ANN202
    from abr_rashomon.media.manifest import default_manifest, load_manifest_file

    return load_manifest_file(path) if path else default_manifest()


def _policy(name: str):  # noqa: ANN202
    """Build a policy from its name; a bare path to an existing tree file counts as `tree:<path>`."""
    from abr_rashomon.policies.registry import is_known_policy_name, make_policy

    if not is_known_policy_name(name) and Path(name).is_file():
        name = f"tree:{name}"
    return make_policy(name)


# trace


def cmd_trace_synth(args: argparse.Namespace) -> int:
    """Write seeded synthetic traces, either one file (`-o`) or a directory of `--count` traces."""
    from abr_rashomon.network.trace import save_trace, synth_trace

    if args.output is not None:
        if args.count != 1:
            raise ValueError("-o writes a single trace; use --out <dir> together with --count")
        output = Path(args.output)
        output.parent.mkdir(parents=True, exist_ok=True)
        save_trace(synth_trace(args.profile, args.seed, args.duration), output)
        logger.info(f"Wrote a {args.profile} trace to {output}")
        return EXIT_OK

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for offset in range(args.count):
        trace = synth_trace(args.profile, args.seed + offset, args.duration)
        save_trace(trace, out / f"{trace.trace_id}.txt")
    logger.info(f"Wrote {args.count} {args.profile} traces to {out}")
    return EXIT_OK


def cmd_trace_stats(args: argparse.Namespace) -> int:
    """Print bandwidth statistics of trace files."""
    from abr_rashomon.network.trace import load_trace, pooled_trace_stats, trace_stats

    traces = [load_trace(path) for path in args.traces]
    for trace in traces:
        print(f"{trace.trace_id}: {trace_stats(trace).describe()}")
    if len(traces) > 1:
        print(f"pooled: {pooled_trace_stats(traces).describe()}")
    return EXIT_OK


# sim / qoe


def cmd_sim(args: argparse.Namespace) -> int:
    """Play one session and write its log."""
    from abr_rashomon.network.trace import load_trace
    from abr_rashomon.sim.session import run_session

    log = run_session(_policy(args.policy), load_trace(args.trace), _manifest(args.manifest), args.buffer_cap)
    if args.out:
        log.save(args.out)
    else:
        print(log.to_csv(), end="")
    logger.info(f"{log.policy_name} on {log.trace_id}: rebuffered {log.total_rebuffer_s:.3f}s")
    return EXIT_OK


_REPORT_HEADER = ["session", "trace_id", "policy", "metric", "total", "quality", "rebuffer", "smooth", "per_chunk"]


def cmd_qoe(args: argparse.Namespace) -> int:
    """Score session logs, optionally writing a per-session report and the CDF."""
    import csv
    import glob

    from abr_rashomon.qoe import cdf_points, qoe, qoe_params_for
    from abr_rashomon.sim.session import SessionLog

    paths = list(args.logs)
    if args.sessions:
        paths.extend(sorted(glob.glob(args.sessions)))
    if not paths:
        raise ValueError(f"no session logs given or matched by {args.sessions!r}")

    params = qoe_params_for(args.metric)
    values = []
    rows = []
    for path in paths:
        log = SessionLog.load(path)
        report = qoe(log, params)
        values.append(report.per_chunk_mean)
        rows.append(
            [
                path,
                log.trace_id,
                log.policy_name,
                str(args.metric),
                repr(report.total),
                repr(report.quality_term),
                repr(report.rebuf_term),
                repr(report.smooth_term),
                repr(report.per_chunk_mean),
            ],
        )
        print(
            f"{path}: total {report.total:.4f} (quality {report.quality_term:.4f}, rebuffer {report.rebuf_term:.4f}, "
            f"smooth {report.smooth_term:.4f}), per chunk {report.per_chunk_mean:.4f}",
        )
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(_REPORT_HEADER)
            writer.writerows(rows)
        logger.info(f"Wrote the QoE of {len(rows)} sessions to {args.report}")
    if args.cdf:
        with open(args.cdf, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["value", "probability"])
            writer.writerows([repr(value), repr(probability)] for value, probability in cdf_points(values))
    return EXIT_OK


# distill / features


def cmd_distill(args: argparse.Namespace) -> int:
    """Run the teacher-student loop and write the aggregated dataset."""
    from abr_rashomon.distill.dagger import DistillConfig, distill
    from abr_rashomon.network.trace import load_trace_dir

    cfg = DistillConfig(
        max_iterations=args.iterations,
        max_depth=args.depth,
        traces=load_trace_dir(args.traces),
        manifest=_manifest(args.manifest),
        eliminate=not args.no_eliminate,
    )
    aggregate = distill(_policy(args.teacher), cfg)
    aggregate.save_csv(args.out)
    logger.info(f"Wrote {aggregate.n_rows} rows to {args.out}")
    return EXIT_OK


def cmd_features(args: argparse.Namespace) -> int:
    """Binarize an aggregated dataset (`encode`), thin a binarized one (`eliminate`), or both in one go."""
    from abr_rashomon.distill.dataset import AggDataset
    from abr_rashomon.features.binarize import binarize
    from abr_rashomon.features.elimination import eliminate_columns
    from abr_rashomon.features.storage import load_bin_dataset, save_bin_dataset

    if args.action == "eliminate":
        data = load_bin_dataset(args.data)
    else:
        _, data = binarize(AggDataset.load_csv(args.data).to_raw(), args.max_thresholds)
    if args.action == "eliminate" or (args.action is None and not args.no_eliminate):
        result = eliminate_columns(data, args.delta)
        logger.info(f"Column elimination kept {result.dataset.n_columns} of {data.n_columns} columns")
        data = result.dataset
    save_bin_dataset(data, args.out)
    logger.info(f"Wrote {data.n_rows} rows x {data.n_columns} columns to {args.out}")
    return EXIT_OK


# tree


def cmd_tree_solve(args: argparse.Namespace) -> int:
    """Find the optimal sparse tree of a binarized dataset."""
    from abr_rashomon.features.storage import load_bin_dataset
    from abr_rashomon.sparse_tree.rashomon import solve_optimal
    from abr_rashomon.sparse_tree.tree_file import save_tree

    data = load_bin_dataset(args.data)
    tree, obj = solve_optimal(data, args.lam, args.depth)
    out = Path(args.out)
    data.binarizer.save(out.with_name(f"{out.stem}.binarizer.json"))
    save_tree(tree, out, data.binarizer, f"{out.stem}.binarizer.json")
    print(f"objective {obj!r}, {tree.n_leaves} leaves, depth {tree.depth}")
    return EXIT_OK


def cmd_tree_rashomon(args: argparse.Namespace) -> int:
    """Enumerate a Rashomon set and write it with its feature utilisation."""
    from abr_rashomon.features.storage import load_bin_dataset
    from abr_rashomon.sparse_tree.rashomon import (
        enumerate_rashomon,
        feature_utilisation,
        save_feature_utilisation,
        save_rashomon_set,
    )

    data = load_bin_dataset(args.data)
    rashomon_set = enumerate_rashomon(data, args.lam, args.epsilon, args.depth, cap=args.cap)
    save_rashomon_set(rashomon_set, args.out)
    save_feature_utilisation(
        feature_utilisation(rashomon_set, data.binarizer),
        Path(args.out) / "feature_utilisation.csv",
    )
    print(f"{len(rashomon_set)} trees, obj_opt {rashomon_set.obj_opt!r}, theta {rashomon_set.theta!r}")
    return EXIT_OK


def cmd_tree_export(args: argparse.Namespace) -> int:
    """Print or write a tree as code (`--format code`) or as its structural summary (`--format summary`)."""
    from abr_rashomon.codegen.export import tree_summary, tree_to_code
    from abr_rashomon.errors import MalformedTreeError
    from abr_rashomon.sparse_tree.tree_file import load_tree

    tree, binarizer = load_tree(args.tree)
    if binarizer is None:
        raise MalformedTreeError(f"{args.tree} names no binarizer")
    summary = tree_summary(tree, binarizer)
    if args.format == "summary":
        text = summary.model_dump_json(indent=2) + "\n"
    else:
        code = tree_to_code(tree, binarizer, _manifest(args.manifest))
        text = code.with_legend() if args.legend else code.text
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    logger.info(
        f"depth {summary.depth}, {summary.leaves} leaves, {summary.distinct_features} raw features, "
        f"{summary.node_count} nodes",
    )
    return EXIT_OK


# judge


def cmd_judge_tournament(args: argparse.Namespace) -> int:
    """Run the comprehensibility tournament over a stored Rashomon set."""
    from abr_rashomon.errors import ValidationFailure as _ValidationFailure
    from abr_rashomon.judge.messages import TournamentConfig, load_jsonl
    from abr_rashomon.judge.tournament import make_contestants, make_judge, tournament
    from abr_rashomon.sparse_tree.rashomon import load_rashomon_set, select_instances

    rashomon_set = load_rashomon_set(args.set)
    if rashomon_set.binarizer is None:
        raise _ValidationFailure(f"{args.set} has no binarizer")
    cfg = TournamentConfig(
        backends=[make_judge(name) for name in args.backends],
        few_shot=args.few_shot,
        self_consistency=args.self_consistency,
        seed=args.seed,
    )
    resume_from = load_jsonl(args.resume) if args.resume else None
    contestants = make_contestants(
        select_instances(rashomon_set, args.instances),
        rashomon_set.binarizer,
        _manifest(args.manifest),
    )
    survivors, log = tournament(contestants, cfg, log_path=args.log, resume_from=resume_from)
    for survivor in survivors:
        print(survivor.key)
    logger.info(
        f"{len(survivors)} survivors after {len(log.rounds)} rounds; survivor curve {log.survivor_counts()}",
    )
    return EXIT_OK


def cmd_judge_adjust(args: argparse.Namespace) -> int:
    """Ask an LLM to retune a tree for the environment of other traces."""
    from abr_rashomon.errors import MalformedTreeError
    from abr_rashomon.judge.adjust import adjust_tree
    from abr_rashomon.judge.backends import make_chat_client
    from abr_rashomon.network.trace import load_trace_dir, pooled_trace_stats
    from abr_rashomon.sparse_tree.tree_file import load_tree, save_tree

    tree, binarizer = load_tree(args.tree)
    if binarizer is None:
        raise MalformedTreeError(f"{args.tree} names no binarizer")
    source = load_trace_dir(args.source_traces)
    target = load_trace_dir(args.target_traces)
    adjusted, rebound = adjust_tree(
        tree,
        binarizer,
        _manifest(args.manifest),
        pooled_trace_stats(source),
        pooled_trace_stats(target),
        make_chat_client(args.backend),
        sample_trace=target[0],
        max_depth=args.depth,
    )
    out = Path(args.out)
    rebound.save(out.with_name(f"{out.stem}.binarizer.json"))
    save_tree(adjusted, out, rebound, f"{out.stem}.binarizer.json")
    logger.info(f"Wrote the adjusted tree to {out}")
    return EXIT_OK


# pipeline / eval


def cmd_pipeline_run(args: argparse.Namespace) -> int:
    """Run or resume the full pipeline."""
    from abr_rashomon.load_env_vars import load_env_vars_from_config
    from abr_rashomon.pipeline.load_config import PipelineConfigLoader
    from abr_rashomon.pipeline.pipeline import pipeline_run

    source = "environment variables" if args.load_config_from_env_vars else args.config
    try:
        if args.load_config_from_env_vars:
            cfg = PipelineConfigLoader.load_from_env_vars()
        else:
            if Path(args.config).suffix in (".yaml", ".yml"):
                load_env_vars_from_config(args.config)
            cfg = PipelineConfigLoader.load(args.config)
    except ValidationError as e:
        _log_validation_error(e, source)
        raise
    cfg.load_env_vars()

    result = pipeline_run(cfg)
    for key in result.survivor_keys:
        print(key)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Evaluate policies over a trace directory and write the report."""
    from abr_rashomon.network.trace import load_trace_dir
    from abr_rashomon.pipeline.report import eval_report, write_report
    from abr_rashomon.policies.registry import make_policy

    report = eval_report(
        [make_policy(name) for name in args.policies],
        load_trace_dir(args.traces),
        _manifest(args.manifest),
        args.metric,
        baseline=args.baseline,
    )
    write_report(report, args.out)
    for summary in report.summaries:
        improvement = "" if summary.improvement is None else f", improvement {summary.improvement:+.4f}"
        print(f"{summary.policy}: mean {summary.mean:.4f} ± {summary.std:.4f}{improvement}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """The argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog="abr-rashomon",
        description="Distill ABR policies into sparse decision trees and pick the most comprehensible ones.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", action="count", default=0, help="Increase verbosity of output (-vvvv for debug)")
    parser.add_argument("--no-logging", action="store_true", help="Disable logging to the console")
    parser.add_argument("--log-file", default=None, help="Also log (at debug level) to this rotating file")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_manifest(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--manifest", default=None, help="Video manifest JSON (default: the built-in ladder)")

    trace = commands.add_parser("trace", help="Generate or inspect network traces").add_subparsers(
        dest="action",
        required=True,
    )
    synth = trace.add_parser("synth", help="Write seeded synthetic traces")
    synth.add_argument("--profile", choices=["low", "high", "markov"], required=True)
    synth.add_argument("--seed", type=int, default=0, help="Seed of the first trace; later ones count up")
    synth.add_argument("--count", type=int, default=1)
    synth.add_argument("--duration", type=float, default=600.0, help="Trace period in seconds")
    destination = synth.add_mutually_exclusive_group(required=True)
    destination.add_argument("-o", "--output", default=None, help="Write a single trace to this file")
    destination.add_argument("--out", default=None, help="Write --count traces into this directory")
    synth.set_defaults(handler=cmd_trace_synth)
    stats = trace.add_parser("stats", help="Print bandwidth statistics")
    stats.add_argument("traces", nargs="+")
    stats.set_defaults(handler=cmd_trace_stats)

    sim = commands.add_parser("sim", help="Play one session")
    sim.add_argument("action", nargs="?", choices=["run"], help="`sim run` and `sim` are the same command")
    sim.add_argument("--policy", required=True, help="bba, robustmpc, mpc, constant:<k>, tree:<path> or a tree file")
    sim.add_argument("--trace", required=True)
    sim.add_argument("--buffer-cap", type=float, default=60.0, help="Buffer capacity in seconds")
    sim.add_argument("-o", "--out", default=None, help="Session log CSV (default: stdout)")
    add_manifest(sim)
    sim.set_defaults(handler=cmd_sim)

    qoe = commands.add_parser("qoe", help="Score session logs")
    qoe.add_argument("logs", nargs="*", help="Session log files")
    qoe.add_argument("--sessions", default=None, help="Glob of session log files, e.g. 'runs/*.csv'")
    qoe.add_argument("--metric", choices=["lin", "hd"], default="lin")
    qoe.add_argument("--report", default=None, help="Write one row of QoE terms per session to this CSV")
    qoe.add_argument("--cdf", default=None, help="Write the per-chunk QoE CDF of the logs to this CSV")
    qoe.set_defaults(handler=cmd_qoe)

    distill = commands.add_parser("distill", help="Run the teacher-student loop")
    distill.add_argument("--teacher", default="robustmpc")
    distill.add_argument("--traces", required=True, help="Directory of training traces")
    distill.add_argument("-M", "--iterations", type=int, default=3, help="Student iterations")
    distill.add_argument("-d", "--depth", type=int, default=DEFAULT_MAX_DEPTH, help="Depth of the interim students")
    distill.add_argument("--no-eliminate", action="store_true", help="Skip column elimination for the students")
    distill.add_argument("-o", "--out", required=True, help="Aggregated dataset CSV")
    add_manifest(distill)
    distill.set_defaults(handler=cmd_distill)

    features = commands.add_parser("features", help="Binarize and thin an aggregated dataset")
    features.add_argument(
        "action",
        nargs="?",
        choices=["encode", "eliminate"],
        help="encode: binarize only; eliminate: thin a binarized dataset; omitted: both",
    )
    features.add_argument(
        "--data",
        required=True,
        help="Aggregated dataset CSV, or a binarized dataset directory for `eliminate`",
    )
    features.add_argument("--max-thresholds", type=int, default=DEFAULT_MAX_THRESHOLDS_PER_FEATURE)
    features.add_argument("--delta", type=float, default=DEFAULT_DELTA, help="Importance threshold for elimination")
    features.add_argument("--no-eliminate", action="store_true", help="Without an action, skip elimination")
    features.add_argument("-o", "--out", required=True, help="Output directory")
    features.set_defaults(handler=cmd_features)

    tree = commands.add_parser("tree", help="Optimal trees, Rashomon sets and code export").add_subparsers(
        dest="action",
        required=True,
    )
    optimal = tree.add_parser("solve", aliases=["optimal"], help="Solve for the optimal sparse tree")
    rashomon = tree.add_parser("rashomon", help="Enumerate the Rashomon set")
    for sub in (optimal, rashomon):
        sub.add_argument("--data", required=True, help="Binarized dataset directory")
        sub.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
        sub.add_argument("-d", "--depth", type=int, default=DEFAULT_MAX_DEPTH)
        sub.add_argument("-o", "--out", required=True)
    optimal.set_defaults(handler=cmd_tree_solve)
    rashomon.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    rashomon.add_argument("--cap", type=int, default=DEFAULT_RASHOMON_CAP)
    rashomon.set_defaults(handler=cmd_tree_rashomon)
    export = tree.add_parser("export", help="Render a tree file as code or summarise it")
    export.add_argument("--tree", required=True)
    export.add_argument("--format", choices=["code", "summary"], default="code")
    export.add_argument("--legend", action="store_true", help="Prefix the code with the variable legend")
    export.add_argument("-o", "--out", default=None)
    add_manifest(export)
    export.set_defaults(handler=cmd_tree_export)

    judge = commands.add_parser("judge", help="Comprehensibility tournament and LLM adjustment").add_subparsers(
        dest="action",
        required=True,
    )
    tournament = judge.add_parser("tournament", help="Pick the most comprehensible trees of a Rashomon set")
    tournament.add_argument("--set", required=True, help="Rashomon set directory")
    tournament.add_argument(
        "--backends",
        nargs="+",
        default=["heuristic"],
        help="heuristic and/or <provider>:<model>; a tree is removed only when all agree",
    )
    tournament.add_argument("--few-shot", action="store_true")
    tournament.add_argument("--self-consistency", type=int, default=1, help="Odd number of repeats per query")
    tournament.add_argument("--seed", type=int, default=0)
    tournament.add_argument("--instances", type=int, default=DEFAULT_INSTANCES)
    tournament.add_argument("--log", default=None, help="Append the tournament log to this JSONL file")
    tournament.add_argument("--resume", default=None, help="Reuse the verdicts of an earlier JSONL log")
    add_manifest(tournament)
    tournament.set_defaults(handler=cmd_judge_tournament)
    adjust = judge.add_parser("adjust", help="Ask an LLM to retune a tree for other network conditions")
    adjust.add_argument("--tree", required=True)
    adjust.add_argument("--source-traces", required=True, help="Traces the tree was built for")
    adjust.add_argument("--target-traces", required=True, help="Traces of the new environment")
    adjust.add_argument("--backend", required=True, help="<provider>:<model>")
    adjust.add_argument("--depth", type=int, default=DEFAULT_MAX_DEPTH)
    adjust.add_argument("--out", required=True)
    add_manifest(adjust)
    adjust.set_defaults(handler=cmd_judge_adjust)

    pipeline = commands.add_parser("pipeline", help="The end-to-end run").add_subparsers(dest="action", required=True)
    run = pipeline.add_parser("run", help="Run or resume the pipeline")
    run.add_argument("--config", default=PIPELINE_CONFIG_FILENAME, help="YAML or JSON config file")
    run.add_argument(
        "-e",
        "--load-config-from-env-vars",
        action="store_true",
        default=False,
        help="Load the config only from ABR_RASHOMON_* environment variables.",
    )
    run.set_defaults(handler=cmd_pipeline_run)

    evaluate = commands.add_parser("eval", help="Compare policies on a trace directory")
    evaluate.add_argument("--policies", nargs="+", required=True)
    evaluate.add_argument("--traces", required=True)
    evaluate.add_argument("--metric", choices=["lin", "hd"], default="lin")
    evaluate.add_argument("--baseline", default=None, help="Policy the improvement columns are relative to")
    evaluate.add_argument("--out", required=True, help="Report directory")
    add_manifest(evaluate)
    evaluate.set_defaults(handler=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Parse `argv`, configure logging and dispatch; return the exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.v, args.no_logging, args.log_file)
    handler: Callable[[argparse.Namespace], int] = args.handler

    try:
        with logger.catch(reraise=True, exclude=(AbrRashomonError, ValidationError, ValueError, FileNotFoundError)):
            return handler(args)
    except ValidationError as e:
        if args.command != "pipeline":
            _log_validation_error(e, "the input")
        return EXIT_VALIDATION
    except (ValueError, FileNotFoundError) as e:
        logger.error(str(e))
        return EXIT_VALIDATION
    except AbrRashomonError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code_for(e)


def start() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    start()
