"""The end-to-end run: distill, binarize and thin, enumerate, select, judge, export and evaluate.

Every stage writes its artifacts under the output directory and appends a line to `pipeline_manifest.jsonl`
recording the stage's input hash, seed and files. A rerun skips every stage whose recorded input hash still matches
and whose files are all present. The judge stage also reuses the verdicts of an interrupted tournament.
"""

from __future__ import annotations

import csv
import hashlib
import json
from collections.abc import Callable
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, Field

from abr_rashomon.codegen.export import tree_summary, tree_to_code
from abr_rashomon.distill.dagger import DistillConfig, distill
from abr_rashomon.distill.dataset import AggDataset
from abr_rashomon.errors import AbrRashomonError, PipelineError
from abr_rashomon.features.binarize import BinDataset, binarize
from abr_rashomon.features.elimination import eliminate_columns
from abr_rashomon.features.ensemble import EnsembleConfig
from abr_rashomon.features.storage import load_bin_dataset, save_bin_dataset
from abr_rashomon.judge.messages import TournamentConfig, TournamentLog, load_jsonl
from abr_rashomon.judge.tournament import make_contestants, make_judge, tournament
from abr_rashomon.media.manifest import VideoManifest, default_manifest, load_manifest_file
from abr_rashomon.network.trace import load_trace_dir
from abr_rashomon.pipeline.data_model import PipelineConfig
from abr_rashomon.pipeline.report import eval_report, write_report
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.policies.registry import make_policy
from abr_rashomon.policies.tree_policy import TreePolicy
from abr_rashomon.sparse_tree.rashomon import (
    BINARIZER_FILENAME,
    RashomonEntry,
    RashomonSet,
    enumerate_rashomon,
    feature_utilisation,
    load_rashomon_set,
    save_feature_utilisation,
    save_rashomon_set,
    select_entries,
    tree_filename,
)
from abr_rashomon.sparse_tree.tree_file import save_tree

MANIFEST_FILENAME = "pipeline_manifest.jsonl"
AGGREGATE_FILENAME = "aggregate.csv"
FEATURES_DIRNAME = "features"
ELIMINATION_FILENAME = "elimination.json"
RASHOMON_DIRNAME = "rashomon"
UTILISATION_FILENAME = "feature_utilisation.csv"
SELECTED_FILENAME = "selected.csv"
TOURNAMENT_FILENAME = "tournament.jsonl"
SURVIVORS_FILENAME = "survivors.csv"
EXPORT_DIRNAME = "export"
EVAL_DIRNAME = "eval"

STAGES = ("distill", "features", "rashomon", "select", "judge", "export", "eval")

STAGE_PARAMS: dict[str, tuple[str, ...]] = {
    "distill": (
        "teacher",
        "max_iterations",
        "max_depth",
        "delta",
        "max_thresholds_per_feature",
        "eliminate",
        "buffer_cap_s",
        "seed",
    ),
    "features": ("max_thresholds_per_feature", "eliminate", "delta", "seed"),
    "rashomon": ("lambda_", "epsilon", "max_depth", "rashomon_cap"),
    "select": ("instances",),
    "judge": ("judge", "seed"),
    "export": (),
    "eval": ("teacher", "baselines", "baseline", "metric", "buffer_cap_s"),
}
"""Config fields each stage's output depends on, besides the previous stage's output."""


def stage_seed(seed: int, stage: str) -> int:
    """A per-stage seed derived from the global seed and the stage name."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _digest_files(paths: list[Path]) -> str:
    digest = hashlib.sha256()
    for path in sorted(paths):
        digest.update(path.name.encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _digest_dir(directory: Path | None) -> str | None:
    if directory is None:
        return None
    return _digest_files([path for path in directory.iterdir() if path.is_file()])


class StageRecord(BaseModel):
    """One line of the pipeline manifest."""

    stage: str
    input_hash: str
    seed: int
    complete: bool = False
    artifacts: list[str] = Field(default_factory=list)
    """Files written by the stage, relative to the output directory."""


class PipelineManifest:
    """The append-only record of started and finished stages."""

    def __init__(self, output_dir: Path) -> None:
        """Initialise the manifest, reading any lines a previous run left."""
        self.output_dir = output_dir
        self.path = output_dir / MANIFEST_FILENAME
        self.records: dict[str, StageRecord] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    record = StageRecord.model_validate_json(line)
                    self.records[record.stage] = record

    def append(self, record: StageRecord) -> None:
        """Write `record` and make it the stage's current record."""
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(record.model_dump_json() + "\n")
        self.records[record.stage] = record

    def is_complete(self, stage: str, input_hash: str) -> bool:
        """Whether `stage` finished with `input_hash` and all of its files still exist."""
        record = self.records.get(stage)
        if record is None or not record.complete or record.input_hash != input_hash:
            return False
        return all((self.output_dir / artifact).exists() for artifact in record.artifacts)

    def started_with(self, stage: str, input_hash: str) -> bool:
        """Whether the last record of `stage` is an unfinished start with `input_hash`."""
        record = self.records.get(stage)
        return record is not None and not record.complete and record.input_hash == input_hash


class PipelineResult(BaseModel):
    """Where a run left its outputs and what it found."""

    output_dir: Path
    optimal_key: str
    rashomon_size: int
    selected_keys: list[str]
    survivor_keys: list[str]
    stages_run: list[str]
    stages_skipped: list[str]


class PipelineRunner:
    """Runs the stages in order, skipping those whose recorded inputs are unchanged."""

    aggregate: AggDataset
    data: BinDataset
    rashomon_set: RashomonSet
    selected: list[RashomonEntry]
    survivors: list[RashomonEntry]

    def __init__(self, cfg: PipelineConfig) -> None:
        """Initialise the runner and create the output directory."""
        self.cfg = cfg
        self.output_dir = Path(cfg.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.manifest_record = PipelineManifest(self.output_dir)
        self.video: VideoManifest = (
            load_manifest_file(cfg.manifest_path) if cfg.manifest_path is not None else default_manifest()
        )
        self.stages_run: list[str] = []
        self.stages_skipped: list[str] = []
        self._previous_hash = ""
        self._resuming = False

    def _input_hash(self, stage: str) -> str:
        params = self.cfg.stage_params()
        payload: dict[str, object] = {
            "stage": stage,
            "previous": self._previous_hash,
            "params": {name: params.get(name) for name in STAGE_PARAMS[stage]},
        }
        if stage == "distill":
            payload["traces"] = _digest_dir(self.cfg.train_traces)
            payload["manifest"] = self.video.model_dump(mode="json")
        if stage == "eval":
            payload["traces"] = _digest_dir(self.cfg.test_traces)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def _relative(self, paths: list[Path]) -> list[str]:
        files: list[Path] = []
        for path in paths:
            files.extend(sorted(item for item in path.rglob("*") if item.is_file()) if path.is_dir() else [path])
        return [file.relative_to(self.output_dir).as_posix() for file in files]

    def _stage(self, stage: str, run: Callable[[int], list[Path]], load: Callable[[], None]) -> None:
        input_hash = self._input_hash(stage)
        self._previous_hash = input_hash
        seed = stage_seed(self.cfg.seed, stage)

        if self.manifest_record.is_complete(stage, input_hash):
            logger.info(f"Stage {stage}: inputs unchanged, reusing its artifacts")
            load()
            self.stages_skipped.append(stage)
            return

        logger.info(f"Stage {stage}: starting")
        self._resuming = self.manifest_record.started_with(stage, input_hash)
        self.manifest_record.append(StageRecord(stage=stage, input_hash=input_hash, seed=seed))
        try:
            written = run(seed)
        except AbrRashomonError as e:
            logger.error(f"Stage {stage} failed: {e}")
            raise PipelineError(f"stage {stage}: {e}") from e

        record = StageRecord(
            stage=stage,
            input_hash=input_hash,
            seed=seed,
            complete=True,
            artifacts=self._relative(written),
        )
        self.manifest_record.append(record)
        self.stages_run.append(stage)
        logger.info(f"Stage {stage}: finished with {len(record.artifacts)} artifacts")

    def run(self) -> PipelineResult:
        """Run every stage and return a summary.

        Raises:
            PipelineError: Wrapping the failure of a stage; finished stages stay recorded.
        """
        for stage in STAGES:
            if stage == "eval" and self.cfg.test_traces is None:
                continue
            load = getattr(self, f"_load_{stage}", None)
            self._stage(stage, getattr(self, f"_run_{stage}"), load or (lambda: None))

        logger.success(
            f"Pipeline finished: {len(self.survivors)} of {len(self.selected)} selected trees survived "
            f"(stages run: {', '.join(self.stages_run) or 'none'})",
        )
        return PipelineResult(
            output_dir=self.output_dir,
            optimal_key=self.rashomon_set.entries[0].key,
            rashomon_size=len(self.rashomon_set),
            selected_keys=[entry.key for entry in self.selected],
            survivor_keys=[entry.key for entry in self.survivors],
            stages_run=self.stages_run,
            stages_skipped=self.stages_skipped,
        )

    # distill

    def _run_distill(self, seed: int) -> list[Path]:
        cfg = self.cfg
        distill_cfg = DistillConfig(
            max_iterations=cfg.max_iterations,
            max_depth=cfg.max_depth,
            traces=load_trace_dir(cfg.train_traces),
            manifest=self.video,
            delta=cfg.delta,
            eliminate=cfg.eliminate,
            max_thresholds_per_feature=cfg.max_thresholds_per_feature,
            buffer_cap_s=cfg.buffer_cap_s,
            ensemble=EnsembleConfig(seed=seed),
        )
        self.aggregate = distill(make_policy(cfg.teacher), distill_cfg)
        path = self.output_dir / AGGREGATE_FILENAME
        self.aggregate.save_csv(path)
        return [path]

    def _load_distill(self) -> None:
        self.aggregate = AggDataset.load_csv(self.output_dir / AGGREGATE_FILENAME)

    # features

    def _run_features(self, seed: int) -> list[Path]:
        _, data = binarize(self.aggregate.to_raw(), self.cfg.max_thresholds_per_feature)
        written = []
        if self.cfg.eliminate:
            result = eliminate_columns(data, self.cfg.delta, ensemble_cfg=EnsembleConfig(seed=seed))
            data = result.dataset
            elimination_path = self.output_dir / ELIMINATION_FILENAME
            elimination_path.write_text(result.model_dump_json(indent=2, exclude={"dataset"}), encoding="utf-8")
            written.append(elimination_path)
        self.data = data
        written.extend(save_bin_dataset(data, self.output_dir / FEATURES_DIRNAME))
        logger.info(f"Binarized {data.n_rows} rows into {data.n_columns} columns")
        return written

    def _load_features(self) -> None:
        self.data = load_bin_dataset(self.output_dir / FEATURES_DIRNAME)

    # rashomon

    def _run_rashomon(self, seed: int) -> list[Path]:
        cfg = self.cfg
        self.rashomon_set = enumerate_rashomon(
            self.data,
            cfg.lambda_,
            cfg.epsilon,
            cfg.max_depth,
            cap=cfg.rashomon_cap,
        )
        directory = self.output_dir / RASHOMON_DIRNAME
        save_rashomon_set(self.rashomon_set, directory)
        utilisation_path = self.output_dir / UTILISATION_FILENAME
        save_feature_utilisation(feature_utilisation(self.rashomon_set, self.data.binarizer), utilisation_path)
        return [directory, utilisation_path]

    def _load_rashomon(self) -> None:
        self.rashomon_set = load_rashomon_set(self.output_dir / RASHOMON_DIRNAME)

    # select

    def _run_select(self, seed: int) -> list[Path]:
        self.selected = select_entries(self.rashomon_set, self.cfg.instances)
        path = self.output_dir / SELECTED_FILENAME
        _write_keys(path, self.selected)
        logger.info(f"Selected {len(self.selected)} of {len(self.rashomon_set)} trees")
        return [path]

    def _load_select(self) -> None:
        self.selected = self._entries_for(_read_keys(self.output_dir / SELECTED_FILENAME))

    # judge

    def _run_judge(self, seed: int) -> list[Path]:
        settings = self.cfg.judge
        log_path = self.output_dir / TOURNAMENT_FILENAME
        resume_from: TournamentLog | None = None
        if self._resuming and log_path.exists():
            resume_from = load_jsonl(log_path)
            logger.info(f"Resuming the tournament with {len(resume_from.comparisons())} recorded comparisons")
        log_path.unlink(missing_ok=True)

        tournament_cfg = TournamentConfig(
            backends=[make_judge(name) for name in settings.backends],
            few_shot=settings.few_shot,
            self_consistency=settings.self_consistency,
            seed=seed,
            max_rounds=settings.max_rounds,
            max_in_flight=settings.max_in_flight,
        )
        binarizer = self.rashomon_set.binarizer or self.data.binarizer
        contestants = make_contestants([entry.tree for entry in self.selected], binarizer, self.video)
        survivors, _ = tournament(contestants, tournament_cfg, log_path=log_path, resume_from=resume_from)

        self.survivors = self._entries_for([survivor.key for survivor in survivors])
        survivors_path = self.output_dir / SURVIVORS_FILENAME
        _write_keys(survivors_path, self.survivors)
        return [log_path, survivors_path]

    def _load_judge(self) -> None:
        self.survivors = self._entries_for(_read_keys(self.output_dir / SURVIVORS_FILENAME))

    # export

    def _run_export(self, seed: int) -> list[Path]:
        binarizer = self.rashomon_set.binarizer or self.data.binarizer
        directory = self.output_dir / EXPORT_DIRNAME
        directory.mkdir(parents=True, exist_ok=True)
        binarizer.save(directory / BINARIZER_FILENAME)

        optimal = self.rashomon_set.entries[0]
        survivor_keys = {entry.key for entry in self.survivors}
        exported = [optimal, *[entry for entry in self.survivors if entry.key != optimal.key]]

        summary_path = directory / "summary.csv"
        with open(summary_path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["key", "file", "optimal", "survivor", "depth", "leaves", "distinct_features", "node_count", "lines"],
            )
            for entry in exported:
                stem = Path(tree_filename(entry.key)).stem
                save_tree(entry.tree, directory / f"{stem}.json", binarizer, BINARIZER_FILENAME)
                code = tree_to_code(entry.tree, binarizer, self.video)
                (directory / f"{stem}.py").write_text(code.with_legend(), encoding="utf-8")
                summary = tree_summary(entry.tree, binarizer)
                writer.writerow(
                    [
                        entry.key,
                        stem,
                        entry.key == optimal.key,
                        entry.key in survivor_keys,
                        summary.depth,
                        summary.leaves,
                        summary.distinct_features,
                        summary.node_count,
                        summary.code_lines,
                    ],
                )
        logger.info(f"Exported {len(exported)} trees to {directory}")
        return [directory]

    # eval

    def _run_eval(self, seed: int) -> list[Path]:
        cfg = self.cfg
        assert cfg.test_traces is not None
        binarizer = self.rashomon_set.binarizer or self.data.binarizer
        policies: list[AbrPolicy] = [make_policy(name) for name in cfg.baselines]
        if cfg.teacher not in cfg.baselines:
            policies.append(make_policy(cfg.teacher))
        tree_names = []
        for entry in self.selected:
            name = f"tree:{Path(tree_filename(entry.key)).stem}"
            policies.append(TreePolicy(entry.tree, binarizer, name=name))
            tree_names.append(name)

        report = eval_report(
            policies,
            load_trace_dir(cfg.test_traces),
            self.video,
            cfg.metric,
            baseline=cfg.baseline,
            tree_policies=tree_names,
            optimal_policy=f"tree:{Path(tree_filename(self.rashomon_set.entries[0].key)).stem}",
            buffer_cap_s=cfg.buffer_cap_s,
        )
        return write_report(report, self.output_dir / EVAL_DIRNAME)

    def _entries_for(self, keys: list[str]) -> list[RashomonEntry]:
        by_key = {entry.key: entry for entry in self.rashomon_set.entries}
        missing = [key for key in keys if key not in by_key]
        if missing:
            raise PipelineError(f"recorded trees {missing} are not in the Rashomon set")
        return [by_key[key] for key in keys]


def _write_keys(path: Path, entries: list[RashomonEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["key", "file"])
        for entry in entries:
            writer.writerow([entry.key, tree_filename(entry.key)])


def _read_keys(path: Path) -> list[str]:
    with open(path, encoding="utf-8", newline="") as f:
        return [row["key"] for row in csv.DictReader(f)]


def pipeline_run(cfg: PipelineConfig) -> PipelineResult:
    """Run (or resume) the full pipeline described by `cfg`."""
    return PipelineRunner(cfg).run()
