"""Pairwise elimination tournament over a set of trees.

Each round shuffles the survivors with a round-indexed seed and compares adjacent pairs (offset 0). A tree is
removed only when every judge prefers the other one. If that phase removes nothing, adjacent pairs are compared
again at offset 1. If that also removes nothing, the survivors are returned as one equivalence class. Removals
are applied only after a phase finishes, so the comparisons of a phase may run concurrently.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from loguru import logger

from abr_rashomon.codegen.export import tree_to_code
from abr_rashomon.errors import AbrRashomonError, TournamentAborted
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.judge.backends import make_chat_client
from abr_rashomon.judge.heuristic import HEURISTIC_JUDGE_ID, HeuristicJudge
from abr_rashomon.judge.llm import LlmJudge
from abr_rashomon.judge.messages import (
    ComparisonRecord,
    Contestant,
    JudgeBackend,
    Preference,
    RoundRecord,
    TournamentConfig,
    TournamentLog,
    Verdict,
    append_jsonl,
)
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.sparse_tree.tree import DecisionTree, canonicalize

_ROUND_SEED_STRIDE = 1_000_003


def make_judge(name: str) -> JudgeBackend:
    """`heuristic` or an LLM judge for `<provider>:<model>`.

    Raises:
        ValueError: On a malformed name.
        MissingCredentialsError: If the provider's API key is not in the environment.
    """
    if name == HEURISTIC_JUDGE_ID:
        return HeuristicJudge()
    return LlmJudge(make_chat_client(name))


def make_contestants(trees: list[DecisionTree], binarizer: Binarizer, manifest: VideoManifest) -> list[Contestant]:
    """Attach canonical keys and exported code to each tree, dropping duplicate canonical forms."""
    contestants: list[Contestant] = []
    seen: set[str] = set()
    for tree in trees:
        key = canonicalize(tree)
        if key in seen:
            continue
        seen.add(key)
        code = tree_to_code(tree, binarizer, manifest).text
        contestants.append(Contestant(key=key, tree=tree, code=code, binarizer=binarizer))
    return contestants


def round_order(contestants: list[Contestant], seed: int, round_index: int) -> list[Contestant]:
    """The survivors shuffled with the seed of `round_index`."""
    shuffled = list(contestants)
    random.Random(seed * _ROUND_SEED_STRIDE + round_index).shuffle(shuffled)
    return shuffled


def phase_pairs(contestants: list[Contestant], offset: int) -> list[tuple[Contestant, Contestant]]:
    """Disjoint adjacent pairs starting at `offset`."""
    return [(contestants[index], contestants[index + 1]) for index in range(offset, len(contestants) - 1, 2)]


def _judge_pair(
    cfg: TournamentConfig,
    round_index: int,
    phase: int,
    pair_index: int,
    first: Contestant,
    second: Contestant,
    replay: TournamentLog | None,
) -> ComparisonRecord:
    recorded = replay.find(round_index, phase, first.key, second.key) if replay is not None else None
    if recorded is not None:
        verdicts = recorded.verdicts
    else:
        verdicts = [
            backend.compare(first, second, few_shot=cfg.few_shot, self_consistency=cfg.self_consistency)
            for backend in cfg.backends
        ]

    consensus = len({verdict.preference for verdict in verdicts}) == 1 and verdicts[0].preference != Preference.TIE
    removed = None
    if consensus:
        removed = second.key if verdicts[0].preference == Preference.TREEONE else first.key
    _log_verdicts(first, second, verdicts, removed)
    return ComparisonRecord(
        round=round_index,
        phase=phase,
        pair_index=pair_index,
        tree_one=first.key,
        tree_two=second.key,
        verdicts=verdicts,
        consensus=consensus,
        removed=removed,
    )


def _log_verdicts(first: Contestant, second: Contestant, verdicts: list[Verdict], removed: str | None) -> None:
    summary = ", ".join(f"{verdict.judge_id}={verdict.preference}" for verdict in verdicts)
    outcome = "no consensus" if removed is None else f"removed {'TREEONE' if removed == first.key else 'TREETWO'}"
    logger.debug(f"Compared [{first.key}] vs [{second.key}]: {summary}; {outcome}")


def tournament(
    contestants: list[Contestant],
    cfg: TournamentConfig,
    *,
    log_path: str | Path | None = None,
    resume_from: TournamentLog | None = None,
) -> tuple[list[Contestant], TournamentLog]:
    """Run the elimination tournament until one tree is left or a round cannot remove anything.

    Args:
        contestants (list[Contestant]): The trees, with distinct keys. Must not be empty.
        cfg (TournamentConfig): Judges, prompting options, seed and limits.
        log_path (str | Path | None): When set, every comparison and round summary is appended here as JSON lines.
        resume_from (TournamentLog | None): A previous (possibly aborted) log whose verdicts are reused for the same
            comparisons instead of asking the judges again.

    Returns:
        tuple[list[Contestant], TournamentLog]: The surviving equivalence class and the full log.

    Raises:
        TournamentAborted: If a judge fails; the exception carries the log up to the failure.
    """
    if not contestants:
        raise ValueError("a tournament needs at least one tree")
    if len({contestant.key for contestant in contestants}) != len(contestants):
        raise ValueError("contestants must have distinct canonical keys")

    log = TournamentLog()
    survivors = list(contestants)
    round_index = 0

    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as executor:
        while len(survivors) > 1:
            if round_index >= cfg.max_rounds:
                logger.warning(f"Stopping after {cfg.max_rounds} rounds with {len(survivors)} trees left")
                break

            order = round_order(survivors, cfg.seed, round_index)
            round_record = RoundRecord(round=round_index, survivors_before=len(order), survivors=len(order))
            log.rounds.append(round_record)
            removed: set[str] = set()

            for phase, offset in ((1, 0), (2, 1)):
                pairs = phase_pairs(order, offset)
                futures = [
                    executor.submit(_judge_pair, cfg, round_index, phase, index, first, second, resume_from)
                    for index, (first, second) in enumerate(pairs)
                ]
                records: list[ComparisonRecord] = []
                failure: BaseException | None = None
                for future in futures:
                    try:
                        records.append(future.result())
                    except (AbrRashomonError, ValueError) as e:
                        failure = failure or e

                round_record.comparisons.extend(records)
                if log_path is not None:
                    append_jsonl(log_path, records, kind="comparison")
                if failure is not None:
                    round_record.complete = False
                    logger.error(f"Round {round_index} phase {phase} failed: {failure}")
                    raise TournamentAborted(f"round {round_index} phase {phase}: {failure}", log) from failure

                removed = {record.removed for record in records if record.removed is not None}
                if removed:
                    round_record.phase_used = phase
                    break

            survivors = [contestant for contestant in order if contestant.key not in removed]
            round_record.survivors = len(survivors)
            if log_path is not None:
                append_jsonl(log_path, [round_record.model_copy(update={"comparisons": []})], kind="round")
            logger.info(
                f"Round {round_index}: {round_record.survivors_before} -> {round_record.survivors} trees "
                f"(phase {round_record.phase_used or '-'})",
            )
            round_index += 1

            if not removed:
                log.converged = True
                break

    log.final_survivors = [contestant.key for contestant in survivors]
    if log_path is not None:
        append_jsonl(log_path, [log.model_copy(update={"rounds": []})], kind="final")
    logger.info(f"Tournament finished with {len(survivors)} tree(s); consensus rate {log.consensus_rate():.2f}")
    return survivors, log
