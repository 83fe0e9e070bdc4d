"""Verdicts, tournament settings and the append-only tournament log."""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator
from strenum import StrEnum

from abr_rashomon.consts import DEFAULT_MAX_IN_FLIGHT, PROMPT_VERSION
from abr_rashomon.features.binarize import Binarizer
from abr_rashomon.sparse_tree.tree import DecisionTree


class Preference(StrEnum):
    """Which of two presented trees is more comprehensible."""

    TREEONE = "TREEONE"
    TREETWO = "TREETWO"
    TIE = "TIE"
    """Only produced when an ensemble disagrees."""


class Exchange(BaseModel):
    """One prompt sent to a chat backend and the reply it gave."""

    backend: str
    prompt: str
    reply: str


class Verdict(BaseModel):
    """One judge's preference for a pair, with its stated reason."""

    preference: Preference
    rationale: str = ""
    judge_id: str
    exchanges: list[Exchange] = Field(default_factory=list)


class Contestant(BaseModel):
    """A tree entered into a tournament, with everything a judge may look at."""

    model_config = ConfigDict(frozen=True)

    key: str
    tree: DecisionTree
    code: str
    binarizer: Binarizer


class JudgeBackend(ABC):
    """Compares two contestants. Errors propagate to the caller."""

    judge_id: str = "judge"

    @abstractmethod
    def compare(self, first: Contestant, second: Contestant, *, few_shot: bool, self_consistency: int) -> Verdict:
        """Return which of `first` (TREEONE) and `second` (TREETWO) is more comprehensible."""


class TournamentConfig(BaseModel):
    """How a tournament is run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    backends: list[JudgeBackend] = Field(min_length=1)
    few_shot: bool = False
    self_consistency: int = Field(default=1, ge=1)
    """Repeats per query; must be odd so a majority always exists."""
    seed: int = 0
    max_rounds: int = Field(default=1000, ge=1)
    max_in_flight: int = Field(default=DEFAULT_MAX_IN_FLIGHT, ge=1)
    """Comparisons of one phase that may run at the same time."""

    @field_validator("self_consistency")
    @classmethod
    def validate_odd(cls, value: int) -> int:
        """Even repeat counts could tie."""
        if value % 2 == 0:
            raise ValueError(f"self_consistency must be odd, got {value}")
        return value


class ComparisonRecord(BaseModel):
    """One pairwise comparison of a phase."""

    round: int
    phase: int
    pair_index: int
    tree_one: str
    """Canonical key of the tree presented first."""
    tree_two: str
    verdicts: list[Verdict]
    consensus: bool
    removed: str | None = None
    """Key of the removed tree; only set when every judge agreed."""
    prompt_version: int = PROMPT_VERSION

    @property
    def outcome(self) -> Preference:
        """The agreed preference, or TIE when the judges disagree."""
        if not self.consensus:
            return Preference.TIE
        return self.verdicts[0].preference


class RoundRecord(BaseModel):
    """Every comparison of one round plus its survivor count."""

    round: int
    survivors_before: int
    survivors: int
    phase_used: int | None = None
    """The phase whose removals ended the round; None when neither phase removed anything."""
    comparisons: list[ComparisonRecord] = Field(default_factory=list)
    complete: bool = True


class TournamentLog(BaseModel):
    """Everything a tournament did, in order."""

    rounds: list[RoundRecord] = Field(default_factory=list)
    final_survivors: list[str] = Field(default_factory=list)
    converged: bool = False
    """Whether the run stopped because a round could not remove any tree."""

    def comparisons(self) -> list[ComparisonRecord]:
        """All comparisons in run order."""
        return [record for round_record in self.rounds for record in round_record.comparisons]

    def survivor_counts(self) -> list[int]:
        """Survivors after each completed round."""
        return [round_record.survivors for round_record in self.rounds if round_record.complete]

    def consensus_rate(self) -> float:
        """Fraction of comparisons on which every judge agreed."""
        records = self.comparisons()
        if not records:
            return 1.0
        return sum(record.consensus for record in records) / len(records)

    def total_removals(self) -> int:
        """Trees removed over the whole run."""
        return sum(record.removed is not None for record in self.comparisons())

    def find(self, round_index: int, phase: int, tree_one: str, tree_two: str) -> ComparisonRecord | None:
        """A recorded comparison of exactly this pair in this round and phase, if any."""
        for record in self.comparisons():
            if (record.round, record.phase, record.tree_one, record.tree_two) == (
                round_index,
                phase,
                tree_one,
                tree_two,
            ):
                return record
        return None


def append_jsonl(file_path: str | Path, records: list[BaseModel], kind: str) -> None:
    """Append one JSON line per record, tagged with `kind`."""
    with open(file_path, "a", encoding="utf-8") as file:
        for record in records:
            file.write(json.dumps({"kind": kind, **record.model_dump(mode="json")}) + "\n")


def load_jsonl(file_path: str | Path) -> TournamentLog:
    """Rebuild a log from its JSON-lines form. Rounds without a closing summary line are marked incomplete."""
    comparisons: dict[int, list[ComparisonRecord]] = {}
    summaries: dict[int, dict] = {}
    final: dict = {}
    with open(file_path, encoding="utf-8") as file:
        for line in file:
            if not line.strip():
                continue
            data = json.loads(line)
            kind = data.pop("kind", "comparison")
            if kind == "comparison":
                record = ComparisonRecord.model_validate(data)
                comparisons.setdefault(record.round, []).append(record)
            elif kind == "round":
                summaries[data["round"]] = data
            elif kind == "final":
                data.pop("rounds", None)
                final = data

    rounds = []
    for round_index in sorted(set(comparisons) | set(summaries)):
        records = comparisons.get(round_index, [])
        summary = summaries.get(round_index)
        if summary is None:
            rounds.append(
                RoundRecord(
                    round=round_index,
                    survivors_before=0,
                    survivors=0,
                    comparisons=records,
                    complete=False,
                ),
            )
        else:
            summary["comparisons"] = [record.model_dump() for record in records]
            rounds.append(RoundRecord.model_validate(summary))
    return TournamentLog(
        rounds=rounds,
        final_survivors=final.get("final_survivors", []),
        converged=final.get("converged", False),
    )
