"""Pairwise comprehensibility judging, the elimination tournament and LLM tree adjustment."""

from abr_rashomon.judge.adjust import adjust_tree
from abr_rashomon.judge.heuristic import HeuristicJudge, heuristic_compare
from abr_rashomon.judge.llm import LlmJudge, llm_compare
from abr_rashomon.judge.messages import (
    Contestant,
    Preference,
    TournamentConfig,
    TournamentLog,
    Verdict,
    load_jsonl,
)
from abr_rashomon.judge.tournament import make_contestants, tournament

__all__ = [
    "Contestant",
    "HeuristicJudge",
    "LlmJudge",
    "Preference",
    "TournamentConfig",
    "TournamentLog",
    "Verdict",
    "adjust_tree",
    "heuristic_compare",
    "llm_compare",
    "load_jsonl",
    "make_contestants",
    "tournament",
]
