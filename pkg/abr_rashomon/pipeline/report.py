"""Evaluation reports: per-session QoE, per-policy summaries, CDF data and the QoE spread across a tree set."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from abr_rashomon.consts import DEFAULT_BUFFER_CAP_S
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace
from abr_rashomon.policies.base import AbrPolicy
from abr_rashomon.qoe import QoeMetric, cdf_points, qoe, qoe_improvement, qoe_params_for
from abr_rashomon.sim.session import run_session

REPORT_FILENAME = "report.csv"
SUMMARY_FILENAME = "summary.csv"
CDF_FILENAME = "cdf.csv"
SPREAD_FILENAME = "spread.json"


class EvalRow(BaseModel):
    """One policy on one trace."""

    policy: str
    trace_id: str
    qoe_total: float
    qoe_per_chunk: float
    rebuffer_s: float
    mean_bitrate_kbps: float
    improvement: float | None = None
    """Relative improvement over the baseline on the same trace; None without a baseline or on a zero baseline."""


class PolicySummary(BaseModel):
    """Per-chunk QoE of one policy over all traces."""

    policy: str
    sessions: int
    mean: float
    std: float
    improvement: float | None = None
    """Relative improvement of `mean` over the baseline's mean."""


class RashomonSpread(BaseModel):
    """How much mean QoE varies across a set of near-optimal trees."""

    trees: int = Field(ge=1)
    spread: float
    """max - min of the trees' mean per-chunk QoE."""
    max_deviation: float | None = None
    """Largest |mean - optimal tree's mean|; None when no optimal tree was named."""


class EvalReport(BaseModel):
    """Everything `eval_report` computed."""

    metric: QoeMetric
    baseline: str | None = None
    rows: list[EvalRow]
    summaries: list[PolicySummary]
    spread: RashomonSpread | None = None

    def values(self, policy: str) -> list[float]:
        """Per-session per-chunk QoE of `policy`, in trace order."""
        return [row.qoe_per_chunk for row in self.rows if row.policy == policy]

    def cdf(self, policy: str) -> list[tuple[float, float]]:
        """Sorted per-session values of `policy` with their empirical CDF probability."""
        return cdf_points(self.values(policy))


def _improvement(value: float, baseline: float | None) -> float | None:
    if baseline is None or baseline == 0:
        return None
    return qoe_improvement(value, baseline)


def rashomon_spread(means: dict[str, float], optimal: str | None = None) -> RashomonSpread:
    """The spread of the given per-tree means and, with `optimal` named, the largest deviation from it."""
    values = list(means.values())
    max_deviation = None
    if optimal is not None:
        reference = means[optimal]
        max_deviation = max(abs(value - reference) for value in values)
    return RashomonSpread(trees=len(values), spread=max(values) - min(values), max_deviation=max_deviation)


def eval_report(
    policies: list[AbrPolicy],
    traces: list[NetworkTrace],
    manifest: VideoManifest,
    metric: QoeMetric | str = QoeMetric.lin,
    *,
    baseline: str | None = None,
    tree_policies: list[str] | None = None,
    optimal_policy: str | None = None,
    buffer_cap_s: float = DEFAULT_BUFFER_CAP_S,
) -> EvalReport:
    """Play every policy over every trace and score the sessions.

    Args:
        policies (list[AbrPolicy]): Policies to evaluate; names must be distinct.
        traces (list[NetworkTrace]): Evaluation traces.
        manifest (VideoManifest): The video to stream.
        metric (QoeMetric | str): `lin` or `hd`.
        baseline (str | None): Name of the policy the improvement columns are relative to.
        tree_policies (list[str] | None): Names of the policies that form a near-optimal tree set; their spread is
            reported.
        optimal_policy (str | None): Name of the optimal tree among `tree_policies`.
        buffer_cap_s (float): Player buffer capacity.

    Returns:
        EvalReport: One row per (policy, trace) in policy-major order, plus summaries.
    """
    names = [policy.name for policy in policies]
    if len(set(names)) != len(names):
        raise ValueError(f"policy names must be distinct, got {names}")
    if baseline is not None and baseline not in names:
        raise ValueError(f"baseline {baseline!r} is not among the evaluated policies")
    if optimal_policy is not None and optimal_policy not in (tree_policies or []):
        raise ValueError(f"optimal policy {optimal_policy!r} is not among the tree policies")

    params = qoe_params_for(metric)
    per_policy: dict[str, list[EvalRow]] = {}
    for policy in policies:
        rows = []
        for trace in traces:
            log = run_session(policy, trace, manifest, buffer_cap_s=buffer_cap_s)
            report = qoe(log, params)
            rows.append(
                EvalRow(
                    policy=policy.name,
                    trace_id=trace.trace_id,
                    qoe_total=report.total,
                    qoe_per_chunk=report.per_chunk_mean,
                    rebuffer_s=log.total_rebuffer_s,
                    mean_bitrate_kbps=float(np.mean([row.bitrate_kbps for row in log.rows])),
                ),
            )
        per_policy[policy.name] = rows
        logger.debug(f"Evaluated {policy.name} on {len(traces)} traces")

    if baseline is not None:
        baseline_rows = per_policy[baseline]
        for rows in per_policy.values():
            for row, reference in zip(rows, baseline_rows, strict=True):
                row.improvement = _improvement(row.qoe_per_chunk, reference.qoe_per_chunk)

    means = {name: float(np.mean([row.qoe_per_chunk for row in rows])) for name, rows in per_policy.items()}
    baseline_mean = means[baseline] if baseline is not None else None
    summaries = [
        PolicySummary(
            policy=name,
            sessions=len(rows),
            mean=means[name],
            std=float(np.std([row.qoe_per_chunk for row in rows])),
            improvement=_improvement(means[name], baseline_mean),
        )
        for name, rows in per_policy.items()
    ]

    spread = None
    if tree_policies:
        spread = rashomon_spread({name: means[name] for name in tree_policies}, optimal_policy)
        logger.info(f"QoE spread over {spread.trees} trees: {spread.spread:.4f}")

    return EvalReport(
        metric=QoeMetric(metric),
        baseline=baseline,
        rows=[row for rows in per_policy.values() for row in rows],
        summaries=summaries,
        spread=spread,
    )


def _optional(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_report(report: EvalReport, directory: str | Path) -> list[Path]:
    """Write the session rows, summaries, CDF points and (if present) the spread; return the files written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = directory / REPORT_FILENAME
    with open(report_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(EvalRow.model_fields))
        for row in report.rows:
            writer.writerow(
                [
                    row.policy,
                    row.trace_id,
                    repr(row.qoe_total),
                    repr(row.qoe_per_chunk),
                    repr(row.rebuffer_s),
                    repr(row.mean_bitrate_kbps),
                    _optional(row.improvement),
                ],
            )
    written.append(report_path)

    summary_path = directory / SUMMARY_FILENAME
    with open(summary_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(PolicySummary.model_fields))
        for summary in report.summaries:
            writer.writerow(
                [
                    summary.policy,
                    summary.sessions,
                    repr(summary.mean),
                    repr(summary.std),
                    _optional(summary.improvement),
                ],
            )
    written.append(summary_path)

    cdf_path = directory / CDF_FILENAME
    with open(cdf_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["policy", "value", "probability"])
        for summary in report.summaries:
            for value, probability in report.cdf(summary.policy):
                writer.writerow([summary.policy, repr(value), repr(probability)])
    written.append(cdf_path)

    if report.spread is not None:
        spread_path = directory / SPREAD_FILENAME
        spread_path.write_text(report.spread.model_dump_json(indent=2), encoding="utf-8")
        written.append(spread_path)

    logger.info(f"Wrote evaluation report for {len(report.summaries)} policies to {directory}")
    return written
