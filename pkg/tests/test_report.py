import csv
import json
from collections.abc import Callable
from pathlib import Path

import pytest

from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace
from abr_rashomon.pipeline.report import (
    CDF_FILENAME,
    REPORT_FILENAME,
    SPREAD_FILENAME,
    SUMMARY_FILENAME,
    eval_report,
    rashomon_spread,
    write_report,
)
from abr_rashomon.policies.base import ConstantPolicy
from abr_rashomon.policies.registry import make_policy
from abr_rashomon.qoe import QoeMetric


@pytest.fixture
def traces(constant_trace: Callable[[float], NetworkTrace]) -> list[NetworkTrace]:
    """A slow and a fast constant trace."""
    return [constant_trace(1.0), constant_trace(6.0)]


def test_eval_report_rows_and_baseline(manifest: VideoManifest, traces: list[NetworkTrace]) -> None:
    """Rows are policy-major and the baseline improves on itself by exactly zero."""
    policies = [make_policy("bba"), ConstantPolicy(0)]

    report = eval_report(policies, traces, manifest, "lin", baseline="bba")

    assert report.metric == QoeMetric.lin
    assert [(row.policy, row.trace_id) for row in report.rows] == [
        ("bba", "const-1"),
        ("bba", "const-6"),
        ("constant:0", "const-1"),
        ("constant:0", "const-6"),
    ]
    assert all(row.improvement == 0.0 for row in report.rows if row.policy == "bba")
    assert [summary.policy for summary in report.summaries] == ["bba", "constant:0"]
    assert report.summaries[0].improvement == 0.0
    assert report.spread is None


def test_constant_lowest_level_scores_the_bottom_bitrate(manifest: VideoManifest, traces: list[NetworkTrace]) -> None:
    """Staying on the lowest level at 6 Mbps never stalls and has no switching penalty."""
    report = eval_report([ConstantPolicy(0)], traces, manifest)

    fast = report.rows[1]
    assert fast.rebuffer_s == 0.0
    assert fast.mean_bitrate_kbps == 300.0
    assert fast.qoe_per_chunk == pytest.approx(0.3)


def test_eval_report_rejects_bad_names(manifest: VideoManifest, traces: list[NetworkTrace]) -> None:
    """Policy names must be distinct and the baseline and optimal tree must be among them."""
    with pytest.raises(ValueError):
        eval_report([ConstantPolicy(0), ConstantPolicy(0)], traces, manifest)
    with pytest.raises(ValueError):
        eval_report([ConstantPolicy(0)], traces, manifest, baseline="bba")
    with pytest.raises(ValueError):
        eval_report([ConstantPolicy(0)], traces, manifest, tree_policies=["constant:0"], optimal_policy="bba")


def test_rashomon_spread() -> None:
    """Spread is max minus min; deviation is measured from the optimal tree."""
    spread = rashomon_spread({"a": 0.5, "b": 0.75, "c": 0.25}, optimal="a")

    assert spread.trees == 3
    assert spread.spread == 0.5
    assert spread.max_deviation == 0.25
    assert rashomon_spread({"a": 1.0}).max_deviation is None


def test_write_report(tmp_path: Path, manifest: VideoManifest, traces: list[NetworkTrace]) -> None:
    """Every table is written with one line per row plus a header."""
    report = eval_report(
        [ConstantPolicy(0), ConstantPolicy(1)],
        traces,
        manifest,
        "hd",
        baseline="constant:0",
        tree_policies=["constant:0", "constant:1"],
        optimal_policy="constant:0",
    )

    written = write_report(report, tmp_path / "eval")

    assert [path.name for path in written] == [REPORT_FILENAME, SUMMARY_FILENAME, CDF_FILENAME, SPREAD_FILENAME]
    with open(written[0], encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert float(rows[0]["qoe_per_chunk"]) == report.rows[0].qoe_per_chunk
    assert len(written[1].read_text(encoding="utf-8").splitlines()) == 3
    assert len(written[2].read_text(encoding="utf-8").splitlines()) == 5
    spread = json.loads(written[3].read_text(encoding="utf-8"))
    assert spread["trees"] == 2
    assert spread["spread"] == pytest.approx(report.spread.spread if report.spread else 0.0)
