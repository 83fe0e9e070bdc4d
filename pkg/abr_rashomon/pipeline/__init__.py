"""Pipeline configuration, the end-to-end run and evaluation reports."""

from abr_rashomon.pipeline.data_model import JudgeSettings, PipelineConfig
from abr_rashomon.pipeline.load_config import ConfigFormat, PipelineConfigLoader
from abr_rashomon.pipeline.pipeline import PipelineResult, pipeline_run
from abr_rashomon.pipeline.report import EvalReport, eval_report, write_report

__all__ = [
    "ConfigFormat",
    "EvalReport",
    "JudgeSettings",
    "PipelineConfig",
    "PipelineConfigLoader",
    "PipelineResult",
    "eval_report",
    "pipeline_run",
    "write_report",
]
