"""The config model for an end-to-end pipeline run."""

from __future__ import annotations

import os
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from ruamel.yaml import YAML

from abr_rashomon.consts import (
    DEFAULT_BUFFER_CAP_S,
    DEFAULT_DELTA,
    DEFAULT_EPSILON,
    DEFAULT_INSTANCES,
    DEFAULT_LAMBDA,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_IN_FLIGHT,
    DEFAULT_MAX_THRESHOLDS_PER_FEATURE,
    DEFAULT_RASHOMON_CAP,
)
from abr_rashomon.judge.backends import is_known_backend_name
from abr_rashomon.locale_info.pipeline_config_fields import PIPELINE_CONFIG_FIELD_DESCRIPTIONS
from abr_rashomon.policies.registry import is_known_policy_name
from abr_rashomon.qoe import QoeMetric


class JudgeSettings(BaseModel):
    """How the comprehensibility tournament is judged."""

    model_config = ConfigDict(extra="forbid")

    backends: list[str] = Field(default_factory=lambda: ["heuristic"], min_length=1)
    """`heuristic` and/or `<provider>:<model>` names; a tree is removed only when all of them agree."""
    few_shot: bool = False
    self_consistency: int = Field(default=1, ge=1)
    max_in_flight: int = Field(default=DEFAULT_MAX_IN_FLIGHT, ge=1)
    max_rounds: int = Field(default=1000, ge=1)

    @field_validator("backends")
    @classmethod
    def validate_backends(cls, value: list[str]) -> list[str]:
        """Every backend must be `heuristic` or `<provider>:<model>`."""
        unknown = [name for name in value if not is_known_backend_name(name)]
        if unknown:
            raise ValueError(f"unknown judge backends {unknown}")
        return value

    @field_validator("self_consistency")
    @classmethod
    def validate_self_consistency(cls, value: int) -> int:
        """An even repeat count could tie."""
        if value % 2 == 0:
            raise ValueError(f"self_consistency must be odd, got {value}")
        return value

    @property
    def uses_llm(self) -> bool:
        """Whether any backend is a chat model."""
        return any(name != "heuristic" for name in self.backends)


class PipelineConfig(BaseModel):
    """Everything `pipeline_run` needs. Paths are checked when the config is validated."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    _yaml_loader: YAML | None = None

    teacher: str = "robustmpc"
    train_traces: Path
    test_traces: Path | None = None
    manifest_path: Path | None = None
    output_dir: Path = Path("abr_rashomon_out")
    seed: int = 0

    max_iterations: int = Field(default=3, ge=1)
    """M in the teacher-student loop."""
    max_depth: int = Field(default=DEFAULT_MAX_DEPTH, ge=1)
    lambda_: float = Field(default=DEFAULT_LAMBDA, gt=0, alias="lambda")
    epsilon: float = Field(default=DEFAULT_EPSILON, ge=0)
    delta: float = Field(default=DEFAULT_DELTA, ge=0)
    instances: int = Field(default=DEFAULT_INSTANCES, ge=1)
    rashomon_cap: int = Field(default=DEFAULT_RASHOMON_CAP, ge=1)
    max_thresholds_per_feature: int = Field(default=DEFAULT_MAX_THRESHOLDS_PER_FEATURE, ge=1)
    eliminate: bool = True
    buffer_cap_s: float = Field(default=DEFAULT_BUFFER_CAP_S, gt=0)

    judge: JudgeSettings = Field(default_factory=JudgeSettings)

    baselines: list[str] = Field(default_factory=lambda: ["bba", "robustmpc"])
    baseline: str = "bba"
    metric: QoeMetric = QoeMetric.lin

    openai_base_url: str | None = None
    anthropic_base_url: str | None = None

    @model_validator(mode="before")
    @classmethod
    def reject_credentials(cls, data: object) -> object:
        """API keys belong in the environment, never in a config file."""
        if isinstance(data, dict):
            keys = sorted(str(key) for key in data if str(key).lower().endswith("_api_key"))
            if keys:
                raise ValueError(
                    f"{', '.join(keys)} must not be set in the config; export it as an environment variable instead",
                )
        return data

    @field_validator("teacher")
    @classmethod
    def validate_teacher(cls, value: str) -> str:
        """The teacher must be a policy the registry can build."""
        if not is_known_policy_name(value):
            raise ValueError(f"unknown teacher policy {value!r}")
        return value

    @field_validator("baselines")
    @classmethod
    def validate_baselines(cls, value: list[str]) -> list[str]:
        """Every baseline must be a policy the registry can build."""
        unknown = [name for name in value if not is_known_policy_name(name)]
        if unknown:
            raise ValueError(f"unknown baseline policies {unknown}")
        return value

    @field_validator("train_traces", "test_traces")
    @classmethod
    def validate_trace_dir(cls, value: Path | None) -> Path | None:
        """Trace directories must exist."""
        if value is not None and not value.is_dir():
            raise ValueError(f"trace directory {value} does not exist")
        return value

    @field_validator("manifest_path")
    @classmethod
    def validate_manifest_path(cls, value: Path | None) -> Path | None:
        """The manifest file must exist."""
        if value is not None and not value.is_file():
            raise ValueError(f"manifest {value} does not exist")
        return value

    @model_validator(mode="after")
    def adjust_settings(self) -> PipelineConfig:
        """Fix up combinations that are inconsistent but have an obvious meaning.

        Returns:
            PipelineConfig: The config with the adjusted values.
        """
        if self.judge.self_consistency > 1 and not self.judge.uses_llm:
            self.judge.self_consistency = 1
            logger.warning("self_consistency has been set to 1 because no LLM judge backend is configured.")

        if self.instances > self.rashomon_cap:
            self.instances = self.rashomon_cap
            logger.warning(f"instances has been clamped to rashomon_cap ({self.rashomon_cap}).")

        if self.baseline not in self.baselines:
            self.baselines = [*self.baselines, self.baseline]
            logger.warning(f"The improvement baseline {self.baseline!r} has been added to the baselines.")
        return self

    def stage_params(self) -> dict[str, object]:
        """Settings that influence stage outputs, keyed by field name, in a JSON-friendly form."""
        return self.model_dump(
            mode="json",
            exclude={"output_dir", "openai_base_url", "anthropic_base_url"},
        )

    def load_env_vars(self) -> None:
        """Export the endpoint overrides unless the environment already sets them."""
        for value, variable in (
            (self.openai_base_url, "OPENAI_BASE_URL"),
            (self.anthropic_base_url, "ANTHROPIC_BASE_URL"),
        ):
            if value is None:
                continue
            if os.getenv(variable):
                logger.warning(f"{variable} environment variable already set. It overrides the config file value.")
                continue
            os.environ[variable] = value

    def save(self, file_path: str | Path) -> None:
        """Save the config model to a YAML file.

        Args:
            file_path (str | Path): The path to the file to save the config model to.
        """
        if self._yaml_loader is None:
            self._yaml_loader = YAML()

        with open(file_path, "w", encoding="utf-8") as f:
            self._yaml_loader.dump(self.model_dump(mode="json", by_alias=True, exclude_none=True), f)


# Dynamically add descriptions to the fields of the model
for field_name, field in PipelineConfig.model_fields.items():
    if field_name in PIPELINE_CONFIG_FIELD_DESCRIPTIONS:
        field.description = PIPELINE_CONFIG_FIELD_DESCRIPTIONS[field_name]
