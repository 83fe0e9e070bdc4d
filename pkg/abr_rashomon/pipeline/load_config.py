"""Contains methods for loading the config file."""

from __future__ import annotations

import json
import os
import re
from enum import auto
from pathlib import Path

from loguru import logger
from ruamel.yaml import YAML
from strenum import StrEnum

from abr_rashomon.consts import ABR_RASHOMON_PREFIX
from abr_rashomon.errors import UnsupportedConfigFormat
from abr_rashomon.pipeline.data_model import JudgeSettings, PipelineConfig

NESTED_SEPARATOR = "__"
"""Separates a nested field in an environment variable name, e.g. `ABR_RASHOMON_JUDGE__BACKENDS`."""


class ConfigFormat(StrEnum):
    """The format of the config file."""

    yaml = auto()
    json = auto()


def _convert_env_value(attr_name: str, value: str) -> object:
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    if any(delimiter in value for delimiter in ["[", ",", ";"]):
        if "[" in value and "]" not in value:
            raise ValueError(f"Invalid list format for {attr_name}. Missing closing bracket.")
        value_as_list = re.split(r"[\[\],;]", value.strip().strip("[]"))
        converted = [item.strip().strip("'").strip('"') for item in value_as_list if item.strip()]
        logger.debug(f"Converted {attr_name} to list: {converted} from {value}")
        return converted
    return value


def _format_env_value(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, list):
        return "[" + ",".join(str(item) for item in value) + "]"
    return str(value)


class PipelineConfigLoader:
    """Contains methods for loading the config file."""

    @staticmethod
    def _infer_format(file_path: str | Path) -> ConfigFormat:
        """Infer the config file format from the file extension.

        Args:
            file_path (str | Path): The path to the config file.

        Returns:
            ConfigFormat: The config file format.

        Raises:
            UnsupportedConfigFormat: If the config file format is not supported.
        """
        file_path = Path(file_path)

        if file_path.suffix in (".yaml", ".yml"):
            return ConfigFormat.yaml

        if file_path.suffix == ".json":
            return ConfigFormat.json

        raise UnsupportedConfigFormat(file_path, file_path.suffix)

    @staticmethod
    def load(file_path: str | Path, *, file_format: ConfigFormat | None = None) -> PipelineConfig:
        """Load the config file and validate it.

        Args:
            file_path (str | Path): The path to the config file.
            file_format (ConfigFormat | None, optional): The config file format. Defaults to None. \
            The file format will be inferred from the file extension if not provided.

        Returns:
            PipelineConfig: The validated config.

        Raises:
            ValidationError: If the config file is invalid.
            UnsupportedConfigFormat: If the config file format is not supported.
        """
        file_path = Path(file_path)
        if not file_format:
            file_format = PipelineConfigLoader._infer_format(file_path)

        if file_format == ConfigFormat.yaml:
            yaml = YAML()
            with open(file_path, encoding="utf-8") as f:
                config = yaml.load(f)
            pipeline_config = PipelineConfig.model_validate(config or {})
            pipeline_config._yaml_loader = yaml
            return pipeline_config

        if file_format == ConfigFormat.json:
            with open(file_path, encoding="utf-8") as f:
                config = json.load(f)
            return PipelineConfig.model_validate(config)

        raise UnsupportedConfigFormat(file_path, file_format)

    @staticmethod
    def load_from_env_vars() -> PipelineConfig:
        """Checks for ABR_RASHOMON_* format environment variables and loads the config from them."""
        config: dict[str, object] = {}
        nested: dict[str, dict[str, object]] = {}

        for key, value in os.environ.items():
            if not key.startswith(ABR_RASHOMON_PREFIX):
                continue
            # Converts the env var name to the attr name found in the PipelineConfig model
            attr_name = key[len(ABR_RASHOMON_PREFIX) :].lower()
            converted = _convert_env_value(attr_name, value)
            if NESTED_SEPARATOR in attr_name:
                parent, _, child = attr_name.partition(NESTED_SEPARATOR)
                nested.setdefault(parent, {})[child] = converted
            else:
                config[attr_name] = converted

        for parent, children in nested.items():
            config[parent] = children

        pipeline_config = PipelineConfig.model_validate(config)
        for set_field in sorted(pipeline_config.model_fields_set):
            logger.info(f"Config `{set_field}` was set by an environment variable.")
        return pipeline_config

    @staticmethod
    def write_config_as_dot_env_file(pipeline_config: PipelineConfig, file_path: str | Path) -> None:
        """Write the config to a .env file.

        Only fields that were set explicitly and differ from their default are written.

        Args:
            pipeline_config (PipelineConfig): The config to write to the .env file.
            file_path (str | Path): The path to the .env file to write the config to.
        """
        file_path = Path(file_path)

        with open(file_path, "w", encoding="utf-8") as f:
            for field_name, field_info in PipelineConfig.model_fields.items():
                if field_name not in pipeline_config.model_fields_set:
                    continue
                value = getattr(pipeline_config, field_name)
                if isinstance(value, JudgeSettings):
                    for judge_field in sorted(value.model_fields_set):
                        judge_value = getattr(value, judge_field)
                        f.write(
                            f"{ABR_RASHOMON_PREFIX}{field_name.upper()}{NESTED_SEPARATOR}{judge_field.upper()}"
                            f"={_format_env_value(judge_value)}\n",
                        )
                    continue
                if value == field_info.default:
                    continue
                env_name = (field_info.alias or field_name).upper()
                f.write(f"{ABR_RASHOMON_PREFIX}{env_name}={_format_env_value(value)}\n")
