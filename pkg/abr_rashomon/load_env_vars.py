"""Contains the functions to load the environment variables from the config file."""

import os
import pathlib

from dotenv import load_dotenv
from loguru import logger
from ruamel.yaml import YAML

from abr_rashomon.consts import PIPELINE_CONFIG_FILENAME

load_dotenv()

ENDPOINT_SETTINGS = {
    "openai_base_url": "OPENAI_BASE_URL",
    "anthropic_base_url": "ANTHROPIC_BASE_URL",
}
"""Config keys that are copied into the environment, and the variable each one sets."""


def load_env_vars_from_config(config_file: str | pathlib.Path = PIPELINE_CONFIG_FILENAME) -> None:
    """Copy the endpoint overrides of a YAML config into the environment, keeping variables that are already set.

    Raises:
        FileNotFoundError: If the config file does not exist.
        ValueError: If the config contains an API key.
    """
    config_path = pathlib.Path(config_file)
    template_file = pathlib.Path("pipelineConfig_template.yaml")

    if not config_path.exists():
        if template_file.exists():
            raise FileNotFoundError(f"{template_file} found. Please set variables and rename it to {config_path}.")
        raise FileNotFoundError(f"{config_path} not found")

    yaml = YAML()
    with open(config_path, encoding="utf-8") as f:
        config = yaml.load(f) or {}

    key_fields = [str(key) for key in config if str(key).lower().endswith("_api_key")]
    if key_fields:
        raise ValueError(f"{', '.join(key_fields)} found in {config_path}; API keys belong in the environment")

    for setting, variable in ENDPOINT_SETTINGS.items():
        if not config.get(setting):
            continue
        if os.getenv(variable) is not None:
            logger.warning(
                f"{variable} environment variable already set. "
                f"This will override the value for `{setting}` in the config file.",
            )
            continue
        os.environ[variable] = str(config[setting])
        logger.debug(f"Set {variable} from `{setting}` in {config_path}")


if __name__ == "__main__":
    load_env_vars_from_config()
    logger.info("Environment variables loaded.")
