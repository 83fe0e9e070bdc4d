import pathlib

# isort: off
from abr_rashomon.load_env_vars import load_env_vars_from_config

# isort: on

import argparse

from loguru import logger
from pydantic import ValidationError

from abr_rashomon.pipeline.load_config import ConfigFormat, PipelineConfigLoader


def convert_config_to_env(
    config_filename: str = "pipelineConfig.yaml",
    dot_env_filename: str = "pipelineConfig.env",
) -> None:
    """Convert the config file to an env file (suitable for use in a container or similar)."""
    if not pathlib.Path(config_filename).is_file():
        logger.error(f"File {config_filename} not found")
        return

    load_env_vars_from_config(config_filename)
    try:
        pipeline_config = PipelineConfigLoader.load(file_path=config_filename, file_format=ConfigFormat.yaml)
    except ValidationError as e:
        logger.error(f"Failed to convert config to env: {e}")
        return

    try:
        PipelineConfigLoader.write_config_as_dot_env_file(pipeline_config, dot_env_filename)
    except OSError as e:
        logger.error(f"Failed to write config to {dot_env_filename} ({type(e)}): {e}")
        return
    logger.info(f"Wrote {dot_env_filename}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Convert config to env")
    parser.add_argument(
        "--file",
        "-f",
        type=str,
        help="The file to convert",
        default="pipelineConfig.yaml",
    )
    parser.add_argument("--out", "-o", type=str, help="The .env file to write", default="pipelineConfig.env")
    args = parser.parse_args()

    convert_config_to_env(args.file, args.out)
