"""Distill adaptive-bitrate policies into comprehensible sparse decision trees."""

from dotenv import load_dotenv

load_dotenv()

from pathlib import Path  # noqa: E402

PROMPTS_FOLDER_PATH = Path(__file__).parent / "judge" / "prompts"

__version__ = "0.4.0"
