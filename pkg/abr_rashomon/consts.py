"""Constants for the ABR Rashomon toolkit."""

PIPELINE_CONFIG_FILENAME = "pipelineConfig.yaml"

ABR_RASHOMON_PREFIX = "ABR_RASHOMON_"

DEFAULT_LADDER_KBPS = (300, 750, 1200, 1850, 2850, 4300)
DEFAULT_CHUNK_DURATION_S = 4.0
DEFAULT_N_CHUNKS = 48
DEFAULT_BUFFER_CAP_S = 60.0

HISTORY_LENGTH = 8
"""Length of the throughput and delay histories carried in the player state."""

BUFFER_NORM_S = 10.0
DELAY_NORM_S = 10.0

DEFAULT_LAMBDA = 0.0005
DEFAULT_EPSILON = 0.05
DEFAULT_MAX_DEPTH = 6
DEFAULT_DELTA = 1e-4
DEFAULT_INSTANCES = 64
DEFAULT_RASHOMON_CAP = 1_000_000
DEFAULT_MAX_THRESHOLDS_PER_FEATURE = 4

DEFAULT_MPC_HORIZON = 5
DEFAULT_MPC_HISTORY = 5
MPC_ERROR_WINDOW = 5

DEFAULT_BBA_RESERVOIR_S = 5.0
DEFAULT_BBA_CUSHION_S = 10.0

QOE_LIN_MU = 4.3
QOE_HD_MU = 8.0
QOE_HD_TABLE = {300: 1.0, 750: 2.0, 1200: 3.0, 1850: 12.0, 2850: 15.0, 4300: 20.0}

PROMPT_VERSION = 1
"""Bumped whenever a file under `judge/prompts` changes wording."""

MAX_PARSE_ATTEMPTS = 3
DEFAULT_HTTP_TIMEOUT_S = 120
DEFAULT_MAX_RETRIES = 4
DEFAULT_BACKOFF_BASE_S = 1.0
DEFAULT_MAX_IN_FLIGHT = 4

OPENAI_DEFAULT_BASE_URL = "https://api.openai.com/v1"
ANTHROPIC_DEFAULT_BASE_URL = "https://api.anthropic.com"
ANTHROPIC_API_VERSION = "2023-06-01"
