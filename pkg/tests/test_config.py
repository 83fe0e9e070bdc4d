import json
import os
from pathlib import Path

import pytest
from dotenv import dotenv_values
from pydantic import ValidationError

from abr_rashomon.errors import UnsupportedConfigFormat
from abr_rashomon.load_env_vars import load_env_vars_from_config
from abr_rashomon.pipeline.data_model import PipelineConfig
from abr_rashomon.pipeline.load_config import ConfigFormat, PipelineConfigLoader
from abr_rashomon.qoe import QoeMetric
from conftest import TEMPLATE_CONFIG_PATH


def test_pipeline_config_template_loads(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """The shipped template is a valid config once its trace directories exist."""
    (tmp_path / "traces" / "train").mkdir(parents=True)
    (tmp_path / "traces" / "test").mkdir(parents=True)
    monkeypatch.chdir(tmp_path)

    pipeline_config = PipelineConfigLoader.load(TEMPLATE_CONFIG_PATH)

    assert pipeline_config.teacher == "robustmpc"
    assert pipeline_config.lambda_ == 0.0005
    assert pipeline_config.judge.backends == ["heuristic"]
    assert pipeline_config.manifest_path is None
    assert pipeline_config.metric == QoeMetric.lin
    assert pipeline_config.openai_base_url is None


def test_pipeline_config_fields_have_descriptions() -> None:
    """Every user-facing field carries a description."""
    assert all(field.description for field in PipelineConfig.model_fields.values())


def test_pipeline_config_json_and_yaml_round_trip(tmp_path: Path, trace_dir: Path) -> None:
    """JSON and YAML files load into the same config."""
    json_path = tmp_path / "pipelineConfig.json"
    json_path.write_text(json.dumps({"train_traces": str(trace_dir), "lambda": 0.01, "teacher": "bba"}))

    from_json = PipelineConfigLoader.load(json_path)
    yaml_path = tmp_path / "pipelineConfig.yaml"
    from_json.save(yaml_path)
    from_yaml = PipelineConfigLoader.load(yaml_path, file_format=ConfigFormat.yaml)

    assert from_json.lambda_ == 0.01
    assert from_yaml.model_dump() == from_json.model_dump()


def test_unsupported_config_format(tmp_path: Path) -> None:
    """Only YAML and JSON are understood."""
    with pytest.raises(UnsupportedConfigFormat):
        PipelineConfigLoader.load(tmp_path / "pipelineConfig.toml")


def test_pipeline_config_rejects_api_keys(trace_dir: Path) -> None:
    """Credentials must come from the environment."""
    with pytest.raises(ValidationError, match="openai_api_key"):
        PipelineConfig.model_validate({"train_traces": str(trace_dir), "openai_api_key": "sk-test"})


@pytest.mark.parametrize(
    "overrides",
    [
        {"teacher": "pensieve"},
        {"baselines": ["bba", "oracle"]},
        {"train_traces": "does/not/exist"},
        {"manifest_path": "missing.json"},
        {"judge": {"backends": ["oracle"]}},
        {"judge": {"self_consistency": 2}},
        {"lambda": 0},
        {"unknown_setting": 1},
    ],
)
def test_pipeline_config_rejects_invalid_settings(trace_dir: Path, overrides: dict[str, object]) -> None:
    """Unknown policies, judges, missing paths and out-of-range values fail validation."""
    with pytest.raises(ValidationError):
        PipelineConfig.model_validate({"train_traces": str(trace_dir), **overrides})


def test_pipeline_config_adjusts_inconsistent_settings(trace_dir: Path) -> None:
    """Obvious fix-ups are applied instead of failing."""
    pipeline_config = PipelineConfig.model_validate(
        {
            "train_traces": str(trace_dir),
            "instances": 10,
            "rashomon_cap": 5,
            "baselines": ["bba"],
            "baseline": "mpc",
            "judge": {"self_consistency": 3},
        },
    )

    assert pipeline_config.instances == 5
    assert pipeline_config.baselines == ["bba", "mpc"]
    assert pipeline_config.judge.self_consistency == 1


def test_load_from_env_vars(monkeypatch: pytest.MonkeyPatch, trace_dir: Path) -> None:
    """ABR_RASHOMON_* variables fill the config, with `__` for nested fields and list syntax for lists."""
    monkeypatch.setenv("ABR_RASHOMON_TRAIN_TRACES", str(trace_dir))
    monkeypatch.setenv("ABR_RASHOMON_LAMBDA", "0.01")
    monkeypatch.setenv("ABR_RASHOMON_ELIMINATE", "false")
    monkeypatch.setenv("ABR_RASHOMON_BASELINES", "bba,mpc")
    monkeypatch.setenv("ABR_RASHOMON_JUDGE__BACKENDS", "[heuristic]")

    pipeline_config = PipelineConfigLoader.load_from_env_vars()

    assert pipeline_config.train_traces == trace_dir
    assert pipeline_config.lambda_ == 0.01
    assert pipeline_config.eliminate is False
    assert pipeline_config.baselines == ["bba", "mpc"]
    assert pipeline_config.judge.backends == ["heuristic"]


def test_load_from_env_vars_rejects_unclosed_lists(monkeypatch: pytest.MonkeyPatch, trace_dir: Path) -> None:
    """A list missing its closing bracket is an error."""
    monkeypatch.setenv("ABR_RASHOMON_TRAIN_TRACES", str(trace_dir))
    monkeypatch.setenv("ABR_RASHOMON_BASELINES", "[bba,mpc")

    with pytest.raises(ValueError, match="closing bracket"):
        PipelineConfigLoader.load_from_env_vars()


def test_dot_env_file_round_trip(tmp_path: Path, monkeypatch: pytest.MonkeyPatch, trace_dir: Path) -> None:
    """A config written as a .env file loads back from the environment unchanged."""
    pipeline_config = PipelineConfig.model_validate(
        {
            "train_traces": str(trace_dir),
            "lambda": 0.01,
            "eliminate": False,
            "baselines": ["bba", "mpc"],
            "judge": {"backends": ["heuristic"], "max_in_flight": 2},
        },
    )
    env_path = tmp_path / ".env"

    PipelineConfigLoader.write_config_as_dot_env_file(pipeline_config, env_path)
    values = dotenv_values(env_path)
    for key, value in values.items():
        assert value is not None
        monkeypatch.setenv(key, value)
    reloaded = PipelineConfigLoader.load_from_env_vars()

    assert values["ABR_RASHOMON_LAMBDA"] == "0.01"
    assert values["ABR_RASHOMON_JUDGE__MAX_IN_FLIGHT"] == "2"
    assert "ABR_RASHOMON_SEED" not in values
    assert reloaded.model_dump() == pipeline_config.model_dump()


def test_load_env_vars_from_config(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Endpoint overrides are exported unless the environment already has them."""
    monkeypatch.delenv("OPENAI_BASE_URL", raising=False)
    monkeypatch.setenv("ANTHROPIC_BASE_URL", "http://from-env")
    config_path = tmp_path / "pipelineConfig.yaml"
    config_path.write_text(
        'openai_base_url: "http://from-file"\nanthropic_base_url: "http://ignored"\n',
        encoding="utf-8",
    )

    load_env_vars_from_config(config_path)

    assert os.environ["OPENAI_BASE_URL"] == "http://from-file"
    assert os.environ["ANTHROPIC_BASE_URL"] == "http://from-env"


def test_load_env_vars_from_config_errors(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Missing files and API keys in the config are refused."""
    monkeypatch.chdir(tmp_path)
    with pytest.raises(FileNotFoundError, match="not found"):
        load_env_vars_from_config()

    (tmp_path / "pipelineConfig_template.yaml").write_text("teacher: bba\n", encoding="utf-8")
    with pytest.raises(FileNotFoundError, match="rename it"):
        load_env_vars_from_config()

    (tmp_path / "pipelineConfig.yaml").write_text('anthropic_api_key: "secret"\n', encoding="utf-8")
    with pytest.raises(ValueError, match="anthropic_api_key"):
        load_env_vars_from_config()
