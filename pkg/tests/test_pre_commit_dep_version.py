from pathlib import Path

from ruamel.yaml import YAML

PRECOMMIT_FILE_PATH = Path(__file__).parent.parent / ".pre-commit-config.yaml"


def test_pre_commit_dep_versions(
    dependency_versions: dict[str, str],
    tracked_dependencies: list[str],
) -> None:
    """Check that the versions of tracked deps. in .pre-commit-config.yaml match the versions in requirements.txt.

    See the `tracked_dependencies` fixture for the dependencies tracked.

    Args:
        dependency_versions (dict[str, str]): The versions of the dependencies in requirements.txt.
        tracked_dependencies (list[str]): The dependencies to track.
    """
    yaml = YAML(typ="safe")
    with open(PRECOMMIT_FILE_PATH, encoding="utf-8") as f:
        precommit_config = yaml.load(f)

    versions: dict[str, str | None] = {dep: None for dep in tracked_dependencies}

    for repo in precommit_config["repos"]:
        if "mypy" not in repo["repo"]:
            continue
        for dep in repo["hooks"][0]["additional_dependencies"]:
            for pin in ("==", "~=", ">="):
                if pin in dep:
                    dep_name, dep_version = dep.split(pin)
                    break
            else:
                continue
            if dep_name in versions:
                versions[dep_name] = dep_version

    assert all(
        version is not None for version in versions.values()
    ), f"Some dependencies are missing their versions.\n{versions}"

    mismatched = {dep: version for dep, version in dependency_versions.items() if versions.get(dep) != version}
    assert not mismatched, f"Not all dependency versions match.\n`.pre-commit-config.yaml: {versions}"
