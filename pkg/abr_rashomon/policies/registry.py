"""Policy lookup by the names used on the command line and in pipeline configs."""

from __future__ import annotations

from abr_rashomon.errors import PolicyError
from abr_rashomon.policies.base import AbrPolicy, ConstantPolicy
from abr_rashomon.policies.bba import BbaPolicy
from abr_rashomon.policies.mpc import MpcConfig, MpcPolicy
from abr_rashomon.policies.tree_policy import TreePolicy

BUILTIN_POLICY_NAMES = ("bba", "robustmpc", "mpc")
"""Names accepted without a parameter; `constant:<level>` and `tree:<path>` are also accepted."""


def is_known_policy_name(name: str) -> bool:
    """Whether `name` has a valid shape, without loading any files."""
    if name in BUILTIN_POLICY_NAMES:
        return True
    prefix, _, argument = name.partition(":")
    if prefix == "constant":
        return argument.isdigit()
    return prefix == "tree" and bool(argument)


def make_policy(name: str) -> AbrPolicy:
    """Build a policy from its name.

    Raises:
        PolicyError: On an unknown name or an unloadable tree file.
    """
    if name == "bba":
        return BbaPolicy()
    if name == "robustmpc":
        return MpcPolicy(MpcConfig(robust=True))
    if name == "mpc":
        return MpcPolicy(MpcConfig(robust=False))

    prefix, _, argument = name.partition(":")
    if prefix == "constant" and argument.isdigit():
        return ConstantPolicy(int(argument))
    if prefix == "tree" and argument:
        try:
            return TreePolicy.from_file(argument)
        except (OSError, ValueError) as e:
            raise PolicyError(f"could not load tree policy {argument}: {e}") from e
    raise PolicyError(f"unknown policy {name!r}; expected bba, robustmpc, mpc, constant:<level> or tree:<path>")
