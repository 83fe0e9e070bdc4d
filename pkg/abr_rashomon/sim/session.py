"""Whole-session playback and the SessionLog CSV format."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import TYPE_CHECKING

from pydantic import BaseModel

from abr_rashomon.consts import DEFAULT_BUFFER_CAP_S
from abr_rashomon.errors import PolicyError
from abr_rashomon.media.manifest import VideoManifest
from abr_rashomon.network.trace import NetworkTrace
from abr_rashomon.sim.player import Observation, SessionRow, initial_state, observe, step

if TYPE_CHECKING:
    from abr_rashomon.policies.base import AbrPolicy

_CSV_FIELDS = list(SessionRow.model_fields)


class SessionLog(BaseModel):
    """Every chunk of one playback session."""

    trace_id: str
    manifest_id: str
    policy_name: str = ""
    rows: list[SessionRow]
    elapsed_s: float = 0.0
    """Trace time consumed by the session (downloads plus sleeps)."""

    @property
    def total_rebuffer_s(self) -> float:
        """Seconds spent stalled."""
        return sum(row.rebuffer_s for row in self.rows)

    def to_csv(self) -> str:
        """Serialize the rows as CSV with a header row; ids travel as JSON in a leading comment line."""
        buffer = io.StringIO()
        meta = {"trace_id": self.trace_id, "manifest_id": self.manifest_id, "policy": self.policy_name}
        buffer.write(f"# {json.dumps(meta)}\n")
        writer = csv.DictWriter(buffer, fieldnames=_CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({field: repr(value) if isinstance(value, float) else value for field, value in row})
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SessionLog:
        """Parse `to_csv` output."""
        lines = text.splitlines()
        meta: dict[str, str] = {}
        if lines and lines[0].startswith("#"):
            meta = json.loads(lines[0][1:])
            lines = lines[1:]

        rows = [SessionRow.model_validate(record) for record in csv.DictReader(lines)]
        return cls(
            trace_id=meta.get("trace_id", ""),
            manifest_id=meta.get("manifest_id", ""),
            policy_name=meta.get("policy", ""),
            rows=rows,
            elapsed_s=sum(row.download_time_s + row.sleep_s for row in rows),
        )

    def save(self, file_path: str | Path) -> None:
        """Write the CSV form to `file_path`."""
        Path(file_path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def load(cls, file_path: str | Path) -> SessionLog:
        """Read a CSV session log."""
        return cls.from_csv(Path(file_path).read_text(encoding="utf-8"))


def rollout(
    policy: AbrPolicy,
    trace: NetworkTrace,
    manifest: VideoManifest,
    buffer_cap_s: float = DEFAULT_BUFFER_CAP_S,
) -> tuple[SessionLog, list[Observation]]:
    """Play a whole session and also return the observation seen before each decision.

    Raises:
        PolicyError: If the policy returns a level outside the ladder.
    """
    state = initial_state()
    rows: list[SessionRow] = []
    observations: list[Observation] = []

    for _ in range(manifest.n_chunks):
        observation = observe(state, manifest)
        level = policy.decide(observation, manifest)
        if not 0 <= level < manifest.n_levels:
            raise PolicyError(f"{policy.name} returned level {level} outside [0, {manifest.n_levels})")
        observations.append(observation)
        row, state = step(state, level, trace, manifest, buffer_cap_s=buffer_cap_s)
        rows.append(row)

    log = SessionLog(
        trace_id=trace.trace_id,
        manifest_id=manifest.manifest_id,
        policy_name=policy.name,
        rows=rows,
        elapsed_s=state.elapsed_s,
    )
    return log, observations


def run_session(
    policy: AbrPolicy,
    trace: NetworkTrace,
    manifest: VideoManifest,
    buffer_cap_s: float = DEFAULT_BUFFER_CAP_S,
) -> SessionLog:
    """Play every chunk of `manifest` over `trace` with `policy` deciding each level."""
    log, _ = rollout(policy, trace, manifest, buffer_cap_s=buffer_cap_s)
    return log
