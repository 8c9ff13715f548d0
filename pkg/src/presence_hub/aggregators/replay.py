"""Deterministic scenario replay.

A scenario file scripts evidence against a virtual clock:

    {"start": "<rfc3339>", "events": [{"at_offset_ms": N, "evidence": {...}}]}

Replay posts each evidence at wall time start + at_offset/speed while the
evidence keeps its declared observed_at, so speed changes pacing only. The
report carries the virtual-time state timeline built from the server's
per-event responses; replaying the same script at any speed against a
virtual-clock server yields byte-identical timelines.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Optional, Union

import requests

from presence_hub.model import Evidence, parse_ts

logger = logging.getLogger(__name__)

RETRY_ATTEMPTS = 3
RETRY_BACKOFF_S = 0.2


@dataclass(frozen=True)
class ScenarioEvent:
    at_offset: timedelta
    evidence: Evidence


@dataclass
class ScenarioScript:
    start: datetime
    events: list[ScenarioEvent]

    def validate(self) -> None:
        previous = timedelta(0)
        for i, event in enumerate(self.events):
            if event.at_offset < previous:
                raise ValueError(f"scenario events[{i}]: at_offset decreases")
            previous = event.at_offset

    @property
    def span(self) -> timedelta:
        return self.events[-1].at_offset if self.events else timedelta(0)

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioScript":
        events = [
            ScenarioEvent(
                at_offset=timedelta(milliseconds=int(e["at_offset_ms"])),
                evidence=Evidence.from_json(e["evidence"]),
            )
            for e in doc.get("events", [])
        ]
        script = cls(start=parse_ts(doc["start"]), events=events)
        script.validate()
        return script

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScenarioScript":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ReplayReport:
    sent: int = 0
    rejected: int = 0
    aborted: bool = False
    timeline: list[str] = field(default_factory=list)

    def timeline_ndjson(self) -> str:
        return "".join(line + "\n" for line in self.timeline)


def replay_scenario(
    script: ScenarioScript,
    server_url: str,
    speed: float,
    session: Optional[requests.Session] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ReplayReport:
    """Post the script in order, pacing offsets by 1/speed.

    Connection failures retry up to 3 times per event, then abort with the
    partial report. HTTP rejections (4xx) are definitive responses and count
    in `rejected`.
    """
    if speed <= 0:
        raise ValueError("replay speed must be > 0")
    session = session or requests.Session()
    report = ReplayReport()
    url = server_url.rstrip("/") + "/evidence"
    wall_start = time.monotonic()

    for event in script.events:
        target = event.at_offset.total_seconds() / speed
        delay = target - (time.monotonic() - wall_start)
        if delay > 0:
            sleep(delay)

        doc = event.evidence.to_json()
        response = None
        for attempt in range(RETRY_ATTEMPTS):
            try:
                response = session.post(url, json=doc, timeout=10.0)
                break
            except requests.ConnectionError as exc:
                logger.warning("evidence post failed (attempt %d/%d): %s",
                               attempt + 1, RETRY_ATTEMPTS, exc)
                sleep(RETRY_BACKOFF_S)
        if response is None:
            report.aborted = True
            return report

        report.sent += 1
        body = response.json()
        if response.status_code == 200:
            report.timeline.append(json.dumps(body, separators=(",", ":")))
        else:
            report.rejected += 1
            report.timeline.append(json.dumps({
                "result": "rejected",
                "error": body.get("error", f"http_{response.status_code}"),
                "user_id": doc["user_id"],
                "at": doc["observed_at"],
            }, separators=(",", ":")))
    return report
