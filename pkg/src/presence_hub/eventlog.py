"""Append-only NDJSON instrumentation log."""

from __future__ import annotations

import json
import threading
from datetime import datetime
from pathlib import Path
from typing import Iterator, Optional, Union

from presence_hub.model import LogEvent


class EventLog:
    """Appends LogEvent records as NDJSON lines, one flush per record.

    Timestamps are clamped to be monotone non-decreasing within the file.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._mu = threading.Lock()
        self._last_at: Optional[datetime] = None

    def append(self, event: LogEvent) -> LogEvent:
        with self._mu:
            if self._last_at is not None and event.at < self._last_at:
                event = LogEvent(at=self._last_at, user_id=event.user_id,
                                 kind=event.kind, detail=event.detail)
            self._last_at = event.at
            self._fh.write(json.dumps(event.to_json(), separators=(",", ":")) + "\n")
            self._fh.flush()
        return event

    def close(self) -> None:
        with self._mu:
            self._fh.close()


def iter_log(path: Union[str, Path]) -> Iterator[LogEvent]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield LogEvent.from_json(json.loads(line))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad log record: {exc}") from None


def read_log(path: Union[str, Path]) -> list[LogEvent]:
    return list(iter_log(path))
