"""Injectable clock sources.

One clock instance drives freshness checks, posted_at assignment, and log
timestamps for a whole deployment, so tests and simulations stay
deterministic.
"""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone

from presence_hub.model import to_utc_ms


class SystemClock:
    """Wall clock, UTC, millisecond precision."""

    def now(self) -> datetime:
        return to_utc_ms(datetime.now(timezone.utc))


class ManualClock:
    """Test clock: stands still until set or advanced."""

    def __init__(self, start: datetime):
        self._now = to_utc_ms(start)

    def now(self) -> datetime:
        return self._now

    def set(self, at: datetime) -> None:
        self._now = to_utc_ms(at)

    def advance(self, delta: timedelta) -> None:
        self._now = self._now + delta


class VirtualClock:
    """Event-driven clock for scenario replay: time is the maximum evidence
    timestamp seen so far, never earlier than the declared start.

    Replaying the same event sequence therefore produces the same readings
    regardless of wall-clock pacing.
    """

    def __init__(self, start: datetime):
        self._now = to_utc_ms(start)
        self._mu = threading.Lock()

    def now(self) -> datetime:
        with self._mu:
            return self._now

    def advance_to(self, at: datetime) -> None:
        at = to_utc_ms(at)
        with self._mu:
            if at > self._now:
                self._now = at
