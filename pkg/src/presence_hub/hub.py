"""The central server core, independent of any transport.

All state mutations funnel through one lock (the serialized event order);
broadcasts fan out from inside that order so every subscriber observes the
identical frame sequence. Subscribers are isolated behind bounded queues: a
slow consumer is dropped rather than back-pressuring the event queue.
"""

from __future__ import annotations

import logging
import queue
import threading
from collections import deque
from datetime import datetime, timedelta
from typing import Any, Mapping

from presence_hub.clock import SystemClock, VirtualClock
from presence_hub.config import DeploymentConfig
from presence_hub.eventlog import EventLog
from presence_hub.fusion import EvidenceStore, admit_evidence, diff_states, fuse, sweep
from presence_hub.model import (
    AggregatorKind,
    Category,
    Evidence,
    LogEvent,
    LogEventKind,
    OptInConfig,
    PresenceState,
    StatusMessage,
    UnknownUser,
    format_ts,
)

logger = logging.getLogger(__name__)

FEED_RETENTION = 500
SNAPSHOT_FEED_ENTRIES = 50
SUBSCRIBER_BUFFER = 1000

PRESENCE_SENTENCES = {
    Category.OFFICE_WITH_VISITOR: "In the office with a visitor",
    Category.OFFICE: "In the office",
    Category.BUILDING: "In the building",
    Category.REMOTE_ACTIVE: "Connected remotely, at the computer",
    Category.REMOTE_IDLE: "Connected remotely, away from the computer",
    Category.ONLINE_ONLY: "Signed in to IM only",
    Category.OUT_OF_OFFICE: "Out of office",
    Category.UNKNOWN: "No recent information",
}


class Subscription:
    """One dashboard stream: a bounded frame queue plus liveness flag."""

    def __init__(self) -> None:
        self.frames: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_BUFFER)
        self.dead = False

    def wake(self) -> None:
        """Unblock a writer waiting on the queue so it can notice `dead`."""
        try:
            self.frames.put_nowait(None)
        except queue.Full:
            pass


class PresenceHub:
    def __init__(self, config: DeploymentConfig, clock=None):
        self.config = config
        if clock is not None:
            self.clock = clock
        elif config.clock_mode == "virtual":
            self.clock = VirtualClock(config.virtual_start)
        else:
            self.clock = SystemClock()

        self.roster: dict[str, Any] = {u.user_id: u for u in config.users}
        self._prefs: dict[str, OptInConfig] = {
            uid: config.optin_for(uid) for uid in self.roster
        }
        self._store = EvidenceStore()
        self._policy = config.policy
        self._published: dict[str, PresenceState] = {}
        self._feed: deque[StatusMessage] = deque(maxlen=FEED_RETENTION)
        self._visible: dict[str, StatusMessage] = {}
        self._last_post_at: dict[str, datetime] = {}
        self._subs: list[Subscription] = []
        self._log = EventLog(config.log_file)
        self._mu = threading.RLock()

        now = self.clock.now()
        self._published = {uid: self._fuse_user(uid, now) for uid in self.roster}

    # -- helpers (call with the lock held) ------------------------------------

    def _fuse_user(self, user_id: str, now: datetime) -> PresenceState:
        return fuse(self._store, user_id, now, self._policy, self._prefs[user_id])

    def _require_user(self, user_id: str) -> None:
        if user_id not in self.roster:
            raise UnknownUser(user_id)

    def _refresh_all(self, now: datetime) -> None:
        """Re-fuse every user and broadcast one delta frame for the changes."""
        new = {uid: self._fuse_user(uid, now) for uid in self.roster}
        changes = diff_states(self._published, new)
        if not changes:
            return
        self._published = new
        self._broadcast("state_delta", {
            "at": format_ts(now),
            "changes": [c.to_json() for c in changes],
        })

    def _broadcast(self, kind: str, payload: Mapping[str, Any]) -> None:
        for sub in list(self._subs):
            try:
                sub.frames.put_nowait((kind, payload))
            except queue.Full:
                # Slow subscriber: drop it rather than stalling the event order.
                sub.dead = True
                self._subs.remove(sub)
                logger.warning("dropping slow stream subscriber (buffer full)")

    # -- mutations -------------------------------------------------------------

    def submit_evidence(self, doc: Mapping[str, Any]) -> tuple[Evidence, PresenceState]:
        """Admit one evidence document; returns it with the resulting state.

        Raises UnknownUser, MalformedEvidence, FutureTimestamp, OptInDisabled.
        """
        ev = Evidence.from_json(doc)
        with self._mu:
            self._require_user(ev.user_id)
            if isinstance(self.clock, VirtualClock):
                self.clock.advance_to(ev.observed_at)
            now = self.clock.now()
            admit_evidence(self._store, ev, self._prefs[ev.user_id], now)
            self._refresh_all(now)
            return ev, self._published[ev.user_id]

    def post_status(self, user_id: str, text: str) -> StatusMessage:
        if not isinstance(text, str):
            raise ValueError("status text must be a string")
        with self._mu:
            self._require_user(user_id)
            now = self.clock.now()
            last = self._last_post_at.get(user_id)
            if last is not None and now <= last:
                now = last + timedelta(milliseconds=1)
            msg = StatusMessage(user_id=user_id, text=text, posted_at=now)
            msg.validate()
            self._last_post_at[user_id] = now
            self._feed.append(msg)
            self._visible[user_id] = msg
            self._log.append(LogEvent(at=now, user_id=user_id,
                                      kind=LogEventKind.STATUS_POST,
                                      detail={"text": text}))
            self._broadcast("feed", msg.to_json())
            return msg

    def update_prefs(self, doc: Mapping[str, Any]) -> bool:
        """Replace a user's opt-in config atomically. Disabling a kind purges
        its retained evidence; the purge is destructive (re-enabling does not
        bring it back). Returns False for a no-op update."""
        optin = OptInConfig.from_json(doc)
        with self._mu:
            self._require_user(optin.user_id)
            old = self._prefs[optin.user_id]
            if old == optin:
                return False
            self._prefs[optin.user_id] = optin
            for kind in AggregatorKind:
                if old.enabled.get(kind, False) and not optin.enabled[kind]:
                    self._store.purge_kind(optin.user_id, kind)
            now = self.clock.now()
            self._log.append(LogEvent(at=now, user_id=optin.user_id,
                                      kind=LogEventKind.PREF_CHANGE,
                                      detail={
                                          "enabled": {k.value: optin.enabled[k] for k in AggregatorKind},
                                          "show_location": optin.show_location,
                                      }))
            self._refresh_all(now)
            return True

    def record_session_event(self, user_id: str, kind: str) -> LogEvent:
        try:
            log_kind = {
                "open": LogEventKind.DASHBOARD_OPEN,
                "close": LogEventKind.DASHBOARD_CLOSE,
            }[kind]
        except KeyError:
            raise ValueError(f"session event kind must be open|close, got {kind!r}") from None
        with self._mu:
            self._require_user(user_id)
            return self._log.append(LogEvent(at=self.clock.now(), user_id=user_id,
                                             kind=log_kind, detail={}))

    def sweep_tick(self) -> int:
        """Expire stale evidence and broadcast any resulting generalization."""
        with self._mu:
            now = self.clock.now()
            removed = sweep(self._store, now, self._policy)
            self._refresh_all(now)
            return removed

    # -- reads -----------------------------------------------------------------

    def state_map(self) -> dict[str, PresenceState]:
        """The last published (streamed) state per user."""
        with self._mu:
            return dict(self._published)

    def prefs_for(self, user_id: str) -> OptInConfig:
        with self._mu:
            self._require_user(user_id)
            return self._prefs[user_id]

    def allowlist(self, kind: AggregatorKind) -> list[str]:
        with self._mu:
            return sorted(
                uid for uid, optin in self._prefs.items() if optin.enabled.get(kind, False)
            )

    def card(self, user_id: str) -> dict:
        """Business-card view: profile, state, sentence, status, channels."""
        with self._mu:
            self._require_user(user_id)
            profile = self.roster[user_id]
            state = self._published[user_id]
            status = self._visible.get(user_id)
            return {
                "user_id": profile.user_id,
                "display_name": profile.display_name,
                "photo_ref": profile.photo_ref,
                "email": profile.email,
                "state": state.to_json(),
                "presence_sentence": PRESENCE_SENTENCES[state.category],
                "status": status.to_json() if status else None,
                "im_channels": [
                    {"protocol": p.value, "handle": h}
                    for p, h in sorted(profile.im_handles.items(), key=lambda kv: kv[0].value)
                ],
                "location": state.location_label,
            }

    def roster_json(self) -> list[dict]:
        return [self.roster[uid].to_json() for uid in sorted(self.roster)]

    # -- subscriptions -----------------------------------------------------------

    def subscribe(self) -> Subscription:
        """Register a stream subscriber; its first frame is a full snapshot."""
        with self._mu:
            sub = Subscription()
            snapshot = {
                "at": format_ts(self.clock.now()),
                "states": {uid: self._published[uid].to_json() for uid in sorted(self._published)},
                "feed": [m.to_json() for m in list(self._feed)[-SNAPSHOT_FEED_ENTRIES:]],
            }
            sub.frames.put_nowait(("snapshot", snapshot))
            self._subs.append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._mu:
            sub.dead = True
            sub.wake()
            if sub in self._subs:
                self._subs.remove(sub)

    def subscriber_count(self) -> int:
        with self._mu:
            return len(self._subs)

    def close(self) -> None:
        with self._mu:
            for sub in self._subs:
                sub.dead = True
                sub.wake()
            self._subs.clear()
            self._log.close()
