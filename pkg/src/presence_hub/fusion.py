"""Evidence retention and presence fusion.

The engine keeps at most one retained observation per (user, kind) — and per
(user, protocol) for IM — and fuses them by degrading resolution: it reports
the most specific state the fresh evidence directly supports and never infers
beyond it. Rule chain, most specific first:

  1. fresh occupant+visitor motion        -> OfficeWithVisitor
  2. fresh occupant motion                -> Office
  3. fresh sighting, or internal+active   -> Building
  4. fresh VPN session, active input      -> RemoteActive
  5. fresh VPN session, idle              -> RemoteIdle
  6. fresh IM merge Online/Away           -> OnlineOnly
  7. calendar out-of-office event now     -> OutOfOffice
  8. otherwise                            -> Unknown

Mutations (admit, purge, sweep) must be applied through one serialized event
sequence per deployment; the hub provides that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Any, Mapping, Optional

from presence_hub.model import (
    AggregatorKind,
    CalendarNow,
    CalendarPayload,
    Category,
    ComputerActivityPayload,
    DeviceSightingPayload,
    Evidence,
    FUTURE_TOLERANCE,
    FutureTimestamp,
    ImStatus,
    NetworkClass,
    OfficeMotionPayload,
    OptInConfig,
    OptInDisabled,
    Overlay,
    PresenceState,
    Protocol,
    calendar_now,
    im_merge,
)


@dataclass(frozen=True)
class FreshnessPolicy:
    """TTLs bounding how long each observation counts as current evidence.

    Boundaries are inclusive: age == TTL is still fresh. Calendar payloads
    have no TTL; they are evaluated by interval containment instead.
    """
    motion_ttl_s: float = 300.0
    sighting_ttl_s: float = 600.0
    input_active_window_s: float = 300.0
    computer_session_ttl_s: float = 600.0
    im_ttl_s: float = 120.0

    def validate(self) -> None:
        for name in (
            "motion_ttl_s",
            "sighting_ttl_s",
            "input_active_window_s",
            "computer_session_ttl_s",
            "im_ttl_s",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"freshness policy {name} must be > 0")

    def ttl_for(self, kind: AggregatorKind) -> Optional[float]:
        return {
            AggregatorKind.OFFICE_VISION: self.motion_ttl_s,
            AggregatorKind.DEVICE_PRESENCE: self.sighting_ttl_s,
            AggregatorKind.COMPUTER_CLIENT: self.computer_session_ttl_s,
            AggregatorKind.CALENDAR: None,
            AggregatorKind.IM_PRESENCE: self.im_ttl_s,
        }[kind]

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "FreshnessPolicy":
        policy = cls(**{k: float(v) for k, v in doc.items()})
        policy.validate()
        return policy


def is_fresh(kind: AggregatorKind, observed_at: datetime, now: datetime, policy: FreshnessPolicy) -> bool:
    """Inclusive-boundary freshness: age <= TTL. Calendar is always 'fresh'."""
    ttl = policy.ttl_for(kind)
    if ttl is None:
        return True
    return now - observed_at <= timedelta(seconds=ttl)


class EvidenceStore:
    """Latest retained evidence per (user, kind), per (user, protocol) for IM.

    Never holds evidence for a disabled (user, kind): admission rejects it and
    a preference change purges it.
    """

    def __init__(self) -> None:
        self._slots: dict[tuple[str, AggregatorKind], tuple[Any, datetime]] = {}
        self._im: dict[str, dict[Protocol, tuple[ImStatus, datetime]]] = {}

    # -- reads ---------------------------------------------------------------

    def motion(self, user_id: str) -> Optional[tuple[OfficeMotionPayload, datetime]]:
        return self._slots.get((user_id, AggregatorKind.OFFICE_VISION))

    def sighting(self, user_id: str) -> Optional[tuple[DeviceSightingPayload, datetime]]:
        return self._slots.get((user_id, AggregatorKind.DEVICE_PRESENCE))

    def computer(self, user_id: str) -> Optional[tuple[ComputerActivityPayload, datetime]]:
        return self._slots.get((user_id, AggregatorKind.COMPUTER_CLIENT))

    def calendar(self, user_id: str) -> Optional[tuple[CalendarPayload, datetime]]:
        return self._slots.get((user_id, AggregatorKind.CALENDAR))

    def im_statuses(self, user_id: str) -> dict[Protocol, tuple[ImStatus, datetime]]:
        return dict(self._im.get(user_id, {}))

    def users(self) -> set[str]:
        return {u for u, _ in self._slots} | set(self._im)

    def has_kind(self, user_id: str, kind: AggregatorKind) -> bool:
        if kind is AggregatorKind.IM_PRESENCE:
            return bool(self._im.get(user_id))
        return (user_id, kind) in self._slots

    def copy(self) -> "EvidenceStore":
        dup = EvidenceStore()
        dup._slots = dict(self._slots)
        dup._im = {u: dict(m) for u, m in self._im.items()}
        return dup

    # -- mutations (serialize externally) -------------------------------------

    def _store(self, ev: Evidence) -> bool:
        """Newer-or-equal observed_at replaces; older is a stale replay, ignored."""
        if ev.kind is AggregatorKind.IM_PRESENCE:
            protocols = self._im.setdefault(ev.user_id, {})
            existing = protocols.get(ev.payload.protocol)
            if existing is not None and ev.observed_at < existing[1]:
                return False
            protocols[ev.payload.protocol] = (ev.payload.status, ev.observed_at)
            return True
        key = (ev.user_id, ev.kind)
        existing = self._slots.get(key)
        if existing is not None and ev.observed_at < existing[1]:
            return False
        self._slots[key] = (ev.payload, ev.observed_at)
        return True

    def purge_kind(self, user_id: str, kind: AggregatorKind) -> bool:
        """Destructively drop retained evidence of one kind; it does not return."""
        if kind is AggregatorKind.IM_PRESENCE:
            return bool(self._im.pop(user_id, None))
        return self._slots.pop((user_id, kind), None) is not None


def admit_evidence(
    store: EvidenceStore,
    ev: Evidence,
    optin: OptInConfig,
    now: datetime,
) -> bool:
    """Validate and retain one observation.

    Returns True if the slot was updated, False for a stale replay. Raises
    OptInDisabled / MalformedEvidence / FutureTimestamp; on any raise the
    store is unchanged.
    """
    if not optin.enabled.get(ev.kind, False):
        raise OptInDisabled(f"user {ev.user_id!r} has not enabled {ev.kind.value}")
    ev.validate()
    if ev.observed_at > now + FUTURE_TOLERANCE:
        raise FutureTimestamp(
            f"evidence observed_at {ev.observed_at.isoformat()} is beyond the future tolerance"
        )
    return store._store(ev)


def fuse(
    store: EvidenceStore,
    user_id: str,
    now: datetime,
    policy: FreshnessPolicy,
    optin: OptInConfig,
) -> PresenceState:
    """Fused presence for one user at `now`: first matching rule wins."""
    fresh_motion: Optional[OfficeMotionPayload] = None
    slot = store.motion(user_id)
    if slot and is_fresh(AggregatorKind.OFFICE_VISION, slot[1], now, policy):
        fresh_motion = slot[0]

    fresh_sighting: Optional[DeviceSightingPayload] = None
    slot = store.sighting(user_id)
    if slot and is_fresh(AggregatorKind.DEVICE_PRESENCE, slot[1], now, policy):
        fresh_sighting = slot[0]

    fresh_session: Optional[ComputerActivityPayload] = None
    slot = store.computer(user_id)
    if slot and is_fresh(AggregatorKind.COMPUTER_CLIENT, slot[1], now, policy):
        fresh_session = slot[0]
    session_active = (
        fresh_session is not None
        and now - fresh_session.last_input_at <= timedelta(seconds=policy.input_active_window_s)
    )

    fresh_im = {
        proto: status
        for proto, (status, at) in store.im_statuses(user_id).items()
        if is_fresh(AggregatorKind.IM_PRESENCE, at, now, policy)
    }

    slot = store.calendar(user_id)
    flags = calendar_now(slot[0].events, now) if slot else CalendarNow(False, False)

    if fresh_motion and fresh_motion.occupant_motion and fresh_motion.visitor_motion:
        category = Category.OFFICE_WITH_VISITOR
    elif fresh_motion and fresh_motion.occupant_motion:
        category = Category.OFFICE
    elif fresh_sighting or (
        fresh_session and fresh_session.network_class is NetworkClass.INTERNAL and session_active
    ):
        category = Category.BUILDING
    elif fresh_session and fresh_session.network_class is NetworkClass.VPN and session_active:
        category = Category.REMOTE_ACTIVE
    elif fresh_session and fresh_session.network_class is NetworkClass.VPN:
        category = Category.REMOTE_IDLE
    elif im_merge(fresh_im) in (ImStatus.ONLINE, ImStatus.AWAY):
        category = Category.ONLINE_ONLY
    elif flags.out_of_office:
        category = Category.OUT_OF_OFFICE
    else:
        category = Category.UNKNOWN

    overlays = set()
    if category is Category.OFFICE_WITH_VISITOR:
        overlays.add(Overlay.VISITOR_ICON)
    if flags.current_meeting and optin.enabled.get(AggregatorKind.CALENDAR, False):
        overlays.add(Overlay.CALENDAR_ICON)

    location = None
    if (
        fresh_sighting is not None
        and optin.show_location
        and optin.enabled.get(AggregatorKind.DEVICE_PRESENCE, False)
    ):
        location = fresh_sighting.location_label

    return PresenceState(category=category, overlays=frozenset(overlays), location_label=location)


def sweep(store: EvidenceStore, now: datetime, policy: FreshnessPolicy) -> int:
    """Drop entries strictly older than their TTL. Fusion-invariant:
    fuse(sweep(s)) == fuse(s). Returns the number of entries removed."""
    removed = 0
    for key in list(store._slots):
        _, kind = key
        _, at = store._slots[key]
        ttl = policy.ttl_for(kind)
        if ttl is not None and now - at > timedelta(seconds=ttl):
            del store._slots[key]
            removed += 1
    for user_id in list(store._im):
        protocols = store._im[user_id]
        for proto in list(protocols):
            _, at = protocols[proto]
            if now - at > timedelta(seconds=policy.im_ttl_s):
                del protocols[proto]
                removed += 1
        if not protocols:
            del store._im[user_id]
    return removed


@dataclass(frozen=True)
class StateChange:
    user_id: str
    state: PresenceState

    def to_json(self) -> dict:
        return {"user_id": self.user_id, "state": self.state.to_json()}


def diff_states(
    old: Mapping[str, PresenceState],
    new: Mapping[str, PresenceState],
) -> list[StateChange]:
    """Per-user changes between two state maps over the same roster."""
    if set(old) != set(new):
        raise ValueError("diff_states requires identical user key sets")
    return [StateChange(u, new[u]) for u in sorted(new) if new[u] != old[u]]
