"""Independent rule-table oracle for presence fusion.

The fuzz harness and the test suite cross-check the engine against this
module. It reduces a user's retained evidence to an abstract situation tuple
using its own freshness arithmetic, then looks the category up in a table
enumerated over the entire situation space at import time. It intentionally
shares no code with the engine's rule chain; keep it that way.
"""

from __future__ import annotations

from datetime import datetime
from itertools import product

from presence_hub.model import (
    Category,
    AggregatorKind,
    ImStatus,
    NetworkClass,
    OptInConfig,
    Overlay,
    PresenceState,
    OUT_OF_OFFICE_KINDS,
)

MOTION_AXIS = ("both", "occupant", "none")
COMPUTER_AXIS = ("none", "internal_active", "internal_idle", "vpn_active", "vpn_idle")
IM_AXIS = ("online", "away", "none")


def _category_for(motion: str, sighted: bool, computer: str, im: str, ooo: bool) -> Category:
    """Restatement of the published rule order over abstract situation axes."""
    if motion == "both":
        return Category.OFFICE_WITH_VISITOR
    if motion == "occupant":
        return Category.OFFICE
    if sighted or computer == "internal_active":
        return Category.BUILDING
    if computer == "vpn_active":
        return Category.REMOTE_ACTIVE
    if computer == "vpn_idle":
        return Category.REMOTE_IDLE
    if im in ("online", "away"):
        return Category.ONLINE_ONLY
    if ooo:
        return Category.OUT_OF_OFFICE
    return Category.UNKNOWN


CATEGORY_TABLE: dict[tuple, Category] = {
    (m, s, c, i, o): _category_for(m, s, c, i, o)
    for m, s, c, i, o in product(MOTION_AXIS, (True, False), COMPUTER_AXIS, IM_AXIS, (True, False))
}


def _age_s(now: datetime, observed_at: datetime) -> float:
    return (now - observed_at).total_seconds()


def extract_situation(store, user_id: str, now: datetime, policy) -> tuple:
    """Collapse a user's retained evidence to (motion, sighted, computer, im, ooo)."""
    motion = "none"
    slot = store.motion(user_id)
    if slot is not None:
        payload, at = slot
        if _age_s(now, at) <= policy.motion_ttl_s and payload.occupant_motion:
            motion = "both" if payload.visitor_motion else "occupant"

    sighted = False
    slot = store.sighting(user_id)
    if slot is not None:
        _, at = slot
        sighted = _age_s(now, at) <= policy.sighting_ttl_s

    computer = "none"
    slot = store.computer(user_id)
    if slot is not None:
        payload, at = slot
        if _age_s(now, at) <= policy.computer_session_ttl_s:
            active = _age_s(now, payload.last_input_at) <= policy.input_active_window_s
            if payload.network_class is NetworkClass.INTERNAL:
                computer = "internal_active" if active else "internal_idle"
            else:
                computer = "vpn_active" if active else "vpn_idle"

    fresh_statuses = {
        status
        for status, at in store.im_statuses(user_id).values()
        if _age_s(now, at) <= policy.im_ttl_s
    }
    if ImStatus.ONLINE in fresh_statuses:
        im = "online"
    elif ImStatus.AWAY in fresh_statuses:
        im = "away"
    else:
        im = "none"

    ooo = False
    slot = store.calendar(user_id)
    if slot is not None:
        payload, _ = slot
        ooo = any(
            e.kind in OUT_OF_OFFICE_KINDS and e.start <= now < e.end for e in payload.events
        )

    return (motion, sighted, computer, im, ooo)


def oracle_fuse(store, user_id: str, now: datetime, policy, optin: OptInConfig) -> PresenceState:
    """Table-lookup fusion: the reference the engine must match exactly."""
    situation = extract_situation(store, user_id, now, policy)
    category = CATEGORY_TABLE[situation]

    overlays = set()
    if category is Category.OFFICE_WITH_VISITOR:
        overlays.add(Overlay.VISITOR_ICON)

    slot = store.calendar(user_id)
    if slot is not None and optin.enabled.get(AggregatorKind.CALENDAR, False):
        payload, _ = slot
        meeting = any(
            e.kind not in OUT_OF_OFFICE_KINDS and e.start <= now < e.end for e in payload.events
        )
        if meeting:
            overlays.add(Overlay.CALENDAR_ICON)

    location = None
    if optin.show_location and optin.enabled.get(AggregatorKind.DEVICE_PRESENCE, False):
        slot = store.sighting(user_id)
        if slot is not None:
            payload, at = slot
            if _age_s(now, at) <= policy.sighting_ttl_s:
                location = payload.ap_label or payload.ap_id

    return PresenceState(category=category, overlays=frozenset(overlays), location_label=location)
