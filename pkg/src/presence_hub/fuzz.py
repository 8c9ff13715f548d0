"""Engine-vs-oracle fuzzing: exhaustive combination table plus seeded random stores.

Shared by the `presence-hub fuzz` command and the test suite so both run the
identical case generators.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from itertools import product
from typing import Iterator, Optional

from presence_hub.fusion import EvidenceStore, FreshnessPolicy, admit_evidence, fuse
from presence_hub.model import (
    AggregatorKind,
    CalendarEvent,
    CalendarEventKind,
    CalendarPayload,
    ComputerActivityPayload,
    DeviceSightingPayload,
    Evidence,
    ImStatus,
    ImStatusPayload,
    NetworkClass,
    OfficeMotionPayload,
    OptInConfig,
    Protocol,
    to_utc_ms,
)
from presence_hub.oracle import oracle_fuse

COMBO_MOTION = ("absent", "stale", "none", "visitor_only", "occupant", "both")
COMBO_SIGHTING = ("absent", "fresh", "stale")
COMBO_COMPUTER = ("absent", "internal_active", "internal_idle", "vpn_active", "vpn_idle", "stale")
COMBO_IM = ("none", "offline", "away", "online")
COMBO_CALENDAR = ("none", "meeting", "ooo")

FUZZ_USER = "fuzz-user"
_EPOCH = datetime(2026, 1, 5, 9, 0, 0, tzinfo=timezone.utc)


def all_combos() -> Iterator[tuple[str, str, str, str, str]]:
    """The full 6x3x6x4x3 = 1,296 combination space."""
    return product(COMBO_MOTION, COMBO_SIGHTING, COMBO_COMPUTER, COMBO_IM, COMBO_CALENDAR)


def _admit(store: EvidenceStore, optin: OptInConfig, now: datetime, kind: AggregatorKind,
           payload, observed_at: datetime, source: str = "combo") -> None:
    ev = Evidence(
        user_id=optin.user_id,
        kind=kind,
        source_id=source,
        observed_at=to_utc_ms(observed_at),
        payload=payload,
    )
    admit_evidence(store, ev, optin, now)


def build_combo_store(
    combo: tuple[str, str, str, str, str],
    now: datetime,
    policy: FreshnessPolicy,
    user_id: str = FUZZ_USER,
) -> tuple[EvidenceStore, OptInConfig]:
    """Materialize one combination as a real store via the admission path."""
    motion, sighting, computer, im, cal = combo
    optin = OptInConfig.all_enabled(user_id)
    store = EvidenceStore()
    fresh = now - timedelta(seconds=10)

    if motion != "absent":
        flags = {
            "stale": (True, True),
            "none": (False, False),
            "visitor_only": (False, True),
            "occupant": (True, False),
            "both": (True, True),
        }[motion]
        observed = now - timedelta(seconds=policy.motion_ttl_s + 100) if motion == "stale" else fresh
        _admit(store, optin, now, AggregatorKind.OFFICE_VISION,
               OfficeMotionPayload(*flags), observed)

    if sighting != "absent":
        observed = now - timedelta(seconds=policy.sighting_ttl_s + 100) if sighting == "stale" else fresh
        _admit(store, optin, now, AggregatorKind.DEVICE_PRESENCE,
               DeviceSightingPayload(device_id="phone-1", ap_id="ap-7", ap_label="east wing"),
               observed)

    if computer != "absent":
        if computer == "stale":
            observed = now - timedelta(seconds=policy.computer_session_ttl_s + 100)
            net, last_input = NetworkClass.VPN, observed - timedelta(seconds=5)
        else:
            observed = fresh
            net = NetworkClass.INTERNAL if computer.startswith("internal") else NetworkClass.VPN
            if computer.endswith("active"):
                last_input = now - timedelta(seconds=30)
            else:
                last_input = now - timedelta(seconds=policy.input_active_window_s + 100)
        _admit(store, optin, now, AggregatorKind.COMPUTER_CLIENT,
               ComputerActivityPayload(last_input_at=to_utc_ms(last_input),
                                       network_class=net, host_id="host-1"),
               observed)

    if im == "offline":
        _admit(store, optin, now, AggregatorKind.IM_PRESENCE,
               ImStatusPayload(Protocol.JABBER, ImStatus.OFFLINE), fresh)
    elif im == "away":
        _admit(store, optin, now, AggregatorKind.IM_PRESENCE,
               ImStatusPayload(Protocol.JABBER, ImStatus.AWAY), fresh)
    elif im == "online":
        _admit(store, optin, now, AggregatorKind.IM_PRESENCE,
               ImStatusPayload(Protocol.SKYPE, ImStatus.ONLINE), fresh)
        _admit(store, optin, now, AggregatorKind.IM_PRESENCE,
               ImStatusPayload(Protocol.GOOGLE_TALK, ImStatus.ONLINE), fresh)
        _admit(store, optin, now, AggregatorKind.IM_PRESENCE,
               ImStatusPayload(Protocol.JABBER, ImStatus.OFFLINE), fresh)

    if cal != "none":
        kind = CalendarEventKind.MEETING if cal == "meeting" else CalendarEventKind.VACATION
        event = CalendarEvent(start=now - timedelta(minutes=10),
                              end=now + timedelta(minutes=50), kind=kind)
        _admit(store, optin, now, AggregatorKind.CALENDAR,
               CalendarPayload(events=(event,)), fresh)

    return store, optin


def random_case(
    rng: random.Random,
    policy: FreshnessPolicy,
    user_id: str = FUZZ_USER,
) -> tuple[EvidenceStore, OptInConfig, datetime]:
    """One random store. Ages cluster around TTL boundaries on purpose."""
    now = to_utc_ms(_EPOCH + timedelta(milliseconds=rng.randrange(0, 30 * 86400 * 1000)))
    enabled = {k: rng.random() < 0.8 for k in AggregatorKind}
    optin = OptInConfig(user_id=user_id, enabled=enabled, show_location=rng.random() < 0.5)
    store = EvidenceStore()

    def age_near(ttl: float) -> timedelta:
        choice = rng.choice(("zero", "inside", "edge", "edge-", "edge+", "far"))
        seconds = {
            "zero": 0.0,
            "inside": rng.uniform(0, ttl),
            "edge": ttl,
            "edge-": max(0.0, ttl - 1),
            "edge+": ttl + 1,
            "far": ttl * rng.uniform(1.1, 4.0),
        }[choice]
        return timedelta(milliseconds=int(seconds * 1000))

    if enabled[AggregatorKind.OFFICE_VISION] and rng.random() < 0.7:
        payload = OfficeMotionPayload(
            occupant_motion=rng.random() < 0.5, visitor_motion=rng.random() < 0.5
        )
        _admit(store, optin, now, AggregatorKind.OFFICE_VISION, payload,
               now - age_near(policy.motion_ttl_s), "rng")

    if enabled[AggregatorKind.DEVICE_PRESENCE] and rng.random() < 0.7:
        payload = DeviceSightingPayload(
            device_id=f"dev-{rng.randrange(4)}",
            ap_id=f"ap-{rng.randrange(6)}",
            ap_label=rng.choice(("", "lobby", "east wing", "lab")),
        )
        _admit(store, optin, now, AggregatorKind.DEVICE_PRESENCE, payload,
               now - age_near(policy.sighting_ttl_s), "rng")

    if enabled[AggregatorKind.COMPUTER_CLIENT] and rng.random() < 0.7:
        observed = now - age_near(policy.computer_session_ttl_s)
        input_age = age_near(policy.input_active_window_s)
        last_input = min(observed, now - input_age)
        payload = ComputerActivityPayload(
            last_input_at=to_utc_ms(last_input),
            network_class=rng.choice((NetworkClass.INTERNAL, NetworkClass.VPN)),
            host_id="host-rng",
        )
        _admit(store, optin, now, AggregatorKind.COMPUTER_CLIENT, payload, observed, "rng")

    if enabled[AggregatorKind.IM_PRESENCE]:
        for proto in Protocol:
            if rng.random() < 0.4:
                payload = ImStatusPayload(proto, rng.choice(tuple(ImStatus)))
                _admit(store, optin, now, AggregatorKind.IM_PRESENCE, payload,
                       now - age_near(policy.im_ttl_s), "rng")

    if enabled[AggregatorKind.CALENDAR] and rng.random() < 0.6:
        events = []
        for _ in range(rng.randrange(1, 4)):
            start = now + timedelta(minutes=rng.uniform(-240, 240))
            end = start + timedelta(minutes=rng.uniform(1, 180))
            events.append(
                CalendarEvent(
                    start=to_utc_ms(start),
                    end=to_utc_ms(end),
                    kind=rng.choice(tuple(CalendarEventKind)),
                )
            )
        _admit(store, optin, now, AggregatorKind.CALENDAR,
               CalendarPayload(events=tuple(events)), now - timedelta(seconds=30), "rng")

    return store, optin, now


def _describe(store: EvidenceStore, user_id: str, now: datetime) -> str:
    parts = [f"now={now.isoformat()}"]
    for label, slot in (
        ("motion", store.motion(user_id)),
        ("sighting", store.sighting(user_id)),
        ("computer", store.computer(user_id)),
        ("calendar", store.calendar(user_id)),
    ):
        if slot:
            parts.append(f"{label}@{slot[1].isoformat()}={slot[0]!r}")
    for proto, (status, at) in sorted(store.im_statuses(user_id).items(), key=lambda kv: kv[0].value):
        parts.append(f"im[{proto.value}]@{at.isoformat()}={status.value}")
    return "\n  ".join(parts)


@dataclass
class FuzzReport:
    exhaustive_cases: int
    exhaustive_mismatches: int
    random_cases: int
    random_mismatches: int
    seed: int
    first_counterexample: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.exhaustive_mismatches == 0 and self.random_mismatches == 0

    def render(self) -> str:
        lines = [
            f"exhaustive: {self.exhaustive_cases} cases, {self.exhaustive_mismatches} mismatches",
            f"random:     {self.random_cases} cases (seed {self.seed}), {self.random_mismatches} mismatches",
        ]
        if self.first_counterexample:
            lines.append("first counterexample:")
            lines.append("  " + self.first_counterexample)
        lines.append(f"result:     {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _compare(store: EvidenceStore, optin: OptInConfig, now: datetime,
             policy: FreshnessPolicy, label: str) -> Optional[str]:
    got = fuse(store, optin.user_id, now, policy, optin)
    want = oracle_fuse(store, optin.user_id, now, policy, optin)
    if got == want:
        return None
    return (
        f"{label}: engine={got.to_json()} oracle={want.to_json()}\n  "
        + _describe(store, optin.user_id, now)
    )


def run_fuzz(cases: int, seed: int, policy: Optional[FreshnessPolicy] = None) -> FuzzReport:
    """Exhaustive table first, then `cases` seeded random stores."""
    policy = policy or FreshnessPolicy()
    now = _EPOCH
    report = FuzzReport(0, 0, 0, 0, seed)

    for combo in all_combos():
        report.exhaustive_cases += 1
        store, optin = build_combo_store(combo, now, policy)
        mismatch = _compare(store, optin, now, policy, f"combo {combo!r}")
        if mismatch:
            report.exhaustive_mismatches += 1
            report.first_counterexample = report.first_counterexample or mismatch

    rng = random.Random(seed)
    for i in range(cases):
        report.random_cases += 1
        store, optin, case_now = random_case(rng, policy)
        mismatch = _compare(store, optin, case_now, policy, f"random case {i}")
        if mismatch:
            report.random_mismatches += 1
            report.first_counterexample = report.first_counterexample or mismatch

    return report
