"""Shared domain types for the presence hub, plus the pure classification helpers.

Everything here is an immutable value record or a pure function: safe to use
from any thread. The JSON encodings defined by to_json/from_json are the wire
and log format for every other module (snake_case field names, RFC 3339
timestamps with millisecond precision, UTC).
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Any, Iterable, Mapping, Optional, Union

FUTURE_TOLERANCE = timedelta(seconds=5)
STATUS_TEXT_MAX = 280


class MalformedEvidence(ValueError):
    """Evidence document violates the schema or a payload invariant."""


class FutureTimestamp(ValueError):
    """Evidence observed_at is further in the future than the tolerance."""


class OptInDisabled(PermissionError):
    """The user has not opted in to collection for this aggregator kind."""


class UnknownUser(KeyError):
    """user_id is not part of the deployment roster."""


# --- timestamps ------------------------------------------------------------

def to_utc_ms(dt: datetime) -> datetime:
    """Normalize to UTC and truncate to millisecond precision.

    Naive datetimes are taken to be UTC already.
    """
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=dt.microsecond - dt.microsecond % 1000)


def format_ts(dt: datetime) -> str:
    dt = to_utc_ms(dt)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_ts(value: str) -> datetime:
    if not isinstance(value, str):
        raise MalformedEvidence(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedEvidence(f"bad timestamp {value!r}: {exc}") from None
    if dt.tzinfo is None:
        raise MalformedEvidence(f"timestamp {value!r} has no UTC offset")
    return to_utc_ms(dt)


# --- enumerations ----------------------------------------------------------

class Protocol(Enum):
    """The four supported instant-messaging protocols."""
    JABBER = "jabber"
    GOOGLE_TALK = "google_talk"
    SKYPE = "skype"
    WINDOWS_LIVE_MESSENGER = "windows_live_messenger"


class AggregatorKind(Enum):
    """The five evidence channels."""
    OFFICE_VISION = "office_vision"
    DEVICE_PRESENCE = "device_presence"
    COMPUTER_CLIENT = "computer_client"
    CALENDAR = "calendar"
    IM_PRESENCE = "im_presence"


class ImStatus(Enum):
    ONLINE = "online"
    AWAY = "away"
    OFFLINE = "offline"


class NetworkClass(Enum):
    INTERNAL = "internal"
    VPN = "vpn"
    NEITHER = "neither"


class CalendarEventKind(Enum):
    MEETING = "meeting"
    VACATION = "vacation"
    SICK = "sick"
    TRAVEL = "travel"
    WORK_FROM_HOME = "work_from_home"
    OTHER = "other"


# Kinds that classify as scheduled out-of-office time.
OUT_OF_OFFICE_KINDS = frozenset({
    CalendarEventKind.VACATION,
    CalendarEventKind.SICK,
    CalendarEventKind.TRAVEL,
    CalendarEventKind.WORK_FROM_HOME,
})


class Category(Enum):
    """Fused presence category, most specific first (fusion rule order)."""
    OFFICE_WITH_VISITOR = "office_with_visitor"
    OFFICE = "office"
    BUILDING = "building"
    REMOTE_ACTIVE = "remote_active"
    REMOTE_IDLE = "remote_idle"
    ONLINE_ONLY = "online_only"
    OUT_OF_OFFICE = "out_of_office"
    UNKNOWN = "unknown"

    @property
    def rule_index(self) -> int:
        """1-based position in the fusion rule chain; higher = more general."""
        return _RULE_ORDER[self]


_RULE_ORDER = {cat: i + 1 for i, cat in enumerate(Category)}


class Overlay(Enum):
    VISITOR_ICON = "visitor_icon"
    CALENDAR_ICON = "calendar_icon"


class Hue(Enum):
    GREEN = "green"
    BLUE = "blue"
    PURPLE = "purple"
    AMBER = "amber"
    GRAY = "gray"


class Intensity(Enum):
    FULL = "full"
    LIGHT = "light"


class LogEventKind(Enum):
    DASHBOARD_OPEN = "dashboard_open"
    DASHBOARD_CLOSE = "dashboard_close"
    PREF_CHANGE = "pref_change"
    STATUS_POST = "status_post"


def _enum_from_json(enum_cls: type, value: Any, what: str):
    try:
        return enum_cls(value)
    except ValueError:
        options = ", ".join(m.value for m in enum_cls)
        raise MalformedEvidence(f"bad {what} {value!r} (expected one of: {options})") from None


# --- evidence payloads -----------------------------------------------------

@dataclass(frozen=True)
class OfficeMotionPayload:
    """Motion observed in the occupant/visitor regions of one office camera."""
    occupant_motion: bool
    visitor_motion: bool

    def to_json(self) -> dict:
        return {"occupant_motion": self.occupant_motion, "visitor_motion": self.visitor_motion}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "OfficeMotionPayload":
        return cls(
            occupant_motion=_require_bool(doc, "occupant_motion"),
            visitor_motion=_require_bool(doc, "visitor_motion"),
        )

    def validate(self) -> None:
        pass  # both-false is a legal "no motion this interval" report


@dataclass(frozen=True)
class DeviceSightingPayload:
    """A bluetooth device seen by one access point."""
    device_id: str
    ap_id: str
    ap_label: str = ""

    @property
    def location_label(self) -> str:
        return self.ap_label or self.ap_id

    def to_json(self) -> dict:
        return {"device_id": self.device_id, "ap_id": self.ap_id, "ap_label": self.ap_label}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "DeviceSightingPayload":
        return cls(
            device_id=_require_str(doc, "device_id"),
            ap_id=_require_str(doc, "ap_id"),
            ap_label=str(doc.get("ap_label", "")),
        )

    def validate(self) -> None:
        if not self.ap_id:
            raise MalformedEvidence("device sighting requires a non-empty ap_id")


@dataclass(frozen=True)
class ComputerActivityPayload:
    """Input recency and network class reported by the desktop client."""
    last_input_at: datetime
    network_class: NetworkClass
    host_id: str

    def to_json(self) -> dict:
        return {
            "last_input_at": format_ts(self.last_input_at),
            "network_class": self.network_class.value,
            "host_id": self.host_id,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ComputerActivityPayload":
        return cls(
            last_input_at=parse_ts(_require(doc, "last_input_at")),
            network_class=_enum_from_json(NetworkClass, _require(doc, "network_class"), "network_class"),
            host_id=_require_str(doc, "host_id"),
        )

    def validate(self) -> None:
        if self.network_class is NetworkClass.NEITHER:
            raise MalformedEvidence("computer activity network_class must be internal or vpn")


@dataclass(frozen=True)
class CalendarEvent:
    start: datetime
    end: datetime
    kind: CalendarEventKind
    title: Optional[str] = None

    def to_json(self) -> dict:
        doc = {"start": format_ts(self.start), "end": format_ts(self.end), "kind": self.kind.value}
        if self.title is not None:
            doc["title"] = self.title
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "CalendarEvent":
        title = doc.get("title")
        if title is not None and not isinstance(title, str):
            raise MalformedEvidence("calendar event title must be a string")
        return cls(
            start=parse_ts(_require(doc, "start")),
            end=parse_ts(_require(doc, "end")),
            kind=_enum_from_json(CalendarEventKind, _require(doc, "kind"), "calendar event kind"),
            title=title,
        )

    def validate(self) -> None:
        if not self.start < self.end:
            raise MalformedEvidence(
                f"calendar event interval is inverted ({format_ts(self.start)} >= {format_ts(self.end)})"
            )


@dataclass(frozen=True)
class CalendarPayload:
    events: tuple[CalendarEvent, ...]

    def to_json(self) -> dict:
        return {"events": [e.to_json() for e in self.events]}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "CalendarPayload":
        raw = _require(doc, "events")
        if not isinstance(raw, list):
            raise MalformedEvidence("calendar payload events must be a list")
        return cls(events=tuple(CalendarEvent.from_json(e) for e in raw))

    def validate(self) -> None:
        for event in self.events:
            event.validate()


@dataclass(frozen=True)
class ImStatusPayload:
    protocol: Protocol
    status: ImStatus

    def to_json(self) -> dict:
        return {"protocol": self.protocol.value, "status": self.status.value}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ImStatusPayload":
        return cls(
            protocol=_enum_from_json(Protocol, _require(doc, "protocol"), "protocol"),
            status=_enum_from_json(ImStatus, _require(doc, "status"), "im status"),
        )

    def validate(self) -> None:
        pass


EvidencePayload = Union[
    OfficeMotionPayload,
    DeviceSightingPayload,
    ComputerActivityPayload,
    CalendarPayload,
    ImStatusPayload,
]

PAYLOAD_TYPES: dict[AggregatorKind, type] = {
    AggregatorKind.OFFICE_VISION: OfficeMotionPayload,
    AggregatorKind.DEVICE_PRESENCE: DeviceSightingPayload,
    AggregatorKind.COMPUTER_CLIENT: ComputerActivityPayload,
    AggregatorKind.CALENDAR: CalendarPayload,
    AggregatorKind.IM_PRESENCE: ImStatusPayload,
}


@dataclass(frozen=True)
class Evidence:
    """One timestamped observation from one aggregator about one worker."""
    user_id: str
    kind: AggregatorKind
    source_id: str
    observed_at: datetime
    payload: EvidencePayload

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "kind": self.kind.value,
            "source_id": self.source_id,
            "observed_at": format_ts(self.observed_at),
            "payload": self.payload.to_json(),
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "Evidence":
        if not isinstance(doc, Mapping):
            raise MalformedEvidence("evidence must be a JSON object")
        kind = _enum_from_json(AggregatorKind, _require(doc, "kind"), "aggregator kind")
        payload_doc = _require(doc, "payload")
        if not isinstance(payload_doc, Mapping):
            raise MalformedEvidence("evidence payload must be a JSON object")
        ev = cls(
            user_id=_require_str(doc, "user_id"),
            kind=kind,
            source_id=_require_str(doc, "source_id"),
            observed_at=parse_ts(_require(doc, "observed_at")),
            payload=PAYLOAD_TYPES[kind].from_json(payload_doc),
        )
        ev.validate()
        return ev

    def validate(self) -> None:
        if not self.user_id:
            raise MalformedEvidence("evidence user_id must be non-empty")
        expected = PAYLOAD_TYPES[self.kind]
        if type(self.payload) is not expected:
            raise MalformedEvidence(
                f"payload variant {type(self.payload).__name__} does not match kind {self.kind.value}"
            )
        self.payload.validate()
        if isinstance(self.payload, ComputerActivityPayload):
            if self.payload.last_input_at > self.observed_at:
                raise MalformedEvidence("last_input_at is after observed_at")


# --- presence, preferences, status, log ------------------------------------

@dataclass(frozen=True)
class PresenceState:
    """Fused render state: category, icon overlays, optional location."""
    category: Category
    overlays: frozenset = frozenset()
    location_label: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "category": self.category.value,
            "overlays": sorted(o.value for o in self.overlays),
            "location_label": self.location_label,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "PresenceState":
        overlays = frozenset(
            _enum_from_json(Overlay, o, "overlay") for o in doc.get("overlays", [])
        )
        label = doc.get("location_label")
        if label is not None and not isinstance(label, str):
            raise MalformedEvidence("location_label must be a string or null")
        return cls(
            category=_enum_from_json(Category, _require(doc, "category"), "category"),
            overlays=overlays,
            location_label=label,
        )


UNKNOWN_STATE = PresenceState(category=Category.UNKNOWN)


@dataclass(frozen=True)
class OptInConfig:
    """Per-user collection consent: which aggregators may report, and whether
    the approximate location may be shown. Defaults to everything off."""
    user_id: str
    enabled: Mapping[AggregatorKind, bool]
    show_location: bool = False

    @classmethod
    def default(cls, user_id: str) -> "OptInConfig":
        return cls(user_id=user_id, enabled={k: False for k in AggregatorKind}, show_location=False)

    @classmethod
    def all_enabled(cls, user_id: str, show_location: bool = True) -> "OptInConfig":
        return cls(user_id=user_id, enabled={k: True for k in AggregatorKind}, show_location=show_location)

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "enabled": {k.value: bool(self.enabled[k]) for k in AggregatorKind},
            "show_location": self.show_location,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "OptInConfig":
        raw = _require(doc, "enabled")
        if not isinstance(raw, Mapping):
            raise MalformedEvidence("opt-in enabled must be an object")
        enabled = {}
        for kind in AggregatorKind:
            if kind.value not in raw:
                raise MalformedEvidence(f"opt-in map is missing aggregator kind {kind.value!r}")
            enabled[kind] = bool(raw[kind.value])
        unknown = set(raw) - {k.value for k in AggregatorKind}
        if unknown:
            raise MalformedEvidence(f"opt-in map has unknown aggregator kinds: {sorted(unknown)}")
        return cls(
            user_id=_require_str(doc, "user_id"),
            enabled=enabled,
            show_location=bool(doc.get("show_location", False)),
        )

    def validate(self) -> None:
        missing = [k.value for k in AggregatorKind if k not in self.enabled]
        if missing:
            raise MalformedEvidence(f"opt-in map is not total; missing {missing}")


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    display_name: str
    photo_ref: str = ""
    email: str = ""
    im_handles: Mapping[Protocol, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "display_name": self.display_name,
            "photo_ref": self.photo_ref,
            "email": self.email,
            "im_handles": {p.value: h for p, h in self.im_handles.items()},
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "UserProfile":
        raw = doc.get("im_handles", {})
        if not isinstance(raw, Mapping):
            raise MalformedEvidence("im_handles must be an object")
        handles = {
            _enum_from_json(Protocol, p, "protocol"): str(h) for p, h in raw.items()
        }
        user_id = _require_str(doc, "user_id")
        if not user_id:
            raise MalformedEvidence("user_id must be non-empty")
        return cls(
            user_id=user_id,
            display_name=str(doc.get("display_name", user_id)),
            photo_ref=str(doc.get("photo_ref", "")),
            email=str(doc.get("email", "")),
            im_handles=handles,
        )


@dataclass(frozen=True)
class StatusMessage:
    """Short user-authored activity text; empty text is an explicit clear."""
    user_id: str
    text: str
    posted_at: datetime

    def to_json(self) -> dict:
        return {"user_id": self.user_id, "text": self.text, "posted_at": format_ts(self.posted_at)}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "StatusMessage":
        msg = cls(
            user_id=_require_str(doc, "user_id"),
            text=_require_str(doc, "text"),
            posted_at=parse_ts(_require(doc, "posted_at")),
        )
        msg.validate()
        return msg

    def validate(self) -> None:
        if len(self.text) > STATUS_TEXT_MAX:
            raise MalformedEvidence(f"status text exceeds {STATUS_TEXT_MAX} characters")


@dataclass(frozen=True)
class LogEvent:
    """Append-only instrumentation record."""
    at: datetime
    user_id: str
    kind: LogEventKind
    detail: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "at": format_ts(self.at),
            "user_id": self.user_id,
            "kind": self.kind.value,
            "detail": dict(self.detail),
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "LogEvent":
        detail = doc.get("detail", {})
        if not isinstance(detail, Mapping):
            raise MalformedEvidence("log event detail must be an object")
        return cls(
            at=parse_ts(_require(doc, "at")),
            user_id=_require_str(doc, "user_id"),
            kind=_enum_from_json(LogEventKind, _require(doc, "kind"), "log event kind"),
            detail=dict(detail),
        )


# --- pure operations --------------------------------------------------------

def classify_network(
    address: str,
    internal_cidrs: Iterable[str],
    vpn_cidrs: Iterable[str],
) -> NetworkClass:
    """Classify an address against the deployment's CIDR lists.

    Internal wins when the lists overlap. Raises ValueError on a malformed
    address; callers treat the evidence as invalid.
    """
    addr = ipaddress.ip_address(address)
    if any(addr in ipaddress.ip_network(c) for c in internal_cidrs):
        return NetworkClass.INTERNAL
    if any(addr in ipaddress.ip_network(c) for c in vpn_cidrs):
        return NetworkClass.VPN
    return NetworkClass.NEITHER


@dataclass(frozen=True)
class CalendarNow:
    current_meeting: bool
    out_of_office: bool


def calendar_now(events: Iterable[CalendarEvent], now: datetime) -> CalendarNow:
    """Which calendar flags apply at `now` (half-open intervals [start, end))."""
    meeting = False
    ooo = False
    for event in events:
        if event.start <= now < event.end:
            if event.kind in OUT_OF_OFFICE_KINDS:
                ooo = True
            else:
                meeting = True
    return CalendarNow(current_meeting=meeting, out_of_office=ooo)


def im_merge(latest_per_protocol: Mapping[Protocol, ImStatus]) -> ImStatus:
    """Merge per-protocol statuses: any Online wins, then any Away, else Offline."""
    statuses = set(latest_per_protocol.values())
    if ImStatus.ONLINE in statuses:
        return ImStatus.ONLINE
    if ImStatus.AWAY in statuses:
        return ImStatus.AWAY
    return ImStatus.OFFLINE


@dataclass(frozen=True)
class RenderStyle:
    hue: Hue
    intensity: Intensity
    icons: frozenset = frozenset()

    def to_json(self) -> dict:
        return {
            "hue": self.hue.value,
            "intensity": self.intensity.value,
            "icons": sorted(self.icons),
        }


_STYLE_BY_CATEGORY: dict[Category, tuple[Hue, Intensity]] = {
    Category.OFFICE_WITH_VISITOR: (Hue.PURPLE, Intensity.FULL),
    Category.OFFICE: (Hue.GREEN, Intensity.FULL),
    Category.BUILDING: (Hue.GREEN, Intensity.LIGHT),
    Category.REMOTE_ACTIVE: (Hue.BLUE, Intensity.FULL),
    Category.REMOTE_IDLE: (Hue.BLUE, Intensity.LIGHT),
    Category.ONLINE_ONLY: (Hue.BLUE, Intensity.LIGHT),
    Category.OUT_OF_OFFICE: (Hue.AMBER, Intensity.FULL),
    Category.UNKNOWN: (Hue.GRAY, Intensity.LIGHT),
}


def render_style(state: PresenceState) -> RenderStyle:
    """Border hue + saturation and icon set for a fused presence state."""
    hue, intensity = _STYLE_BY_CATEGORY[state.category]
    icons = set()
    if state.category is Category.OFFICE_WITH_VISITOR:
        icons.add("silhouette")
    if Overlay.CALENDAR_ICON in state.overlays:
        icons.add("calendar")
    return RenderStyle(hue=hue, intensity=intensity, icons=frozenset(icons))


# --- json field helpers ----------------------------------------------------

def _require(doc: Mapping[str, Any], key: str) -> Any:
    if key not in doc:
        raise MalformedEvidence(f"missing required field {key!r}")
    return doc[key]


def _require_str(doc: Mapping[str, Any], key: str) -> str:
    value = _require(doc, key)
    if not isinstance(value, str):
        raise MalformedEvidence(f"field {key!r} must be a string")
    return value


def _require_bool(doc: Mapping[str, Any], key: str) -> bool:
    value = _require(doc, key)
    if not isinstance(value, bool):
        raise MalformedEvidence(f"field {key!r} must be a boolean")
    return value
