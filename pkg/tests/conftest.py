"""Shared builders for the test suite."""

from __future__ import annotations

import json
import socket
import threading
import time
from contextlib import contextmanager
from datetime import datetime, timedelta, timezone

import requests

from presence_hub.config import DeploymentConfig
from presence_hub.fusion import FreshnessPolicy
from presence_hub.httpd import HubServer
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
    Protocol,
)

T0 = datetime(2026, 3, 2, 9, 0, 0, tzinfo=timezone.utc)
POLICY = FreshnessPolicy()

ALL_KINDS = ("office_vision", "device_presence", "computer_client", "calendar", "im_presence")


def at(seconds: float) -> datetime:
    return T0 + timedelta(seconds=seconds)


def motion_ev(user="alice", occ=True, vis=False, observed=None, source="cam-1") -> Evidence:
    return Evidence(user_id=user, kind=AggregatorKind.OFFICE_VISION, source_id=source,
                    observed_at=observed or T0,
                    payload=OfficeMotionPayload(occupant_motion=occ, visitor_motion=vis))


def sighting_ev(user="alice", ap_id="bt-01", ap_label="Lobby", observed=None,
                device="phone-1", source="bt-scan") -> Evidence:
    return Evidence(user_id=user, kind=AggregatorKind.DEVICE_PRESENCE, source_id=source,
                    observed_at=observed or T0,
                    payload=DeviceSightingPayload(device_id=device, ap_id=ap_id, ap_label=ap_label))


def computer_ev(user="alice", net=NetworkClass.INTERNAL, last_input=None, observed=None,
                host="host-1") -> Evidence:
    observed = observed or T0
    return Evidence(user_id=user, kind=AggregatorKind.COMPUTER_CLIENT, source_id="pc-client",
                    observed_at=observed,
                    payload=ComputerActivityPayload(last_input_at=last_input or observed,
                                                    network_class=net, host_id=host))


def calendar_ev(user="alice", events=(), observed=None) -> Evidence:
    return Evidence(user_id=user, kind=AggregatorKind.CALENDAR, source_id="cal",
                    observed_at=observed or T0, payload=CalendarPayload(events=tuple(events)))


def cal_event(start_s: float, end_s: float, kind=CalendarEventKind.MEETING, title=None) -> CalendarEvent:
    return CalendarEvent(start=at(start_s), end=at(end_s), kind=kind, title=title)


def im_ev(user="alice", proto=Protocol.SKYPE, status=ImStatus.ONLINE, observed=None) -> Evidence:
    return Evidence(user_id=user, kind=AggregatorKind.IM_PRESENCE, source_id="im",
                    observed_at=observed or T0, payload=ImStatusPayload(protocol=proto, status=status))


def optin_doc(user_id: str, enabled=True, show_location=False, **overrides) -> dict:
    base = {k: enabled for k in ALL_KINDS}
    base.update(overrides)
    return {"user_id": user_id, "enabled": base, "show_location": show_location}


def make_config(tmp_path, users=("alice", "bob", "carol"), clock_mode="virtual",
                opt_in=True, show_location=True, **extra) -> DeploymentConfig:
    doc = {
        "listen": {"host": "127.0.0.1", "port": 0},
        "log_file": str(tmp_path / "events.ndjson"),
        "internal_cidrs": ["10.0.0.0/16"],
        "vpn_cidrs": ["172.16.0.0/12"],
        "clock": {"mode": clock_mode, "start": "2026-03-02T09:00:00.000Z"}
        if clock_mode == "virtual" else {"mode": "system"},
        "users": [{"user_id": u, "display_name": u.title(),
                   "email": f"{u}@example.test",
                   "im_handles": {"skype": f"{u}.s"} if u != "carol" else {}}
                  for u in users],
        "opt_ins": [optin_doc(u, enabled=opt_in, show_location=show_location) for u in users],
    }
    doc.update(extra)
    return DeploymentConfig.from_json(doc, origin="test-config")


@contextmanager
def running_server(tmp_path, **cfg):
    config = make_config(tmp_path, **cfg)
    server = HubServer(config)
    server.start()
    try:
        yield server
    finally:
        server.stop()


class StreamReader:
    """Background reader for one /stream subscription."""

    def __init__(self, base_url: str):
        self.resp = requests.get(f"{base_url}/stream", stream=True, timeout=(5, 30))
        self.frames: list[dict] = []
        self.raw_lines: list[bytes] = []
        self._mu = threading.Lock()
        self._thread = threading.Thread(target=self._pump, daemon=True)
        self._thread.start()

    def _pump(self):
        try:
            for line in self.resp.iter_lines():
                if not line:
                    continue
                with self._mu:
                    self.raw_lines.append(line)
                    self.frames.append(json.loads(line))
        except Exception:
            pass  # closed

    def snapshot_frames(self) -> list[dict]:
        with self._mu:
            return list(self.frames)

    def wait_for(self, predicate, timeout=5.0) -> dict:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            for frame in self.snapshot_frames():
                if predicate(frame):
                    return frame
            time.sleep(0.01)
        raise AssertionError(f"no frame matching predicate within {timeout}s; "
                             f"got {self.snapshot_frames()}")

    def close(self):
        # Unblock the pump thread's pending read before closing, otherwise
        # close() contends on the buffered reader's lock until the server's
        # next heartbeat write.
        try:
            sock = self.resp.raw._fp.fp.raw._sock
            sock.shutdown(socket.SHUT_RDWR)
        except Exception:
            pass
        self.resp.close()
        self._thread.join(timeout=5)


def fold_stream(frames) -> dict:
    """Client-side fold of snapshot + state deltas into {user_id: state_json}."""
    states: dict = {}
    for frame in frames:
        if frame["kind"] == "snapshot":
            states = dict(frame["payload"]["states"])
        elif frame["kind"] == "state_delta":
            for change in frame["payload"]["changes"]:
                states[change["user_id"]] = change["state"]
    return states
