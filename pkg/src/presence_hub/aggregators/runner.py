"""Aggregator polling loops and the server transport.

Every aggregator is source-filtered: each tick it fetches its allow-list from
the server and samples only users present on it, so evidence for a
non-consenting user never leaves the collection point. The server's 403 is
defense in depth behind this, not the primary gate.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional, Union

import requests

from presence_hub.aggregators.calendar_feed import parse_calendar
from presence_hub.aggregators.computer import probe_computer
from presence_hub.aggregators.device import reduce_sightings
from presence_hub.aggregators.im import poll_im
from presence_hub.aggregators.vision import (
    MotionParams,
    Region,
    load_regions,
    motion_detect,
    read_pgm,
)
from presence_hub.clock import SystemClock
from presence_hub.model import AggregatorKind, Evidence, parse_ts

logger = logging.getLogger(__name__)


class ServerTransport:
    """Thin requests-based client for the hub endpoints aggregators use."""

    def __init__(self, base_url: str, timeout: float = 10.0, auth_token: Optional[str] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = requests.Session()
        if auth_token:
            self.session.headers["Authorization"] = f"Bearer {auth_token}"

    def post_evidence(self, doc: dict) -> tuple[int, dict]:
        resp = self.session.post(f"{self.base_url}/evidence", json=doc, timeout=self.timeout)
        try:
            body = resp.json()
        except ValueError:
            body = {}
        return resp.status_code, body

    def get_allowlist(self, kind: AggregatorKind) -> list[str]:
        resp = self.session.get(
            f"{self.base_url}/aggregator-config/{kind.value}", timeout=self.timeout
        )
        resp.raise_for_status()
        return list(resp.json())


@dataclass
class TickResult:
    sent: int = 0
    rejected: int = 0


class PollingAggregator:
    """Sequential poll loop: fetch allow-list, sample allowed users, post."""

    kind: AggregatorKind
    poll_interval_s: float = 30.0

    def __init__(self, transport, source_id: str, clock=None,
                 poll_interval_s: Optional[float] = None):
        self.transport = transport
        self.source_id = source_id
        self.clock = clock or SystemClock()
        if poll_interval_s is not None:
            self.poll_interval_s = poll_interval_s

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        raise NotImplementedError

    def tick(self, now: Optional[datetime] = None) -> TickResult:
        now = now or self.clock.now()
        result = TickResult()
        try:
            allowed = self.transport.get_allowlist(self.kind)
        except Exception as exc:
            logger.warning("%s: allow-list fetch failed: %s", self.kind.value, exc)
            return result
        for user_id in allowed:
            try:
                evidence = self.sample(user_id, now)
            except Exception as exc:
                logger.warning("%s: sampling %s failed: %s", self.kind.value, user_id, exc)
                continue
            for ev in evidence:
                status, _ = self.transport.post_evidence(ev.to_json())
                result.sent += 1
                if status != 200:
                    result.rejected += 1
        return result

    def run(self, stop: threading.Event) -> None:
        while not stop.is_set():
            self.tick()
            if stop.wait(self.poll_interval_s):
                break


class VisionAggregator(PollingAggregator):
    """Consumes `<root>/<user>/NNN.pgm` frame sequences with a per-user
    `regions.json`; each tick differences the next consecutive frame pair."""

    kind = AggregatorKind.OFFICE_VISION
    poll_interval_s = 5.0

    def __init__(self, transport, sim_root: Union[str, Path],
                 params: Optional[MotionParams] = None, **kwargs):
        super().__init__(transport, source_id="vision-sim", **kwargs)
        self.sim_root = Path(sim_root)
        self.params = params or MotionParams()
        self._cursor: dict[str, int] = {}
        self._regions: dict[str, list[Region]] = {}

    def _user_regions(self, user_id: str) -> list[Region]:
        if user_id not in self._regions:
            self._regions[user_id] = load_regions(self.sim_root / user_id / "regions.json")
        return self._regions[user_id]

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        user_dir = self.sim_root / user_id
        if not user_dir.is_dir():
            return []
        frames = sorted(user_dir.glob("*.pgm"))
        i = self._cursor.get(user_id, 0)
        if i + 1 >= len(frames):
            return []
        self._cursor[user_id] = i + 1
        prev, cur = read_pgm(frames[i]), read_pgm(frames[i + 1])
        payload = motion_detect(prev, cur, self._user_regions(user_id), self.params)
        return [Evidence(user_id=user_id, kind=self.kind, source_id=self.source_id,
                         observed_at=now, payload=payload)]


class DeviceProximityAggregator(PollingAggregator):
    """Reads `<root>/<user>.json`, a list of raw sighting records, and emits
    the latest fresh one."""

    kind = AggregatorKind.DEVICE_PRESENCE
    poll_interval_s = 60.0

    def __init__(self, transport, sim_root: Union[str, Path], sighting_ttl_s: float = 600.0, **kwargs):
        super().__init__(transport, source_id="bt-scan-sim", **kwargs)
        self.sim_root = Path(sim_root)
        self.sighting_ttl_s = sighting_ttl_s

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        path = self.sim_root / f"{user_id}.json"
        if not path.is_file():
            return []
        records = json.loads(path.read_text(encoding="utf-8"))
        sightings = [
            Evidence.from_json({
                "user_id": user_id,
                "kind": self.kind.value,
                "source_id": self.source_id,
                "observed_at": r["observed_at"],
                "payload": {k: r.get(k, "") for k in ("device_id", "ap_id", "ap_label")},
            })
            for r in records
        ]
        best = reduce_sightings(sightings, now, self.sighting_ttl_s)
        return [best] if best else []


class ComputerClientAggregator(PollingAggregator):
    """Reads `<root>/<user>.json` ({last_input_at, address, host_id}) and
    emits a session payload only while the host classifies as internal/VPN."""

    kind = AggregatorKind.COMPUTER_CLIENT
    poll_interval_s = 30.0

    def __init__(self, transport, sim_root: Union[str, Path],
                 internal_cidrs: Iterable[str], vpn_cidrs: Iterable[str], **kwargs):
        super().__init__(transport, source_id="pc-client-sim", **kwargs)
        self.sim_root = Path(sim_root)
        self.internal_cidrs = list(internal_cidrs)
        self.vpn_cidrs = list(vpn_cidrs)

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        path = self.sim_root / f"{user_id}.json"
        if not path.is_file():
            return []
        doc = json.loads(path.read_text(encoding="utf-8"))
        payload = probe_computer(
            last_input_at=parse_ts(doc["last_input_at"]),
            local_address=doc["address"],
            internal_cidrs=self.internal_cidrs,
            vpn_cidrs=self.vpn_cidrs,
            host_id=str(doc.get("host_id", "")),
        )
        if payload is None:
            return []
        return [Evidence(user_id=user_id, kind=self.kind, source_id=self.source_id,
                         observed_at=now, payload=payload)]


class CalendarAggregator(PollingAggregator):
    """Reads `<root>/<user>.json` in the artifact's calendar list format."""

    kind = AggregatorKind.CALENDAR
    poll_interval_s = 300.0

    def __init__(self, transport, sim_root: Union[str, Path], **kwargs):
        super().__init__(transport, source_id="calendar-sim", **kwargs)
        self.sim_root = Path(sim_root)

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        path = self.sim_root / f"{user_id}.json"
        if not path.is_file():
            return []
        payload = parse_calendar(path)
        return [Evidence(user_id=user_id, kind=self.kind, source_id=self.source_id,
                         observed_at=now, payload=payload)]


class ImAggregator(PollingAggregator):
    """Reads `<root>/<user>/<protocol>.status` simulation files."""

    kind = AggregatorKind.IM_PRESENCE
    poll_interval_s = 15.0

    def __init__(self, transport, sim_root: Union[str, Path], **kwargs):
        super().__init__(transport, source_id="im-sim", **kwargs)
        self.sim_root = Path(sim_root)

    def sample(self, user_id: str, now: datetime) -> list[Evidence]:
        return [
            Evidence(user_id=user_id, kind=self.kind, source_id=self.source_id,
                     observed_at=now, payload=payload)
            for payload in poll_im(self.sim_root / user_id)
        ]
