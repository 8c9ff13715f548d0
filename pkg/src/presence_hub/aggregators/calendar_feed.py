"""Calendar evidence from the artifact's calendar JSON format.

A calendar source is a JSON list of event records ({start, end, kind,
title?}); full ICS parsing is deliberately out of scope. Individually bad
events are dropped with a warning; an unreadable file or malformed top-level
JSON is an error.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Union

from presence_hub.model import CalendarEvent, CalendarPayload, MalformedEvidence

logger = logging.getLogger(__name__)


def parse_calendar(source: Union[str, Path]) -> CalendarPayload:
    path = Path(source)
    text = path.read_text(encoding="utf-8")
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise ValueError(f"{path}: calendar source must be a JSON list of events")

    events = []
    for i, raw in enumerate(doc):
        try:
            event = CalendarEvent.from_json(raw)
            event.validate()
        except (MalformedEvidence, TypeError) as exc:
            logger.warning("%s: dropping event %d: %s", path, i, exc)
            continue
        events.append(event)
    return CalendarPayload(events=tuple(events))
