"""IM presence from simulated status files.

Real protocol clients are replaceable adapters; this reads the simulation
layout `im_sim/<user>/<protocol>.status`, each file containing one of
online|away|offline.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Union

from presence_hub.model import ImStatus, ImStatusPayload, Protocol

logger = logging.getLogger(__name__)


def poll_im(user_dir: Union[str, Path]) -> list[ImStatusPayload]:
    """One payload per readable `<protocol>.status` file; order by protocol."""
    user_dir = Path(user_dir)
    if not user_dir.is_dir():
        return []
    payloads = []
    for protocol in Protocol:
        path = user_dir / f"{protocol.value}.status"
        if not path.is_file():
            continue
        try:
            token = path.read_text(encoding="utf-8").strip().lower()
        except OSError as exc:
            logger.warning("%s: unreadable, skipping: %s", path, exc)
            continue
        try:
            status = ImStatus(token)
        except ValueError:
            logger.warning("%s: unknown status token %r, skipping", path, token)
            continue
        payloads.append(ImStatusPayload(protocol=protocol, status=status))
    return payloads
