"""Device-proximity evidence: reduce raw access-point sightings to the one
that currently places the worker."""

from __future__ import annotations

from datetime import datetime, timedelta
from typing import Optional, Sequence

from presence_hub.model import Evidence


def reduce_sightings(
    sightings: Sequence[Evidence],
    now: datetime,
    ttl_s: float,
) -> Optional[Evidence]:
    """Latest fresh sighting for one user, or None.

    Timestamp ties break to the lexicographically smallest ap_id, making the
    result permutation-invariant over the input list.
    """
    fresh = [s for s in sightings if now - s.observed_at <= timedelta(seconds=ttl_s)]
    if not fresh:
        return None
    latest = max(s.observed_at for s in fresh)
    candidates = [s for s in fresh if s.observed_at == latest]
    return min(candidates, key=lambda s: s.payload.ap_id)
