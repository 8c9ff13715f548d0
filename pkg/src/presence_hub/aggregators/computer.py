"""Computer/network client probe: input recency plus network classification."""

from __future__ import annotations

from datetime import datetime
from typing import Iterable, Optional

from presence_hub.model import ComputerActivityPayload, NetworkClass, classify_network


def probe_computer(
    last_input_at: datetime,
    local_address: str,
    internal_cidrs: Iterable[str],
    vpn_cidrs: Iterable[str],
    host_id: str = "",
) -> Optional[ComputerActivityPayload]:
    """Payload when the host is on the corporate network or VPN, else None.

    Off-network (or an unclassifiable address) emits nothing: an unknown
    network says nothing about presence.
    """
    try:
        net = classify_network(local_address, internal_cidrs, vpn_cidrs)
    except ValueError:
        return None
    if net is NetworkClass.NEITHER:
        return None
    return ComputerActivityPayload(last_input_at=last_input_at, network_class=net, host_id=host_id)
