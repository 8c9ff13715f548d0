"""Deployment configuration: roster, opt-ins, networks, policy, server knobs.

Loading is fail-fast: every problem is reported as a ConfigError naming the
offending file, field, or user.
"""

from __future__ import annotations

import ipaddress
import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from presence_hub.fusion import FreshnessPolicy
from presence_hub.model import OptInConfig, UserProfile, parse_ts

PORT_ENV_VAR = "PRESENCE_HUB_PORT"


class ConfigError(ValueError):
    pass


@dataclass
class DeploymentConfig:
    users: list[UserProfile]
    opt_ins: dict[str, OptInConfig]
    internal_cidrs: list[str] = field(default_factory=list)
    vpn_cidrs: list[str] = field(default_factory=list)
    policy: FreshnessPolicy = field(default_factory=FreshnessPolicy)
    host: str = "127.0.0.1"
    port: int = 8765
    log_file: str = "presence-events.ndjson"
    clock_mode: str = "system"  # "system" | "virtual"
    virtual_start: Optional[datetime] = None
    sweep_interval_s: float = 10.0
    heartbeat_interval_s: float = 15.0
    auth_token: Optional[str] = None

    def optin_for(self, user_id: str) -> OptInConfig:
        """Configured opt-in, or the all-disabled default (opt-IN, not opt-out)."""
        return self.opt_ins.get(user_id) or OptInConfig.default(user_id)

    @classmethod
    def from_json(cls, doc: Mapping[str, Any], origin: str = "<config>") -> "DeploymentConfig":
        def fail(msg: str) -> None:
            raise ConfigError(f"{origin}: {msg}")

        users = []
        seen = set()
        for i, raw in enumerate(doc.get("users", [])):
            try:
                profile = UserProfile.from_json(raw)
            except ValueError as exc:
                fail(f"users[{i}]: {exc}")
            if profile.user_id in seen:
                fail(f"users[{i}]: duplicate user_id {profile.user_id!r}")
            seen.add(profile.user_id)
            users.append(profile)

        opt_ins = {}
        for i, raw in enumerate(doc.get("opt_ins", [])):
            try:
                optin = OptInConfig.from_json(raw)
            except ValueError as exc:
                fail(f"opt_ins[{i}]: {exc}")
            if optin.user_id not in seen:
                fail(f"opt_ins[{i}]: unknown user {optin.user_id!r}")
            opt_ins[optin.user_id] = optin

        for which in ("internal_cidrs", "vpn_cidrs"):
            for cidr in doc.get(which, []):
                try:
                    ipaddress.ip_network(cidr)
                except ValueError as exc:
                    fail(f"{which}: {exc}")

        try:
            policy = FreshnessPolicy.from_json(doc.get("freshness", {}))
        except (TypeError, ValueError) as exc:
            fail(f"freshness: {exc}")

        listen = doc.get("listen", {})
        clock_doc = doc.get("clock", {})
        mode = clock_doc.get("mode", "system")
        if mode not in ("system", "virtual"):
            fail(f"clock.mode must be 'system' or 'virtual', got {mode!r}")
        virtual_start = None
        if mode == "virtual":
            if "start" not in clock_doc:
                fail("clock.mode 'virtual' requires clock.start")
            try:
                virtual_start = parse_ts(clock_doc["start"])
            except ValueError as exc:
                fail(f"clock.start: {exc}")

        port = int(listen.get("port", cls.port))
        env_port = os.environ.get(PORT_ENV_VAR)
        if env_port:
            try:
                port = int(env_port)
            except ValueError:
                fail(f"environment {PORT_ENV_VAR}={env_port!r} is not a port number")

        auth_token = doc.get("auth_token")
        if auth_token is not None and not isinstance(auth_token, str):
            fail("auth_token must be a string")

        return cls(
            users=users,
            opt_ins=opt_ins,
            internal_cidrs=list(doc.get("internal_cidrs", [])),
            vpn_cidrs=list(doc.get("vpn_cidrs", [])),
            policy=policy,
            host=str(listen.get("host", cls.host)),
            port=port,
            log_file=str(doc.get("log_file", cls.log_file)),
            clock_mode=mode,
            virtual_start=virtual_start,
            sweep_interval_s=float(doc.get("sweep_interval_s", cls.sweep_interval_s)),
            heartbeat_interval_s=float(doc.get("heartbeat_interval_s", cls.heartbeat_interval_s)),
            auth_token=auth_token,
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DeploymentConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        return cls.from_json(doc, origin=str(path))
