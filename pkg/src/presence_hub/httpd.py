"""HTTP/1.1 front end for the hub: JSON endpoints plus the NDJSON stream.

Endpoints:
  POST /evidence                  admit one evidence document
  GET  /stream                    snapshot + deltas + feed + heartbeats (NDJSON)
  POST /status                    post or clear a status message
  POST /prefs                     replace a user's opt-in config
  GET  /prefs/{user_id}           current opt-in config
  GET  /card/{user_id}            business-card view
  POST /session                   dashboard open/close instrumentation
  GET  /aggregator-config/{kind}  allow-list for one aggregator kind
  GET  /users                     deployment roster
  GET  /state                     last published state per user
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Optional

from presence_hub.config import DeploymentConfig
from presence_hub.hub import PresenceHub
from presence_hub.model import (
    AggregatorKind,
    FutureTimestamp,
    MalformedEvidence,
    OptInDisabled,
    UnknownUser,
)

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20


def _json_bytes(doc: Any) -> bytes:
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


class HubRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def hub(self) -> PresenceHub:
        return self.server.hub  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        logger.debug("%s %s", self.address_string(), fmt % args)

    # -- plumbing -------------------------------------------------------------

    def _send_json(self, status: int, doc: Any) -> None:
        body = _json_bytes(doc)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": code, "message": message})

    def _read_body(self) -> Optional[dict]:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            self._error(413, "too_large", "request body too large")
            return None
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            self._error(400, "malformed_json", str(exc))
            return None
        if not isinstance(doc, dict):
            self._error(400, "malformed_json", "body must be a JSON object")
            return None
        return doc

    def _authorized(self) -> bool:
        token = self.server.deployment.auth_token  # type: ignore[attr-defined]
        if not token:
            return True
        if self.headers.get("Authorization") == f"Bearer {token}":
            return True
        self._error(401, "unauthorized", "missing or bad bearer token")
        return False

    # -- routing ---------------------------------------------------------------

    def do_OPTIONS(self) -> None:
        # CORS preflight for dashboards served from another origin
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, Authorization")
        self.send_header("Access-Control-Max-Age", "600")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        if not self._authorized():
            return
        path = self.path.split("?", 1)[0].rstrip("/") or "/"
        if path == "/stream":
            self._handle_stream()
        elif path == "/users":
            self._send_json(200, self.hub.roster_json())
        elif path == "/state":
            self._send_json(200, {u: s.to_json() for u, s in sorted(self.hub.state_map().items())})
        elif path.startswith("/card/"):
            self._with_user(path[len("/card/"):], lambda uid: self._send_json(200, self.hub.card(uid)))
        elif path.startswith("/prefs/"):
            self._with_user(path[len("/prefs/"):], lambda uid: self._send_json(200, self.hub.prefs_for(uid).to_json()))
        elif path.startswith("/aggregator-config/"):
            raw_kind = path[len("/aggregator-config/"):]
            try:
                kind = AggregatorKind(raw_kind)
            except ValueError:
                self._error(400, "unknown_kind", f"unknown aggregator kind {raw_kind!r}")
                return
            self._send_json(200, self.hub.allowlist(kind))
        else:
            self._error(404, "not_found", f"no such endpoint: {path}")

    def do_POST(self) -> None:
        if not self._authorized():
            return
        path = self.path.split("?", 1)[0].rstrip("/")
        handlers = {
            "/evidence": self._handle_evidence,
            "/status": self._handle_status,
            "/prefs": self._handle_prefs,
            "/session": self._handle_session,
        }
        handler = handlers.get(path)
        if handler is None:
            self._error(404, "not_found", f"no such endpoint: {path}")
            return
        doc = self._read_body()
        if doc is not None:
            handler(doc)

    def _with_user(self, user_id: str, respond) -> None:
        try:
            respond(user_id)
        except UnknownUser:
            self._error(404, "unknown_user", f"unknown user {user_id!r}")

    # -- endpoint handlers -------------------------------------------------------

    def _handle_evidence(self, doc: dict) -> None:
        try:
            ev, state = self.hub.submit_evidence(doc)
        except UnknownUser as exc:
            self._error(404, "unknown_user", f"unknown user {exc.args[0]!r}")
        except OptInDisabled as exc:
            self._error(403, "opt_in_disabled", str(exc))
        except FutureTimestamp as exc:
            self._error(400, "future_timestamp", str(exc))
        except MalformedEvidence as exc:
            self._error(400, "malformed_evidence", str(exc))
        else:
            self._send_json(200, {
                "result": "accepted",
                "user_id": ev.user_id,
                "at": ev.to_json()["observed_at"],
                "state": state.to_json(),
            })

    def _handle_status(self, doc: dict) -> None:
        user_id = doc.get("user_id")
        text = doc.get("text")
        if not isinstance(user_id, str) or not isinstance(text, str):
            self._error(400, "malformed", "status post requires user_id and text strings")
            return
        try:
            msg = self.hub.post_status(user_id, text)
        except UnknownUser:
            self._error(404, "unknown_user", f"unknown user {user_id!r}")
        except ValueError as exc:
            self._error(400, "over_length", str(exc))
        else:
            self._send_json(200, msg.to_json())

    def _handle_prefs(self, doc: dict) -> None:
        try:
            changed = self.hub.update_prefs(doc)
        except UnknownUser as exc:
            self._error(404, "unknown_user", f"unknown user {exc.args[0]!r}")
        except MalformedEvidence as exc:
            self._error(400, "malformed", str(exc))
        else:
            self._send_json(200, {"result": "ok", "changed": changed})

    def _handle_session(self, doc: dict) -> None:
        user_id = doc.get("user_id")
        kind = doc.get("kind")
        if not isinstance(user_id, str) or not isinstance(kind, str):
            self._error(400, "malformed", "session event requires user_id and kind strings")
            return
        try:
            event = self.hub.record_session_event(user_id, kind)
        except UnknownUser:
            self._error(404, "unknown_user", f"unknown user {user_id!r}")
        except ValueError as exc:
            self._error(400, "malformed", str(exc))
        else:
            self._send_json(200, event.to_json())

    # -- the stream ---------------------------------------------------------------

    def _handle_stream(self) -> None:
        """Long-lived NDJSON subscription: Snapshot first, then deltas/feed,
        heartbeat after each silent interval; per-connection seq has no gaps.

        Chunked transfer with one chunk per frame so clients see each line
        as soon as it is written.
        """
        sub = self.hub.subscribe()
        heartbeat_s = self.server.deployment.heartbeat_interval_s  # type: ignore[attr-defined]
        self.send_response(200)
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-store")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Transfer-Encoding", "chunked")
        self.send_header("Connection", "close")
        self.end_headers()
        self.close_connection = True
        seq = 0
        try:
            while not sub.dead:
                try:
                    item = sub.frames.get(timeout=heartbeat_s)
                    if item is None:  # wake sentinel; re-check liveness
                        continue
                    kind, payload = item
                except queue.Empty:
                    kind, payload = "heartbeat", {}
                seq += 1
                line = _json_bytes({"seq": seq, "kind": kind, "payload": payload}) + b"\n"
                self.wfile.write(f"{len(line):X}\r\n".encode("ascii") + line + b"\r\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, TimeoutError, OSError):
            pass  # client went away; the subscription is released below
        finally:
            self.hub.unsubscribe(sub)
            try:
                self.wfile.write(b"0\r\n\r\n")
            except OSError:
                pass


class HubServer:
    """Hub + HTTP server + background sweep, with clean start/stop."""

    def __init__(self, config: DeploymentConfig, clock=None):
        self.config = config
        self.hub = PresenceHub(config, clock=clock)
        self.httpd = ThreadingHTTPServer((config.host, config.port), HubRequestHandler)
        self.httpd.daemon_threads = True
        self.httpd.block_on_close = False
        self.httpd.hub = self.hub  # type: ignore[attr-defined]
        self.httpd.deployment = config  # type: ignore[attr-defined]
        self._serve_thread: Optional[threading.Thread] = None
        self._sweep_stop = threading.Event()
        self._sweep_thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    def _sweep_loop(self) -> None:
        while not self._sweep_stop.wait(self.config.sweep_interval_s):
            try:
                self.hub.sweep_tick()
            except Exception:
                logger.exception("sweep tick failed")

    def start(self) -> None:
        self._serve_thread = threading.Thread(
            target=self.httpd.serve_forever, name="presence-hub-http", daemon=True
        )
        self._serve_thread.start()
        self._sweep_thread = threading.Thread(
            target=self._sweep_loop, name="presence-hub-sweep", daemon=True
        )
        self._sweep_thread.start()
        logger.info("presence hub listening on %s", self.url)

    def stop(self) -> None:
        self._sweep_stop.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._serve_thread:
            self._serve_thread.join(timeout=5)
        if self._sweep_thread:
            self._sweep_thread.join(timeout=5)
        self.hub.close()

    def run_until_interrupt(self) -> None:
        self.start()
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            logger.info("shutting down")
        finally:
            self.stop()
