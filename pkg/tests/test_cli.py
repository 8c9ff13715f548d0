"""Command line: serve diagnostics, sim replay, fuzz, metrics output."""

import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import requests

from presence_hub.cli import main
from presence_hub.httpd import HubServer
from tests.conftest import make_config

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def write_sim_config(tmp_path, port) -> Path:
    doc = json.loads((FIXTURES / "sim-config.json").read_text())
    doc["listen"] = {"host": "127.0.0.1", "port": port}
    doc["log_file"] = str(tmp_path / "events.ndjson")
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestServeErrors:
    def test_missing_config_names_path(self, capsys):
        code = main(["serve", "/nowhere/missing-config.json"])
        assert code == 1
        assert "missing-config.json" in capsys.readouterr().err

    def test_unknown_optin_user_named(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "users": [{"user_id": "alice", "display_name": "Alice"}],
            "opt_ins": [{"user_id": "ghost",
                         "enabled": {k: True for k in (
                             "office_vision", "device_presence", "computer_client",
                             "calendar", "im_presence")},
                         "show_location": False}],
        }))
        code = main(["serve", str(path)])
        assert code == 1
        assert "ghost" in capsys.readouterr().err

    def test_invalid_json_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        assert main(["serve", str(path)]) == 1
        assert "invalid JSON" in capsys.readouterr().err


class TestServeProcess:
    def test_serves_roster_until_terminated(self, tmp_path):
        port = free_port()
        config = write_sim_config(tmp_path, port)
        proc = subprocess.Popen(
            [sys.executable, "-m", "presence_hub", "serve", str(config)],
            cwd=str(tmp_path),
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
        )
        try:
            deadline = time.monotonic() + 10
            roster = None
            while time.monotonic() < deadline:
                try:
                    roster = requests.get(f"http://127.0.0.1:{port}/users", timeout=1).json()
                    break
                except requests.ConnectionError:
                    time.sleep(0.1)
            assert roster is not None, "server never came up"
            assert [u["user_id"] for u in roster] == ["alice", "bob", "carol"]
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_port_env_override(self, tmp_path, monkeypatch):
        port = free_port()
        monkeypatch.setenv("PRESENCE_HUB_PORT", str(port))
        config = write_sim_config(tmp_path, port=1)  # file says a bogus port
        from presence_hub.config import DeploymentConfig
        assert DeploymentConfig.load(config).port == port


class TestSim:
    def test_office_day_replay_roundtrip(self, tmp_path):
        config = make_config(tmp_path)
        server = HubServer(config)
        server.start()
        try:
            cfg_path = write_sim_config(tmp_path, server.port)
            timeline = tmp_path / "timeline.ndjson"
            started = time.monotonic()
            code = main(["sim", str(cfg_path), str(FIXTURES / "office_day.json"),
                         "--speed", "200", "--timeline", str(timeline)])
            wall = time.monotonic() - started
            assert code == 0
            # pacing is scripted span / speed, plus request overhead
            scripted_span_s = 8.8
            assert wall < scripted_span_s / 200 + 2.0
            lines = timeline.read_text().strip().splitlines()
            assert len(lines) == 14
            rejected = [json.loads(l) for l in lines if json.loads(l).get("result") == "rejected"]
            assert len(rejected) == 0  # this server config enables everything
        finally:
            server.stop()

    def test_sim_counts_rejections(self, tmp_path, capsys):
        # bob's camera is disabled in the fixture config
        doc = json.loads((FIXTURES / "sim-config.json").read_text())
        doc["listen"] = {"host": "127.0.0.1", "port": 0}
        doc["log_file"] = str(tmp_path / "events.ndjson")
        from presence_hub.config import DeploymentConfig
        server = HubServer(DeploymentConfig.from_json(doc))
        server.start()
        try:
            cfg_path = write_sim_config(tmp_path, server.port)
            code = main(["sim", str(cfg_path), str(FIXTURES / "office_day.json"),
                         "--speed", "200"])
            assert code == 0
            out = capsys.readouterr().out
            assert json.loads(out.strip().splitlines()[-1]) == {"sent": 14, "rejected": 1}
        finally:
            server.stop()

    def test_unreachable_server_exits_1(self, tmp_path, capsys):
        cfg_path = write_sim_config(tmp_path, free_port())  # nothing listening
        code = main(["sim", str(cfg_path), str(FIXTURES / "office_day.json"), "--speed", "1000"])
        assert code == 1


class TestFuzzCommand:
    def test_pass_and_reproducible(self, capsys):
        assert main(["fuzz", "--cases", "100", "--seed", "3"]) == 0
        first = capsys.readouterr().out
        assert main(["fuzz", "--cases", "100", "--seed", "3"]) == 0
        second = capsys.readouterr().out
        assert first == second
        assert "result:     PASS" in first
        assert "exhaustive: 1296 cases, 0 mismatches" in first

    def test_cases_zero_runs_exhaustive_only(self, capsys):
        assert main(["fuzz", "--cases", "0", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "exhaustive: 1296" in out
        assert "random:     0 cases" in out


class TestMetricsCommand:
    def test_json_and_table(self, tmp_path, capsys):
        log = tmp_path / "log.ndjson"
        log.write_text(
            '{"at":"2026-03-02T09:00:00.000Z","user_id":"alice","kind":"status_post","detail":{"text":"hi"}}\n'
            '{"at":"2026-03-02T10:00:00.000Z","user_id":"alice","kind":"dashboard_open","detail":{}}\n'
        )
        code = main(["metrics", str(log), "--until", "2026-03-02T11:00:00.000Z"])
        assert code == 0
        out = capsys.readouterr().out
        json_part = out.split("\n\n")[0]
        doc = json.loads(json_part)
        assert doc["per_user"][0]["user_id"] == "alice"
        assert doc["per_user"][0]["mean_visibility_h"] == 2.0
        assert "dashboard sessions" in out

    def test_missing_log_exits_1(self, capsys):
        assert main(["metrics", "/nowhere/log.ndjson"]) == 1
