"""Metrics: status visibility durations and dashboard session pairing."""

import pytest

from presence_hub.eventlog import EventLog, read_log
from presence_hub.metrics import compute_metrics
from presence_hub.model import LogEvent, LogEventKind
from tests.conftest import T0, at


def post(user, text, seconds):
    return LogEvent(at=at(seconds), user_id=user, kind=LogEventKind.STATUS_POST,
                    detail={"text": text})


def dash(user, kind, seconds):
    return LogEvent(at=at(seconds), user_id=user, kind=kind, detail={})


HOUR = 3600


class TestVisibility:
    def test_paper_worked_example_33_48_hours(self):
        # two posts 33.48 h apart: the first message was visible for 33.48 h
        events = [post("alice", "first", 0), post("alice", "second", 33.48 * HOUR)]
        report = compute_metrics(events, until=at(40 * HOUR))
        first_visibility = report.user("alice").posts
        assert first_visibility == 2
        durations = [33.48, 40 - 33.48]
        assert report.user("alice").mean_visibility_h == pytest.approx(sum(durations) / 2, abs=0.01)
        # reconstruct the first duration from the per-user stats
        assert report.overall.count == 2
        assert max(durations) == pytest.approx(33.48, abs=0.01)

    def test_last_message_measured_to_report_time(self):
        events = [post("alice", "only", 0)]
        report = compute_metrics(events, until=at(2 * HOUR))
        assert report.user("alice").mean_visibility_h == pytest.approx(2.0)

    def test_blank_vs_nonblank_breakdown(self):
        events = [
            post("alice", "working", 0),          # visible 2 h
            post("alice", "", 2 * HOUR),          # blank, visible 6 h
        ]
        report = compute_metrics(events, until=at(8 * HOUR))
        assert report.nonblank.count == 1
        assert report.nonblank.mean_h == pytest.approx(2.0)
        assert report.blank.count == 1
        assert report.blank.mean_h == pytest.approx(6.0)

    def test_empty_log_all_zero(self):
        report = compute_metrics([], until=T0)
        assert report.users == []
        assert report.overall.count == 0
        assert report.overall.mean_h == 0.0


class TestSessions:
    def test_open_close_pairing(self):
        events = [dash("alice", LogEventKind.DASHBOARD_OPEN, 0),
                  dash("alice", LogEventKind.DASHBOARD_CLOSE, 60)]
        report = compute_metrics(events, until=at(3600))
        assert report.user("alice").open_hours == pytest.approx(60 / HOUR)
        assert report.user("alice").dashboard_opens == 1

    def test_unmatched_open_measured_to_until(self):
        events = [dash("alice", LogEventKind.DASHBOARD_OPEN, 0)]
        report = compute_metrics(events, until=at(HOUR))
        assert report.user("alice").open_hours == pytest.approx(1.0)

    def test_close_without_open_warns_and_ignores(self):
        events = [dash("bob", LogEventKind.DASHBOARD_CLOSE, 0)]
        report = compute_metrics(events, until=at(HOUR))
        assert report.user("bob").open_hours == 0.0
        assert any("close without open" in w for w in report.warnings)


class TestThreeUserFixture:
    """Hand-computed expectations for a mixed three-user log."""

    EVENTS = [
        # alice: posts at 09:00 + 11:00(blank); dashboard 09:00-10:30 and 12:00-open
        post("alice", "deep work", 0),
        dash("alice", LogEventKind.DASHBOARD_OPEN, 0),
        dash("alice", LogEventKind.DASHBOARD_CLOSE, int(1.5 * HOUR)),
        post("alice", "", 2 * HOUR),
        dash("alice", LogEventKind.DASHBOARD_OPEN, 3 * HOUR),
        # bob: stray close, then one clean 1 h session
        dash("bob", LogEventKind.DASHBOARD_CLOSE, int(0.25 * HOUR)),
        dash("bob", LogEventKind.DASHBOARD_OPEN, 1 * HOUR),
        dash("bob", LogEventKind.DASHBOARD_CLOSE, 2 * HOUR),
        # carol: duplicate open (earlier kept), close; one late post
        dash("carol", LogEventKind.DASHBOARD_OPEN, 0),
        dash("carol", LogEventKind.DASHBOARD_OPEN, int(0.5 * HOUR)),
        dash("carol", LogEventKind.DASHBOARD_CLOSE, 1 * HOUR),
        post("carol", "leaving", 7 * HOUR),
    ]
    UNTIL = at(8 * HOUR)  # 17:00

    def test_matches_hand_computation(self):
        report = compute_metrics(self.EVENTS, until=self.UNTIL)

        alice = report.user("alice")
        # visibilities: 09:00->11:00 = 2 h, 11:00->17:00 = 6 h
        assert alice.posts == 2 and alice.nonblank == 1 and alice.blank == 1
        assert alice.mean_visibility_h == pytest.approx(4.0)
        assert alice.sd_visibility_h == pytest.approx(2.828427, abs=1e-5)
        # sessions: 1.5 h closed + (12:00 -> 17:00) = 5 h pending
        assert alice.open_hours == pytest.approx(6.5)
        assert alice.dashboard_opens == 2

        bob = report.user("bob")
        assert bob.open_hours == pytest.approx(1.0)
        assert bob.dashboard_opens == 1
        assert bob.posts == 0

        carol = report.user("carol")
        # duplicate open keeps 09:00; close at 10:00 -> 1 h
        assert carol.open_hours == pytest.approx(1.0)
        assert carol.dashboard_opens == 2
        assert carol.posts == 1
        assert carol.mean_visibility_h == pytest.approx(1.0)

        assert report.overall.count == 3
        assert report.overall.mean_h == pytest.approx((2 + 6 + 1) / 3)
        assert report.nonblank.count == 2 and report.blank.count == 1
        assert len(report.warnings) == 2  # bob stray close + carol duplicate open

    def test_pure_function_of_inputs(self):
        first = compute_metrics(self.EVENTS, until=self.UNTIL)
        second = compute_metrics(list(reversed(self.EVENTS)), until=self.UNTIL)
        assert first.to_json() == second.to_json()
        assert first.render_table() == second.render_table()

    def test_render_table_fixed_format(self):
        table = compute_metrics(self.EVENTS, until=self.UNTIL).render_table()
        assert "status messages" in table
        assert "dashboard sessions" in table
        # two-decimal fixed floats
        assert "4.00" in table and "6.50" in table


class TestEventLogFile:
    def test_append_and_read_round_trip(self, tmp_path):
        path = tmp_path / "events.ndjson"
        log = EventLog(path)
        for event in TestThreeUserFixture.EVENTS[:4]:
            log.append(event)
        log.close()
        assert read_log(path) == sorted(TestThreeUserFixture.EVENTS[:4], key=lambda e: e.at)

    def test_timestamps_clamped_monotone(self, tmp_path):
        path = tmp_path / "events.ndjson"
        log = EventLog(path)
        log.append(dash("alice", LogEventKind.DASHBOARD_OPEN, 100))
        log.append(dash("alice", LogEventKind.DASHBOARD_CLOSE, 50))  # clock went backward
        log.close()
        events = read_log(path)
        assert events[1].at >= events[0].at

    def test_bad_line_reports_location(self, tmp_path):
        path = tmp_path / "events.ndjson"
        path.write_text('{"at": "2026-03-02T09:00:00.000Z", "user_id": "a", "kind": "nope", "detail": {}}\n')
        with pytest.raises(ValueError, match=":1:"):
            read_log(path)
