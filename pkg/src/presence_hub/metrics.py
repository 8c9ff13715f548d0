"""Study-style metrics computed offline from the instrumentation log.

Visibility of a status message is the time until the same user's next post
(the last message is measured to the report time). Dashboard sessions pair
DashboardOpen/DashboardClose per user in timestamp order; an unmatched open
is measured to the report time, an unmatched close is ignored with a warning.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

from presence_hub.model import LogEvent, LogEventKind, format_ts

SECONDS_PER_HOUR = 3600.0


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = statistics.mean(values)
    sd = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


@dataclass
class UserMetrics:
    user_id: str
    posts: int = 0
    nonblank: int = 0
    blank: int = 0
    mean_visibility_h: float = 0.0
    sd_visibility_h: float = 0.0
    dashboard_opens: int = 0
    open_hours: float = 0.0

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "posts": self.posts,
            "nonblank": self.nonblank,
            "blank": self.blank,
            "mean_visibility_h": round(self.mean_visibility_h, 4),
            "sd_visibility_h": round(self.sd_visibility_h, 4),
            "dashboard_opens": self.dashboard_opens,
            "open_hours": round(self.open_hours, 4),
        }


@dataclass
class GroupStats:
    count: int = 0
    mean_h: float = 0.0
    sd_h: float = 0.0

    def to_json(self) -> dict:
        return {"count": self.count, "mean_h": round(self.mean_h, 4), "sd_h": round(self.sd_h, 4)}


@dataclass
class MetricsReport:
    until: datetime
    users: list[UserMetrics] = field(default_factory=list)
    overall: GroupStats = field(default_factory=GroupStats)
    nonblank: GroupStats = field(default_factory=GroupStats)
    blank: GroupStats = field(default_factory=GroupStats)
    warnings: list[str] = field(default_factory=list)

    def user(self, user_id: str) -> UserMetrics:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    def to_json(self) -> dict:
        return {
            "until": format_ts(self.until),
            "per_user": [u.to_json() for u in self.users],
            "overall": self.overall.to_json(),
            "nonblank": self.nonblank.to_json(),
            "blank": self.blank.to_json(),
            "warnings": list(self.warnings),
        }

    def render_table(self) -> str:
        width = max([10] + [len(u.user_id) for u in self.users])
        lines = [f"status messages (visibility hours, until {format_ts(self.until)})"]
        lines.append(f"{'user':<{width}}  posts  nonblank  blank   mean_h     sd_h")
        for u in self.users:
            lines.append(
                f"{u.user_id:<{width}}  {u.posts:>5}  {u.nonblank:>8}  {u.blank:>5}"
                f"  {u.mean_visibility_h:>7.2f}  {u.sd_visibility_h:>7.2f}"
            )
        lines.append("")
        lines.append(f"{'group':<{width}}  count   mean_h     sd_h")
        for name, group in (("all", self.overall), ("nonblank", self.nonblank), ("blank", self.blank)):
            lines.append(f"{name:<{width}}  {group.count:>5}  {group.mean_h:>7.2f}  {group.sd_h:>7.2f}")
        lines.append("")
        lines.append("dashboard sessions")
        lines.append(f"{'user':<{width}}  opens   open_h")
        for u in self.users:
            lines.append(f"{u.user_id:<{width}}  {u.dashboard_opens:>5}  {u.open_hours:>7.2f}")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines) + "\n"


def compute_metrics(events: Iterable[LogEvent], until: datetime) -> MetricsReport:
    """Pure function of (events, until); event order is normalized by timestamp."""
    events = sorted(events, key=lambda e: e.at)
    report = MetricsReport(until=until)
    by_user: dict[str, UserMetrics] = {}

    def user_metrics(user_id: str) -> UserMetrics:
        if user_id not in by_user:
            by_user[user_id] = UserMetrics(user_id=user_id)
            report.users.append(by_user[user_id])
        return by_user[user_id]

    posts: dict[str, list[LogEvent]] = {}
    open_at: dict[str, datetime] = {}

    for event in events:
        metrics = user_metrics(event.user_id)
        if event.kind is LogEventKind.STATUS_POST:
            posts.setdefault(event.user_id, []).append(event)
        elif event.kind is LogEventKind.DASHBOARD_OPEN:
            metrics.dashboard_opens += 1
            if event.user_id in open_at:
                report.warnings.append(
                    f"{event.user_id}: duplicate dashboard open at {format_ts(event.at)}; keeping the earlier one"
                )
            else:
                open_at[event.user_id] = event.at
        elif event.kind is LogEventKind.DASHBOARD_CLOSE:
            opened = open_at.pop(event.user_id, None)
            if opened is None:
                report.warnings.append(
                    f"{event.user_id}: dashboard close without open at {format_ts(event.at)}; ignored"
                )
            else:
                metrics.open_hours += (event.at - opened).total_seconds() / SECONDS_PER_HOUR

    for user_id, opened in sorted(open_at.items()):
        duration = (until - opened).total_seconds()
        if duration < 0:
            report.warnings.append(
                f"{user_id}: dashboard open at {format_ts(opened)} is after --until; ignored"
            )
            continue
        user_metrics(user_id).open_hours += duration / SECONDS_PER_HOUR

    all_h: list[float] = []
    nonblank_h: list[float] = []
    blank_h: list[float] = []
    for user_id, user_posts in sorted(posts.items()):
        metrics = user_metrics(user_id)
        durations: list[float] = []
        for i, event in enumerate(user_posts):
            text = str(event.detail.get("text", ""))
            end = user_posts[i + 1].at if i + 1 < len(user_posts) else until
            seconds = (end - event.at).total_seconds()
            if seconds < 0:
                report.warnings.append(
                    f"{user_id}: post at {format_ts(event.at)} is after --until; visibility clamped to 0"
                )
                seconds = 0.0
            hours = seconds / SECONDS_PER_HOUR
            durations.append(hours)
            all_h.append(hours)
            metrics.posts += 1
            if text:
                metrics.nonblank += 1
                nonblank_h.append(hours)
            else:
                metrics.blank += 1
                blank_h.append(hours)
        metrics.mean_visibility_h, metrics.sd_visibility_h = _mean_sd(durations)

    report.users.sort(key=lambda u: u.user_id)
    for group, values in ((report.overall, all_h), (report.nonblank, nonblank_h), (report.blank, blank_h)):
        group.count = len(values)
        group.mean_h, group.sd_h = _mean_sd(values)
    return report
