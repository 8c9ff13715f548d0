"""Evidence producers: the five aggregators plus the scenario replay driver."""

from presence_hub.aggregators.calendar_feed import parse_calendar
from presence_hub.aggregators.computer import probe_computer
from presence_hub.aggregators.device import reduce_sightings
from presence_hub.aggregators.im import poll_im
from presence_hub.aggregators.replay import ReplayReport, ScenarioScript, replay_scenario
from presence_hub.aggregators.runner import (
    CalendarAggregator,
    ComputerClientAggregator,
    DeviceProximityAggregator,
    ImAggregator,
    PollingAggregator,
    ServerTransport,
    VisionAggregator,
)
from presence_hub.aggregators.vision import (
    Frame,
    MotionParams,
    Region,
    RegionRole,
    motion_detect,
    read_pgm,
    write_pgm,
)

__all__ = [
    "CalendarAggregator",
    "ComputerClientAggregator",
    "DeviceProximityAggregator",
    "Frame",
    "ImAggregator",
    "MotionParams",
    "PollingAggregator",
    "Region",
    "RegionRole",
    "ReplayReport",
    "ScenarioScript",
    "ServerTransport",
    "VisionAggregator",
    "motion_detect",
    "parse_calendar",
    "poll_im",
    "probe_computer",
    "read_pgm",
    "reduce_sightings",
    "replay_scenario",
    "write_pgm",
]
