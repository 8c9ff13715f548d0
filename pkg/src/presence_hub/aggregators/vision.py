"""Vision office-activity detection: frame differencing over configured regions.

Frames come from files/fixtures (binary PGM, 8-bit grayscale) rather than
camera hardware; the detector itself is real. Motion is reported per region
role: enough changed pixels inside the union of that role's regions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from presence_hub.model import OfficeMotionPayload


class RegionRole(Enum):
    OCCUPANT = "occupant"
    VISITOR = "visitor"


@dataclass(frozen=True)
class Region:
    """Axis-aligned pixel rectangle tagged with who occupies it."""
    x: int
    y: int
    width: int
    height: int
    role: RegionRole

    def validate(self) -> None:
        if self.x < 0 or self.y < 0:
            raise ValueError("region origin must be non-negative")
        if self.width < 1 or self.height < 1:
            raise ValueError("region width and height must be >= 1")

    def validate_within(self, frame: "Frame") -> None:
        self.validate()
        if self.x + self.width > frame.width or self.y + self.height > frame.height:
            raise ValueError(
                f"region {self.x},{self.y} {self.width}x{self.height} "
                f"exceeds frame bounds {frame.width}x{frame.height}"
            )

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width,
                "height": self.height, "role": self.role.value}

    @classmethod
    def from_json(cls, doc: dict) -> "Region":
        region = cls(
            x=int(doc["x"]), y=int(doc["y"]),
            width=int(doc["width"]), height=int(doc["height"]),
            role=RegionRole(doc["role"]),
        )
        region.validate()
        return region


def load_regions(path: Union[str, Path]) -> list[Region]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise ValueError(f"{path}: region config must be a JSON list")
    return [Region.from_json(r) for r in doc]


@dataclass(frozen=True)
class Frame:
    """8-bit grayscale frame, row-major."""
    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel buffer is {len(self.pixels)} bytes, expected {self.width * self.height}"
            )

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)


@dataclass(frozen=True)
class MotionParams:
    """Differencing thresholds: per-pixel delta and changed-area fraction."""
    pixel_threshold: int = 16
    area_fraction: float = 0.01

    def validate(self) -> None:
        if self.pixel_threshold < 1:
            raise ValueError("pixel_threshold must be >= 1")
        if not 0 < self.area_fraction <= 1:
            raise ValueError("area_fraction must be in (0, 1]")


_PGM_HEADER = re.compile(rb"^P5\s")


def read_pgm(data: Union[bytes, str, Path]) -> Frame:
    """Parse a binary PGM (P5, maxval <= 255). Accepts bytes or a path."""
    if not isinstance(data, bytes):
        data = Path(data).read_bytes()
    if not _PGM_HEADER.match(data):
        raise ValueError("not a binary PGM (P5) file")

    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed through end-of-line.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol == -1 else eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval

    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ValueError("bad PGM header tokens") from None
    if maxval > 255 or maxval < 1:
        raise ValueError(f"unsupported PGM maxval {maxval} (need 8-bit)")
    pixels = data[pos : pos + width * height]
    if len(pixels) != width * height:
        raise ValueError("PGM pixel data truncated")
    return Frame(width=width, height=height, pixels=bytes(pixels))


def write_pgm(frame: Frame) -> bytes:
    return f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii") + frame.pixels


def motion_detect(
    prev: Frame,
    cur: Frame,
    regions: Sequence[Region],
    params: MotionParams = MotionParams(),
) -> OfficeMotionPayload:
    """Per-role motion: changed-pixel count over the union of that role's
    regions must reach area_fraction of the union's size.

    Symmetric in |delta|, so swapping prev/cur gives identical output.
    """
    params.validate()
    if (prev.width, prev.height) != (cur.width, cur.height):
        raise ValueError(
            f"frame dimensions differ: {prev.width}x{prev.height} vs {cur.width}x{cur.height}"
        )
    for region in regions:
        region.validate_within(cur)

    delta = np.abs(cur.as_array().astype(np.int16) - prev.as_array().astype(np.int16))
    changed = delta > params.pixel_threshold

    def role_motion(role: RegionRole) -> bool:
        mask = np.zeros((cur.height, cur.width), dtype=bool)
        for region in regions:
            if region.role is role:
                mask[region.y : region.y + region.height, region.x : region.x + region.width] = True
        total = int(mask.sum())
        if total == 0:
            return False
        return int(changed[mask].sum()) >= params.area_fraction * total

    return OfficeMotionPayload(
        occupant_motion=role_motion(RegionRole.OCCUPANT),
        visitor_motion=role_motion(RegionRole.VISITOR),
    )
