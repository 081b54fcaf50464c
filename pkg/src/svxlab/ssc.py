"""Supervoxel shape context: per-frame log-polar histograms of supervoxel
boundary pixels around the flow reference point, aggregated into a video
descriptor.

The histogram has 5 radial and 12 angular bins. The five rings are
geometrically spaced over [r_max/16, r_max]; points closer than r_max/16
fall into the innermost ring and points beyond r_max are discarded.
The angle is measured from the image +x axis, counterclockwise.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .motion import FlowField, ReferencePoint, flow_center_of_mass
from .segmentation import SupervoxelLabeling
from .visualization import boundary_mask

SVXD_MAGIC = b"SVXD"

RADIAL_BINS = 5
ANGULAR_BINS = 12
BIN_COUNT = RADIAL_BINS * ANGULAR_BINS
RADIAL_SPAN = 16.0  # r_max / innermost ring boundary


class SSCError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class SSCFrameHistogram:
    """Raw 5x12 bin counts for one frame, flattened radial-major."""

    frame_index: int
    reference: ReferencePoint
    bins: np.ndarray  # (60,) float64 counts

    def __post_init__(self):
        if self.bins.shape != (BIN_COUNT,):
            raise SSCError(f"expected {BIN_COUNT} bins, got {self.bins.shape}")

    def normalized(self) -> np.ndarray:
        total = self.bins.sum()
        return self.bins / total if total > 0 else np.zeros(BIN_COUNT)


@dataclass(frozen=True, eq=False)
class SSCVideoDescriptor:
    per_frame: list[SSCFrameHistogram]
    aggregate: np.ndarray  # (60,) mean of L1-normalized frame histograms


def boundary_points(s: SupervoxelLabeling, frame_index: int) -> np.ndarray:
    """(n, 2) array of (x, y) pixel coordinates on supervoxel boundaries."""
    if not 0 <= frame_index < s.labels.shape[0]:
        raise SSCError(f"frame {frame_index} out of range")
    ys, xs = np.nonzero(boundary_mask(s)[frame_index])
    return np.column_stack([xs, ys]).astype(np.float64)


def log_polar_histogram(points: np.ndarray, center: ReferencePoint, r_max: float) -> SSCFrameHistogram:
    """Bin points into 5 geometric rings x 12 angular sectors around the
    center. Points at zero distance carry no angle and are excluded, like
    points beyond r_max."""
    if r_max <= 0:
        raise SSCError(f"r_max must be positive, got {r_max}")
    bins = np.zeros(BIN_COUNT, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(points):
        dx = points[:, 0] - center.x
        dy = points[:, 1] - center.y
        d = np.hypot(dx, dy)
        keep = (d > 0) & (d <= r_max)
        dx, dy, d = dx[keep], dy[keep], d[keep]
        if len(d):
            # Ring i covers (r_max * s^(i-5), r_max * s^(i-4)] with
            # s = 16^(1/5); ring 0 additionally catches everything closer.
            ring = np.ceil(RADIAL_BINS * np.log(d / r_max) / math.log(RADIAL_SPAN)).astype(int)
            ring = np.clip(ring + RADIAL_BINS - 1, 0, RADIAL_BINS - 1)
            theta = np.arctan2(dy, dx) % (2 * math.pi)
            sector = np.minimum((theta / (2 * math.pi / ANGULAR_BINS)).astype(int),
                                ANGULAR_BINS - 1)
            np.add.at(bins, ring * ANGULAR_BINS + sector, 1.0)
    return SSCFrameHistogram(frame_index=center.frame_index, reference=center, bins=bins)


def default_r_max(width: int, height: int) -> float:
    """Half the frame diagonal: covers the frame from any reference point."""
    return 0.5 * math.hypot(width, height)


def ssc_descriptor(s: SupervoxelLabeling, f: FlowField) -> SSCVideoDescriptor:
    """Per-frame histograms at the flow center of mass, aggregated as the
    mean of the L1-normalized histograms of frames that have boundary
    points; all-zero when no frame does."""
    frames, height, width = s.labels.shape
    if (f.height, f.width) != (height, width) or f.pair_count != frames - 1:
        raise SSCError(
            f"labeling {frames}x{height}x{width} and flow "
            f"{f.pair_count + 1}x{f.height}x{f.width} do not share dimensions")
    r_max = default_r_max(width, height)
    mask = boundary_mask(s)
    per_frame = []
    normalized = []
    for t in range(frames):
        ys, xs = np.nonzero(mask[t])
        pts = np.column_stack([xs, ys]).astype(np.float64)
        ref = flow_center_of_mass(f, t)
        hist = log_polar_histogram(pts, ref, r_max)
        per_frame.append(hist)
        if hist.bins.sum() > 0:
            normalized.append(hist.normalized())
    aggregate = np.mean(normalized, axis=0) if normalized else np.zeros(BIN_COUNT)
    return SSCVideoDescriptor(per_frame=per_frame, aggregate=aggregate)


def write_descriptor(d: SSCVideoDescriptor, path: str | Path) -> None:
    """SVXD file: magic, u32-LE frame count, 60 float32 raw counts per
    frame, then the 60 float32 aggregate."""
    with open(path, "wb") as f:
        f.write(SVXD_MAGIC)
        f.write(struct.pack("<I", len(d.per_frame)))
        for hist in d.per_frame:
            f.write(hist.bins.astype("<f4").tobytes())
        f.write(d.aggregate.astype("<f4").tobytes())


def read_descriptor(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (per-frame count matrix (n, 60), aggregate (60,))."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SVXD_MAGIC:
            raise SSCError(f"{path}: bad magic {magic!r}, expected {SVXD_MAGIC!r}")
        (n,) = struct.unpack("<I", f.read(4))
        frames = np.frombuffer(f.read(n * BIN_COUNT * 4), dtype="<f4").reshape(n, BIN_COUNT)
        aggregate = np.frombuffer(f.read(BIN_COUNT * 4), dtype="<f4")
    return frames.astype(np.float64), aggregate.astype(np.float64)


def export_descriptors_text(rows: list[tuple[str, str, str, str, str, np.ndarray]],
                            path: str | Path) -> None:
    """Plain-text descriptor exchange format, one line per video:
    ``<video_id> <actor> <action> <background> <level> v1 ... vd``."""
    with open(path, "w") as f:
        for video_id, actor, action, background, level, vec in rows:
            values = " ".join(repr(float(x)) for x in vec)
            f.write(f"{video_id} {actor} {action} {background} {level} {values}\n")
