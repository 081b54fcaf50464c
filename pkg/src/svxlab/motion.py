"""Dense optical flow and the per-frame flow center of mass used as the
shape-context reference point.

Flow is Horn-Schunck on grayscale frames: a single scale, fixed iteration
count, quadratic smoothness regularizer. Descriptor extraction only needs
a magnitude-weighted centroid, which is robust to flow quality.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .video_io import VideoVolume

SVXF_MAGIC = b"SVXF"

HS_ALPHA = 15.0
HS_ITERATIONS = 100

# Below this total magnitude a frame counts as motionless and the
# reference point falls back to the frame center.
ZERO_MOTION_EPS = 1e-6


class MotionError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel (u, v) displacement for each consecutive frame pair."""

    u: np.ndarray  # (frame_count - 1, h, w)
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.ndim != 3:
            raise MotionError(f"u/v shape mismatch: {self.u.shape} vs {self.v.shape}")

    @property
    def pair_count(self) -> int:
        return self.u.shape[0]

    @property
    def height(self) -> int:
        return self.u.shape[1]

    @property
    def width(self) -> int:
        return self.u.shape[2]

    def magnitude(self, pair_index: int) -> np.ndarray:
        return np.hypot(self.u[pair_index], self.v[pair_index])


@dataclass(frozen=True)
class ReferencePoint:
    frame_index: int
    x: float
    y: float


def _grayscale(v: VideoVolume) -> np.ndarray:
    rgb = v.voxels.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def _hs_derivatives(f0: np.ndarray, f1: np.ndarray):
    """Averaged forward-difference estimators over the 2x2x2 cube."""
    pad = lambda a: np.pad(a, ((0, 1), (0, 1)), mode="edge")
    f0p, f1p = pad(f0), pad(f1)
    ex = np.zeros(f0.shape)
    ey = np.zeros(f0.shape)
    for f in (f0p, f1p):
        ex += f[:-1, 1:] + f[1:, 1:] - f[:-1, :-1] - f[1:, :-1]
        ey += f[1:, :-1] + f[1:, 1:] - f[:-1, :-1] - f[:-1, 1:]
    et = (f1p[:-1, :-1] + f1p[1:, :-1] + f1p[:-1, 1:] + f1p[1:, 1:]
          - f0p[:-1, :-1] - f0p[1:, :-1] - f0p[:-1, 1:] - f0p[1:, 1:])
    return ex / 4.0, ey / 4.0, et / 4.0


_AVG_KERNEL = np.array([[1 / 12, 1 / 6, 1 / 12],
                        [1 / 6, 0.0, 1 / 6],
                        [1 / 12, 1 / 6, 1 / 12]])


def _neighbor_average(a: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1, mode="edge")
    out = np.zeros_like(a)
    for dy in range(3):
        for dx in range(3):
            k = _AVG_KERNEL[dy, dx]
            if k:
                out += k * p[dy: dy + a.shape[0], dx: dx + a.shape[1]]
    return out


def compute_flow(v: VideoVolume, alpha: float = HS_ALPHA,
                 iterations: int = HS_ITERATIONS) -> FlowField:
    """Horn-Schunck flow for each consecutive frame pair; deterministic."""
    if v.frame_count < 2:
        raise MotionError("flow needs at least 2 frames")
    gray = _grayscale(v)
    n = v.frame_count - 1
    u = np.zeros((n, v.height, v.width))
    vv = np.zeros((n, v.height, v.width))
    a2 = alpha * alpha
    for i in range(n):
        ex, ey, et = _hs_derivatives(gray[i], gray[i + 1])
        denom = a2 + ex**2 + ey**2
        ui = np.zeros_like(ex)
        vi = np.zeros_like(ex)
        for _ in range(iterations):
            ubar = _neighbor_average(ui)
            vbar = _neighbor_average(vi)
            scale = (ex * ubar + ey * vbar + et) / denom
            ui = ubar - ex * scale
            vi = vbar - ey * scale
        u[i] = ui
        vv[i] = vi
    return FlowField(u=u, v=vv)


def flow_center_of_mass(f: FlowField, frame_index: int) -> ReferencePoint:
    """Magnitude-weighted centroid of a frame's flow. The last frame (which
    has no forward flow) reuses the final flow field. Frames with total
    magnitude below ZERO_MOTION_EPS fall back to the frame center."""
    if not 0 <= frame_index <= f.pair_count:
        raise MotionError(f"frame index {frame_index} out of range (0..{f.pair_count})")
    pair = min(frame_index, f.pair_count - 1)
    mag = f.magnitude(pair)
    total = float(mag.sum())
    if total < ZERO_MOTION_EPS:
        return ReferencePoint(frame_index=frame_index,
                              x=(f.width - 1) / 2.0, y=(f.height - 1) / 2.0)
    ys, xs = np.mgrid[0: f.height, 0: f.width]
    return ReferencePoint(
        frame_index=frame_index,
        x=float((mag * xs).sum() / total),
        y=float((mag * ys).sum() / total),
    )


def write_flow(f: FlowField, path: str | Path) -> None:
    """SVXF file: magic, three u32-LE (width, height, pair_count), then
    per-pixel float32-LE (u, v) pairs in (pair, y, x) raster order."""
    with open(path, "wb") as fh:
        fh.write(SVXF_MAGIC)
        fh.write(struct.pack("<III", f.width, f.height, f.pair_count))
        inter = np.stack([f.u, f.v], axis=-1).astype("<f4")
        fh.write(np.ascontiguousarray(inter).tobytes())


def read_flow(path: str | Path) -> FlowField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SVXF_MAGIC:
            raise MotionError(f"{path}: bad magic {magic!r}, expected {SVXF_MAGIC!r}")
        w, h, n = struct.unpack("<III", fh.read(12))
        raw = fh.read(w * h * n * 2 * 4)
    inter = np.frombuffer(raw, dtype="<f4").reshape(n, h, w, 2).astype(np.float64)
    return FlowField(u=inter[..., 0], v=inter[..., 1])
