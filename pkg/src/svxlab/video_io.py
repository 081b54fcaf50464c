"""Video volume ingestion, preprocessing, and emission.

Frames are kept in simple, dependency-free formats: binary PPM (P6)
sequences on disk (``frame_%05d.ppm``) and a single-file raw planar
volume ("SVXV"). A volume is a dense (frames, height, width, 3) RGB
array: uint8 at ingestion, float after smoothing.
"""

from __future__ import annotations

import io
import os
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SVXV_MAGIC = b"SVXV"
FRAME_NAME_RE = re.compile(r"^frame_(\d+)\.ppm$")


class VideoIOError(Exception):
    """Raised for malformed or inconsistent frame input."""


@dataclass(frozen=True, eq=False)
class VideoVolume:
    """Dense 3D lattice of RGB voxels, indexed (t, y, x)."""

    voxels: np.ndarray  # (frames, height, width, 3)

    def __post_init__(self):
        v = self.voxels
        if v.ndim != 4 or v.shape[3] != 3:
            raise VideoIOError(f"expected (frames, height, width, 3) array, got shape {v.shape}")
        if min(v.shape[:3]) < 1:
            raise VideoIOError(f"all volume dimensions must be >= 1, got shape {v.shape}")

    @property
    def frame_count(self) -> int:
        return self.voxels.shape[0]

    @property
    def height(self) -> int:
        return self.voxels.shape[1]

    @property
    def width(self) -> int:
        return self.voxels.shape[2]

    def frame(self, t: int) -> np.ndarray:
        return self.voxels[t]


def _read_ppm(path: Path) -> np.ndarray:
    """Read one binary PPM (P6) frame as a (h, w, 3) uint8 array."""
    data = path.read_bytes()
    if not data.startswith(b"P6"):
        raise VideoIOError(f"{path}: not a binary PPM (P6) file")

    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise VideoIOError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval

    width, height, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise VideoIOError(f"{path}: only maxval 255 supported, got {maxval}")
    expected = width * height * 3
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise VideoIOError(f"{path}: expected {expected} raster bytes, found {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def _write_ppm(path: Path, frame: np.ndarray) -> None:
    h, w = frame.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(np.ascontiguousarray(frame, dtype=np.uint8).tobytes())


def _frames_from_directory(directory: Path) -> list[Path]:
    found = {}
    for name in os.listdir(directory):
        m = FRAME_NAME_RE.match(name)
        if m:
            found[int(m.group(1))] = directory / name
    if not found:
        raise VideoIOError(f"{directory}: no frame_%05d.ppm files found")
    count = max(found) + 1
    for i in range(count):
        if i not in found:
            raise VideoIOError(f"missing frame {i}")
    return [found[i] for i in range(count)]


def load_frames(source: str | Path) -> VideoVolume:
    """Ingest a video volume from a directory of PPM frames, a printf-style
    frame pattern, or a raw SVXV volume file.

    Frame indices must be contiguous from 0 and all frames must share
    dimensions; byte values are preserved exactly.
    """
    source = Path(source)
    if source.is_file() and source.suffix == ".svxv":
        return read_raw_volume(source)
    if source.is_dir():
        paths = _frames_from_directory(source)
    elif "%" in source.name:
        paths = []
        i = 0
        while True:
            p = source.parent / (source.name % i)
            if not p.exists():
                break
            paths.append(p)
            i += 1
        if not paths:
            raise VideoIOError(f"no frames match pattern {source}")
    else:
        raise VideoIOError(f"{source}: not a directory, frame pattern, or .svxv file")

    frames = []
    shape = None
    for i, p in enumerate(paths):
        frame = _read_ppm(p)
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise VideoIOError(
                f"frame {i} ({p.name}) has dimensions {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {shape[1]}x{shape[0]}"
            )
        frames.append(frame)
    return VideoVolume(np.stack(frames))


def write_frames(v: VideoVolume, directory: str | Path) -> None:
    """Emit a volume as frame_%05d.ppm files (uint8 clamped)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = np.clip(np.rint(v.voxels), 0, 255).astype(np.uint8) if v.voxels.dtype != np.uint8 else v.voxels
    for t in range(v.frame_count):
        _write_ppm(directory / f"frame_{t:05d}.ppm", data[t])


def read_raw_volume(path: str | Path) -> VideoVolume:
    """Read an SVXV file: magic, three u32-LE (width, height, frames), RGB bytes."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SVXV_MAGIC:
            raise VideoIOError(f"{path}: bad magic {magic!r}, expected {SVXV_MAGIC!r}")
        width, height, frame_count = struct.unpack("<III", f.read(12))
        expected = width * height * frame_count * 3
        raster = f.read(expected)
        if len(raster) != expected:
            raise VideoIOError(f"{path}: expected {expected} voxel bytes, found {len(raster)}")
    voxels = np.frombuffer(raster, dtype=np.uint8).reshape(frame_count, height, width, 3)
    return VideoVolume(voxels.copy())


def write_raw_volume(v: VideoVolume, path: str | Path) -> None:
    data = np.clip(np.rint(v.voxels), 0, 255).astype(np.uint8) if v.voxels.dtype != np.uint8 else v.voxels
    with open(path, "wb") as f:
        f.write(SVXV_MAGIC)
        f.write(struct.pack("<III", v.width, v.height, v.frame_count))
        f.write(np.ascontiguousarray(data).tobytes())


def resize_bilinear(v: VideoVolume, target_w: int, target_h: int, preserve_aspect: bool = False) -> VideoVolume:
    """Per-frame bilinear resampling with half-pixel-center alignment.

    With preserve_aspect set, the output fits within the target box while
    keeping the source aspect ratio (scaled dims, no padding). Resizing to
    the source dimensions is the identity.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target dimensions must be >= 1, got {target_w}x{target_h}")
    if preserve_aspect:
        scale = min(target_w / v.width, target_h / v.height)
        target_w = max(1, round(v.width * scale))
        target_h = max(1, round(v.height * scale))
    if target_w == v.width and target_h == v.height:
        return v

    src = v.voxels.astype(np.float64)
    # Half-pixel centers: dst pixel i samples src coordinate (i + 0.5) * scale - 0.5.
    xs = (np.arange(target_w) + 0.5) * (v.width / target_w) - 0.5
    ys = (np.arange(target_h) + 0.5) * (v.height / target_h) - 0.5
    xs = np.clip(xs, 0, v.width - 1)
    ys = np.clip(ys, 0, v.height - 1)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, v.width - 1)
    y1 = np.minimum(y0 + 1, v.height - 1)
    fx = (xs - x0)[None, None, :, None]
    fy = (ys - y0)[None, :, None, None]

    top = src[:, y0][:, :, x0] * (1 - fx) + src[:, y0][:, :, x1] * fx
    bot = src[:, y1][:, :, x0] * (1 - fx) + src[:, y1][:, :, x1] * fx
    out = top * (1 - fy) + bot * fy
    if v.voxels.dtype == np.uint8:
        out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return VideoVolume(out)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian kernel truncated at 3*sigma."""
    radius = int(3.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def gaussian_smooth(v: VideoVolume, sigma: float) -> VideoVolume:
    """Spatial (per-frame, per-channel) Gaussian smoothing.

    Kernel truncated at 3*sigma and renormalized; borders handled by edge
    clamping. sigma = 0 returns the input unchanged.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return v
    k = gaussian_kernel(sigma)
    radius = (len(k) - 1) // 2
    if radius == 0:
        return VideoVolume(v.voxels.astype(np.float64))

    src = v.voxels.astype(np.float64)
    padded = np.pad(src, ((0, 0), (radius, radius), (0, 0), (0, 0)), mode="edge")
    out = np.zeros_like(src)
    for i, kv in enumerate(k):
        out += kv * padded[:, i : i + v.height]
    padded = np.pad(out, ((0, 0), (0, 0), (radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(src)
    for i, kv in enumerate(k):
        out += kv * padded[:, :, i : i + v.width]
    return VideoVolume(out)
