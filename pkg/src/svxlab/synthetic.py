"""Synthetic clip corpus for desk-scale recognition checks.

Clips combine two shape classes with four motion classes on a black
background:

  solo   one filled disk
  duo    a rigid vertical pair of disks

  slide  the shape translating at constant speed (roughly horizontal)
  grow   the shape scaling up about a fixed center
  split  two copies separating symmetrically
  chase  two reduced copies moving together at a fixed separation

Motions act along a near-horizontal axis while the duo shape carries its
structure vertically, so the two tasks read out largely different
histogram cells. Shape plays the role of the binary actor task and motion
the role of the action task; the labels map onto the study vocabulary.
Per-clip jitter (position, size, speed, heading) varies instances within
each class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .video_io import VideoVolume

SHAPES = ("solo", "duo")
MOTIONS = ("slide", "grow", "split", "chase")

SHAPE_TO_ACTOR = {"solo": "human", "duo": "animal"}
MOTION_TO_ACTION = {"slide": "walking", "grow": "eating", "split": "jumping", "chase": "running"}

FRAME_H = 48
FRAME_W = 64
CLIP_FRAMES = 10

_GROW_FACTOR = 1.3
_SPLIT_GAP0 = 1.5
_SPLIT_RATE = 1.4
_CHASE_OFFSET = 7.0
_DUO_VSEP = 9.0


@dataclass(frozen=True)
class SyntheticClip:
    clip_id: str
    shape: str
    motion: str
    volume: VideoVolume


def _draw(frame: np.ndarray, shape: str, cx: float, cy: float, size: float,
          vsep: float) -> None:
    h, w = frame.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    if shape == "solo":
        mask = (xs - cx) ** 2 + (ys - cy) ** 2 <= size * size
    else:
        r = 0.85 * size
        mask = ((xs - cx) ** 2 + (ys - cy - vsep) ** 2 <= r * r) | \
               ((xs - cx) ** 2 + (ys - cy + vsep) ** 2 <= r * r)
    frame[mask] = 255


def render_clip(shape: str, motion: str, seed: int,
                frames: int = CLIP_FRAMES) -> VideoVolume:
    """Deterministic clip for a (shape, motion, seed) triple."""
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}")
    rng = np.random.default_rng(seed)
    h, w = FRAME_H, FRAME_W
    cx0 = w / 2 + rng.uniform(-2, 2)
    cy0 = h / 2 + rng.uniform(-1.5, 1.5)
    size = 4.5 + rng.uniform(-0.5, 0.5)
    vsep = _DUO_VSEP + rng.uniform(-0.8, 0.8)
    angle = rng.uniform(-0.14, 0.14) + (np.pi if rng.integers(2) else 0.0)
    dx, dy = np.cos(angle), np.sin(angle)
    speed = 2.0 + rng.uniform(-0.3, 0.3)

    stack = np.zeros((frames, h, w, 3), dtype=np.uint8)
    for t in range(frames):
        img = np.zeros((h, w), dtype=np.uint8)
        if motion == "slide":
            off = speed * (t - (frames - 1) / 2)
            _draw(img, shape, cx0 + dx * off, cy0 + dy * off, size, vsep)
        elif motion == "grow":
            k = 1.0 + _GROW_FACTOR * t / (frames - 1)
            _draw(img, shape, cx0, cy0, size * k, vsep * k)
        elif motion == "split":
            gap = _SPLIT_GAP0 + _SPLIT_RATE * t
            _draw(img, shape, cx0 + dx * gap, cy0 + dy * gap, size, vsep)
            _draw(img, shape, cx0 - dx * gap, cy0 - dy * gap, size, vsep)
        elif motion == "chase":
            off = speed * (t - (frames - 1) / 2) * 0.85
            c = _CHASE_OFFSET
            _draw(img, shape, cx0 + dx * (off + c), cy0 + dy * (off + c),
                  size * 0.75, vsep * 0.75)
            _draw(img, shape, cx0 + dx * (off - c), cy0 + dy * (off - c),
                  size * 0.75, vsep * 0.75)
        else:
            raise ValueError(f"unknown motion {motion!r}")
        stack[t] = img[..., None]
    return VideoVolume(stack)


def make_corpus(clips_per_class: int = 10, seed: int = 0) -> list[SyntheticClip]:
    clips = []
    base = seed * 100003
    for shape in SHAPES:
        for motion in MOTIONS:
            class_id = SHAPES.index(shape) * len(MOTIONS) + MOTIONS.index(motion)
            for i in range(clips_per_class):
                clip_seed = base + class_id * 1009 + i
                clips.append(SyntheticClip(
                    clip_id=f"{shape}_{motion}_{i:02d}",
                    shape=shape,
                    motion=motion,
                    volume=render_clip(shape, motion, clip_seed),
                ))
    return clips
