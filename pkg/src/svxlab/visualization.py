"""Supervoxel labeling renderers: unique-color videos and boundary videos."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .segmentation import SupervoxelLabeling
from .video_io import VideoVolume

# Colors with all channels below this are reserved for boundary rendering.
NEAR_BLACK_CEIL = 32
_PALETTE_SIZE = 1 << 24
_RESERVED = NEAR_BLACK_CEIL**3


class VisualizationError(Exception):
    pass


@dataclass(frozen=True)
class ColorAssignment:
    """Injective label -> RGB mapping for one hierarchy level."""

    mapping: dict[int, tuple[int, int, int]]
    seed: int


def assign_colors(labels: list[int], seed: int) -> ColorAssignment:
    """Draw distinct colors for each label by seeded sampling without
    replacement from the 24-bit lattice, skipping near-black values."""
    if len(labels) > _PALETTE_SIZE - _RESERVED:
        raise VisualizationError(
            f"{len(labels)} labels exceed the {_PALETTE_SIZE - _RESERVED} available colors")
    rng = random.Random(seed)
    used: set[int] = set()
    mapping: dict[int, tuple[int, int, int]] = {}
    for label in sorted(labels):
        while True:
            v = rng.randrange(_PALETTE_SIZE)
            if v in used:
                continue
            r, g, b = v >> 16 & 255, v >> 8 & 255, v & 255
            if r < NEAR_BLACK_CEIL and g < NEAR_BLACK_CEIL and b < NEAR_BLACK_CEIL:
                continue
            used.add(v)
            mapping[label] = (r, g, b)
            break
    return ColorAssignment(mapping=mapping, seed=seed)


def colorize(s: SupervoxelLabeling, seed: int) -> VideoVolume:
    """Render each supervoxel in its own color, identical in every frame.
    Deterministic for a fixed seed."""
    assignment = assign_colors(list(s.region_sizes), seed)
    max_label = int(s.labels.max())
    lut = np.zeros((max_label + 1, 3), dtype=np.uint8)
    for label, rgb in assignment.mapping.items():
        lut[label] = rgb
    return VideoVolume(lut[s.labels])


def render_boundaries(s: SupervoxelLabeling) -> VideoVolume:
    """Binary video: a pixel is boundary iff its label differs from any
    spatial 4-neighbor within the same frame."""
    mask = boundary_mask(s)
    vox = np.zeros((*mask.shape, 3), dtype=np.uint8)
    vox[mask] = 255
    return VideoVolume(vox)


def boundary_mask(s: SupervoxelLabeling) -> np.ndarray:
    """(t, h, w) bool mask of spatial 4-neighbor label changes."""
    lab = s.labels
    mask = np.zeros(lab.shape, dtype=bool)
    mask[:, :-1, :] |= lab[:, :-1, :] != lab[:, 1:, :]
    mask[:, 1:, :] |= lab[:, 1:, :] != lab[:, :-1, :]
    mask[:, :, :-1] |= lab[:, :, :-1] != lab[:, :, 1:]
    mask[:, :, 1:] |= lab[:, :, 1:] != lab[:, :, :-1]
    return mask
