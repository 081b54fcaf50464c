"""Demo study environment: a complete 32-base-video synthetic dataset,
segmented at the three study levels, rendered to supervoxel-color frames,
with a manifest the study service can serve.

Only the colorized segmentation frames are written under the assets root;
the synthetic RGB sources never leave this function, mirroring the rule
that participants never see input RGB videos.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .recognition import ACTIONS, ACTORS, BACKGROUNDS
from .segmentation import SegmentationParams, build_hierarchy, extract_level
from .study import LEVELS, StudyDataset, StudyVideo
from .synthetic import MOTIONS, SHAPES, render_clip
from .video_io import VideoVolume, write_frames
from .visualization import colorize

# Each of the eight study actions is realized by one of the four synthetic
# motions at one of two speed regimes, so the demo covers the full label
# vocabulary with visually distinct clips.
_ACTION_VARIANTS = {action: (MOTIONS[i % 4], i // 4) for i, action in enumerate(ACTIONS)}
_ACTOR_SHAPES = dict(zip(ACTORS, SHAPES))

DEMO_FPS = 12.0


def _demo_clip(actor: str, action: str, background: str, seed: int) -> VideoVolume:
    shape = _ACTOR_SHAPES[actor]
    motion, variant = _ACTION_VARIANTS[action]
    clip = render_clip(shape, motion, seed + 7919 * variant)
    vox = clip.voxels.copy()
    if background == "moving":
        rng = np.random.default_rng(seed)
        h, w = vox.shape[1:3]
        drift = (rng.integers(0, 40, size=(h, w, 3), dtype=np.uint8))
        for t in range(vox.shape[0]):
            rolled = np.roll(drift, shift=2 * t, axis=1)
            frame = vox[t]
            vox[t] = np.where(frame.max(axis=-1, keepdims=True) > 0, frame, rolled)
    return VideoVolume(vox)


def build_demo_study(out_dir: str | Path, seed: int = 0) -> Path:
    """Write assets/<video_id>/frame_%05d.ppm for all 96 study videos plus
    dataset.json; returns the manifest path."""
    out_dir = Path(out_dir)
    assets = out_dir / "assets"
    assets.mkdir(parents=True, exist_ok=True)
    params = SegmentationParams(hie_num=24)

    videos = []
    base_index = 0
    for actor in ACTORS:
        for action in ACTIONS:
            for background in BACKGROUNDS:
                base_id = f"{actor}_{action}_{background}"
                clip = _demo_clip(actor, action, background, seed + base_index * 517)
                hierarchy = build_hierarchy(clip, params)
                for level in LEVELS:
                    video_id = f"{base_id}_{level}"
                    labeling = extract_level(hierarchy, level)
                    rendered = colorize(labeling, seed=seed + base_index)
                    frame_dir = assets / video_id
                    write_frames(rendered, frame_dir)
                    frame_urls = [f"/assets/{video_id}/frame_{t:05d}.ppm"
                                  for t in range(rendered.frame_count)]
                    videos.append(StudyVideo(
                        video_id=video_id,
                        base_id=base_id,
                        actor=actor,
                        action=action,
                        background=background,
                        level=level,
                        frame_count=rendered.frame_count,
                        source_fps=DEMO_FPS,
                        frame_urls=frame_urls,
                    ))
                base_index += 1

    dataset = StudyDataset(videos=videos)
    dataset.validate()
    manifest = out_dir / "dataset.json"
    dataset.to_manifest(manifest)
    return manifest
