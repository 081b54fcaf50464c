import numpy as np
import pytest

from svxlab.video_io import VideoVolume


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_volume(rng, frames, height, width):
    return VideoVolume(rng.integers(0, 256, size=(frames, height, width, 3),
                                    dtype=np.uint8))


def constant_volume(frames, height, width, color=(128, 128, 128)):
    vox = np.zeros((frames, height, width, 3), dtype=np.uint8)
    vox[...] = color
    return VideoVolume(vox)
