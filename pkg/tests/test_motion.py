import numpy as np
import pytest

from svxlab.motion import (
    MotionError,
    compute_flow,
    flow_center_of_mass,
    read_flow,
    write_flow,
)
from svxlab.video_io import VideoVolume, gaussian_smooth


def gray_video(frames):
    stack = np.stack([np.asarray(f, dtype=np.float64) for f in frames])
    return VideoVolume(np.repeat(stack[..., None], 3, axis=-1))


def moving_square_video(shift=(2, 0), size=12, blur=2.0, dims=(120, 160), frames=2):
    h, w = dims
    stack = []
    for t in range(frames):
        img = np.zeros((h, w), dtype=np.uint8)
        x0 = w // 2 - size // 2 + shift[0] * t
        y0 = h // 2 - size // 2 + shift[1] * t
        img[y0: y0 + size, x0: x0 + size] = 255
        stack.append(img)
    v = VideoVolume(np.repeat(np.stack(stack)[..., None], 3, axis=-1))
    return gaussian_smooth(v, blur) if blur else v


def blob_frame(h, w, cy, cx, r=5):
    ys, xs = np.mgrid[0:h, 0:w]
    img = np.zeros((h, w))
    img[(ys - cy) ** 2 + (xs - cx) ** 2 <= r * r] = 255.0
    return img


class TestComputeFlow:
    def test_identical_frames_zero_flow(self, rng):
        frame = rng.uniform(0, 255, size=(20, 30))
        f = compute_flow(gray_video([frame, frame]))
        assert np.abs(f.u).max() < 1e-6
        assert np.abs(f.v).max() < 1e-6

    def test_square_translation_recovered(self):
        size, dims = 12, (120, 160)
        v = moving_square_video(shift=(2, 0), size=size, dims=dims)
        f = compute_flow(v)
        h, w = dims
        mask = np.zeros((h, w), bool)
        mask[h // 2 - size // 2: h // 2 + size // 2,
             w // 2 - size // 2: w // 2 + size // 2] = True
        assert abs(f.u[0][mask].mean() - 2.0) < 0.5
        assert abs(f.v[0][mask].mean()) < 0.5

    def test_global_shift_median(self, rng):
        base = gaussian_smooth(
            gray_video([rng.uniform(0, 255, size=(60, 80))]), 3.0).voxels[0, :, :, 0]
        shifted = np.roll(np.roll(base, 1, axis=0), 1, axis=1)
        f = compute_flow(gray_video([base, shifted]))
        inner = (slice(4, -4), slice(4, -4))
        assert abs(np.median(f.u[0][inner]) - 1.0) < 0.5
        assert abs(np.median(f.v[0][inner]) - 1.0) < 0.5

    def test_single_frame_rejected(self, rng):
        with pytest.raises(MotionError):
            compute_flow(gray_video([rng.uniform(0, 255, size=(5, 5))]))

    def test_deterministic(self, rng):
        v = moving_square_video(dims=(40, 50), size=8)
        f1 = compute_flow(v)
        f2 = compute_flow(v)
        assert np.array_equal(f1.u, f2.u) and np.array_equal(f1.v, f2.v)


class TestFlowCenterOfMass:
    def test_single_mover_blob(self):
        frames = [blob_frame(80, 100, 40, 50 + 2 * t, r=6) for t in range(2)]
        v = gaussian_smooth(gray_video(frames), 1.5)
        rp = flow_center_of_mass(compute_flow(v), 0)
        assert abs(rp.x - 50) <= 2 and abs(rp.y - 40) <= 2

    def test_zero_flow_falls_back_to_frame_center(self, rng):
        frame = rng.uniform(0, 255, size=(30, 40))
        rp = flow_center_of_mass(compute_flow(gray_video([frame, frame])), 0)
        assert (rp.x, rp.y) == ((40 - 1) / 2, (30 - 1) / 2)

    def test_two_equal_blobs_midpoint(self):
        frames = []
        for t in range(2):
            img = blob_frame(40, 40, 10, 10 + 2 * t, r=4)
            img += blob_frame(40, 40, 30, 30 - 2 * t, r=4)
            frames.append(img)
        v = gaussian_smooth(gray_video(frames), 1.5)
        rp = flow_center_of_mass(compute_flow(v), 0)
        assert abs(rp.x - 20) <= 1 and abs(rp.y - 20) <= 1

    def test_last_frame_reuses_final_field(self):
        v = moving_square_video(dims=(40, 50), size=8, frames=3)
        f = compute_flow(v)
        assert flow_center_of_mass(f, 2) == flow_center_of_mass(f, 2)
        last = flow_center_of_mass(f, 2)
        prev = flow_center_of_mass(f, 1)
        assert last.frame_index == 2
        assert (last.x, last.y) == (pytest.approx(prev.x), pytest.approx(prev.y))

    def test_out_of_range_frame(self):
        v = moving_square_video(dims=(40, 50), size=8)
        f = compute_flow(v)
        with pytest.raises(MotionError):
            flow_center_of_mass(f, 5)

    def test_inside_bounding_box_of_moving_pixels(self, rng):
        for trial in range(5):
            cy, cx = rng.integers(10, 30), rng.integers(10, 40)
            frames = [blob_frame(40, 50, cy, cx + 2 * t, r=4) for t in range(2)]
            v = gaussian_smooth(gray_video(frames), 1.0)
            f = compute_flow(v)
            mag = f.magnitude(0)
            ys, xs = np.nonzero(mag > mag.max() * 1e-3)
            rp = flow_center_of_mass(f, 0)
            assert xs.min() <= rp.x <= xs.max()
            assert ys.min() <= rp.y <= ys.max()

    def test_translation_equivariance(self):
        def ref_for(cy, cx):
            frames = [blob_frame(60, 70, cy, cx + 2 * t, r=5) for t in range(2)]
            v = gaussian_smooth(gray_video(frames), 1.0)
            return flow_center_of_mass(compute_flow(v), 0)

        a = ref_for(20, 20)
        b = ref_for(30, 34)
        assert abs((b.x - a.x) - 14) <= 1
        assert abs((b.y - a.y) - 10) <= 1


class TestFlowIO:
    def test_round_trip(self, tmp_path):
        v = moving_square_video(dims=(30, 40), size=8, frames=3)
        f = compute_flow(v)
        path = tmp_path / "flow.svxf"
        write_flow(f, path)
        loaded = read_flow(path)
        assert loaded.u.shape == f.u.shape
        assert np.allclose(loaded.u, f.u, atol=1e-6)
        assert np.allclose(loaded.v, f.v, atol=1e-6)
