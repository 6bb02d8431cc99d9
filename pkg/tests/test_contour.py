from typing import List

import numpy as np
import pytest

from coreason_mmhand.contour import ContourMap, finger_palette, render_contour
from coreason_mmhand.exceptions import ProjectionError
from coreason_mmhand.pose import Camera, Pose3D, project
from coreason_mmhand.schemas import ContourConfig


def _camera(cx: float, cy: float, size: int = 128, f: float = 110.0) -> Camera:
    return Camera(
        intrinsic=[[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]],
        rotation=np.eye(3),
        center=np.zeros(3),
        image_size=(size, size),
    )


def test_palette_has_six_distinct_non_black_colors() -> None:
    palette = finger_palette()
    assert len(palette) == 6
    assert len(set(palette)) == 6
    assert (0.0, 0.0, 0.0) not in palette
    assert (1.0, 1.0, 1.0) not in palette


def test_render_is_deterministic(toy_poses: List[Pose3D], camera: Camera) -> None:
    first = render_contour(toy_poses[0], camera, ContourConfig())
    second = render_contour(toy_poses[0], camera, ContourConfig())
    assert isinstance(first, ContourMap)
    assert first.pixels.tobytes() == second.pixels.tobytes()


def test_render_uses_only_palette_colors(toy_poses: List[Pose3D], camera: Camera) -> None:
    """Background is exactly zero; every other pixel carries a palette color or the keypoint white."""
    pixels = render_contour(toy_poses[1], camera, ContourConfig()).pixels
    assert pixels.shape == (64, 64, 3)
    allowed = {tuple(int(round(c * 255)) for c in color) for color in finger_palette()}
    allowed |= {(0, 0, 0), (255, 255, 255)}
    colors = {tuple(int(v) for v in p) for p in np.rint(pixels * 255).reshape(-1, 3)}
    assert colors <= allowed
    assert (pixels == 0).all(axis=2).any()


def test_all_joints_out_of_frame_gives_blank_map() -> None:
    joints = np.tile([5000.0, 5000.0, 100.0], (21, 1)) + np.arange(21)[:, None]
    pixels = render_contour(Pose3D(joints=joints), _camera(31.5, 31.5, 64), ContourConfig()).pixels
    assert not pixels.any()


def test_finger_along_x_axis_stays_in_band() -> None:
    """Joints on one image row stay within the ellipse minor axis plus the disk radius of that row."""
    joints = np.array([[5.0 + 2.5 * i, 0.0, 110.0] for i in range(21)])
    camera = _camera(0.0, 32.0, 64)
    config = ContourConfig()
    pixels = render_contour(Pose3D(joints=joints), camera, config).pixels
    rows = np.nonzero(pixels.any(axis=2))[0]
    assert rows.size > 0
    bound = config.min_minor_axis / 2.0 + config.keypoint_radius
    assert np.all(np.abs(rows - 32) <= bound)


def test_every_in_frame_joint_is_covered(toy_poses: List[Pose3D], camera: Camera) -> None:
    for pose in toy_poses[:6]:
        pixels = render_contour(pose, camera, ContourConfig()).pixels
        for u, v in project(pose, camera).keypoints:
            col, row = int(np.floor(u + 0.5)), int(np.floor(v + 0.5))
            if 0 <= row < 64 and 0 <= col < 64:
                assert pixels[row, col].any()


def test_integer_shift_translates_pixels(toy_poses: List[Pose3D]) -> None:
    """Moving the principal point by whole pixels moves the foreground by the same offset."""
    config = ContourConfig()
    base = render_contour(toy_poses[4], _camera(63.5, 63.5), config).pixels
    shifted = render_contour(toy_poses[4], _camera(66.5, 61.5), config).pixels
    rows, cols = np.nonzero(base.any(axis=2))
    assert rows.min() >= 2 and cols.max() <= 124
    np.testing.assert_array_equal(np.roll(base, shift=(-2, 3), axis=(0, 1)), shifted)


def test_pixel_count_depends_on_geometry_only(toy_poses: List[Pose3D], camera: Camera) -> None:
    pose = toy_poses[5]
    clone = Pose3D(joints=np.array(pose.joints))
    a = render_contour(pose, camera, ContourConfig()).pixels
    b = render_contour(clone, camera, ContourConfig()).pixels
    assert np.count_nonzero(a.any(axis=2)) == np.count_nonzero(b.any(axis=2))


def test_behind_camera_raises(camera: Camera) -> None:
    with pytest.raises(ProjectionError):
        render_contour(Pose3D(joints=np.tile([0.0, 0.0, -5.0], (21, 1))), camera, ContourConfig())


def test_contour_map_rejects_bad_shape(toy_poses: List[Pose3D]) -> None:
    with pytest.raises(ValueError):
        ContourMap(pixels=np.zeros((4, 4)), source_pose=toy_poses[0])
