from pathlib import Path
from typing import List
from unittest.mock import patch

import numpy as np
import pytest
import torch

from coreason_mmhand.checkpoint import save_checkpoint
from coreason_mmhand.data import Dataset
from coreason_mmhand.depth import (
    MIN_FOREGROUND,
    DepthGenerator,
    DepthMap,
    DepthRegularizers,
    DepthSample,
    DepthUNet,
    capsule_hits,
    depth_mae,
    depth_samples,
    discriminator_loss,
    generate_depth,
    generator_losses,
    rasterize_hand,
    regularizer_config,
    slab_hits,
    synthetic_depth_oracle,
    train_depth_generator,
)
from coreason_mmhand.exceptions import DatasetError, NonFiniteLossError, ProjectionError, ShapeMismatchError
from coreason_mmhand.hpm.models import Hpm2D
from coreason_mmhand.layers import PatchDiscriminator
from coreason_mmhand.pose import Camera, Pose3D
from coreason_mmhand.schemas import DepthGenConfig
from coreason_mmhand.workflows import load_depth_generator

AXIS = np.array([[[0.0, 0.0, 1.0]]])


def test_capsule_hit_along_its_axis_is_the_near_cap() -> None:
    t = capsule_hits(AXIS, np.array([0.0, 0.0, 100.0]), np.array([0.0, 0.0, 200.0]), 8.0)
    assert t.shape == (1, 1)
    assert t[0, 0] == pytest.approx(92.0)


def test_capsule_hit_across_its_body() -> None:
    t = capsule_hits(AXIS, np.array([-50.0, 0.0, 100.0]), np.array([50.0, 0.0, 100.0]), 8.0)
    assert t[0, 0] == pytest.approx(92.0)


def test_capsule_miss_is_infinite() -> None:
    rays = np.array([[[0.5, 0.0, 1.0]]])
    t = capsule_hits(rays, np.array([0.0, 0.0, 100.0]), np.array([0.0, 0.0, 200.0]), 8.0)
    assert np.isinf(t[0, 0])


def test_slab_front_face_and_outside_rays() -> None:
    square = np.array([[-20, -20, 100], [20, -20, 100], [20, 20, 100], [-20, 20, 100], [0, 0, 100]], dtype=float)
    rays = np.array([[[0.0, 0.0, 1.0], [0.5, 0.0, 1.0]]])
    t = slab_hits(rays, square, thickness=20.0)
    assert t[0, 0] == pytest.approx(90.0)
    assert np.isinf(t[0, 1])


def test_slab_without_area_hits_nothing() -> None:
    line = np.array([[x, 0.0, 100.0] for x in (-20.0, -5.0, 10.0, 20.0)])
    assert np.isinf(slab_hits(AXIS, line, thickness=20.0)).all()


def test_raster_mask_matches_depth_support(toy_poses: List[Pose3D], camera: Camera) -> None:
    for pose in toy_poses[:4]:
        raster = rasterize_hand(pose, camera)
        depth = synthetic_depth_oracle(pose, camera)
        assert raster.mask.any()
        np.testing.assert_array_equal(raster.mask, np.isfinite(raster.z))
        np.testing.assert_array_equal(raster.mask, depth.pixels > 0)
        assert set(np.unique(raster.part)) <= set(range(-1, 6))


def test_oracle_range_and_nearest_pixel(toy_poses: List[Pose3D], camera: Camera) -> None:
    depth = synthetic_depth_oracle(toy_poses[2], camera).pixels
    foreground = depth[depth > 0]
    assert depth.dtype == np.float32
    assert foreground.min() >= np.float32(MIN_FOREGROUND)
    assert foreground.max() == pytest.approx(1.0)


def test_oracle_is_monotone_in_camera_depth(toy_poses: List[Pose3D], camera: Camera) -> None:
    """Nearer surface points never get a smaller value than farther ones."""
    raster = rasterize_hand(toy_poses[3], camera)
    depth = synthetic_depth_oracle(toy_poses[3], camera).pixels
    hits = raster.mask
    order = np.argsort(raster.z[hits], kind="stable")
    values = depth[hits][order]
    assert np.all(np.diff(values) <= 1e-6)


def test_oracle_singular_intrinsic_raises(toy_poses: List[Pose3D]) -> None:
    camera = Camera(
        intrinsic=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
        rotation=np.eye(3),
        center=np.zeros(3),
        image_size=(8, 8),
    )
    with pytest.raises(ProjectionError):
        synthetic_depth_oracle(toy_poses[0], camera)


def test_depth_map_validation() -> None:
    with pytest.raises(ValueError):
        DepthMap(pixels=np.full((4, 4), 1.5))
    with pytest.raises(ValueError):
        DepthMap(pixels=np.zeros((4, 4, 1)))
    assert DepthMap(pixels=np.zeros((4, 4))).pixels.dtype == np.float32


def test_unet_shapes(tiny_depth_config: DepthGenConfig) -> None:
    net = DepthUNet(tiny_depth_config)
    out = net(torch.rand(2, 21, 16, 16))
    assert out.shape == (2, 1, 16, 16)
    assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_unet_rejects_indivisible_size() -> None:
    with pytest.raises(ShapeMismatchError):
        DepthUNet(DepthGenConfig(input_size=18, levels=2))


def test_generator_rejects_camera_of_other_size(
    tiny_depth_config: DepthGenConfig, toy_poses: List[Pose3D], camera: Camera
) -> None:
    gen = DepthGenerator(tiny_depth_config)
    with pytest.raises(ShapeMismatchError):
        generate_depth(gen, toy_poses[0], camera)


def test_generate_depth_is_deterministic_per_seed(
    tiny_depth_config: DepthGenConfig, tiny_dataset: Dataset
) -> None:
    sample = tiny_dataset[0]
    a = generate_depth(DepthGenerator(tiny_depth_config), sample.pose, sample.camera)
    b = generate_depth(DepthGenerator(tiny_depth_config), sample.pose, sample.camera)
    assert a.pixels.shape == (16, 16)
    np.testing.assert_array_equal(a.pixels, b.pixels)


def test_regularizer_config_stride_follows_size(tiny_depth_config: DepthGenConfig) -> None:
    assert regularizer_config(tiny_depth_config, 6).stride == 4
    assert regularizer_config(tiny_depth_config, 6).in_channels == 1
    small = tiny_depth_config.model_copy(update={"input_size": 8})
    assert regularizer_config(small, 1).stride == 1


def test_generator_losses_without_regularizers(tiny_depth_config: DepthGenConfig) -> None:
    torch.manual_seed(0)
    net = DepthUNet(tiny_depth_config)
    disc = PatchDiscriminator(22)
    heatmaps = torch.rand(2, 21, 16, 16)
    target = torch.rand(2, 1, 16, 16)
    terms = generator_losses(net, disc, heatmaps, target, tiny_depth_config)
    assert set(terms) == {"adv", "recon", "hpm2d", "hpm3d", "total"}
    assert float(terms["hpm2d"]) == 0.0 and float(terms["hpm3d"]) == 0.0
    expected = tiny_depth_config.adv_weight * terms["adv"] + tiny_depth_config.recon_weight * terms["recon"]
    assert float(terms["total"]) == pytest.approx(float(expected), rel=1e-5)
    d_loss = discriminator_loss(disc, heatmaps, target, net(heatmaps).detach())
    assert torch.isfinite(d_loss) and float(d_loss) > 0


def test_generator_losses_require_regularizer_targets(tiny_depth_config: DepthGenConfig) -> None:
    net = DepthUNet(tiny_depth_config)
    disc = PatchDiscriminator(22)
    regularizers = DepthRegularizers(Hpm2D(regularizer_config(tiny_depth_config, 6)), None)
    with pytest.raises(ValueError):
        generator_losses(
            net, disc, torch.rand(1, 21, 16, 16), torch.rand(1, 1, 16, 16), tiny_depth_config, regularizers
        )


def test_depth_samples_prefer_stored_depth(tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig) -> None:
    samples = depth_samples(tiny_dataset, tiny_depth_config)
    assert len(samples) == len(tiny_dataset)
    stored = tiny_dataset[0].depth
    assert stored is not None
    np.testing.assert_array_equal(samples[0].depth.pixels, stored)


def test_depth_samples_fall_back_to_oracle(tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig) -> None:
    sample = tiny_dataset[1].model_copy(update={"depth": None})
    samples = depth_samples(Dataset([sample]), tiny_depth_config)
    oracle = synthetic_depth_oracle(sample.pose, sample.camera)
    np.testing.assert_array_equal(samples[0].depth.pixels, oracle.pixels)


def test_train_rejects_empty_and_mismatched(tiny_depth_config: DepthGenConfig, camera: Camera) -> None:
    with pytest.raises(DatasetError):
        train_depth_generator([], tiny_depth_config)
    pose = Pose3D(joints=np.tile([0.0, 0.0, 500.0], (21, 1)) + np.arange(63).reshape(21, 3))
    big = DepthSample(pose=pose, camera=camera, depth=DepthMap(pixels=np.zeros((64, 64))))
    with pytest.raises(ShapeMismatchError):
        train_depth_generator([big], tiny_depth_config)


def test_train_without_regularizers_records_history(
    tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig
) -> None:
    config = tiny_depth_config.model_copy(update={"hpm2d_weight": 0.0, "hpm3d_weight": 0.0, "epochs": 2})
    samples = depth_samples(tiny_dataset, config)
    gen = train_depth_generator(samples, config)
    assert len(gen.history) == 2
    assert all(np.isfinite(gen.history))
    mae = depth_mae(gen, samples)
    assert 0.0 <= mae <= 1.0


def test_train_with_regularizers(tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig) -> None:
    samples = depth_samples(tiny_dataset, tiny_depth_config)
    gen = train_depth_generator(samples, tiny_depth_config)
    assert len(gen.history) == 1
    assert np.isfinite(gen.history[0])
    assert not gen.net.training


def test_train_stops_on_non_finite_loss(tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig) -> None:
    config = tiny_depth_config.model_copy(update={"hpm2d_weight": 0.0, "hpm3d_weight": 0.0})
    samples = depth_samples(tiny_dataset, config)
    nan = torch.tensor(float("nan"))
    broken = {"adv": nan, "recon": nan, "hpm2d": nan, "hpm3d": nan, "total": nan}
    with patch("coreason_mmhand.depth.generator.generator_losses", return_value=broken):
        with pytest.raises(NonFiniteLossError) as info:
            train_depth_generator(samples, config)
    assert "disc" in info.value.record


def test_train_checks_the_discriminator_loss_before_stepping(
    tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig
) -> None:
    config = tiny_depth_config.model_copy(update={"hpm2d_weight": 0.0, "hpm3d_weight": 0.0})
    samples = depth_samples(tiny_dataset, config)
    nan = torch.tensor(float("nan"), requires_grad=True)
    with patch("coreason_mmhand.depth.generator.discriminator_loss", return_value=nan):
        with pytest.raises(NonFiniteLossError, match="discriminator") as info:
            train_depth_generator(samples, config)
    assert nan.grad is None
    assert "disc" in info.value.record


class _SwappedHead(torch.nn.Module):
    def __init__(self, net: DepthUNet, weight: torch.Tensor) -> None:
        super().__init__()
        self.net = net
        self.weight = weight

    def forward(self, heatmaps: torch.Tensor) -> torch.Tensor:
        out = torch.func.functional_call(self.net, {"head.weight": self.weight}, (heatmaps,))
        return out  # type: ignore[no-any-return]


def test_composite_loss_gradient_matches_finite_differences(tiny_depth_config: DepthGenConfig) -> None:
    torch.manual_seed(0)
    net = DepthUNet(tiny_depth_config).double()
    disc = PatchDiscriminator(22, 8).double()
    heatmaps = torch.rand(1, 21, 16, 16, dtype=torch.float64)
    target = torch.rand(1, 1, 16, 16, dtype=torch.float64)
    head = net.head.weight.detach().clone().requires_grad_(True)

    def total(weight: torch.Tensor) -> torch.Tensor:
        swapped = _SwappedHead(net, weight)
        return generator_losses(swapped, disc, heatmaps, target, tiny_depth_config)["total"]  # type: ignore[arg-type]

    assert torch.autograd.gradcheck(total, (head,), eps=1e-6, atol=1e-5)


def test_trained_generator_survives_a_checkpoint_round_trip(
    tiny_dataset: Dataset, tiny_depth_config: DepthGenConfig, tmp_path: Path
) -> None:
    config = tiny_depth_config.model_copy(update={"hpm2d_weight": 0.0, "hpm3d_weight": 0.0, "epochs": 1})
    samples = depth_samples(tiny_dataset, config)
    assert len(samples) == 8
    gen = train_depth_generator(samples, config)
    path = tmp_path / "depth.ckpt"
    save_checkpoint(path, "depth", {"": gen.net}, config.model_dump(mode="json"))
    restored = load_depth_generator(path)
    assert restored.config == config
    for sample in samples:
        np.testing.assert_array_equal(
            generate_depth(restored, sample.pose, sample.camera).pixels,
            generate_depth(gen, sample.pose, sample.camera).pixels,
        )
