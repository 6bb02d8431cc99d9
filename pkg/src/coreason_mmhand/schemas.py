# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Data schemas for Coreason MMHand.

Configuration blocks reject unknown keys; every default is documented in its field description.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from coreason_mmhand.pose.types import Camera


class CameraConfig(BaseModel):
    """Pinhole camera parameters as plain JSON-friendly values.

    Attributes:
        fx (float): Horizontal focal length in pixels.
        fy (float): Vertical focal length in pixels.
        cx (float): Principal point x (pixel centers sit on integer coordinates).
        cy (float): Principal point y.
        rotation (List[List[float]]): World-to-camera rotation R.
        center (List[float]): Camera center C in world millimeters.
        image_size (Tuple[int, int]): (H, W).
    """

    model_config = ConfigDict(extra="forbid")

    fx: float = Field(110.0, gt=0, description="Horizontal focal length (px).")
    fy: float = Field(110.0, gt=0, description="Vertical focal length (px).")
    cx: float = Field(31.5, description="Principal point x (px).")
    cy: float = Field(31.5, description="Principal point y (px).")
    rotation: List[List[float]] = Field(
        default_factory=lambda: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        description="World-to-camera rotation R (3x3).",
    )
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0], description="Camera center C (mm).")
    image_size: Tuple[int, int] = Field((64, 64), description="(H, W) in pixels.")

    @classmethod
    def for_image_size(cls, size: int) -> "CameraConfig":
        """Default toy camera scaled so a hand ~500 mm away fills a `size` x `size` frame."""
        focal = 110.0 * size / 64.0
        return cls(fx=focal, fy=focal, cx=(size - 1) / 2.0, cy=(size - 1) / 2.0, image_size=(size, size))

    @classmethod
    def from_camera(cls, camera: Camera) -> "CameraConfig":
        k = camera.intrinsic
        return cls(
            fx=float(k[0, 0]),
            fy=float(k[1, 1]),
            cx=float(k[0, 2]),
            cy=float(k[1, 2]),
            rotation=camera.rotation.tolist(),
            center=camera.center.tolist(),
            image_size=camera.image_size,
        )

    def build(self) -> Camera:
        """Materialize a validated `Camera`."""
        intrinsic = np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])
        return Camera(intrinsic=intrinsic, rotation=self.rotation, center=self.center, image_size=self.image_size)


class ContourConfig(BaseModel):
    """Contour-map rasterization settings."""

    model_config = ConfigDict(extra="forbid")

    ellipse_ratio: float = Field(0.35, gt=0, description="Finger ellipse minor axis as a fraction of segment length.")
    min_minor_axis: float = Field(2.0, gt=0, description="Floor on the ellipse minor axis (px).")
    keypoint_radius: int = Field(2, ge=1, description="Dilation passes with the 3x3 cross applied to joint seeds.")
    erosion_passes: int = Field(1, ge=0, description="Erosion passes applied after dilation.")


class DepthGenConfig(BaseModel):
    """Depth-map generator architecture and training settings."""

    model_config = ConfigDict(extra="forbid")

    input_size: int = Field(64, gt=0, description="Square input/output resolution (px).")
    base_channels: int = Field(16, gt=0, description="Channels of the first encoder level.")
    levels: int = Field(4, gt=0, description="Encoder/decoder levels (each halves/doubles resolution).")
    heatmap_sigma: float = Field(2.0, gt=0, description="Sigma of the input pose heat maps (px).")
    capsule_radius: float = Field(8.0, gt=0, description="Finger capsule radius for the depth oracle (mm).")
    palm_thickness: float = Field(20.0, gt=0, description="Palm slab thickness for the depth oracle (mm).")
    learning_rate: float = Field(2e-4, gt=0, description="Adam learning rate.")
    batch_size: int = Field(8, gt=0, description="Mini-batch size.")
    epochs: int = Field(50, gt=0, description="Training epochs.")
    estimator_epochs: int = Field(10, gt=0, description="Epochs used to pretrain the keypoint regularizers.")
    adv_weight: float = Field(1.0, ge=0, description="Conditional adversarial term weight.")
    recon_weight: float = Field(10.0, ge=0, description="L1 reconstruction term weight.")
    hpm2d_weight: float = Field(1.0, ge=0, description="2D keypoint-consistency regularizer weight.")
    hpm3d_weight: float = Field(1.0, ge=0, description="3D keypoint-consistency regularizer weight.")
    seed: int = Field(0, description="Seed for initialization and shuffling.")


class HpmConfig(BaseModel):
    """Cascaded heat-map estimator settings (shared by the 2D and 3D variants)."""

    model_config = ConfigDict(extra="forbid")

    input_size: int = Field(64, gt=0, description="Square input resolution (px).")
    in_channels: int = Field(3, gt=0, description="Input channels (3 for RGB, 1 for depth maps).")
    trunk_channels: int = Field(32, gt=0, description="Channels of the shared feature trunk.")
    stage_channels: int = Field(64, gt=0, description="Hidden channels inside each stage.")
    num_stages: int = Field(6, ge=1, description="Cascaded prediction stages.")
    stride: int = Field(4, description="Input pixels per heat-map cell (output = input / stride).")
    heatmap_sigma: float = Field(1.0, gt=0, description="Sigma of target heat maps in heat-map cells.")
    depth_scale: float = Field(100.0, gt=0, description="Millimeters per unit of normalized relative depth.")
    root_index: int = Field(0, ge=0, le=20, description="Reference joint for relative depth (wrist).")
    learning_rate: float = Field(1e-3, gt=0, description="Adam learning rate.")
    batch_size: int = Field(16, gt=0, description="Mini-batch size.")
    epochs: int = Field(20, gt=0, description="Training epochs.")
    seed: int = Field(0, description="Seed for initialization and shuffling.")

    @field_validator("stride")
    @classmethod
    def _check_stride(cls, value: int) -> int:
        if value not in (1, 2, 4):
            raise ValueError("stride must be 1, 2 or 4")
        return value


class GeneratorConfig(BaseModel):
    """Multi-stream hand generator architecture."""

    model_config = ConfigDict(extra="forbid")

    num_blocks: int = Field(6, ge=0, description="Cascaded attentional blocks N (0 = plain autoencoder path).")
    image_size: int = Field(64, gt=0, description="Square image resolution (px).")
    image_channels: int = Field(3, gt=0, description="Image channels.")
    base_channels: int = Field(32, gt=0, description="Channels after the first encoder convolution.")
    code_channels: int = Field(64, gt=0, description="Channels of every modality code I_n, c_n, d_n.")
    decoder_depth: int = Field(2, ge=1, description="Stride-2 encoder/decoder levels.")
    use_depth: bool = Field(True, description="Include the depth stream in the attention mask.")
    use_attention: bool = Field(True, description="Gate image updates by the attention mask.")
    residual_streams: bool = Field(False, description="Add residual connections to the contour/depth streams.")
    depth_source: Literal["generator", "oracle"] = Field(
        "generator", description="Where depth embeddings come from: the trained depth generator or the oracle."
    )
    seed: int = Field(0, description="Initialization seed.")


class LossWeights(BaseModel):
    """Weights of the joint generator objective."""

    model_config = ConfigDict(extra="forbid")

    adv_weight: float = Field(5.0, ge=0, description="Adversarial term weight.")
    l1_weight: float = Field(10.0, ge=0, description="Pixel L1 weight.")
    perceptual_weight: float = Field(1.0, ge=0, description="Perceptual feature loss weight.")
    heatmap_weight: float = Field(1.0, ge=0, description="Stage-averaged 2D heat-map loss weight.")
    depth_weight: float = Field(1.0, ge=0, description="Smooth-L1 relative depth loss weight.")


class GanTrainConfig(BaseModel):
    """Adversarial training loop settings."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(2e-4, gt=0, description="Adam learning rate for generator and discriminators.")
    beta1: float = Field(0.5, ge=0, lt=1, description="Adam first-moment decay.")
    beta2: float = Field(0.999, ge=0, lt=1, description="Adam second-moment decay.")
    batch_size: int = Field(4, gt=0, description="Pairs per step.")
    steps: int = Field(2000, gt=0, description="Total generator steps.")
    disc_channels: int = Field(32, gt=0, description="Channels of the first discriminator layer.")
    pose_heatmap_sigma: float = Field(2.0, gt=0, description="Sigma of the pose heat maps fed to D_p (px).")
    feature_layers: int = Field(8, ge=1, description="Convolutions in the default perceptual extractor.")
    feature_tap: int = Field(6, ge=1, description="1-based convolution whose activation is compared.")
    feature_seed: int = Field(0, description="Seed of the default perceptual extractor weights.")
    feature_weights: Optional[str] = Field(
        None, description="Optional state-dict file with pretrained extractor weights."
    )
    checkpoint_every: int = Field(500, gt=0, description="Steps between checkpoints.")
    seed: int = Field(0, description="Seed for initialization, pairing and shuffling.")


class CurriculumConfig(BaseModel):
    """Geometry-based curriculum settings."""

    model_config = ConfigDict(extra="forbid")

    enabled: bool = Field(True, description="Sort pairs easy-to-hard; False shuffles them instead.")
    num_pairs: Optional[int] = Field(None, gt=0, description="Pairs per epoch; None means dataset size.")
    use_vp_tree: bool = Field(False, description="Answer nearest-source queries with the vantage-point tree.")


class SplitSpec(BaseModel):
    """Reduced-training-set split.

    Attributes:
        reduction_fraction (float): Fraction of real samples retained, in (0, 1].
        seed (int): Split seed.
    """

    model_config = ConfigDict(extra="forbid")

    reduction_fraction: float = Field(1.0, gt=0, le=1, description="Retained real fraction.")
    seed: int = Field(0, description="Split seed.")


class RunConfig(BaseModel):
    """Every tunable of a run in one JSON document."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, description="Global seed.")
    image_size: int = Field(64, gt=0, description="Image resolution shared by all components.")
    camera: CameraConfig = Field(default_factory=CameraConfig)
    contour: ContourConfig = Field(default_factory=ContourConfig)
    depth: DepthGenConfig = Field(default_factory=DepthGenConfig)
    hpm: HpmConfig = Field(default_factory=HpmConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    losses: LossWeights = Field(default_factory=LossWeights)
    gan: GanTrainConfig = Field(default_factory=GanTrainConfig)
    curriculum: CurriculumConfig = Field(default_factory=CurriculumConfig)
    split: SplitSpec = Field(default_factory=SplitSpec)

    @model_validator(mode="after")
    def _check_image_size(self) -> "RunConfig":
        size = self.image_size
        sizes = {
            "generator.image_size": self.generator.image_size,
            "depth.input_size": self.depth.input_size,
            "hpm.input_size": self.hpm.input_size,
        }
        mismatched = [f"{name}={value}" for name, value in sizes.items() if value != size]
        if tuple(self.camera.image_size) != (size, size):
            mismatched.append(f"camera.image_size={tuple(self.camera.image_size)}")
        if mismatched:
            raise ValueError(f"image_size is {size} but " + ", ".join(mismatched))
        return self

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Parse a JSON run configuration; unknown keys raise a pydantic `ValidationError`."""
        return cls.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


class TrainingPair(BaseModel):
    """One curriculum unit: a (source, target) sample pair and their pose distance."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    source_index: int = Field(..., ge=0)
    target_index: int = Field(..., ge=0)
    distance: float = Field(..., ge=0.0, le=0.5)


class CameraRecord(BaseModel):
    """Camera block of a manifest record."""

    model_config = ConfigDict(extra="forbid")

    K: List[List[float]]
    R: List[List[float]]
    C: List[float]


class SampleRecord(BaseModel):
    """One manifest entry; paths are relative to the manifest directory."""

    model_config = ConfigDict(extra="forbid")

    image_path: str
    pose3d: List[List[float]]
    camera: CameraRecord
    mask_path: Optional[str] = None
    depth_path: Optional[str] = None
    provenance: Optional[Dict[str, Any]] = None


class DatasetManifest(BaseModel):
    """Top-level dataset manifest document."""

    model_config = ConfigDict(extra="forbid")

    version: str = "1"
    joint_order: str
    samples: List[SampleRecord] = Field(default_factory=list)


class LossRecord(BaseModel):
    """Per-step loss breakdown written to the loss-curve CSV."""

    model_config = ConfigDict(extra="forbid")

    step: int
    L_adv: float
    L_1: float
    L_p: float
    L_xy: float
    L_z: float
    total: float
    L_disc: float = 0.0


class PoseFile(BaseModel):
    """A standalone pose document for single-image generation; the camera defaults to the toy camera."""

    model_config = ConfigDict(extra="forbid")

    pose3d: List[List[float]]
    camera: Optional[CameraRecord] = None
