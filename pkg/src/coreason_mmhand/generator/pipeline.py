# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""End-to-end generation: pose embeddings, value-range mapping and the generator network."""

from typing import List, Optional, Tuple

import numpy as np
import torch

from coreason_mmhand.contour.render import render_contour
from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.depth.generator import DepthGenerator, generate_depth
from coreason_mmhand.depth.oracle import synthetic_depth_oracle
from coreason_mmhand.exceptions import MMHandValidationError, ShapeMismatchError
from coreason_mmhand.generator.model import MMHandGenerator
from coreason_mmhand.pose.types import Camera, Pose3D
from coreason_mmhand.schemas import ContourConfig, DepthGenConfig, GeneratorConfig

Embedding = Tuple[np.ndarray, np.ndarray]


class PoseEmbedder:
    """Turns a pose into its (contour, depth) embedding pair.

    Args:
        contour: Contour rasterization settings.
        depth: Depth oracle settings (capsule radius, palm thickness).
        depth_generator: Learned depth generator; required when `source` is "generator".
        source: "generator" or "oracle".
    """

    def __init__(
        self,
        contour: ContourConfig,
        depth: DepthGenConfig,
        depth_generator: Optional[DepthGenerator] = None,
        source: str = "generator",
    ) -> None:
        if source == "generator" and depth_generator is None:
            raise MMHandValidationError("depth_source 'generator' needs a trained depth generator")
        self.contour = contour
        self.depth = depth
        self.depth_generator = depth_generator
        self.source = source

    def __call__(self, pose: Pose3D, camera: Camera) -> Embedding:
        """(H, W, 3) contour map and (H, W) depth map, both float32 in [0, 1]."""
        contour = render_contour(pose, camera, self.contour).pixels
        if self.source == "oracle" or self.depth_generator is None:
            depth = synthetic_depth_oracle(pose, camera, self.depth.capsule_radius, self.depth.palm_thickness)
        else:
            depth = generate_depth(self.depth_generator, pose, camera)
        return contour, depth.pixels

    def embed_dataset(self, dataset: Dataset) -> List[Embedding]:
        return [self(s.pose, s.camera) for s in dataset]


def image_to_signed(image: np.ndarray) -> torch.Tensor:
    """(H, W, C) in [0, 1] -> (C, H, W) in [-1, 1]."""
    arr = np.asarray(image, dtype=np.float32)
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1))) * 2.0 - 1.0


def signed_to_image(x: torch.Tensor) -> np.ndarray:
    """(C, H, W) in [-1, 1] -> (H, W, C) float32 in [0, 1]."""
    return ((x.detach().cpu().float().clamp(-1.0, 1.0) + 1.0) / 2.0).permute(1, 2, 0).numpy()


def condition_tensors(
    image: np.ndarray, source: Embedding, target: Embedding
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Per-sample network inputs (no batch axis): image, contour_s, contour_t, depth_s, depth_t."""
    c_s = torch.from_numpy(np.ascontiguousarray(source[0].transpose(2, 0, 1)))
    c_t = torch.from_numpy(np.ascontiguousarray(target[0].transpose(2, 0, 1)))
    d_s = torch.from_numpy(np.asarray(source[1], dtype=np.float32))[None]
    d_t = torch.from_numpy(np.asarray(target[1], dtype=np.float32))[None]
    return image_to_signed(image), c_s, c_t, d_s, d_t


class MMHand:
    """Generator network bound to the embedder that produces its pose conditions.

    Attributes:
        network (MMHandGenerator): The trainable network.
        embedder (PoseEmbedder): Contour and depth embedding of poses.
    """

    def __init__(self, network: MMHandGenerator, embedder: PoseEmbedder) -> None:
        self.network = network
        self.embedder = embedder

    @property
    def config(self) -> GeneratorConfig:
        return self.network.config

    def generate_from_embeddings(self, image: np.ndarray, source: Embedding, target: Embedding) -> np.ndarray:
        """Evaluation-mode generation from precomputed embeddings; returns (H, W, C) in [0, 1]."""
        inputs = [t[None] for t in condition_tensors(image, source, target)]
        was_training = self.network.training
        self.network.eval()
        try:
            with torch.no_grad():
                out = self.network(*inputs)
        finally:
            self.network.train(was_training)
        return signed_to_image(out[0])


def generator_forward(
    gen: MMHand, source_image: np.ndarray, source_pose: Pose3D, target_pose: Pose3D, camera: Camera
) -> np.ndarray:
    """Generate the source hand's appearance in the target pose.

    Args:
        gen: Generator with its pose embedder.
        source_image: (H, W, C) in [0, 1].
        source_pose: Pose shown in `source_image`.
        target_pose: Pose to render.
        camera: Camera shared by both poses.

    Returns:
        np.ndarray: (H, W, C) float32 in [0, 1].

    Raises:
        ShapeMismatchError: If the image does not match the generator's configured size.
    """
    size = gen.config.image_size
    expected = (size, size, gen.config.image_channels)
    if np.asarray(source_image).shape != expected:
        raise ShapeMismatchError(f"source image has shape {np.asarray(source_image).shape}, expected {expected}")
    return gen.generate_from_embeddings(
        source_image, gen.embedder(source_pose, camera), gen.embedder(target_pose, camera)
    )
