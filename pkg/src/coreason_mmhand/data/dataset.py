# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""In-memory dataset records."""

from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from coreason_mmhand.pose.types import Camera, Pose3D


class HandSample(BaseModel):
    """One decoded sample.

    Attributes:
        image (np.ndarray): (H, W, 3) float32 in [0, 1].
        pose (Pose3D): World-frame joints in mm.
        camera (Camera): Camera that produced `image`.
        mask (Optional[np.ndarray]): (H, W) bool foreground mask.
        depth (Optional[np.ndarray]): (H, W) float32 normalized depth in [0, 1].
        provenance (Optional[Dict[str, Any]]): Origin of synthesized samples (source index, distance).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image: np.ndarray
    pose: Pose3D
    camera: Camera
    mask: Optional[np.ndarray] = None
    depth: Optional[np.ndarray] = None
    provenance: Optional[Dict[str, Any]] = Field(default=None)

    @field_validator("image")
    @classmethod
    def _check_image(cls, value: np.ndarray) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"image must be (H, W, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
            raise ValueError("image values must be finite and in [0, 1]")
        return arr

    @property
    def size(self) -> int:
        return int(self.image.shape[0])


class Dataset:
    """Ordered, immutable collection of `HandSample` records."""

    def __init__(self, samples: Sequence[HandSample]) -> None:
        self._samples: List[HandSample] = list(samples)

    def __len__(self) -> int:
        return len(self._samples)

    def __getitem__(self, index: int) -> HandSample:
        return self._samples[index]

    def __iter__(self) -> Iterator[HandSample]:
        return iter(self._samples)

    @property
    def samples(self) -> List[HandSample]:
        return list(self._samples)

    def poses(self) -> List[Pose3D]:
        return [s.pose for s in self._samples]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset([self._samples[i] for i in indices])

    def images(self) -> np.ndarray:
        """(N, H, W, 3) float32 stack."""
        return np.stack([s.image for s in self._samples]).astype(np.float32)
