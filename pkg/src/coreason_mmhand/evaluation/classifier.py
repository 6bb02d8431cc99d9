# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Pluggable image classifiers for inception scores.

Nothing pretrained ships with the package: the default is a small convolutional classifier trained on a
synthetic label task (which finger is most extended), and `OnnxImageClassifier` runs an externally
supplied model. Scores from the toy classifier are not comparable to published inception scores.
"""

from pathlib import Path
from typing import List, Protocol, Union

import numpy as np
import onnxruntime as ort
import torch
from scipy.special import softmax
from torch import nn
from torch.utils.data import DataLoader, TensorDataset

from coreason_mmhand.config import settings
from coreason_mmhand.data.dataset import Dataset
from coreason_mmhand.exceptions import DatasetError, MMHandRuntimeError
from coreason_mmhand.hpm.models import FeatureTrunk
from coreason_mmhand.pose.types import FINGER_TIPS, WRIST, Pose3D
from coreason_mmhand.utils.logger import logger
from coreason_mmhand.utils.runtime import seed_everything

NUM_FINGER_CLASSES = len(FINGER_TIPS)


class ImageClassifier(Protocol):
    """Maps an (N, H, W, C) float batch in [0, 1] to an (N, K) table of class probabilities."""

    def __call__(self, images: np.ndarray) -> np.ndarray: ...


def finger_extension_label(pose: Pose3D) -> int:
    """Index (thumb..pinky) of the fingertip farthest from the wrist."""
    joints = pose.joints
    return int(np.argmax(np.linalg.norm(joints[list(FINGER_TIPS)] - joints[WRIST], axis=1)))


class TrunkClassifier(nn.Module):
    """Feature trunk, global average pooling and a linear head."""

    def __init__(self, in_channels: int = 3, channels: int = 16, num_classes: int = NUM_FINGER_CLASSES) -> None:
        super().__init__()
        self.trunk = FeatureTrunk(in_channels, channels, stride=4)
        self.head = nn.Linear(channels, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Return logits (B, K)."""
        return self.head(self.trunk(x).mean(dim=(2, 3)))


class TorchImageClassifier:
    """Softmax wrapper making a logits network an `ImageClassifier`."""

    def __init__(self, model: nn.Module) -> None:
        self.model = model.eval()

    def __call__(self, images: np.ndarray) -> np.ndarray:
        x = torch.from_numpy(np.ascontiguousarray(np.asarray(images, dtype=np.float32).transpose(0, 3, 1, 2)))
        with torch.no_grad():
            return torch.softmax(self.model(x).double(), dim=1).numpy()


def train_toy_classifier(dataset: Dataset, epochs: int = 10, seed: int = 0, lr: float = 1e-3) -> TorchImageClassifier:
    """Fit `TrunkClassifier` on the finger-extension label of every sample."""
    if len(dataset) == 0:
        raise DatasetError("cannot train a classifier on an empty dataset")
    generator = seed_everything(seed)
    model = TrunkClassifier()
    x = torch.from_numpy(np.ascontiguousarray(dataset.images().transpose(0, 3, 1, 2)))
    y = torch.tensor([finger_extension_label(s.pose) for s in dataset], dtype=torch.long)
    loader = DataLoader(TensorDataset(x, y), batch_size=16, shuffle=True, generator=generator)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    model.train()
    for _ in range(epochs):
        for xb, yb in loader:
            optimizer.zero_grad()
            loss = loss_fn(model(xb), yb)
            loss.backward()
            optimizer.step()
    logger.info(f"Trained toy classifier on {len(dataset)} samples for {epochs} epochs")
    return TorchImageClassifier(model)


class OnnxImageClassifier:
    """Runs an ONNX image classifier with the best available execution provider.

    The model must take an (N, C, H, W) float32 input and return (N, K) probabilities (or logits when
    `apply_softmax` is set).

    Attributes:
        apply_softmax (bool): Convert the model's logits to probabilities.
    """

    def __init__(self, model: Union[bytes, str, Path], apply_softmax: bool = False) -> None:
        self.apply_softmax = apply_softmax
        self._session = self._load_session(model)
        self._input_name = self._session.get_inputs()[0].name
        self._output_name = self._session.get_outputs()[0].name

    def _load_session(self, model: Union[bytes, str, Path]) -> ort.InferenceSession:
        """Create the inference session, preferring configured providers and falling back to CPU.

        Raises:
            MMHandRuntimeError: If the session cannot be created.
        """
        try:
            available = set(ort.get_available_providers())
            logger.info(f"Available ONNX providers: {available}")
            selected: List[str] = [p for p in settings.ONNX_PROVIDERS if p in available]
            if "CPUExecutionProvider" not in selected:
                selected.append("CPUExecutionProvider")
            logger.info(f"Selected ONNX providers for image classifier: {selected}")
            source = model if isinstance(model, bytes) else str(model)
            return ort.InferenceSession(source, providers=selected)
        except Exception as e:
            logger.error(f"Failed to load ONNX image classifier: {e}")
            raise MMHandRuntimeError(f"Failed to initialize classifier session: {e}") from e

    def __call__(self, images: np.ndarray) -> np.ndarray:
        batch = np.ascontiguousarray(np.asarray(images, dtype=np.float32).transpose(0, 3, 1, 2))
        try:
            (output,) = self._session.run([self._output_name], {self._input_name: batch})
        except Exception as e:
            logger.error(f"Classifier inference failed: {e}")
            raise MMHandRuntimeError(f"Classifier inference failed: {e}") from e
        probs = np.asarray(output, dtype=np.float64)
        return softmax(probs, axis=1) if self.apply_softmax else probs
