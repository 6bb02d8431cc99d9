# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""
Core service for Coreason MMHand, implementing the Async-Native with Sync Facade pattern.
"""

from pathlib import Path
from types import TracebackType
from typing import Any, Callable, Dict, Optional, TypeVar

import anyio
import torch

from coreason_mmhand import workflows
from coreason_mmhand.config import settings
from coreason_mmhand.utils.logger import logger

T = TypeVar("T")


class ServiceAsync:
    """Async-native core service for Coreason MMHand.

    Each call runs its workflow in a worker thread; a single-slot limiter serializes workflows.
    """

    def __init__(self) -> None:
        self._limiter: Optional[anyio.CapacityLimiter] = None

    async def __aenter__(self) -> "ServiceAsync":
        """Async context manager entry. Initializes resources."""
        await self.setup()
        return self

    async def __aexit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        """Async context manager exit. Cleans up resources."""
        await self.shutdown()

    async def setup(self) -> None:
        """Apply thread settings and create the worker limiter."""
        if self._limiter is not None:
            logger.debug("Service already initialized.")
            return
        workers = settings.worker_count()
        torch.set_num_threads(workers)
        self._limiter = anyio.CapacityLimiter(1)
        logger.info(f"Coreason MMHand ready: device={settings.DEVICE}, workers={workers}")

    async def shutdown(self) -> None:
        self._limiter = None
        logger.debug("Service stopped.")

    async def _run(self, func: Callable[..., T], *args: Any) -> T:
        if self._limiter is None:
            await self.setup()
        return await anyio.to_thread.run_sync(func, *args, limiter=self._limiter)

    async def make_toy(self, n: int, seed: int, out: Path, size: int) -> Path:
        return await self._run(workflows.run_make_toy, n, seed, out, size)

    async def train_depth(self, config: Path, data: Path, out: Path) -> Dict[str, Path]:
        return await self._run(workflows.run_train_depth, config, data, out)

    async def train_gan(self, config: Path, data: Path, depth_ckpt: Path, hpm_ckpt: Path, out: Path) -> Dict[str, Path]:
        return await self._run(workflows.run_train_gan, config, data, depth_ckpt, hpm_ckpt, out)

    async def generate(self, ckpt: Path, source_image: Path, source_pose: Path, target_pose: Path, out: Path) -> Path:
        return await self._run(workflows.run_generate, ckpt, source_image, source_pose, target_pose, out)

    async def augment(self, ckpt: Path, data: Path, fraction: float, seed: int, out: Path) -> Path:
        return await self._run(workflows.run_augment, ckpt, data, fraction, seed, out)

    async def evaluate(self, pred: Path, gt: Path, out: Path, classifier: Optional[str] = None) -> Dict[str, Any]:
        return await self._run(workflows.run_evaluate, pred, gt, out, classifier)

    async def pair_stats(
        self, data: Path, n: int, seed: int, out: Path, ckpt: Optional[Path] = None, hpm_ckpt: Optional[Path] = None
    ) -> Dict[str, Any]:
        return await self._run(workflows.run_pair_stats, data, n, seed, out, ckpt, hpm_ckpt)


class Service:
    """Synchronous facade for ServiceAsync; each call drives its own event loop."""

    def __init__(self) -> None:
        self._async_service = ServiceAsync()

    def __enter__(self) -> "Service":
        anyio.run(self._async_service.setup)
        return self

    def __exit__(
        self,
        exc_type: Optional[type[BaseException]],
        exc_val: Optional[BaseException],
        exc_tb: Optional[TracebackType],
    ) -> None:
        anyio.run(self._async_service.__aexit__, exc_type, exc_val, exc_tb)

    def make_toy(self, n: int, seed: int, out: Path, size: int) -> Path:
        return anyio.run(self._async_service.make_toy, n, seed, out, size)

    def train_depth(self, config: Path, data: Path, out: Path) -> Dict[str, Path]:
        return anyio.run(self._async_service.train_depth, config, data, out)

    def train_gan(self, config: Path, data: Path, depth_ckpt: Path, hpm_ckpt: Path, out: Path) -> Dict[str, Path]:
        return anyio.run(self._async_service.train_gan, config, data, depth_ckpt, hpm_ckpt, out)

    def generate(self, ckpt: Path, source_image: Path, source_pose: Path, target_pose: Path, out: Path) -> Path:
        return anyio.run(self._async_service.generate, ckpt, source_image, source_pose, target_pose, out)

    def augment(self, ckpt: Path, data: Path, fraction: float, seed: int, out: Path) -> Path:
        return anyio.run(self._async_service.augment, ckpt, data, fraction, seed, out)

    def evaluate(self, pred: Path, gt: Path, out: Path, classifier: Optional[str] = None) -> Dict[str, Any]:
        return anyio.run(self._async_service.evaluate, pred, gt, out, classifier)

    def pair_stats(
        self, data: Path, n: int, seed: int, out: Path, ckpt: Optional[Path] = None, hpm_ckpt: Optional[Path] = None
    ) -> Dict[str, Any]:
        return anyio.run(self._async_service.pair_stats, data, n, seed, out, ckpt, hpm_ckpt)
