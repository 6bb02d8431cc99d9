# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Dataset manifests on disk: loading with per-record validation and atomic saving."""

import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import anyio
from pydantic import ValidationError

from coreason_mmhand.config import settings
from coreason_mmhand.data.dataset import Dataset, HandSample
from coreason_mmhand.exceptions import DatasetError
from coreason_mmhand.pose.types import JOINT_ORDER_TAG, Camera, Pose3D
from coreason_mmhand.schemas import CameraRecord, DatasetManifest, SampleRecord
from coreason_mmhand.utils.io import (
    read_png_depth,
    read_png_mask,
    read_png_rgb,
    write_json,
    write_png_depth,
    write_png_mask,
    write_png_rgb,
)
from coreason_mmhand.utils.logger import logger

MANIFEST_NAME = "manifest.json"


def manifest_path(path: Union[str, Path]) -> Path:
    """Accept either a manifest file or the directory holding `manifest.json`."""
    path = Path(path)
    return path / MANIFEST_NAME if path.is_dir() else path


def read_manifest(path: Union[str, Path]) -> Tuple[Dict[str, object], List[object]]:
    """Parse the manifest envelope; records are validated one by one by the caller."""
    path = manifest_path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DatasetError(f"manifest {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("samples", []), list):
        raise DatasetError(f"manifest {path} must be an object with a 'samples' list")
    if raw.get("joint_order") != JOINT_ORDER_TAG:
        raise DatasetError(f"manifest joint order {raw.get('joint_order')!r} is not {JOINT_ORDER_TAG!r}")
    samples = raw.get("samples", [])
    envelope = {k: v for k, v in raw.items() if k != "samples"}
    return envelope, samples


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Parse and validate a manifest without touching the referenced files."""
    envelope, raw_samples = read_manifest(path)
    records = []
    for i, raw in enumerate(raw_samples):
        try:
            records.append(SampleRecord.model_validate(raw))
        except ValidationError as e:
            raise DatasetError(f"malformed record: {e.errors()[0]['msg']}", record_index=i) from e
    try:
        return DatasetManifest.model_validate({**envelope, "samples": [r.model_dump() for r in records]})
    except ValidationError as e:
        raise DatasetError(f"malformed manifest: {e}") from e


def camera_from_record(record: CameraRecord, image_size: Tuple[int, int]) -> Camera:
    """Build a validated camera; raises a pydantic `ValidationError` on bad matrices."""
    return Camera(intrinsic=record.K, rotation=record.R, center=record.C, image_size=image_size)


def _decode(root: Path, index: int, record: SampleRecord) -> HandSample:
    def file(rel: str) -> Path:
        full = root / rel
        if not full.is_file():
            raise DatasetError(f"missing file {rel}", record_index=index)
        return full

    image = read_png_rgb(file(record.image_path))
    try:
        pose = Pose3D(joints=record.pose3d)
    except ValidationError as e:
        raise DatasetError(f"malformed pose: {e.errors()[0]['msg']}", record_index=index) from e
    try:
        camera = camera_from_record(record.camera, (int(image.shape[0]), int(image.shape[1])))
    except ValidationError as e:
        raise DatasetError(f"invalid camera: {e.errors()[0]['msg']}", record_index=index) from e
    mask = read_png_mask(file(record.mask_path)) if record.mask_path else None
    depth = read_png_depth(file(record.depth_path)) if record.depth_path else None
    for name, arr in (("mask", mask), ("depth", depth)):
        if arr is not None and arr.shape != image.shape[:2]:
            raise DatasetError(f"{name} shape {arr.shape} does not match image {image.shape[:2]}", record_index=index)
    return HandSample(image=image, pose=pose, camera=camera, mask=mask, depth=depth, provenance=record.provenance)


async def load_dataset_async(path: Union[str, Path]) -> Dataset:
    """Decode every record concurrently (at most NUM_THREADS at a time), preserving manifest order."""
    manifest = load_manifest(path)
    root = manifest_path(path).parent
    results: List[Optional[HandSample]] = [None] * len(manifest.samples)
    failures: Dict[int, Exception] = {}
    limiter = anyio.CapacityLimiter(settings.worker_count())

    async def decode(i: int, record: SampleRecord) -> None:
        try:
            results[i] = await anyio.to_thread.run_sync(_decode, root, i, record, limiter=limiter)
        except Exception as e:  # reported below, lowest index first
            failures[i] = e

    async with anyio.create_task_group() as tg:
        for i, record in enumerate(manifest.samples):
            tg.start_soon(decode, i, record)

    if failures:
        first = min(failures)
        error = failures[first]
        logger.error(f"Failed to load dataset {path}: {error}")
        if isinstance(error, DatasetError):
            raise error
        raise DatasetError(str(error), record_index=first) from error
    logger.info(f"Loaded dataset {path} with {len(results)} samples")
    return Dataset([s for s in results if s is not None])


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Load a dataset from a manifest file or its directory.

    Raises:
        DatasetError: On unreadable manifests, missing files, malformed poses or invalid cameras,
            naming the offending record.
    """
    return anyio.run(load_dataset_async, path)


def sample_record(sample: HandSample, stem: str, out_dir: Path) -> SampleRecord:
    """Write one sample's image files under `out_dir` and return its manifest record."""
    image_rel = f"images/{stem}.png"
    write_png_rgb(out_dir / image_rel, sample.image)
    mask_rel = depth_rel = None
    if sample.mask is not None:
        mask_rel = f"masks/{stem}.png"
        write_png_mask(out_dir / mask_rel, sample.mask)
    if sample.depth is not None:
        depth_rel = f"depth/{stem}.png"
        write_png_depth(out_dir / depth_rel, sample.depth)
    return SampleRecord(
        image_path=image_rel,
        pose3d=sample.pose.to_list(),
        camera=CameraRecord(
            K=sample.camera.intrinsic.tolist(), R=sample.camera.rotation.tolist(), C=sample.camera.center.tolist()
        ),
        mask_path=mask_rel,
        depth_path=depth_rel,
        provenance=sample.provenance,
    )


def save_dataset(dataset: Dataset, out_dir: Union[str, Path]) -> Path:
    """Write images, masks, depth maps and the manifest; the manifest is written last and atomically."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [sample_record(sample, f"{i:05d}", out) for i, sample in enumerate(dataset)]
    manifest = DatasetManifest(joint_order=JOINT_ORDER_TAG, samples=records)
    path = out / MANIFEST_NAME
    write_json(path, manifest.model_dump(mode="json", exclude_none=True))
    logger.info(f"Saved dataset with {len(records)} samples to {out}")
    return path
