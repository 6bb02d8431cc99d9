# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Versioned, checksummed parameter files.

Layout: b"MMHF" | u32 version | u32 header length | JSON header | tensor blob | sha256 of all preceding bytes.
The header names the component, snapshots its configuration and lists every tensor's name, shape, dtype
and blob offset.
"""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict
from torch import nn

from coreason_mmhand.config import settings
from coreason_mmhand.exceptions import CheckpointError
from coreason_mmhand.utils.io import atomic_write_bytes
from coreason_mmhand.utils.logger import logger

MAGIC = b"MMHF"
_PREFIX = struct.Struct("<4sII")
_DIGEST = 32


class Checkpoint(BaseModel):
    """A decoded checkpoint.

    Attributes:
        component (str): What the parameters belong to (e.g. "depth", "hpm3d", "mmhand").
        version (int): Format version the file was written with.
        config (Dict[str, Any]): Configuration snapshot.
        tensors (Dict[str, torch.Tensor]): Parameters by name.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    component: str
    version: int
    config: Dict[str, Any]
    tensors: Dict[str, torch.Tensor]

    def state_dict(self, prefix: str = "") -> Dict[str, torch.Tensor]:
        """Tensors under `prefix.`, with the prefix stripped (all tensors when `prefix` is empty)."""
        if not prefix:
            return dict(self.tensors)
        head = prefix + "."
        return {k[len(head) :]: v for k, v in self.tensors.items() if k.startswith(head)}

    def load_into(self, module: nn.Module, prefix: str = "") -> nn.Module:
        try:
            module.load_state_dict(self.state_dict(prefix))
        except RuntimeError as e:
            raise CheckpointError(f"checkpoint tensors do not fit {type(module).__name__}: {e}") from e
        return module


def encode_checkpoint(component: str, tensors: Mapping[str, torch.Tensor], config: Mapping[str, Any]) -> bytes:
    table = []
    blobs = []
    offset = 0
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor.detach().cpu().numpy())
        data = arr.tobytes()
        table.append({"name": name, "shape": list(arr.shape), "dtype": arr.dtype.str, "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = json.dumps({"component": component, "config": dict(config), "tensors": table}, sort_keys=True)
    header_bytes = header.encode("utf-8")
    body = _PREFIX.pack(MAGIC, settings.CHECKPOINT_VERSION, len(header_bytes)) + header_bytes + b"".join(blobs)
    return body + hashlib.sha256(body).digest()


def decode_checkpoint(data: bytes, component: Optional[str] = None) -> Checkpoint:
    """Parse and verify checkpoint bytes.

    Raises:
        CheckpointError: On bad magic, unsupported version, checksum mismatch, malformed header or an
            unexpected component.
    """
    if len(data) < _PREFIX.size + _DIGEST:
        raise CheckpointError("checkpoint is truncated")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version < 1 or version > settings.CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    body, digest = data[:-_DIGEST], data[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint checksum mismatch")
    start = _PREFIX.size
    try:
        header = json.loads(body[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError("checkpoint header is not valid JSON") from e
    if not isinstance(header, dict):
        raise CheckpointError("checkpoint header is not a JSON object")
    if component is not None and header.get("component") != component:
        raise CheckpointError(f"checkpoint holds component {header.get('component')!r}, expected {component!r}")
    blob = body[start + header_len :]
    tensors: Dict[str, torch.Tensor] = {}
    try:
        for entry in header["tensors"]:
            dtype = np.dtype(entry["dtype"])
            count = int(np.prod(entry["shape"], dtype=np.int64))
            end = entry["offset"] + count * dtype.itemsize
            if end > len(blob):
                raise CheckpointError(f"tensor {entry['name']} runs past the end of the blob")
            arr = np.frombuffer(blob, dtype=dtype, count=count, offset=entry["offset"]).reshape(entry["shape"])
            tensors[entry["name"]] = torch.from_numpy(arr.copy())
        return Checkpoint(component=header["component"], version=version, config=header["config"], tensors=tensors)
    except CheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"checkpoint header is malformed: {e!r}") from e


def save_checkpoint(
    path: Path, component: str, modules: Mapping[str, nn.Module], config: Mapping[str, Any]
) -> None:
    """Write the state dicts of `modules` (keys become tensor-name prefixes) atomically.

    A single module may be stored without a prefix by passing it under the key "".
    """
    tensors: Dict[str, torch.Tensor] = {}
    for prefix, module in modules.items():
        for name, tensor in module.state_dict().items():
            tensors[f"{prefix}.{name}" if prefix else name] = tensor
    atomic_write_bytes(Path(path), encode_checkpoint(component, tensors, config))
    logger.info(f"Saved {component} checkpoint to {path} ({len(tensors)} tensors)")


def load_checkpoint(path: Path, component: Optional[str] = None) -> Checkpoint:
    """Read and verify a checkpoint file."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        logger.error(f"Cannot read checkpoint {path}: {e}")
        raise CheckpointError(f"cannot read checkpoint {path}") from e
    return decode_checkpoint(data, component)
