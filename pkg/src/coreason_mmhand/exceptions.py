# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

"""Exception hierarchy for Coreason MMHand.

Validation failures subclass `ValueError` and runtime failures subclass `RuntimeError`, so callers
that only know the builtin types keep working. The CLI maps them to exit codes 3 and 4.
"""

from typing import Any, Dict, Optional


class MMHandError(Exception):
    """Root of every error raised by this package."""


class MMHandValidationError(MMHandError, ValueError):
    """Invalid input: bad shapes, degenerate geometry, malformed files."""


class MMHandRuntimeError(MMHandError, RuntimeError):
    """A computation or I/O step failed at runtime."""


class ProjectionError(MMHandValidationError):
    """A point projects at or behind the camera plane, or the camera itself is invalid."""


class DegeneratePoseError(MMHandValidationError):
    """The pose identity vector is zero, so the pose distance is undefined."""


class DecodeError(MMHandValidationError):
    """A heat-map channel carries no location information (constant or all-zero)."""


class ShapeMismatchError(MMHandValidationError):
    """Tensor or image shapes disagree with each other or with the configured resolution."""


class CheckpointError(MMHandValidationError):
    """A checkpoint file failed magic, version, checksum or component checks."""


class DatasetError(MMHandValidationError):
    """A dataset manifest or one of its records is invalid.

    Attributes:
        record_index (Optional[int]): Index of the offending record, when one is to blame.
    """

    def __init__(self, message: str, record_index: Optional[int] = None) -> None:
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


class NonFiniteLossError(MMHandRuntimeError):
    """A training step produced a NaN or infinite loss.

    Attributes:
        record (Dict[str, Any]): The loss record of the aborted step.
    """

    def __init__(self, message: str, record: Dict[str, Any]) -> None:
        self.record = record
        super().__init__(f"{message}: {record}")
