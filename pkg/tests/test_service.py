# Copyright (c) 2025 CoReason, Inc.
#
# This software is proprietary and dual-licensed.
# Licensed under the Prosperity Public License 3.0 (the "License").
# A copy of the license is available at https://prosperitylicense.com/versions/3.0.0
# For details, see the LICENSE file.
# Commercial use beyond a 30-day trial requires a separate license.
#
# Source Code: https://github.com/CoReason-AI/coreason_mmhand

import importlib
import json
from pathlib import Path
from typing import Generator, List
from unittest.mock import MagicMock, patch

import pytest

from coreason_mmhand.exceptions import DatasetError
from coreason_mmhand.main import ERROR_PREFIX, _shutdown_handler, exit_code, main
from coreason_mmhand.service import Service, ServiceAsync
from coreason_mmhand.utils.io import read_csv

# The package re-exports main(), which shadows the submodule attribute; patch via the module object.
_main_module = importlib.import_module("coreason_mmhand.main")


@pytest.fixture(autouse=True)
def keep_signal_handlers() -> Generator[None, None, None]:
    """main() installs SIGINT/SIGTERM handlers; keep the test runner's own."""
    with patch.object(_main_module.signal, "signal"):
        yield


def _error_lines(err: str) -> List[str]:
    return [line for line in err.splitlines() if line.startswith(ERROR_PREFIX)]


def _exit(argv: List[str]) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return int(excinfo.value.code)


@pytest.mark.asyncio
async def test_service_async_setup_is_idempotent() -> None:
    service = ServiceAsync()
    await service.setup()
    limiter = service._limiter
    assert limiter is not None
    await service.setup()
    assert service._limiter is limiter
    await service.shutdown()
    assert service._limiter is None


@pytest.mark.asyncio
async def test_service_async_make_toy(tmp_path: Path) -> None:
    async with ServiceAsync() as service:
        manifest = await service.make_toy(2, 0, tmp_path / "toy", 16)
    assert manifest.is_file()
    assert len(json.loads(manifest.read_text())["samples"]) == 2


def test_service_sync_facade_delegates_to_workflows(tmp_path: Path) -> None:
    with patch("coreason_mmhand.service.workflows.run_evaluate", return_value={"count": 1}) as run:
        with Service() as svc:
            assert svc.evaluate(tmp_path / "p", tmp_path / "g", tmp_path / "m.json") == {"count": 1}
    run.assert_called_once_with(tmp_path / "p", tmp_path / "g", tmp_path / "m.json", None)


def test_make_toy_then_pair_stats(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    data = tmp_path / "toy"
    main(["make-toy", "--n", "5", "--seed", "1", "--out", str(data), "--size", "16"])
    main(["pair-stats", "--data", str(data), "--n", "3", "--seed", "0", "--out", str(tmp_path / "stats")])
    out = capsys.readouterr().out.splitlines()
    assert out == [str(data / "manifest.json"), str(tmp_path / "stats")]
    assert read_csv(tmp_path / "stats" / "histogram.csv").num_rows == 3


def test_evaluate_ground_truth_against_itself(toy_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "metrics.json"
    main(["evaluate", "--pred", str(toy_dir), "--gt", str(toy_dir), "--out", str(out)])
    metrics = json.loads(out.read_text())
    assert metrics["epe_mm"] == 0.0
    assert metrics["pckb"] == 1.0
    assert (tmp_path / "metrics_pck.csv").is_file()


def test_usage_error_exits_2(capsys: pytest.CaptureFixture[str]) -> None:
    assert _exit(["make-toy", "--seed", "1"]) == 2
    lines = _error_lines(capsys.readouterr().err)
    assert len(lines) == 1
    assert lines[0].startswith(f"{ERROR_PREFIX} 2 ArgumentError:")


def test_unknown_command_exits_2() -> None:
    assert _exit(["train-everything"]) == 2


def test_validation_error_exits_3(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert _exit(["make-toy", "--n", "0", "--seed", "1", "--out", str(tmp_path), "--size", "16"]) == 3
    lines = _error_lines(capsys.readouterr().err)
    assert lines == [f"{ERROR_PREFIX} 3 MMHandValidationError: toy dataset needs n >= 1, got 0"]


def test_missing_dataset_exits_3(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = _exit(["evaluate", "--pred", str(tmp_path), "--gt", str(tmp_path), "--out", str(tmp_path / "m.json")])
    assert code == 3
    assert _error_lines(capsys.readouterr().err)[0].startswith(f"{ERROR_PREFIX} 3 DatasetError:")


def test_pair_stats_needs_both_checkpoints(toy_dir: Path, tmp_path: Path) -> None:
    argv = ["pair-stats", "--data", str(toy_dir), "--n", "3", "--seed", "0", "--out", str(tmp_path)]
    assert _exit(argv + ["--ckpt", str(tmp_path / "mmhand.ckpt")]) == 3


def test_runtime_error_exits_4(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    with patch.object(_main_module, "Service") as MockService:
        MockService.return_value.__enter__.return_value.make_toy.side_effect = RuntimeError("disk on fire")
        assert _exit(["make-toy", "--n", "1", "--seed", "1", "--out", str(tmp_path), "--size", "8"]) == 4
    assert _error_lines(capsys.readouterr().err) == [f"{ERROR_PREFIX} 4 RuntimeError: disk on fire"]


def test_exception_groups_are_unwrapped(tmp_path: Path) -> None:
    group = ExceptionGroup("workers", [DatasetError("bad record", record_index=5)])
    with patch.object(_main_module, "Service") as MockService:
        MockService.return_value.__enter__.return_value.evaluate.side_effect = group
        assert _exit(["evaluate", "--pred", "p", "--gt", "g", "--out", str(tmp_path / "m.json")]) == 3


def test_interrupt_exits_4() -> None:
    svc = MagicMock()
    svc.make_toy.side_effect = KeyboardInterrupt
    with patch.object(_main_module, "Service") as MockService:
        MockService.return_value.__enter__.return_value = svc
        assert _exit(["make-toy", "--n", "1", "--seed", "1", "--out", "x", "--size", "8"]) == 4


def test_exit_code_mapping() -> None:
    assert exit_code(DatasetError("x")) == 3
    assert exit_code(OSError("x")) == 4


def test_shutdown_handler() -> None:
    with pytest.raises(KeyboardInterrupt):
        _shutdown_handler(15, None)
