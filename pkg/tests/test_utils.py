import json
import os
from pathlib import Path

import numpy as np
import pyarrow as pa
import pytest
import torch

from coreason_mmhand.config import Settings
from coreason_mmhand.utils.io import (
    atomic_path,
    read_csv,
    read_png_depth,
    read_png_mask,
    read_png_rgb,
    write_csv,
    write_json,
    write_png_depth,
    write_png_mask,
    write_png_rgb,
)
from coreason_mmhand.utils.runtime import seed_everything, torch_device


def test_atomic_path_leaves_nothing_behind_on_failure(tmp_path: Path) -> None:
    target = tmp_path / "out.txt"
    target.write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_path(target) as tmp:
            tmp.write_text("half")
            raise RuntimeError("boom")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_json_is_sorted_and_indented(tmp_path: Path) -> None:
    write_json(tmp_path / "a" / "doc.json", {"b": 1, "a": [1, 2]})
    text = (tmp_path / "a" / "doc.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1, 2], "b": 1}


def test_csv_round_trip(tmp_path: Path) -> None:
    table = pa.table({"threshold": [20.0, 21.0], "pck": [0.5, 1.0]})
    write_csv(table, tmp_path / "curve.csv")
    assert read_csv(tmp_path / "curve.csv").to_pydict() == table.to_pydict()


def test_png_codecs_quantize_predictably(tmp_path: Path, rng: np.random.Generator) -> None:
    rgb = rng.random((5, 6, 3))
    write_png_rgb(tmp_path / "rgb.png", rgb)
    np.testing.assert_allclose(read_png_rgb(tmp_path / "rgb.png"), rgb, atol=0.5 / 255 + 1e-6)

    mask = rng.random((5, 6)) > 0.5
    write_png_mask(tmp_path / "mask.png", mask)
    np.testing.assert_array_equal(read_png_mask(tmp_path / "mask.png"), mask)

    depth = rng.random((5, 6))
    write_png_depth(tmp_path / "depth.png", depth)
    restored = read_png_depth(tmp_path / "depth.png")
    assert restored.dtype == np.float32
    np.testing.assert_allclose(restored, depth, atol=0.5 / 65535 + 1e-6)


def test_seed_everything_is_reproducible() -> None:
    gen = seed_everything(42)
    a = torch.randn(3), np.random.rand(2), torch.randint(0, 100, (4,), generator=gen)
    gen = seed_everything(42)
    b = torch.randn(3), np.random.rand(2), torch.randint(0, 100, (4,), generator=gen)
    assert torch.equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and torch.equal(a[2], b[2])


def test_torch_device_defaults_to_cpu() -> None:
    assert torch_device() == torch.device("cpu")


def test_settings_read_prefixed_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("MMHAND_NUM_THREADS", "3")
    monkeypatch.setenv("MMHAND_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.worker_count() == 3
    assert settings.LOG_LEVEL == "DEBUG"
    assert settings.ONNX_PROVIDERS[-1] == "CPUExecutionProvider"


def test_auto_worker_count_is_positive(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("MMHAND_NUM_THREADS", "0")
    monkeypatch.setattr(os, "cpu_count", lambda: None)
    assert Settings().worker_count() == 1
