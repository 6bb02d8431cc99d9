import json
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pytest

from coreason_mmhand.data import (
    Dataset,
    HandSample,
    generate_toy_samples,
    load_dataset,
    load_manifest,
    make_toy_dataset,
    save_dataset,
)
from coreason_mmhand.exceptions import DatasetError, MMHandValidationError
from coreason_mmhand.pose.types import JOINT_ORDER_TAG


def _edit_manifest(toy_dir: Path) -> Dict[str, Any]:
    return dict(json.loads((toy_dir / "manifest.json").read_text()))


def _write_manifest(toy_dir: Path, doc: Dict[str, Any]) -> None:
    (toy_dir / "manifest.json").write_text(json.dumps(doc))


def test_toy_dataset_loads_from_directory_or_manifest(toy_dir: Path) -> None:
    by_dir = load_dataset(toy_dir)
    by_file = load_dataset(toy_dir / "manifest.json")
    assert len(by_dir) == len(by_file) == 4
    for sample in by_dir:
        assert sample.image.shape == (16, 16, 3)
        assert sample.image.dtype == np.float32
        assert 0.0 <= sample.image.min() and sample.image.max() <= 1.0
        assert sample.pose.joints.shape == (21, 3)


def test_save_then_load_preserves_the_manifest(toy_dir: Path, tmp_path: Path) -> None:
    dataset = load_dataset(toy_dir)
    copy = tmp_path / "copy"
    save_dataset(dataset, copy)
    assert load_manifest(copy) == load_manifest(toy_dir)
    reloaded = load_dataset(copy)
    for a, b in zip(dataset, reloaded):
        np.testing.assert_array_equal(a.image, b.image)
        np.testing.assert_array_equal(a.mask, b.mask)
        np.testing.assert_array_equal(a.depth, b.depth)
        np.testing.assert_array_equal(a.pose.joints, b.pose.joints)


def test_same_seed_gives_identical_manifests(tmp_path: Path) -> None:
    first = make_toy_dataset(5, seed=9, out_dir=tmp_path / "a", size=16)
    second = make_toy_dataset(5, seed=9, out_dir=tmp_path / "b", size=16)
    assert first.read_bytes() == second.read_bytes()
    assert len(load_dataset(first)) == 5
    third = make_toy_dataset(5, seed=10, out_dir=tmp_path / "c", size=16)
    assert third.read_bytes() != first.read_bytes()


def test_mask_is_the_support_of_depth(toy_dir: Path) -> None:
    for sample in load_dataset(toy_dir):
        assert sample.mask is not None and sample.depth is not None
        np.testing.assert_array_equal(sample.mask, sample.depth > 0)
    for sample in generate_toy_samples(3, seed=0, size=24):
        np.testing.assert_array_equal(sample.mask, sample.depth > 0)


def test_toy_generator_validates_arguments() -> None:
    with pytest.raises(MMHandValidationError):
        generate_toy_samples(0, seed=0)
    with pytest.raises(MMHandValidationError):
        generate_toy_samples(1, seed=0, size=0)


def test_empty_manifest_is_a_valid_empty_dataset(tmp_path: Path) -> None:
    (tmp_path / "manifest.json").write_text(json.dumps({"joint_order": JOINT_ORDER_TAG, "samples": []}))
    assert len(load_dataset(tmp_path)) == 0


def test_twenty_joint_record_is_named(toy_dir: Path) -> None:
    doc = _edit_manifest(toy_dir)
    doc["samples"][2]["pose3d"] = doc["samples"][2]["pose3d"][:20]
    _write_manifest(toy_dir, doc)
    with pytest.raises(DatasetError, match="record 2") as info:
        load_dataset(toy_dir)
    assert info.value.record_index == 2


def test_missing_image_is_named(toy_dir: Path) -> None:
    doc = _edit_manifest(toy_dir)
    (toy_dir / doc["samples"][1]["image_path"]).unlink()
    with pytest.raises(DatasetError, match="record 1: missing file"):
        load_dataset(toy_dir)


def test_invalid_camera_is_named(toy_dir: Path) -> None:
    doc = _edit_manifest(toy_dir)
    doc["samples"][3]["camera"]["R"] = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    _write_manifest(toy_dir, doc)
    with pytest.raises(DatasetError, match="record 3: invalid camera"):
        load_dataset(toy_dir)


def test_unknown_record_key_is_named(toy_dir: Path) -> None:
    doc = _edit_manifest(toy_dir)
    doc["samples"][0]["colour"] = "blue"
    _write_manifest(toy_dir, doc)
    with pytest.raises(DatasetError, match="record 0"):
        load_manifest(toy_dir)


def test_manifest_envelope_errors(tmp_path: Path) -> None:
    with pytest.raises(DatasetError, match="cannot read manifest"):
        load_dataset(tmp_path / "nowhere.json")
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(DatasetError, match="not valid JSON"):
        load_dataset(tmp_path)
    (tmp_path / "manifest.json").write_text(json.dumps({"joint_order": "mano", "samples": []}))
    with pytest.raises(DatasetError, match="joint order"):
        load_dataset(tmp_path)


def test_provenance_survives_saving(tiny_dataset: Dataset, tmp_path: Path) -> None:
    sample: HandSample = tiny_dataset[0].model_copy(update={"provenance": {"source_index": 3, "distance": 0.125}})
    save_dataset(Dataset([sample]), tmp_path)
    assert load_dataset(tmp_path)[0].provenance == {"source_index": 3, "distance": 0.125}


def test_dataset_views(tiny_dataset: Dataset) -> None:
    assert len(tiny_dataset.subset([1, 3])) == 2
    assert tiny_dataset.images().shape == (8, 16, 16, 3)
    assert len(tiny_dataset.poses()) == 8
    assert tiny_dataset.samples[0] is tiny_dataset[0]


def test_hand_sample_rejects_out_of_range_pixels(tiny_dataset: Dataset) -> None:
    with pytest.raises(ValueError):
        HandSample(image=np.full((4, 4, 3), 2.0), pose=tiny_dataset[0].pose, camera=tiny_dataset[0].camera)
