import logging

import numpy as np
import pytest

from lowlight import (DatasetSpec, EmptyDatasetError, iterate_dataset,
                      load_image, mean_brightness, synthesize_dark_pairs)


class TestDatasetSpec:
    def test_rejects_missing_root(self, tmp_path):
        with pytest.raises(ValueError, match="directory"):
            DatasetSpec(root=tmp_path / "missing")

    def test_rejects_tiny_target(self, tmp_path):
        with pytest.raises(ValueError, match="16"):
            DatasetSpec(root=tmp_path, target_size=(8, 32))


class TestIterateDataset:
    def test_seeded_order_repeats(self, image_dir):
        spec = DatasetSpec(root=image_dir, target_size=(16, 16), shuffle_seed=0)
        first = list(iterate_dataset(spec))
        second = list(iterate_dataset(spec))
        assert len(first) == 5
        for a, b in zip(first, second):
            assert np.array_equal(a, b)

    def test_different_seed_changes_order(self, image_dir):
        a = list(iterate_dataset(DatasetSpec(image_dir, (16, 16), shuffle_seed=0)))
        b = list(iterate_dataset(DatasetSpec(image_dir, (16, 16), shuffle_seed=1)))
        assert any(not np.array_equal(x, y) for x, y in zip(a, b))

    def test_images_resized_to_target(self, image_dir):
        spec = DatasetSpec(root=image_dir, target_size=(20, 28))
        for img in iterate_dataset(spec):
            assert img.shape == (3, 20, 28)

    def test_corrupt_file_skipped_with_warning(self, image_dir, caplog):
        (image_dir / "broken.png").write_bytes(b"not a png at all")
        spec = DatasetSpec(root=image_dir, target_size=(16, 16))
        with caplog.at_level(logging.WARNING, logger="lowlight.data"):
            images = list(iterate_dataset(spec))
        assert len(images) == 5
        warnings = [r for r in caplog.records if "skipping unreadable" in r.message]
        assert len(warnings) == 1

    def test_empty_directory_raises(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(EmptyDatasetError):
            iterate_dataset(DatasetSpec(root=empty))


class TestSynthesizeDarkPairs:
    def test_pair_layout_and_count(self, image_dir, tmp_path):
        out = tmp_path / "paired"
        pairs = synthesize_dark_pairs(image_dir, out, gamma=3.0)
        assert len(pairs) == 5
        for truth, dark in pairs:
            assert truth.exists() and dark.exists()
            assert dark.name == truth.stem + "_dark.png"

    def test_gamma_one_matches_truth(self, image_dir, tmp_path):
        pairs = synthesize_dark_pairs(image_dir, tmp_path / "p1", gamma=1.0)
        for truth, dark in pairs:
            assert np.array_equal(load_image(truth), load_image(dark))

    def test_darkening_lowers_brightness(self, image_dir, tmp_path):
        pairs = synthesize_dark_pairs(image_dir, tmp_path / "p3", gamma=3.0)
        truth_mean = np.mean([mean_brightness(load_image(t)) for t, _ in pairs])
        dark_mean = np.mean([mean_brightness(load_image(d)) for _, d in pairs])
        assert dark_mean < truth_mean
