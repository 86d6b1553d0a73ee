"""Tests for seeding, serialization and table helpers."""

import json

import numpy as np

from noisegate import utils


class TestSeeding:

    def test_substreams_are_keyed(self):
        same = utils.substream(1, 2, 3).random(4)
        assert np.array_equal(same, utils.substream(1, 2, 3).random(4))
        assert not np.array_equal(same, utils.substream(1, 2, 4).random(4))

    def test_derived_seed_is_stable(self):
        assert utils.derive_seed(5, 1) == utils.derive_seed(5, 1)
        assert utils.derive_seed(5, 1) != utils.derive_seed(5, 2)

    def test_parallel_map_keeps_order(self):
        assert utils.parallel_map(lambda x: x * x, range(10), jobs=4) == [x * x for x in range(10)]


class TestSerialization:

    def test_non_finite_becomes_null(self):
        data = {"a": np.float64("nan"), "b": np.array([1, 2]), "c": (np.int64(3), np.bool_(True)), "d": float("inf")}
        assert utils.to_builtin(data) == {"a": None, "b": [1, 2], "c": [3, True], "d": None}

    def test_json_keys_sorted(self):
        text = utils.dumps_json({"b": 1, "a": {"d": 2, "c": 3}})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": {"c": 3, "d": 2}, "b": 1}

    def test_mapping_by_suffix(self, tmp_path):
        toml_path = tmp_path / "c.toml"
        toml_path.write_text("[runtime]\nseed = 4\n")
        yaml_path = tmp_path / "c.yaml"
        yaml_path.write_text("runtime:\n  seed: 5\n")
        assert utils.load_mapping(toml_path) == {"runtime": {"seed": 4}}
        assert utils.load_mapping(yaml_path) == {"runtime": {"seed": 5}}


class TestFormatTable:

    def test_missing_and_float_cells(self):
        table = utils.format_table(["name", "value"], [["a", None], ["bb", 0.123456]])
        lines = table.splitlines()
        assert lines[0].split() == ["name", "value"]
        assert lines[2].split() == ["a", "*"]
        assert lines[3].split() == ["bb", "0.1235"]
