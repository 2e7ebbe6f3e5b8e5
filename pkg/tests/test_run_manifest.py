import json
import math
import os
from datetime import datetime

import numpy as np

from src.core import FlowMode, RunDirectory, load_config
from src.core.run_manifest import MANIFEST_NAME, dump_json, file_sha256, to_jsonable

CLOCK = datetime(2024, 5, 1, 12, 30, 0)


class TestJson:
    def test_infinity(self):
        assert to_jsonable({"psnr": math.inf, "low": -math.inf}) == {"psnr": "infinite", "low": "-infinite"}

    def test_numpy_values(self):
        data = to_jsonable({"array": np.arange(3), "value": np.float32(0.5), "count": np.int64(2)})
        assert data == {"array": [0, 1, 2], "value": 0.5, "count": 2}
        assert isinstance(data["count"], int)

    def test_enum(self):
        assert to_jsonable([FlowMode.PATCH]) == ["patch"]

    def test_sorted_keys(self):
        assert list(json.loads(dump_json({"b": 1, "a": 2}))) == ["a", "b"]


class TestRunDirectory:
    def test_layout(self, tmp_path):
        run = RunDirectory(str(tmp_path), "fit", {"grid": {}}, 3, "0.1.0", clock=CLOCK)
        assert os.path.basename(run.path) == "20240501-123000-fit"

    def test_collisions_get_suffix(self, tmp_path):
        first = RunDirectory(str(tmp_path), "decode", {}, 0, "0.1.0", clock=CLOCK)
        second = RunDirectory(str(tmp_path), "decode", {}, 0, "0.1.0", clock=CLOCK)
        assert second.path == first.path + "-1"

    def test_manifest(self, tmp_path, image_file):
        run = RunDirectory(str(tmp_path), "fit", {"steps": 5}, 3, "0.1.0", clock=CLOCK)
        run.add_input(image_file)
        report = run.write_json("report.json", {"psnr": math.inf})
        run.file("never_written.bin")
        target = run.finalize()

        assert os.path.basename(target) == MANIFEST_NAME
        assert not os.path.exists(target + ".tmp")
        with open(target, encoding="utf-8") as f:
            manifest = json.load(f)
        assert manifest["outputs"] == [report]
        assert manifest["inputs"] == {image_file: file_sha256(image_file)}
        assert manifest["seed"] == 3
        assert manifest["config"] == {"steps": 5}
        with open(report, encoding="utf-8") as f:
            assert json.load(f) == {"psnr": "infinite"}


class TestLoadConfig:
    def test_reads_sections(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text("grid:\n  k: 2\ntrain:\n  steps: 10\n", encoding="utf-8")
        assert load_config(str(path)) == {"grid": {"k": 2}, "train": {"steps": 10}}

    def test_missing_file(self, tmp_path):
        assert load_config(str(tmp_path / "absent.yml")) == {}

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        assert load_config(str(path)) == {}

    def test_broken_yaml(self, tmp_path):
        path = tmp_path / "broken.yml"
        path.write_text("grid: [1, 2\n", encoding="utf-8")
        assert load_config(str(path)) == {}
