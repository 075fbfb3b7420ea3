"""Tests for artifact stores, text formats and the manifest."""

import json
import math

import numpy as np
import pytest

from pme_lab.exceptions import ArtifactError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField
from pme_lab.runner.artifacts import (
    ArtifactStore,
    DirectoryArtifactStore,
    InMemoryArtifactStore,
    build_manifest,
    content_hash,
    csv_text,
    field_text,
    json_text,
)


class TestContentHash:
    """Tests for content_hash."""

    def test_line_endings_are_normalized(self):
        """CRLF and LF content hash the same."""
        assert content_hash("a\r\nb\r\n") == content_hash("a\nb\n")
        assert content_hash("a") != content_hash("b")


class TestInMemoryArtifactStore:
    """Tests for InMemoryArtifactStore."""

    def test_implements_protocol(self):
        """Both stores satisfy ArtifactStore."""
        assert isinstance(InMemoryArtifactStore(), ArtifactStore)

    def test_put_and_get(self):
        """Stored content comes back unchanged with its checksum listed."""
        store = InMemoryArtifactStore()
        checksum = store.put("b.csv", "x\n1\n")
        store.put("a.json", "{}\n")
        assert store.get("b.csv") == "x\n1\n"
        assert store.list_artifacts()["b.csv"] == checksum
        assert list(store.list_artifacts()) == ["a.json", "b.csv"]

    def test_identical_put_is_a_no_op(self):
        """Storing the same content twice is allowed."""
        store = InMemoryArtifactStore()
        first = store.put("a.txt", "same")
        assert store.put("a.txt", "same") == first

    def test_conflicting_put(self):
        """Different content under one name is refused."""
        store = InMemoryArtifactStore()
        store.put("a.txt", "one")
        with pytest.raises(ArtifactError, match="already stored"):
            store.put("a.txt", "two")

    def test_missing_artifact(self):
        """Unknown names raise ArtifactError."""
        with pytest.raises(ArtifactError, match="No artifact"):
            InMemoryArtifactStore().get("nope.txt")

    @pytest.mark.parametrize("name", ["", "/etc/passwd", "../outside.txt", "fields/../../x"])
    def test_names_stay_inside(self, name):
        """Absolute paths and parent references are refused."""
        with pytest.raises(ArtifactError, match="relative path"):
            InMemoryArtifactStore().put(name, "x")


class TestDirectoryArtifactStore:
    """Tests for DirectoryArtifactStore."""

    def test_writes_nested_files(self, tmp_path):
        """Subdirectories are created on demand."""
        store = DirectoryArtifactStore(tmp_path / "out")
        store.put("fields/rho_00000.txt", "1.0\n")
        assert (tmp_path / "out" / "fields" / "rho_00000.txt").read_text() == "1.0\n"
        assert store.get("fields/rho_00000.txt") == "1.0\n"
        assert isinstance(store, ArtifactStore)

    def test_conflicting_write(self, tmp_path):
        """A second write with different content is refused."""
        store = DirectoryArtifactStore(tmp_path)
        store.put("a.txt", "one")
        with pytest.raises(ArtifactError, match="already written"):
            store.put("a.txt", "two")
        assert (tmp_path / "a.txt").read_text() == "one"

    def test_missing_file(self, tmp_path):
        """Reading an unwritten name raises ArtifactError."""
        with pytest.raises(ArtifactError, match="No artifact"):
            DirectoryArtifactStore(tmp_path).get("missing.txt")


class TestTextFormats:
    """Tests for csv_text, json_text and field_text."""

    def test_csv_blank_cells(self):
        """None and non-finite values are empty cells; extra keys are dropped."""
        rows = [{"n": 1, "value": 0.5, "extra": 9}, {"n": 2, "value": math.inf}, {"n": 3, "value": None}]
        text = csv_text(rows, ["n", "value"])
        assert text == "n,value\n1,0.5\n2,\n3,\n"

    def test_csv_header_from_first_row(self):
        """Columns default to the first row's keys."""
        assert csv_text([{"a": 1, "b": True}]) == "a,b\n1,True\n"

    def test_json_text_is_stable(self):
        """Keys are sorted and infinities become null."""
        text = json_text({"b": 1, "a": math.inf})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": None, "b": 1}

    def test_field_text_header(self):
        """Field dumps start with label, time, shape and box."""
        rho = DensityField(Grid.unit(4, 4), np.ones((4, 4)), 0.5)
        lines = field_text(rho, "rho").splitlines()
        assert lines[:5] == [
            "# field rho",
            "# time 0.5",
            "# shape 4 4",
            "# lower 0.0 0.0",
            "# upper 1.0 1.0",
        ]
        assert lines[5:] == ["1.0"] * 16

    def test_field_text_for_arrays(self):
        """Plain arrays need the grid and time passed in."""
        grid = Grid.unit(4)
        lines = field_text(np.array([0.0, 1.0, 2.0, 3.0]), "c", grid, 0.1).splitlines()
        assert lines[0] == "# field c"
        assert lines[-1] == "3.0"


class TestManifest:
    """Tests for build_manifest."""

    def test_manifest_lists_every_artifact(self):
        """Artifacts are listed by name with their checksum, plus versions."""
        store = InMemoryArtifactStore()
        store.put("summary.json", "{}\n")
        store.put("timeseries.csv", "step\n0\n")
        manifest = json.loads(build_manifest({"model": {"m": 2.0}}, store.list_artifacts()))
        assert manifest["schema_version"] == 1
        assert manifest["config"] == {"model": {"m": 2.0}}
        assert [a["name"] for a in manifest["artifacts"]] == ["summary.json", "timeseries.csv"]
        assert manifest["artifacts"][0]["sha256"] == content_hash("{}\n")
        assert {"pme_lab", "numpy", "scipy", "python"} <= set(manifest["versions"])
