"""Storage for run outputs and the manifest that lists them."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
from collections.abc import Iterator, Sequence
from pathlib import Path, PurePosixPath
from typing import Any, Protocol, runtime_checkable

import numpy as np
import scipy

from pme_lab import __version__
from pme_lab.audit.report import jsonable
from pme_lab.exceptions import ArtifactError
from pme_lab.geometry.grid import Grid
from pme_lab.measures.density import DensityField

__all__ = [
    "MANIFEST_NAME",
    "MANIFEST_SCHEMA_VERSION",
    "ArtifactStore",
    "DirectoryArtifactStore",
    "InMemoryArtifactStore",
    "build_manifest",
    "content_hash",
    "csv_text",
    "field_text",
    "json_text",
]

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_SCHEMA_VERSION = 1


def content_hash(content: str) -> str:
    """Compute SHA256 checksum with normalized line endings."""
    normalized = content.replace("\r\n", "\n").replace("\r", "\n")
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def _check_name(name: str) -> str:
    path = PurePosixPath(name)
    if not name or path.is_absolute() or ".." in path.parts:
        raise ArtifactError(f"Artifact name must be a relative path inside the output directory: {name!r}")
    return str(path)


@runtime_checkable
class ArtifactStore(Protocol):
    """
    Holds the text artifacts of one run.

    Semantics:
    - Names are relative POSIX paths.
    - Storing the same name twice with the same content is a no-op;
      different content raises ArtifactError.
    """

    def put(self, name: str, content: str) -> str:
        """Store ``content`` under ``name`` and return its checksum."""
        ...

    def get(self, name: str) -> str:
        """Return the stored content."""
        ...

    def list_artifacts(self) -> dict[str, str]:
        """Return name -> checksum for everything stored."""
        ...


class InMemoryArtifactStore:
    def __init__(self) -> None:
        self._items: dict[str, str] = {}

    def put(self, name: str, content: str) -> str:
        name = _check_name(name)
        checksum = content_hash(content)
        if name in self._items:
            existing = content_hash(self._items[name])
            if existing != checksum:
                raise ArtifactError(
                    f"Artifact {name} already stored with checksum {existing}, "
                    f"but attempted to store checksum {checksum}"
                )
            return checksum
        self._items[name] = content
        return checksum

    def get(self, name: str) -> str:
        try:
            return self._items[name]
        except KeyError as e:
            raise ArtifactError(f"No artifact named {name}") from e

    def list_artifacts(self) -> dict[str, str]:
        return {name: content_hash(content) for name, content in sorted(self._items.items())}

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(sorted(self._items.items()))


class DirectoryArtifactStore:
    """Writes artifacts under ``root``; the directory is created on first write."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)
        self._written: dict[str, str] = {}

    def put(self, name: str, content: str) -> str:
        name = _check_name(name)
        checksum = content_hash(content)
        if name in self._written and self._written[name] != checksum:
            raise ArtifactError(
                f"Artifact {name} already written with checksum {self._written[name]}, "
                f"but attempted to write checksum {checksum}"
            )
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8", newline="\n")
        self._written[name] = checksum
        logger.debug(f"Wrote {path}")
        return checksum

    def get(self, name: str) -> str:
        path = self.root / _check_name(name)
        if not path.is_file():
            raise ArtifactError(f"No artifact named {name} under {self.root}")
        return path.read_text(encoding="utf-8")

    def list_artifacts(self) -> dict[str, str]:
        return dict(sorted(self._written.items()))


def json_text(payload: Any) -> str:
    return json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"


def csv_text(rows: Sequence[dict[str, Any]], columns: Sequence[str] | None = None) -> str:
    """CSV with a header row; ``None`` and non-finite numbers become empty cells."""
    if columns is None:
        columns = list(rows[0]) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in columns})
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    value = jsonable(value)
    return "" if value is None else value


def field_text(
    rho: DensityField | np.ndarray,
    label: str,
    grid: Grid | None = None,
    time: float | None = None,
) -> str:
    """Plain-text dump: ``#`` header lines, then one value per line in C order."""
    if isinstance(rho, DensityField):
        grid, values, time = rho.grid, rho.values, rho.time
    else:
        values = np.asarray(rho, dtype=float)
    lines = [
        f"# field {label}",
        f"# time {time!r}",
        "# shape " + " ".join(str(n) for n in values.shape),
    ]
    if grid is not None:
        lines.append("# lower " + " ".join(repr(v) for v in grid.lower))
        lines.append("# upper " + " ".join(repr(v) for v in grid.upper))
    lines.extend(repr(float(v)) for v in values.reshape(-1))
    return "\n".join(lines) + "\n"


def build_manifest(config: dict[str, Any], artifacts: dict[str, str]) -> str:
    """Manifest JSON: versions, the echoed config and every artifact checksum."""
    return json_text(
        {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "versions": {
                "pme_lab": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "config": config,
            "artifacts": [{"name": name, "sha256": digest} for name, digest in sorted(artifacts.items())],
        }
    )
