"""
Run manifest written next to every command's outputs.

Records the command, its arguments, the effective seed, the package version,
SHA-256 hashes of the input files and the list of output paths, so a run can
be repeated and its outputs checked byte for byte.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import config
import src
from src.errors import SchemaError
from src.scene.io import read_json, write_json_atomic


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    """
    Reproduction record of one CLI invocation.

    Attributes
    ----------
    command : str
        Sub-command name.
    config_path : str or None
        Scenario config file, if one was given.
    seed : int or None
        Effective seed after the environment override.
    arguments : dict
        Remaining command-line arguments.
    version : str
        Package version.
    input_hashes : dict
        Input path → SHA-256.
    outputs : list of str
        Output paths, relative to the manifest's directory where possible.
    """

    command: str
    config_path: str | None = None
    seed: int | None = None
    arguments: dict[str, Any] = field(default_factory=dict)
    version: str = src.__version__
    input_hashes: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def add_input(self, path: str | Path) -> None:
        self.input_hashes[str(path)] = file_sha256(path)

    def add_outputs(self, paths: list[Path], base: Path) -> None:
        for p in paths:
            try:
                rel = Path(p).resolve().relative_to(base.resolve())
            except ValueError:
                rel = Path(p)
            self.outputs.append(rel.as_posix())

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        if not isinstance(data, dict) or "command" not in data:
            raise SchemaError("manifest", "must be an object with a 'command' field")
        return cls(
            command=str(data["command"]),
            config_path=data.get("config_path"),
            seed=data.get("seed"),
            arguments=dict(data.get("arguments") or {}),
            version=str(data.get("version", "")),
            input_hashes=dict(data.get("input_hashes") or {}),
            outputs=list(data.get("outputs") or []),
        )

    def write(self, out_dir: str | Path, name: str = config.MANIFEST_FILE) -> Path:
        return write_json_atomic(Path(out_dir) / name, self.to_dict())


def load_manifest(path: str | Path) -> RunManifest:
    return RunManifest.from_dict(read_json(path))
