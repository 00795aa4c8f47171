"""Run manifests: the reproducibility sidecar written next to every artifact.

A manifest pins everything that determines a stage's output — config
snapshot, sha256 of each input file, seed and tool version — as sorted
key-value text.  No timestamps, so a rerun with identical inputs writes a
byte-identical manifest, and two runs with equal manifests must produce
equal outputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .config import ConfigError, dump_kv, parse_kv_text

MANIFEST_SUFFIX = ".manifest"


class ManifestError(ValueError):
    pass


def file_digest(path: str | Path) -> str:
    """sha256 hex digest, streamed so large stores don't land in memory."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sidecar_path(artifact: str | Path) -> Path:
    p = Path(artifact)
    return p.with_name(p.name + MANIFEST_SUFFIX)


@dataclass(frozen=True)
class RunManifest:
    stage: str
    config: dict[str, str] = field(default_factory=dict)
    inputs: dict[str, str] = field(default_factory=dict)  # file name → sha256
    seed: int | None = None
    version: str = __version__

    def to_text(self) -> str:
        pairs = {"stage": self.stage, "version": self.version}
        if self.seed is not None:
            pairs["seed"] = str(self.seed)
        pairs.update(("config.%s" % k, str(v)) for k, v in self.config.items())
        pairs.update(("input.%s" % k, v) for k, v in self.inputs.items())
        return dump_kv(pairs)

    @classmethod
    def parse(cls, text: str) -> "RunManifest":
        try:
            pairs = parse_kv_text(text)
        except ConfigError as exc:
            raise ManifestError(str(exc)) from exc
        config, inputs, plain = {}, {}, {}
        for key, value in pairs.items():
            if key.startswith("config."):
                config[key[len("config.") :]] = value
            elif key.startswith("input."):
                inputs[key[len("input.") :]] = value
            else:
                plain[key] = value
        unknown = set(plain) - {"stage", "version", "seed"}
        if unknown:
            raise ManifestError(f"unknown manifest keys: {sorted(unknown)}")
        if "stage" not in plain:
            raise ManifestError("manifest has no stage")
        seed = int(plain["seed"]) if "seed" in plain else None
        return cls(
            stage=plain["stage"],
            config=config,
            inputs=inputs,
            seed=seed,
            version=plain.get("version", __version__),
        )

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def write_beside(self, artifact: str | Path) -> Path:
        """Write ``<artifact>.manifest`` and return its path."""
        side = sidecar_path(artifact)
        side.write_text(self.to_text(), encoding="utf-8")
        return side


def collect(
    stage: str,
    config: dict | None = None,
    inputs: list[str | Path] | None = None,
    seed: int | None = None,
) -> RunManifest:
    """Digest the input files and snapshot the config for one stage run.

    Inputs are keyed by file name; two distinct inputs sharing a name would
    silently shadow each other, so that raises instead.
    """
    digests: dict[str, str] = {}
    for p in inputs or []:
        name = Path(p).name
        if name in digests:
            raise ManifestError(f"duplicate input file name: {name}")
        digests[name] = file_digest(p)
    snapshot = {k: str(v) for k, v in (config or {}).items()}
    return RunManifest(stage=stage, config=snapshot, inputs=digests, seed=seed)
