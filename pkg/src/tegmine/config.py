"""Key-value config files (``key=value``, one per line, ``#`` comments)."""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_kv_file(path: str | Path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text(encoding="utf-8"))


def dump_kv(pairs: dict[str, str]) -> str:
    """Serialize deterministically: sorted keys, one ``key = value`` per line."""
    return "".join(f"{k} = {v}\n" for k, v in sorted(pairs.items()))


def parse_list(value: str) -> tuple[str, ...]:
    """Comma-separated list value; empty string means empty list."""
    value = value.strip()
    if not value:
        return ()
    return tuple(item.strip() for item in value.split(",") if item.strip())
