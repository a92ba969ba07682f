"""
Output files: atomic writes, CSV with 17 significant digits, JSON and the
run manifest.
"""

import hashlib
import json
import os
import platform
import tempfile
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

PathLike = Union[str, Path]

MANIFEST_NAME = "manifest.json"
VERSIONED_PACKAGES = ("qjh", "numpy", "scipy", "pydantic", "click", "PyYAML")


def format_value(value: Any) -> str:
    """Floats with 17 significant digits, everything else via str"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text through a temp file in the same directory, then rename

    Args:
        path: Destination
        text: Content; line endings are written as-is

    Returns:
        Destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return target


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Header row mandatory, comma separated, LF terminators"""
    return atomic_write_text(path, render_csv(header, rows))


def write_json(path: PathLike, payload: Any) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(
    output_dir: PathLike,
    command: str,
    config: Mapping[str, Any],
    seed: int,
    outputs: List[Path],
) -> Path:
    """
    manifest.json with the effective config, seed, versions and output checksums

    No timestamps are recorded, so reruns with the same config and seed
    produce the same manifest.
    """
    out = Path(output_dir)
    payload = {
        "command": command,
        "seed": seed,
        "config": dict(config),
        "versions": package_versions(),
        "outputs": {p.name: sha256_file(p) for p in sorted(outputs)},
    }
    return write_json(out / MANIFEST_NAME, payload)
