from __future__ import annotations

"""Reading configs and writing run artifacts.

Every writer creates parent directories, returns the resolved path and turns
OS failures into :class:`ReportIOError`. JSON is written with sorted keys and a
trailing newline and CSVs with ``\\n`` line endings, so identical content gives
identical bytes.
"""

import hashlib
import json
from collections.abc import Iterable
from pathlib import Path
from typing import Any

import pandas as pd
import yaml

from ..errors import ReportIOError


def _resolved(path: str | Path) -> Path:
    return Path(path).expanduser().resolve()


def read_text(path: str | Path) -> str:
    return _resolved(path).read_text(encoding="utf-8")


def read_json_or_yaml(path: str | Path) -> Any:
    """Parse a YAML or JSON document (JSON is read by the YAML parser too).

    Raises ValueError on malformed input.
    """
    text = read_text(path)
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ValueError(str(e)) from e


def read_json(path: str | Path) -> Any:
    return json.loads(read_text(path))


def _write(path: str | Path, body: str) -> Path:
    p = _resolved(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(body, encoding="utf-8", newline="\n")
    except OSError as e:
        raise ReportIOError(f"cannot write {p}: {e}") from e
    return p


def write_json(path: str | Path, data: Any) -> Path:
    return _write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_lines(path: str | Path, records: Iterable[dict[str, Any]]) -> Path:
    """Line-delimited JSON, one sorted-key object per line."""
    return _write(path, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))


def write_frame(path: str | Path, frame: pd.DataFrame) -> Path:
    """CSV without the index."""
    return _write(path, frame.to_csv(index=False, lineterminator="\n"))


def sha256_file(p: str | Path) -> str:
    h = hashlib.sha256()
    with Path(p).open("rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_bytes(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


__all__ = [
    "read_text",
    "read_json_or_yaml",
    "read_json",
    "write_json",
    "write_frame",
    "write_lines",
    "sha256_file",
    "sha256_bytes",
]
