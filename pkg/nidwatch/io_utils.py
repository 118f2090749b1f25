"""
io_utils.py
Atomic file emitters shared by the pipeline stages.

Files are written to a temporary sibling and moved into place with
``os.replace`` so a crashed run never leaves half-written outputs.
"""

import os
import json
import tempfile
import logging
from pathlib import Path
from typing import Any, Union

import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write text to ``path`` atomically.

    Args:
        path: Destination file
        text: Full file contents (UTF-8)

    Returns:
        The destination path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except Exception:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("Wrote %s", target)
    return target


def dumps_json(obj: Any) -> str:
    """Deterministic JSON text (stable key order, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: PathLike, obj: Any) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def write_jsonl(path: PathLike, rows) -> Path:
    lines = [json.dumps(row, sort_keys=True, ensure_ascii=False) for row in rows]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


def write_frame_csv(path: PathLike, frame: pd.DataFrame, header: bool = True) -> Path:
    """Write a DataFrame as CSV; missing values become empty fields."""
    text = frame.to_csv(index=False, header=header, na_rep="", lineterminator="\n")
    return atomic_write_text(path, text)
