# =============================================================================
# hesslab - Result Files
# =============================================================================
"""
CSV: comma separated, header row, LF line endings, 17 significant digits.
JSON: sorted keys, two-space indent, trailing newline.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Tuple

import pandas as pd
from pydantic import ValidationError

from ..core.errors import ConfigError, FormatError, HesslabError

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def write_manifest(out: Path, command: str, files: List[Path], **extra: Any) -> Path:
    """List every file a command produced, relative to its output directory."""
    payload: Dict[str, Any] = {
        "command": command,
        "files": sorted(str(f.relative_to(out)) for f in files),
        **extra,
    }
    return write_json(payload, out / "manifest.json")


def error_document(exc: BaseException) -> Tuple[Dict[str, Any], int]:
    """
    Machine-readable error and exit code.

    2 for configuration and validation problems, 3 for I/O, 1 otherwise.
    """
    if isinstance(exc, ValidationError):
        details = {"errors": [{"loc": list(e["loc"]), "msg": e["msg"]} for e in exc.errors()]}
        return {"error": "config", "message": "invalid run configuration", "details": details}, 2
    if isinstance(exc, ConfigError):
        return exc.to_dict(), 2
    if isinstance(exc, (FileNotFoundError, PermissionError, IsADirectoryError)):
        return {"error": "io", "message": str(exc), "details": {}}, 3
    if isinstance(exc, FormatError):
        return exc.to_dict(), 3
    if isinstance(exc, HesslabError):
        return exc.to_dict(), 1
    return {"error": "internal", "message": f"{type(exc).__name__}: {exc}", "details": {}}, 1
