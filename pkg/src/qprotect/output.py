"""Deterministic CSV / newline-delimited JSON emission with a metadata header."""

from __future__ import annotations

import io
import json
import math
import os
import sys
import tempfile
from typing import Any, Dict, Iterable, Optional, Sequence

from . import __version__

SIG_DIGITS = 12


def fmt(value: Any) -> str:
    """CSV cell text: 12 significant digits for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return None
        return float(fmt(value))
    return value


def metadata(command: str, config: Dict[str, Any], seed: int) -> Dict[str, Any]:
    return {"tool": "qprotect", "version": __version__, "command": command, "seed": seed, "config": config}


class Writer:
    """Collects records in order and renders them once."""

    def __init__(self, fmt_name: str, columns: Sequence[str], meta: Dict[str, Any]):
        if fmt_name not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {fmt_name!r}")
        self.format = fmt_name
        self.columns = tuple(columns)
        self.buf = io.StringIO(newline="")
        if fmt_name == "csv":
            for line in json.dumps(meta, sort_keys=True, indent=1).splitlines():
                self.buf.write(f"# {line}\n")
            self.buf.write(",".join(self.columns) + "\n")
        else:
            self.buf.write(json.dumps({"metadata": meta}, sort_keys=True) + "\n")

    def row(self, values: Iterable[Any]) -> None:
        values = list(values)
        if len(values) != len(self.columns):
            raise ValueError("row width does not match the header")
        if self.format == "csv":
            self.buf.write(",".join(fmt(v) for v in values) + "\n")
        else:
            obj = {k: _json_value(v) for k, v in zip(self.columns, values)}
            self.buf.write(json.dumps(obj) + "\n")

    def text(self) -> str:
        return self.buf.getvalue()


def write_atomic(text: str, path: Optional[str]) -> None:
    """Write to ``path`` via a temp file and rename; ``None`` or ``-`` means stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".qprotect-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
