from __future__ import annotations
import csv
import hashlib
import io
import json
import os
import subprocess
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_fixed

from . import __version__

OUTPUT_ENV = "CKT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "out"
GRID_TOL = 1e-12


def ensure_dir(p: str | Path) -> Path:
    p = Path(p)
    p.mkdir(parents=True, exist_ok=True)
    return p


@retry(
    retry=retry_if_exception_type(PermissionError),
    stop=stop_after_attempt(3),
    wait=wait_fixed(0.2),
    reraise=True,
)
def _replace(tmp: Path, path: Path) -> None:
    tmp.replace(path)


def atomic_write(path: Path, content: str) -> None:
    """Write ``content`` next to ``path`` and swap it in.

    ``newline=""`` keeps ``\\n`` terminators on every platform.
    """
    ensure_dir(path.parent)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="") as fh:
        fh.write(content)
    _replace(tmp, path)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def git_rev() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            check=True,
            cwd=Path(__file__).resolve().parent,
        )
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def format_float(x: Any) -> str:
    """17 significant digits; enough to round-trip a double."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def render_csv(rows: Iterable[Mapping[str, Any]], fieldnames: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: format_float(row.get(k)) for k in fieldnames})
    return buf.getvalue()


def write_csv(
    path: Path,
    rows: Iterable[Mapping[str, Any]],
    fieldnames: Sequence[str],
    *,
    provenance: Mapping[str, Any] | None = None,
) -> Path:
    """Write a CSV atomically plus its ``.manifest.json`` sibling."""
    text = render_csv(rows, fieldnames)
    atomic_write(path, text)
    write_manifest(path, text, provenance or {})
    return path


def manifest_path(path: Path) -> Path:
    return path.with_name(path.stem + ".manifest.json")


def write_manifest(path: Path, text: str, provenance: Mapping[str, Any]) -> Path:
    """Deterministic provenance: no timestamps, sorted keys."""
    doc = {
        "file": path.name,
        "sha256": sha256_text(text),
        "tool_version": __version__,
        "git_rev": git_rev(),
        **dict(provenance),
    }
    target = manifest_path(path)
    atomic_write(target, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return target


def parse_range(text: str) -> np.ndarray:
    """Parse ``start:stop:step`` (or a single value) into an inclusive grid.

    The endpoint is included when it lies on the grid within 1e-12; values
    are rounded to 12 decimals so ``0:3:0.05`` yields exactly 1.2 and 3.0.
    """
    parts = [p.strip() for p in text.split(":")]
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"invalid range {text!r}: expected start:stop:step") from exc
    if len(nums) == 1:
        return np.array([nums[0]])
    if len(nums) != 3:
        raise ValueError(f"invalid range {text!r}: expected start:stop:step")
    start, stop, step = nums
    if step <= 0:
        raise ValueError(f"invalid range {text!r}: step must be positive")
    if stop < start:
        raise ValueError(f"invalid range {text!r}: stop < start")
    n = int(np.floor((stop - start) / step + GRID_TOL)) + 1
    return np.round(start + step * np.arange(n), 12)


def output_root(override: str | Path | None = None) -> Path:
    root = override or os.getenv(OUTPUT_ENV) or DEFAULT_OUTPUT_DIR
    return ensure_dir(root)
