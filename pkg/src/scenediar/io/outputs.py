"""Result documents: canonical JSON and RTTM.

JSON output is byte-reproducible: keys sorted, two-space indentation, every
float written with exactly six decimals.
"""

from __future__ import annotations

import json
import math
import os
import re
import shutil
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

OUTPUT_FILES = (
    "shots.json",
    "labels.json",
    "scenes.json",
    "local_diar.json",
    "global_diar.json",
    "metrics.json",
    "diarization.rttm",
)


def _encode(value: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot serialise non-finite float {value}")
        text = f"{value:.6f}"
        return "0.000000" if text == "-0.000000" else text
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = sorted((str(k), v) for k, v in value.items())
        body = ",\n".join(f"{inner}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in items)
        return "{\n" + body + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(v, (int, float, bool, str, np.generic)) or v is None for v in value):
            return "[" + ", ".join(_encode(v, indent + 1) for v in value) + "]"
        body = ",\n".join(inner + _encode(v, indent + 1) for v in value)
        return "[\n" + body + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(value).__name__}")


def dumps(value: Any) -> str:
    return _encode(value, 0) + "\n"


def write_json(path: str | Path, value: Any) -> None:
    Path(path).write_text(dumps(value), encoding="utf-8")


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# --- RTTM -----------------------------------------------------------------


def format_rttm(episode: str, turns: Iterable[tuple[int, int, str]]) -> str:
    """``SPEAKER <episode> 1 <onset s> <duration s> <NA> <NA> <speaker> <NA> <NA>``."""
    lines = []
    for start, end, speaker in sorted(turns):
        if re.search(r"\s", episode) or re.search(r"\s", speaker):
            raise ValueError("RTTM fields may not contain whitespace")
        lines.append(
            f"SPEAKER {episode} 1 {start / 1000:.6f} {(end - start) / 1000:.6f} "
            f"<NA> <NA> {speaker} <NA> <NA>"
        )
    return "".join(line + "\n" for line in lines)


class RttmError(ValueError):
    pass


def parse_rttm(text: str) -> list[tuple[str, int, int, str]]:
    """``(episode, start_ms, end_ms, speaker)`` for every SPEAKER line."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith(";"):
            continue
        fields = line.split()
        if fields[0] != "SPEAKER" or len(fields) != 10:
            raise RttmError(f"line {lineno}: not a 10-field SPEAKER record")
        try:
            onset = round(float(fields[3]) * 1000)
            duration = round(float(fields[4]) * 1000)
        except ValueError:
            raise RttmError(f"line {lineno}: bad onset/duration") from None
        out.append((fields[1], onset, onset + duration, fields[7]))
    return out


def rttm_assignment(
    records: Sequence[tuple[str, int, int, str]], spans: Mapping[str, tuple[int, int]]
) -> dict[str, str]:
    """Map RTTM turns back onto segment ids by exact span."""
    by_span: dict[tuple[int, int], list[str]] = {}
    for sid, span in spans.items():
        by_span.setdefault(tuple(span), []).append(sid)
    out = {}
    for _, s, e, spk in records:
        ids = by_span.get((s, e))
        if not ids:
            raise RttmError(f"turn [{s}, {e}) matches no segment")
        for sid in ids:
            out[sid] = spk
    return out


def write_atomic_dir(target: Path, files: Mapping[str, str]) -> None:
    """Write ``files`` into ``target`` so that readers never see a partial set."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        for name, text in files.items():
            (tmp / name).write_text(text, encoding="utf-8")
        if target.exists():
            old = target.with_name(f".{target.name}.old")
            if old.exists():
                _rmtree(old)
            os.replace(target, old)
            os.replace(tmp, target)
            _rmtree(old)
        else:
            os.replace(tmp, target)
    finally:
        if tmp.exists():
            _rmtree(tmp)


def write_text_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _rmtree(path: Path) -> None:
    shutil.rmtree(path, ignore_errors=True)
