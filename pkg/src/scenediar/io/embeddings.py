from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ..core import SpeechSegment


class EmbeddingFileError(ValueError):
    def __init__(self, message: str, rows: Sequence[int] = ()):
        super().__init__(message)
        self.rows = list(rows)


def parse_embeddings(text: str, dimension: int = 60) -> dict[str, np.ndarray]:
    """``segment_id,v1,...,vd`` rows to a map; every bad row is reported at once."""
    out: dict[str, np.ndarray] = {}
    bad: list[int] = []
    problems: list[str] = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        sid, values = row[0].strip(), row[1:]
        if len(values) != dimension:
            bad.append(lineno)
            problems.append(f"row {lineno} ({sid}): {len(values)} values, expected {dimension}")
            continue
        try:
            vec = np.array([float(v) for v in values])
        except ValueError:
            bad.append(lineno)
            problems.append(f"row {lineno} ({sid}): non-numeric value")
            continue
        if not np.all(np.isfinite(vec)):
            bad.append(lineno)
            problems.append(f"row {lineno} ({sid}): non-finite value")
            continue
        if sid in out:
            bad.append(lineno)
            problems.append(f"row {lineno}: duplicate segment id {sid}")
            continue
        out[sid] = vec
    if bad:
        raise EmbeddingFileError("; ".join(problems), bad)
    return out


def format_embeddings(vectors: Mapping[str, np.ndarray]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for sid in sorted(vectors):
        writer.writerow([sid, *(repr(float(v)) for v in vectors[sid])])
    return buf.getvalue()


def read_embeddings(path: str | Path, dimension: int = 60) -> dict[str, np.ndarray]:
    return parse_embeddings(Path(path).read_text(encoding="utf-8"), dimension)


def write_embeddings(path: str | Path, vectors: Mapping[str, np.ndarray]) -> None:
    Path(path).write_text(format_embeddings(vectors), encoding="utf-8")


def attach_embeddings(
    segments: Iterable[SpeechSegment],
    vectors: Mapping[str, np.ndarray],
    ref_speakers: Optional[Mapping[str, str]] = None,
) -> tuple[list[SpeechSegment], list[str]]:
    """Segments carrying their vectors (and reference speakers), plus ids lacking one."""
    out, missing = [], []
    for seg in segments:
        emb = vectors.get(seg.segment_id)
        if emb is None:
            missing.append(seg.segment_id)
        ref = ref_speakers.get(seg.segment_id) if ref_speakers else seg.ref_speaker
        out.append(seg.replace(embedding=emb, ref_speaker=ref))
    return out, missing
