"""SRT subtitles as speech segments.

Each cue becomes one segment. A cue whose every text line starts with ``-``
carries several speaker turns and is split into one segment per line, the
cue span being shared in proportion to line length (dash excluded).
"""

from __future__ import annotations

import json
import re
import warnings
from pathlib import Path
from typing import Optional, Sequence

from ..core import SpeechSegment

_TIMING = re.compile(
    r"^\s*(\d{1,3}):(\d{2}):(\d{2})[,.](\d{3})\s*-->\s*(\d{1,3}):(\d{2}):(\d{2})[,.](\d{3})\s*$"
)


class SrtParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OverlappingCueWarning(UserWarning):
    pass


def parse_timestamp(text: str) -> int:
    m = re.fullmatch(r"\s*(\d{1,3}):(\d{2}):(\d{2})[,.](\d{3})\s*", text)
    if not m:
        raise ValueError(f"bad timestamp {text!r}")
    h, mi, s, ms = (int(g) for g in m.groups())
    return _to_ms(h, mi, s, ms)


def _to_ms(h: int, m: int, s: int, ms: int) -> int:
    if m > 59 or s > 59:
        raise ValueError("minutes and seconds must be below 60")
    return ((h * 60 + m) * 60 + s) * 1000 + ms


def format_timestamp(ms: int) -> str:
    if ms < 0:
        raise ValueError(f"negative timestamp {ms}")
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, milli = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{milli:03d}"


def segment_id(ordinal: int) -> str:
    return f"seg{ordinal:05d}"


def _split_turns(start: int, end: int, lines: list[str]) -> list[tuple[int, int, str]]:
    weights = [max(len(line) - 1, 1) for line in lines]
    total = sum(weights)
    span = end - start
    out = []
    acc = 0
    for line, w in zip(lines, weights):
        s = start + span * acc // total
        acc += w
        e = start + span * acc // total
        out.append((s, e, line[1:].strip()))
    return out


def parse_srt(data: bytes | str) -> list[SpeechSegment]:
    """Parse an SRT document into segments with ordinal ids ``seg00001``...

    Malformed cues raise :class:`SrtParseError` naming the offending line.
    Overlapping cues are kept and reported with :class:`OverlappingCueWarning`.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    elif data.startswith("﻿"):
        data = data[1:]
    lines = data.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    segments: list[SpeechSegment] = []
    i = 0
    n = len(lines)
    prev_end = None
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        index_line = i + 1
        if not lines[i].strip().isdigit():
            raise SrtParseError(index_line, f"expected cue number, got {lines[i]!r}")
        i += 1
        if i >= n:
            raise SrtParseError(index_line, "cue number without timing line")
        m = _TIMING.match(lines[i])
        if not m:
            raise SrtParseError(i + 1, f"malformed timing line {lines[i]!r}")
        g = [int(x) for x in m.groups()]
        try:
            start, end = _to_ms(*g[:4]), _to_ms(*g[4:])
        except ValueError as exc:
            raise SrtParseError(i + 1, str(exc)) from None
        if end <= start:
            raise SrtParseError(i + 1, "cue ends before it starts")
        timing_line = i + 1
        i += 1
        text_lines = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i].strip())
            i += 1
        if not text_lines:
            raise SrtParseError(timing_line, "cue has no text")
        if prev_end is not None and start < prev_end:
            warnings.warn(
                f"line {timing_line}: cue overlaps the previous one", OverlappingCueWarning, stacklevel=2
            )
        prev_end = end if prev_end is None else max(prev_end, end)

        if all(t.startswith("-") for t in text_lines):
            turns = _split_turns(start, end, text_lines)
        else:
            turns = [(start, end, "\n".join(text_lines))]
        for s, e, text in turns:
            if e <= s:
                raise SrtParseError(timing_line, "cue too short to split between its turns")
            segments.append(SpeechSegment(segment_id(len(segments) + 1), (s, e), text))
    return segments


def write_srt(segments: Sequence[SpeechSegment]) -> str:
    """One cue per segment; the inverse of :func:`parse_srt` for undashed text."""
    out = []
    for k, seg in enumerate(segments, start=1):
        out.append(
            f"{k}\n{format_timestamp(seg.start)} --> {format_timestamp(seg.end)}\n{seg.text or '...'}\n"
        )
    return "\n".join(out)


def read_srt(path: str | Path, offsets: Optional[str | Path] = None) -> list[SpeechSegment]:
    segments = parse_srt(Path(path).read_bytes())
    if offsets is not None:
        segments = apply_offsets(segments, json.loads(Path(offsets).read_text(encoding="utf-8")))
    return segments


def apply_offsets(segments: Sequence[SpeechSegment], doc: dict) -> list[SpeechSegment]:
    """Apply a latency correction document to parsed segments.

    ``{"offset_ms": int, "edits": {segment_id: [start_ms, end_ms]}}``: the
    global offset shifts every segment, then explicit edits replace spans.
    """
    offset = int(doc.get("offset_ms", 0))
    edits = doc.get("edits", {})
    unknown = set(edits) - {s.segment_id for s in segments}
    if unknown:
        raise ValueError(f"offset edits name unknown segments: {sorted(unknown)}")
    out = []
    for seg in segments:
        if seg.segment_id in edits:
            s, e = (int(v) for v in edits[seg.segment_id])
        else:
            s, e = seg.start + offset, seg.end + offset
        out.append(seg.replace(time_span=(max(0, s), e)))
    return out
