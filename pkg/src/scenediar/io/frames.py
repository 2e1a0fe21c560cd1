"""Frame histogram files.

Binary layout (little endian)::

    magic      4 bytes  b"FHIS"
    version    u32      1
    frames     u32
    blocks     u32      must be 30
    bins       u32
    fps_num    u32
    fps_den    u32
    counts     frames * blocks * bins u32, row-major

Timestamps are not stored; frame ``i`` starts at ``floor(i * 1000 * fps_den /
fps_num)`` ms. The CSV variant has one frame per line:
``index,timestamp_ms,c_0,...,c_{30*bins-1}``.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from ..core import N_BLOCKS, FrameDescriptor, StructureError

MAGIC = b"FHIS"
VERSION = 1
_HEADER = struct.Struct("<4s6I")


def frame_timestamp(index: int, fps_num: int, fps_den: int) -> int:
    return index * 1000 * fps_den // fps_num


def encode_frames(
    frames: Sequence[FrameDescriptor], bins: int | None = None, fps: tuple[int, int] = (25, 1)
) -> bytes:
    if frames:
        bins = frames[0].bins
    elif bins is None:
        raise ValueError("bins must be given for an empty frame list")
    counts = np.zeros((len(frames), N_BLOCKS, bins), dtype="<u4")
    for i, f in enumerate(frames):
        if f.blocks.shape != (N_BLOCKS, bins):
            raise StructureError(f"frame {f.frame_index}: inconsistent histogram shape")
        if not np.array_equal(f.blocks, np.round(f.blocks)):
            raise StructureError(f"frame {f.frame_index}: binary format stores integer counts")
        counts[i] = f.blocks
    header = _HEADER.pack(MAGIC, VERSION, len(frames), N_BLOCKS, bins, fps[0], fps[1])
    return header + counts.tobytes()


def decode_frames(data: bytes) -> list[FrameDescriptor]:
    if len(data) < _HEADER.size:
        raise StructureError("truncated header")
    magic, version, n, blocks, bins, fps_num, fps_den = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StructureError(f"bad magic {magic!r}")
    if version != VERSION:
        raise StructureError(f"unsupported version {version}")
    if blocks != N_BLOCKS:
        raise StructureError(f"expected {N_BLOCKS} blocks per frame, file declares {blocks}")
    if bins == 0 or fps_num == 0 or fps_den == 0:
        raise StructureError("bins and frame rate must be positive")
    expected = _HEADER.size + 4 * n * blocks * bins
    if len(data) < expected:
        raise StructureError(f"truncated payload: {len(data)} bytes, expected {expected}")
    if len(data) > expected:
        raise StructureError(f"{len(data) - expected} trailing bytes after payload")
    counts = np.frombuffer(data, dtype="<u4", offset=_HEADER.size).reshape(n, blocks, bins)
    return [
        FrameDescriptor(i, frame_timestamp(i, fps_num, fps_den), counts[i].astype(np.float64))
        for i in range(n)
    ]


def frames_to_csv(frames: Sequence[FrameDescriptor]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for f in frames:
        writer.writerow([f.frame_index, f.timestamp, *(_num(v) for v in f.blocks.ravel())])
    return buf.getvalue()


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def frames_from_csv(text: str, bins: int | None = None) -> list[FrameDescriptor]:
    frames = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise StructureError(f"line {lineno}: too few fields")
        values = row[2:]
        if len(values) % N_BLOCKS:
            raise StructureError(
                f"line {lineno}: {len(values)} counts is not a multiple of {N_BLOCKS} blocks"
            )
        row_bins = len(values) // N_BLOCKS
        if bins is not None and row_bins != bins:
            raise StructureError(f"line {lineno}: {row_bins} bins per block, expected {bins}")
        bins = row_bins
        try:
            index, ts = int(row[0]), int(row[1])
            counts = np.array([float(v) for v in values]).reshape(N_BLOCKS, row_bins)
        except ValueError as exc:
            raise StructureError(f"line {lineno}: {exc}") from None
        if index != len(frames):
            raise StructureError(f"line {lineno}: frame index {index} out of order")
        frames.append(FrameDescriptor(index, ts, counts))
    return frames


def read_frame_histograms(path: str | Path) -> list[FrameDescriptor]:
    """Read a binary ``.fhis`` file or its CSV variant, chosen by content."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return decode_frames(data)
    if Path(path).suffix.lower() == ".csv" or not data:
        return frames_from_csv(data.decode("utf-8"))
    raise StructureError(f"{path}: bad magic {data[:4]!r}")


def write_frame_histograms(
    path: str | Path, frames: Sequence[FrameDescriptor], bins: int | None = None, fps=(25, 1)
) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(frames_to_csv(frames), encoding="utf-8")
    else:
        path.write_bytes(encode_frames(frames, bins, fps))
