import struct
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenediar.core import FrameDescriptor, SpeechSegment, StructureError
from scenediar.io.embeddings import EmbeddingFileError, format_embeddings, parse_embeddings
from scenediar.io.frames import (
    decode_frames,
    encode_frames,
    frames_from_csv,
    frames_to_csv,
    read_frame_histograms,
    write_frame_histograms,
)
from scenediar.io.outputs import dumps, format_rttm, parse_rttm, rttm_assignment, write_atomic_dir
from scenediar.io.srt import (
    OverlappingCueWarning,
    SrtParseError,
    apply_offsets,
    format_timestamp,
    parse_srt,
    parse_timestamp,
    write_srt,
)
from scenediar.synth import SynthSpec, generate_episode, srt_text


def test_single_cue():
    (seg,) = parse_srt(b"1\n00:00:01,000 --> 00:00:03,500\nHello\n")
    assert seg.time_span == (1000, 3500) and seg.text == "Hello" and seg.segment_id == "seg00001"


def test_dashed_cue_split_by_characters():
    a, b = parse_srt("1\n00:00:00,000 --> 00:00:03,000\n- Yes.\n- No way.\n")
    assert a.time_span == (0, 3000 * 5 // 13) and b.time_span == (3000 * 5 // 13, 3000)
    assert (a.text, b.text) == ("Yes.", "No way.")


def test_mixed_dash_cue_is_not_split():
    (seg,) = parse_srt("1\n00:00:00,000 --> 00:00:03,000\n- Yes.\nand more\n")
    assert seg.text == "- Yes.\nand more"


def test_bom_and_crlf_accepted():
    (seg,) = parse_srt("﻿1\r\n00:00:01,000 --> 00:00:02,000\r\nHi\r\n".encode("utf-8"))
    assert seg.time_span == (1000, 2000)


def test_malformed_timestamp_names_line():
    with pytest.raises(SrtParseError) as info:
        parse_srt("1\n00:00:01,000 --> 00:00:03,500\nok\n\n2\n00:00:04,0 --> 00:00:05,000\nbad\n")
    assert info.value.line == 6


def test_overlapping_cues_warn():
    text = "1\n00:00:01,000 --> 00:00:03,000\na\n\n2\n00:00:02,000 --> 00:00:04,000\nb\n"
    with pytest.warns(OverlappingCueWarning):
        segs = parse_srt(text)
    assert len(segs) == 2


def test_timestamps_round_trip():
    assert parse_timestamp("01:02:03,004") == 3723004
    assert format_timestamp(3723004) == "01:02:03,004"
    with pytest.raises(ValueError):
        format_timestamp(-1)


def test_generated_subtitles_round_trip():
    ep = generate_episode(SynthSpec(scenes_per_episode=4, dashed_rate=0.3, render_frames=False), 5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parsed = parse_srt(srt_text(ep))
    assert [(s.segment_id, s.time_span) for s in parsed] == [
        (s.segment_id, s.time_span) for s in ep.segments
    ]
    again = parse_srt(write_srt(parsed))
    assert [(s.time_span, s.text) for s in again] == [(s.time_span, s.text) for s in parsed]


def test_offsets_shift_and_edit():
    segs = [SpeechSegment("seg00001", (100, 200)), SpeechSegment("seg00002", (300, 400))]
    out = apply_offsets(segs, {"offset_ms": -150, "edits": {"seg00002": [310, 420]}})
    assert [s.time_span for s in out] == [(0, 50), (310, 420)]
    with pytest.raises(ValueError):
        apply_offsets(segs, {"edits": {"nope": [0, 1]}})


def random_frames(r, n, bins):
    return [FrameDescriptor(i, i * 40, r.integers(0, 300, size=(30, bins))) for i in range(n)]


def test_empty_frame_file(tmp_path):
    assert decode_frames(encode_frames([], bins=24)) == []
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert read_frame_histograms(path) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 12), st.integers(1, 16))
def test_frame_formats_round_trip_and_agree(seed, n, bins):
    frames = random_frames(np.random.default_rng(seed), n, bins)
    binary = decode_frames(encode_frames(frames, bins=bins))
    text = frames_from_csv(frames_to_csv(frames))
    assert binary == frames
    assert text == frames


def test_timestamps_from_frame_rate(tmp_path, rng):
    frames = random_frames(rng, 3, 4)
    path = tmp_path / "f.fhis"
    write_frame_histograms(path, frames, fps=(30000, 1001))
    assert [f.timestamp for f in read_frame_histograms(path)] == [0, 33, 66]


def test_binary_errors(rng):
    good = encode_frames(random_frames(rng, 2, 4))
    with pytest.raises(StructureError, match="magic"):
        decode_frames(b"XXXX" + good[4:])
    with pytest.raises(StructureError, match="truncated"):
        decode_frames(good[:-3])
    header = struct.pack("<4s6I", b"FHIS", 1, 0, 29, 4, 25, 1)
    with pytest.raises(StructureError, match="blocks"):
        decode_frames(header)


def test_embeddings_round_trip(rng):
    vectors = {f"seg{i:05d}": rng.normal(size=60) for i in range(1, 6)}
    back = parse_embeddings(format_embeddings(vectors))
    assert set(back) == set(vectors)
    assert all(np.array_equal(back[k], vectors[k]) for k in vectors)
    assert parse_embeddings("") == {}


def test_short_embedding_row_is_named():
    good = "seg00001," + ",".join(["0.5"] * 60)
    short = "seg00002," + ",".join(["0.5"] * 59)
    with pytest.raises(EmbeddingFileError) as info:
        parse_embeddings(good + "\n" + short + "\n")
    assert info.value.rows == [2]
    assert "row 2" in str(info.value)


def test_json_is_canonical():
    text = dumps({"b": [1.0, 2], "a": {"z": -0.0000001, "y": None}, "c": []})
    assert text == (
        '{\n  "a": {\n    "y": null,\n    "z": 0.000000\n  },\n'
        '  "b": [1.000000, 2],\n  "c": []\n}\n'
    )
    with pytest.raises(ValueError):
        dumps(float("nan"))


def test_rttm_round_trip():
    spans = {"g1": (1000, 2500), "g2": (3000, 3333), "g3": (4000, 9000)}
    assign = {"g1": "S01", "g2": "S02", "g3": "S01"}
    text = format_rttm("ep01", [(s, e, assign[k]) for k, (s, e) in spans.items()])
    assert text.splitlines()[0] == "SPEAKER ep01 1 1.000000 1.500000 <NA> <NA> S01 <NA> <NA>"
    assert rttm_assignment(parse_rttm(text), spans) == assign
    assert format_rttm("ep01", []) == ""


def test_atomic_dir_replaces_whole_set(tmp_path):
    target = tmp_path / "ep01"
    write_atomic_dir(target, {"a.json": "1\n", "b.json": "2\n"})
    write_atomic_dir(target, {"a.json": "3\n"})
    assert sorted(p.name for p in target.iterdir()) == ["a.json"]
    assert [p.name for p in tmp_path.iterdir()] == ["ep01"]
