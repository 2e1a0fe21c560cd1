"""Readers and writers for every on-disk format."""

from .embeddings import EmbeddingFileError, read_embeddings, write_embeddings
from .frames import read_frame_histograms, write_frame_histograms
from .outputs import OUTPUT_FILES, dumps, format_rttm, parse_rttm, read_json, write_json
from .srt import OverlappingCueWarning, SrtParseError, parse_srt, read_srt, write_srt

__all__ = [
    "EmbeddingFileError",
    "OUTPUT_FILES",
    "OverlappingCueWarning",
    "SrtParseError",
    "dumps",
    "format_rttm",
    "parse_rttm",
    "parse_srt",
    "read_embeddings",
    "read_frame_histograms",
    "read_json",
    "read_srt",
    "write_embeddings",
    "write_frame_histograms",
    "write_json",
    "write_srt",
]
