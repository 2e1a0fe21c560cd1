"""Command-line entry point.

Exit status: 0 on success, 1 on invalid input or usage, 2 on I/O failure.
Per-episode results go to ``<out>/<episode>/``.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from . import pipeline as pl
from .config import Config
from .io.outputs import dumps, read_json, write_text_atomic
from .synth import SynthSpec, generate_corpus, write_episode

log = logging.getLogger("scenediar")

STAGES = ("shots", "label", "motifs", "train-cov", "diarize-local", "diarize-global", "eval", "synth", "pipeline")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scenediar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    helps = {
        "shots": "detect cuts and write shots.json",
        "label": "link similar shots and write labels.json",
        "motifs": "find dialogue scenes and write scenes.json",
        "train-cov": "estimate the within-speaker covariance from annotated episodes",
        "diarize-local": "cluster speech inside each scene (local_diar.json)",
        "diarize-global": "link local speakers across scenes (global_diar.json, RTTM)",
        "eval": "score results against reference annotations (metrics.json)",
        "synth": "generate a synthetic corpus with ground truth",
        "pipeline": "run every stage over one or more episodes",
    }
    for name in STAGES:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--input", nargs="+", default=[], help="input directories")
        p.add_argument("--out", help="output directory (or file for train-cov)")
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--constrained", type=_bool, default=True)
        p.add_argument("--ref", help="reference annotations file or directory")
        p.add_argument("--jobs", type=int, default=1, help="episodes processed in parallel")
    return parser


def _need(args, *names):
    for name in names:
        value = getattr(args, name)
        if value is None or value == []:
            raise UsageError(f"{args.command} requires --{name}")


def _episodes(args, config: Config) -> list[pl.EpisodeInput]:
    return [pl.load_episode(p, config) for p in sorted(args.input, key=lambda p: Path(p).name)]


def _result_dir(args, episode_id: str) -> Path:
    return Path(args.out) / episode_id


def _write(path: Path, doc) -> None:
    write_text_atomic(path, dumps(doc))


def cmd_shots(args, config):
    for ep in _episodes(args, config):
        shots = pl.run_shots(ep, config)
        _write(_result_dir(args, ep.episode_id) / "shots.json", pl.shots_doc(ep.episode_id, shots))


def cmd_label(args, config):
    for ep in _episodes(args, config):
        rdir = _result_dir(args, ep.episode_id)
        shots = pl.shots_from_doc(read_json(rdir / "shots.json"), ep.frames)
        graph, labeling, _ = pl.run_labels(shots, config)
        _write(rdir / "labels.json", pl.labels_doc(ep.episode_id, shots, graph, labeling))


def _labelled_shots(ep, rdir: Path):
    shots = pl.shots_from_doc(read_json(rdir / "shots.json"), ep.frames)
    labels = read_json(rdir / "labels.json")["labels"]
    if len(labels) != len(shots):
        raise pl.StructureError(f"{rdir}: labels.json and shots.json disagree on the shot count")
    return [s.__class__(s.shot_id, s.frame_span, s.time_span, s.first_frame, s.last_frame, lab)
            for s, lab in zip(shots, labels)]


def cmd_motifs(args, config):
    for ep in _episodes(args, config):
        rdir = _result_dir(args, ep.episode_id)
        scenes = pl.run_motifs(_labelled_shots(ep, rdir), ep.segments)
        _write(rdir / "scenes.json", pl.scenes_doc(ep.episode_id, scenes, ep.segments, ep.ref_speakers))


def cmd_train_cov(args, config):
    model = pl.train_covariance(_episodes(args, config), config)
    out = Path(args.out)
    if out.is_dir() or args.out.endswith("/"):
        out = out / "covariance.json"
    write_text_atomic(out, pl.covariance_text(model))
    print(out)


def cmd_diarize_local(args, config):
    episodes = _episodes(args, config)
    local_metric, _ = pl.resolve_metrics(config, episodes)
    for ep in episodes:
        rdir = _result_dir(args, ep.episode_id)
        labelled = _labelled_shots(ep, rdir)
        scenes = pl.scenes_from_doc(read_json(rdir / "scenes.json"))
        speakers = pl.run_local(scenes, ep.segments, local_metric, config)
        naive = pl.naive_partitions(scenes, labelled, ep.segments)
        _write(rdir / "local_diar.json", pl.local_doc(ep.episode_id, scenes, speakers, naive))


def cmd_diarize_global(args, config):
    episodes = _episodes(args, config)
    _, global_metric = pl.resolve_metrics(config, episodes)
    for ep in episodes:
        rdir = _result_dir(args, ep.episode_id)
        speakers = pl.local_from_doc(read_json(rdir / "local_diar.json"), ep.segments)
        gdoc = pl.global_doc(ep.episode_id, pl.run_global(speakers, global_metric, config), args.constrained)
        spans = read_json(rdir / "scenes.json")["segments"]
        _write(rdir / "global_diar.json", gdoc)
        write_text_atomic(rdir / "diarization.rttm", pl.rttm_text(ep.episode_id, gdoc, spans))


def _result_dirs(paths: Sequence[str]) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if (p / "scenes.json").exists():
            out.append(p)
        elif p.is_dir():
            out.extend(sorted(d for d in p.iterdir() if (d / "scenes.json").exists()))
        else:
            raise FileNotFoundError(f"{p}: not a results directory")
    if not out:
        raise FileNotFoundError(f"no results directories under {', '.join(paths)}")
    return sorted(out, key=lambda d: d.name)


def _reference(ref: Optional[str], episode_id: str, single: bool) -> Optional[dict]:
    if ref is None:
        return None
    path = Path(ref)
    if path.is_file():
        if not single:
            raise UsageError("a single --ref file needs exactly one results directory")
        return read_json(path)
    for candidate in (path / episode_id / "annotations.json", path / f"{episode_id}.json"):
        if candidate.exists():
            return read_json(candidate)
    raise FileNotFoundError(f"{ref}: no annotations for episode {episode_id}")


def cmd_eval(args, config):
    dirs = _result_dirs(args.input)
    results = []
    for rdir in dirs:
        docs = {name: read_json(rdir / name) for name in
                ("shots.json", "labels.json", "scenes.json", "local_diar.json", "global_diar.json")}
        annotations = _reference(args.ref, rdir.name, len(dirs) == 1)
        metrics = pl.evaluate_episode(docs, annotations, config)
        _write(rdir / "metrics.json", metrics)
        results.append(metrics)
    summary, table = pl.summarize(results)
    target = Path(args.out) if args.out else dirs[0].parent
    _write(target / "summary.json", summary)
    write_text_atomic(target / "summary.txt", table)
    sys.stdout.write(table)


def cmd_synth(args, config):
    spec = SynthSpec.from_dict(config.synth or {})
    for ep in generate_corpus(spec, args.seed):
        print(write_episode(ep, args.out))


def cmd_pipeline(args, config):
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    pl.run_pipeline(args.input, args.out, config, args.constrained, args.jobs)
    sys.stdout.write(Path(args.out, "summary.txt").read_text(encoding="utf-8"))


COMMANDS = {
    "shots": (cmd_shots, ("input", "out")),
    "label": (cmd_label, ("input", "out")),
    "motifs": (cmd_motifs, ("input", "out")),
    "train-cov": (cmd_train_cov, ("input", "out")),
    "diarize-local": (cmd_diarize_local, ("input", "out")),
    "diarize-global": (cmd_diarize_global, ("input", "out")),
    "eval": (cmd_eval, ("input",)),
    "synth": (cmd_synth, ("out",)),
    "pipeline": (cmd_pipeline, ("input", "out")),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    warnings.simplefilter("default")
    func, required = COMMANDS[args.command]
    try:
        _need(args, *required)
        config = Config.load(args.config) if args.config else Config()
        func(args, config)
    except OSError as exc:
        print(f"scenediar: I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        if isinstance(exc, UsageError):
            parser.print_usage(sys.stderr)
        print(f"scenediar: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
