"""Command-line entry point.

Subcommands: synth-data, consolidate, split, run, evaluate, sample,
serve-annotation. Global flags --seed / --out / --config sit before the
subcommand; values from --config (a JSON file) are defaults that explicit
command-line arguments override.

Exit codes: 0 success, 2 validation error, 3 runtime or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

import affmt
from affmt.errors import (
    AffmtError,
    CheckpointError,
    ConfigurationError,
    InfeasibleSplitError,
    ParseError,
    StorageError,
    ValidationError,
)

VALIDATION_ERRORS = (
    ValidationError,
    ConfigurationError,
    ParseError,
    InfeasibleSplitError,
    CheckpointError,
    StorageError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affmt",
        description="Multi-task facial affect pipeline: data, GAN, CNN-RNN.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed")
    parser.add_argument("--out", type=Path, default=None, help="output path")
    parser.add_argument(
        "--config", type=Path, default=None,
        help="JSON file of defaults; explicit CLI flags win",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate a synthetic corpus")
    p.add_argument("--subjects", type=int, default=30)
    p.add_argument("--frames-per-subject", type=int, default=600)
    p.add_argument("--resolution", type=int, choices=(32, 96), default=32)
    p.add_argument("--videos-per-subject", type=int, default=1)

    p = sub.add_parser("consolidate", help="consolidate annotations to CSVs")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--required-annotators", type=int, default=3)

    p = sub.add_parser("split", help="subject-independent split manifest")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--fractions", type=float, nargs=3, default=(0.6, 0.2, 0.2))

    p = sub.add_parser("run", help="run an experiment grid")
    p.add_argument("--spec", type=Path, required=True)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a split")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--split", type=Path, required=True)
    p.add_argument("--subset", choices=("train", "val", "test"), default="test")

    p = sub.add_parser("sample", help="sample images from a GAN checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--n", type=int, default=64)

    p = sub.add_parser("serve-annotation", help="serve the annotation backend")
    p.add_argument("--store", type=Path, default=None,
                   help="storage root (default: AFFMT_STORE)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--required-annotators", type=int, default=3)

    return parser


def apply_config_defaults(args: argparse.Namespace, argv) -> argparse.Namespace:
    """Merge --config file values under explicit CLI arguments."""
    if args.config is None:
        return args
    try:
        values = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"config file is not valid JSON: {e}") from e
    if not isinstance(values, dict):
        raise ValidationError("config file must hold a JSON object")
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in values.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in explicit:
            setattr(args, attr, value)
    return args


def cmd_synth_data(args) -> int:
    from affmt.preprocessing import synth_corpus

    out = args.out or Path("corpus")
    metas = synth_corpus(
        out,
        n_subjects=args.subjects,
        frames_per_subject=args.frames_per_subject,
        resolution=args.resolution,
        seed=args.seed,
        videos_per_subject=args.videos_per_subject,
    )
    print(f"wrote {len(metas)} videos to {out}")
    return 0


def cmd_consolidate(args) -> int:
    from affmt.preprocessing import consolidate_corpus

    frames = consolidate_corpus(args.store, args.required_annotators)
    total = sum(len(v) for v in frames.values())
    print(f"consolidated {len(frames)} videos ({total} frames) under "
          f"{Path(args.store) / 'consolidated'}")
    return 0


def cmd_split(args) -> int:
    from affmt.data import split_subject_independent
    from affmt.preprocessing import load_index

    videos = load_index(args.store)
    manifest = split_subject_independent(
        videos, tuple(args.fractions), seed=args.seed
    )
    out = args.out or Path(args.store) / "split.json"
    out.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote split manifest to {out}")
    return 0


def cmd_run(args) -> int:
    from affmt.experiments import (
        ExperimentSpec,
        results_json,
        results_table,
        run_experiment,
    )

    spec = ExperimentSpec.from_file(args.spec)
    if not Path(spec.corpus).is_dir():
        raise ValidationError(
            f"corpus directory {spec.corpus} does not exist; generate one "
            f"with: affmt synth-data --out {spec.corpus}"
        )
    out_dir = args.out or Path("results") / spec.name
    out_dir.mkdir(parents=True, exist_ok=True)
    results = run_experiment(spec, checkpoint_root=out_dir / "checkpoints")
    (out_dir / "results.json").write_text(results_json(results))
    table = results_table(results)
    (out_dir / "results.txt").write_text(table)
    print(table, end="")
    print(f"results written to {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    from affmt.data import SplitManifest
    from affmt.experiments import _task_for
    from affmt.metrics import evaluate
    from affmt.preprocessing import load_corpus
    from affmt.training import load_checkpoint
    from affmt.training.gan import GANTrainer

    trainer = load_checkpoint(args.checkpoint)
    manifest = SplitManifest.from_dict(json.loads(Path(args.split).read_text()))
    video_ids = sorted(manifest.subset(args.subset))
    corpus = load_corpus(args.store, video_ids=video_ids)
    if isinstance(trainer, GANTrainer):
        preds = trainer.predict_frames(corpus.all_images())
        report = evaluate(preds, corpus.all_frames(),
                          task=_task_for("gan_table9", trainer.config))
    else:
        preds = trainer.predict_frames(corpus)
        lookup = corpus.frame_lookup()
        frames = [lookup[k] for k in preds["keys"]]
        report = evaluate({"va": preds["va"], "expr": preds["expr"]}, frames,
                          task=_task_for("mt_table11", trainer.config))
    print(report.to_text())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
        print(f"report written to {args.out}")
    return 0


def cmd_sample(args) -> int:
    from PIL import Image

    from affmt.preprocessing.image import from_unit_range
    from affmt.training import load_checkpoint
    from affmt.training.gan import GANTrainer

    trainer = load_checkpoint(args.checkpoint)
    if not isinstance(trainer, GANTrainer):
        raise ValidationError(
            "sample requires a GAN checkpoint; this one holds a "
            "multi-task model"
        )
    if args.n < 1:
        raise ValidationError("n must be positive")
    images = trainer.sample_images(args.n, seed=args.seed)
    arr = images.numpy()
    if arr.min() < -1.0 or arr.max() > 1.0:
        raise AffmtError("generator emitted values outside [-1, 1]")

    out_dir = args.out or Path("samples")
    out_dir.mkdir(parents=True, exist_ok=True)
    pixels = from_unit_range(np.transpose(arr, (0, 2, 3, 1)))

    rows = math.ceil(math.sqrt(args.n))
    cols = math.ceil(args.n / rows)
    res = pixels.shape[1]
    grid = np.zeros((rows * res, cols * res, 3), dtype=np.uint8)
    for i in range(args.n):
        r, c = divmod(i, cols)
        grid[r * res:(r + 1) * res, c * res:(c + 1) * res] = pixels[i]
        Image.fromarray(pixels[i]).save(out_dir / f"sample_{i:03d}.png")
    Image.fromarray(grid).save(out_dir / "grid.png")
    print(f"wrote {args.n} samples and grid.png ({rows}x{cols}) to {out_dir}")
    return 0


def cmd_serve_annotation(args) -> int:
    import uvicorn

    from affmt.backend import AnnotationStore, create_app, store_from_env

    if args.store is not None:
        if not Path(args.store).is_dir():
            raise StorageError(f"store path {args.store} does not exist")
        store = AnnotationStore(args.store, args.required_annotators)
    else:
        store = store_from_env(args.required_annotators)
    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(store, ui_dir=ui_dir if ui_dir.is_dir() else None)
    print(f"serving annotation backend for {store.root} "
          f"on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "synth-data": cmd_synth_data,
    "consolidate": cmd_consolidate,
    "split": cmd_split,
    "run": cmd_run,
    "evaluate": cmd_evaluate,
    "sample": cmd_sample,
    "serve-annotation": cmd_serve_annotation,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = apply_config_defaults(args, argv)
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except AffmtError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # runtime/numeric failure
        print(f"unexpected failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
