"""Command-line surface.

Subcommands: preprocess, features, train, eval, predict, gen-synth.
Configuration precedence for the preprocessing knobs is CLI flag >
config file (flat key=value lines, --config) > built-in default.
Every command exits 0 on success and nonzero with a one-line diagnostic.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .dataset import SplitSpec, resolve_dataset
from .features import feature_names
from .image import PgmError, read_pgm_file, to_gray, write_pgm_file
from .mlp import MlpConfig, ModelFormatError, load_model, save_model
from .pipeline import (
    confusion_csv,
    evaluate,
    extract_from_file,
    predict_gray,
    render_eval_table,
    train_recognizer,
)
from .preprocess import BlankImageError, PreprocessConfig, preprocess_stages
from .synth import gen_synthetic

_PREPROCESS_KEYS = ("norm_size", "median_passes", "fill_threshold", "slant_clamp_deg", "dilate")


def _add_preprocess_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="flat key=value config file")
    parser.add_argument("--norm-size", type=int, default=None)
    parser.add_argument("--median-passes", type=int, default=None)
    parser.add_argument("--fill-threshold", type=int, default=None)
    parser.add_argument("--slant-clamp-deg", type=float, default=None)
    parser.add_argument("--dilate", action="store_true", default=None)
    parser.add_argument("--connectivity", choices=("four", "eight"), default="eight")


def _build_config(args: argparse.Namespace) -> PreprocessConfig:
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = PreprocessConfig.from_text(fh.read())
        values = {key: getattr(base, key) for key in _PREPROCESS_KEYS}
    for key in _PREPROCESS_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return PreprocessConfig(**values)


def _parse_split(text: str, seed: int) -> SplitSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"--split expects three comma-separated fractions, got {text!r}")
    train, valid, test = (float(p) for p in parts)
    return SplitSpec(train, valid, test, seed=seed)


def _cmd_preprocess(args) -> int:
    cfg = _build_config(args)
    stages = preprocess_stages(read_pgm_file(args.input), cfg)
    write_pgm_file(args.output, to_gray(stages["normalized"]))
    if args.dump_stages:
        os.makedirs(args.dump_stages, exist_ok=True)
        for i, (name, img) in enumerate(stages.items()):
            out = img if img.dtype == np.uint8 and img.max(initial=0) > 1 else to_gray(img)
            write_pgm_file(os.path.join(args.dump_stages, f"{i:02d}_{name}.pgm"), out)
    print(f"wrote {args.output}")
    return 0


def _cmd_features(args) -> int:
    cfg = _build_config(args)
    manifest = resolve_dataset(args.data)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("path,label," + ",".join(feature_names()) + "\n")
        for path, label in manifest.entries:
            vec = extract_from_file(path, cfg, args.connectivity)
            out.write(f"{path},{label}," + ",".join(format(v, ".17g") for v in vec) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_train(args) -> int:
    cfg = _build_config(args)
    split_spec = _parse_split(args.split, args.seed)
    mlp_cfg = MlpConfig(
        n_hidden=args.hidden,
        max_epochs=args.max_epochs,
        sse_target=args.sse_target,
        seed=args.seed,
        init_scale=args.init_scale,
    )
    model, report, (train_m, valid_m, test_m) = train_recognizer(
        args.data,
        cfg,
        connectivity=args.connectivity,
        split_spec=split_spec,
        mlp_cfg=mlp_cfg,
        augment_rate=args.augment,
    )
    with open(args.out_model, "wb") as fh:
        fh.write(save_model(model))
    print(f"split: {len(train_m)} train / {len(valid_m)} valid / {len(test_m)} test")
    print(f"classes: {len(model.labels)}")
    print(f"epochs: {report.epochs_run}")
    print(f"final SSE: {report.final_sse:.6f}")
    print(f"stop reason: {report.stop_reason}")
    print(f"model written to {args.out_model}")
    return 0


def _cmd_eval(args) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh.read())
    cfg = _build_config(args)
    report = evaluate(model, args.data, cfg, args.connectivity)
    print(render_eval_table(report))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(confusion_csv(report))
        print(f"confusion matrix written to {args.csv}")
    return 0


def _cmd_predict(args) -> int:
    with open(args.model, "rb") as fh:
        model = load_model(fh.read())
    cfg = _build_config(args)
    label, scores = predict_gray(model, read_pgm_file(args.image), cfg, args.connectivity)
    print(label)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    for i in order:
        print(f"{model.labels[i]} {scores[i]:.6f}")
    return 0


def _cmd_gen_synth(args) -> int:
    count = gen_synthetic(args.out, classes=args.classes, per_class=args.per_class, seed=args.seed)
    print(f"wrote {count} samples under {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rasmkit",
        description="Handwritten Arabic character recognition pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize one character image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--dump-stages", metavar="DIR", default=None)
    _add_preprocess_flags(p)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("features", help="emit one CSV feature row per image")
    p.add_argument("data", help="dataset root or path,label manifest")
    p.add_argument("--out", metavar="CSV", default=None)
    _add_preprocess_flags(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train a recognizer")
    p.add_argument("data")
    p.add_argument("out_model")
    p.add_argument("--hidden", type=int, default=70)
    p.add_argument("--max-epochs", type=int, default=2000)
    p.add_argument("--sse-target", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-scale", type=float, default=0.5)
    p.add_argument("--augment", type=float, default=0.02,
                   help="noise rate for augmented copies (0 disables)")
    p.add_argument("--split", default="0.59638554216867474,0.20180722891566266,0.2018072289156626",
                   help="train,valid,test fractions")
    _add_preprocess_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a labeled set")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--csv", metavar="PATH", default=None, help="write the confusion matrix")
    _add_preprocess_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("model")
    p.add_argument("image")
    _add_preprocess_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("gen-synth", help="generate a synthetic glyph corpus")
    p.add_argument("out")
    p.add_argument("--classes", type=int, default=28)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BlankImageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PgmError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
