"""Command-line entry point: prepare-data, train, evaluate, explain,
plot-curves, serve, compare.

Exit codes: 0 success, 1 usage or configuration error (including module
errors with a diagnostic), 2 unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import RunConfig, dump_run_config, load_run_config
from .data import load_image, make_splits, scan_dataset_dir
from .errors import ConfigMismatch, OctClassError
from .metrics import make_report, render_comparison, render_report, report_from_json
from .models import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .synthetic import generate_synthetic_dataset
from .training import evaluate_split, fit, parse_history_csv
from .xai import explain, save_image

logger = logging.getLogger(__name__)


def _echo_config(config: RunConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.yaml"), "w") as f:
        f.write(dump_run_config(config))


def _load_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_run_config(args.config)
    return RunConfig()


def _split_manifest(config: RunConfig, root: str):
    manifest = scan_dataset_dir(root)
    return make_splits(manifest, config.dataset.fractions, config.dataset.split_seed)


def cmd_prepare_data(args) -> int:
    config = _load_config(args)
    root = args.root or config.dataset.root
    if not root:
        print("error: no dataset root given (--root or dataset.root)", file=sys.stderr)
        return 1
    if args.synthetic_per_class:
        generate_synthetic_dataset(root, args.synthetic_per_class, seed=args.seed)
        print(f"wrote synthetic dataset: {args.synthetic_per_class} images "
              f"per class under {root}")
    manifest = _split_manifest(config, root)
    out = args.out or os.path.join(root, "manifest.json")
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    manifest.save(out)
    counts = manifest.class_counts()
    for name, count in counts.items():
        print(f"{name}: {count}")
    for split in ("train", "val", "test"):
        print(f"{split}: {len(manifest.split_entries(split))} images")
    print(f"manifest written to {out}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    if args.arch:
        config.model = ModelConfig(
            architecture=args.arch,
            width_multiplier=args.width if args.width is not None
            else config.model.width_multiplier,
            num_classes=config.model.num_classes,
            input_shape=config.model.input_shape,
            rng_seed=config.model.rng_seed,
        )
    elif args.width is not None:
        config.model = ModelConfig(
            architecture=config.model.architecture,
            width_multiplier=args.width,
            num_classes=config.model.num_classes,
            input_shape=config.model.input_shape,
            rng_seed=config.model.rng_seed,
        )
    root = args.root or config.dataset.root
    if not root:
        print("error: no dataset root given (--root or dataset.root)", file=sys.stderr)
        return 1
    if not os.path.isdir(root):
        print(f"error: dataset root does not exist: {root}", file=sys.stderr)
        return 1

    out_dir = args.out or os.path.join(config.output_dir,
                                       f"train_{config.model.architecture}")
    _echo_config(config, out_dir)

    manifest = _split_manifest(config, root)
    manifest.save(os.path.join(out_dir, "manifest.json"))
    if config.model.num_classes != len(manifest.classes):
        print(f"error: model.num_classes={config.model.num_classes} but the "
              f"dataset has {len(manifest.classes)} classes", file=sys.stderr)
        return 1
    handle = build_model(config.model)
    handle.class_order = manifest.classes
    print(f"training {config.model.architecture} "
          f"({handle.parameter_count():,} parameters) on {root}")

    def log_epoch(r):
        print(f"epoch {r.epoch:3d}  train_loss {r.train_loss:.4f}  "
              f"train_acc {r.train_acc:.4f}  val_loss {r.val_loss:.4f}  "
              f"val_acc {r.val_acc:.4f}  ({r.wall_time_s:.1f}s)")

    handle, history = fit(handle, manifest, config.train, log_fn=log_epoch)

    ckpt_path = os.path.join(out_dir, "checkpoint.oct")
    save_checkpoint(handle, ckpt_path)
    history.save_csv(os.path.join(out_dir, "history.csv"))

    val = evaluate_split(handle, manifest, "val", config.train.batch_size)
    report = make_report(val.true_indices, val.pred_indices,
                         config.model.architecture,
                         num_classes=config.model.num_classes,
                         class_names=manifest.classes)
    with open(os.path.join(out_dir, "report.json"), "w") as f:
        f.write(render_report(report, "json"))
    print(render_report(report, "text"))
    print(f"best epoch {history.best_epoch}"
          + (" (stopped early)" if history.stopped_early else ""))
    print(f"artifacts in {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    handle = load_checkpoint(args.checkpoint)
    from .data import DatasetManifest

    if args.manifest:
        manifest = DatasetManifest.load(args.manifest)
    else:
        root = args.root or config.dataset.root
        if not root:
            print("error: need --manifest or a dataset root "
                  "(--root or dataset.root)", file=sys.stderr)
            return 1
        manifest = _split_manifest(config, root)
    if tuple(manifest.classes) != tuple(handle.class_order):
        raise ConfigMismatch(
            f"checkpoint classes {list(handle.class_order)} do not match "
            f"dataset classes {list(manifest.classes)}"
        )

    result = evaluate_split(handle, manifest, args.split)
    report = make_report(result.true_indices, result.pred_indices,
                         handle.config.architecture,
                         num_classes=handle.config.num_classes,
                         class_names=manifest.classes)
    print(render_report(report, "text"))

    out_dir = args.out or os.path.join(config.output_dir,
                                       f"eval_{handle.config.architecture}")
    _echo_config(config, out_dir)
    with open(os.path.join(out_dir, "report.json"), "w") as f:
        f.write(render_report(report, "json"))
    from .plotting import plot_confusion

    plot_confusion(report.confusion, manifest.classes,
                   os.path.join(out_dir, "confusion.png"))
    print(f"artifacts in {out_dir}")
    return 0


def _explain_params(args) -> dict:
    params: dict = {}
    if args.method == "gradcam":
        if args.layer:
            params["layer"] = args.layer
    elif args.method == "lime":
        for flag, key in (
            ("num_superpixels", "num_superpixels"),
            ("num_samples", "num_samples"),
            ("kernel_width", "kernel_width"),
            ("ridge_penalty", "ridge_penalty"),
            ("baseline", "baseline"),
            ("seed", "seed"),
        ):
            value = getattr(args, flag)
            if value is not None:
                params[key] = value
    elif args.method == "occlusion":
        if args.patch is not None:
            params["patch_size"] = args.patch
        if args.stride is not None:
            params["stride"] = args.stride
        if args.baseline_value is not None:
            params["baseline_value"] = args.baseline_value
    return params


def cmd_explain(args) -> int:
    config = _load_config(args)
    handle = load_checkpoint(args.checkpoint)
    image = load_image(args.image)

    probs = handle.forward(image.pixels[None])[0]
    predicted = int(np.argmax(probs))
    if args.target_class is None:
        class_idx = predicted
    else:
        upper = {name.upper(): i for i, name in enumerate(handle.class_order)}
        if args.target_class.upper() in upper:
            class_idx = upper[args.target_class.upper()]
        else:
            try:
                class_idx = int(args.target_class)
            except ValueError:
                print(f"error: unknown class {args.target_class!r}", file=sys.stderr)
                return 1
            if not 0 <= class_idx < len(handle.class_order):
                print(f"error: class index {class_idx} out of range", file=sys.stderr)
                return 1

    result = explain(handle, image.pixels, class_idx, args.method,
                     _explain_params(args), alpha=args.alpha)

    out_dir = args.out or os.path.join(config.output_dir, f"explain_{args.method}")
    _echo_config(config, out_dir)
    from .xai import three_panel_figure

    figure = three_panel_figure(image.pixels, result.map, result.overlay)
    figure_path = os.path.join(out_dir, f"{args.method}_figure.png")
    save_image(figure, figure_path)
    map_path = os.path.join(out_dir, f"{args.method}_map.npy")
    np.save(map_path, result.map.values)
    overlay_path = os.path.join(out_dir, f"{args.method}_overlay.png")
    save_image(result.overlay, overlay_path)

    print(f"predicted: {handle.class_order[predicted]} "
          f"(confidence {probs[predicted]:.4f})")
    print(f"explained class: {handle.class_order[class_idx]}")
    print(f"figure: {figure_path}")
    print(f"raw map: {map_path}")
    return 0


def cmd_plot_curves(args) -> int:
    with open(args.history) as f:
        records = parse_history_csv(f.read())
    from .plotting import plot_curves

    out_dir = args.out or os.path.dirname(os.path.abspath(args.history))
    paths = plot_curves(records, out_dir, prefix=args.prefix)
    for p in paths:
        print(p)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config(args)
    service = config.service
    if args.host:
        service.host = args.host
    if args.port is not None:
        service.port = args.port
    if args.explain_timeout_s is not None:
        service.explain_timeout_s = args.explain_timeout_s
    if args.max_upload_mb is not None:
        service.max_upload_mb = args.max_upload_mb

    app = create_app(checkpoint_path=args.checkpoint, service=service)
    print(f"serving {app.state.model_name} on {service.host}:{service.port}")
    uvicorn.run(app, host=service.host, port=service.port, log_level="info")
    return 0


def cmd_compare(args) -> int:
    reports = []
    for path in args.reports:
        with open(path) as f:
            reports.append(report_from_json(f.read()))
    table = render_comparison(reports, include_prior=not args.no_prior,
                              format=args.format)
    print(table)
    if args.out:
        with open(args.out, "w") as f:
            f.write(table + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="octclass",
        description="Retinal OCT disease classification, explanation, and serving",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="scan a dataset tree and assign splits")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--root", help="dataset root (class-per-directory)")
    p.add_argument("--out", help="manifest output path")
    p.add_argument("--synthetic-per-class", type=int, default=0,
                   help="generate a synthetic dataset with N images per class first")
    p.add_argument("--seed", type=int, default=0, help="synthetic generator seed")
    p.set_defaults(func=cmd_prepare_data)

    p = sub.add_parser("train", help="train a model and write artifacts")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--root", help="dataset root override")
    p.add_argument("--arch", choices=["tiny_cnn", "xception_style", "inceptionv3_style"],
                   help="architecture override")
    p.add_argument("--width", type=float, help="width multiplier override")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a split")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--root", help="dataset root")
    p.add_argument("--manifest", help="reuse an existing manifest.json")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="explain one image with one method")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--method", required=True, choices=["gradcam", "lime", "occlusion"])
    p.add_argument("--class", dest="target_class",
                   help="class name or index (default: predicted class)")
    p.add_argument("--alpha", type=float, default=0.4, help="overlay opacity")
    p.add_argument("--out", help="output directory")
    p.add_argument("--layer", help="gradcam: tap layer name")
    p.add_argument("--num-superpixels", type=int, help="lime: grid cell count")
    p.add_argument("--num-samples", type=int, help="lime: sample count")
    p.add_argument("--kernel-width", type=float, help="lime: proximity kernel width")
    p.add_argument("--ridge-penalty", type=float, help="lime: ridge strength")
    p.add_argument("--baseline", choices=["mean_color", "gray"],
                   help="lime: off-segment fill")
    p.add_argument("--seed", type=int, help="lime: mask sampling seed")
    p.add_argument("--patch", type=int, help="occlusion: patch size")
    p.add_argument("--stride", type=int, help="occlusion: stride")
    p.add_argument("--baseline-value", type=float, help="occlusion: fill value")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("plot-curves", help="plot accuracy/loss curves from history CSV")
    p.add_argument("--history", required=True)
    p.add_argument("--out", help="output directory (default: alongside the CSV)")
    p.add_argument("--prefix", default="model", help="output filename prefix")
    p.set_defaults(func=cmd_plot_curves)

    p = sub.add_parser("serve", help="run the inference HTTP service")
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--explain-timeout-s", type=float)
    p.add_argument("--max-upload-mb", type=float)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("compare", help="accuracy comparison table across reports")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--format", default="text", choices=["text", "markdown"])
    p.add_argument("--no-prior", action="store_true",
                   help="omit the published prior-study rows")
    p.add_argument("--out", help="also write the table to this file")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the documented code
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (OctClassError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # unexpected failure
        logger.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
