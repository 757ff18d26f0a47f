"""Command-line entry points: train, gridsearch, eval, predict, serve.

Seeds default to a fixed constant so two operators running the same
command get identical models. All diagnostics go to stderr; parseable
output goes to stdout. Exit status 0 means no error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import metrics, store, training
from .data import Dataset, LabelMap, load_csv_pair, orient_fix
from .errors import HurufError
from .network import ModelSpec
from .tensor import Tensor4

log = logging.getLogger("huruf")

DEFAULT_SEED = 1337
MODEL_DIR_ENV = "HURUF_MODEL_DIR"


def _default_model_path(name: str = "model") -> str:
    return os.path.join(os.environ.get(MODEL_DIR_ENV, "."), name)


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--images", required=True, help="pixel CSV file")
    p.add_argument("--labels", required=True, help="label CSV file")
    p.add_argument("--side", type=int, default=64, help="model input side length")
    p.add_argument("--head", type=int, choices=(10, 28), default=28,
                   help="output classes: 10 digits or 28 letters")
    p.add_argument("--header", action="store_true", help="skip one CSV header row")


def _load(args, split: str) -> tuple[Dataset, ModelSpec]:
    label_map = LabelMap.for_head(args.head)
    ds = load_csv_pair(args.images, args.labels, label_map,
                       side=args.side, header=args.header, split=split)
    return ds, ModelSpec(num_classes=args.head, side=args.side)


def cmd_train(args) -> int:
    ds, spec = _load(args, "train")
    cfg = training.TrainConfig(
        epochs=args.epochs, batch_size=args.batch,
        learning_rate=args.lr, seed=args.seed,
    )
    log.info("optimizer=%s initializer=%s activation=%s",
             cfg.optimizer, cfg.initializer, cfg.activation)
    if cfg.epochs == 0:
        log.warning("--epochs 0: saving an initialized, untrained model")
    model, history = training.fit(spec, ds, None, cfg)
    for h in history:
        print(f"epoch {h['epoch'] + 1}/{cfg.epochs} "
              f"loss={h['train_loss']:.4f} acc={h['train_acc']:.4f}")
    if cfg.epochs == 0:
        # mark the neutral (0, 1) running stats usable so eval mode works
        for _conv, bn in model.blocks:
            bn.initialized = True
    from dataclasses import asdict
    store.save_model(model, args.model, train_config=asdict(cfg))
    log.info("model written to %s.json / %s.bin", args.model, args.model)
    return 0


def cmd_gridsearch(args) -> int:
    ds, spec = _load(args, "train")
    results = training.grid_search(
        spec, ds, seed=args.seed, epochs=args.epochs, batch_size=args.batch,
        checkpoint_path=args.checkpoint, jobs=args.jobs,
    )
    print(f"{'rank':>4} {'optimizer':<9} {'init':<8} {'activation':<10} "
          f"{'val_acc':>8} {'seconds':>8}")
    for rank, r in enumerate(results, start=1):
        acc = "failed" if r.val_accuracy is None else f"{r.val_accuracy:.4f}"
        print(f"{rank:>4} {r.config.optimizer:<9} {r.config.initializer:<8} "
              f"{r.config.activation:<10} {acc:>8} {r.wall_time:>8.2f}")
    return 0


def cmd_eval(args) -> int:
    model, manifest = store.load_model(args.model)
    args.head = model.spec.num_classes
    args.side = model.spec.side
    ds, _spec = _load(args, "test")
    report, cm = metrics.evaluate_model(model, ds)
    print(metrics.render_report(report))
    if args.report:
        report.save_json(args.report)
        log.info("structured report written to %s", args.report)
    if args.confusion:
        cm.to_csv(args.confusion)
        log.info("confusion matrix written to %s", args.confusion)
    return 0


def cmd_predict(args) -> int:
    model, manifest = store.load_model(args.model)
    side = model.spec.side
    with open(args.input, "r", encoding="utf-8") as f:
        fields = f.read().replace("\n", ",").strip(",").split(",")
    pixels = np.array([v for v in fields if v.strip() != ""], dtype=np.float64)
    if pixels.size != side * side:
        raise HurufError(
            f"input has {pixels.size} pixels, model expects {side * side}"
        )
    img = Tensor4(pixels.reshape(1, side, side, 1).astype(np.float32))
    img = Tensor4(orient_fix(img).data / np.float32(255.0))
    probs = model.forward(img.data, mode="eval")[0]
    names = manifest["class_names"]
    order = np.argsort(-probs, kind="stable")[: args.topk]
    for idx in order:
        print(f"{names[idx]} {probs[idx]:.4f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_dir=args.model_dir, ui_dir=args.ui_dir,
                     allow_origins=None if args.restrict_origins else ["*"])
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="huruf",
        description="Train, evaluate, and serve handwritten Arabic character/digit models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model with the winning defaults")
    _add_data_args(p)
    p.add_argument("--model", default=_default_model_path(), help="output model base path")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("gridsearch", help="run the 24-combination hyperparameter grid")
    _add_data_args(p)
    p.add_argument("--epochs", type=int, default=5, help="probe epochs per combination")
    p.add_argument("--batch", type=int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--checkpoint", default="grid_checkpoint.jsonl",
                   help="resumable JSONL checkpoint path")
    p.add_argument("--jobs", type=int, default=1, help="parallel combination workers")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("eval", help="class-wise report on a test set")
    _add_data_args(p)
    p.add_argument("--model", default=_default_model_path(), help="model base path")
    p.add_argument("--report", default=None, help="write a JSON report here")
    p.add_argument("--confusion", default=None, help="write the confusion matrix CSV here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one raw 0-255 CSV pixel row")
    p.add_argument("--model", default=_default_model_path(), help="model base path")
    p.add_argument("--input", required=True, help="file with side^2 comma-separated pixels")
    p.add_argument("--topk", type=int, default=3)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="start the HTTP inference service")
    p.add_argument("--model-dir", default=os.environ.get(MODEL_DIR_ENV, "."),
                   help="directory holding digits.json/.bin and letters.json/.bin")
    p.add_argument("--ui-dir", default=None, help="static UI directory mounted at /app")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--restrict-origins", action="store_true",
                   help="disable the permissive CORS default")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HurufError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
