"""Command-line interface: train a model, run inference."""

from __future__ import annotations

import argparse
import sys

from .infer import infer
from .train import TrainConfig, train


def cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        critic_steps=args.critic_steps,
        learning_rate=args.lr,
        base_width=args.width,
        depth=args.depth,
        seed=args.seed,
        holdout_scenes=args.holdout,
        dropout=args.dropout,
        resample_priors=not args.no_resample,
        mirror_augment=not args.no_mirror,
    )
    _, log = train(args.data, args.out, cfg, eval_dir=args.eval_data)
    last = log["epochs"][-1]
    print(f"trained {cfg.epochs} epochs on {log['train_scenes']} scenes "
          f"({log['eval_scenes']} held out); final v_mse={last['v_mse']:.6g}")
    print(f"checkpoint: {args.out}/checkpoint.pt")
    return 0


def cmd_infer(args) -> int:
    written = infer(args.checkpoint, args.data, args.out, mirror_ensemble=args.mirror_ensemble)
    print(f"wrote {len(written)} predictions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thz-envsense-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train on a generated corpus")
    tr.add_argument("--data", required=True, help="training dataset directory")
    tr.add_argument("--out", required=True, help="run directory (checkpoint + log)")
    tr.add_argument("--eval-data", default=None, help="held-out dataset directory")
    tr.add_argument("--epochs", type=int, default=50)
    tr.add_argument("--batch-size", type=int, default=16)
    tr.add_argument("--critic-steps", type=int, default=5)
    tr.add_argument("--lr", type=float, default=1e-4)
    tr.add_argument("--width", type=int, default=64)
    tr.add_argument("--depth", type=int, default=3)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--holdout", type=int, default=None,
                    help="scenes held out of --data when no --eval-data")
    tr.add_argument("--dropout", type=float, default=0.0)
    tr.add_argument("--no-resample", action="store_true",
                    help="disable per-step sensor-subset resampling")
    tr.add_argument("--no-mirror", action="store_true",
                    help="disable mirror augmentation")
    tr.set_defaults(func=cmd_train)

    inf = sub.add_parser("infer", help="write gen_{id}.f32 predictions")
    inf.add_argument("--checkpoint", required=True)
    inf.add_argument("--data", required=True, help="dataset directory with prior encodings")
    inf.add_argument("--out", required=True)
    inf.add_argument("--mirror-ensemble", action="store_true",
                     help="max-combine with a beam-axis-mirrored forward pass")
    inf.set_defaults(func=cmd_infer)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
