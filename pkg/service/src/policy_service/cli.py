"""Service command line: train a model from corpus files, serve an artifact.

The serving address defaults to the ASYMREG_POLICY_ENDPOINT environment
variable when set (host:port), else 127.0.0.1:9000.
"""

from __future__ import annotations

import argparse
import os
import sys

ENDPOINT_ENV = "ASYMREG_POLICY_ENDPOINT"
DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 9000


def cmd_train(args) -> int:
    from .data import read_corpus
    from .model import ModelConfig, save_artifact
    from .training import TrainConfig, train

    train_seqs = read_corpus(args.corpus)
    val_seqs = read_corpus(args.val) if args.val else train_seqs
    model_cfg = ModelConfig(recurrent_units=args.units,
                            bidirectional=not args.unidirectional,
                            conditioned=not args.no_condition)
    train_cfg = TrainConfig(max_steps=args.steps, batch_size=args.batch_size,
                            seed=args.seed)
    log: list[str] = []
    try:
        model, metrics = train(train_seqs, val_seqs, model_cfg, train_cfg, log)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in log:
        print(line)
    save_artifact(args.out, model, metrics)
    print(f"saved artifact to {args.out} "
          f"(val loss {metrics['initial_val_loss']:.4f} -> {metrics['best_val_loss']:.4f})")
    return 0


def cmd_serve(args) -> int:
    from .model import ArtifactError, load_artifact
    from .server import serve_forever

    host, port = DEFAULT_HOST, DEFAULT_PORT
    endpoint = args.endpoint or os.environ.get(ENDPOINT_ENV)
    if endpoint:
        h, _, p = endpoint.rpartition(":")
        host, port = h or DEFAULT_HOST, int(p)
    if args.port is not None:
        port = args.port
    if args.host:
        host = args.host
    try:
        model = load_artifact(args.model)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    serve_forever(model, host, port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="policy-service", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a next-rule model from corpus JSONL")
    p.add_argument("--corpus", required=True, help="training corpus JSONL")
    p.add_argument("--val", help="validation corpus JSONL (defaults to --corpus)")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.add_argument("--units", type=int, default=64)
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-condition", action="store_true",
                   help="train the unconditioned ablation")
    p.add_argument("--unidirectional", action="store_true")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("serve", help="serve a trained artifact")
    p.add_argument("--model", required=True, help="artifact directory")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--endpoint", help=f"host:port (default ${ENDPOINT_ENV})")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
