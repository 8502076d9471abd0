"""Command-line entry points for the experiment pipeline and explorer."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline
from .pipeline import PipelineError, load_config

SCHEME_CHOICES = ("states", "actions", "joint", "handcrafted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="playstyles",
        description="Simulate matches, learn trace embeddings, cluster play "
                    "styles, and serve the explorer.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scheme=False):
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override global seed")
        p.add_argument("--out", default=None, help="override output directory")
        if scheme:
            p.add_argument("--scheme", choices=SCHEME_CHOICES, default=None,
                           help="single scheme (default: all configured)")

    add_common(sub.add_parser("simulate", help="play all match-ups and store replays"))
    add_common(sub.add_parser("encode", help="build the tensor dataset from replays"))
    add_common(sub.add_parser("train", help="fit an autoencoder"), scheme=True)
    add_common(sub.add_parser("embed", help="export embedding vectors"), scheme=True)
    add_common(sub.add_parser("cluster", help="k-means + metrics per group"), scheme=True)
    add_common(sub.add_parser("report", help="aggregate table and projections"))

    serve = sub.add_parser("serve", help="serve the embedding explorer API/UI")
    serve.add_argument("--artifacts", default=None,
                       help="pipeline output directory (or use --config)")
    serve.add_argument("--config", default=None)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    return parser


def _schemes(args, config, include_handcrafted: bool) -> list[str]:
    if args.scheme is not None:
        return [args.scheme]
    schemes = list(config.schemes)
    if include_handcrafted:
        schemes.append("handcrafted")
    return schemes


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            artifacts = args.artifacts
            if artifacts is None:
                if args.config is None:
                    raise PipelineError("serve needs --artifacts or --config")
                artifacts = load_config(args.config).out
            import uvicorn

            from .server import create_app

            uvicorn.run(create_app(artifacts), host=args.host, port=args.port)
            return 0

        config = load_config(args.config, seed=args.seed, out=args.out)
        if args.command == "simulate":
            pipeline.cmd_simulate(config)
        elif args.command == "encode":
            pipeline.cmd_encode(config)
        elif args.command == "train":
            for scheme in _schemes(args, config, include_handcrafted=False):
                pipeline.cmd_train(config, scheme)
        elif args.command == "embed":
            for scheme in _schemes(args, config, include_handcrafted=True):
                pipeline.cmd_embed(config, scheme)
        elif args.command == "cluster":
            for scheme in _schemes(args, config, include_handcrafted=True):
                pipeline.cmd_cluster(config, scheme)
        elif args.command == "report":
            pipeline.cmd_report(config)
        return 0
    except (PipelineError, FileNotFoundError, ValueError) as exc:
        print(f"playstyles {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
