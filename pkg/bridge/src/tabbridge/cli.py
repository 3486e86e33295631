"""Command-line entry point: ``tabbridge serve --watch DIR``."""

from __future__ import annotations

import argparse
import sys

from .backbones import BackboneError
from .server import BridgeServer


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabbridge",
        description="File-bridge server for in-context tabular prediction.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="watch a directory and answer requests")
    p.add_argument("--watch", required=True, help="bridge watch directory")
    p.add_argument("--backbone", choices=("auto", "tabpfn", "builtin"),
                   default="auto")
    p.add_argument("--poll", type=float, default=0.05,
                   help="poll interval in seconds")
    p.add_argument("--once", action="store_true",
                   help="answer currently pending requests, then exit")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        server = BridgeServer(args.watch, args.backbone, args.poll)
    except BackboneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"watching {server.watch_dir} (backbone: {server.backbone.name})",
          flush=True)
    if args.once:
        answered = server.scan_once()
        print(f"answered {answered} request(s)")
        return 0
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
