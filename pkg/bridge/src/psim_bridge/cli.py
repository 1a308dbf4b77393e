"""psim-bridge command line: encode abstracts or emit mock embeddings."""

from __future__ import annotations

import argparse
import sys

from .encode import DEFAULT_MODEL, BridgeConfig, encode_corpus, mock_encode
from .psimfile import BridgeError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psim-bridge",
        description="Encode patent abstracts into PSIM embedding files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    encode = sub.add_parser("encode", help="run a pre-trained sentence encoder")
    encode.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"encoder identifier (default: {DEFAULT_MODEL})")
    encode.add_argument("--input", required=True, help="patents.csv path")
    encode.add_argument("--output", required=True, help="PSIM output path")
    encode.add_argument("--batch-size", type=int, default=64)

    mock = sub.add_parser("mock", help="emit deterministic mock embeddings")
    mock.add_argument("--seed", type=int, required=True)
    mock.add_argument("--dim", type=int, default=384)
    mock.add_argument("--input", required=True, help="patents.csv path")
    mock.add_argument("--output", required=True, help="PSIM output path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "encode":
            config = BridgeConfig(
                model_name=args.model,
                batch_size=args.batch_size,
                input_path=args.input,
                output_path=args.output,
            )
            summary = encode_corpus(config)
        else:
            summary = mock_encode(args.seed, args.input, args.output, dim=args.dim)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    print(
        f"{args.command}: ok (count={summary['count']}, dim={summary['dim']}, "
        f"skipped_empty={summary['skipped_empty']})"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
