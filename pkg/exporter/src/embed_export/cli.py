import argparse
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export per-token transformer hidden states to the "
                    "vector exchange format.")
    parser.add_argument("--input", required=True, help="CoNLL-U file")
    parser.add_argument("--model", required=True,
                        help="model identifier or local model directory")
    parser.add_argument("--output", required=True, help="output vector file")
    parser.add_argument("--layers", default="all",
                        help='"all" or comma-separated layer indices '
                             "(0 = embedding layer)")
    parser.add_argument("--batch-size", type=int, default=1)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    from .export import export
    try:
        count = export(args.input, args.model, args.output,
                       layers=args.layers, device=args.device,
                       batch_size=args.batch_size)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote vectors for {count} sentences to {args.output}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
