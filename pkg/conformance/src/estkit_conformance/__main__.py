"""Command-line front: generate golden fixtures or compare the artifact.

    python -m estkit_conformance generate --out FIXTURE_DIR
    python -m estkit_conformance compare --fixtures FIXTURE_DIR [--report out.json]
                                         [--cli "estkit"]
"""

import argparse
import shlex
import sys

from .compare import compare
from .generate import ReferenceMismatch, generate_fixtures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="estkit-conformance")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="emit golden fixtures from the pinned reference")
    p_gen.add_argument("--out", required=True)

    p_cmp = sub.add_parser("compare", help="check the artifact against a fixture directory")
    p_cmp.add_argument("--fixtures", required=True)
    p_cmp.add_argument("--report", default=None)
    p_cmp.add_argument("--cli", default=None, help="artifact CLI command (default: python -m estkit.cli)")

    args = parser.parse_args(argv)
    if args.command == "generate":
        try:
            names = generate_fixtures(args.out)
        except ReferenceMismatch as exc:
            print(f"refusing to generate:\n{exc}", file=sys.stderr)
            return 1
        print("\n".join(names))
        return 0

    cli = shlex.split(args.cli) if args.cli else None
    report = compare(args.fixtures, artifact_cli=cli, report_path=args.report)
    print(report.text())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
