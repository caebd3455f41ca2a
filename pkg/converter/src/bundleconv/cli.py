"""Command-line conversion driver.

    convert.py --format planetoid|csv --in PATH --out DIR [--manifest FILE]

Parses the source dataset, writes a canonical bundle directory, and — when
a manifest is given — first checks any pinned source checksums, then
recounts the written bundle against the manifest's statistics. Exit codes:
0 success, 1 manifest mismatch (the deviations are printed), 2 usage
errors, 3 conversion failures.
"""

import argparse
import sys

from bundleconv.bundle import ConvertError, write_bundle
from bundleconv.csvgraph import load_csv
from bundleconv.planetoid import load_planetoid
from bundleconv.verify import check_source_checksums, load_manifest, verify_bundle

LOADERS = {"planetoid": load_planetoid, "csv": load_csv}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convert.py", description="convert a raw graph dataset to a bundle directory")
    parser.add_argument("--format", required=True, choices=sorted(LOADERS),
                        help="source dataset layout")
    parser.add_argument("--in", dest="src", required=True, metavar="PATH",
                        help="directory holding the raw dataset files")
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="bundle directory to create")
    parser.add_argument("--manifest", metavar="FILE",
                        help="statistics manifest JSON to verify against")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = load_manifest(args.manifest) if args.manifest else None
        if manifest:
            checked = check_source_checksums(args.src, manifest)
            if checked:
                print(f"verified {checked} source checksums")

        graph = LOADERS[args.format](args.src)
        out = write_bundle(graph, args.out)
        print(f"wrote {out}: {graph.num_nodes} nodes, {graph.edges.shape[0]} edges, "
              f"{graph.features.shape[1]} features, {graph.num_classes} classes")

        if manifest:
            mismatches = verify_bundle(out, manifest)
            if mismatches:
                for line in mismatches:
                    print(f"manifest mismatch - {line}", file=sys.stderr)
                return 1
            print(f"bundle matches manifest {args.manifest}")
        return 0
    except ConvertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # unreadable pickles, I/O failures, bad text
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
