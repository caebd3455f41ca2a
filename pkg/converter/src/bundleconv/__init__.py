"""Dataset-to-bundle converter for the diffusion node classifier.

Reads publicly released citation-graph datasets (classic pickled releases
or plain CSV directories) and writes the canonical bundle directory format,
with statistics-manifest verification. This package only ever touches
third-party file formats; the classifier only ever reads bundles.
"""

from bundleconv.bundle import (
    UNKNOWN,
    ConvertedGraph,
    ConvertError,
    dedupe_edges,
    recount,
    write_bundle,
)
from bundleconv.cli import main
from bundleconv.csvgraph import load_csv
from bundleconv.planetoid import load_planetoid
from bundleconv.verify import check_source_checksums, load_manifest, verify_bundle

__all__ = [
    "UNKNOWN",
    "ConvertError",
    "ConvertedGraph",
    "check_source_checksums",
    "dedupe_edges",
    "load_csv",
    "load_manifest",
    "load_planetoid",
    "main",
    "recount",
    "verify_bundle",
    "write_bundle",
]
