"""Statistics-manifest verification and source checksums.

A manifest is a JSON object pinning the expected counts of a dataset, e.g.

    {"name": "cora", "num_nodes": 2708, "num_edges": 5278,
     "num_features": 1433, "num_classes": 7}

Raw dataset releases drift across mirrors, so a conversion is only trusted
once its recounted statistics match the manifest field for field; every
deviation is reported by name. A manifest may also carry a ``sha256`` map
of input file names to digests, checked before conversion starts.
"""

import hashlib
import json
from pathlib import Path

from bundleconv.bundle import ConvertError, recount

STAT_KEYS = ("num_nodes", "num_edges", "num_features", "num_classes")


def load_manifest(path) -> dict:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConvertError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConvertError(f"manifest {path} is not valid JSON: {exc}")
    if not any(key in manifest for key in STAT_KEYS):
        raise ConvertError(f"manifest {path} pins none of {', '.join(STAT_KEYS)}")
    return manifest


def verify_bundle(bundle_dir, manifest: dict) -> list[str]:
    """Compare a bundle's recounted statistics against a manifest.

    Returns one human-readable line per mismatched field; an empty list
    means every pinned statistic matches.
    """
    counted = recount(bundle_dir)
    mismatches = []
    for key in STAT_KEYS:
        if key in manifest and int(manifest[key]) != counted[key]:
            mismatches.append(f"{key}: manifest {manifest[key]}, bundle {counted[key]}")
    return mismatches


def check_source_checksums(in_dir, manifest: dict) -> int:
    """Validate any pinned sha256 digests of the raw input files.

    Returns the number of files checked; raises on the first mismatch or
    missing file so nothing is converted from a corrupted source.
    """
    pinned = manifest.get("sha256", {})
    for name, expected in sorted(pinned.items()):
        path = Path(in_dir) / name
        if not path.exists():
            raise ConvertError(f"checksum pinned for missing file {name}")
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        if digest != expected:
            raise ConvertError(f"checksum mismatch for {name}: expected {expected}, "
                               f"got {digest}")
    return len(pinned)
