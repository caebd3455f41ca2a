"""Regenerate the checked-in miniature bundle used by the test suite."""

from pathlib import Path

from redisc import generate_sbm, make_per_class_split, save_bundle
from redisc.rng import SBM, SPLIT, stream

out = Path(__file__).resolve().parent.parent / "tests" / "data" / "mini_bundle"
b = generate_sbm(8, 3, 0.6, 0.05, 4, 0.2, stream(2024, SBM))
b.splits = make_per_class_split(b.labels, 3, 3, 2, stream(2024, SPLIT))
save_bundle(b, out)
print(f"wrote {out}: {b.num_nodes} nodes, {b.num_edges} edges")
