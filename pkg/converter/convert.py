#!/usr/bin/env python3
"""Convert a raw graph dataset into a bundle directory.

    python convert.py --format planetoid|csv --in PATH --out DIR [--manifest FILE]
"""

import sys

from bundleconv.cli import main

if __name__ == "__main__":
    sys.exit(main())
