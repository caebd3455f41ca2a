"""Deterministic random streams.

Every stochastic routine in this package takes an explicit numpy Generator.
A run owns one master seed; independent consumers derive their own streams
from (master seed, stream id) so that extra draws in one place never shift
the sequence seen anywhere else. Philox is counter-based, so derived streams
are statistically independent and cheap to create.
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids. Append new consumers at the end; renumbering breaks replay.
SPLIT = 0
SBM = 1
WARMUP_INIT = 2
WARMUP_DRAW = 3
DENOISER_INIT = 4
EM_LOOP = 5
PREDICT = 6
GRAD_CHECK = 7
BASELINE = 8


def stream(master_seed: int, *ids: int) -> np.random.Generator:
    """Generator for one named stream derived from a master seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((master_seed, *ids))))
