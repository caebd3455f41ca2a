"""
Noise schedules and forward masking
===================================

The forward process never flips one label into another: it only replaces
labels with a sink "masked" state, at a rate controlled by a survival
schedule alpha. This walkthrough builds a schedule, masks a labeling at a
few depths, and checks the bookkeeping that the reverse process relies on.
"""

import numpy as np

from redisc import cosine_schedule, forward_mask, stream

# A schedule over T steps stores alpha[0..T]: the probability a label
# survives unmasked at each depth. Endpoints are exact by construction —
# nothing is masked at t=0, everything is masked at t=T.
T = 10
sched = cosine_schedule(T)
print("alpha:", np.array2string(sched.alpha, precision=3))
assert sched.alpha[0] == 1.0 and sched.alpha[-1] == 0.0

# The per-step denoise rate is the share of currently-masked mass that the
# reverse process should reveal at each step. At t=1 it is exactly 1: the
# final reverse step reveals everything that is left.
print("denoise rate:", np.array2string(sched.denoise_rate, precision=3))
assert sched.denoise_rate[0] == 1.0

# Mask 20 labels at increasing depth: the surviving fraction tracks alpha.
rng = stream(0, 0)
y0 = rng.integers(0, 4, size=2000)
for t in (2, 5, 8, T):
    state = forward_mask(y0, t, sched, rng)
    survived = 1.0 - state.masked().mean()
    print(f"t={t:2d}  alpha={sched.alpha[t]:.3f}  survived={survived:.3f}")

# Surviving labels are never altered — masking is the only corruption.
state = forward_mask(y0, 5, sched, rng)
kept = ~state.masked()
assert np.array_equal(state.y[kept], y0[kept])
print("surviving labels are bit-identical to the clean ones")
