"""Reverse-process samplers over label states.

Both samplers walk t = T..1 from a fully masked state and reveal labels as
the schedule's denoise rates dictate; the rate at t=1 is exactly 1, so every
trajectory finishes fully labeled. ``predict_fn`` is any callable mapping a
LabelState to per-node class distributions — typically a closure over a
trained denoiser, but tests inject constant tables. It must not consume
randomness; all draws here come from the sampler's own generator.

The unconditional sampler routes each masked node independently. The
conditional sampler instead spends an integer reveal budget per step
(stochastically rounded from the expected count) and allocates it to masked
nodes with observed labels first; observed nodes always receive their true
label, so the trajectory ends exactly clamped on the observed set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from redisc.graph import UNKNOWN
from redisc.schedule import MASKED, LabelState, NoiseSchedule, draw_routing


@dataclass
class StepRecord:
    t: int
    masked_before: int
    budget: int | None       # None for the unconditional sampler
    revealed_observed: int
    revealed_free: int


@dataclass
class SampleTrace:
    """Audit log: per-step reveals plus how many times each node was denoised
    (exactly once per trajectory when the sampler is correct)."""

    steps: list = field(default_factory=list)
    denoise_counts: np.ndarray | None = None

    def _bump(self, revealed: np.ndarray) -> None:
        if self.denoise_counts is None:
            self.denoise_counts = np.zeros(revealed.shape[0], dtype=np.int64)
        self.denoise_counts[revealed] += 1


def _draw_rows(probs: np.ndarray, rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per selected row via inverse CDF."""
    cum = np.cumsum(probs[rows], axis=1)
    u = rng.random(rows.shape[0])
    idx = (u[:, None] >= cum).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def sample_unconditional(
    predict_fn,
    sched: NoiseSchedule,
    num_nodes: int,
    rng: np.random.Generator,
    trace: SampleTrace | None = None,
) -> np.ndarray:
    """Draw one fully labeled state from the reverse process.

    Per step: one uniform per masked node routes it, one uniform per routed
    node picks its class from ``predict_fn``'s current distribution.
    """
    state = LabelState(np.full(num_nodes, MASKED, dtype=np.int64), sched.num_steps)
    for t in range(sched.num_steps, 0, -1):
        state.t = t
        masked_before = int(state.masked().sum())
        routing = draw_routing(state, sched, rng)
        reveal = routing.v_prime
        k = int(reveal.sum())
        if k:
            probs = predict_fn(state)
            state.y[reveal] = _draw_rows(probs, np.flatnonzero(reveal), rng)
        if trace is not None:
            trace.steps.append(StepRecord(t, masked_before, None, 0, k))
            trace._bump(reveal)
        state.t = t - 1
    if np.any(state.y == MASKED):  # rate 1 at t=1 makes this unreachable
        raise RuntimeError("trajectory ended with masked nodes")
    return state.y


def sample_conditional(
    predict_fn,
    sched: NoiseSchedule,
    y_observed: np.ndarray,
    rng: np.random.Generator,
    trace: SampleTrace | None = None,
) -> np.ndarray:
    """Draw a fully labeled state consistent with partial observations.

    ``y_observed`` holds known labels, UNKNOWN elsewhere. Each step reveals

        B = floor(sum of masked rates) + Bernoulli(fractional part)

    nodes: masked observed nodes first (uniformly ordered, assigned their
    true label), then masked unobserved nodes uniformly without replacement
    (labels drawn from ``predict_fn``). Steps with nothing masked leave the
    random stream untouched; otherwise the consumption order is fixed:
    rounding uniform, observed choice, free choice, categorical draws.
    """
    y_observed = np.asarray(y_observed, dtype=np.int64)
    observed = y_observed != UNKNOWN
    n = y_observed.shape[0]
    state = LabelState(np.full(n, MASKED, dtype=np.int64), sched.num_steps)
    for t in range(sched.num_steps, 0, -1):
        state.t = t
        masked = state.masked()
        k = int(masked.sum())
        if k == 0:
            if trace is not None:
                trace.steps.append(StepRecord(t, 0, 0, 0, 0))
            state.t = t - 1
            continue
        expect = k * sched.denoise_rate[t - 1]
        budget = int(expect) + int(rng.random() < expect - int(expect))
        budget = min(budget, k)

        obs_pool = np.flatnonzero(masked & observed)
        take_obs = min(budget, obs_pool.size)
        chosen_obs = rng.choice(obs_pool, size=take_obs, replace=False)

        free_pool = np.flatnonzero(masked & ~observed)
        take_free = min(budget - take_obs, free_pool.size)
        chosen_free = rng.choice(free_pool, size=take_free, replace=False)

        if take_free:
            probs = predict_fn(state)
            state.y[chosen_free] = _draw_rows(probs, chosen_free, rng)
        state.y[chosen_obs] = y_observed[chosen_obs]

        if trace is not None:
            trace.steps.append(StepRecord(t, k, budget, take_obs, take_free))
            reveal = np.zeros(n, dtype=bool)
            reveal[chosen_obs] = True
            reveal[chosen_free] = True
            trace._bump(reveal)
        state.t = t - 1
    if np.any(state.y == MASKED):
        raise RuntimeError("trajectory ended with masked nodes")
    state.y[observed] = y_observed[observed]  # exact clamp (a no-op by construction)
    return state.y
