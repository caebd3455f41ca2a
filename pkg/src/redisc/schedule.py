"""Masking schedule and routing for absorbing-state label diffusion.

``alpha[t]`` is the probability a node's label survives unmasked after t
forward steps; alpha runs from exactly 1 at t=0 to exactly 0 at t=T. The
reverse process reveals each still-masked node at step t with probability

    denoise_rate[t-1] = (alpha[t-1] - alpha[t]) / (1 - alpha[t])

which telescopes so the expected unmasked fraction after reverse step t is
exactly alpha[t-1]; the rate at t=1 is exactly 1, so a trajectory always
finishes fully revealed. ``beta[t-1] = alpha[t]/alpha[t-1]`` is the per-step
survival probability (0 at the final step).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASKED = -1  # masked/absorbing label sentinel inside a trajectory


@dataclass(frozen=True)
class NoiseSchedule:
    alpha: np.ndarray          # length T+1
    beta: np.ndarray           # length T
    denoise_rate: np.ndarray   # length T

    @property
    def num_steps(self) -> int:
        return len(self.alpha) - 1

    @staticmethod
    def from_alpha(alpha: np.ndarray) -> "NoiseSchedule":
        alpha = np.asarray(alpha, dtype=np.float64)
        T = len(alpha) - 1
        if T < 1:
            raise ValueError("schedule needs at least one step")
        if alpha[0] != 1.0:
            raise ValueError(f"alpha[0] must be exactly 1, got {alpha[0]!r}")
        if alpha[T] != 0.0:
            raise ValueError(f"alpha[T] must be exactly 0, got {alpha[T]!r}")
        if not np.all(np.diff(alpha) < 0):
            raise ValueError("alpha must be strictly decreasing")
        beta = alpha[1:] / alpha[:-1]
        rate = (alpha[:-1] - alpha[1:]) / (1.0 - alpha[1:])
        if np.any(rate <= 0.0) or np.any(rate > 1.0):
            raise ValueError("denoise rates must lie in (0, 1]")
        return NoiseSchedule(alpha, beta, rate)


def cosine_schedule(num_steps: int, offset: float = 0.008) -> NoiseSchedule:
    """Squared-cosine survival curve normalized to 1 at t=0, forced to exactly
    0 at t=T. The small offset keeps the first steps from masking too fast."""
    t = np.arange(num_steps + 1, dtype=np.float64) / num_steps
    f = np.cos((t + offset) / (1.0 + offset) * (np.pi / 2.0)) ** 2
    alpha = f / f[0]
    alpha[0] = 1.0
    alpha[num_steps] = 0.0
    return NoiseSchedule.from_alpha(alpha)


@dataclass
class LabelState:
    """Per-node labels at one timestep; MASKED where still absorbed."""

    y: np.ndarray  # int64
    t: int

    def masked(self) -> np.ndarray:
        return self.y == MASKED

    def copy(self) -> "LabelState":
        return LabelState(self.y.copy(), self.t)


@dataclass
class RoutingDraw:
    """One reverse-step routing realization.

    b marks nodes already revealed before the step; v_prime marks masked
    nodes chosen for revelation now; v = b | v_prime is the revealed
    indicator after the step.
    """

    v: np.ndarray
    v_prime: np.ndarray
    b: np.ndarray


def forward_mask(y0: np.ndarray, t: int, sched: NoiseSchedule, rng: np.random.Generator) -> LabelState:
    """Independently keep each clean label with probability alpha[t].

    t=0 returns the clean state, t=T the fully masked one (both exact: the
    uniform draws live in [0, 1)).
    """
    y0 = np.asarray(y0, dtype=np.int64)
    if np.any(y0 < 0):
        raise ValueError("forward_mask needs a fully labeled clean state")
    if not 0 <= t <= sched.num_steps:
        raise ValueError(f"t must be in [0, {sched.num_steps}], got {t}")
    keep = rng.random(y0.shape[0]) < sched.alpha[t]
    y = np.where(keep, y0, MASKED)
    return LabelState(y, t)


def draw_routing(yt: LabelState, sched: NoiseSchedule, rng: np.random.Generator) -> RoutingDraw:
    """Independent per-node routing for reverse step t -> t-1.

    Consumes exactly one uniform per currently-masked node, so trajectories
    with no masked nodes leave the stream untouched.
    """
    t = yt.t
    if not 1 <= t <= sched.num_steps:
        raise ValueError(f"routing needs t in [1, {sched.num_steps}], got {t}")
    masked = yt.masked()
    v_prime = np.zeros(yt.y.shape[0], dtype=bool)
    k = int(masked.sum())
    if k:
        v_prime[masked] = rng.random(k) < sched.denoise_rate[t - 1]
    b = ~masked
    return RoutingDraw(v=b | v_prime, v_prime=v_prime, b=b)


def loss_weight_and_mask(
    y0: np.ndarray, yt: LabelState, sched: NoiseSchedule
) -> tuple[np.ndarray, np.ndarray]:
    """Training weights for one masked state: denoise_rate[t-1] on masked
    rows, zero elsewhere. Unmasked rows must agree with the clean labels."""
    y0 = np.asarray(y0, dtype=np.int64)
    t = yt.t
    if not 1 <= t <= sched.num_steps:
        raise ValueError(f"loss weights need t in [1, {sched.num_steps}], got {t}")
    active = yt.masked()
    if not np.array_equal(yt.y[~active], y0[~active]):
        raise ValueError("unmasked rows disagree with the clean labels")
    weights = np.zeros(y0.shape[0], dtype=np.float64)
    weights[active] = sched.denoise_rate[t - 1]
    return weights, active
