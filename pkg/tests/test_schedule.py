import math

import numpy as np
import pytest

from redisc import schedule as sch
from redisc.rng import EM_LOOP, stream


def hand_schedule():
    # T=3 with easy fractions; derived quantities worked out by hand below.
    return sch.NoiseSchedule.from_alpha(np.array([1.0, 0.6, 0.25, 0.0]))


# -- hand-derived oracle -------------------------------------------------------
# beta = alpha[t]/alpha[t-1] = (0.6, 0.416666..., 0)
# rate: t=1 (1-0.6)/(1-0.6) = 1
#       t=2 (0.6-0.25)/(1-0.25) = 0.35/0.75 = 7/15
#       t=3 (0.25-0)/(1-0)     = 0.25

def test_hand_schedule_derived_values():
    s = hand_schedule()
    assert s.num_steps == 3
    assert np.allclose(s.beta, [0.6, 0.25 / 0.6, 0.0], atol=0, rtol=1e-15)
    assert s.beta[2] == 0.0
    assert s.denoise_rate[0] == 1.0
    assert s.denoise_rate[1] == pytest.approx(7.0 / 15.0, rel=1e-15)
    assert s.denoise_rate[2] == 0.25


@pytest.mark.parametrize("T", [1, 2, 4, 80, 512])
def test_cosine_schedule_invariants(T):
    s = sch.cosine_schedule(T)
    assert len(s.alpha) == T + 1
    assert len(s.beta) == T and len(s.denoise_rate) == T
    assert s.alpha[0] == 1.0
    assert s.alpha[T] == 0.0
    assert np.all(np.diff(s.alpha) < 0)
    assert np.all(s.denoise_rate > 0) and np.all(s.denoise_rate <= 1.0)
    assert s.denoise_rate[0] == 1.0
    assert s.beta[T - 1] == 0.0


@pytest.mark.parametrize("T", [2, 5, 80])
def test_cosine_matches_scalar_formula(T):
    # independent scalar evaluation of the squared-cosine curve
    s = sch.cosine_schedule(T)
    offset = 0.008
    norm = math.cos(offset / (1 + offset) * math.pi / 2) ** 2
    for t in range(1, T):
        expected = math.cos((t / T + offset) / (1 + offset) * math.pi / 2) ** 2 / norm
        assert s.alpha[t] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("T", [1, 4, 80])
def test_reverse_recursion_reproduces_alpha_analytically(T):
    # expected unmasked fraction: u_T = 0, u_{t-1} = u_t + (1 - u_t) * rate
    s = sch.cosine_schedule(T)
    u = 0.0
    for t in range(T, 0, -1):
        u = u + (1.0 - u) * s.denoise_rate[t - 1]
        assert abs(u - s.alpha[t - 1]) <= 1e-12


def test_from_alpha_validation():
    with pytest.raises(ValueError, match="alpha\\[0\\]"):
        sch.NoiseSchedule.from_alpha(np.array([0.99, 0.5, 0.0]))
    with pytest.raises(ValueError, match="alpha\\[T\\]"):
        sch.NoiseSchedule.from_alpha(np.array([1.0, 0.5, 0.1]))
    with pytest.raises(ValueError, match="decreasing"):
        sch.NoiseSchedule.from_alpha(np.array([1.0, 0.5, 0.6, 0.0]))
    with pytest.raises(ValueError, match="at least one step"):
        sch.NoiseSchedule.from_alpha(np.array([1.0]))


# -- forward masking -----------------------------------------------------------

def test_forward_mask_endpoints_exact():
    y0 = np.arange(50) % 3
    s = hand_schedule()
    clean = sch.forward_mask(y0, 0, s, stream(0, EM_LOOP))
    assert np.array_equal(clean.y, y0)
    full = sch.forward_mask(y0, 3, s, stream(0, EM_LOOP))
    assert np.all(full.y == sch.MASKED)
    assert full.t == 3


def test_forward_mask_preserves_kept_labels():
    y0 = np.arange(200) % 4
    st = sch.forward_mask(y0, 2, hand_schedule(), stream(1, EM_LOOP))
    kept = ~st.masked()
    assert np.array_equal(st.y[kept], y0[kept])
    assert 0 < kept.sum() < 200


def test_forward_mask_concentration():
    # alpha = 0.5 over 10000 nodes: 4 sigma is 200
    s = sch.NoiseSchedule.from_alpha(np.array([1.0, 0.5, 0.0]))
    st = sch.forward_mask(np.zeros(10000, dtype=np.int64), 1, s, stream(2, EM_LOOP))
    masked = int(st.masked().sum())
    assert 4800 <= masked <= 5200


def test_forward_mask_deterministic():
    y0 = np.arange(100) % 5
    a = sch.forward_mask(y0, 1, hand_schedule(), stream(3, EM_LOOP))
    b = sch.forward_mask(y0, 1, hand_schedule(), stream(3, EM_LOOP))
    assert np.array_equal(a.y, b.y)


def test_forward_mask_validates():
    s = hand_schedule()
    with pytest.raises(ValueError, match="t must be"):
        sch.forward_mask(np.zeros(3, dtype=np.int64), 4, s, stream(0, EM_LOOP))
    with pytest.raises(ValueError, match="fully labeled"):
        sch.forward_mask(np.array([0, sch.MASKED]), 1, s, stream(0, EM_LOOP))


# -- routing ---------------------------------------------------------------------

def test_draw_routing_fields_consistent():
    s = hand_schedule()
    yt = sch.LabelState(np.array([0, sch.MASKED, 2, sch.MASKED]), 2)
    r = sch.draw_routing(yt, s, stream(4, EM_LOOP))
    assert np.array_equal(r.b, [True, False, True, False])
    assert not r.v_prime[0] and not r.v_prime[2]
    assert np.array_equal(r.v, r.b | r.v_prime)


def test_draw_routing_consumes_no_draws_without_masked_nodes():
    s = hand_schedule()
    yt = sch.LabelState(np.array([0, 1, 2]), 1)
    rng = stream(5, EM_LOOP)
    r = sch.draw_routing(yt, s, rng)
    assert np.all(r.b) and not r.v_prime.any()
    # the stream was left untouched
    assert rng.random() == stream(5, EM_LOOP).random()


def test_draw_routing_rate_one_reveals_everything():
    s = hand_schedule()
    yt = sch.LabelState(np.full(64, sch.MASKED), 1)  # rate at t=1 is exactly 1
    r = sch.draw_routing(yt, s, stream(6, EM_LOOP))
    assert np.all(r.v_prime)


def test_draw_routing_mean_concentration():
    # rate 7/15 over 1e5 masked nodes; 4 sigma on the mean
    s = hand_schedule()
    n = 100_000
    yt = sch.LabelState(np.full(n, sch.MASKED), 2)
    r = sch.draw_routing(yt, s, stream(7, EM_LOOP))
    p = 7.0 / 15.0
    sigma = math.sqrt(p * (1 - p) / n)
    assert abs(r.v_prime.mean() - p) <= 4 * sigma


def test_draw_routing_validates_t():
    with pytest.raises(ValueError, match="routing needs t"):
        sch.draw_routing(sch.LabelState(np.array([0]), 0), hand_schedule(), stream(0, EM_LOOP))


# -- loss weights ------------------------------------------------------------------

def test_loss_weight_and_mask_values():
    s = hand_schedule()
    y0 = np.array([0, 1, 2, 1])
    yt = sch.LabelState(np.array([0, sch.MASKED, 2, sch.MASKED]), 2)
    weights, active = sch.loss_weight_and_mask(y0, yt, s)
    assert np.array_equal(active, [False, True, False, True])
    assert np.allclose(weights, [0.0, 7.0 / 15.0, 0.0, 7.0 / 15.0], atol=0, rtol=1e-14)
    assert weights[1] == s.denoise_rate[1]


def test_loss_weight_rejects_inconsistent_state():
    s = hand_schedule()
    yt = sch.LabelState(np.array([0, sch.MASKED]), 1)
    with pytest.raises(ValueError, match="disagree"):
        sch.loss_weight_and_mask(np.array([1, 1]), yt, s)
