import itertools
import math

import numpy as np
import pytest

from mudca.channel import sample_block
from mudca.errors import ConfigError, ParameterError
from mudca.schedulers import (MODE_IDLE, MODE_SM, MODE_STC, PolicyConfig,
                              Scheduler, SchedulingDecision, allocate_bits,
                              gap_decide, greedy_prefix_len, qqs_decide,
                              stc_frame_len)


# ---------------------------------------------------------------------------
# Independent oracle: score every nonempty subset from scratch with its own
# pseudo-inverse path, never touching the implementation under test.
# ---------------------------------------------------------------------------

def oracle_subset_score(subset, backlogs, coherence, gains, power, noise,
                        t_stc, theta):
    if len(subset) == 1:
        u = subset[0]
        t_k = min(coherence[u], t_stc) if t_stc else coherence[u]
        g = float(np.sum(np.abs(gains[u]) ** 2))
        beta = [t_k * math.log2(1 + g * power / (gains.shape[1] * noise))]
        return t_k, beta
    t_k = min(coherence[u] for u in subset)
    payload = t_k - len(subset)
    if payload <= 0:
        return t_k, [0.0] * len(subset)
    sub = gains[list(subset)]
    svals = np.linalg.svd(sub, compute_uv=False)
    if sub.shape[0] > sub.shape[1] or svals[-1] <= 1e-10 * svals[0]:
        return t_k, [0.0] * len(subset)
    w = np.linalg.pinv(sub)
    zeta_sq = power / float(np.sum(np.abs(w) ** 2))
    eff = sub @ w
    beta = []
    for i in range(len(subset)):
        sig = zeta_sq * abs(eff[i, i]) ** 2
        interf = zeta_sq * (float(np.sum(np.abs(eff[i]) ** 2)) - abs(eff[i, i]) ** 2)
        sinr = sig / (max(interf, 0.0) + noise)
        beta.append(payload * math.log2(1 + sinr))
    return t_k, beta


def oracle_best_subset(backlogs, coherence, gains, power, noise,
                       t_stc=None, theta=1):
    best_obj, best_set = 0.0, ()
    n = len(backlogs)
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            t_k, beta = oracle_subset_score(subset, backlogs, coherence, gains,
                                            power, noise, t_stc, theta)
            obj = sum(backlogs[u] ** theta * b for u, b in zip(subset, beta)) / t_k
            if obj > best_obj:
                best_obj, best_set = obj, subset
    return best_set, best_obj


def random_instance(rng, max_users=6, max_antennas=10):
    n = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(1, max_antennas + 1))
    backlogs = rng.uniform(0, 50, size=n)
    backlogs[rng.random(n) < 0.2] = 0.0
    coherence = [int(rng.integers(2, 120)) for _ in range(n)]
    gains = sample_block(n, m, rng).gains
    return list(backlogs), coherence, gains


class TestGapDecide:
    POWER, NOISE = 1.0, 0.0316

    def test_single_user_is_stc(self):
        gains = sample_block(1, 4, np.random.default_rng(0)).gains
        d = gap_decide([5.0], [30], gains, self.POWER, self.NOISE)
        assert d.mode == MODE_STC
        assert d.scheduled == (0,)
        assert d.frame_len == 30
        g = float(np.sum(np.abs(gains[0]) ** 2))
        expected = 30 * math.log2(1 + g * self.POWER / (4 * self.NOISE))
        assert d.allocated_bits[0] == pytest.approx(expected)

    def test_all_queues_empty_idles(self):
        gains = sample_block(3, 8, np.random.default_rng(1)).gains
        d = gap_decide([0.0, 0.0, 0.0], [10, 10, 10], gains, self.POWER, self.NOISE)
        assert d.mode == MODE_IDLE
        assert d.scheduled == ()
        assert d.frame_len == 1

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(120):
            backlogs, coherence, gains = random_instance(rng)
            d = gap_decide(backlogs, coherence, gains, self.POWER, self.NOISE)
            oracle_set, oracle_obj = oracle_best_subset(
                backlogs, coherence, gains, self.POWER, self.NOISE)
            assert d.scheduled == oracle_set
            assert d.objective == pytest.approx(oracle_obj, rel=1e-9, abs=1e-12)

    def test_power_law_theta_one_equals_plain(self):
        rng = np.random.default_rng(7)
        for _ in range(80):
            backlogs, coherence, gains = random_instance(rng)
            plain = gap_decide(backlogs, coherence, gains, self.POWER, self.NOISE)
            pl = gap_decide(backlogs, coherence, gains, self.POWER, self.NOISE,
                            theta=1)
            assert plain.scheduled == pl.scheduled
            assert plain.objective == pl.objective

    def test_queue_scaling_leaves_argmax_unchanged(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            backlogs, coherence, gains = random_instance(rng)
            base = gap_decide(backlogs, coherence, gains, self.POWER, self.NOISE)
            scaled = gap_decide([3.5 * q for q in backlogs], coherence, gains,
                                self.POWER, self.NOISE)
            assert base.scheduled == scaled.scheduled
            if base.mode != MODE_IDLE:
                assert scaled.objective == pytest.approx(3.5 * base.objective)

    def test_subset_limit_enforced(self):
        gains = sample_block(5, 8, np.random.default_rng(3)).gains
        with pytest.raises(ConfigError, match="subset search"):
            gap_decide([1.0] * 5, [10] * 5, gains, self.POWER, self.NOISE,
                       subset_limit=4)

    def test_t_stc_caps_single_user_frames(self):
        gains = sample_block(1, 2, np.random.default_rng(4)).gains
        d = gap_decide([5.0], [100], gains, self.POWER, self.NOISE, t_stc=20)
        assert d.frame_len == 20


class TestGreedyPrefix:
    def test_prefix_scores_example(self):
        # Mean block 50 with equal weights: every extension is worthwhile.
        weights = [10.0, 10.0, 10.0]
        scores = [(1 - i / 50.0) * sum(weights[:i]) for i in (1, 2, 3)]
        assert scores == pytest.approx([9.8, 19.2, 28.2])
        assert greedy_prefix_len(weights, 50.0) == 3

    def test_short_block_stops_early(self):
        assert greedy_prefix_len([10.0, 1.0], 5.0) == 1

    def test_matches_prefix_argmax_enumeration(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            size = int(rng.integers(1, 9))
            weights = sorted(rng.uniform(0, 100, size=size), reverse=True)
            tbar = float(rng.uniform(1.5, 150.0))
            scores = [(1 - i / tbar) * sum(weights[:i])
                      for i in range(1, size + 1)]
            best = int(np.argmax(scores)) + 1  # earliest index on ties
            assert greedy_prefix_len(weights, tbar) == best


class TestQqsDecide:
    def test_two_group_partition(self):
        # Short-block users land in the low bin, long-block in the high bin.
        d = qqs_decide([1.0, 1.0, 1.0, 50.0, 50.0], [100, 100, 100, 5, 5],
                       num_groups=2)
        assert d.scheduled == (3, 4)

    def test_long_group_wins_on_queue_mass(self):
        d = qqs_decide([40.0, 40.0, 40.0, 10.0, 10.0], [100, 100, 100, 5, 5],
                       num_groups=2)
        assert d.scheduled == (0, 1, 2)
        assert d.mode == MODE_SM
        assert d.frame_len == 100
        assert d.objective == pytest.approx((1 - 3 / 100.0) * 120.0)

    def test_singleton_beats_short_prefix(self):
        # Mean block 5, weights (10, 1): extension fails, then the bare
        # queue outranks the one-user prefix score (1 - 1/5) * 10 = 8.
        d = qqs_decide([10.0, 1.0], [5, 5], num_groups=1)
        assert d.mode == MODE_STC
        assert d.scheduled == (0,)
        assert d.objective == 10.0

    def test_all_zero_queues_idle(self):
        d = qqs_decide([0.0, 0.0], [10, 20], num_groups=2)
        assert d.mode == MODE_IDLE

    def test_empty_groups_are_skipped(self):
        # More groups than distinct coherence values.
        d = qqs_decide([5.0, 4.0], [100, 100], num_groups=10)
        assert set(d.scheduled) <= {0, 1}

    def test_matches_independent_reimplementation(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            n = int(rng.integers(1, 9))
            backlogs = list(rng.uniform(0, 60, size=n))
            coherence = [int(rng.integers(1, 80)) for _ in range(n)]
            groups = int(rng.integers(1, 5))
            theta = int(rng.choice([1, 3]))
            d = qqs_decide(backlogs, coherence, num_groups=groups, theta=theta)
            o = oracle_qqs(backlogs, coherence, groups, theta)
            assert (d.scheduled, d.mode) == (o[0], o[1])
            assert d.objective == pytest.approx(o[2], rel=1e-12, abs=1e-12)

    def test_power_law_amplifies_long_queue(self):
        # theta = 3 flips the group choice toward a single dominant queue.
        backlogs = [12.0, 11.0, 11.0, 20.0, 1.0]
        coherence = [100, 100, 100, 5, 5]
        plain = qqs_decide(backlogs, coherence, num_groups=2, theta=1)
        powered = qqs_decide(backlogs, coherence, num_groups=2, theta=3)
        assert plain.scheduled == (0, 1, 2)
        assert powered.scheduled == (3,)


def oracle_qqs(backlogs, coherence, num_groups, theta):
    """Straight re-reading of the heuristic: bins, sorted prefixes, best of
    prefix score vs single queue, then the best group."""
    weights = [q ** theta for q in backlogs]
    if all(w == 0 for w in weights):
        return (), MODE_IDLE, 0.0
    t_max = max(coherence)
    best = ((), MODE_IDLE, 0.0)
    for k in range(1, num_groups + 1):
        members = [i for i in range(len(backlogs))
                   if (k - 1) * t_max < coherence[i] * num_groups <= k * t_max]
        if not members:
            continue
        members.sort(key=lambda i: (-weights[i], i))
        tbar = sum(coherence[i] for i in members) / len(members)
        prefix_scores = [(1 - i / tbar) * sum(weights[j] for j in members[:i])
                         for i in range(1, len(members) + 1)]
        plen = int(np.argmax(prefix_scores)) + 1
        p_score = prefix_scores[plen - 1]
        s_score = max(weights[i] for i in members)
        if s_score >= p_score:
            cand = ((members[0],), MODE_STC, s_score)
        else:
            cand = (tuple(sorted(members[:plen])), MODE_SM, p_score)
        if cand[2] > best[2]:
            best = cand
    return best


class TestSchedulerDispatch:
    POWER, NOISE = 1.0, 0.0316

    def make(self, kind, coherence, **kw):
        return Scheduler(PolicyConfig(kind=kind, **kw), coherence,
                         self.POWER, self.NOISE)

    def test_tdma_round_robin(self):
        sched = self.make("tdma", [10, 20, 30])
        order = [sched.decide([1.0, 1.0, 1.0]).scheduled[0] for _ in range(6)]
        assert order == [0, 1, 2, 0, 1, 2]
        assert all(sched.decide([0.0, 0.0, 0.0]).mode == MODE_STC
                   for _ in range(2))

    def test_full_sm_schedules_everyone(self):
        sched = self.make("full_sm", [20] * 4)
        d = sched.decide([1.0] * 4)
        assert d.scheduled == (0, 1, 2, 3)
        assert d.mode == MODE_SM
        assert d.frame_len == 20

    def test_full_sm_overhead_swallows_frame(self):
        gains = sample_block(20, 30, np.random.default_rng(0)).gains
        beta = allocate_bits(tuple(range(20)), MODE_SM, 20, gains,
                             self.POWER, self.NOISE)
        assert beta == (0.0,) * 20

    def test_random_k_size(self):
        rng = np.random.default_rng(5)
        sched = self.make("random_k", [20] * 40, k_random=10)
        for _ in range(5):
            d = sched.decide([1.0] * 40, rng=rng)
            assert len(d.scheduled) == 10
            assert d.mode == MODE_SM

    def test_random_k_requires_rng(self):
        sched = self.make("random_k", [20] * 4, k_random=2)
        with pytest.raises(ParameterError):
            sched.decide([1.0] * 4)

    def test_periodic_reschedules_every_t_frames(self):
        rng = np.random.default_rng(9)
        sched = self.make("tdca", [50, 50, 5], reschedule_period=4)
        sets = []
        for k in range(8):
            gains = sample_block(3, 8, rng).gains
            sets.append(sched.decide([30.0, 20.0, 10.0], genie_gains=gains).scheduled)
        assert sets[0] == sets[1] == sets[2] == sets[3]
        assert sets[4] == sets[5] == sets[6] == sets[7]

    def test_periodic_keeps_drained_set(self):
        # The cache is deliberately lazy: emptying the queues mid-window
        # does not trigger a re-decision.
        rng = np.random.default_rng(10)
        sched = self.make("tdca", [50, 50], reschedule_period=3)
        first = sched.decide([10.0, 10.0],
                             genie_gains=sample_block(2, 4, rng).gains)
        second = sched.decide([0.0, 0.0],
                              genie_gains=sample_block(2, 4, rng).gains)
        assert second.scheduled == first.scheduled

    def test_genie_limit_at_construction(self):
        with pytest.raises(ConfigError, match="subset search limit"):
            self.make("gap", [10] * 20)

    def test_decision_invariants_on_random_policies(self):
        rng = np.random.default_rng(21)
        for kind in ("gap", "qqs", "tdma", "full_sm", "random_k", "tqqs"):
            coherence = [int(rng.integers(2, 60)) for _ in range(5)]
            sched = self.make(kind, coherence, k_random=3)
            for _ in range(10):
                backlogs = list(rng.uniform(0, 30, size=5))
                gains = sample_block(5, 8, rng).gains
                d = sched.decide(backlogs, genie_gains=gains, rng=rng)
                check_decision_invariants(d, coherence, None)


def check_decision_invariants(d: SchedulingDecision, coherence, t_stc):
    if d.mode == MODE_SM:
        assert len(d.scheduled) > 1
        assert d.frame_len == min(coherence[i] for i in d.scheduled)
    elif d.mode == MODE_STC:
        assert len(d.scheduled) == 1
        assert d.frame_len == stc_frame_len(coherence[d.scheduled[0]], t_stc)
    else:
        assert d.scheduled == ()
        assert d.frame_len == 1


class TestPolicyConfig:
    def test_theta_must_be_odd(self):
        with pytest.raises(ConfigError, match="theta"):
            PolicyConfig(kind="pldca", theta=2)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            PolicyConfig(kind="magic")

    def test_bad_period(self):
        with pytest.raises(ConfigError, match="period"):
            PolicyConfig(kind="tdca", reschedule_period=0)
