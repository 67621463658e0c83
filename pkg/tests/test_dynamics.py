import numpy as np
import pytest

from spikering import dynamics as dyn
from spikering import influence as inf
from spikering.dynamics import PhaseConfiguration, RunLimits
from spikering.errors import InternalInvariantError, UsageError


def cfg(*phases):
    return PhaseConfiguration.from_phases(phases)


class TestConfiguration:
    def test_groups_equal_phases(self):
        c = cfg(0.1, 0.5, 0.1 + 1e-12, 0.9)
        assert c.sizes == (2, 1, 1)
        assert c.clusters[0].members == (0, 2)

    def test_gaps_wrap(self):
        np.testing.assert_allclose(cfg(0.0, 0.25, 0.75).gaps(), [0.25, 0.5, 0.25])

    @pytest.mark.parametrize("bad", [[], [1.0], [-0.1, 0.2]])
    def test_rejects_bad_phases(self, bad):
        with pytest.raises(UsageError):
            PhaseConfiguration.from_phases(bad)


class TestDrift:
    def test_two(self):
        moved, dt = dyn.advance_to_next_firing(cfg(0.2, 0.7))
        assert dt == pytest.approx(0.3)
        np.testing.assert_allclose(moved.phases, [0.5, 1.0])

    def test_single_at_zero(self):
        moved, dt = dyn.advance_to_next_firing(cfg(0.0))
        assert dt == 1.0 and moved.phases[0] == 1.0

    def test_three(self):
        moved, dt = dyn.advance_to_next_firing(cfg(0.1, 0.4, 0.9))
        assert dt == pytest.approx(0.1)
        np.testing.assert_allclose(moved.phases, [0.2, 0.5, 1.0])
        assert moved.time == pytest.approx(0.1)


class TestAvalanche:
    def test_trapezoid_cascade(self):
        pre = PhaseConfiguration((dyn.Cluster((0,), 0.5), dyn.Cluster((1,), 0.85), dyn.Cluster((2,), 1.0)), 3)
        post, rec = dyn.fire_avalanche(pre, inf.trapezoid(0.3))
        assert post.k == 1 and post.clusters[0] == dyn.Cluster((0, 1, 2), 0.0)
        assert rec.cascade_depth == 3
        assert rec.fired_members == (0, 1, 2)

    def test_affine_receiver(self):
        pre = PhaseConfiguration((dyn.Cluster((0,), 0.4), dyn.Cluster((1,), 1.0)), 2)
        post, rec = dyn.fire_avalanche(pre, inf.affine_decay(0.5))
        assert post.clusters[0] == dyn.Cluster((1,), 0.0)
        assert post.clusters[1].x == pytest.approx(0.7)
        assert rec.cascade_depth == 1 and rec.merge_events == ()

    def test_lone_neuron(self):
        pre = PhaseConfiguration((dyn.Cluster((0,), 1.0),), 1)
        post, rec = dyn.fire_avalanche(pre, inf.trapezoid(0.3))
        assert post.phases.tolist() == [0.0] and rec.cascade_depth == 1

    def test_requires_cluster_at_one(self):
        with pytest.raises(UsageError):
            dyn.fire_avalanche(cfg(0.2, 0.5), inf.trapezoid(0.2))

    def test_cluster_applies_w_once_per_member(self):
        # a 3-member cluster pushes a receiver by 3h
        pre = PhaseConfiguration((dyn.Cluster((3,), 0.1), dyn.Cluster((0, 1, 2), 1.0)), 4)
        post, _ = dyn.fire_avalanche(pre, inf.trapezoid(0.1))
        assert post.clusters[1].x == pytest.approx(0.4)

    def test_overtaking_detected(self):
        bad = inf.quadratic_decay(0.9, -0.5)  # W decreasing near 0
        pre = PhaseConfiguration((dyn.Cluster((0,), 0.01), dyn.Cluster((1,), 0.1), dyn.Cluster((2,), 1.0)), 3)
        with pytest.raises(InternalInvariantError):
            dyn.fire_avalanche(pre, bad)

    def test_receivers_landing_together_merge(self):
        pre = PhaseConfiguration((dyn.Cluster((0,), 0.75), dyn.Cluster((1,), 0.8), dyn.Cluster((2,), 1.0)), 3)
        post, rec = dyn.fire_avalanche(pre, inf.trapezoid(0.3))
        # both receivers sit above 1 - h and jump to 1, then fire
        assert post.k == 1 and rec.cascade_depth == 2


class TestStep:
    def test_large_h_merges(self):
        post, _ = dyn.step(cfg(0.0, 0.5), inf.trapezoid(0.6))
        assert post.k == 1

    def test_rigid_rotation(self):
        spec = inf.heterogeneous_linear([1.0, 1.0])
        post, _ = dyn.step(cfg(0.2, 0.5), spec)
        assert post.clusters[0].members == (1,)
        assert post.clusters[1].x == pytest.approx(0.7)

    def test_rotation_preserves_gaps(self):
        rng = np.random.default_rng(3)
        spec = inf.heterogeneous_linear([1.0] * 6)
        state = cfg(*rng.random(6))
        gaps = sorted(state.gaps())
        for i in range(12):
            state, _ = dyn.step(state, spec, event_index=i)
            np.testing.assert_allclose(sorted(state.gaps()), gaps, atol=1e-12)


class TestRun:
    def test_large_nh_single_cluster(self):
        rng = np.random.default_rng(4)
        traj = dyn.run(cfg(*rng.random(4)), inf.trapezoid(0.55))
        assert traj.termination == "single_cluster"

    def test_equal_spacing_is_stationary(self):
        traj = dyn.run(PhaseConfiguration.equally_spaced(4), inf.trapezoid(0.2))
        assert traj.termination == "stationary"
        assert traj.final.sizes == (1, 1, 1, 1)
        assert len(traj.events) == 4

    def test_single_neuron(self):
        traj = dyn.run(cfg(0.3), inf.trapezoid(0.2))
        assert traj.termination == "stationary" and len(traj.events) == 1

    def test_max_events_is_normal_termination(self):
        traj = dyn.run(cfg(0.1, 0.45, 0.8), inf.linear_v(0.9), RunLimits(max_events=5, stop_on_stationary=False))
        assert traj.termination == "max_events" and len(traj.events) == 5

    def test_event_times_increase(self):
        traj = dyn.run(cfg(0.1, 0.45, 0.8), inf.affine_decay(0.2), RunLimits(max_events=30))
        t = [e.time for e in traj.events]
        assert all(b > a for a, b in zip(t, t[1:]))


class TestStationarity:
    def test_equal_singletons(self):
        spec = inf.trapezoid(0.2)
        states = [PhaseConfiguration.equally_spaced(4)]
        for i in range(4):
            states.append(dyn.step(states[-1], spec, event_index=i)[0])
        chk = dyn.is_stationary(states)
        assert chk.stationary and chk.k == 4

    def test_unequal_clusters_not_stationary(self):
        spec = inf.trapezoid(0.05)
        states = [cfg(0.0, 0.5, 0.5, 0.5)]
        for i in range(2):
            states.append(dyn.step(states[-1], spec, event_index=i)[0])
        assert not dyn.is_stationary(states).stationary

    def test_single_cluster(self):
        one = cfg(0.0, 0.0)
        two = dyn.step(one, inf.trapezoid(0.2))[0]
        assert dyn.is_stationary([one, two]).stationary

    def test_short_window(self):
        assert not dyn.is_stationary([cfg(0.0, 0.5)]).stationary


class TestMaps:
    def test_tilde_fixed_point(self):
        y = np.array([1 / 7, 3 / 7, 1.0])
        np.testing.assert_allclose(dyn.tilde_map(y, inf.linear_v(0.5)), y, atol=1e-15)

    def test_tilde_identity_rotates(self):
        out = dyn.tilde_map([0.2, 0.5, 1.0], inf.linear_v(1.0))
        np.testing.assert_allclose(out, [0.3, 0.8, 1.0])

    def test_tilde_square(self):
        np.testing.assert_allclose(dyn.tilde_map([0.5, 1.0], inf.quadratic_decay(0.0, 1.0)), [0.25, 1.0])

    def test_hat(self):
        spec = inf.linear_v(0.5)
        np.testing.assert_allclose(dyn.hat_map([2 / 7, 6 / 7, 1.0], spec), [2 / 7, 6 / 7, 1.0], atol=1e-15)
        np.testing.assert_allclose(dyn.hat_map([0.4, 0.8, 1.0], spec), [0.2, 0.8, 1.0])

    def test_hat_equals_tilde_for_identity(self):
        y = [0.1, 0.35, 0.9, 1.0]
        spec = inf.linear_v(1.0)
        np.testing.assert_allclose(dyn.hat_map(y, spec), dyn.tilde_map(y, spec))

    @pytest.mark.parametrize("bad", [[0.5, 0.3, 1.0], [0.2, 0.2, 1.0], [0.2, 0.5, 0.9]])
    def test_rejects_unordered(self, bad):
        with pytest.raises(UsageError):
            dyn.tilde_map(bad, inf.linear_v(0.5))

    def test_gaps(self):
        np.testing.assert_allclose(dyn.to_gaps([1 / 7, 3 / 7]), [1 / 7, 2 / 7, 4 / 7])
        np.testing.assert_allclose(dyn.from_gaps(np.full(4, 0.25)), [0.25, 0.5, 0.75])
        with pytest.raises(UsageError):
            dyn.from_gaps([0.5, 0.6])

    def test_gap_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            y = np.sort(rng.random(int(rng.integers(1, 10))))
            np.testing.assert_allclose(dyn.from_gaps(dyn.to_gaps(y)), y, atol=1e-15)

    def test_engine_matches_tilde_map(self):
        spec = inf.affine_decay(0.3)
        state, _ = dyn.step(cfg(0.05, 0.3, 0.62, 0.81), spec)
        for i in range(1, 20):
            y_prev = state.y_vector()
            state, rec = dyn.step(state, spec, event_index=i)
            assert rec.cascade_depth == 1
            np.testing.assert_allclose(state.y_vector(), dyn.tilde_map(y_prev, spec), atol=1e-12)
