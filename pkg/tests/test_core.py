import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netdual import (
    ActionBox,
    AgentState,
    BlockMap,
    ConfigError,
    extract_network_action,
)
from netdual.core import block_embed


class TestActionBox:
    def test_uniform_builds_constant_bounds(self):
        box = ActionBox.uniform(-2.0, 3.0, 4)
        assert box.p == 4
        assert np.array_equal(box.lo, [-2, -2, -2, -2])
        assert np.array_equal(box.hi, [3, 3, 3, 3])

    def test_clamp(self):
        box = ActionBox(lo=np.array([-1.0, 0.0]), hi=np.array([1.0, 2.0]))
        assert np.array_equal(box.clamp(np.array([5.0, -3.0])), [1.0, 0.0])
        assert np.array_equal(box.clamp(np.array([0.5, 1.5])), [0.5, 1.5])

    def test_contains(self):
        box = ActionBox.uniform(-1.0, 1.0, 2)
        assert box.contains(np.array([1.0, -1.0]))
        assert not box.contains(np.array([1.0001, 0.0]))
        assert box.contains(np.array([1.0001, 0.0]), tol=1e-3)

    def test_diameter_is_max_width(self):
        box = ActionBox(lo=np.array([-1.0, 0.0]), hi=np.array([2.0, 0.5]))
        assert box.diameter == 3.0

    def test_radius_is_farthest_corner_norm(self):
        box = ActionBox(lo=np.array([-1.0, -2.0]), hi=np.array([2.0, 1.0]))
        # farthest corner is (2, -2)
        assert box.radius == pytest.approx(np.sqrt(8.0))

    def test_degenerate_interval_allowed(self):
        box = ActionBox(lo=np.array([1.0]), hi=np.array([1.0]))
        assert box.diameter == 0.0
        assert np.array_equal(box.clamp(np.array([0.0])), [1.0])

    def test_rejects_inverted_bounds(self):
        with pytest.raises(ConfigError):
            ActionBox(lo=np.array([1.0]), hi=np.array([0.0]))

    def test_rejects_infinite_bounds(self):
        with pytest.raises(ConfigError):
            ActionBox(lo=np.array([-np.inf]), hi=np.array([0.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ConfigError):
            ActionBox(lo=np.array([0.0, 0.0]), hi=np.array([1.0]))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=6))
    def test_clamp_is_idempotent_and_feasible(self, values):
        box = ActionBox.uniform(-3.0, 5.0, len(values))
        y = box.clamp(np.array(values))
        assert box.contains(y)
        assert np.array_equal(box.clamp(y), y)


class TestBlockMap:
    def test_scalar_map(self):
        bm = BlockMap.scalar(3)
        assert bm.n == 3
        assert bm.p == 3
        assert bm.blocks == ((0,), (1,), (2,))
        assert np.array_equal(bm.owner, [0, 1, 2])

    def test_multi_coordinate_blocks(self):
        bm = BlockMap(blocks=((0, 2), (1, 3, 4)))
        assert bm.n == 2
        assert bm.p == 5
        assert np.array_equal(bm.owner, [0, 1, 0, 1, 1])

    def test_rejects_empty_block(self):
        with pytest.raises(ConfigError):
            BlockMap(blocks=((0,), ()))

    def test_rejects_gap(self):
        with pytest.raises(ConfigError):
            BlockMap(blocks=((0,), (2,)))

    def test_rejects_overlap(self):
        with pytest.raises(ConfigError):
            BlockMap(blocks=((0, 1), (1, 2)))


class TestNetworkActionAssembly:
    def test_takes_owned_coordinates(self):
        bm = BlockMap(blocks=((0, 2), (1,)))
        states = [
            AgentState(z=np.zeros(3), x=np.array([1.0, 9.0, 3.0])),
            AgentState(z=np.zeros(3), x=np.array([8.0, 2.0, 8.0])),
        ]
        act = extract_network_action(states, bm, t=7)
        assert np.array_equal(act.x, [1.0, 2.0, 3.0])
        assert act.round == 7

    def test_rejects_state_count_mismatch(self):
        bm = BlockMap.scalar(2)
        states = [AgentState(z=np.zeros(2), x=np.zeros(2))]
        with pytest.raises(ConfigError):
            extract_network_action(states, bm, t=1)

    def test_default_weight_is_one(self):
        s = AgentState(z=np.zeros(1), x=np.zeros(1))
        assert s.w == 1.0


class TestBlockEmbed:
    def test_places_block_values(self):
        bm = BlockMap(blocks=((0, 2), (1,)))
        v = block_embed(0, np.array([5.0, 6.0]), bm, p=3)
        assert np.array_equal(v, [5.0, 0.0, 6.0])

    def test_rejects_wrong_block_size(self):
        bm = BlockMap.scalar(2)
        with pytest.raises(ConfigError):
            block_embed(0, np.array([1.0, 2.0]), bm, p=2)
