import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from navlite.core.errors import DegenerateWindow, TooFewPoints, UnknownTransition
from navlite.intention.dlm import (
    DLM,
    dlm_from_curvature,
    dlm_from_turn_angle,
    transition_intention,
    turn_angle,
)
from navlite.intention.geometry import (
    SignedCurvatureSample,
    point_segment_distance,
    rdp_indices,
    rdp_simplify,
    signed_curvature,
)
from navlite.intention.lpe import BLUE, GREEN, RED, render_lpe
from navlite.intention.plan import (
    IntentionScheduler,
    build_intention_plan,
    build_road_intentions,
    build_route_intentions,
    current_intention,
)
from navlite.mapsys.types import EdgeKind, ExitType, Pose2D
from navlite.planner.grid import GridPath
from navlite.planner.route import RoadPath, replan

points = st.tuples(
    st.floats(min_value=-50, max_value=50, allow_nan=False),
    st.floats(min_value=-50, max_value=50, allow_nan=False),
)


def _l_path() -> GridPath:
    cells = [(x, 0) for x in range(51)] + [(50, y) for y in range(1, 51)]
    return GridPath(floorplan_id="f", resolution=0.1, cells=cells, straight_moves=100)


def pose(x, y, frame="f", heading=0.0):
    return Pose2D(frame=frame, x=x, y=y, heading=heading)


class TestRDP:

    @settings(max_examples=200, deadline=None)
    @given(st.lists(points, min_size=2, max_size=30),
           st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    def test_hausdorff_within_epsilon(self, polyline, epsilon):
        simplified = rdp_simplify(polyline, epsilon)
        assert simplified[0] == tuple(polyline[0]) and simplified[-1] == tuple(polyline[-1])
        for p in polyline:
            d = min(point_segment_distance(p, a, b) for a, b in zip(simplified, simplified[1:]))
            assert d <= epsilon + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(st.lists(points, min_size=2, max_size=30),
           st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    def test_idempotent(self, polyline, epsilon):
        once = rdp_simplify(polyline, epsilon)
        assert rdp_simplify(once, epsilon) == once

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            rdp_indices([(0.0, 0.0)], 0.1)

    def test_collinear_collapses(self):
        line = [(float(i), 0.0) for i in range(10)]
        assert rdp_indices(line, 0.01) == [0, 9]


class TestCurvature:

    def _circle(self, radius, ccw=True):
        sign = 1.0 if ccw else -1.0
        return [(radius * math.cos(sign * t), radius * math.sin(sign * t))
                for t in np.linspace(0, math.pi, 40)]

    def test_circle_sign_and_magnitude(self):
        left = signed_curvature(self._circle(2.0), 20)
        right = signed_curvature(self._circle(2.0, ccw=False), 20)
        assert left.kappa == pytest.approx(0.5, rel=1e-9)
        assert right.kappa == pytest.approx(-0.5, rel=1e-9)

    def test_straight_is_zero(self):
        line = [(float(i), 2.0 * i) for i in range(10)]
        assert signed_curvature(line, 5).kappa == pytest.approx(0.0, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateWindow):
            signed_curvature([(0.0, 0.0), (1.0, 0.0)], 0)
        with pytest.raises(DegenerateWindow):
            signed_curvature([(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)], 1)

    def test_labels(self):
        assert dlm_from_curvature(SignedCurvatureSample(s=0, kappa=0.1), 0.25) == DLM.GO_FORWARD
        assert dlm_from_curvature(SignedCurvatureSample(s=0, kappa=0.5), 0.25) == DLM.TURN_LEFT
        assert dlm_from_curvature(SignedCurvatureSample(s=0, kappa=-0.5), 0.25) == DLM.TURN_RIGHT
        assert dlm_from_curvature(SignedCurvatureSample(s=0, kappa=9), 0.25, at_goal=True) \
            == DLM.STOP

    def test_turn_angle(self):
        assert turn_angle((0, 0), (1, 0), (1, 1)) == pytest.approx(math.pi / 2)
        assert dlm_from_turn_angle((0, 0), (1, 0), (1, -1), 30.0) == DLM.TURN_RIGHT
        assert dlm_from_turn_angle((0, 0), (1, 0), (2, 0.1), 30.0) == DLM.GO_FORWARD


class TestTransitions:

    @pytest.mark.parametrize("exit_type, expected", [
        (ExitType.STAIRS, DLM.UPSTAIRS),
        (ExitType.LINKWAY, DLM.LINKWAY),
        (ExitType.ELEVATOR, DLM.TAKE_ELEVATOR),
    ])
    def test_inter(self, exit_type, expected):
        assert transition_intention(EdgeKind.INTER, exit_type) == expected

    def test_outdoor_layer(self):
        assert transition_intention(EdgeKind.LAYER, ExitType.OUTDOOR) == DLM.GO_FORWARD

    def test_intra_is_not_a_transition(self):
        with pytest.raises(UnknownTransition):
            transition_intention(EdgeKind.INTRA, ExitType.STAIRS)
        with pytest.raises(UnknownTransition):
            transition_intention(EdgeKind.INTER, ExitType.INDOOR)


class TestIntentionPlan:

    def test_l_corner(self):
        plan = build_intention_plan(_l_path(), rdp_epsilon=0.2)
        assert plan.dlms == [DLM.GO_FORWARD, DLM.TURN_LEFT, DLM.STOP]
        assert [p.xy for p in plan.points] == [(0.0, 0.0), (5.0, 0.0), (5.0, 5.0)]
        assert [p.radius for p in plan.points] == pytest.approx([2.5, 2.5, 2.5])
        assert plan.midpoints == [(2.5, 0.0), (5.0, 2.5)]

    def test_mirror_swaps_turns(self):
        path = _l_path()
        mirrored = path.model_copy(update={"cells": [(x, 50 - y) for x, y in path.cells]})
        plan = build_intention_plan(mirrored, rdp_epsilon=0.2)
        assert plan.dlms == [DLM.GO_FORWARD, DLM.TURN_RIGHT, DLM.STOP]
        assert [p.xy for p in plan.points] == [(0.0, 5.0), (5.0, 5.0), (5.0, 0.0)]

    def test_translation(self):
        path = _l_path()
        shifted = path.model_copy(update={"cells": [(x + 7, y + 3) for x, y in path.cells]})
        base = build_intention_plan(path, rdp_epsilon=0.2)
        plan = build_intention_plan(shifted, rdp_epsilon=0.2)
        assert plan.dlms == base.dlms
        for p, q in zip(plan.points, base.points):
            assert (p.x, p.y) == pytest.approx((q.x + 0.7, q.y + 0.3))
            assert p.radius == pytest.approx(q.radius)

    def test_scale(self):
        path = _l_path()
        coarse = path.model_copy(update={"resolution": 0.2})
        base = build_intention_plan(path, rdp_epsilon=0.2, min_radius=100.0)
        plan = build_intention_plan(coarse, rdp_epsilon=0.4, min_radius=100.0)
        assert plan.dlms == base.dlms
        for p, q in zip(plan.points, base.points):
            assert (p.x, p.y) == pytest.approx((2 * q.x, 2 * q.y))
            assert p.radius == pytest.approx(2 * q.radius)

    def test_radius_capped_by_minimum(self):
        plan = build_intention_plan(_l_path(), rdp_epsilon=0.2, min_radius=1.0)
        assert all(p.radius == 1.0 for p in plan.points)

    def test_single_cell(self):
        path = GridPath(floorplan_id="f", resolution=0.1, cells=[(3, 4)])
        plan = build_intention_plan(path)
        assert plan.dlms == [DLM.STOP]

    def test_current_intention(self):
        plan = build_intention_plan(_l_path(), rdp_epsilon=0.2)
        assert current_intention(pose(0.5, 0.0), plan) == DLM.GO_FORWARD
        assert current_intention(pose(4.5, 0.0), plan) == DLM.TURN_LEFT
        assert current_intention(pose(4.5, 0.0, frame="other"), plan) == DLM.GO_FORWARD

    def test_scheduler_is_monotonic(self):
        scheduler = IntentionScheduler(build_intention_plan(_l_path(), rdp_epsilon=0.2),
                                       consume_start=True)
        assert scheduler.update(pose(1.0, 0.0)) == DLM.GO_FORWARD
        assert scheduler.update(pose(4.0, 0.0)) == DLM.TURN_LEFT
        assert scheduler.update(pose(5.0, 3.0)) == DLM.STOP
        assert scheduler.update(pose(4.0, 0.0)) == DLM.GO_FORWARD
        assert scheduler.consumed == 3

    def test_route_gets_transition_intention(self, two_floors):
        route = replan(two_floors, Pose2D(frame="f1", x=2.0, y=1.5), "f2_office")
        plan = build_route_intentions(route)
        assert DLM.UPSTAIRS in plan.dlms
        assert plan.dlms[-1] == DLM.STOP
        upstairs = plan.points[plan.dlms.index(DLM.UPSTAIRS)]
        assert upstairs.frame == "f1"
        assert upstairs.xy == pytest.approx(two_floors.exits["f1_stairs"].metric_position)

    def test_road_turns(self):
        road = RoadPath(node_ids=["a", "b"], polyline=[(0, 0), (50, 0), (50, -50)])
        plan = build_road_intentions(road)
        assert plan.dlms == [DLM.GO_FORWARD, DLM.TURN_RIGHT, DLM.STOP]

    def test_json(self):
        text = build_intention_plan(_l_path(), rdp_epsilon=0.2).to_json()
        assert '"TurnLeft"' in text


class TestLPE:

    def test_layers(self, open_grid):
        here = pose(1.0, 1.0, frame="room")
        image = render_lpe(open_grid, history=[(0.2, 1.0), (0.6, 1.0)],
                           future=[(1.4, 1.0), (1.8, 1.0)], pose=here, window_m=4.0, side=64)
        px = image.pixels
        c = image.side // 2
        assert px.shape == (64, 64, 3) and px.dtype == np.uint8
        assert px[c, c, RED] == 255 and px[c, c, BLUE] == 255
        # heading 0: futuro para cima, historico para baixo
        assert np.argwhere(px[..., BLUE] > 0)[:, 0].min() < c - 2
        assert np.argwhere(px[..., RED] > 0)[:, 0].max() > c + 2
        assert px[c, c, GREEN] == 255
        assert px[0, 0, GREEN] == 0

    def test_heading_rotates_view(self, open_grid):
        north = pose(1.0, 1.0, frame="room", heading=math.pi / 2)
        image = render_lpe(open_grid, history=[], future=[(1.0, 1.8)], pose=north,
                           window_m=4.0, side=64)
        rows, cols = np.nonzero(image.pixels[..., BLUE])
        assert rows.min() < 32 - 2
        assert np.all(np.abs(cols - 32) <= 2)

    def test_save_png(self, tmp_path, open_grid):
        image = render_lpe(open_grid, [], [], pose(1.0, 1.0, frame="room"), side=32)
        image.save_png(tmp_path / "lpe.png")
        assert (tmp_path / "lpe.png").exists()
