import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from navlite.core.errors import GoalOccupied, NoPath, StartOccupied, UnknownId, Unreachable
from navlite.mapsys.graph import MapBuilder, topo_graph, with_edge_weight
from navlite.mapsys.roads import polyline_length
from navlite.mapsys.types import (
    ROAD_FRAME,
    EdgeKind,
    ExitType,
    FloorplanGrid,
    MapBundle,
    Pose2D,
    RoadNetwork,
    RoadNode,
    RoadWay,
)
from navlite.planner.grid import (
    GridPath,
    dijkstra_grid,
    inflate,
    inflation_cells,
    nearest_free,
    plan_grid,
)
from navlite.planner.route import HorizonPolicy, RoadPath, Transition, replan, stitch
from navlite.planner.topo import plan_topological, pose_cell
from navlite.sim.fixtures import carve

from .conftest import make_exit


def _random_grid(rng: np.random.Generator) -> FloorplanGrid:
    w, h = int(rng.integers(2, 21)), int(rng.integers(2, 21))
    cells = rng.random((h, w)) < float(rng.uniform(0.0, 0.4))
    return FloorplanGrid(id="r", resolution=0.1, cells=cells)


class TestGridSearch:

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_astar_matches_dijkstra(self, seed):
        rng = np.random.default_rng(seed)
        grid = _random_grid(rng)
        free = np.argwhere(~grid.cells)
        if len(free) < 2:
            return
        (sy, sx), (gy, gx) = free[rng.choice(len(free), size=2, replace=False)]
        start, goal = (int(sx), int(sy)), (int(gx), int(gy))
        try:
            oracle = dijkstra_grid(grid, start, goal, inflation=0)
        except NoPath:
            with pytest.raises(NoPath):
                plan_grid(grid, start, goal, inflation=0)
            return
        path = plan_grid(grid, start, goal, inflation=0)
        assert path.cost == oracle.cost
        assert path.cells[0] == start and path.cells[-1] == goal

    def test_straight_corridor(self):
        grid = carve("c", (2.0, 0.5), [(0.0, 0.1, 2.0, 0.4)])
        path = plan_grid(grid, (0, 2), (19, 2), inflation=0)
        assert path.straight_moves == 19 and path.diagonal_moves == 0
        assert path.cost == pytest.approx(1.9)

    def test_no_corner_cutting(self):
        cells = np.array([[False, True], [True, False]])
        grid = FloorplanGrid(id="g", resolution=1.0, cells=cells)
        with pytest.raises(NoPath):
            plan_grid(grid, (0, 0), (1, 1), inflation=0)

    def test_occupied_endpoints(self, open_grid):
        with pytest.raises(StartOccupied):
            plan_grid(open_grid, (0, 0), (10, 10))
        with pytest.raises(GoalOccupied):
            plan_grid(open_grid, (10, 10), (0, 0))

    def test_inflation_keeps_endpoints(self, open_grid):
        path = plan_grid(open_grid, (1, 10), (18, 10), inflation=1)
        assert path.cells[0] == (1, 10) and path.cells[-1] == (18, 10)

    def test_inflate_disk(self):
        cells = np.zeros((7, 7), dtype=bool)
        cells[3, 3] = True
        assert int(inflate(cells, 1).sum()) == 5
        assert int(inflate(cells, 0).sum()) == 1

    def test_nearest_free(self):
        blocked = np.ones((5, 5), dtype=bool)
        blocked[4, 1] = False
        assert nearest_free(blocked, (0, 0)) == (1, 4)
        with pytest.raises(NoPath):
            nearest_free(np.ones((2, 2), dtype=bool), (0, 0))

    def test_inflation_cells(self, open_grid):
        assert inflation_cells(open_grid, 0.5) == 5
        assert inflation_cells(open_grid, 0.0) == 0

    def test_extend_shares_junction(self):
        a = GridPath(floorplan_id="f", resolution=1.0, cells=[(0, 0), (1, 0)], straight_moves=1)
        b = GridPath(floorplan_id="f", resolution=1.0, cells=[(1, 0), (2, 1)], diagonal_moves=1)
        joined = a.extend(b)
        assert joined.cells == [(0, 0), (1, 0), (2, 1)]
        assert joined.cost == pytest.approx(1 + math.sqrt(2))


def _random_bundle(rng: np.random.Generator):
    builder = MapBuilder()
    floors = [f"f{i}" for i in range(int(rng.integers(1, 4)))]
    for f in floors:
        builder.add_floorplan(carve(f, (5.0, 5.0), [(0.1, 0.1, 4.9, 4.9)]))
    ids = []
    for i in range(int(rng.integers(2, 9))):
        f = floors[int(rng.integers(len(floors)))]
        pos = (float(rng.integers(2, 48)), float(rng.integers(2, 48)))
        builder.add_exit(make_exit(f"e{i}", f, pos))
        ids.append((f"e{i}", f))
    for _ in range(int(rng.integers(0, 5))):
        (a, fa), (b, fb) = (ids[int(k)] for k in rng.choice(len(ids), size=2, replace=False))
        if fa != fb:
            builder.connect(a, b, weight=float(rng.uniform(0, 5)))
    bundle = builder.build()
    for edge in bundle.edges:
        if edge.kind.value == "intra" and rng.random() < 0.5:
            bundle = bundle.model_copy(update={"edges": [
                e.model_copy(update={"weight": e.weight * float(rng.uniform(1, 3))})
                if e is edge else e for e in bundle.edges
            ]})
    return bundle, [i for i, _ in ids]


def _campus(ways=None) -> MapBundle:
    """Uma planta com portao externo ligado a uma rua de ~111 m"""
    nodes = {"n0": RoadNode(id="n0", lat=1.3, lon=103.0),
             "n1": RoadNode(id="n1", lat=1.3, lon=103.001)}
    ways = ways or [RoadWay(id="w0", street_id="main", node_ids=["n0", "n1"])]
    floor = carve("f1", (6.0, 3.0), [(0.5, 0.5, 5.5, 2.5)])
    return (
        MapBuilder()
        .add_floorplan(floor)
        .add_exit(make_exit("f1_door", "f1", (10, 15)))
        .add_exit(make_exit("f1_gate", "f1", (50, 15), ExitType.OUTDOOR, gps=(1.3, 103.0)))
        .set_roads(RoadNetwork(nodes=nodes, ways=ways, pruned=True))
        .build()
    )


class TestTopological:

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        bundle, ids = _random_bundle(rng)
        a, b = (ids[int(k)] for k in rng.choice(len(ids), size=2, replace=False))
        graph = topo_graph(bundle)
        weights = [
            sum(graph[u][v]["weight"] for u, v in zip(p, p[1:]))
            for p in nx.all_simple_paths(graph, a, b)
        ]
        if not weights:
            with pytest.raises(Unreachable):
                plan_topological(bundle, a, b)
            return
        path = plan_topological(bundle, a, b)
        assert path.weight == pytest.approx(min(weights), rel=1e-12, abs=1e-12)
        assert path.nodes[0] == a and path.nodes[-1] == b

    def test_same_exit(self, two_floors):
        path = plan_topological(two_floors, "f1_door", "f1_door")
        assert path.nodes == ["f1_door"] and path.weight == 0.0

    def test_unknown_id(self, two_floors):
        with pytest.raises(UnknownId):
            plan_topological(two_floors, "f1_door", "nowhere")
        with pytest.raises(UnknownId):
            plan_topological(two_floors, Pose2D(frame="f9", x=1, y=1), "f1_door")

    def test_unreachable_without_connection(self, two_floors):
        cut = two_floors.model_copy(update={
            "edges": [e for e in two_floors.edges if e.kind.value != "inter"],
        })
        with pytest.raises(Unreachable):
            plan_topological(cut, "f1_door", "f2_office")

    def test_pose_attaches_to_exits(self, two_floors):
        start = Pose2D(frame="f1", x=2.0, y=1.5)
        path = plan_topological(two_floors, start, "f2_office")
        assert path.exits[-3:] == ["f1_stairs", "f2_stairs", "f2_office"]

    def test_pose_cell_snaps_to_free(self, two_floors):
        cell = pose_cell(two_floors, Pose2D(frame="f1", x=0.0, y=0.0))
        assert two_floors.floorplans["f1"].is_free(cell)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_measured_weight_bounds_other_costs(self, seed):
        rng = np.random.default_rng(seed)
        bundle, ids = _random_bundle(rng)
        intra = [e for e in bundle.edges if e.kind == EdgeKind.INTRA]
        if not intra:
            return
        edge = intra[int(rng.integers(len(intra)))]
        measured = edge.min_weight * float(rng.uniform(1, 3))
        updated = with_edge_weight(bundle, edge.a, edge.b, measured)
        delta = max(measured - edge.weight, 0.0)
        before = dict(nx.all_pairs_dijkstra_path_length(topo_graph(bundle)))
        after = dict(nx.all_pairs_dijkstra_path_length(topo_graph(updated)))
        for a in ids:
            for b, cost in before[a].items():
                assert after[a][b] <= cost + delta + 1e-9

    def test_road_pose_snaps_to_nearest_node(self):
        bundle = _campus()
        path = plan_topological(bundle, Pose2D(frame=ROAD_FRAME, x=105.0, y=2.0), "f1_door")
        assert path.nodes[0] == "n1"
        assert path.nodes[-3:] == ["n0", "f1_gate", "f1_door"]

    def test_road_pose_without_roads(self, two_floors):
        with pytest.raises(UnknownId):
            plan_topological(two_floors, Pose2D(frame=ROAD_FRAME, x=0.0, y=0.0), "f1_door")


class TestStitch:

    def test_segments_and_transitions(self, two_floors):
        start = Pose2D(frame="f1", x=2.0, y=1.5)
        goal = Pose2D(frame="f2", x=1.0, y=1.5)
        route = stitch(two_floors, plan_topological(two_floors, start, goal))
        kinds = [item.type for item in route.items]
        assert kinds == ["grid", "transition", "grid"]
        first, transition, last = route.items
        assert first.floorplan_id == "f1" and last.floorplan_id == "f2"
        assert (transition.from_id, transition.to_id) == ("f1_stairs", "f2_stairs")
        assert first.cells[0] == (20, 15)
        assert last.cells[-1] == (10, 15)
        for seg in route.grid_segments:
            for a, b in zip(seg.cells, seg.cells[1:]):
                assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1

    def test_same_floor_is_one_segment(self, two_floors):
        start = Pose2D(frame="f1", x=1.0, y=1.5)
        goal = Pose2D(frame="f1", x=5.0, y=1.5)
        route = stitch(two_floors, plan_topological(two_floors, start, goal))
        assert [item.type for item in route.items] == ["grid"]
        assert route.weight == pytest.approx(4.0)

    def test_no_path_names_segment(self):
        grid = carve("f", (4.0, 1.0), [(0.1, 0.1, 1.5, 0.9), (2.5, 0.1, 3.9, 0.9)])
        bundle = MapBuilder().add_floorplan(grid).add_exit(make_exit("a", "f", (5, 5))).add_exit(
            make_exit("b", "f", (30, 5))).build()
        topo = plan_topological(bundle, "a", "b")
        with pytest.raises(NoPath) as info:
            stitch(bundle, topo)
        assert info.value.segment == "a->b"

    def test_current_map_horizon(self, two_floors):
        start = Pose2D(frame="f1", x=2.0, y=1.5)
        full = replan(two_floors, start, "f2_office")
        local = replan(two_floors, start, "f2_office", HorizonPolicy.CURRENT_MAP)
        assert len(full.items) == 3
        assert len(local.items) == 2 and isinstance(local.items[-1], Transition)

    def test_route_json(self, two_floors):
        route = replan(two_floors, Pose2D(frame="f1", x=2.0, y=1.5), "f2_office")
        text = route.to_json()
        assert '"transition"' in text and "f2_stairs" in text

    def test_shortest_parallel_way(self):
        long_shape = [(1.3, 103.0), (1.301, 103.0005), (1.3, 103.001)]
        short_shape = [(1.3, 103.0), (1.3, 103.001)]
        bundle = _campus(ways=[
            RoadWay(id="detour", street_id="a", node_ids=["n0", "n1"], shape=long_shape),
            RoadWay(id="main", street_id="b", node_ids=["n0", "n1"], shape=short_shape),
        ])
        route = stitch(bundle, plan_topological(bundle, "n0", "n1"))
        (road,) = route.items
        assert isinstance(road, RoadPath)
        assert len(road.polyline) == 2
        assert route.weight == pytest.approx(polyline_length(short_shape))


class TestReplan:

    def test_same_pose_same_plan(self, two_floors):
        pose = Pose2D(frame="f1", x=2.0, y=1.5)
        first = replan(two_floors, pose, "f2_office")
        assert replan(two_floors, pose, "f2_office").model_dump() == first.model_dump()

    def test_advance_keeps_suffix(self, two_floors):
        before = replan(two_floors, Pose2D(frame="f1", x=2.0, y=1.5), "f2_office")
        cells = before.first_segment().cells
        grid = two_floors.floorplans["f1"]
        x, y = grid.cell_to_metric(cells[8])
        after = replan(two_floors, Pose2D(frame="f1", x=x, y=y), "f2_office")
        rest = cells[8:]
        for cell in after.first_segment().cells:
            assert min(max(abs(cell[0] - c[0]), abs(cell[1] - c[1])) for c in rest) <= 1
        assert after.items[1:] == before.items[1:]

    def test_off_path_rejoins_goal(self, two_floors):
        route = replan(two_floors, Pose2D(frame="f1", x=3.3, y=2.3, heading=2.0), "f2_office")
        assert route.exits[-1] == "f2_office"
        assert route.grid_segments[-1].cells[-1] == (10, 15)

    def test_road_pose(self):
        bundle = _campus()
        route = replan(bundle, Pose2D(frame=ROAD_FRAME, x=105.0, y=2.0), "f1_door")
        road, transition, grid = route.items
        assert isinstance(road, RoadPath) and road.node_ids == ["n1", "n0"]
        assert transition.kind == EdgeKind.LAYER and transition.to_id == "f1_gate"
        assert grid.floorplan_id == "f1" and grid.cells[-1] == (10, 15)
