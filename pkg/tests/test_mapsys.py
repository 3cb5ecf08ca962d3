import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from PIL import Image

from navlite.core.errors import (
    BundleValidationError,
    DanglingWayReference,
    EmptyImage,
    FrameMismatch,
    ImplausibleMeasurement,
    InvalidResolution,
    MixedFloorplans,
    ParseError,
)
from navlite.mapsys.floorplan import binarize_floorplan, load_raster, save_raster
from navlite.mapsys.graph import (
    MapBuilder,
    complete_intra_edges,
    exit_reached,
    update_edge_weight,
    with_edge_weight,
)
from navlite.mapsys.manifest import build_from_manifest, load_manifest
from navlite.mapsys.roads import prune_road_network, total_length
from navlite.mapsys.storage import decode_cells, encode_cells, load_bundle, save_bundle
from navlite.mapsys.types import EdgeKind, ExitType, Pose2D, RoadNetwork, RoadNode, RoadWay
from navlite.mapsys.validate import validate_bundle

from .conftest import make_exit


class TestFloorplan:

    def test_luminance_threshold(self):
        pixels = np.array([[255, 0], [200, 10]], dtype=np.uint8)
        grid = binarize_floorplan(pixels, resolution=0.1)
        assert grid.cells.tolist() == [[False, True], [False, True]]
        assert grid.width == 2 and grid.height == 2

    def test_custom_rule(self):
        pixels = np.zeros((3, 4, 3), dtype=np.uint8)
        pixels[1, 2] = (255, 0, 0)
        grid = binarize_floorplan(pixels, free_rule=lambda p: p[..., 0] > 128, resolution=0.5)
        assert grid.is_free((2, 1))
        assert int(grid.cells.sum()) == 11

    def test_empty_image(self):
        with pytest.raises(EmptyImage):
            binarize_floorplan(np.zeros((0, 5), dtype=np.uint8), resolution=0.1)

    def test_invalid_resolution(self):
        with pytest.raises(InvalidResolution):
            binarize_floorplan(np.zeros((2, 2), dtype=np.uint8), resolution=0.0)

    def test_raster_roundtrip(self, tmp_path, open_grid):
        path = tmp_path / "room.png"
        save_raster(open_grid, path)
        again = binarize_floorplan(load_raster(path), resolution=open_grid.resolution,
                                   floorplan_id="room")
        assert again == open_grid

    def test_cells_are_read_only(self, open_grid):
        with pytest.raises(ValueError):
            open_grid.cells[0, 0] = False


class TestTopoGraph:

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 6])
    def test_complete_intra_edges(self, n):
        exits = [make_exit(f"e{i}", "f", (i * 3, i)) for i in range(n)]
        edges = complete_intra_edges(exits)
        assert len(edges) == n * (n - 1) // 2
        assert all(e.kind == EdgeKind.INTRA for e in edges)
        assert len({frozenset(e.endpoints) for e in edges}) == len(edges)

    def test_intra_weight_is_metric(self):
        a = make_exit("a", "f", (0, 0), resolution=0.1)
        b = make_exit("b", "f", (30, 40), resolution=0.1)
        (edge,) = complete_intra_edges([a, b])
        assert edge.weight == pytest.approx(5.0)
        assert edge.min_weight == edge.weight

    def test_mixed_floorplans(self):
        with pytest.raises(MixedFloorplans):
            complete_intra_edges([make_exit("a", "f1", (0, 0)), make_exit("b", "f2", (1, 1))])

    def test_update_edge_weight(self):
        (edge,) = complete_intra_edges([make_exit("a", "f", (0, 0)), make_exit("b", "f", (10, 0))])
        assert update_edge_weight(edge, 2.5).weight == 2.5
        with pytest.raises(ImplausibleMeasurement):
            update_edge_weight(edge, 0.5)
        with pytest.raises(ImplausibleMeasurement):
            update_edge_weight(edge, 0.0)

    def test_measured_weight_survives_rebuild(self, two_floors):
        updated = with_edge_weight(two_floors, "f1_door", "f1_hall", 7.0)
        rebuilt = MapBuilder(updated).build()
        assert rebuilt.edge_between("f1_door", "f1_hall").weight == 7.0

    def test_exit_reached_is_circular(self):
        exit = make_exit("a", "f", (50, 50), margin=10, resolution=0.1)
        assert exit_reached(Pose2D(frame="f", x=5.7, y=5.7), exit)
        assert not exit_reached(Pose2D(frame="f", x=5.75, y=5.75), exit)
        with pytest.raises(FrameMismatch):
            exit_reached(Pose2D(frame="g", x=5.0, y=5.0), exit)

    def test_builder_edges(self, two_floors):
        kinds = [e.kind for e in two_floors.edges]
        # 3 saidas em f1, 2 em f2, uma escada
        assert kinds.count(EdgeKind.INTRA) == 3 + 1
        assert kinds.count(EdgeKind.INTER) == 1
        assert validate_bundle(two_floors) == []


class TestValidation:

    def test_dangling_connection(self, two_floors):
        bad = MapBuilder(two_floors).add_exit(
            make_exit("f2_stairs", "f2", (50, 15), ExitType.STAIRS, connection="nowhere")
        ).build()
        codes = {v.code for v in validate_bundle(bad)}
        assert "dangling-connection" in codes
        assert "connection-backref" in codes

    def test_out_of_bounds_and_resolution(self, two_floors):
        bad = MapBuilder(two_floors).add_exit(make_exit("far", "f1", (500, 5), resolution=0.2))
        codes = {v.code for v in validate_bundle(bad.build())}
        assert {"out-of-bounds", "resolution"} <= codes

    def test_outdoor_requires_gps(self, two_floors):
        bad = MapBuilder(two_floors).add_exit(make_exit("gate", "f1", (20, 20), ExitType.OUTDOOR))
        assert [v.code for v in validate_bundle(bad.build())] == ["missing-gps"]

    def test_violation_text(self, two_floors):
        bad = MapBuilder(two_floors).add_exit(make_exit("x", "f9", (1, 1))).build()
        assert any(str(v).startswith("[missing-floorplan] x:") for v in validate_bundle(bad))


class TestStorage:

    @given(st.lists(st.booleans(), min_size=1, max_size=60))
    def test_cell_codec(self, flags):
        cells = np.array(flags, dtype=bool).reshape(1, -1)
        assert np.array_equal(decode_cells(encode_cells(cells), cells.shape[1], 1), cells)

    def test_decode_rejects_wrong_size(self):
        with pytest.raises(ParseError):
            decode_cells("3.2#", 2, 2)

    def test_bundle_roundtrip(self, tmp_path, two_floors):
        path = tmp_path / "bundle.json"
        save_bundle(two_floors, path)
        assert load_bundle(path) == two_floors

    def test_building_roundtrip(self, tmp_path, building):
        path = tmp_path / "building.json"
        save_bundle(building, path)
        assert load_bundle(path) == building

    def test_load_invalid_bundle(self, tmp_path, two_floors):
        bad = MapBuilder(two_floors).add_exit(make_exit("x", "f9", (1, 1))).build()
        path = tmp_path / "bad.json"
        save_bundle(bad, path)
        with pytest.raises(BundleValidationError) as info:
            load_bundle(path)
        assert info.value.violations
        assert load_bundle(path, validate=False) == bad

    def test_malformed_json_location(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"floorplans": [\n  {"id": }\n]}')
        with pytest.raises(ParseError) as info:
            load_bundle(path)
        assert "linha 2" in info.value.location


def _random_ways(draw_rng: np.random.Generator) -> RoadNetwork:
    n = int(draw_rng.integers(3, 12))
    nodes = {
        f"n{i}": RoadNode(id=f"n{i}", lat=1.30 + float(draw_rng.uniform(0, 0.01)),
                          lon=103.77 + float(draw_rng.uniform(0, 0.01)))
        for i in range(n)
    }
    ways = []
    for w in range(int(draw_rng.integers(1, 5))):
        length = int(draw_rng.integers(2, 6))
        ids = [f"n{int(i)}" for i in draw_rng.choice(n, size=length, replace=False)]
        ways.append(RoadWay(id=f"w{w}", street_id=f"s{int(draw_rng.integers(0, 3))}",
                            node_ids=ids))
    return RoadNetwork(nodes=nodes, ways=ways)


class TestRoads:

    def _chain(self) -> RoadNetwork:
        nodes = {f"n{i}": RoadNode(id=f"n{i}", lat=1.3, lon=103.0 + 0.001 * i) for i in range(5)}
        return RoadNetwork(nodes=nodes, ways=[
            RoadWay(id="w0", street_id="main", node_ids=["n0", "n1", "n2", "n3", "n4"]),
        ])

    def test_prune_chain(self):
        raw = self._chain()
        pruned = prune_road_network(raw)
        assert sorted(pruned.nodes) == ["n0", "n4"]
        assert len(pruned.ways) == 1
        assert total_length(pruned) == pytest.approx(total_length(raw), rel=1e-12)

    def test_street_change_is_kept(self):
        raw = self._chain()
        raw = raw.model_copy(update={"ways": [
            RoadWay(id="w0", street_id="main", node_ids=["n0", "n1", "n2"]),
            RoadWay(id="w1", street_id="side", node_ids=["n2", "n3", "n4"]),
        ]})
        assert sorted(prune_road_network(raw).nodes) == ["n0", "n2", "n4"]

    def test_dangling_reference(self):
        raw = self._chain().model_copy(update={"ways": [
            RoadWay(id="w0", street_id="main", node_ids=["n0", "zz"]),
        ]})
        with pytest.raises(DanglingWayReference):
            prune_road_network(raw)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_prune_idempotent_and_length_conserving(self, seed):
        raw = _random_ways(np.random.default_rng(seed))
        once = prune_road_network(raw)
        twice = prune_road_network(once)
        assert twice.model_dump() == once.model_dump()
        assert math.isclose(total_length(once), total_length(raw), rel_tol=1e-9, abs_tol=1e-6)


class TestManifest:

    def _write(self, tmp_path, exits):
        pixels = np.full((30, 60), 255, dtype=np.uint8)
        pixels[:, :2] = 0
        Image.fromarray(pixels).save(tmp_path / "f1.png")
        Image.fromarray(pixels).save(tmp_path / "f2.png")
        manifest = {
            "floorplans": [
                {"id": "f1", "image": "f1.png", "resolution": 0.1},
                {"id": "f2", "image": "f2.png", "resolution": 0.1},
            ],
            "exits": exits,
        }
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest))
        return path

    def test_build(self, tmp_path):
        path = self._write(tmp_path, [
            {"id": "a", "floorplanId": "f1", "type": "indoor", "margin": 5, "position": [10, 10]},
            {"id": "b", "floorplanId": "f1", "type": "stairs", "margin": 5, "position": [40, 10],
             "connection": "c"},
            {"id": "c", "floorplanId": "f2", "type": "stairs", "margin": 5, "position": [40, 10],
             "connection": "b"},
        ])
        bundle = build_from_manifest(load_manifest(path), tmp_path)
        assert validate_bundle(bundle) == []
        assert bundle.exits["a"].resolution == 0.1
        assert not bundle.floorplans["f1"].is_free((0, 0))
        assert {e.kind for e in bundle.edges} == {EdgeKind.INTRA, EdgeKind.INTER}

    def test_missing_raster(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"floorplans": [{"id": "f1", "image": "nope.png", "resolution": 0.1}]}')
        with pytest.raises(ParseError):
            build_from_manifest(load_manifest(path), tmp_path)

    def test_invalid_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"floorplans": []}')
        with pytest.raises(ParseError) as info:
            load_manifest(path)
        assert info.value.location == "floorplans"
