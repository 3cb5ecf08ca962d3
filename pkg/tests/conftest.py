"""
Fixtures compartilhadas dos testes
"""

import numpy as np
import pytest

from navlite.mapsys.graph import MapBuilder
from navlite.mapsys.types import ExitNode, ExitType, FloorplanGrid, MapBundle
from navlite.sim.fixtures import building_map, carve


def make_exit(id: str, frame: str, position, kind=ExitType.INDOOR, margin=5,
              connection=None, resolution=0.1, gps=None) -> ExitNode:
    return ExitNode(id=id, floorplan_id=frame, exit_type=kind, margin=margin,
                    position=position, connection=connection, resolution=resolution, gps=gps)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def open_grid() -> FloorplanGrid:
    """Sala livre de 2 x 2 m com borda ocupada"""
    return carve("room", (2.0, 2.0), [(0.1, 0.1, 1.9, 1.9)])


@pytest.fixture
def two_floors() -> MapBundle:
    """Duas plantas ligadas por escada; tres saidas na primeira"""
    f1 = carve("f1", (6.0, 3.0), [(0.5, 0.5, 5.5, 2.5)])
    f2 = carve("f2", (6.0, 3.0), [(0.5, 0.5, 5.5, 2.5)])
    return (
        MapBuilder()
        .add_floorplan(f1)
        .add_floorplan(f2)
        .add_exit(make_exit("f1_door", "f1", (10, 15)))
        .add_exit(make_exit("f1_hall", "f1", (30, 15)))
        .add_exit(make_exit("f1_stairs", "f1", (50, 15), ExitType.STAIRS, connection="f2_stairs"))
        .add_exit(make_exit("f2_stairs", "f2", (50, 15), ExitType.STAIRS, connection="f1_stairs"))
        .add_exit(make_exit("f2_office", "f2", (10, 15)))
        .build()
    )


@pytest.fixture(scope="session")
def building() -> MapBundle:
    return building_map()
