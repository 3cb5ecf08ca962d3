"""
Mapas desenhados a mao e cenarios embutidos

Cada mapa nasce todo ocupado e recebe retangulos livres em metros.
"""

from typing import Callable, Sequence

import numpy as np

from ..core.errors import UnknownId
from ..mapsys.graph import MapBuilder
from ..mapsys.storage import load_bundle
from ..mapsys.types import ExitNode, ExitType, FloorplanGrid, MapBundle, Point, Pose2D
from ..planner.grid import inflation_cells, plan_grid
from .agents import AdversarySpec
from .scenario import FIXTURE_PREFIX, Scenario
from .world import Prop

RESOLUTION = 0.1
Rect = tuple[float, float, float, float]


def carve(frame: str, size: tuple[float, float], rects: Sequence[Rect],
          resolution: float = RESOLUTION) -> FloorplanGrid:
    """Grade ocupada com os retangulos [x0, x1) x [y0, y1) livres"""
    width, height = int(round(size[0] / resolution)), int(round(size[1] / resolution))
    cells = np.ones((height, width), dtype=bool)
    for x0, y0, x1, y1 in rects:
        i0, i1 = int(round(x0 / resolution)), int(round(x1 / resolution))
        j0, j1 = int(round(y0 / resolution)), int(round(y1 / resolution))
        cells[j0:j1, i0:i1] = False
    return FloorplanGrid(id=frame, resolution=resolution, cells=cells)


def _single(grid: FloorplanGrid) -> MapBundle:
    return MapBuilder().add_floorplan(grid).build()


def corridor_map() -> MapBundle:
    """Corredor reto de 20 m x 2.5 m"""
    return _single(carve("corridor", (21.0, 3.5), [(0.5, 0.5, 20.5, 3.0)]))


def blind_spot_map() -> MapBundle:
    return _single(carve("blind_spot", (31.0, 3.5), [(0.5, 0.5, 30.5, 3.0)]))


def l_corridor_map() -> MapBundle:
    """Trecho para leste seguido de curva a esquerda (+y)"""
    return _single(carve("l_corridor", (13.0, 13.0), [(0.5, 0.5, 12.5, 3.0), (10.0, 0.5, 12.5, 12.5)]))


def hall_map() -> MapBundle:
    return _single(carve("hall", (41.0, 7.0), [(0.5, 0.5, 40.5, 6.5)]))


def task_a_map() -> MapBundle:
    """Cruzamento de quatro vias"""
    return _single(carve("task_a", (15.0, 15.0), [(0.5, 5.0, 14.5, 7.5), (6.0, 0.5, 8.5, 14.5)]))


def task_b_map() -> MapBundle:
    """T com sala no fim do ramal"""
    return _single(carve("task_b", (15.0, 15.0), [
        (0.5, 0.5, 14.5, 3.0), (6.0, 0.5, 8.5, 12.0), (4.0, 10.0, 12.0, 14.5),
    ]))


def task_c_map() -> MapBundle:
    """Anel em volta de um bloco"""
    return _single(carve("task_c", (15.0, 15.0), [
        (0.5, 0.5, 14.5, 3.0), (0.5, 12.0, 14.5, 14.5), (0.5, 0.5, 3.0, 14.5), (12.0, 0.5, 14.5, 14.5),
    ]))


def task_d_map() -> MapBundle:
    """Escritorio: corredor com duas salas e portas de 1.5 m"""
    return _single(carve("task_d", (19.0, 15.0), [
        (0.5, 6.0, 18.5, 8.5),
        (2.0, 0.5, 7.0, 5.0), (3.75, 5.0, 5.25, 6.0),
        (11.0, 9.5, 16.0, 14.5), (12.75, 8.5, 14.25, 9.5),
    ]))


def task_e_map() -> MapBundle:
    """Labirinto em serpentina com paredes de 0.5 m"""
    bands = [(0.5, 3.0), (3.5, 6.0), (6.5, 9.0), (9.5, 12.0), (12.5, 15.0)]
    rects: list[Rect] = [(0.5, y0, 15.0, y1) for y0, y1 in bands]
    rects += [
        (12.5, 3.0, 15.0, 3.5), (0.5, 6.0, 3.0, 6.5), (12.5, 9.0, 15.0, 9.5), (0.5, 12.0, 3.0, 12.5),
    ]
    grid = carve("task_e", (15.5, 15.5), rects)
    cells = np.array(grid.cells)
    # divisorias que estreitam as faixas para 1.5 m
    for x, y0, y1 in [(7.5, 0.5, 1.5), (5.0, 5.0, 6.0), (9.0, 6.5, 7.5), (6.0, 11.0, 12.0)]:
        i = int(round(x / RESOLUTION))
        cells[int(round(y0 / RESOLUTION)):int(round(y1 / RESOLUTION)), i:i + 5] = True
    return _single(FloorplanGrid(id="task_e", resolution=RESOLUTION, cells=cells))


def _exit(id: str, frame: str, kind: ExitType, xy: Point, connection=None) -> ExitNode:
    return ExitNode(
        id=id, floorplan_id=frame, exit_type=kind, margin=int(round(3.0 / RESOLUTION)),
        position=(xy[0] / RESOLUTION, xy[1] / RESOLUTION), connection=connection,
        resolution=RESOLUTION,
    )


def building_map() -> MapBundle:
    """Tres plantas ligadas por escada e passarela; margens de 3 m"""
    f1 = carve("f1", (26.0, 3.5), [(0.5, 0.5, 25.5, 3.0)])
    f2 = carve("f2", (26.0, 21.0), [(0.5, 0.5, 25.5, 3.0), (23.0, 0.5, 25.5, 20.5)])
    f3 = carve("f3", (26.0, 3.5), [(0.5, 0.5, 25.5, 3.0)])
    builder = MapBuilder()
    for grid in (f1, f2, f3):
        builder.add_floorplan(grid)
    for exit in (
        _exit("f1_entrance", "f1", ExitType.INDOOR, (1.0, 1.7)),
        _exit("f1_stairs", "f1", ExitType.STAIRS, (25.0, 1.7), "f2_stairs"),
        _exit("f2_stairs", "f2", ExitType.STAIRS, (1.0, 1.7), "f1_stairs"),
        _exit("f2_link", "f2", ExitType.LINKWAY, (24.2, 20.0), "f3_link"),
        _exit("f3_link", "f3", ExitType.LINKWAY, (1.0, 1.7), "f2_link"),
        _exit("f3_office", "f3", ExitType.INDOOR, (25.0, 1.7)),
    ):
        builder.add_exit(exit)
    return builder.build()


FIXTURE_MAPS: dict[str, Callable[[], MapBundle]] = {
    "corridor": corridor_map,
    "blind_spot": blind_spot_map,
    "l_corridor": l_corridor_map,
    "hall": hall_map,
    "task_a": task_a_map,
    "task_b": task_b_map,
    "task_c": task_c_map,
    "task_d": task_d_map,
    "task_e": task_e_map,
    "building": building_map,
}


def resolve_map(scenario: Scenario) -> MapBundle:
    """Bundle do cenario: fixture embutida ou arquivo"""
    if scenario.map.startswith(FIXTURE_PREFIX):
        name = scenario.map[len(FIXTURE_PREFIX):]
        if name not in FIXTURE_MAPS:
            raise UnknownId(f"Mapa embutido desconhecido: '{name}'")
        return FIXTURE_MAPS[name]()
    return load_bundle(scenario.map)


def _pose(frame: str, x: float, y: float, heading: float = 0.0) -> Pose2D:
    return Pose2D(frame=frame, x=x, y=y, heading=heading)


def _props_on_path(bundle: MapBundle, frame: str, a: Point, b: Point,
                   hints: Sequence[Point]) -> list[Prop]:
    """Objetos no ponto do caminho planejado (a -> b) mais proximo de cada dica"""
    grid = bundle.floorplans[frame]
    path = np.asarray(plan_grid(grid, grid.metric_to_cell(a), grid.metric_to_cell(b),
                                inflation_cells(grid, 0.5)).polyline)
    props = []
    for hx, hy in hints:
        x, y = path[int(np.argmin(np.hypot(path[:, 0] - hx, path[:, 1] - hy)))]
        props.append(Prop(frame=frame, x=float(x), y=float(y)))
    return props


def corridor_scenario() -> Scenario:
    return Scenario(name="corridor", map="fixture:corridor", start=_pose("corridor", 1.0, 1.7),
                    goals=[_pose("corridor", 20.0, 1.7)], max_ticks=400)


def l_corridor_scenario() -> Scenario:
    return Scenario(name="l_corridor", map="fixture:l_corridor",
                    start=_pose("l_corridor", 1.0, 1.7), goals=[_pose("l_corridor", 11.2, 12.0)],
                    max_ticks=500)


def blind_spot_scenario() -> Scenario:
    """Cinco cestos de 20 cm a 5 m um do outro sobre o eixo do corredor"""
    props = [Prop(frame="blind_spot", x=x, y=1.7) for x in (5.0, 10.0, 15.0, 20.0, 25.0)]
    goals = [_pose("blind_spot", x, 1.7) for x in (7.0, 12.0, 17.0, 22.0, 27.0)]
    return Scenario(name="blind_spot", map="fixture:blind_spot",
                    start=_pose("blind_spot", 1.0, 1.7), goals=goals, props=props, max_ticks=600)


def adversarial_scenario() -> Scenario:
    """Ida e volta no salao enquanto o pedestre bloqueia 15 vezes"""
    goals = [_pose("hall", x, 3.5) for x in (40.0, 1.0, 40.0)]
    return Scenario(name="adversarial", map="fixture:hall", start=_pose("hall", 1.0, 3.5),
                    goals=goals, adversary=AdversarySpec(), max_ticks=2000)


def task_a_scenario() -> Scenario:
    f = "task_a"
    return Scenario(name="task_a", map=f"fixture:{f}", start=_pose(f, 1.0, 6.2),
                    goals=[_pose(f, 7.2, 1.0), _pose(f, 14.0, 6.2)], max_ticks=900)


def task_b_scenario() -> Scenario:
    f = "task_b"
    return Scenario(name="task_b", map=f"fixture:{f}", start=_pose(f, 1.0, 1.7),
                    goals=[_pose(f, 8.0, 13.0), _pose(f, 14.0, 1.7)], max_ticks=1000)


def task_c_scenario() -> Scenario:
    f = "task_c"
    return Scenario(name="task_c", map=f"fixture:{f}", start=_pose(f, 1.7, 1.7),
                    goals=[_pose(f, 13.2, 13.2), _pose(f, 1.7, 13.2)], max_ticks=1000)


def task_d_scenario() -> Scenario:
    f = "task_d"
    return Scenario(name="task_d", map=f"fixture:{f}", start=_pose(f, 1.0, 7.2),
                    goals=[_pose(f, 4.5, 2.5), _pose(f, 13.5, 12.0), _pose(f, 18.0, 7.2)],
                    max_ticks=1500)


def task_e_scenario() -> Scenario:
    """Labirinto com objetos sobre o caminho planejado de cada trecho"""
    f = "task_e"
    bundle = task_e_map()
    start, mid, end = (1.2, 1.7), (14.0, 7.7), (1.2, 13.7)
    props = (_props_on_path(bundle, f, start, mid, [(10.0, 4.75)])
             + _props_on_path(bundle, f, mid, end, [(10.0, 10.75)]))
    return Scenario(name="task_e", map=f"fixture:{f}", start=_pose(f, *start),
                    goals=[_pose(f, *mid), _pose(f, *end)], props=props, max_ticks=2000)


def building_scenario() -> Scenario:
    """Rota por tres plantas comecando sobre a saida de entrada"""
    bundle = building_map()
    x, y = bundle.exits["f1_entrance"].metric_position
    gx, gy = bundle.exits["f3_office"].metric_position
    return Scenario(name="building", map="fixture:building", start=_pose("f1", x, y),
                    goals=[_pose("f3", gx, gy)], max_ticks=1500)


FIXTURE_SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "corridor": corridor_scenario,
    "l_corridor": l_corridor_scenario,
    "blind_spot": blind_spot_scenario,
    "adversarial": adversarial_scenario,
    "task_a": task_a_scenario,
    "task_b": task_b_scenario,
    "task_c": task_c_scenario,
    "task_d": task_d_scenario,
    "task_e": task_e_scenario,
    "building": building_scenario,
}

TASKS = ("task_a", "task_b", "task_c", "task_d", "task_e")


def fixture_scenario(name: str) -> Scenario:
    if name not in FIXTURE_SCENARIOS:
        raise UnknownId(f"Cenario embutido desconhecido: '{name}'")
    return FIXTURE_SCENARIOS[name]()
