"""
Costura da rota topologica em segmentos metricos e replanejamento
"""

import json
from enum import Enum
from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

from ..core.errors import GoalOccupied, NoPath, StartOccupied
from ..mapsys.roads import LocalProjection, polyline_length, way_geometry
from ..mapsys.types import EdgeKind, ExitType, MapBundle, Point, Pose2D
from .grid import GridPath, plan_grid
from .topo import GOAL, START, Endpoint, TopoPath, exit_cell, on_road, plan_topological, pose_cell


class HorizonPolicy(str, Enum):
    """Alcance do replanejamento"""
    FULL = "full"
    CURRENT_MAP = "current_map"


class RoadPath(BaseModel):
    """Trecho na camada viaria (metros locais leste/norte)"""
    type: Literal["road"] = "road"
    node_ids: list[str]
    polyline: list[Point]


class Transition(BaseModel):
    """Passagem entre plantas ou para a camada viaria"""
    type: Literal["transition"] = "transition"
    from_id: str
    to_id: str
    kind: EdgeKind
    exit_type: ExitType


Segment = Union[GridPath, RoadPath, Transition]


class RoutePlan(BaseModel):
    """Sequencia alternada de segmentos e transicoes"""
    items: list[Segment] = Field(default_factory=list)
    exits: list[str] = Field(default_factory=list)
    goal: Union[Pose2D, str]
    weight: float = 0.0

    @property
    def grid_segments(self) -> list[GridPath]:
        return [s for s in self.items if isinstance(s, GridPath)]

    @property
    def transitions(self) -> list[Transition]:
        return [s for s in self.items if isinstance(s, Transition)]

    def first_segment(self) -> Optional[GridPath]:
        segs = self.grid_segments
        return segs[0] if segs else None

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2)


def _floorplan_of(bundle: MapBundle, node: str, topo: TopoPath) -> Optional[str]:
    if node == START:
        return topo.start.frame
    if node == GOAL:
        return topo.goal.frame
    exit = bundle.exits.get(node)
    return exit.floorplan_id if exit else None


def _node_cell(bundle: MapBundle, node: str, topo: TopoPath, inflation):
    if node == START:
        return pose_cell(bundle, topo.start, inflation)
    if node == GOAL:
        return pose_cell(bundle, topo.goal, inflation)
    return exit_cell(bundle, node)


def stitch(
    bundle: MapBundle,
    topo_path: TopoPath,
    start_pose: Optional[Pose2D] = None,
    goal_pose: Optional[Pose2D] = None,
    inflation: Optional[int] = None,
) -> RoutePlan:
    """Um GridPath por visita a planta; transicoes nas arestas inter/camada"""
    if start_pose is not None or goal_pose is not None:
        topo_path = topo_path.model_copy(update={
            "start": start_pose or topo_path.start, "goal": goal_pose or topo_path.goal,
        })
    items: list[Segment] = []
    current: Optional[GridPath] = None
    road: Optional[RoadPath] = None
    projection = LocalProjection.for_network(bundle.roads)

    def flush() -> None:
        nonlocal current, road
        if current is not None:
            items.append(current)
            current = None
        if road is not None:
            items.append(road)
            road = None

    for hop in topo_path.hops:
        if hop.kind in ("intra", "attach", "direct"):
            floorplan_id = _floorplan_of(bundle, hop.a, topo_path)
            grid = bundle.floorplans[floorplan_id]
            a = _node_cell(bundle, hop.a, topo_path, inflation)
            b = _node_cell(bundle, hop.b, topo_path, inflation)
            try:
                part = plan_grid(grid, a, b, inflation)
            except (NoPath, StartOccupied, GoalOccupied) as e:
                raise NoPath(str(e), segment=f"{hop.a}->{hop.b}") from e
            current = part if current is None else current.extend(part)
        elif hop.kind == "road":
            geometry = _road_geometry(bundle, hop.a, hop.b)
            local = [projection.to_local(lat, lon) for lat, lon in geometry]
            if road is None:
                road = RoadPath(node_ids=[hop.a, hop.b], polyline=local)
            else:
                road = road.model_copy(update={
                    "node_ids": road.node_ids + [hop.b], "polyline": road.polyline + local[1:],
                })
        else:
            if current is None and hop.a in bundle.exits:
                # visita de uma unica celula
                exit = bundle.exits[hop.a]
                grid = bundle.floorplans[exit.floorplan_id]
                current = GridPath(floorplan_id=grid.id, resolution=grid.resolution,
                                   cells=[exit_cell(bundle, hop.a)])
            flush()
            exit_side = hop.a if hop.a in bundle.exits else hop.b
            items.append(Transition(
                from_id=hop.a, to_id=hop.b, kind=EdgeKind(hop.kind),
                exit_type=bundle.exits[exit_side].exit_type,
            ))
    if current is None and road is None and topo_path.nodes and topo_path.nodes[-1] in bundle.exits:
        last = topo_path.nodes[-1]
        exit = bundle.exits[last]
        grid = bundle.floorplans[exit.floorplan_id]
        current = GridPath(floorplan_id=grid.id, resolution=grid.resolution,
                           cells=[exit_cell(bundle, last)])
    flush()
    goal = topo_path.goal if topo_path.goal is not None else topo_path.nodes[-1]
    return RoutePlan(items=items, exits=topo_path.exits, goal=goal, weight=topo_path.weight)


def _road_geometry(bundle: MapBundle, u: str, v: str) -> list[Point]:
    """Geometria da rua mais curta entre u e v, a mesma que pesa a aresta do grafo"""
    best, best_length = None, None
    for way in bundle.roads.ways:
        ends = (way.node_ids[0], way.node_ids[-1])
        if set(ends) != {u, v}:
            continue
        geometry = way_geometry(bundle.roads, way)
        if ends[0] != u:
            geometry = list(reversed(geometry))
        length = polyline_length(geometry)
        if best is None or length < best_length:
            best, best_length = geometry, length
    if best is None:
        nodes = bundle.roads.nodes
        best = [(nodes[u].lat, nodes[u].lon), (nodes[v].lat, nodes[v].lon)]
    return best


def replan(
    bundle: MapBundle,
    current_pose_estimate: Pose2D,
    goal: Endpoint,
    horizon_policy: HorizonPolicy = HorizonPolicy.FULL,
    inflation: Optional[int] = None,
) -> RoutePlan:
    """Plano novo a partir da estimativa atual (chamado a cada tick)"""
    if on_road(bundle, current_pose_estimate):
        start = current_pose_estimate
    else:
        cell = pose_cell(bundle, current_pose_estimate, inflation)
        grid = bundle.floorplans[current_pose_estimate.frame]
        x, y = grid.cell_to_metric(cell)
        start = current_pose_estimate.model_copy(update={"x": x, "y": y})
    topo = plan_topological(bundle, start, goal, inflation)
    route = stitch(bundle, topo, inflation=inflation)
    if horizon_policy == HorizonPolicy.CURRENT_MAP:
        for i, item in enumerate(route.items):
            if isinstance(item, Transition):
                return route.model_copy(update={"items": route.items[: i + 1]})
    return route
