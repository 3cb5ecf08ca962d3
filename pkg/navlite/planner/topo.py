"""
Planejamento topologico sobre o grafo de saidas
"""

import heapq
import math
from typing import Optional, Union

from pydantic import BaseModel

from ..core.errors import GoalOccupied, NoPath, StartOccupied, UnknownId, Unreachable
from ..core.log import get_logger
from ..mapsys.graph import topo_graph
from ..mapsys.roads import nearest_local_node
from ..mapsys.types import ROAD_FRAME, Cell, MapBundle, Pose2D
from .grid import inflate, nearest_free, plan_grid

logger = get_logger(__name__)

START = "@start"
GOAL = "@goal"

Endpoint = Union[str, Pose2D]


class Hop(BaseModel):
    """Aresta percorrida"""
    a: str
    b: str
    weight: float
    kind: str


class TopoPath(BaseModel):
    """Sequencia de nos com arestas e peso total"""
    nodes: list[str]
    hops: list[Hop]
    weight: float
    start: Optional[Pose2D] = None
    goal: Optional[Pose2D] = None
    exit_ids: list[str] = []

    @property
    def exits(self) -> list[str]:
        return [n for n in self.nodes if n in self.exit_ids]


def pose_cell(bundle: MapBundle, pose: Pose2D, inflation: Optional[int] = None) -> Cell:
    """Celula livre mais proxima da pose na sua planta"""
    grid = bundle.floorplans.get(pose.frame)
    if grid is None:
        raise UnknownId(f"Planta desconhecida: '{pose.frame}'")
    cell = grid.metric_to_cell(pose.xy)
    radius = 0 if inflation is None else inflation
    blocked = inflate(grid.cells, radius)
    if grid.in_bounds(cell) and not grid.cells[cell[1], cell[0]] and not blocked[cell[1], cell[0]]:
        return cell
    return nearest_free(blocked if not blocked.all() else grid.cells, cell)


def exit_cell(bundle: MapBundle, exit_id: str) -> Cell:
    exit = bundle.exits[exit_id]
    grid = bundle.floorplans[exit.floorplan_id]
    cell = (int(round(exit.position[0])), int(round(exit.position[1])))
    if grid.is_free(cell):
        return cell
    return nearest_free(grid.cells, cell)


def on_road(bundle: MapBundle, endpoint: Endpoint) -> bool:
    return (isinstance(endpoint, Pose2D) and endpoint.frame == ROAD_FRAME
            and endpoint.frame not in bundle.floorplans)


def _check_endpoint(bundle: MapBundle, endpoint: Endpoint) -> None:
    if on_road(bundle, endpoint):
        if not bundle.roads.nodes:
            raise UnknownId("Pose na camada viaria, mas o mapa nao tem ruas")
    elif isinstance(endpoint, Pose2D):
        if endpoint.frame not in bundle.floorplans:
            raise UnknownId(f"Planta desconhecida: '{endpoint.frame}'")
    elif endpoint not in bundle.exits and endpoint not in bundle.roads.nodes:
        raise UnknownId(f"ID desconhecido: '{endpoint}'")


def _grid_cost(bundle, floorplan_id, a: Cell, b: Cell, inflation) -> Optional[float]:
    try:
        return plan_grid(bundle.floorplans[floorplan_id], a, b, inflation).cost
    except (NoPath, StartOccupied, GoalOccupied):
        return None


def plan_topological(
    bundle: MapBundle, start: Endpoint, goal: Endpoint, inflation: Optional[int] = None
) -> TopoPath:
    """Dijkstra sobre saidas; poses livres ligadas por A* as saidas da sua planta"""
    _check_endpoint(bundle, start)
    _check_endpoint(bundle, goal)
    # poses na camada viaria entram pelo no mais proximo
    if on_road(bundle, start):
        start = nearest_local_node(bundle.roads, start.xy)
    if on_road(bundle, goal):
        goal = nearest_local_node(bundle.roads, goal.xy)
    graph = topo_graph(bundle)
    adjacency: dict[str, list[tuple[str, float, str]]] = {n: [] for n in graph.nodes}
    for u, v, data in graph.edges(data=True):
        adjacency[u].append((v, data["weight"], data["kind"]))
        adjacency[v].append((u, data["weight"], data["kind"]))

    src = start if isinstance(start, str) else START
    dst = goal if isinstance(goal, str) else GOAL
    adjacency.setdefault(START, [])
    adjacency.setdefault(GOAL, [])

    start_cell = pose_cell(bundle, start, inflation) if isinstance(start, Pose2D) else None
    goal_cell = pose_cell(bundle, goal, inflation) if isinstance(goal, Pose2D) else None

    if isinstance(start, Pose2D):
        for exit in bundle.exits_on(start.frame):
            cost = _grid_cost(bundle, start.frame, start_cell, exit_cell(bundle, exit.id),
                              inflation)
            if cost is not None:
                adjacency[START].append((exit.id, cost, "attach"))
    if isinstance(goal, Pose2D):
        for exit in bundle.exits_on(goal.frame):
            cost = _grid_cost(bundle, goal.frame, exit_cell(bundle, exit.id), goal_cell, inflation)
            if cost is not None:
                adjacency[exit.id].append((GOAL, cost, "attach"))
    if isinstance(start, Pose2D) and isinstance(goal, Pose2D) and start.frame == goal.frame:
        cost = _grid_cost(bundle, start.frame, start_cell, goal_cell, inflation)
        if cost is not None:
            adjacency[START].append((GOAL, cost, "direct"))

    dist = {src: 0.0}
    prev: dict[str, tuple[str, float, str]] = {}
    done: set[str] = set()
    heap = [(0.0, src)]
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == dst:
            break
        for nbr, w, kind in sorted(adjacency.get(node, []), key=lambda t: (t[0], t[1])):
            if nbr in done or nbr == START:
                continue
            cand = d + w
            if cand < dist.get(nbr, math.inf):
                dist[nbr] = cand
                prev[nbr] = (node, w, kind)
                heapq.heappush(heap, (cand, nbr))
    if dst not in done:
        raise Unreachable(f"Objetivo inalcancavel a partir de '{src}'")

    nodes = [dst]
    hops: list[Hop] = []
    while nodes[-1] != src:
        p, w, kind = prev[nodes[-1]]
        hops.append(Hop(a=p, b=nodes[-1], weight=w, kind=kind))
        nodes.append(p)
    nodes.reverse()
    hops.reverse()
    weight = 0.0
    for hop in hops:
        weight += hop.weight
    logger.debug(f"Rota topologica: {' -> '.join(nodes)} ({weight:.2f} m)")
    return TopoPath(
        nodes=nodes, hops=hops, weight=weight,
        start=start if isinstance(start, Pose2D) else None,
        goal=goal if isinstance(goal, Pose2D) else None,
        exit_ids=[n for n in nodes if n in bundle.exits],
    )
