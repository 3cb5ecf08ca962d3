"""
Grafo topologico de saidas
"""

from itertools import combinations
from typing import Iterable, Optional

import networkx as nx

from ..core.config import config
from ..core.errors import FrameMismatch, ImplausibleMeasurement, MixedFloorplans, UnknownId
from .roads import nearest_road_node, prune_road_network, way_length
from .types import (
    EdgeKind,
    ExitNode,
    ExitType,
    FloorplanGrid,
    MapBundle,
    Pose2D,
    RoadNetwork,
    TopoEdge,
    distance,
)

_TOLERANCE = 1e-9


def complete_intra_edges(exits_on_floorplan: Iterable[ExitNode]) -> list[TopoEdge]:
    """Grafo completo C(N,2) entre as saidas de uma planta"""
    exits = sorted(exits_on_floorplan, key=lambda e: e.id)
    floorplans = {e.floorplan_id for e in exits}
    if len(floorplans) > 1:
        raise MixedFloorplans(f"Saidas de plantas diferentes: {sorted(floorplans)}")
    edges = []
    for a, b in combinations(exits, 2):
        d = distance(a.position, b.position) * a.resolution
        edges.append(TopoEdge(a=a.id, b=b.id, weight=d, kind=EdgeKind.INTRA, min_weight=d))
    return edges


def update_edge_weight(edge: TopoEdge, measured_distance: float) -> TopoEdge:
    """Substitui o peso pela ultima medicao real"""
    if measured_distance <= 0 or measured_distance < edge.min_weight - _TOLERANCE:
        raise ImplausibleMeasurement(
            f"Medicao {measured_distance:.3f} m abaixo do limite {edge.min_weight:.3f} m "
            f"na aresta {edge.a}-{edge.b}"
        )
    return edge.model_copy(update={"weight": measured_distance})


def exit_reached(pose_estimate: Pose2D, exit: ExitNode) -> bool:
    """Pose dentro da margem circular da saida"""
    if pose_estimate.frame != exit.floorplan_id:
        raise FrameMismatch(
            f"Pose em '{pose_estimate.frame}', saida '{exit.id}' em '{exit.floorplan_id}'"
        )
    return distance(pose_estimate.xy, exit.metric_position) <= exit.margin_m


def straight_line(bundle: MapBundle, edge: TopoEdge) -> Optional[float]:
    """Distancia em linha reta de uma aresta intra (None nos demais tipos)"""
    a, b = bundle.exits.get(edge.a), bundle.exits.get(edge.b)
    if edge.kind != EdgeKind.INTRA or a is None or b is None:
        return None
    return distance(a.position, b.position) * a.resolution


def with_edge_weight(bundle: MapBundle, u: str, v: str, measured_distance: float) -> MapBundle:
    """Nova versao do bundle com o peso da aresta u-v atualizado"""
    edges = list(bundle.edges)
    for i, edge in enumerate(edges):
        if edge.joins(u, v):
            edges[i] = update_edge_weight(edge, measured_distance)
            return bundle.model_copy(update={"edges": edges})
    raise UnknownId(f"Aresta inexistente: {u}-{v}")


def topo_graph(bundle: MapBundle) -> nx.Graph:
    """Grafo networkx com saidas, nos viarios e todas as arestas"""
    graph = nx.Graph()
    for exit in bundle.exits.values():
        graph.add_node(exit.id, layer="exit", floorplan=exit.floorplan_id)
    for node_id in bundle.roads.nodes:
        graph.add_node(node_id, layer="road")
    for edge in bundle.edges:
        graph.add_edge(edge.a, edge.b, weight=edge.weight, kind=edge.kind.value)
    for way in bundle.roads.ways:
        u, v = way.node_ids[0], way.node_ids[-1]
        if u == v:
            continue
        w = way_length(bundle.roads, way)
        if graph.has_edge(u, v) and graph[u][v]["weight"] <= w:
            continue
        graph.add_edge(u, v, weight=w, kind="road", way=way.id)
    return graph


class MapBuilder:
    """Monta um MapBundle imutavel a partir de plantas, saidas e ruas"""

    def __init__(self, bundle: Optional[MapBundle] = None):
        base = bundle or MapBundle()
        self.floorplans: dict[str, FloorplanGrid] = dict(base.floorplans)
        self.exits: dict[str, ExitNode] = dict(base.exits)
        self.extra_edges: list[TopoEdge] = [e for e in base.edges if e.kind != EdgeKind.INTRA]
        self.roads: RoadNetwork = base.roads
        self.provenance: dict[str, str] = dict(base.provenance)
        self._weights = {frozenset(e.endpoints): e.weight for e in base.edges}

    def add_floorplan(self, grid: FloorplanGrid) -> "MapBuilder":
        self.floorplans[grid.id] = grid
        return self

    def add_exit(self, exit: ExitNode) -> "MapBuilder":
        self.exits[exit.id] = exit
        return self

    def set_roads(self, roads: RoadNetwork) -> "MapBuilder":
        self.roads = roads if roads.pruned else prune_road_network(roads)
        return self

    def connect(self, a: str, b: str, weight: Optional[float] = None) -> "MapBuilder":
        """Aresta inter entre saidas de plantas diferentes"""
        w = config.map.inter_edge_weight if weight is None else weight
        self.extra_edges.append(TopoEdge(a=a, b=b, weight=w, kind=EdgeKind.INTER))
        return self

    def link_road(self, exit_id: str, road_node: str, weight: Optional[float] = None):
        w = config.map.layer_edge_weight if weight is None else weight
        self.extra_edges.append(TopoEdge(a=exit_id, b=road_node, weight=w, kind=EdgeKind.LAYER))
        return self

    def _connection_edges(self) -> list[TopoEdge]:
        existing = {frozenset(e.endpoints) for e in self.extra_edges}
        edges = []
        for exit in sorted(self.exits.values(), key=lambda e: e.id):
            if exit.connection is None:
                continue
            pair = frozenset((exit.id, exit.connection))
            if pair in existing:
                continue
            existing.add(pair)
            a, b = sorted(pair)
            edges.append(
                TopoEdge(a=a, b=b, weight=config.map.inter_edge_weight, kind=EdgeKind.INTER)
            )
        return edges

    def _layer_edges(self) -> list[TopoEdge]:
        if not self.roads.nodes:
            return []
        linked = {e.a for e in self.extra_edges if e.kind == EdgeKind.LAYER}
        edges = []
        for exit in sorted(self.exits.values(), key=lambda e: e.id):
            if exit.exit_type != ExitType.OUTDOOR or exit.gps is None or exit.id in linked:
                continue
            node = nearest_road_node(self.roads, exit.gps)
            edges.append(
                TopoEdge(a=exit.id, b=node, weight=config.map.layer_edge_weight,
                         kind=EdgeKind.LAYER)
            )
        return edges

    def build(self) -> MapBundle:
        """Gera arestas intra (C(N,2)), inter e de camada"""
        edges: list[TopoEdge] = []
        for floorplan_id in sorted(self.floorplans):
            on_floor = [e for e in self.exits.values() if e.floorplan_id == floorplan_id]
            edges.extend(complete_intra_edges(on_floor))
        edges.extend(self.extra_edges)
        edges.extend(self._connection_edges())
        edges.extend(self._layer_edges())
        # pesos medidos anteriormente sobrevivem a reconstrucao
        restored = []
        for edge in edges:
            w = self._weights.get(frozenset(edge.endpoints))
            if w is not None and w != edge.weight and w >= edge.min_weight - _TOLERANCE:
                edge = edge.model_copy(update={"weight": w})
            restored.append(edge)
        return MapBundle(
            floorplans=dict(sorted(self.floorplans.items())),
            exits=dict(sorted(self.exits.items())),
            edges=restored,
            roads=self.roads,
            provenance=self.provenance,
        )
