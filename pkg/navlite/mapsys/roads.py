"""
Rede viaria: leitura, poda de nos e geometria

A poda mantem apenas pontas, cruzamentos (grau >= 3), inicios de lacos e
nos de grau 2 onde o logradouro muda. A geometria descartada fica na
forma (shape) das ruas resultantes, preservando o comprimento.
"""

import json
import math
from pathlib import Path
from typing import Iterator, Union

import networkx as nx
from pydantic import ValidationError

from ..core.errors import DanglingWayReference, ParseError
from ..core.log import get_logger
from .types import Point, RoadNetwork, RoadNode, RoadWay

logger = get_logger(__name__)

EARTH_RADIUS_M = 6371008.8


def haversine(a: Point, b: Point) -> float:
    """Distancia em metros entre dois pontos (lat, lon)"""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(
        (lon2 - lon1) / 2
    ) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def polyline_length(points: list[Point]) -> float:
    return sum(haversine(p, q) for p, q in zip(points, points[1:]))


def way_geometry(net: RoadNetwork, way: RoadWay) -> list[Point]:
    """Geometria (lat, lon) completa de uma rua"""
    if way.shape is not None:
        return list(way.shape)
    return [(net.nodes[n].lat, net.nodes[n].lon) for n in way.node_ids]


def way_length(net: RoadNetwork, way: RoadWay) -> float:
    return polyline_length(way_geometry(net, way))


def total_length(net: RoadNetwork) -> float:
    return sum(way_length(net, w) for w in net.ways)


class LocalProjection:
    """Projecao equiretangular (lat, lon) -> (leste, norte) em metros"""

    def __init__(self, lat0: float, lon0: float):
        self.lat0 = lat0
        self.lon0 = lon0
        self._kx = math.radians(1.0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
        self._ky = math.radians(1.0) * EARTH_RADIUS_M

    @classmethod
    def for_network(cls, net: RoadNetwork) -> "LocalProjection":
        if not net.nodes:
            return cls(0.0, 0.0)
        first = net.nodes[min(net.nodes)]
        return cls(first.lat, first.lon)

    def to_local(self, lat: float, lon: float) -> Point:
        return ((lon - self.lon0) * self._kx, (lat - self.lat0) * self._ky)


def load_road_export(source: Union[Path, dict]) -> RoadNetwork:
    """Le a exportacao JSON com 'nodes' (id, lat, lon) e 'ways' (id, street_id, nodes)"""
    if isinstance(source, dict):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as e:
            raise ParseError("JSON invalido", location=f"linha {e.lineno}, coluna {e.colno}") from e
    try:
        nodes = {str(n["id"]): RoadNode(id=str(n["id"]), lat=n["lat"], lon=n["lon"])
                 for n in data.get("nodes", [])}
        ways = [
            RoadWay(
                id=str(w["id"]),
                street_id=str(w["street_id"]),
                node_ids=[str(n) for n in w["nodes"]],
                shape=[tuple(p) for p in w["shape"]] if w.get("shape") else None,
            )
            for w in data.get("ways", [])
        ]
    except KeyError as e:
        raise ParseError(f"Campo ausente: {e}", location="roads") from e
    except ValidationError as e:
        loc = ".".join(str(part) for part in e.errors()[0]["loc"])
        raise ParseError("Rede viaria invalida", location=f"roads.{loc}") from e
    return RoadNetwork(nodes=nodes, ways=ways, pruned=bool(data.get("pruned", False)))


def _segments(net: RoadNetwork) -> Iterator[tuple[str, str, str, list[Point]]]:
    for way in net.ways:
        for node_id in way.node_ids:
            if node_id not in net.nodes:
                raise DanglingWayReference(way.id, node_id)
        if way.shape is not None and len(way.node_ids) == 2:
            yield way.node_ids[0], way.node_ids[1], way.street_id, list(way.shape)
            continue
        for u, v in zip(way.node_ids, way.node_ids[1:]):
            if u == v:
                continue
            pts = [(net.nodes[u].lat, net.nodes[u].lon), (net.nodes[v].lat, net.nodes[v].lon)]
            yield u, v, way.street_id, pts


def prune_road_network(raw: RoadNetwork) -> RoadNetwork:
    """Poda a rede mantendo apenas os nos estruturais"""
    graph = nx.MultiGraph()
    for key, (u, v, street, pts) in enumerate(_segments(raw)):
        graph.add_edge(u, v, key=key, street=street, src=u, pts=pts)

    loop_starts = {
        w.node_ids[0] for w in raw.ways if len(w.node_ids) > 1 and w.node_ids[0] == w.node_ids[-1]
    }
    retained: set[str] = set()
    for node in graph.nodes:
        degree = graph.degree(node)
        streets = {data["street"] for _, _, data in graph.edges(node, data=True)}
        if degree == 1 or degree >= 3 or node in loop_starts or len(streets) > 1:
            retained.add(node)

    used: set[int] = set()
    chains: list[tuple[str, str, str, list[Point]]] = []

    def oriented(data: dict, from_node: str) -> list[Point]:
        return list(data["pts"]) if data["src"] == from_node else list(reversed(data["pts"]))

    def walk_from(start: str) -> None:
        incident = sorted(graph.edges(start, keys=True, data=True), key=lambda e: (e[1], e[2]))
        for _, other, key, data in incident:
            if key in used:
                continue
            used.add(key)
            street = data["street"]
            pts = oriented(data, start)
            current = other
            while current not in retained:
                nxt = [
                    (o, k, d) for _, o, k, d in graph.edges(current, keys=True, data=True)
                    if k not in used
                ]
                if not nxt:
                    break
                o, k, d = nxt[0]
                used.add(k)
                pts.extend(oriented(d, current)[1:])
                current = o
            chains.append((start, current, street, pts))

    for start in sorted(retained):
        walk_from(start)
    # ciclos sem nenhum no estrutural
    while len(used) < graph.number_of_edges():
        leftover = min(
            n for u, v, k in graph.edges(keys=True) if k not in used for n in (u, v)
        )
        retained.add(leftover)
        walk_from(leftover)

    canonical = []
    for u, v, street, pts in chains:
        if v < u:
            u, v, pts = v, u, list(reversed(pts))
        canonical.append((u, v, street, pts))
    canonical.sort(key=lambda c: (c[0], c[1], c[2], c[3]))

    ways: list[RoadWay] = []
    counts: dict[tuple[str, str], int] = {}
    for u, v, street, pts in canonical:
        k = counts.get((u, v), 0)
        counts[(u, v)] = k + 1
        ways.append(RoadWay(id=f"{u}~{v}#{k}", street_id=street, node_ids=[u, v], shape=pts))

    nodes = {n: raw.nodes[n] for n in sorted(retained)}
    logger.debug(f"Poda: {len(raw.nodes)} -> {len(nodes)} nos, {len(ways)} ruas")
    return RoadNetwork(nodes=nodes, ways=ways, pruned=True)


def nearest_road_node(net: RoadNetwork, gps: Point) -> str:
    """No viario mais proximo de uma coordenada (lat, lon)"""
    return min(net.nodes, key=lambda n: (haversine(gps, (net.nodes[n].lat, net.nodes[n].lon)), n))


def nearest_local_node(net: RoadNetwork, xy: Point) -> str:
    """No viario mais proximo de um ponto em metros locais (leste, norte)"""
    projection = LocalProjection.for_network(net)

    def gap(n: str) -> float:
        node = net.nodes[n]
        return math.dist(projection.to_local(node.lat, node.lon), xy)

    return min(net.nodes, key=lambda n: (gap(n), n))
