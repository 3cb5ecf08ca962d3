"""
Validacao de invariantes do MapBundle
"""

from pydantic import BaseModel

from .types import EdgeKind, ExitType, MapBundle, distance

_TOLERANCE = 1e-9


class Violation(BaseModel):
    """Violacao de invariante"""
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def validate_bundle(bundle: MapBundle) -> list[Violation]:
    """Lista vazia se e somente se todas as invariantes valem"""
    out: list[Violation] = []

    def add(code: str, subject: str, message: str) -> None:
        out.append(Violation(code=code, subject=subject, message=message))

    for key, grid in bundle.floorplans.items():
        if key != grid.id:
            add("floorplan-key", key, f"chave difere do id '{grid.id}'")

    for key, exit in bundle.exits.items():
        if key != exit.id:
            add("exit-key", key, f"chave difere do id '{exit.id}'")
        grid = bundle.floorplans.get(exit.floorplan_id)
        if grid is None:
            add("missing-floorplan", exit.id, f"planta '{exit.floorplan_id}' inexistente")
        else:
            x, y = exit.position
            if not (0 <= x <= grid.width - 1 and 0 <= y <= grid.height - 1):
                add("out-of-bounds", exit.id, f"posicao {exit.position} fora da planta")
            if abs(grid.resolution - exit.resolution) > _TOLERANCE:
                add("resolution", exit.id,
                    f"resolucao {exit.resolution} difere da planta ({grid.resolution})")
        if exit.exit_type == ExitType.OUTDOOR and exit.gps is None:
            add("missing-gps", exit.id, "saida externa sem GPS")
        if exit.connection is not None:
            target = bundle.exits.get(exit.connection)
            if target is None:
                add("dangling-connection", exit.id, f"conexao '{exit.connection}' inexistente")
            else:
                if target.floorplan_id == exit.floorplan_id:
                    add("connection-floorplan", exit.id,
                        f"conexao '{target.id}' na mesma planta")
                if target.connection != exit.id:
                    add("connection-backref", exit.id,
                        f"'{target.id}' nao referencia de volta")
        if exit.id in bundle.roads.nodes:
            add("id-collision", exit.id, "id repetido na rede viaria")

    seen: set[frozenset] = set()
    for edge in bundle.edges:
        name = f"{edge.a}-{edge.b}"
        pair = frozenset(edge.endpoints)
        if pair in seen:
            add("duplicate-edge", name, "aresta repetida")
        seen.add(pair)
        ea, eb = bundle.exits.get(edge.a), bundle.exits.get(edge.b)
        if edge.kind == EdgeKind.LAYER:
            ends = [edge.a in bundle.exits, edge.b in bundle.exits]
            roads = [edge.a in bundle.roads.nodes, edge.b in bundle.roads.nodes]
            if not (any(ends) and any(roads)):
                add("dangling-edge", name, "aresta de camada sem saida e no viario")
            continue
        if ea is None or eb is None:
            missing = edge.a if ea is None else edge.b
            add("dangling-edge", name, f"extremo '{missing}' inexistente")
            continue
        if edge.kind == EdgeKind.INTRA:
            if ea.floorplan_id != eb.floorplan_id:
                add("intra-kind", name, "aresta intra entre plantas diferentes")
            elif edge.weight < distance(ea.position, eb.position) * ea.resolution - _TOLERANCE:
                add("intra-weight", name, "peso abaixo da distancia em linha reta")
        elif edge.kind == EdgeKind.INTER and ea.floorplan_id == eb.floorplan_id:
            add("inter-kind", name, "aresta inter na mesma planta")

    for way in bundle.roads.ways:
        for node_id in way.node_ids:
            if node_id not in bundle.roads.nodes:
                add("dangling-way", way.id, f"no '{node_id}' inexistente")
    return out
