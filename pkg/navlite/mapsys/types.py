"""
Tipos do mapa de dois niveis
"""

import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

Cell = tuple[int, int]
Point = tuple[float, float]

# quadro das poses na camada viaria (metros locais leste/norte)
ROAD_FRAME = "road"


class ExitType(str, Enum):
    """Tipos de saida anotados na planta"""
    INDOOR = "indoor"
    OUTDOOR = "outdoor"
    STAIRS = "stairs"
    LINKWAY = "linkway"
    ELEVATOR = "elevator"


class EdgeKind(str, Enum):
    """Tipos de aresta topologica"""
    INTRA = "intra"
    INTER = "inter"
    LAYER = "layer"


class Pose2D(BaseModel):
    """Pose no referencial de uma planta (ou da camada viaria)"""
    model_config = ConfigDict(frozen=True)

    frame: str = Field(description="Planta (ou camada viaria) de referencia")
    x: float
    y: float
    heading: float = Field(default=0.0, description="Orientacao em radianos")

    @property
    def xy(self) -> Point:
        return (self.x, self.y)


class ExitNode(BaseModel):
    """No de saida: marco topologico anotado numa planta"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    id: str = Field(description="ID global exclusivo")
    floorplan_id: str = Field(alias="floorplanId")
    exit_type: ExitType = Field(alias="type")
    margin: int = Field(ge=0, description="Margem da saida em pixels")
    position: Point = Field(description="Posicao em pixels (x, y)")
    gps: Optional[Point] = Field(default=None, description="(latitude, longitude)")
    connection: Optional[str] = Field(default=None, description="Saida conectada em outra planta")
    resolution: float = Field(gt=0, description="Metros por pixel")

    @property
    def metric_position(self) -> Point:
        return (self.position[0] * self.resolution, self.position[1] * self.resolution)

    @property
    def margin_m(self) -> float:
        return self.margin * self.resolution


class FloorplanGrid(BaseModel):
    """Grade de ocupacao binaria de uma planta (True = ocupado)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    resolution: float = Field(gt=0, description="Metros por celula")
    cells: np.ndarray = Field(description="Matriz (altura, largura) booleana de ocupacao")
    origin: Point = Field(default=(0.0, 0.0), description="Deslocamento no mundo (m)")

    @field_validator("cells", mode="before")
    @classmethod
    def _freeze_cells(cls, value):
        arr = np.array(value, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("cells deve ser uma matriz 2D")
        arr.setflags(write=False)
        return arr

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.cells[cell[1], cell[0]]

    def cell_to_metric(self, cell: Cell) -> Point:
        return (cell[0] * self.resolution, cell[1] * self.resolution)

    def metric_to_cell(self, point: Point) -> Cell:
        return (int(round(point[0] / self.resolution)), int(round(point[1] / self.resolution)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FloorplanGrid):
            return NotImplemented
        return (
            self.id == other.id
            and self.resolution == other.resolution
            and tuple(self.origin) == tuple(other.origin)
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    __hash__ = None


class TopoEdge(BaseModel):
    """Aresta nao direcionada do grafo topologico"""
    model_config = ConfigDict(frozen=True)

    a: str
    b: str
    weight: float = Field(ge=0, description="Peso em metros")
    kind: EdgeKind
    min_weight: float = Field(default=0.0, ge=0, description="Limite inferior (linha reta)")

    @property
    def endpoints(self) -> tuple[str, str]:
        return (self.a, self.b)

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a

    def joins(self, u: str, v: str) -> bool:
        return {self.a, self.b} == {u, v}


class RoadNode(BaseModel):
    """No geografico da rede viaria"""
    model_config = ConfigDict(frozen=True)

    id: str
    lat: float
    lon: float


class RoadWay(BaseModel):
    """Rua: sequencia de nos com identificador de logradouro"""
    model_config = ConfigDict(frozen=True)

    id: str
    street_id: str
    node_ids: list[str]
    shape: Optional[list[Point]] = Field(
        default=None, description="Geometria (lat, lon) entre os dois nos apos a poda"
    )


class RoadNetwork(BaseModel):
    """Rede viaria exportada"""
    model_config = ConfigDict(frozen=True)

    nodes: dict[str, RoadNode] = Field(default_factory=dict)
    ways: list[RoadWay] = Field(default_factory=list)
    pruned: bool = False


class MapBundle(BaseModel):
    """Mapa completo: plantas, saidas, arestas e rede viaria"""
    model_config = ConfigDict(frozen=True)

    floorplans: dict[str, FloorplanGrid] = Field(default_factory=dict)
    exits: dict[str, ExitNode] = Field(default_factory=dict)
    edges: list[TopoEdge] = Field(default_factory=list)
    roads: RoadNetwork = Field(default_factory=RoadNetwork)
    provenance: dict[str, str] = Field(default_factory=dict)

    def exits_on(self, floorplan_id: str) -> list[ExitNode]:
        return sorted(
            (e for e in self.exits.values() if e.floorplan_id == floorplan_id), key=lambda e: e.id
        )

    def edge_between(self, u: str, v: str) -> Optional[TopoEdge]:
        for edge in self.edges:
            if edge.joins(u, v):
                return edge
        return None


def distance(p: Point, q: Point) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])
