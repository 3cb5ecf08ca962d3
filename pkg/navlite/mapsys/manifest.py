"""
Manifesto de mapa: plantas, saidas anotadas e rede viaria num JSON

    {
      "floorplans": [{"id": "f1", "image": "f1.png", "resolution": 0.1}],
      "exits": [{"id": "f1_stairs", "floorplanId": "f1", "type": "stairs",
                 "margin": 10, "position": [120, 40], "connection": "f2_stairs"}],
      "connections": [["a", "b"]],
      "roads": "roads.json",
      "road_links": [["gate", "n12"]]
    }
"""

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError

from ..core.errors import ParseError
from .floorplan import binarize_floorplan, load_raster, luminance_rule
from .graph import MapBuilder
from .roads import load_road_export
from .types import ExitNode, MapBundle


class FloorplanEntry(BaseModel):
    id: str
    image: str = Field(description="PNG/PGM relativo ao manifesto")
    resolution: float = Field(gt=0)
    free_luminance: Optional[float] = Field(default=None, ge=0, le=1)


class MapManifest(BaseModel):
    """Entrada do `map build`"""
    floorplans: list[FloorplanEntry] = Field(min_length=1)
    exits: list[dict[str, Any]] = Field(default_factory=list)
    connections: list[tuple[str, str]] = Field(default_factory=list)
    roads: Optional[str] = None
    road_links: list[tuple[str, str]] = Field(default_factory=list)


def load_manifest(path: Path) -> MapManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ParseError(f"Manifesto ilegivel: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise ParseError("JSON invalido", location=f"linha {e.lineno}, coluna {e.colno}") from e
    try:
        return MapManifest(**data)
    except (ValidationError, TypeError) as e:
        where = None
        if isinstance(e, ValidationError) and e.errors():
            where = ".".join(str(p) for p in e.errors()[0]["loc"])
        raise ParseError(f"Manifesto invalido: {e}", location=where) from e


def build_from_manifest(manifest: MapManifest, base_dir: Path) -> MapBundle:
    """Ingere rasters, anotacoes e ruas; nao valida (o chamador decide)"""
    base_dir = Path(base_dir)
    builder = MapBuilder()
    resolutions = {}
    for entry in manifest.floorplans:
        image_path = base_dir / entry.image
        if not image_path.exists():
            raise ParseError(f"Raster inexistente: {image_path}", location=f"floorplans.{entry.id}")
        grid = binarize_floorplan(load_raster(image_path), luminance_rule(entry.free_luminance),
                                  entry.resolution, entry.id)
        builder.add_floorplan(grid)
        resolutions[entry.id] = entry.resolution
        builder.provenance[entry.id] = entry.image
    for i, raw in enumerate(manifest.exits):
        data = dict(raw)
        frame = data.get("floorplanId", data.get("floorplan_id"))
        data.setdefault("resolution", resolutions.get(frame, 1.0))
        try:
            builder.add_exit(ExitNode(**data))
        except (ValidationError, TypeError) as e:
            raise ParseError(f"Saida invalida: {e}", location=f"exits.{i}") from e
    if manifest.roads:
        builder.set_roads(load_road_export(base_dir / manifest.roads))
    for a, b in manifest.connections:
        builder.connect(a, b)
    for exit_id, node in manifest.road_links:
        builder.link_road(exit_id, node)
    return builder.build()
