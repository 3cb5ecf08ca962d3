"""
Persistencia do MapBundle em JSON

Celulas gravadas linha a linha em run-length: "<n>." livre, "<n>#" ocupado.
"""

import json
import re
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from ..core.errors import BundleValidationError, ParseError
from .roads import load_road_export
from .types import ExitNode, FloorplanGrid, MapBundle, TopoEdge
from .validate import validate_bundle

FORMAT_VERSION = 1
_RUN = re.compile(r"(\d+)([.#])")


def encode_cells(cells: np.ndarray) -> str:
    flat = np.asarray(cells, dtype=bool).ravel()
    if flat.size == 0:
        return ""
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    return "".join(f"{e - s}{'#' if flat[s] else '.'}" for s, e in zip(starts, ends))


def decode_cells(text: str, width: int, height: int) -> np.ndarray:
    runs = _RUN.findall(text)
    if "".join(f"{n}{c}" for n, c in runs) != text:
        raise ParseError("Codificacao de celulas invalida", location="floorplans.cells")
    values = [np.full(int(n), c == "#", dtype=bool) for n, c in runs]
    flat = np.concatenate(values) if values else np.zeros(0, dtype=bool)
    if flat.size != width * height:
        raise ParseError(
            f"{flat.size} celulas, esperado {width * height}", location="floorplans.cells"
        )
    return flat.reshape(height, width)


def bundle_to_dict(bundle: MapBundle) -> dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "floorplans": [
            {
                "id": g.id,
                "width": g.width,
                "height": g.height,
                "resolution": g.resolution,
                "origin": list(g.origin),
                "cells": encode_cells(g.cells),
            }
            for g in bundle.floorplans.values()
        ],
        "exits": [e.model_dump(mode="json", by_alias=True) for e in bundle.exits.values()],
        "edges": [
            {
                "endpoints": [e.a, e.b],
                "weight": e.weight,
                "kind": e.kind.value,
                "min_weight": e.min_weight,
            }
            for e in bundle.edges
        ],
        "roads": {
            "nodes": [n.model_dump() for n in bundle.roads.nodes.values()],
            "ways": [
                {
                    "id": w.id,
                    "street_id": w.street_id,
                    "nodes": list(w.node_ids),
                    "shape": [list(p) for p in w.shape] if w.shape is not None else None,
                }
                for w in bundle.roads.ways
            ],
            "pruned": bundle.roads.pruned,
        },
        "provenance": dict(bundle.provenance),
    }


def bundle_from_dict(data: dict[str, Any]) -> MapBundle:
    where = "raiz"
    try:
        floorplans = {}
        for i, f in enumerate(data["floorplans"]):
            where = f"floorplans[{i}]"
            cells = decode_cells(f["cells"], int(f["width"]), int(f["height"]))
            floorplans[f["id"]] = FloorplanGrid(
                id=f["id"], resolution=f["resolution"], cells=cells,
                origin=tuple(f.get("origin", (0.0, 0.0))),
            )
        exits = {}
        for i, e in enumerate(data["exits"]):
            where = f"exits[{i}]"
            node = ExitNode.model_validate(e)
            if node.id in exits:
                raise ParseError(f"ID de saida repetido '{node.id}'", location=where)
            exits[node.id] = node
        edges = []
        for i, e in enumerate(data.get("edges", [])):
            where = f"edges[{i}]"
            a, b = e["endpoints"]
            edges.append(TopoEdge(a=a, b=b, weight=e["weight"], kind=e["kind"],
                                  min_weight=e.get("min_weight", 0.0)))
        where = "roads"
        roads = load_road_export(data.get("roads") or {})
    except ParseError:
        raise
    except ValidationError as e:
        loc = ".".join(str(part) for part in e.errors()[0]["loc"])
        raise ParseError("Campo invalido", location=f"{where}.{loc}") from e
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"Estrutura invalida: {e}", location=where) from e
    return MapBundle(
        floorplans=floorplans, exits=exits, edges=edges, roads=roads,
        provenance={str(k): str(v) for k, v in data.get("provenance", {}).items()},
    )


def save_bundle(bundle: MapBundle, path: Path) -> None:
    """Salva o bundle como documento JSON unico"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle_to_dict(bundle), indent=2))


def load_bundle(path: Path, validate: bool = True) -> MapBundle:
    """Carrega o bundle; violacoes viram BundleValidationError"""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError("JSON invalido", location=f"linha {e.lineno}, coluna {e.colno}") from e
    if not isinstance(data, dict):
        raise ParseError("Documento deve ser um objeto", location="raiz")
    bundle = bundle_from_dict(data)
    if validate:
        violations = validate_bundle(bundle)
        if violations:
            raise BundleValidationError(violations)
    return bundle
