"""
Ingestao de plantas: raster -> grade de ocupacao
"""

from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from PIL import Image

from ..core.config import config
from ..core.errors import EmptyImage, InvalidResolution, ParseError
from .types import FloorplanGrid, Point

FreeRule = Callable[[np.ndarray], np.ndarray]


def luminance_rule(threshold: Optional[float] = None) -> FreeRule:
    """Regra padrao: luminancia acima do limiar = livre"""
    limit = config.map.free_luminance if threshold is None else threshold

    def rule(pixels: np.ndarray) -> np.ndarray:
        values = pixels.astype(np.float64)
        if np.issubdtype(pixels.dtype, np.integer):
            values = values / 255.0
        if values.ndim == 3:
            if values.shape[2] >= 3:
                values = 0.299 * values[..., 0] + 0.587 * values[..., 1] + 0.114 * values[..., 2]
            else:
                values = values[..., 0]
        return values > limit

    return rule


def binarize_floorplan(
    image: Union[np.ndarray, Image.Image],
    free_rule: Optional[FreeRule] = None,
    resolution: Optional[float] = None,
    floorplan_id: str = "floor",
    origin: Point = (0.0, 0.0),
) -> FloorplanGrid:
    """Converte um raster em grade: livre onde o pixel satisfaz a regra"""
    pixels = np.asarray(image)
    if pixels.size == 0 or pixels.ndim < 2 or pixels.shape[0] == 0 or pixels.shape[1] == 0:
        raise EmptyImage("Imagem vazia")
    res = config.map.default_resolution if resolution is None else resolution
    if res <= 0:
        raise InvalidResolution(f"Resolucao invalida: {res}")
    rule = free_rule or luminance_rule()
    free = np.asarray(rule(pixels), dtype=bool)
    if free.shape != pixels.shape[:2]:
        raise ValueError("Regra de cor deve preservar as dimensoes")
    return FloorplanGrid(id=floorplan_id, resolution=res, cells=~free, origin=origin)


def load_raster(path: Path) -> np.ndarray:
    """Le PNG ou PGM como matriz"""
    try:
        with Image.open(path) as img:
            mode = "L" if img.mode in ("1", "L", "I", "I;16", "P") else "RGB"
            return np.asarray(img.convert(mode))
    except FileNotFoundError:
        raise
    except OSError as e:
        raise ParseError(f"Raster ilegivel: {e}", location=str(path)) from e


def save_raster(grid: FloorplanGrid, path: Path) -> None:
    """Grava a grade como PNG (branco = livre)"""
    pixels = np.where(grid.cells, 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path)
