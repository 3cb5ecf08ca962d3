"""
Renderizacao da imagem LPE (caminho local + ambiente)
"""

import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw
from pydantic import BaseModel, ConfigDict, Field

from ..core.config import config
from ..mapsys.types import FloorplanGrid, Point, Pose2D

RED, GREEN, BLUE = 0, 1, 2


class LPEImage(BaseModel):
    """Raster RGB alinhado ao heading: R historico, G ambiente, B futuro"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    pixels: np.ndarray = Field(description="Matriz (lado, lado, 3) uint8")
    window_m: float = Field(description="Metros por lado")

    @property
    def side(self) -> int:
        return int(self.pixels.shape[0])

    def save_png(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.pixels).save(path)


def _to_pixel(pose: Pose2D, q: Point, side: int, mpp: float) -> tuple[float, float]:
    """Coordenada continua (coluna, linha) de um ponto do mundo"""
    ch, sh = math.cos(pose.heading), math.sin(pose.heading)
    dx, dy = q[0] - pose.x, q[1] - pose.y
    forward = dx * ch + dy * sh
    right = dx * sh - dy * ch
    return (side / 2.0 + right / mpp, side / 2.0 - forward / mpp)


def _environment(grid: FloorplanGrid, pose: Pose2D, side: int, mpp: float) -> np.ndarray:
    rows, cols = np.mgrid[0:side, 0:side]
    forward = (side / 2.0 - (rows + 0.5)) * mpp
    right = ((cols + 0.5) - side / 2.0) * mpp
    ch, sh = math.cos(pose.heading), math.sin(pose.heading)
    wx = pose.x + forward * ch + right * sh
    wy = pose.y + forward * sh - right * ch
    cx = np.rint(wx / grid.resolution).astype(np.int64)
    cy = np.rint(wy / grid.resolution).astype(np.int64)
    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    occupied = np.ones((side, side), dtype=bool)
    occupied[inside] = grid.cells[cy[inside], cx[inside]]
    return np.where(occupied, 0, 255).astype(np.uint8)


def _draw_path(points: Sequence[Point], pose: Pose2D, side: int, mpp: float, width: int):
    layer = Image.new("L", (side, side), 0)
    if len(points) >= 2:
        # PIL endereca centros de pixel em coordenadas inteiras
        xy = [tuple(c - 0.5 for c in _to_pixel(pose, q, side, mpp)) for q in points]
        ImageDraw.Draw(layer).line(xy, fill=255, width=width)
    return np.asarray(layer, dtype=np.uint8)


def render_lpe(
    grid: FloorplanGrid,
    history: Sequence[Point],
    future: Sequence[Point],
    pose: Pose2D,
    window_m: Optional[float] = None,
    side: Optional[int] = None,
) -> LPEImage:
    """Recorte do mapa centrado na pose com historico (vermelho) e futuro (azul)"""
    window_m = config.intention.lpe_window_m if window_m is None else window_m
    side = config.intention.lpe_side if side is None else side
    mpp = window_m / side
    width = max(1, side // 112)
    pixels = np.zeros((side, side, 3), dtype=np.uint8)
    pixels[..., GREEN] = _environment(grid, pose, side, mpp)
    here = pose.xy
    past = [tuple(p) for p in history]
    if past and past[-1] != here:
        past.append(here)
    ahead = [tuple(p) for p in future]
    if ahead and ahead[0] != here:
        ahead.insert(0, here)
    pixels[..., RED] = _draw_path(past, pose, side, mpp, width)
    pixels[..., BLUE] = _draw_path(ahead, pose, side, mpp, width)
    c = side // 2
    pixels[c, c, RED] = 255
    pixels[c, c, BLUE] = 255
    return LPEImage(pixels=pixels, window_m=window_m)
