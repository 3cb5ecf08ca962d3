"""
Camera simulada: raster egocentrico por lancamento de raios
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.config import CameraConfig, config
from .world import RobotState, World

UNKNOWN = 0
WALL = 40
PROP = 80
AGENT = 100
FREE_NEAR = 255
FREE_FAR = 128

_HIT_VALUES = np.array([UNKNOWN, WALL, PROP, AGENT], dtype=np.uint8)


class EgoObservation(BaseModel):
    """
    Raster (lado, lado) uint8 visto de cima e alinhado ao robo

    Linha 0 e o ponto mais distante a frente; colunas crescem para a
    direita do robo.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    pixels: np.ndarray
    range_m: float = Field(description="Profundidade coberta (m)")

    @property
    def side(self) -> int:
        return int(self.pixels.shape[0])

    def as_input(self, channels: int = 1) -> np.ndarray:
        """(C, lado, lado) para a rede"""
        return np.repeat(self.pixels[None], channels, axis=0)


def cast_rays(world: World, robot: RobotState, cam: CameraConfig, rays: int):
    """(distancias, tipos) do primeiro impacto de cada raio; tipo 0 = nada"""
    pose = robot.pose
    grid = world.grid(pose.frame)
    step = min(grid.resolution, cam.range_m / cam.side) / 2.0
    s = np.arange(1, int(math.ceil(cam.range_m / step)) + 1) * step
    half = math.radians(cam.fov_deg) / 2.0
    angles = pose.heading + np.linspace(half, -half, rays)
    px = pose.x + np.cos(angles)[:, None] * s[None, :]
    py = pose.y + np.sin(angles)[:, None] * s[None, :]

    kind = np.zeros(px.shape, dtype=np.int8)
    for ax, ay, radius in world.agent_discs(pose.frame):
        kind[np.hypot(px - ax, py - ay) <= radius] = 3
    for prop in world.props_in(pose.frame):
        h = prop.size / 2.0
        hit = (np.abs(px - prop.x) <= h) & (np.abs(py - prop.y) <= h)
        if prop.low:
            # cone cego: objetos baixos somem perto da camera
            hit &= s[None, :] >= cam.blind_range_m
        kind[hit & (kind == 0)] = 2
    cx = np.rint(px / grid.resolution).astype(np.int64)
    cy = np.rint(py / grid.resolution).astype(np.int64)
    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    wall = np.ones(px.shape, dtype=bool)
    wall[inside] = grid.cells[cy[inside], cx[inside]]
    kind[wall] = 1

    any_hit = kind > 0
    first = np.where(any_hit.any(axis=1), any_hit.argmax(axis=1), -1)
    dist = np.where(first >= 0, s[np.maximum(first, 0)], np.inf)
    kinds = np.where(first >= 0, kind[np.arange(rays), np.maximum(first, 0)], 0)
    return dist, kinds


def render_observation(
    world: World, robot: RobotState, camera_cfg: Optional[CameraConfig] = None
) -> EgoObservation:
    """Raster deterministico do que a camera ve no tick atual"""
    cam = camera_cfg or config.sim.camera
    side = cam.side
    rays = 2 * side
    dist, kinds = cast_rays(world, robot, cam, rays)
    mpp = cam.range_m / side

    rows, cols = np.mgrid[0:side, 0:side]
    forward = (side - rows - 0.5) * mpp
    right = (cols + 0.5 - side / 2.0) * mpp
    d = np.hypot(forward, right)
    phi = np.arctan2(-right, forward)
    half = math.radians(cam.fov_deg) / 2.0
    visible = (np.abs(phi) <= half) & (d <= cam.range_m)
    ray = np.clip(np.rint((half - phi) / (2 * half) * (rays - 1)).astype(np.int64), 0, rays - 1)
    hit_d = dist[ray]
    hit_k = kinds[ray]

    pixels = np.full((side, side), UNKNOWN, dtype=np.uint8)
    free = visible & (d < hit_d)
    falloff = FREE_NEAR - (FREE_NEAR - FREE_FAR) * np.minimum(d / cam.range_m, 1.0)
    pixels[free] = np.rint(falloff[free]).astype(np.uint8)
    surface = visible & ~free & (hit_k > 0) & (d <= hit_d + 2 * mpp)
    pixels[surface] = _HIT_VALUES[hit_k[surface]]
    return EgoObservation(pixels=pixels, range_m=cam.range_m)
