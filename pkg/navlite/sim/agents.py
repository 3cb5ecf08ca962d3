"""
Pedestre adversario: bloqueia o robo repetidamente a 1-1.2 m a frente
"""

import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from ..core.log import get_logger
from ..mapsys.types import Pose2D
from .world import Event, EventKind, static_clearance, wrap_angle

logger = get_logger(__name__)


class AdversarySpec(BaseModel):
    """Parametros do pedestre adversario"""
    blocks: int = Field(default=15, ge=1, description="Bloqueios (passos da tarefa)")
    distance: tuple[float, float] = Field(default=(1.0, 1.2), description="Distancia a frente (m)")
    radius: float = Field(default=0.25, gt=0, description="Raio do pedestre (m)")
    gap_ticks: int = Field(default=10, ge=1, description="Espera entre bloqueios")
    start_tick: int = Field(default=10, ge=0, description="Primeiro bloqueio")
    turn_deg: float = Field(default=40.0, description="Desvio de rumo que resolve o bloqueio")
    release_m: float = Field(default=2.5, description="Distancia que resolve o bloqueio")


class AdversaryAgent:
    """
    Maquina de estados do pedestre

    waiting -> blocking -> waiting ... -> done. Cada bloqueio termina em
    sucesso quando o robo corrige o rumo e em falha quando ha colisao.
    """

    def __init__(self, spec: AdversarySpec, frame: str, rng: np.random.Generator):
        self.spec = spec
        self.frame = frame
        self.rng = rng
        self.position: Optional[tuple[float, float]] = None
        self.wait = spec.start_tick
        self.outcomes: list[bool] = []

    @property
    def done(self) -> bool:
        return len(self.outcomes) >= self.spec.blocks

    def disc(self) -> Optional[tuple[float, float, float]]:
        if self.position is None:
            return None
        return (self.position[0], self.position[1], self.spec.radius)

    def _resolve(self, success: bool) -> Event:
        self.outcomes.append(success)
        self.position = None
        self.wait = self.spec.gap_ticks
        return Event(kind=EventKind.BLOCK, detail="ok" if success else "fail")

    def _place(self, world, pose: Pose2D) -> None:
        lo, hi = self.spec.distance
        d = float(self.rng.uniform(lo, hi))
        target = (pose.x + d * math.cos(pose.heading), pose.y + d * math.sin(pose.heading))
        free = static_clearance(world.grid(pose.frame), np.array([target]))[0]
        if pose.frame == self.frame and free >= self.spec.radius + 0.05:
            self.position = target

    def step(self, world, pose: Pose2D, collided: bool) -> list[Event]:
        """Avanca um tick depois do movimento do robo"""
        if self.done:
            return []
        if self.position is not None:
            if collided:
                return [self._resolve(False)]
            ax, ay = self.position
            bearing = wrap_angle(math.atan2(ay - pose.y, ax - pose.x) - pose.heading)
            far = math.hypot(ax - pose.x, ay - pose.y) > self.spec.release_m
            if abs(bearing) > math.radians(self.spec.turn_deg) or far:
                return [self._resolve(True)]
            return []
        self.wait -= 1
        if self.wait <= 0:
            self._place(world, pose)
            if self.position is None:
                logger.debug("Sem espaco livre a frente; bloqueio adiado")
        return []
