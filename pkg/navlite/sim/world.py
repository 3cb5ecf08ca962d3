"""
Mundo 2D deterministico: robo uniciclo, objetos estaticos e agentes
"""

import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.config import SimConfig, config
from ..core.errors import UnknownId
from ..mapsys.types import FloorplanGrid, MapBundle, Point, Pose2D

# alcance maximo das consultas de folga (m)
CLEARANCE_CAP = 1.0


def wrap_angle(angle: float) -> float:
    """Angulo em (-pi, pi]"""
    return math.pi - (math.pi - angle) % (2.0 * math.pi)


class Prop(BaseModel):
    """Objeto estatico quadrado, ex.: um cesto de 20 cm"""
    model_config = ConfigDict(frozen=True)

    frame: str
    x: float
    y: float
    size: float = Field(default=0.2, gt=0, description="Lado do quadrado (m)")
    low: bool = Field(default=True, description="Baixo: some no cone cego da camera")

    @property
    def xy(self) -> Point:
        return (self.x, self.y)


class EventKind(str, Enum):
    """Eventos registrados no log de trajetoria"""
    COLLISION = "collision"
    INTERVENTION = "intervention"
    TRANSITION = "transition"
    ANCHOR = "anchor"
    STEP = "step"
    BLOCK = "block"
    NO_PATH = "no_path"
    NO_FEASIBLE_CONTROL = "no_feasible_control"


class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: EventKind
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.detail}" if self.detail else self.kind.value


class RobotState(BaseModel):
    """Pose verdadeira, comando aplicado e deslocamento do ultimo passo"""
    model_config = ConfigDict(frozen=True)

    pose: Pose2D
    v: float = Field(default=0.0, description="Velocidade comandada (m/s)")
    omega: float = Field(default=0.0, description="Taxa de giro comandada (rad/s)")
    trans: float = Field(default=0.0, description="Translacao do ultimo passo (m)")
    rot: float = Field(default=0.0, description="Rotacao do ultimo passo (rad)")


def _square_distance(px, py, cx, cy, half):
    dx = np.maximum(np.abs(px - cx) - half, 0.0)
    dy = np.maximum(np.abs(py - cy) - half, 0.0)
    return np.hypot(dx, dy)


def static_clearance(grid: FloorplanGrid, points: np.ndarray, cap: float = CLEARANCE_CAP) -> np.ndarray:
    """Distancia exata de cada ponto a celula ocupada mais proxima (fora da grade = ocupado)"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    res = grid.resolution
    r = int(math.ceil(cap / res)) + 1
    offsets = np.arange(-r, r + 1)
    ox, oy = np.meshgrid(offsets, offsets)
    cx = np.rint(points[:, 0] / res).astype(np.int64)[:, None] + ox.ravel()[None, :]
    cy = np.rint(points[:, 1] / res).astype(np.int64)[:, None] + oy.ravel()[None, :]
    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    occupied = np.ones(cx.shape, dtype=bool)
    occupied[inside] = grid.cells[cy[inside], cx[inside]]
    d = _square_distance(points[:, 0:1], points[:, 1:2], cx * res, cy * res, res / 2.0)
    d = np.where(occupied, d, np.inf).min(axis=1)
    return np.minimum(d, cap)


class World:
    """
    Estado do mundo de um episodio

    Ocupacao estatica vem das plantas do bundle; objetos e agentes sao
    dinamicos. step_world avanca o mundo no lugar.
    """

    def __init__(
        self,
        bundle: MapBundle,
        props: Sequence[Prop] = (),
        agents: Sequence = (),
        seed: int = 0,
        sim: Optional[SimConfig] = None,
    ):
        self.bundle = bundle
        self.props = list(props)
        self.agents = list(agents)
        self.sim = sim or config.sim
        self.dt = self.sim.dt
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.tick = 0

    def grid(self, frame: str) -> FloorplanGrid:
        grid = self.bundle.floorplans.get(frame)
        if grid is None:
            raise UnknownId(f"Planta desconhecida: '{frame}'")
        return grid

    def props_in(self, frame: str) -> list[Prop]:
        return [p for p in self.props if p.frame == frame]

    def agent_discs(self, frame: str) -> list[tuple[float, float, float]]:
        """(x, y, raio) dos agentes visiveis na planta"""
        discs = []
        for agent in self.agents:
            disc = agent.disc()
            if disc is not None and agent.frame == frame:
                discs.append(disc)
        return discs

    def clearance(self, frame: str, points, agents: bool = True,
                  cap: float = CLEARANCE_CAP) -> np.ndarray:
        """Folga ate paredes, objetos e (opcionalmente) agentes"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        d = static_clearance(self.grid(frame), points, cap)
        for prop in self.props_in(frame):
            d = np.minimum(d, _square_distance(points[:, 0], points[:, 1], prop.x, prop.y,
                                               prop.size / 2.0))
        if agents:
            for ax, ay, radius in self.agent_discs(frame):
                gap = np.hypot(points[:, 0] - ax, points[:, 1] - ay) - radius
                d = np.minimum(d, np.maximum(gap, 0.0))
        return d

    def agent_clearance(self, pose: Pose2D) -> float:
        best = math.inf
        for ax, ay, radius in self.agent_discs(pose.frame):
            best = min(best, max(math.hypot(pose.x - ax, pose.y - ay) - radius, 0.0))
        return best


def integrate_unicycle(pose: Pose2D, trans: float, rot: float) -> Pose2D:
    """Integracao com a orientacao do ponto medio"""
    mid = pose.heading + rot / 2
    return Pose2D(
        frame=pose.frame,
        x=pose.x + trans * math.cos(mid),
        y=pose.y + trans * math.sin(mid),
        heading=wrap_angle(pose.heading + rot),
    )


def scale_control(control: tuple[float, float], sim: SimConfig) -> tuple[float, float]:
    """Comando normalizado em [-1, 1]^2 -> (m/s, rad/s)"""
    v_cmd = float(np.clip(control[0], -1.0, 1.0))
    w_cmd = float(np.clip(control[1], -1.0, 1.0))
    return v_cmd * sim.v_max, w_cmd * sim.theta_max


def step_world(
    world: World, robot: RobotState, control: tuple[float, float], dt: Optional[float] = None
) -> tuple[World, RobotState, list[Event]]:
    """Um passo: integra o robo, detecta colisao e avanca os agentes"""
    dt = world.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt deve ser positivo")
    v, omega = scale_control(control, world.sim)
    trans, rot = v * dt, omega * dt
    candidate = integrate_unicycle(robot.pose, trans, rot)
    events: list[Event] = []
    clearance = float(world.clearance(candidate.frame, [candidate.xy])[0])
    if clearance <= 0.0:
        # nunca entra em celula ocupada: so gira
        candidate = robot.pose.model_copy(update={"heading": candidate.heading})
        trans = 0.0
        events.append(Event(kind=EventKind.COLLISION, detail="blocked"))
    elif clearance < world.sim.safe_distance:
        hit_agent = world.agent_clearance(candidate) < world.sim.safe_distance
        events.append(Event(kind=EventKind.COLLISION, detail="agent" if hit_agent else "static"))
    moved = RobotState(pose=candidate, v=v, omega=omega, trans=trans, rot=rot)
    agent_hit = world.agent_clearance(candidate) < world.sim.safe_distance
    for agent in world.agents:
        events.extend(agent.step(world, moved.pose, agent_hit))
    world.tick += 1
    return world, moved, events
