"""
Especialista roteirizado: perseguicao pura + amostragem de velocidades (DWA)

Enxerga o mundo verdadeiro (objetos e agentes). Replaneja localmente em volta
de obstaculos e filtra comandos que colidiriam no horizonte.
"""

import math
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from ..core.errors import GoalOccupied, NoFeasibleControl, NoPath, StartOccupied
from ..mapsys.types import FloorplanGrid, Point, Pose2D
from ..planner.grid import GridPath, inflate, nearest_free, plan_grid
from .world import RobotState, World, integrate_unicycle, wrap_angle


class ExpertConfig(BaseModel):
    """Parametros do especialista"""
    lookahead_m: float = Field(default=0.8, description="Distancia de perseguicao")
    local_goal_m: float = Field(default=4.0, description="Alcance do replanejamento local")
    plan_clearance_m: float = Field(default=0.3, description="Folga do caminho local")
    horizon_s: float = Field(default=0.8, description="Horizonte de simulacao dos comandos")
    v_samples: int = Field(default=5, description="Amostras de velocidade")
    w_samples: int = Field(default=11, description="Amostras de giro")
    margin_m: float = Field(default=0.02, description="Margem acima da distancia segura")
    rotate_deg: float = Field(default=60.0, description="Erro de rumo que manda girar parado")
    slow_radius_m: float = Field(default=1.0, description="Desacelera perto do fim")


def ground_truth_cells(world: World, frame: str) -> np.ndarray:
    """Ocupacao estatica com objetos e agentes rasterizados"""
    grid = world.grid(frame)
    cells = np.array(grid.cells, dtype=bool)
    res = grid.resolution
    ys, xs = np.mgrid[0:grid.height, 0:grid.width]
    mx, my = xs * res, ys * res
    for prop in world.props_in(frame):
        h = prop.size / 2.0 + res / 2.0
        cells |= (np.abs(mx - prop.x) <= h) & (np.abs(my - prop.y) <= h)
    for ax, ay, radius in world.agent_discs(frame):
        cells |= np.hypot(mx - ax, my - ay) <= radius + res / 2.0
    return cells


def _nearest_index(points: np.ndarray, xy: Point) -> int:
    return int(np.argmin(np.hypot(points[:, 0] - xy[0], points[:, 1] - xy[1])))


def path_length(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return float(np.hypot(*np.diff(points, axis=0).T).sum())


def remaining_length(points: np.ndarray, xy: Point) -> float:
    """Arco restante a partir do ponto mais proximo, mais o trecho ate ele"""
    i0 = _nearest_index(points, xy)
    return path_length(points[i0:]) + float(np.hypot(points[i0][0] - xy[0], points[i0][1] - xy[1]))


def _arc_index(points: np.ndarray, start: int, length: float) -> int:
    """Primeiro indice a pelo menos `length` metros de arco apos `start`"""
    travelled = 0.0
    for i in range(start + 1, len(points)):
        travelled += float(np.hypot(*(points[i] - points[i - 1])))
        if travelled >= length:
            return i
    return len(points) - 1


def _local_path(world: World, pose: Pose2D, route: np.ndarray, cfg: ExpertConfig) -> np.ndarray:
    grid = world.grid(pose.frame)
    raw = ground_truth_cells(world, pose.frame)
    radius = int(math.ceil(cfg.plan_clearance_m / grid.resolution - 1e-9))
    blocked = inflate(raw, radius)
    scratch = FloorplanGrid(id=grid.id, resolution=grid.resolution, cells=raw)
    i0 = _nearest_index(route, pose.xy)
    ig = _arc_index(route, i0, cfg.local_goal_m)
    order = list(range(ig, len(route))) + list(range(ig - 1, i0, -1))
    goals = []
    for i in order:
        cell = grid.metric_to_cell(tuple(route[i]))
        if scratch.in_bounds(cell) and not blocked[cell[1], cell[0]]:
            goals.append(cell)
            break
    if not goals:
        cell = grid.metric_to_cell(tuple(route[-1]))
        if scratch.is_free(cell):
            goals.append(cell)
    start = grid.metric_to_cell(pose.xy)
    starts = [start] if scratch.is_free(start) else []
    try:
        starts.append(nearest_free(blocked, start))
    except NoPath:
        pass
    for s in starts:
        for g in goals:
            try:
                path = plan_grid(scratch, s, g, radius)
            except (NoPath, StartOccupied, GoalOccupied):
                continue
            return np.asarray(path.polyline, dtype=np.float64)
    raise NoFeasibleControl(f"Caminho bloqueado a partir de ({pose.x:.2f}, {pose.y:.2f})")


def pursuit_command(pose: Pose2D, path: np.ndarray, lookahead: float, rotate_deg: float,
                    v_max: float, theta_max: float, remaining: float, slow_radius: float):
    """Comando normalizado da perseguicao pura sobre um caminho metrico"""
    d = np.hypot(path[:, 0] - pose.x, path[:, 1] - pose.y)
    i0 = int(np.argmin(d))
    ahead = np.nonzero(d[i0:] >= lookahead)[0]
    target = path[i0 + ahead[0]] if ahead.size else path[-1]
    dx, dy = target[0] - pose.x, target[1] - pose.y
    if math.hypot(dx, dy) < 1e-9:
        return 0.0, 0.0
    alpha = wrap_angle(math.atan2(dy, dx) - pose.heading)
    if abs(alpha) > math.radians(rotate_deg):
        return 0.0, math.copysign(1.0, alpha)
    v = max(math.cos(alpha), 0.0) * min(1.0, max(remaining / slow_radius, 0.2))
    omega = 2.0 * v * v_max * math.sin(alpha) / max(lookahead, 1e-6)
    return v, float(np.clip(omega / theta_max, -1.0, 1.0))


def _rollout(pose: Pose2D, v: float, w: float, world: World, steps: int) -> list[Point]:
    trans = v * world.sim.v_max * world.dt
    rot = w * world.sim.theta_max * world.dt
    points = []
    for _ in range(steps):
        pose = integrate_unicycle(pose, trans, rot)
        points.append(pose.xy)
    return points


def choose_control(world: World, robot: RobotState, desired: tuple[float, float],
                   cfg: ExpertConfig) -> tuple[float, float]:
    """Comando viavel mais proximo do desejado; parado e sempre viavel"""
    steps = max(1, int(round(cfg.horizon_s / world.dt)))
    threshold = world.sim.safe_distance + cfg.margin_m
    candidates = [desired] + [
        (float(v), float(w))
        for v in np.linspace(0.0, 1.0, cfg.v_samples)
        for w in np.linspace(-1.0, 1.0, cfg.w_samples)
    ]
    here = float(world.clearance(robot.pose.frame, [robot.pose.xy])[0])
    rollouts = np.array([_rollout(robot.pose, v, w, world, steps) for v, w in candidates])
    lows = world.clearance(robot.pose.frame, rollouts.reshape(-1, 2)).reshape(len(candidates), -1)
    lows = lows.min(axis=1)
    best, best_cost = (0.0, desired[1]), math.inf
    for (v, w), low in zip(candidates, lows):
        if v > 0 and low < threshold:
            continue
        low = float(low) if v > 0 else here
        cost = (v - desired[0]) ** 2 + (w - desired[1]) ** 2 + 0.1 * max(0.0, 0.5 - low)
        if cost < best_cost:
            best, best_cost = (v, w), cost
    return best


def scripted_expert(
    world: World,
    route: Union[GridPath, Sequence[Point]],
    robot: RobotState,
    cfg: Optional[ExpertConfig] = None,
) -> tuple[float, float]:
    """(v, theta) em [-1, 1]^2 seguindo a rota em volta dos obstaculos reais"""
    cfg = cfg or ExpertConfig()
    points = route.polyline if isinstance(route, GridPath) else list(route)
    route_arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(route_arr) == 0:
        return 0.0, 0.0
    local = _local_path(world, robot.pose, route_arr, cfg)
    remaining = remaining_length(route_arr, robot.pose.xy)
    desired = pursuit_command(robot.pose, local, cfg.lookahead_m, cfg.rotate_deg,
                              world.sim.v_max, world.sim.theta_max, remaining, cfg.slow_radius_m)
    return choose_control(world, robot, desired, cfg)
