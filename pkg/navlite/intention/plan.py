"""
Gerador de intencoes: pontos de controle RDP com raio de influencia
"""

import json
import math
from typing import Callable, Optional, Sequence

from pydantic import BaseModel, Field

from ..core.config import config
from ..core.errors import UnknownTransition
from ..core.log import get_logger
from ..mapsys.types import ROAD_FRAME, Point, Pose2D, distance
from ..planner.grid import GridPath
from ..planner.route import RoadPath, RoutePlan, Transition
from .dlm import DLM, dlm_from_curvature, dlm_from_turn_angle, transition_intention
from .geometry import rdp_indices, signed_curvature

logger = get_logger(__name__)


class ControlPoint(BaseModel):
    """Ponto de controle com intencao e disco de influencia"""
    frame: str
    x: float
    y: float
    dlm: DLM
    radius: float = Field(ge=0, description="Raio de influencia (m)")

    @property
    def xy(self) -> Point:
        return (self.x, self.y)

    def contains(self, pose: Pose2D) -> bool:
        return pose.frame == self.frame and distance(pose.xy, self.xy) <= self.radius


class IntentionPlan(BaseModel):
    """Pontos de controle ordenados; o ultimo carrega Stop"""
    points: list[ControlPoint] = Field(default_factory=list)
    midpoints: list[Point] = Field(default_factory=list)

    @property
    def dlms(self) -> list[DLM]:
        return [p.dlm for p in self.points]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2)


Labeler = Callable[[Sequence[Point], int], DLM]


def _curvature_labeler(threshold: float, window: int) -> Labeler:
    def label(polyline: Sequence[Point], index: int) -> DLM:
        return dlm_from_curvature(signed_curvature(polyline, index, window), threshold)
    return label


def _radii(vertices: list[Point], min_radius: float) -> tuple[list[float], list[Point]]:
    midpoints = [
        ((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0) for p, q in zip(vertices, vertices[1:])
    ]
    radii = []
    for i, v in enumerate(vertices):
        near = [midpoints[j] for j in (i - 1, i) if 0 <= j < len(midpoints)]
        cap = min((distance(v, m) for m in near), default=math.inf)
        radii.append(min(min_radius, cap))
    return radii, midpoints


def plan_from_polyline(
    polyline: Sequence[Point],
    frame: str,
    rdp_epsilon: float,
    labeler: Labeler,
    min_radius: Optional[float] = None,
) -> IntentionPlan:
    """Plano de intencoes sobre uma polilinha metrica qualquer"""
    min_radius = config.intention.min_influence_radius if min_radius is None else min_radius
    if len(polyline) < 2:
        x, y = polyline[0]
        return IntentionPlan(points=[
            ControlPoint(frame=frame, x=x, y=y, dlm=DLM.STOP, radius=min_radius)
        ])
    keep = rdp_indices(polyline, rdp_epsilon)
    vertices = [tuple(polyline[k]) for k in keep]
    radii, midpoints = _radii(vertices, min_radius)
    points = []
    for n, k in enumerate(keep):
        if n == 0:
            dlm = DLM.GO_FORWARD
        elif n == len(keep) - 1:
            dlm = DLM.STOP
        else:
            dlm = labeler(polyline, k)
        x, y = polyline[k]
        points.append(ControlPoint(frame=frame, x=x, y=y, dlm=dlm, radius=radii[n]))
    return IntentionPlan(points=points, midpoints=midpoints)


def build_intention_plan(
    grid_path: GridPath,
    rdp_epsilon: Optional[float] = None,
    curvature_threshold: Optional[float] = None,
    min_radius: Optional[float] = None,
    window: Optional[int] = None,
) -> IntentionPlan:
    """Vertices RDP rotulados pela curvatura no caminho denso"""
    cfg = config.intention
    if rdp_epsilon is None:
        rdp_epsilon = cfg.rdp_epsilon_cells * grid_path.resolution
    threshold = cfg.curvature_threshold if curvature_threshold is None else curvature_threshold
    labeler = _curvature_labeler(threshold, cfg.curvature_window if window is None else window)
    return plan_from_polyline(
        grid_path.polyline, grid_path.floorplan_id, rdp_epsilon, labeler, min_radius
    )


def build_road_intentions(road: RoadPath, min_radius: Optional[float] = None) -> IntentionPlan:
    """Ruas ja podadas: rotulo pelo angulo entre segmentos"""
    threshold = config.intention.turn_angle_deg

    def label(polyline: Sequence[Point], index: int) -> DLM:
        return dlm_from_turn_angle(polyline[index - 1], polyline[index], polyline[index + 1],
                                   threshold)

    return plan_from_polyline(road.polyline, ROAD_FRAME, 0.0, label, min_radius)


def build_route_intentions(
    route: RoutePlan,
    rdp_epsilon: Optional[float] = None,
    curvature_threshold: Optional[float] = None,
) -> IntentionPlan:
    """Plano multi-planta; o fim de cada trecho recebe a intencao da transicao"""
    points: list[ControlPoint] = []
    midpoints: list[Point] = []
    items = route.items
    for i, item in enumerate(items):
        if isinstance(item, Transition):
            continue
        if isinstance(item, GridPath):
            sub = build_intention_plan(item, rdp_epsilon, curvature_threshold)
        else:
            sub = build_road_intentions(item)
        nxt = items[i + 1] if i + 1 < len(items) else None
        if isinstance(nxt, Transition):
            last = sub.points[-1]
            try:
                dlm = transition_intention(nxt.kind, nxt.exit_type)
            except UnknownTransition as e:
                logger.debug(f"Transicao {nxt.from_id}->{nxt.to_id} sem intencao: {e}")
                dlm = DLM.GO_FORWARD
            sub.points[-1] = last.model_copy(update={"dlm": dlm})
        points.extend(sub.points)
        midpoints.extend(sub.midpoints)
    return IntentionPlan(points=points, midpoints=midpoints)


def _select(pose: Pose2D, plan: IntentionPlan, consumed: int) -> Optional[int]:
    best = None
    for i in range(consumed, len(plan.points)):
        point = plan.points[i]
        if not point.contains(pose):
            continue
        d = distance(pose.xy, point.xy)
        if best is None or d < best[0]:
            best = (d, i)
    return None if best is None else best[1]


def current_intention(pose_estimate: Pose2D, plan: IntentionPlan, consumed: int = 0) -> DLM:
    """DLM do ponto nao consumido mais proximo cujo disco contem a pose"""
    index = _select(pose_estimate, plan, consumed)
    return DLM.GO_FORWARD if index is None else plan.points[index].dlm


class IntentionScheduler:
    """
    Consumo monotono dos pontos de controle

    Um ponto e consumido quando a pose sai do seu disco ou quando um ponto
    posterior e selecionado.
    """

    def __init__(self, plan: IntentionPlan, consume_start: bool = False):
        self.plan = plan
        self.cursor = 1 if consume_start and len(plan.points) > 1 else 0
        self.active: Optional[int] = None

    def update(self, pose_estimate: Pose2D) -> DLM:
        if self.active is not None and not self.plan.points[self.active].contains(pose_estimate):
            self.cursor = max(self.cursor, self.active + 1)
            self.active = None
        index = _select(pose_estimate, self.plan, self.cursor)
        if index is None:
            return DLM.GO_FORWARD
        self.cursor = index
        self.active = index
        return self.plan.points[index].dlm

    @property
    def consumed(self) -> int:
        return self.cursor
