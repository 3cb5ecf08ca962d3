"""
Movimentos locais discretizados (DLM)
"""

import math
from enum import Enum

from ..core.errors import UnknownTransition
from ..mapsys.types import EdgeKind, ExitType, Point


class DLM(str, Enum):
    """Intencao discreta passada ao controlador"""
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    GO_FORWARD = "GoForward"
    STOP = "Stop"
    UPSTAIRS = "Upstairs"
    LINKWAY = "Linkway"
    TAKE_ELEVATOR = "TakeElevator"


CORE_DLM = (DLM.TURN_LEFT, DLM.TURN_RIGHT, DLM.GO_FORWARD, DLM.STOP)
DLM_CODES = {m: i for i, m in enumerate(DLM)}
CODE_DLM = {i: m for m, i in DLM_CODES.items()}


def dlm_from_curvature(sample, threshold: float, at_goal: bool = False) -> DLM:
    """Stop no objetivo; curva se |k| passa do limiar (positivo = esquerda)"""
    if at_goal:
        return DLM.STOP
    if abs(sample.kappa) < threshold:
        return DLM.GO_FORWARD
    return DLM.TURN_LEFT if sample.kappa > 0 else DLM.TURN_RIGHT


def turn_angle(prev: Point, vertex: Point, nxt: Point) -> float:
    """Angulo com sinal entre segmentos consecutivos (rad, positivo = esquerda)"""
    ax, ay = vertex[0] - prev[0], vertex[1] - prev[1]
    bx, by = nxt[0] - vertex[0], nxt[1] - vertex[1]
    return math.atan2(ax * by - ay * bx, ax * bx + ay * by)


def dlm_from_turn_angle(prev: Point, vertex: Point, nxt: Point, threshold_deg: float) -> DLM:
    """Rotulo por angulo subtendido, usado em polilinhas de ruas"""
    angle = math.degrees(turn_angle(prev, vertex, nxt))
    if abs(angle) < threshold_deg:
        return DLM.GO_FORWARD
    return DLM.TURN_LEFT if angle > 0 else DLM.TURN_RIGHT


def transition_intention(edge_kind: EdgeKind, exit_type: ExitType) -> DLM:
    """Intencao emitida numa transicao entre mapas"""
    kind = EdgeKind(edge_kind)
    exit_type = ExitType(exit_type)
    if kind == EdgeKind.INTRA:
        raise UnknownTransition("Aresta intra nao e transicao")
    if exit_type == ExitType.STAIRS:
        return DLM.UPSTAIRS
    if exit_type == ExitType.LINKWAY:
        return DLM.LINKWAY
    if exit_type == ExitType.ELEVATOR:
        return DLM.TAKE_ELEVATOR
    if kind == EdgeKind.LAYER and exit_type == ExitType.OUTDOOR:
        return DLM.GO_FORWARD
    raise UnknownTransition(f"Sem intencao para {kind.value}/{exit_type.value}")
